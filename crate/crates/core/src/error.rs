use thiserror::Error;

/// Errors raised anywhere in the profile pipeline.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Invalid parameters or an argument outside the domain of a formula.
    #[error("domain error: {0}")]
    Domain(String),

    /// A derived constant that does not exist in the current regime was read.
    #[error("{field} is not defined for p = {p}")]
    Absent { field: &'static str, p: f64 },

    /// The operation only applies to some diffusion regimes.
    #[error("unsupported regime: {0}")]
    Regime(String),

    #[error("bad bracket: {0}")]
    BadBracket(String),

    #[error("ambiguous bracket: both endpoints classify as N0")]
    Ambiguous,

    #[error("inconclusive classification at a = {a}: {reason}")]
    Inconclusive { a: f64, reason: String },

    #[error("profile has {found} zeros but {needed} are required")]
    NotEnoughZeros { found: usize, needed: usize },

    #[error("no support radius: trajectory never reached u = 0")]
    NoSupportRadius,

    #[error("insufficient radial range: {0}")]
    InsufficientRange(String),

    #[error("negative base in the fast-diffusion map at r = {r} (u = {u})")]
    NegativeBase { r: f64, u: f64 },

    #[error("potential is ill-posed: {0}")]
    IllPosedPotential(String),

    #[error("mass is infinite: {0}")]
    InfiniteMass(String),

    #[error("time {t} outside the self-similar domain: {reason}")]
    OutOfTimeDomain { t: f64, reason: String },

    /// The integrator did not produce a usable trajectory.
    #[error("solver failure: {0}")]
    Solver(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    /// Process exit code of the command-line tool: 2 for invalid input,
    /// 4 for a bracket that does not straddle, 3 for solver-side failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Domain(_)
            | Error::Absent { .. }
            | Error::Regime(_)
            | Error::NegativeBase { .. }
            | Error::IllPosedPotential(_)
            | Error::InfiniteMass(_)
            | Error::OutOfTimeDomain { .. } => 2,
            Error::BadBracket(_) | Error::Ambiguous => 4,
            _ => 3,
        }
    }

    /// Short machine-parsable tag, used on stderr by the command-line tool.
    pub fn tag(&self) -> &'static str {
        match self {
            Error::Domain(_) => "domain",
            Error::Absent { .. } => "absent-field",
            Error::Regime(_) => "regime",
            Error::BadBracket(_) => "bad-bracket",
            Error::Ambiguous => "ambiguous",
            Error::Inconclusive { .. } => "inconclusive",
            Error::NotEnoughZeros { .. } => "not-enough-zeros",
            Error::NoSupportRadius => "no-support-radius",
            Error::InsufficientRange(_) => "insufficient-range",
            Error::NegativeBase { .. } => "negative-base",
            Error::IllPosedPotential(_) => "ill-posed-potential",
            Error::InfiniteMass(_) => "infinite-mass",
            Error::OutOfTimeDomain { .. } => "out-of-time-domain",
            Error::Solver(_) => "solver",
        }
    }
}
