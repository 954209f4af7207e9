//! Command-line surface: argument parsing, solver invocation and bit-stable
//! CSV/JSON export.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::backward::{
    bracket_critical, classify, critical_compact_profile, find_critical_a, solve_backward, sweep_a, BackwardOptions,
};
use crate::error::{Error, Result};
use crate::forward::{fit_decay_rate, fit_decay_rate_at, solve_forward, support_radius, ForwardOptions, TailModel};
use crate::odecore::{IntegratorOptions, ProfileSolution};
use crate::params::{derive_params, ModelParams, Regime};
use crate::reconstruct::{
    delta_test, mass, phi_from_u, psi_from_phi, system_residual, Direction, PhiProfile, SelfSimilarSolution,
    TestFunction,
};

pub const SCHEMA: u32 = 1;

#[derive(Parser, Debug, Clone)]
#[command(name = "pks-selfsim", version, about = "Self-similar profiles of the critical p-Laplacian Keller-Segel system")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug, Clone)]
pub enum Command {
    /// Integrate the backward (blow-up) profile from u(0) = a.
    SolveBackward {
        #[command(flatten)]
        common: Common,
        #[arg(long, allow_hyphen_values = true)]
        a: f64,
    },
    /// Integrate the forward (spreading) profile.
    SolveForward {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        height: Height,
        /// Estimate the tail decay constant (p <= 2).
        #[arg(long)]
        fit_decay: bool,
        /// Radius for the decay estimate (default: end of the profile).
        #[arg(long)]
        fit_radius: Option<f64>,
    },
    /// Bisect for the critical height a_c (p > 2).
    FindCritical {
        #[command(flatten)]
        common: Common,
        /// Starting bracket `lo,hi` (default: search from u*).
        #[arg(long, value_delimiter = ',')]
        bracket: Option<Vec<f64>>,
    },
    /// Classify a grid of initial heights into P, N and N0.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// `log:lo:hi:n` or `lin:lo:hi:n`.
        #[arg(long)]
        a_grid: String,
    },
    /// Reconstruct the density and potential profiles.
    Reconstruct {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        height: Height,
        #[arg(long, value_enum, default_value_t = Dir::Backward)]
        direction: Dir,
    },
    /// Dirac-delta concentration test with a Gaussian test function.
    DeltaTest {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        height: Height,
        #[arg(long, value_enum, default_value_t = Dir::Backward)]
        direction: Dir,
        /// Blow-up time of the backward solution.
        #[arg(long, default_value_t = 1.0)]
        t_blowup: f64,
        /// Distance to the singular time of the first sample.
        #[arg(long, default_value_t = 1e-2)]
        s0: f64,
        #[arg(long, default_value_t = 0.25)]
        ratio: f64,
        /// Number of geometric steps (samples = steps + 1).
        #[arg(long, default_value_t = 6)]
        steps: usize,
    },
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Space dimension.
    #[arg(long = "N")]
    pub n: usize,
    #[arg(long)]
    pub p: f64,
    #[arg(long, default_value_t = 1.0)]
    pub chi: f64,
    #[arg(long)]
    pub r_max: Option<f64>,
    #[arg(long)]
    pub rel_tol: Option<f64>,
    #[arg(long)]
    pub abs_tol: Option<f64>,
    #[arg(long)]
    pub event_tol: Option<f64>,
    #[arg(long)]
    pub max_step: Option<f64>,
    /// Output file (stdout when absent).
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Also write a gnuplot script plotting the CSV output.
    #[arg(long)]
    pub gnuplot: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct Height {
    /// Initial height u(0) = a.
    #[arg(long, allow_hyphen_values = true)]
    pub a: Option<f64>,
    /// Initial value u(0) = b (p = 2).
    #[arg(long, allow_hyphen_values = true)]
    pub b: Option<f64>,
}

impl Height {
    fn value(&self) -> Option<f64> {
        self.a.or(self.b)
    }
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dir {
    Backward,
    Forward,
}

/// Echo of the effective configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: String,
    pub n: usize,
    pub p: f64,
    pub chi: f64,
    pub a_or_b: Option<f64>,
    pub bracket: Option<(f64, f64)>,
    pub grid: Option<String>,
    pub direction: Option<Dir>,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub event_tol: f64,
    pub r_max: f64,
    pub max_step: Option<f64>,
    pub format: Format,
}

/// Derived constants of the parameter point; absent ones are `None`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Derived {
    pub regime: String,
    pub m: f64,
    pub q: Option<f64>,
    pub b: Option<f64>,
    pub lambda: Option<f64>,
    pub u_star: Option<f64>,
    pub u_star_log: Option<f64>,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub omega: f64,
    pub compact_support_admissible: bool,
}

impl Derived {
    pub fn of(params: &ModelParams) -> Self {
        Derived {
            regime: format!("{:?}", params.regime()),
            m: params.m(),
            q: params.q().ok(),
            b: params.b().ok(),
            lambda: params.lambda().ok(),
            u_star: params.u_star().ok(),
            u_star_log: params.u_star_log().ok(),
            alpha: params.alpha(),
            beta: params.beta(),
            gamma: params.gamma(),
            omega: params.omega(),
            compact_support_admissible: params.compact_support_admissible(),
        }
    }
}

/// Table cell; non-finite numbers are stored as `Null`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Cell {
    Num(f64),
    Text(String),
    Null,
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        if x.is_finite() {
            Cell::Num(x)
        } else {
            Cell::Null
        }
    }
}

impl From<Option<f64>> for Cell {
    fn from(x: Option<f64>) -> Self {
        x.map_or(Cell::Null, Cell::from)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}

impl From<usize> for Cell {
    fn from(k: usize) -> Self {
        Cell::Num(k as f64)
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    fn new(cols: &[&str]) -> Self {
        Table { columns: cols.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    /// CSV with a header line and 17 significant digits per number.
    pub fn to_csv(&self) -> String {
        let mut out = self.columns.join(",");
        out.push('\n');
        for row in &self.rows {
            for (i, c) in row.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                match c {
                    Cell::Num(x) => {
                        let _ = write!(out, "{x:.16e}");
                    }
                    Cell::Text(s) => out.push_str(s),
                    Cell::Null => out.push_str("nan"),
                }
            }
            out.push('\n');
        }
        out
    }
}

/// Full report of one command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema: u32,
    pub config: RunConfig,
    pub derived: Derived,
    pub results: serde_json::Value,
    /// Tolerance attainment flags.
    pub checks: BTreeMap<String, bool>,
    pub table: Table,
}

impl RunReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(s: &str) -> std::result::Result<Self, serde_json::Error> {
        serde_json::from_str(s)
    }
}

fn params_of(c: &Common) -> Result<ModelParams> {
    derive_params(c.n, c.p, c.chi)
}

fn integrator_of(c: &Common, base: IntegratorOptions) -> Result<IntegratorOptions> {
    let mut o = base;
    let pos = |name: &str, v: f64| -> Result<f64> {
        if v > 0.0 && v.is_finite() {
            Ok(v)
        } else {
            Err(Error::Domain(format!("--{name} must be positive and finite, got {v}")))
        }
    };
    if let Some(v) = c.rel_tol {
        o.rel_tol = pos("rel-tol", v)?;
    }
    if let Some(v) = c.abs_tol {
        o.abs_tol = pos("abs-tol", v)?;
    }
    if let Some(v) = c.event_tol {
        o.event_tol = pos("event-tol", v)?;
    }
    if let Some(v) = c.r_max {
        o.r_max = pos("r-max", v)?;
    }
    if let Some(v) = c.max_step {
        o.max_step = pos("max-step", v)?;
    }
    Ok(o)
}

fn config_of(name: &str, c: &Common, iopts: &IntegratorOptions) -> RunConfig {
    RunConfig {
        command: name.to_string(),
        n: c.n,
        p: c.p,
        chi: c.chi,
        a_or_b: None,
        bracket: None,
        grid: None,
        direction: None,
        rel_tol: iopts.rel_tol,
        abs_tol: iopts.abs_tol,
        event_tol: iopts.event_tol,
        r_max: iopts.r_max,
        max_step: iopts.max_step.is_finite().then_some(iopts.max_step),
        format: c.format,
    }
}

fn opt(x: Option<f64>) -> serde_json::Value {
    match x {
        Some(v) if v.is_finite() => json!(v),
        _ => serde_json::Value::Null,
    }
}

fn profile_table(sol: &ProfileSolution, params: &ModelParams) -> Result<Table> {
    let mut t = Table::new(&["r", "u", "w", "E", "phi"]);
    let e = params.phi_exponent().ok();
    for i in 0..sol.len() {
        let u = sol.u[i];
        let phi = match (params.regime(), e) {
            (Regime::LinearDiffusion, _) => u.exp(),
            (Regime::SlowDiffusion, Some(e)) => {
                if u > 0.0 {
                    u.powf(e)
                } else {
                    0.0
                }
            }
            (_, Some(e)) if u > 0.0 => u.powf(e),
            _ => f64::NAN,
        };
        t.push(vec![sol.r[i].into(), u.into(), sol.w[i].into(), sol.energy[i].into(), phi.into()]);
    }
    Ok(t)
}

fn events_json(sol: &ProfileSolution) -> serde_json::Value {
    serde_json::Value::Array(
        sol.events
            .iter()
            .map(|e| json!({"kind": format!("{:?}", e.kind), "r": opt(Some(e.r)), "u": opt(Some(e.u)), "w": opt(Some(e.w))}))
            .collect(),
    )
}

/// `solve-backward`.
pub fn cmd_solve_backward(c: &Common, a: f64) -> Result<RunReport> {
    let params = params_of(c)?;
    let iopts = integrator_of(c, IntegratorOptions::default())?;
    let mut config = config_of("solve-backward", c, &iopts);
    config.a_or_b = Some(a);
    let sol = solve_backward(&params, a, &iopts)?;
    let class = if params.regime() == Regime::SlowDiffusion {
        let bo = BackwardOptions { integrator: iopts, ..Default::default() };
        classify(&params, a, &bo).ok()
    } else {
        None
    };
    let results = json!({
        "termination": format!("{:?}", sol.termination),
        "r_last": opt(Some(sol.r_last())),
        "u_last": opt(Some(sol.u_last())),
        "points": sol.len(),
        "events": events_json(&sol),
        "classification": class.map(|cl| json!({
            "set": format!("{:?}", cl.set),
            "certificate": format!("{:?}", cl.certificate),
            "r_of_a": opt(cl.r_of_a),
            "terminal_slope": opt(cl.terminal_slope),
        })),
    });
    Ok(RunReport {
        schema: SCHEMA,
        config,
        derived: Derived::of(&params),
        results,
        checks: BTreeMap::new(),
        table: profile_table(&sol, &params)?,
    })
}

/// `solve-forward`.
pub fn cmd_solve_forward(c: &Common, h: &Height, fit_decay: bool, fit_radius: Option<f64>) -> Result<RunReport> {
    let params = params_of(c)?;
    let a = h.value().ok_or_else(|| Error::Domain("--a or --b is required".into()))?;
    let mut fo = ForwardOptions::default();
    fo.integrator = integrator_of(c, fo.integrator)?;
    let mut config = config_of("solve-forward", c, &fo.integrator);
    config.a_or_b = Some(a);
    let fp = solve_forward(&params, a, &fo)?;
    let mut checks = BTreeMap::new();
    let mut results = json!({
        "termination": format!("{:?}", fp.sol.termination),
        "tail": serde_json::to_value(fp.tail).expect("tail serializes"),
        "r_last": opt(Some(fp.sol.r_last())),
        "points": fp.sol.len(),
        "events": events_json(&fp.sol),
    });
    if fp.regime == Regime::SlowDiffusion {
        let sr = support_radius(&fp)?;
        let bound = crate::forward::support_radius_upper_bound(&params, a)?;
        checks.insert("support_radius_within_bound".into(), sr.r0 <= bound);
        results["support"] = json!({
            "r0": opt(Some(sr.r0)),
            "terminal_u_slope": opt(Some(sr.terminal_u_slope)),
            "terminal_phi_slope": opt(Some(sr.terminal_phi_slope)),
            "upper_bound": opt(Some(bound)),
        });
    }
    if fit_decay {
        let fit = match fit_radius {
            Some(r) => fit_decay_rate_at(&fp, r)?,
            None => fit_decay_rate(&fp)?,
        };
        checks.insert("decay_within_2pct".into(), fit.raw_rel_err() < 0.02);
        results["decay"] = json!({
            "r": opt(Some(fit.r)),
            "estimate": opt(Some(fit.raw)),
            "extrapolated": opt(Some(fit.extrapolated)),
            "target": opt(Some(fit.target)),
            "rel_err": opt(Some(fit.raw_rel_err())),
            "extrapolated_rel_err": opt(Some(fit.extrapolated_rel_err())),
        });
    }
    Ok(RunReport {
        schema: SCHEMA,
        config,
        derived: Derived::of(&params),
        results,
        checks,
        table: profile_table(&fp.sol, &params)?,
    })
}

/// `find-critical`.
pub fn cmd_find_critical(c: &Common, bracket: Option<(f64, f64)>) -> Result<RunReport> {
    let params = params_of(c)?;
    let iopts = integrator_of(c, IntegratorOptions::default())?;
    let mut config = config_of("find-critical", c, &iopts);
    let bo = BackwardOptions { integrator: iopts, ..Default::default() };
    let br = match bracket {
        Some(b) => b,
        None => bracket_critical(&params, &bo)?,
    };
    config.bracket = Some(br);
    let crit = find_critical_a(&params, br, &bo)?;
    let closed = (params.n() == 1).then(|| {
        let q = params.q().expect("slow regime has q");
        ((q + 1.0) / (params.m() * params.chi())).powf(1.0 / q)
    });
    let rel = closed.map(|cf| (crit.a_c - cf).abs() / cf);
    let mut checks = BTreeMap::new();
    checks.insert(
        "straddle".into(),
        !crit.lower.vanished() && crit.upper.vanished(),
    );
    if let Some(r) = rel {
        checks.insert("closed_form_within_1e-6".into(), r < 1e-6);
    }
    let results = json!({
        "a_c": opt(Some(crit.a_c)),
        "bracket": [opt(Some(crit.bracket.0)), opt(Some(crit.bracket.1))],
        "bracket_width": opt(Some(crit.bracket_width)),
        "r_c": opt(Some(crit.r_c)),
        "terminal_slope": opt(Some(crit.terminal_slope)),
        "terminal_u": opt(Some(crit.terminal_u)),
        "bisections": crit.bisections,
        "lower": {"a": opt(Some(crit.lower.a)), "set": format!("{:?}", crit.lower.set), "certificate": format!("{:?}", crit.lower.certificate)},
        "upper": {"a": opt(Some(crit.upper.a)), "set": format!("{:?}", crit.upper.set), "certificate": format!("{:?}", crit.upper.certificate)},
        "closed_form": opt(closed),
        "closed_form_rel_err": opt(rel),
    });
    let mut table = Table::new(&["a_c", "bracket_lo", "bracket_hi", "bracket_width", "r_c", "closed_form_rel_err"]);
    table.push(vec![
        crit.a_c.into(),
        crit.bracket.0.into(),
        crit.bracket.1.into(),
        crit.bracket_width.into(),
        crit.r_c.into(),
        rel.into(),
    ]);
    Ok(RunReport { schema: SCHEMA, config, derived: Derived::of(&params), results, checks, table })
}

/// Parses `log:lo:hi:n` or `lin:lo:hi:n`.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>> {
    let bad = || Error::Domain(format!("grid spec must be log:lo:hi:n or lin:lo:hi:n, got {spec:?}"));
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 4 {
        return Err(bad());
    }
    let lo: f64 = parts[1].parse().map_err(|_| bad())?;
    let hi: f64 = parts[2].parse().map_err(|_| bad())?;
    let n: usize = parts[3].parse().map_err(|_| bad())?;
    if n < 2 || !(hi > lo) || !lo.is_finite() || !hi.is_finite() {
        return Err(bad());
    }
    let t = |k: usize| k as f64 / (n - 1) as f64;
    match parts[0] {
        "log" => {
            if lo <= 0.0 {
                return Err(bad());
            }
            let (l0, l1) = (lo.ln(), hi.ln());
            Ok((0..n).map(|k| (l0 + (l1 - l0) * t(k)).exp()).collect())
        }
        "lin" => Ok((0..n).map(|k| lo + (hi - lo) * t(k)).collect()),
        _ => Err(bad()),
    }
}

/// `sweep`.
pub fn cmd_sweep(c: &Common, grid_spec: &str) -> Result<RunReport> {
    let params = params_of(c)?;
    let grid = parse_grid(grid_spec)?;
    let iopts = integrator_of(c, IntegratorOptions::default())?;
    let mut config = config_of("sweep", c, &iopts);
    config.grid = Some(grid_spec.to_string());
    let bo = BackwardOptions { integrator: iopts, ..Default::default() };
    let sw = sweep_a(&params, &grid, &bo)?;
    let mut table = Table::new(&["index", "a", "set", "certificate", "r_of_a", "r_end"]);
    for (k, e) in sw.entries.iter().enumerate() {
        table.push(vec![
            k.into(),
            e.a.into(),
            format!("{:?}", e.set).as_str().into(),
            format!("{:?}", e.certificate).as_str().into(),
            e.r_of_a.into(),
            e.r_end.into(),
        ]);
    }
    let count = |s: crate::backward::ProfileSet| sw.entries.iter().filter(|e| e.set == s).count();
    use crate::backward::ProfileSet as S;
    let results = json!({
        "a1": opt(sw.a1),
        "a2": opt(sw.a2),
        "counts": {"P": count(S::P), "N": count(S::N), "N0": count(S::N0), "Inconclusive": count(S::Inconclusive)},
    });
    let mut checks = BTreeMap::new();
    checks.insert("no_inconclusive".into(), count(S::Inconclusive) == 0);
    Ok(RunReport { schema: SCHEMA, config, derived: Derived::of(&params), results, checks, table })
}

/// Profile used by `reconstruct` and `delta-test`: for the backward slow
/// problem without an explicit height, the critical compact profile.
fn reconstruction_profile(
    params: &ModelParams,
    c: &Common,
    h: &Height,
    dir: Dir,
) -> Result<(f64, ProfileSolution)> {
    let fine = IntegratorOptions { rel_tol: 1e-12, abs_tol: 1e-12, ..Default::default() };
    match dir {
        Dir::Backward => {
            let iopts = integrator_of(c, fine)?;
            match h.value() {
                Some(a) => Ok((a, solve_backward(params, a, &iopts)?)),
                None if params.regime() == Regime::SlowDiffusion => {
                    let bo = BackwardOptions::default();
                    let br = bracket_critical(params, &bo)?;
                    let crit = find_critical_a(params, br, &bo)?;
                    let sol = critical_compact_profile(params, &crit, &iopts)?;
                    Ok((sol.u0, sol))
                }
                None => Err(Error::Domain("--a is required outside the slow regime".into())),
            }
        }
        Dir::Forward => {
            let mut fo = ForwardOptions::default();
            fo.integrator = integrator_of(c, IntegratorOptions { max_step: 0.01, ..fine })?;
            let a = h.value().ok_or_else(|| Error::Domain("--a or --b is required".into()))?;
            Ok((a, solve_forward(params, a, &fo)?.sol))
        }
    }
}

fn residual_range(phi: &PhiProfile) -> (f64, f64) {
    let r = phi.support_radius.unwrap_or_else(|| phi.r_end());
    (0.1 * r, 0.9 * r)
}

/// `reconstruct`.
pub fn cmd_reconstruct(c: &Common, h: &Height, dir: Dir) -> Result<RunReport> {
    let params = params_of(c)?;
    let (a, sol) = reconstruction_profile(&params, c, h, dir)?;
    let mut config = config_of("reconstruct", c, &integrator_of(c, IntegratorOptions::default())?);
    config.a_or_b = Some(a);
    config.direction = Some(dir);
    let phi = phi_from_u(&sol, &params)?;
    let psi = psi_from_phi(&phi, &params)?;
    let m = mass(&phi, &params)?;
    let range = residual_range(&phi);
    let res = system_residual(&phi, &psi, &params, dir == Dir::Backward, range)?;
    let mut checks = BTreeMap::new();
    checks.insert("residuals_below_1e-6".into(), res.res1 < 1e-6 && res.res2 < 1e-6 && res.identity < 1e-6);
    let results = json!({
        "mass": opt(Some(m)),
        "support_radius": opt(phi.support_radius),
        "tail": serde_json::to_value(phi.tail).expect("tail serializes"),
        "residual_range": [opt(Some(range.0)), opt(Some(range.1))],
        "res1": opt(Some(res.res1)),
        "res2": opt(Some(res.res2)),
        "identity": opt(Some(res.identity)),
        "psi_origin": opt(psi.psi.first().copied()),
    });
    let mut table = Table::new(&["r", "phi", "psi", "dpsi"]);
    for i in 0..phi.r.len() {
        table.push(vec![phi.r[i].into(), phi.phi[i].into(), psi.psi[i].into(), psi.dpsi[i].into()]);
    }
    Ok(RunReport { schema: SCHEMA, config, derived: Derived::of(&params), results, checks, table })
}

/// Time list approaching the singular time geometrically.
pub fn delta_times(dir: Direction, s0: f64, ratio: f64, steps: usize) -> Result<Vec<f64>> {
    if !(s0 > 0.0 && ratio > 0.0 && ratio < 1.0) {
        return Err(Error::Domain(format!("need s0 > 0 and 0 < ratio < 1, got {s0}, {ratio}")));
    }
    Ok((0..=steps)
        .map(|k| {
            let s = s0 * ratio.powi(k as i32);
            match dir {
                Direction::Backward { t_blowup } => t_blowup - s,
                Direction::Forward => s,
            }
        })
        .collect())
}

/// `delta-test`.
pub fn cmd_delta_test(
    c: &Common,
    h: &Height,
    dir: Dir,
    t_blowup: f64,
    s0: f64,
    ratio: f64,
    steps: usize,
) -> Result<RunReport> {
    let params = params_of(c)?;
    let (a, sol) = reconstruction_profile(&params, c, h, dir)?;
    let mut config = config_of("delta-test", c, &integrator_of(c, IntegratorOptions::default())?);
    config.a_or_b = Some(a);
    config.direction = Some(dir);
    let direction = match dir {
        Dir::Backward => Direction::Backward { t_blowup },
        Dir::Forward => Direction::Forward,
    };
    let phi = phi_from_u(&sol, &params)?;
    // ψ is not needed for the δ-test; an ill-posed potential is reported but
    // does not stop the run
    let psi = psi_from_phi(&phi, &params);
    let psi_ok = psi.is_ok();
    let psi = match psi {
        Ok(p) => p,
        Err(_) => {
            let mut trivial = phi.clone();
            trivial.phi.iter_mut().for_each(|v| *v = 0.0);
            trivial.tail = TailModel::Compact { radius: trivial.r_end() };
            psi_from_phi(&trivial, &params)?
        }
    };
    let ss = SelfSimilarSolution::new(direction, params, phi, psi)?;
    let times = delta_times(direction, s0, ratio, steps)?;
    let rep = delta_test(&ss, &TestFunction::Gaussian, &times)?;
    let masses: Vec<f64> = times.iter().map(|&t| ss.mass_at(t)).collect::<Result<_>>()?;
    let drift = masses.iter().map(|mt| (mt - rep.mass).abs() / rep.mass).fold(0.0, f64::max);
    let first = rep.samples.first().map(|s| s.deviation);
    let last = rep.samples.last().map(|s| s.deviation);
    let mut checks = BTreeMap::new();
    checks.insert("monotone".into(), rep.monotone);
    checks.insert("mass_time_independent_1e-8".into(), drift < 1e-8);
    let results = json!({
        "mass": opt(Some(rep.mass)),
        "max_mass_drift": opt(Some(drift)),
        "potential_well_posed": psi_ok,
        "decrease_factor": opt(first.zip(last).map(|(f, l)| f / l)),
    });
    let mut table = Table::new(&["t", "theta", "deviation", "mass_at_t"]);
    for (s, mt) in rep.samples.iter().zip(&masses) {
        table.push(vec![s.t.into(), s.theta.into(), s.deviation.into(), (*mt).into()]);
    }
    Ok(RunReport { schema: SCHEMA, config, derived: Derived::of(&params), results, checks, table })
}

/// Dispatches a parsed command line.
pub fn run(cli: &Cli) -> Result<(RunReport, Common)> {
    let (rep, common) = match &cli.command {
        Command::SolveBackward { common, a } => (cmd_solve_backward(common, *a)?, common),
        Command::SolveForward { common, height, fit_decay, fit_radius } => {
            (cmd_solve_forward(common, height, *fit_decay, *fit_radius)?, common)
        }
        Command::FindCritical { common, bracket } => {
            let br = match bracket.as_deref() {
                None => None,
                Some([lo, hi]) => Some((*lo, *hi)),
                Some(v) => return Err(Error::Domain(format!("--bracket needs two values lo,hi, got {}", v.len()))),
            };
            (cmd_find_critical(common, br)?, common)
        }
        Command::Sweep { common, a_grid } => (cmd_sweep(common, a_grid)?, common),
        Command::Reconstruct { common, height, direction } => (cmd_reconstruct(common, height, *direction)?, common),
        Command::DeltaTest { common, height, direction, t_blowup, s0, ratio, steps } => {
            (cmd_delta_test(common, height, *direction, *t_blowup, *s0, *ratio, *steps)?, common)
        }
    };
    Ok((rep, common.clone()))
}

/// Gnuplot script plotting every column of the CSV against the first.
pub fn gnuplot_script(rep: &RunReport, csv_path: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "set datafile separator ','");
    let _ = writeln!(s, "set key autotitle columnhead");
    let _ = writeln!(s, "set xlabel '{}'", rep.table.columns.first().map_or("x", |c| c.as_str()));
    let series: Vec<String> = (2..=rep.table.columns.len())
        .map(|k| format!("'{csv_path}' using 1:{k} with lines"))
        .collect();
    let _ = writeln!(s, "plot {}", series.join(", \\\n     "));
    s
}

/// Renders the requested output format.
pub fn render(rep: &RunReport, format: Format) -> String {
    match format {
        Format::Csv => rep.table.to_csv(),
        Format::Json => {
            let mut s = rep.to_json();
            s.push('\n');
            s
        }
    }
}

/// Entry point of the binary; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(&cli) {
        Ok((rep, common)) => {
            let text = render(&rep, common.format);
            match &common.output {
                Some(path) => {
                    if let Err(e) = std::fs::write(path, text) {
                        eprintln!("error[io]: cannot write {}: {e}", path.display());
                        return 1;
                    }
                }
                None => {
                    use std::io::Write;
                    // a closed pipe downstream is not an error of the run
                    let _ = std::io::stdout().write_all(text.as_bytes());
                }
            }
            if let Some(gp) = &common.gnuplot {
                let target = common.output.as_ref().map_or("data.csv".to_string(), |p| p.display().to_string());
                if let Err(e) = std::fs::write(gp, gnuplot_script(&rep, &target)) {
                    eprintln!("error[io]: cannot write {}: {e}", gp.display());
                    return 1;
                }
            }
            0
        }
        Err(e) => {
            eprintln!("error[{}]: {e}", e.tag());
            e.exit_code()
        }
    }
}
