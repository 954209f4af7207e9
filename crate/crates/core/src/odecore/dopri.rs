//! Dormand–Prince 5(4) pair with the standard fourth-order dense output.

pub(crate) type State = [f64; 2];

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

/// Dense-output polynomial of one accepted step on `[r, r + h]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub r: f64,
    pub h: f64,
    pub(crate) rc: [State; 5],
}

impl Segment {
    /// State at `r + θh`.
    pub fn eval_theta(&self, theta: f64) -> State {
        let t1 = 1.0 - theta;
        let mut out = [0.0; 2];
        for (i, o) in out.iter_mut().enumerate() {
            let rc = |k: usize| self.rc[k][i];
            *o = rc(0) + theta * (rc(1) + t1 * (rc(2) + theta * (rc(3) + t1 * rc(4))));
        }
        out
    }

    pub fn eval(&self, r: f64) -> State {
        self.eval_theta((r - self.r) / self.h)
    }

    /// Derivative of the interpolant with respect to `r`.
    pub fn deriv(&self, r: f64) -> State {
        let th = (r - self.r) / self.h;
        let mut out = [0.0; 2];
        for (i, o) in out.iter_mut().enumerate() {
            let [_, b, c, d, e] = [0, 1, 2, 3, 4].map(|k| self.rc[k][i]);
            // y = a + b θ + c θ(1-θ) + d θ²(1-θ) + e θ²(1-θ)²
            let dy = b
                + c * (1.0 - 2.0 * th)
                + d * (2.0 * th - 3.0 * th * th)
                + e * (2.0 * th * (1.0 - th) * (1.0 - 2.0 * th));
            *o = dy / self.h;
        }
        out
    }
}

pub(crate) struct Trial {
    pub y1: State,
    pub k7: State,
    pub err: f64,
    pub seg: Segment,
}

fn axpy(y: &State, h: f64, terms: &[(f64, &State)]) -> State {
    let mut out = *y;
    for (c, k) in terms {
        out[0] += h * c * k[0];
        out[1] += h * c * k[1];
    }
    out
}

fn finite(s: &State) -> bool {
    s[0].is_finite() && s[1].is_finite()
}

/// One trial step. Returns `None` if any stage is non-finite.
pub(crate) fn step<F>(f: &F, r: f64, y: &State, k1: &State, h: f64, atol: f64, rtol: f64) -> Option<Trial>
where
    F: Fn(f64, &State) -> State,
{
    let k2 = f(r + C2 * h, &axpy(y, h, &[(A21, k1)]));
    if !finite(&k2) {
        return None;
    }
    let k3 = f(r + C3 * h, &axpy(y, h, &[(A31, k1), (A32, &k2)]));
    if !finite(&k3) {
        return None;
    }
    let k4 = f(r + C4 * h, &axpy(y, h, &[(A41, k1), (A42, &k2), (A43, &k3)]));
    if !finite(&k4) {
        return None;
    }
    let k5 = f(r + C5 * h, &axpy(y, h, &[(A51, k1), (A52, &k2), (A53, &k3), (A54, &k4)]));
    if !finite(&k5) {
        return None;
    }
    let k6 = f(
        r + h,
        &axpy(y, h, &[(A61, k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]),
    );
    if !finite(&k6) {
        return None;
    }
    let y1 = axpy(y, h, &[(A71, k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)]);
    if !finite(&y1) {
        return None;
    }
    let k7 = f(r + h, &y1);
    if !finite(&k7) {
        return None;
    }

    let mut acc = 0.0;
    for i in 0..2 {
        let e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
        let sc = atol + rtol * y[i].abs().max(y1[i].abs());
        acc += (e / sc).powi(2);
    }
    let err = (acc / 2.0).sqrt();

    let mut rc = [[0.0; 2]; 5];
    for i in 0..2 {
        let d = y1[i] - y[i];
        let bspl = h * k1[i] - d;
        rc[0][i] = y[i];
        rc[1][i] = d;
        rc[2][i] = bspl;
        rc[3][i] = d - h * k7[i] - bspl;
        rc[4][i] = h
            * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]);
    }
    Some(Trial { y1, k7, err, seg: Segment { r, h, rc } })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn harmonic(_r: f64, y: &State) -> State {
        [y[1], -y[0]]
    }

    #[test]
    fn fifth_order_on_harmonic_oscillator() {
        let errs: Vec<f64> = [0.1, 0.05]
            .iter()
            .map(|&h| {
                let mut y = [1.0, 0.0];
                let mut r = 0.0;
                let n = (1.0 / h) as usize;
                for _ in 0..n {
                    let k1 = harmonic(r, &y);
                    let t = step(&harmonic, r, &y, &k1, h, 1.0, 0.0).unwrap();
                    y = t.y1;
                    r += h;
                }
                (y[0] - 1f64.cos()).abs()
            })
            .collect();
        let order = (errs[0] / errs[1]).log2();
        assert!(order > 4.5, "observed order {order}");
    }

    #[test]
    fn dense_output_matches_endpoints_and_derivative() {
        let y = [1.0, 0.0];
        let k1 = harmonic(0.0, &y);
        let t = step(&harmonic, 0.0, &y, &k1, 0.2, 1e-10, 1e-10).unwrap();
        let s = t.seg;
        assert_eq!(s.eval_theta(0.0), y);
        assert!((s.eval_theta(1.0)[0] - t.y1[0]).abs() < 1e-15);
        let mid = s.eval(0.1);
        assert!((mid[0] - 0.1f64.cos()).abs() < 1e-6);
        let d = s.deriv(0.1);
        assert!((d[0] + 0.1f64.sin()).abs() < 1e-5);
        let d0 = s.deriv(0.0);
        assert!((d0[0] - k1[0]).abs() < 1e-12 && (d0[1] - k1[1]).abs() < 1e-12);
    }
}
