//! Quadrature and finite-difference helpers for non-uniform grids.

/// `∫_l^r` of the quadratic through `(a, fa), (b, fb), (c, fc)`.
fn quad_piece(a: f64, b: f64, c: f64, fa: f64, fb: f64, fc: f64, l: f64, r: f64) -> f64 {
    let d1 = (fb - fa) / (b - a);
    let d2 = ((fc - fb) / (c - b) - d1) / (c - a);
    let del = b - a;
    let prim = |x: f64| {
        let u = x - a;
        fa * u + d1 * u * u / 2.0 + d2 * (u * u * u / 3.0 - del * u * u / 2.0)
    };
    prim(r) - prim(l)
}

/// Integral of `y` over each interval `[x_i, x_{i+1}]`, averaging the two
/// local quadratic fits that share the interval (fourth order on smooth data).
pub fn interval_integrals(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    assert_eq!(n, y.len());
    if n < 2 {
        return Vec::new();
    }
    if n == 2 {
        return vec![0.5 * (x[1] - x[0]) * (y[0] + y[1])];
    }
    (0..n - 1)
        .map(|i| {
            let (l, r) = (x[i], x[i + 1]);
            if r == l {
                return 0.0;
            }
            let mut acc = 0.0;
            let mut k = 0.0;
            if i >= 1 && x[i - 1] < l {
                acc += quad_piece(x[i - 1], l, r, y[i - 1], y[i], y[i + 1], l, r);
                k += 1.0;
            }
            if i + 2 < n && x[i + 2] > r {
                acc += quad_piece(l, r, x[i + 2], y[i], y[i + 1], y[i + 2], l, r);
                k += 1.0;
            }
            if k == 0.0 {
                0.5 * (r - l) * (y[i] + y[i + 1])
            } else {
                acc / k
            }
        })
        .collect()
}

/// Running integral `C_k = ∫_{x_0}^{x_k} y`.
pub fn cumulative(x: &[f64], y: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(x.len());
    let mut acc = 0.0;
    out.push(0.0);
    for v in interval_integrals(x, y) {
        acc += v;
        out.push(acc);
    }
    out
}

/// Total integral over the grid.
pub fn integrate(x: &[f64], y: &[f64]) -> f64 {
    interval_integrals(x, y).iter().sum()
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut xs = vec![0.0; n];
    let mut ws = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 0 { 1.0 } else if n == 1 { z } else { p1 };
            let pnm1 = if n == 1 { 1.0 } else { p0 };
            dp = nf * (z * pn - pnm1) / (z * z - 1.0);
            let dz = pn / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        xs[i] = -z;
        xs[n - 1 - i] = z;
        let w = 2.0 / ((1.0 - z * z) * dp * dp);
        ws[i] = w;
        ws[n - 1 - i] = w;
    }
    (xs, ws)
}

/// Weights of the first-derivative stencil at `x0` on nodes `xs` (Fornberg).
pub fn fd_weights(x0: f64, xs: &[f64]) -> Vec<f64> {
    let n = xs.len();
    let mut c = vec![[0.0f64; 2]; n];
    let mut c1 = 1.0;
    let mut c4 = xs[0] - x0;
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(1);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = xs[i] - x0;
        for j in 0..i {
            let c3 = xs[i] - xs[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[i][k] = c1 * (k as f64 * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for k in (1..=mn).rev() {
                c[j][k] = (c4 * c[j][k] - k as f64 * c[j][k - 1]) / c3;
            }
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    c.iter().map(|w| w[1]).collect()
}

/// First derivative of `y` at every interior node using five-point stencils
/// (shifted near the ends).
pub fn derivative(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let width = 5.min(n);
    (0..n)
        .map(|i| {
            let start = i.saturating_sub(width / 2).min(n - width);
            let w = fd_weights(x[i], &x[start..start + width]);
            w.iter().zip(&y[start..start + width]).map(|(a, b)| a * b).sum()
        })
        .collect()
}
