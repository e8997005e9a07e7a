//! Chebyshev expansions on an interval.
//!
//! The equilibrium solver works in the basis `T_j(t)` on `[a,b]` with
//! `x = m + r t`, `m = (a+b)/2`, `r = (b−a)/2`. Coefficients are computed
//! from first-kind Chebyshev nodes; `c[0]` is stored as the plain mean so
//! that `f(x) = c[0] + Σ_{j≥1} c[j] T_j(t)`. The companion second-kind
//! evaluation `Σ_{j≥1} c[j] U_{j−1}(t)` is what turns a potential's
//! expansion into the equilibrium density (the finite Hilbert transform
//! maps `T_j ↦ π U_{j−1}` on the weight `1/√(1−t²)`).

/// First-kind Chebyshev nodes `t_k = cos(π(k+½)/n)`, in `(−1,1)`.
pub fn nodes(n: usize) -> Vec<f64> {
    (0..n)
        .map(|k| (std::f64::consts::PI * (k as f64 + 0.5) / n as f64).cos())
        .collect()
}

/// Chebyshev-T coefficients of `f` on `[a,b]` at expansion order `n`
/// (`c[0]` plain mean; see module docs).
pub fn coeffs(f: impl Fn(f64) -> f64, n: usize, a: f64, b: f64) -> Vec<f64> {
    let m = 0.5 * (a + b);
    let r = 0.5 * (b - a);
    let vals: Vec<f64> = (0..n)
        .map(|k| {
            let th = std::f64::consts::PI * (k as f64 + 0.5) / n as f64;
            f(m + r * th.cos())
        })
        .collect();
    let mut c = vec![0.0f64; n];
    for (j, cj) in c.iter_mut().enumerate() {
        let mut s = 0.0;
        for (k, v) in vals.iter().enumerate() {
            s += v * (j as f64 * std::f64::consts::PI * (k as f64 + 0.5) / n as f64).cos();
        }
        *cj = s * if j == 0 { 1.0 } else { 2.0 } / n as f64;
    }
    c
}

/// Clenshaw evaluation of `c[0] + Σ_{j≥1} c[j] T_j(t)`.
pub fn eval_t(c: &[f64], t: f64) -> f64 {
    let (mut b1, mut b2) = (0.0f64, 0.0f64);
    for &cj in c.iter().skip(1).rev() {
        let b0 = 2.0 * t * b1 - b2 + cj;
        b2 = b1;
        b1 = b0;
    }
    c[0] + t * b1 - b2
}

/// Clenshaw evaluation of `Σ_{j≥1} c[j] U_{j−1}(t)` (c[0] is ignored,
/// matching the `T ↦ U` index shift of the finite Hilbert transform).
pub fn eval_u_shifted(c: &[f64], t: f64) -> f64 {
    let (mut b1, mut b2) = (0.0f64, 0.0f64);
    for &cj in c.iter().skip(2).rev() {
        let b0 = 2.0 * t * b1 - b2 + cj;
        b2 = b1;
        b1 = b0;
    }
    let c1 = if c.len() > 1 { c[1] } else { 0.0 };
    c1 + 2.0 * t * b1 - b2
}
