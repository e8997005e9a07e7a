//! One-cut equilibrium measures.
//!
//! For a confining potential `V` the limiting spectral density minimizes the
//! log-gas energy and solves the singular integral equation
//!
//! ```text
//!     ½ V'(x) = PV ∫ ϱ(y) dy / (x − y)     for x in the support [A, B].
//! ```
//!
//! We make the one-cut ansatz `ϱ(x) = (1/2π) √((x−A)(B−x)) · h(x)` and expand
//! `V'` in Chebyshev polynomials on [A, B]: writing `x = m + r·t` with
//! `m = (A+B)/2`, `r = (B−A)/2` and `V'(x(t)) = Σ_j c_j T_j(t)`, the finite
//! Hilbert transform identity `PV ∫ √(1−s²) U_{j−1}(s)/(t−s) ds = π T_j(t)`
//! turns the integral equation into coefficient matching:
//!
//! * `h(x(t)) = (1/r) Σ_{j≥1} c_j U_{j−1}(t)`, and
//! * the two endpoint conditions `c₀ = 0` and `r·c₁ = 4`.
//!
//! The second condition is exactly unit mass: integrating the ansatz gives
//! `∫ϱ = r·c₁/4`. The endpoints are found by damped Newton iteration on
//! `(c₀, r·c₁/4 − 1)`. Everything downstream (density, CDF, quantiles, edge
//! constants, Stieltjes transform) is evaluated from the same coefficients,
//! and the tests verify the construction against singularity-subtracted
//! quadrature of the principal-value integral, which shares none of it.

use crate::cheb;
use crate::potentials::Potential;
use crate::{Error, Result};
use num_complex::Complex64;
use std::f64::consts::PI;

/// Solved equilibrium measure of a one-cut potential.
#[derive(Debug, Clone)]
pub struct EquilibriumMeasure {
    /// Left support endpoint.
    pub a: f64,
    /// Right support endpoint.
    pub b: f64,
    /// Second-kind Chebyshev series of the regular factor `h`:
    /// `h(x(t)) = Σ_{j≥1} h_coeffs[j] U_{j−1}(t)` (index 0 unused).
    pub h_coeffs: Vec<f64>,
    /// Square-root edge constants: `ϱ(A+t) ≈ s_a √t`, `ϱ(B−t) ≈ s_b √t`.
    pub s_a: f64,
    pub s_b: f64,
    /// `|∫ϱ − 1|` measured by quadrature independent of the mass condition.
    pub mass_defect: f64,
    /// 4096-point tabulation of `F(x) = ∫_A^x ϱ` (abscissae uniform in the
    /// parametrizing angle, so the edge regions are well resolved).
    pub cdf_grid: Vec<(f64, f64)>,
}

/// Classical locations `γ_k = F⁻¹(k/N)`, `k = 1..N`.
#[derive(Debug, Clone)]
pub struct ClassicalLocations {
    pub gamma: Vec<f64>,
    pub n: usize,
}

impl ClassicalLocations {
    /// 1-based accessor matching the usual index convention.
    pub fn loc(&self, k: usize) -> f64 {
        self.gamma[k - 1]
    }
}

const DEFAULT_ORDER: usize = 128;
const CDF_TABLE: usize = 4096;

/// Solve the one-cut equilibrium problem for `p`.
///
/// `tol` bounds the residual of the integral equation at 33 interior
/// Chebyshev nodes; it must lie in `[1e-14, 1e-6]`.
pub fn solve_equilibrium(p: &Potential, tol: f64) -> Result<EquilibriumMeasure> {
    assert!(
        (1e-14..=1e-6).contains(&tol),
        "tol must lie in [1e-14, 1e-6]"
    );
    let (mut a, mut b) = initial_bracket(p);
    let mut order = DEFAULT_ORDER;
    loop {
        match newton_endpoints(p, a, b, order) {
            Ok((na, nb)) => {
                a = na;
                b = nb;
            }
            Err(e) => return Err(e),
        }
        let m = build_measure(p, a, b, order)?;
        // Truncation check: the solved series must reproduce ½V' at nodes
        // that were not used to build it.
        let resid = series_residual(p, &m, 33);
        if resid < tol {
            check_off_support_inequality(p, &m)?;
            return Ok(m);
        }
        if order >= 512 {
            return Err(Error::SolveDiverged {
                iters: 0,
                residual: resid,
            });
        }
        order *= 2;
    }
}

/// Initial endpoint guess `[-2σ, 2σ]`.
///
/// σ is the curvature scale `1/√V''` at the global minimum of `V` (exact for
/// the Gaussian potential); when the minimum is degenerate (`V'' ≈ 0` there,
/// e.g. pure quartic) fall back to the scale where `V` has climbed by one.
fn initial_bracket(p: &Potential) -> (f64, f64) {
    let mut xmin = 0.0;
    let mut vmin = f64::INFINITY;
    for k in 0..=400 {
        let x = -10.0 + 20.0 * (k as f64) / 400.0;
        let v = p.v(x);
        if v < vmin {
            vmin = v;
            xmin = x;
        }
    }
    // polish the minimizer with a few Newton steps on V'
    for _ in 0..40 {
        let d = p.dv(xmin);
        let dd = p.ddv(xmin);
        if dd.abs() < 1e-12 {
            break;
        }
        let step = d / dd;
        xmin -= step;
        if step.abs() < 1e-13 {
            break;
        }
    }
    let ddv = p.ddv(xmin);
    let sigma = if ddv > 0.05 {
        1.0 / ddv.sqrt()
    } else {
        // bisect for V(xmin + s) − V(xmin) = 1
        let mut lo = 1e-3;
        let mut hi = 1e3;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if p.v(xmin + mid) - p.v(xmin) > 1.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    };
    (xmin - 2.0 * sigma, xmin + 2.0 * sigma)
}

/// First two Chebyshev coefficients of `V'` on `[a, b]`.
fn c0_c1(p: &Potential, a: f64, b: f64, order: usize) -> (f64, f64) {
    let c = cheb::coeffs(|x| p.dv(x), order, a, b);
    (c[0], c[1])
}

/// Endpoint residuals: `g = (c₀, r·c₁/4 − 1)`.
fn endpoint_residual(p: &Potential, a: f64, b: f64, order: usize) -> (f64, f64) {
    let (c0, c1) = c0_c1(p, a, b, order);
    let r = 0.5 * (b - a);
    (c0, r * c1 / 4.0 - 1.0)
}

fn newton_endpoints(p: &Potential, mut a: f64, mut b: f64, order: usize) -> Result<(f64, f64)> {
    let norder = order.min(64); // plenty for the two leading coefficients
    let mut g = endpoint_residual(p, a, b, norder);
    let mut gnorm = g.0.hypot(g.1);
    for iter in 0..100 {
        if gnorm < 1e-13 {
            return Ok((a, b));
        }
        let h = 1e-7 * (b - a).abs().max(1.0);
        let ga = endpoint_residual(p, a + h, b, norder);
        let gb = endpoint_residual(p, a, b + h, norder);
        // finite-difference Jacobian, solved by Cramer's rule
        let j11 = (ga.0 - g.0) / h;
        let j12 = (gb.0 - g.0) / h;
        let j21 = (ga.1 - g.1) / h;
        let j22 = (gb.1 - g.1) / h;
        let det = j11 * j22 - j12 * j21;
        if det.abs() < 1e-300 {
            return Err(Error::SolveDiverged {
                iters: iter,
                residual: gnorm,
            });
        }
        let da = -(g.0 * j22 - g.1 * j12) / det;
        let db = -(j11 * g.1 - j21 * g.0) / det;
        // damped update: halve the step while the residual grows or the
        // bracket degenerates
        let mut scale = 1.0;
        loop {
            let (na, nb) = (a + scale * da, b + scale * db);
            if nb - na > 1e-8 {
                let ng = endpoint_residual(p, na, nb, norder);
                let nn = ng.0.hypot(ng.1);
                if nn < gnorm || scale < 1e-6 {
                    a = na;
                    b = nb;
                    g = ng;
                    gnorm = nn;
                    break;
                }
            }
            scale *= 0.5;
            if scale < 1e-12 {
                return Err(Error::SolveDiverged {
                    iters: iter,
                    residual: gnorm,
                });
            }
        }
    }
    Err(Error::SolveDiverged {
        iters: 100,
        residual: gnorm,
    })
}

fn build_measure(p: &Potential, a: f64, b: f64, order: usize) -> Result<EquilibriumMeasure> {
    let c = cheb::coeffs(|x| p.dv(x), order, a, b);
    let r = 0.5 * (b - a);
    let mut h_coeffs = vec![0.0; c.len()];
    for j in 1..c.len() {
        h_coeffs[j] = c[j] / r;
    }
    // regularity: h must stay strictly positive on the support
    let mut h_min = f64::INFINITY;
    for k in 0..512 {
        let t = (PI * (k as f64 + 0.5) / 512.0).cos();
        h_min = h_min.min(cheb::eval_u_shifted(&h_coeffs, t));
    }
    if h_min <= 0.0 {
        return Err(Error::NotOneCut);
    }
    let h_at = |t: f64| cheb::eval_u_shifted(&h_coeffs, t);
    let s_a = (b - a).sqrt() * h_at(-1.0) / (2.0 * PI);
    let s_b = (b - a).sqrt() * h_at(1.0) / (2.0 * PI);

    // independent mass check: midpoint rule in the angle φ (x = m + r·cosφ)
    let m_mid = 0.5 * (a + b);
    let nq = 2048;
    let mut mass = 0.0;
    for k in 0..nq {
        let phi = PI * (k as f64 + 0.5) / nq as f64;
        mass += h_at(-phi.cos()) * phi.sin() * phi.sin();
    }
    mass *= r * r / (2.0 * PI) * (PI / nq as f64);
    let _ = m_mid;

    let mut meas = EquilibriumMeasure {
        a,
        b,
        h_coeffs,
        s_a,
        s_b,
        mass_defect: (mass - 1.0).abs(),
        cdf_grid: Vec::new(),
    };
    meas.cdf_grid = (0..CDF_TABLE)
        .map(|k| {
            let theta = PI * k as f64 / (CDF_TABLE - 1) as f64;
            (meas.x_of_theta(theta), meas.cdf_theta(theta))
        })
        .collect();
    Ok(meas)
}

/// Logarithmic energy `∫ log|x−y| ϱ(y) dy`, by the midpoint rule in the
/// angle variable (the integrand vanishes at the angular endpoints even when
/// `x` sits on an edge).
fn log_energy(m: &EquilibriumMeasure, x: f64) -> f64 {
    let r = 0.5 * (m.b - m.a);
    let mid = 0.5 * (m.a + m.b);
    let nq = 2048;
    let mut acc = 0.0;
    for k in 0..nq {
        let phi = PI * (k as f64 + 0.5) / nq as f64;
        let y = mid + r * phi.cos();
        acc += (x - y).abs().ln() * m.h(y) * phi.sin() * phi.sin();
    }
    acc * r * r / (2.0 * PI) * (PI / nq as f64)
}

/// Variational inequality off the support: with `ℓ` fixed so that
/// `U(x) = V(x) − 2∫log|x−y|ϱ(y)dy − ℓ` vanishes at the endpoints, the
/// candidate is the true minimizer only if `U ≥ 0` outside `[A, B]`. A
/// solution of the endpoint equations localized in one well of a multi-well
/// potential passes every on-support test but fails this one.
fn check_off_support_inequality(p: &Potential, m: &EquilibriumMeasure) -> Result<()> {
    let ell_a = p.v(m.a) - 2.0 * log_energy(m, m.a);
    let ell_b = p.v(m.b) - 2.0 * log_energy(m, m.b);
    let ell = 0.5 * (ell_a + ell_b);
    let r = 0.5 * (m.b - m.a);
    let scale = ell.abs().max(1.0);
    for k in 0..48 {
        // log-spaced offsets from 0.02r out to 5r on each side
        let delta = r * 0.02 * (250.0f64).powf(k as f64 / 47.0);
        for x in [m.a - delta, m.b + delta] {
            let u = p.v(x) - 2.0 * log_energy(m, x) - ell;
            if u < -1e-3 * scale {
                return Err(Error::NotOneCut);
            }
        }
    }
    Ok(())
}

/// Max truncation residual `|½V'(x) − (r/2) Σ c_j T_j|` at `n` interior
/// first-kind Chebyshev nodes (these differ from the construction grid).
fn series_residual(p: &Potential, m: &EquilibriumMeasure, n: usize) -> f64 {
    let r = 0.5 * (m.b - m.a);
    let mid = 0.5 * (m.a + m.b);
    let mut worst: f64 = 0.0;
    for k in 0..n {
        let t = (PI * (k as f64 + 0.5) / n as f64).cos();
        let x = mid + r * t;
        // ½ Σ_{j≥1} c_j T_j(t) with c_j = r·h_coeffs[j]
        let mut series = vec![0.0; m.h_coeffs.len()];
        for j in 1..m.h_coeffs.len() {
            series[j] = 0.5 * r * m.h_coeffs[j];
        }
        let pv = cheb::eval_t(&series, t);
        worst = worst.max((0.5 * p.dv(x) - pv).abs());
    }
    worst
}

impl EquilibriumMeasure {
    fn theta_of_x(&self, x: f64) -> f64 {
        let r = 0.5 * (self.b - self.a);
        let mid = 0.5 * (self.a + self.b);
        let t = ((x - mid) / r).clamp(-1.0, 1.0);
        // θ = 0 at the left edge, π at the right
        (-t).acos()
    }

    fn x_of_theta(&self, theta: f64) -> f64 {
        let r = 0.5 * (self.b - self.a);
        let mid = 0.5 * (self.a + self.b);
        mid - r * theta.cos()
    }

    /// Regular factor `h(x)`.
    pub fn h(&self, x: f64) -> f64 {
        let r = 0.5 * (self.b - self.a);
        let mid = 0.5 * (self.a + self.b);
        cheb::eval_u_shifted(&self.h_coeffs, ((x - mid) / r).clamp(-1.0, 1.0))
    }

    /// Equilibrium density `ϱ(x)` (zero off the support).
    pub fn density(&self, x: f64) -> f64 {
        if x <= self.a || x >= self.b {
            return 0.0;
        }
        (x - self.a).sqrt() * (self.b - x).sqrt() * self.h(x) / (2.0 * PI)
    }

    /// `F(x(θ))` from the termwise-integrated series; exact up to the
    /// truncation of `h`.
    fn cdf_theta(&self, theta: f64) -> f64 {
        let r = 0.5 * (self.b - self.a);
        let mut acc = 0.0;
        for (j, &hj) in self.h_coeffs.iter().enumerate().skip(1) {
            let g = if j == 1 {
                0.5 * theta - 0.25 * (2.0 * theta).sin()
            } else {
                let jf = j as f64;
                let sign = if j % 2 == 0 { -1.0 } else { 1.0 };
                0.5 * sign
                    * (((jf - 1.0) * theta).sin() / (jf - 1.0)
                        - ((jf + 1.0) * theta).sin() / (jf + 1.0))
            };
            acc += hj * g;
        }
        (acc * r * r / (2.0 * PI)).clamp(0.0, 1.0)
    }

    /// `F(x) = ∫_A^x ϱ`.
    pub fn cdf(&self, x: f64) -> f64 {
        if x <= self.a {
            return 0.0;
        }
        if x >= self.b {
            return 1.0;
        }
        self.cdf_theta(self.theta_of_x(x))
    }

    /// `F⁻¹(q)` by bisection to 1e-12 followed by one Newton polish.
    pub fn inverse_cdf(&self, q: f64) -> f64 {
        assert!((0.0..=1.0).contains(&q), "quantile must lie in [0,1]");
        if q <= 0.0 {
            return self.a;
        }
        if q >= 1.0 {
            return self.b;
        }
        let (mut lo, mut hi) = (self.a, self.b);
        let span = self.b - self.a;
        while hi - lo > 1e-12 * span {
            let mid = 0.5 * (lo + hi);
            if self.cdf(mid) < q {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let mut x = 0.5 * (lo + hi);
        let d = self.density(x);
        if d > 0.0 {
            x -= (self.cdf(x) - q) / d;
            x = x.clamp(self.a, self.b);
        }
        x
    }

    /// Stieltjes transform `m(z) = ∫ ϱ(s)/(z−s) ds`, `Im z ≠ 0`, by
    /// Gauss–Chebyshev (second kind) quadrature.
    pub fn stieltjes(&self, z: Complex64) -> Result<Complex64> {
        if z.im == 0.0 {
            return Err(Error::Domain(format!(
                "Stieltjes transform needs Im z != 0, got z = {z}"
            )));
        }
        let r = 0.5 * (self.b - self.a);
        let mid = 0.5 * (self.a + self.b);
        let nq = 512;
        let mut acc = Complex64::new(0.0, 0.0);
        for k in 1..=nq {
            let phi = PI * k as f64 / (nq + 1) as f64;
            let t = phi.cos();
            let w = phi.sin() * phi.sin();
            let x = mid + r * t;
            acc += w * self.h(x) / (z - x);
        }
        Ok(acc * r * r / (2.0 * PI) * (PI / (nq + 1) as f64))
    }
}

/// `γ_k = F⁻¹(k/N)` for `k = 1..N` (with `γ_N = B` exactly).
pub fn classical_locations(m: &EquilibriumMeasure, n: usize) -> ClassicalLocations {
    assert!(n >= 1);
    let gamma = (1..=n)
        .map(|k| {
            if k == n {
                m.b
            } else {
                m.inverse_cdf(k as f64 / n as f64)
            }
        })
        .collect();
    ClassicalLocations { gamma, n }
}

/// Quantiles of the density restricted to `(A, y_plus)`:
/// `α_j` solves `F(α_j) = (j/(K+1)) · F(y_plus)` for `j = 1..K`.
pub fn quantiles_alpha(m: &EquilibriumMeasure, y_plus: f64, k: usize) -> Result<Vec<f64>> {
    if y_plus <= m.a {
        return Err(Error::Domain(format!(
            "quantile anchor y_plus = {y_plus} must exceed the left edge A = {}",
            m.a
        )));
    }
    let total = m.cdf(y_plus);
    Ok((1..=k)
        .map(|j| m.inverse_cdf(j as f64 / (k + 1) as f64 * total))
        .collect())
}

/// Principal-value residual `½V'(x) − PV∫ ϱ(y)/(x−y) dy` measured by
/// singularity-subtracted Gauss–Legendre quadrature. Shares nothing with the
/// Chebyshev construction, so it cross-checks the Hilbert-transform algebra.
pub fn pv_residual(p: &Potential, m: &EquilibriumMeasure, x: f64, nodes: usize) -> f64 {
    let (gl_x, gl_w) = gauss_legendre(nodes);
    let rho_x = m.density(x);
    let mut pv = 0.0;
    for (xi, wi) in gl_x.iter().zip(&gl_w) {
        let y = 0.5 * (m.b - m.a) * xi + 0.5 * (m.a + m.b);
        let w = 0.5 * (m.b - m.a) * wi;
        let diff = x - y;
        let val = if diff.abs() < 1e-12 {
            // removable point: (ϱ(y)−ϱ(x))/(x−y) → −ϱ'(x)
            let h = 1e-6 * (m.b - m.a);
            -(m.density(x + h) - m.density(x - h)) / (2.0 * h)
        } else {
            (m.density(y) - rho_x) / diff
        };
        pv += w * val;
    }
    pv += rho_x * ((x - m.a) / (m.b - x)).ln();
    0.5 * p.dv(x) - pv
}

/// Nodes and weights on [-1, 1] by Newton iteration on Legendre polynomials.
fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut xs = vec![0.0; n];
    let mut ws = vec![0.0; n];
    for i in 0..(n + 1) / 2 {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut pp = 0.0;
        for _ in 0..100 {
            let mut p0 = 1.0;
            let mut p1 = 0.0;
            for j in 0..n {
                let p2 = p1;
                p1 = p0;
                p0 = ((2.0 * j as f64 + 1.0) * x * p1 - j as f64 * p2) / (j as f64 + 1.0);
            }
            pp = n as f64 * (x * p0 - p1) / (x * x - 1.0);
            let dx = p0 / pp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        xs[i] = -x;
        xs[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * pp * pp);
        ws[i] = w;
        ws[n - 1 - i] = w;
    }
    (xs, ws)
}
