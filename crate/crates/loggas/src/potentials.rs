//! External potentials `V` and the standing assumptions on them.
//!
//! A [`Potential`] carries the potential itself, its first two derivatives,
//! a convexity floor `W` (so that `V'' ≥ -2W` everywhere we probe), and a
//! growth exponent `α` demanding `V(x) > (2+α)·ln(1+|x|)` for large `|x|`.
//! [`check_assumptions`] measures both conditions on the probe grid instead
//! of trusting the caller.
//!
//! The quadratic confinement cap `Θ` that local conditioned measures add on
//! the far left lives here too ([`confinement_theta`]): it vanishes for
//! `u ≥ -1` and grows like `(u+1)²` below.

use crate::{Error, Result};
use std::fmt;
use std::sync::Arc;

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
enum Form {
    /// `V(x) = (c/2)·x²`.
    Quadratic(f64),
    /// `Σ_k coeffs[k]·x^{2k}`, lowest degree first.
    EvenPoly(Vec<f64>),
    /// User-supplied `(V, V', V'')`, optionally `V'''` and `V''''`.
    Callable {
        v: ScalarFn,
        dv: ScalarFn,
        ddv: ScalarFn,
        d3v: Option<ScalarFn>,
        d4v: Option<ScalarFn>,
    },
}

/// A confining external potential with its assumption bookkeeping.
#[derive(Clone)]
pub struct Potential {
    form: Form,
    /// Convexity floor: the model requires `inf V'' ≥ -2W`.
    pub convexity_bound: f64,
    /// Growth exponent `α` in the tail condition `V(x) > (2+α)·ln(1+|x|)`.
    pub growth_exponent: f64,
    /// `|x|` threshold beyond which the growth condition is enforced.
    pub growth_onset: f64,
    probe_grid: Vec<f64>,
}

impl fmt::Debug for Potential {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.form {
            Form::Quadratic(c) => write!(f, "Potential::quadratic({c})"),
            Form::EvenPoly(cs) => write!(f, "Potential::even_poly({cs:?})"),
            Form::Callable { .. } => write!(f, "Potential::from_fns(..)"),
        }
    }
}

/// 401 Chebyshev points on [-10, 10] plus far probes for the growth check.
fn default_probe_grid() -> Vec<f64> {
    let n = 401;
    let mut g: Vec<f64> = (0..n)
        .map(|k| 10.0 * (std::f64::consts::PI * (k as f64 + 0.5) / n as f64).cos())
        .collect();
    for x in [20.0, 50.0, 100.0] {
        g.push(x);
        g.push(-x);
    }
    g
}

impl Potential {
    /// `V(x) = (c/2)·x²`; `c = 1` is the Gaussian log-gas potential.
    pub fn quadratic(c: f64) -> Self {
        Potential {
            form: Form::Quadratic(c),
            convexity_bound: if c >= 0.0 { 0.0 } else { -c / 2.0 },
            growth_exponent: 1.0,
            growth_onset: 5.0,
            probe_grid: default_probe_grid(),
        }
    }

    /// The standard Gaussian choice `V(x) = x²/2`.
    pub fn gaussian() -> Self {
        Self::quadratic(1.0)
    }

    /// `V(x) = x⁴/4`.
    pub fn quartic() -> Self {
        Self::even_poly(vec![0.0, 0.0, 0.25], 0.0, 2.0)
    }

    /// Even polynomial `Σ coeffs[k] x^{2k}` (lowest degree first) with the
    /// stated convexity floor `w` and growth exponent `alpha`.
    pub fn even_poly(coeffs: Vec<f64>, w: f64, alpha: f64) -> Self {
        Potential {
            form: Form::EvenPoly(coeffs),
            convexity_bound: w,
            growth_exponent: alpha,
            growth_onset: 5.0,
            probe_grid: default_probe_grid(),
        }
    }

    /// General potential from explicit `(V, V', V'')` closures.
    ///
    /// `V''` must be supplied rather than differenced numerically: it feeds
    /// the sampler drift Jacobian and the coupling matrix `𝒲`, where noise
    /// amplification from double differencing is unacceptable. The first
    /// derivative is still validated against a central difference of `V` on
    /// the probe grid.
    pub fn from_fns<F, G, H>(v: F, dv: G, ddv: H, w: f64, alpha: f64) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
        G: Fn(f64) -> f64 + Send + Sync + 'static,
        H: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        let p = Potential {
            form: Form::Callable {
                v: Arc::new(v),
                dv: Arc::new(dv),
                ddv: Arc::new(ddv),
                d3v: None,
                d4v: None,
            },
            convexity_bound: w,
            growth_exponent: alpha,
            growth_onset: 5.0,
            probe_grid: default_probe_grid(),
        };
        p.validate_derivative()?;
        Ok(p)
    }

    /// Override the growth-check onset `x₀` (default 5).
    pub fn with_growth_onset(mut self, x0: f64) -> Self {
        self.growth_onset = x0;
        self
    }

    /// Attach third and fourth derivatives to a callable potential.
    pub fn with_higher_derivatives<F, G>(mut self, d3: F, d4: G) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
        G: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        if let Form::Callable { d3v, d4v, .. } = &mut self.form {
            *d3v = Some(Arc::new(d3));
            *d4v = Some(Arc::new(d4));
        }
        self
    }

    /// `V(x)`, `V'(x)` or `V''(x)` for `order` 0, 1, 2.
    pub fn eval(&self, x: f64, order: u8) -> Result<f64> {
        if !x.is_finite() {
            return Err(Error::NonFinite(x));
        }
        assert!(order <= 2, "derivative order must be 0, 1 or 2");
        Ok(match order {
            0 => self.v(x),
            1 => self.dv(x),
            _ => self.ddv(x),
        })
    }

    pub fn v(&self, x: f64) -> f64 {
        match &self.form {
            Form::Quadratic(c) => 0.5 * c * x * x,
            Form::EvenPoly(cs) => horner(cs, x * x),
            Form::Callable { v, .. } => v(x),
        }
    }

    pub fn dv(&self, x: f64) -> f64 {
        match &self.form {
            Form::Quadratic(c) => c * x,
            Form::EvenPoly(cs) => {
                // d/dx Σ c_k u^k with u = x²  =  x · Σ 2k c_k u^{k-1}
                let du: Vec<f64> = cs
                    .iter()
                    .enumerate()
                    .skip(1)
                    .map(|(k, c)| 2.0 * k as f64 * c)
                    .collect();
                x * horner(&du, x * x)
            }
            Form::Callable { dv, .. } => dv(x),
        }
    }

    pub fn ddv(&self, x: f64) -> f64 {
        match &self.form {
            Form::Quadratic(c) => *c,
            Form::EvenPoly(cs) => {
                let u = x * x;
                let mut acc = 0.0;
                for (k, c) in cs.iter().enumerate().skip(1) {
                    let k = k as f64;
                    // d²/dx² x^{2k} = 2k(2k-1) x^{2k-2}
                    acc += 2.0 * k * (2.0 * k - 1.0) * c * u.powi(k as i32 - 1);
                }
                acc
            }
            Form::Callable { ddv, .. } => ddv(x),
        }
    }

    /// `V'''(x)` if available (polynomial forms always; callables only when
    /// attached).
    pub fn d3v(&self, x: f64) -> Option<f64> {
        match &self.form {
            Form::Quadratic(_) => Some(0.0),
            Form::EvenPoly(cs) => {
                let u = x * x;
                let mut acc = 0.0;
                for (k, c) in cs.iter().enumerate().skip(2) {
                    let k2 = 2.0 * k as f64;
                    acc += k2 * (k2 - 1.0) * (k2 - 2.0) * c * x * u.powi(k as i32 - 2);
                }
                Some(acc)
            }
            Form::Callable { d3v, .. } => d3v.as_ref().map(|f| f(x)),
        }
    }

    pub fn d4v(&self, x: f64) -> Option<f64> {
        match &self.form {
            Form::Quadratic(_) => Some(0.0),
            Form::EvenPoly(cs) => {
                let u = x * x;
                let mut acc = 0.0;
                for (k, c) in cs.iter().enumerate().skip(2) {
                    let k2 = 2.0 * k as f64;
                    acc += k2 * (k2 - 1.0) * (k2 - 2.0) * (k2 - 3.0) * c * u.powi(k as i32 - 2);
                }
                Some(acc)
            }
            Form::Callable { d4v, .. } => d4v.as_ref().map(|f| f(x)),
        }
    }

    pub fn probe_grid(&self) -> &[f64] {
        &self.probe_grid
    }

    /// Check `V'` against a central difference of `V` on the probe grid.
    fn validate_derivative(&self) -> Result<()> {
        const H: f64 = 1e-5;
        for &x in &self.probe_grid {
            let fd = (self.v(x + H) - self.v(x - H)) / (2.0 * H);
            let an = self.dv(x);
            let scale = an.abs().max(1.0);
            if (fd - an).abs() > 1e-6 * scale {
                return Err(Error::Domain(format!(
                    "supplied V' disagrees with central difference at x = {x}: {an} vs {fd}"
                )));
            }
        }
        Ok(())
    }
}

fn horner(coeffs: &[f64], u: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, c| acc * u + c)
}

/// Quadratic confinement cap: `Θ(u) = (u+1)²` for `u < -1`, zero otherwise.
/// `order` selects `Θ`, `Θ'` or `Θ''`.
pub fn confinement_theta(u: f64, order: u8) -> f64 {
    assert!(order <= 2, "derivative order must be 0, 1 or 2");
    if u >= -1.0 {
        return 0.0;
    }
    match order {
        0 => (u + 1.0) * (u + 1.0),
        1 => 2.0 * (u + 1.0),
        _ => 2.0,
    }
}

/// What [`check_assumptions`] measured on the probe grid.
#[derive(Debug, Clone)]
pub struct AssumptionReport {
    /// Smallest `V''` over the probe grid, to compare against `-2W`.
    pub inf_second_derivative: f64,
    /// The floor `-2W` that `inf V''` must respect.
    pub convexity_floor: f64,
    pub convexity_ok: bool,
    /// Smallest value of `V(x) - (2+α)·ln(1+|x|)` over probe points with
    /// `|x| ≥ growth_onset`, along with the abscissa attaining it.
    pub growth_margin: f64,
    pub growth_margin_at: f64,
    pub growth_ok: bool,
    /// Whether a downstream equilibrium solve found a single interval with
    /// square-root edges. Filled lazily by whoever performs that solve.
    pub one_cut: Option<bool>,
}

impl AssumptionReport {
    pub fn all_ok(&self) -> bool {
        self.convexity_ok && self.growth_ok && self.one_cut.unwrap_or(true)
    }
}

/// Measure the convexity floor and tail growth of `p` on its probe grid.
pub fn check_assumptions(p: &Potential) -> Result<AssumptionReport> {
    let mut inf_ddv = f64::INFINITY;
    let mut growth_margin = f64::INFINITY;
    let mut growth_at = f64::NAN;
    for &x in p.probe_grid() {
        let ddv = p.eval(x, 2)?;
        if !ddv.is_finite() {
            return Err(Error::Domain(format!("V'' non-finite at x = {x}")));
        }
        inf_ddv = inf_ddv.min(ddv);
        if x.abs() >= p.growth_onset {
            let margin = p.eval(x, 0)? - (2.0 + p.growth_exponent) * (1.0 + x.abs()).ln();
            if margin < growth_margin {
                growth_margin = margin;
                growth_at = x;
            }
        }
    }
    let floor = -2.0 * p.convexity_bound;
    Ok(AssumptionReport {
        inf_second_derivative: inf_ddv,
        convexity_floor: floor,
        convexity_ok: inf_ddv >= floor - 1e-12,
        growth_margin,
        growth_margin_at: growth_at,
        growth_ok: growth_margin > 0.0,
        one_cut: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_evals() {
        let p = Potential::gaussian();
        assert_eq!(p.eval(2.0, 1).unwrap(), 2.0);
        assert_eq!(p.eval(0.0, 0).unwrap(), 0.0);
        assert_eq!(p.eval(-3.0, 2).unwrap(), 1.0);
    }

    #[test]
    fn quartic_evals() {
        let p = Potential::quartic();
        assert!((p.eval(1.0, 2).unwrap() - 3.0).abs() < 1e-15);
        assert!((p.eval(2.0, 0).unwrap() - 4.0).abs() < 1e-15);
        assert!((p.eval(2.0, 1).unwrap() - 8.0).abs() < 1e-15);
        assert_eq!(p.d3v(2.0).unwrap(), 12.0);
        assert_eq!(p.d4v(2.0).unwrap(), 6.0);
    }

    #[test]
    fn non_finite_input_rejected() {
        let p = Potential::gaussian();
        assert!(p.eval(f64::NAN, 0).is_err());
        assert!(p.eval(f64::INFINITY, 1).is_err());
    }

    #[test]
    fn theta_values() {
        assert_eq!(confinement_theta(-1.0, 0), 0.0);
        assert_eq!(confinement_theta(-3.0, 0), 4.0);
        assert_eq!(confinement_theta(0.5, 1), 0.0);
        assert_eq!(confinement_theta(-2.0, 1), -2.0);
        assert_eq!(confinement_theta(-2.0, 2), 2.0);
    }

    #[test]
    fn theta_is_c1_and_convex() {
        // continuity of Θ and Θ' across u = -1, and Θ'' ≥ 0 everywhere
        for k in 0..2000 {
            let u = -4.0 + 8.0 * (k as f64) / 1999.0;
            assert!(confinement_theta(u, 0) >= 0.0);
            assert!(confinement_theta(u, 2) >= 0.0);
            if u >= -1.0 {
                assert_eq!(confinement_theta(u, 0), 0.0);
            }
        }
        let eps = 1e-8;
        assert!(confinement_theta(-1.0 - eps, 0) < 1e-14);
        assert!(confinement_theta(-1.0 - eps, 1).abs() < 1e-7);
    }

    #[test]
    fn gaussian_assumptions_pass() {
        let rep = check_assumptions(&Potential::gaussian()).unwrap();
        assert!(rep.convexity_ok);
        assert!(rep.growth_ok);
        assert!((rep.inf_second_derivative - 1.0).abs() < 1e-12);
    }

    #[test]
    fn log_potential_fails_growth() {
        // grows like ln|x|, far below the required (2+α)·ln(1+|x|)
        let p = Potential::from_fns(
            |x: f64| 0.5 * (1.0 + x * x).ln(),
            |x| x / (1.0 + x * x),
            |x| (1.0 - x * x) / (1.0 + x * x).powi(2),
            1.0,
            1.0,
        )
        .unwrap();
        let rep = check_assumptions(&p).unwrap();
        assert!(rep.convexity_ok);
        assert!(!rep.growth_ok);
        assert!(!rep.all_ok());
    }

    #[test]
    fn quartic_assumptions_with_low_onset() {
        // x⁴/4 - 4·ln(1+|x|) is already positive from |x| = 3 on
        let p = Potential::quartic().with_growth_onset(3.0);
        let rep = check_assumptions(&p).unwrap();
        assert!(rep.convexity_ok);
        assert!(rep.growth_ok);
        assert!((3.0f64.powi(4) / 4.0 - 4.0 * 4.0f64.ln()) > 0.0);
    }

    #[test]
    fn callable_derivative_mismatch_detected() {
        let bad = Potential::from_fns(|x| x * x, |x| 3.0 * x, |_| 2.0, 0.0, 1.0);
        assert!(bad.is_err());
    }

    #[test]
    fn polynomial_derivatives_match_finite_differences() {
        let p = Potential::even_poly(vec![0.3, -0.7, 0.25, 0.01], 0.5, 2.0);
        let h = 1e-5;
        for k in 0..401 {
            let x = -10.0 + 20.0 * (k as f64) / 400.0;
            let fd1 = (p.v(x + h) - p.v(x - h)) / (2.0 * h);
            let fd2 = (p.dv(x + h) - p.dv(x - h)) / (2.0 * h);
            assert!((fd1 - p.dv(x)).abs() <= 1e-6 * p.dv(x).abs().max(1.0));
            assert!((fd2 - p.ddv(x)).abs() <= 1e-5 * p.ddv(x).abs().max(1.0));
        }
    }

    #[test]
    fn higher_derivatives_match_finite_differences() {
        let p = Potential::even_poly(vec![0.0, 0.5, 0.125], 0.0, 2.0);
        let h = 1e-4;
        for k in 0..101 {
            let x = -5.0 + 10.0 * (k as f64) / 100.0;
            let fd3 = (p.ddv(x + h) - p.ddv(x - h)) / (2.0 * h);
            let fd4 = (p.ddv(x + h) - 2.0 * p.ddv(x) + p.ddv(x - h)) / (h * h);
            assert!((fd3 - p.d3v(x).unwrap()).abs() < 1e-5 * p.d3v(x).unwrap().abs().max(1.0));
            assert!((fd4 - p.d4v(x).unwrap()).abs() < 1e-3 * p.d4v(x).unwrap().abs().max(1.0));
        }
    }
}
