//! The stochastic Airy operator `−∂²ₓ + x + (2/√β) b'ₓ` on `[0, L]`,
//! discretized by finite differences. Its smallest eigenvalues, negated,
//! follow the Tracy–Widom_β laws, so this module supplies the reference
//! distributions the edge statistics are tested against.

use crate::linalg::SymTridiag;
use crate::rng::stream_rng;
use crate::{Error, Result};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

/// Finite-difference grid for the operator on `[0, L]` with Dirichlet
/// conditions at both ends. Interior nodes sit at `x_i = i·dx`, `i = 1..n`.
///
/// `beta = f64::INFINITY` is a meaningful degenerate case: the noise
/// coefficient `2/√β` vanishes and the operator becomes the deterministic
/// Airy Hamiltonian, whose ground energy is the negated first Airy zero.
#[derive(Debug, Clone, Copy)]
pub struct AiryDiscretization {
    l: f64,
    n: usize,
    beta: f64,
}

impl AiryDiscretization {
    /// `L ≥ 10` so the low-lying spectrum is insensitive to the cutoff
    /// (eigenfunctions decay like `exp(−⅔x^{3/2})`); `dx = L/n ≤ 0.01·L`
    /// as a resolution floor; `beta > 0`.
    pub fn new(l: f64, n: usize, beta: f64) -> Result<Self> {
        if !(l >= 10.0) || !l.is_finite() {
            return Err(Error::Domain(format!(
                "domain cutoff must satisfy L >= 10, got {l}"
            )));
        }
        if n < 100 {
            return Err(Error::Domain(format!(
                "need dx <= L/100, got {n} grid points"
            )));
        }
        if !(beta > 0.0) {
            return Err(Error::Domain(format!("beta must be positive, got {beta}")));
        }
        Ok(AiryDiscretization { l, n, beta })
    }

    /// `L = 16`, `n = 4000` — adequate for `β ≥ 1`; smaller β spreads the
    /// ground state and wants a larger box.
    pub fn default_for(beta: f64) -> Result<Self> {
        AiryDiscretization::new(16.0, 4000, beta)
    }

    pub fn l(&self) -> f64 {
        self.l
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn dx(&self) -> f64 {
        self.l / self.n as f64
    }
}

/// One realization of the `m` smallest eigenvalues `Λ₁ ≤ … ≤ Λ_m`.
///
/// The white noise enters the diagonal as independent Brownian increments
/// per cell, `ΔB_i ~ Normal(0, dx)`, divided by `dx`; off-diagonals are the
/// noiseless `−1/dx²`. Eigenvalues come from Sturm bisection, so `m` draws
/// cost `m` scans, not a full diagonalization.
pub fn sample_airy_eigs<R: Rng>(d: &AiryDiscretization, m: usize, rng: &mut R) -> Vec<f64> {
    let root_dx = d.dx().sqrt();
    let db: Vec<f64> = (0..d.n)
        .map(|_| {
            let z: f64 = rng.sample(StandardNormal);
            root_dx * z
        })
        .collect();
    eigs_from_increments(d, m, &db)
}

/// Same operator driven by an explicit Brownian path (`db[i]` is the
/// increment over cell `i`, variance `dx`). Splitting this out lets the
/// refinement tests couple two grids to one path: summing adjacent fine
/// increments yields exactly the coarse ones.
fn eigs_from_increments(d: &AiryDiscretization, m: usize, db: &[f64]) -> Vec<f64> {
    assert!(m <= 10, "the low edge of the spectrum means m <= 10");
    assert!(m * 10 <= d.n, "need m << n for the grid to resolve mode m");
    assert_eq!(db.len(), d.n);
    let dx = d.dx();
    let inv_dx2 = 1.0 / (dx * dx);
    let noise_coeff = 2.0 / (d.beta.sqrt() * dx);
    let diag: Vec<f64> = (1..=d.n)
        .map(|i| 2.0 * inv_dx2 + i as f64 * dx + noise_coeff * db[i - 1])
        .collect();
    let off = vec![-inv_dx2; d.n - 1];
    SymTridiag::new(diag, off).smallest(m)
}

/// Empirical distribution of `Λ₁`: sorted draws with their CDF heights.
/// `−Λ₁` is Tracy–Widom_β distributed in the refinement limit.
#[derive(Debug, Clone)]
pub struct TwReferenceCdf {
    /// Sorted Λ₁ draws.
    pub values: Vec<f64>,
    /// `cdf[i] = (i+1)/n_draws`.
    pub cdf: Vec<f64>,
    pub beta: f64,
}

impl TwReferenceCdf {
    /// Right-continuous empirical CDF at `x`.
    pub fn eval(&self, x: f64) -> f64 {
        let idx = self.values.partition_point(|&v| v <= x);
        idx as f64 / self.values.len() as f64
    }

    pub fn median(&self) -> f64 {
        let n = self.values.len();
        if n % 2 == 1 {
            self.values[n / 2]
        } else {
            0.5 * (self.values[n / 2 - 1] + self.values[n / 2])
        }
    }
}

/// Tabulate the law of `Λ₁` from `n_draws ≥ 1000` independent realizations.
/// Draws run in parallel on RNG streams derived from `rng`, so the table is
/// reproducible for a given seeded generator regardless of thread count.
pub fn tw_reference_cdf<R: Rng>(
    beta: f64,
    n_draws: usize,
    d: &AiryDiscretization,
    rng: &mut R,
) -> Result<TwReferenceCdf> {
    if n_draws < 1000 {
        return Err(Error::Domain(format!(
            "a reference table needs at least 1000 draws, got {n_draws}"
        )));
    }
    if beta != d.beta {
        return Err(Error::Domain(format!(
            "beta mismatch: requested {beta}, discretization carries {}",
            d.beta
        )));
    }
    let seed: u64 = rng.gen();
    let mut values: Vec<f64> = (0..n_draws)
        .into_par_iter()
        .map(|i| {
            let mut r = stream_rng(seed, i as u64);
            sample_airy_eigs(d, 1, &mut r)[0]
        })
        .collect();
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = values.len() as f64;
    let cdf = (1..=values.len()).map(|i| i as f64 / n).collect();
    Ok(TwReferenceCdf { values, cdf, beta })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// First zero of the Airy function Ai, negated: the ground energy of
    /// −∂²ₓ + x on the half line.
    const AIRY_GROUND: f64 = 2.338_107_410_459_767;

    #[test]
    fn rejects_bad_discretizations() {
        assert!(AiryDiscretization::new(8.0, 4000, 2.0).is_err());
        assert!(AiryDiscretization::new(16.0, 99, 2.0).is_err());
        assert!(AiryDiscretization::new(16.0, 4000, 0.0).is_err());
        assert!(AiryDiscretization::new(16.0, 4000, -1.0).is_err());
        assert!(AiryDiscretization::new(f64::NAN, 4000, 2.0).is_err());
        let d = AiryDiscretization::new(16.0, 4000, 2.0).unwrap();
        assert_eq!(d.dx(), 16.0 / 4000.0);
    }

    #[test]
    fn noiseless_ground_state_is_the_airy_zero() {
        let d = AiryDiscretization::new(20.0, 4000, f64::INFINITY).unwrap();
        let mut rng = stream_rng(0, 0);
        let eigs = sample_airy_eigs(&d, 3, &mut rng);
        assert!(
            (eigs[0] - AIRY_GROUND).abs() < 1e-3,
            "ground energy {} vs Airy zero {AIRY_GROUND}",
            eigs[0]
        );
        // the next Airy zeros, same construction
        assert!((eigs[1] - 4.087_949_444_130_970_6).abs() < 1e-3);
        assert!((eigs[2] - 5.520_559_828_095_551).abs() < 1e-3);
    }

    #[test]
    fn eigenvalues_come_out_sorted() {
        let d = AiryDiscretization::new(16.0, 400, 2.0).unwrap();
        for s in 0..20 {
            let mut rng = stream_rng(100, s);
            let eigs = sample_airy_eigs(&d, 5, &mut rng);
            assert!(eigs.windows(2).all(|w| w[0] <= w[1]), "{eigs:?}");
            assert!(eigs.iter().all(|v| v.is_finite()));
        }
    }

    #[test]
    fn reference_cdf_is_a_distribution() {
        let d = AiryDiscretization::new(16.0, 400, 2.0).unwrap();
        let mut rng = stream_rng(7, 0);
        let table = tw_reference_cdf(2.0, 1000, &d, &mut rng).unwrap();
        assert_eq!(table.values.len(), 1000);
        assert!(table.values.windows(2).all(|w| w[0] <= w[1]));
        assert!(table.cdf.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(*table.cdf.last().unwrap(), 1.0);
        assert_eq!(table.eval(f64::NEG_INFINITY), 0.0);
        assert_eq!(table.eval(f64::INFINITY), 1.0);
        let med = table.median();
        assert!((table.eval(med) - 0.5).abs() < 1e-3);
        // TW₂ lives around −(−1.77) ≈ 1.77 on this sign convention
        assert!(med > 0.5 && med < 3.0, "median {med}");
        let mut rng2 = stream_rng(7, 99);
        assert!(tw_reference_cdf(2.0, 999, &d, &mut rng2).is_err());
        assert!(tw_reference_cdf(1.0, 1000, &d, &mut rng2).is_err());
    }

    #[test]
    fn medians_are_stable_under_refinement() {
        // Couple all three grids to a single Brownian path per draw: the
        // coarse increments are sums of adjacent fine ones, and the doubled
        // domain extends the fine path past L. Coupling removes the
        // Monte Carlo noise from the *difference* of medians (sd(TW₂) ≈ 0.9
        // would otherwise swamp the 0.02 budget), while each marginal stays
        // exactly the right distribution.
        let n_draws = 2000;
        let n_fine = 3200;
        let l = 16.0;
        let coarse = AiryDiscretization::new(l, n_fine / 2, 2.0).unwrap();
        let fine = AiryDiscretization::new(l, n_fine, 2.0).unwrap();
        let wide = AiryDiscretization::new(2.0 * l, 2 * n_fine, 2.0).unwrap();
        let root_dx = fine.dx().sqrt();
        let triples: Vec<[Vec<f64>; 3]> = (0..n_draws)
            .into_par_iter()
            .map(|i| {
                let mut rng = stream_rng(0xa1f7, i as u64);
                let db_wide: Vec<f64> = (0..2 * n_fine)
                    .map(|_| root_dx * rng.sample::<f64, _>(StandardNormal))
                    .collect();
                let db_fine = &db_wide[..n_fine];
                let db_coarse: Vec<f64> =
                    db_fine.chunks(2).map(|c| c[0] + c[1]).collect();
                [
                    eigs_from_increments(&coarse, 3, &db_coarse),
                    eigs_from_increments(&fine, 3, db_fine),
                    eigs_from_increments(&wide, 3, &db_wide),
                ]
            })
            .collect();
        let median_of = |grid: usize, k: usize| -> f64 {
            let mut v: Vec<f64> = triples.iter().map(|t| t[grid][k]).collect();
            v.sort_by(|a, b| a.partial_cmp(b).unwrap());
            0.5 * (v[n_draws / 2 - 1] + v[n_draws / 2])
        };
        for k in 0..3 {
            let (c, f, w) = (median_of(0, k), median_of(1, k), median_of(2, k));
            assert!(
                (c - f).abs() < 0.02,
                "mode {k}: dx halving moved the median {c} -> {f}"
            );
            assert!(
                (f - w).abs() < 0.02,
                "mode {k}: domain doubling moved the median {f} -> {w}"
            );
        }
    }

    #[test]
    #[ignore = "ties the seed-stability tolerance to 1e4 draws; slow"]
    fn tw2_median_is_seed_stable() {
        let d = AiryDiscretization::default_for(2.0).unwrap();
        let mut rng1 = stream_rng(11, 0);
        let mut rng2 = stream_rng(12, 0);
        let t1 = tw_reference_cdf(2.0, 10_000, &d, &mut rng1).unwrap();
        let t2 = tw_reference_cdf(2.0, 10_000, &d, &mut rng2).unwrap();
        assert!(
            (t1.median() - t2.median()).abs() < 0.03,
            "medians {} vs {}",
            t1.median(),
            t2.median()
        );
    }
}
