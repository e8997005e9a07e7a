//! Samplers for the global log-gas, the local conditioned measure, and
//! generalized Wigner spectra.
//!
//! Three routes into the β-ensemble world:
//!
//! * `sample_gbe_tridiag` — the tridiagonal matrix model whose eigenvalues
//!   are *exactly* log-gas distributed for the quadratic potential, at any
//!   β > 0. Cheap (O(N) to build, O(N²) to diagonalize) and exact, so it
//!   doubles as the oracle against which the Markov-chain samplers are
//!   validated.
//! * `sample_loggas_mala` / `sample_local_conditional` — Metropolis-adjusted
//!   Langevin chains on the strictly ordered simplex, for general potentials
//!   and for the window measure conditioned on an external configuration.
//!   Ordering is enforced by rejection: the target density vanishes at
//!   coincidence points, so rejecting disordered proposals preserves the
//!   correct measure.
//! * `sample_generalized_wigner` — dense symmetric/Hermitian matrices with
//!   independent entries under a variance profile with unit row sums.
//!
//! Parallel chains and draws use one RNG stream per worker, derived from the
//! master seed by `rng::stream_seed`; results are assembled in worker order,
//! so output is byte-identical across runs regardless of thread count.

use crate::equilibrium::ClassicalLocations;
use crate::linalg::{hermitian_eigenvalues, SymMat, SymTridiag};
use crate::potentials::{confinement_theta, Potential};
use crate::rng::{chi, stream_rng};
use crate::{Error, Result};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use std::io::{self, Read as IoRead, Write as IoWrite};

/// An ordered point of the N-particle phase space.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticleConfiguration {
    pub lambda: Vec<f64>,
    pub beta: f64,
}

impl ParticleConfiguration {
    /// Validates strict ordering and finiteness.
    pub fn new(lambda: Vec<f64>, beta: f64) -> Result<Self> {
        if !lambda.iter().all(|x| x.is_finite()) {
            return Err(Error::Domain("configuration has non-finite entries".into()));
        }
        if lambda.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Domain("configuration is not strictly ordered".into()));
        }
        if !(beta > 0.0) {
            return Err(Error::Domain(format!("beta must be positive, got {beta}")));
        }
        Ok(Self { lambda, beta })
    }

    pub fn n(&self) -> usize {
        self.lambda.len()
    }
}

/// A reproducible batch of configurations with sampler provenance.
#[derive(Debug, Clone)]
pub struct SampleArchive {
    pub configs: Vec<ParticleConfiguration>,
    pub sampler_id: String,
    pub seed: u64,
    /// Final (post-adaptation) step size; zero for exact samplers.
    pub step_size: f64,
    pub burn_in: usize,
    pub thinning: usize,
    /// Fraction of accepted proposals after burn-in; 1 for exact samplers.
    pub acceptance_rate: f64,
}

impl SampleArchive {
    /// All configs must share N and β.
    pub fn validate(&self) -> Result<()> {
        if let Some(first) = self.configs.first() {
            let (n, beta) = (first.n(), first.beta);
            if self
                .configs
                .iter()
                .any(|c| c.n() != n || c.beta != beta)
            {
                return Err(Error::Domain(
                    "archive mixes configurations of different N or beta".into(),
                ));
            }
        }
        if !(0.0..=1.0).contains(&self.acceptance_rate) {
            return Err(Error::Domain(format!(
                "acceptance rate {} outside [0,1]",
                self.acceptance_rate
            )));
        }
        Ok(())
    }

    /// Pooled view of all eigenvalues (order: config-major).
    pub fn pooled(&self) -> Vec<f64> {
        self.configs
            .iter()
            .flat_map(|c| c.lambda.iter().copied())
            .collect()
    }

    /// Column `k` (0-based) across configs: the marginal of λ_{k+1}.
    pub fn marginal(&self, k: usize) -> Vec<f64> {
        self.configs.iter().map(|c| c.lambda[k]).collect()
    }

    const MAGIC: &'static [u8; 4] = b"LGAS";
    const VERSION: u32 = 1;

    /// Binary container: magic, version, N, β, sampler_id, seed, count,
    /// then count little-endian f64 rows of length N.
    pub fn write_binary(&self, w: &mut impl IoWrite) -> io::Result<()> {
        let n = self.configs.first().map_or(0, |c| c.n());
        let beta = self.configs.first().map_or(0.0, |c| c.beta);
        w.write_all(Self::MAGIC)?;
        w.write_all(&Self::VERSION.to_le_bytes())?;
        w.write_all(&(n as u64).to_le_bytes())?;
        w.write_all(&beta.to_le_bytes())?;
        let id = self.sampler_id.as_bytes();
        w.write_all(&(id.len() as u32).to_le_bytes())?;
        w.write_all(id)?;
        w.write_all(&self.seed.to_le_bytes())?;
        w.write_all(&(self.configs.len() as u64).to_le_bytes())?;
        for c in &self.configs {
            for &x in &c.lambda {
                w.write_all(&x.to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn read_binary(r: &mut impl IoRead) -> Result<Self> {
        let bad = |m: &str| Error::Config(format!("archive: {m}"));
        let mut buf4 = [0u8; 4];
        let mut buf8 = [0u8; 8];
        r.read_exact(&mut buf4).map_err(|e| bad(&e.to_string()))?;
        if &buf4 != Self::MAGIC {
            return Err(bad("bad magic"));
        }
        r.read_exact(&mut buf4).map_err(|e| bad(&e.to_string()))?;
        if u32::from_le_bytes(buf4) != Self::VERSION {
            return Err(bad("unsupported version"));
        }
        r.read_exact(&mut buf8).map_err(|e| bad(&e.to_string()))?;
        let n = u64::from_le_bytes(buf8) as usize;
        r.read_exact(&mut buf8).map_err(|e| bad(&e.to_string()))?;
        let beta = f64::from_le_bytes(buf8);
        r.read_exact(&mut buf4).map_err(|e| bad(&e.to_string()))?;
        let id_len = u32::from_le_bytes(buf4) as usize;
        if id_len > 4096 {
            return Err(bad("sampler id too long"));
        }
        let mut id = vec![0u8; id_len];
        r.read_exact(&mut id).map_err(|e| bad(&e.to_string()))?;
        let sampler_id = String::from_utf8(id).map_err(|_| bad("sampler id not UTF-8"))?;
        r.read_exact(&mut buf8).map_err(|e| bad(&e.to_string()))?;
        let seed = u64::from_le_bytes(buf8);
        r.read_exact(&mut buf8).map_err(|e| bad(&e.to_string()))?;
        let count = u64::from_le_bytes(buf8) as usize;
        let mut configs = Vec::with_capacity(count);
        for _ in 0..count {
            let mut row = vec![0.0; n];
            for x in row.iter_mut() {
                r.read_exact(&mut buf8).map_err(|e| bad(&e.to_string()))?;
                *x = f64::from_le_bytes(buf8);
            }
            configs.push(ParticleConfiguration::new(row, beta)?);
        }
        Ok(SampleArchive {
            configs,
            sampler_id,
            seed,
            step_size: 0.0,
            burn_in: 0,
            thinning: 0,
            acceptance_rate: 1.0,
        })
    }

    /// One line per configuration, comma-separated eigenvalues.
    pub fn write_csv(&self, w: &mut impl IoWrite) -> io::Result<()> {
        for c in &self.configs {
            let mut first = true;
            for &x in &c.lambda {
                if !first {
                    w.write_all(b",")?;
                }
                write!(w, "{x:.17e}")?;
                first = false;
            }
            w.write_all(b"\n")?;
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Tridiagonal β-ensemble
// ---------------------------------------------------------------------------

/// Exact sampler for the Gaussian β-ensemble (V = ½x², any β > 0), scaled so
/// the spectrum concentrates on [−2, 2]: symmetric tridiagonal matrix with
/// diagonal Normal(0, 2/(βN)) and k-th off-diagonal χ_{β(N−k)}/√(βN).
pub fn sample_gbe_tridiag(n: usize, beta: f64, rng: &mut impl Rng) -> ParticleConfiguration {
    assert!(n >= 1 && beta > 0.0);
    let scale = 1.0 / (beta * n as f64).sqrt();
    let diag: Vec<f64> = (0..n)
        .map(|_| {
            let z: f64 = StandardNormal.sample(rng);
            z * std::f64::consts::SQRT_2 * scale
        })
        .collect();
    let off: Vec<f64> = (1..n)
        .map(|k| chi(rng, beta * (n - k) as f64) * scale)
        .collect();
    let mut lambda = SymTridiag::new(diag, off).eigenvalues();
    lambda.sort_by(|a, b| a.partial_cmp(b).unwrap());
    // coincident eigenvalues have probability zero; nudge ties apart so the
    // strict-order invariant holds even in pathological float cases
    for i in 1..lambda.len() {
        if lambda[i] <= lambda[i - 1] {
            lambda[i] = lambda[i - 1] + f64::EPSILON * lambda[i - 1].abs().max(1e-300);
        }
    }
    ParticleConfiguration { lambda, beta }
}

/// Batch of independent tridiagonal draws, one RNG stream per draw, in
/// parallel.
pub fn sample_gbe_archive(n: usize, beta: f64, count: usize, seed: u64) -> SampleArchive {
    let configs: Vec<ParticleConfiguration> = (0..count)
        .into_par_iter()
        .map(|i| sample_gbe_tridiag(n, beta, &mut stream_rng(seed, i as u64)))
        .collect();
    SampleArchive {
        configs,
        sampler_id: "gbe_tridiag".into(),
        seed,
        step_size: 0.0,
        burn_in: 0,
        thinning: 0,
        acceptance_rate: 1.0,
    }
}

// ---------------------------------------------------------------------------
// MALA core
// ---------------------------------------------------------------------------

/// Chain controls. The step size is adapted multiplicatively during burn-in
/// toward acceptance 0.574 and frozen afterwards (adaptation during sampling
/// would break detailed balance).
#[derive(Debug, Clone)]
pub struct MalaSettings {
    pub step_size: f64,
    pub burn_in: usize,
    pub thinning: usize,
    pub n_chains: usize,
    pub adapt: bool,
    /// Starting configuration; default depends on the target.
    pub init: Option<Vec<f64>>,
}

impl Default for MalaSettings {
    fn default() -> Self {
        MalaSettings {
            step_size: 1e-4,
            burn_in: 4000,
            thinning: 10,
            n_chains: 1,
            adapt: true,
            init: None,
        }
    }
}

const MALA_TARGET_ACCEPT: f64 = 0.574;
const ADAPT_WINDOW: usize = 50;
const STALL_FLOOR: f64 = 0.05;

/// Log acceptance ratio of the proposal `y` from `x`, given energies
/// U = −log(target) and their gradients at both points.
pub(crate) fn mala_log_accept(
    x: &[f64],
    y: &[f64],
    ux: f64,
    uy: f64,
    gx: &[f64],
    gy: &[f64],
    tau: f64,
) -> f64 {
    let mut fwd = 0.0; // ‖y − (x − τ∇U(x))‖²
    let mut bwd = 0.0; // ‖x − (y − τ∇U(y))‖²
    for i in 0..x.len() {
        let f = y[i] - x[i] + tau * gx[i];
        let b = x[i] - y[i] + tau * gy[i];
        fwd += f * f;
        bwd += b * b;
    }
    ux - uy + (fwd - bwd) / (4.0 * tau)
}

struct ChainOutput {
    samples: Vec<Vec<f64>>,
    tau: f64,
    acceptance: f64,
}

/// One MALA chain over a generic target. `eval` fills the gradient of −log
/// density and returns its value (up to a constant) in one call — a proposal
/// needs both, and for log-gas targets they share one pairwise sweep. `valid`
/// gates proposals (ordering / domain); invalid proposals are rejected
/// outright.
fn run_mala_chain(
    eval: &(dyn Fn(&[f64], &mut [f64]) -> f64 + Sync),
    valid: &(dyn Fn(&[f64]) -> bool + Sync),
    init: &[f64],
    n_keep: usize,
    settings: &MalaSettings,
    rng: &mut impl Rng,
) -> Result<ChainOutput> {
    assert!(valid(init), "initial configuration violates the domain");
    let k = init.len();
    let mut x = init.to_vec();
    let mut gx = vec![0.0; k];
    let mut ux = eval(&x, &mut gx);
    let mut y = vec![0.0; k];
    let mut gy = vec![0.0; k];
    let mut tau = settings.step_size;
    let mut samples = Vec::with_capacity(n_keep);

    let total = settings.burn_in + n_keep * settings.thinning;
    let mut window_acc = 0usize;
    let mut run_acc = 0usize;
    let mut run_total = 0usize;
    let mut last_window_rate = 1.0;

    for iter in 0..total {
        let in_burn = iter < settings.burn_in;
        let sqrt2t = (2.0 * tau).sqrt();
        for i in 0..k {
            let z: f64 = StandardNormal.sample(rng);
            y[i] = x[i] - tau * gx[i] + sqrt2t * z;
        }
        let mut accept = false;
        if valid(&y) {
            let uy = eval(&y, &mut gy);
            let la = mala_log_accept(&x, &y, ux, uy, &gx, &gy, tau);
            if la >= 0.0 || rng.gen::<f64>() < la.exp() {
                accept = true;
                std::mem::swap(&mut x, &mut y);
                std::mem::swap(&mut gx, &mut gy);
                ux = uy;
            }
        }
        if accept {
            window_acc += 1;
            if !in_burn {
                run_acc += 1;
            }
        }
        if !in_burn {
            run_total += 1;
        }

        if in_burn {
            if settings.adapt && (iter + 1) % ADAPT_WINDOW == 0 {
                let rate = window_acc as f64 / ADAPT_WINDOW as f64;
                last_window_rate = rate;
                tau *= (0.3 * (rate - MALA_TARGET_ACCEPT)).exp();
                tau = tau.clamp(1e-16, 1e2);
                window_acc = 0;
            }
            if iter + 1 == settings.burn_in {
                if settings.adapt && last_window_rate < STALL_FLOOR {
                    return Err(Error::ChainStalled(last_window_rate));
                }
                window_acc = 0;
            }
        } else if (iter + 1 - settings.burn_in) % settings.thinning == 0 {
            samples.push(x.clone());
        }
    }
    let acceptance = if run_total > 0 {
        run_acc as f64 / run_total as f64
    } else {
        last_window_rate
    };
    if run_total >= 200 && acceptance < STALL_FLOOR {
        return Err(Error::ChainStalled(acceptance));
    }
    Ok(ChainOutput {
        samples,
        tau,
        acceptance,
    })
}

/// Runs `n_chains` independent chains in parallel and merges their output in
/// chain order. `per_chain_init` supplies each chain's start.
fn run_mala_parallel(
    eval: &(dyn Fn(&[f64], &mut [f64]) -> f64 + Sync),
    valid: &(dyn Fn(&[f64]) -> bool + Sync),
    init: &[f64],
    n_samples: usize,
    settings: &MalaSettings,
    seed: u64,
) -> Result<(Vec<Vec<f64>>, f64, f64)> {
    let n_chains = settings.n_chains.max(1);
    let per_chain = n_samples.div_ceil(n_chains);
    let outs: Result<Vec<ChainOutput>> = (0..n_chains)
        .into_par_iter()
        .map(|c| {
            run_mala_chain(
                eval,
                valid,
                init,
                per_chain,
                settings,
                &mut stream_rng(seed, c as u64),
            )
        })
        .collect();
    let outs = outs?;
    let tau = outs.iter().map(|o| o.tau).sum::<f64>() / n_chains as f64;
    let acc = outs.iter().map(|o| o.acceptance).sum::<f64>() / n_chains as f64;
    let mut samples = Vec::with_capacity(per_chain * n_chains);
    for o in outs {
        samples.extend(o.samples);
    }
    samples.truncate(n_samples);
    Ok((samples, tau, acc))
}

fn strictly_increasing(x: &[f64]) -> bool {
    x.iter().all(|v| v.is_finite()) && x.windows(2).all(|w| w[0] < w[1])
}

/// Sum of log-gaps over all pairs, with chunked products to amortize `ln`
/// calls (16 gaps per log stays far from the exponent range limits). Kept as
/// the plain reference the fused sweep is tested against.
#[cfg(test)]
fn pairwise_log_sum(x: &[f64]) -> f64 {
    let mut acc = 0.0;
    let mut prod = 1.0f64;
    let mut cnt = 0u32;
    for i in 0..x.len() {
        for j in (i + 1)..x.len() {
            prod *= x[j] - x[i];
            cnt += 1;
            if cnt == 16 {
                acc += prod.ln();
                prod = 1.0;
                cnt = 0;
            }
        }
    }
    if cnt > 0 {
        acc += prod.ln();
    }
    acc
}

/// Interaction part of the gradient: out[i] += Σ_{j≠i} 1/(x_i − x_j) with the
/// sign convention of −∂_i Σ_{a<b} ln(x_b − x_a).
pub(crate) fn pairwise_inv_accumulate(x: &[f64], out: &mut [f64]) {
    for i in 0..x.len() {
        for j in (i + 1)..x.len() {
            let inv = 1.0 / (x[j] - x[i]);
            out[i] += inv;
            out[j] -= inv;
        }
    }
}

/// Fused pairwise pass: accumulates the interaction gradient into `out` (same
/// convention as [`pairwise_inv_accumulate`]) and returns Σ_{i<j} ln(x_j − x_i)
/// in the same sweep. This is the hot path of the MALA samplers — each
/// proposal needs both the energy and its gradient, and gap, reciprocal and
/// log-product all come from one subtraction. Gaps are consumed in blocks of
/// eight so the reciprocals can vectorize; block products are combined as a
/// tree and handed to `ln` once per 32 gaps, which keeps intermediate products
/// of ordered-gap rows far from the exponent limits.
pub(crate) fn pairwise_log_and_inv(x: &[f64], out: &mut [f64]) -> f64 {
    const B: usize = 8;
    let n = x.len();
    let mut logs = 0.0;
    let mut run = 1.0f64;
    let mut run_blocks = 0u32;
    for i in 0..n {
        let xi = x[i];
        let (head, tail) = out.split_at_mut(i + 1);
        let xs = &x[i + 1..];
        let mut gsum = 0.0;
        let mut jb = 0;
        while jb + B <= xs.len() {
            let mut gap = [0.0f64; B];
            let mut rec = [0.0f64; B];
            for k in 0..B {
                gap[k] = xs[jb + k] - xi;
            }
            for k in 0..B {
                rec[k] = 1.0 / gap[k];
            }
            for k in 0..B {
                tail[jb + k] -= rec[k];
            }
            gsum += ((rec[0] + rec[1]) + (rec[2] + rec[3]))
                + ((rec[4] + rec[5]) + (rec[6] + rec[7]));
            run *= ((gap[0] * gap[1]) * (gap[2] * gap[3]))
                * ((gap[4] * gap[5]) * (gap[6] * gap[7]));
            run_blocks += 1;
            if run_blocks == 4 {
                logs += run.ln();
                run = 1.0;
                run_blocks = 0;
            }
            jb += B;
        }
        if jb < xs.len() {
            let mut prod = 1.0f64;
            for k in jb..xs.len() {
                let gap = xs[k] - xi;
                let r = 1.0 / gap;
                prod *= gap;
                gsum += r;
                tail[k] -= r;
            }
            logs += prod.ln();
        }
        head[i] += gsum;
    }
    if run_blocks > 0 {
        logs += run.ln();
    }
    logs
}

// ---------------------------------------------------------------------------
// Global log-gas MALA
// ---------------------------------------------------------------------------

/// Default chain start when none is supplied: equally spaced points across
/// twice the curvature scale of the potential well.
fn default_gas_init(p: &Potential, n: usize) -> Vec<f64> {
    let mut xmin = 0.0;
    let mut vmin = f64::INFINITY;
    for k in 0..=400 {
        let x = -20.0 + 40.0 * k as f64 / 400.0;
        if p.v(x) < vmin {
            vmin = p.v(x);
            xmin = x;
        }
    }
    let ddv = p.ddv(xmin);
    let sigma = if ddv > 0.05 {
        1.0 / ddv.sqrt()
    } else {
        let mut lo = 1e-3;
        let mut hi = 1e3;
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if p.v(xmin + mid) - vmin > 1.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        lo
    };
    (0..n)
        .map(|i| xmin - 2.0 * sigma + 4.0 * sigma * (i as f64 + 0.5) / n as f64)
        .collect()
}

/// MALA chain targeting the global measure ∝ exp(−βN ℋ) on the ordered
/// simplex, ℋ = Σ ½V(λ_k) − (1/N) Σ_{i<j} ln(λ_j − λ_i).
pub fn sample_loggas_mala(
    p: &Potential,
    n: usize,
    beta: f64,
    n_samples: usize,
    settings: &MalaSettings,
    seed: u64,
) -> Result<SampleArchive> {
    if beta < 1.0 {
        return Err(Error::Domain(format!(
            "MALA log-gas sampler requires beta >= 1, got {beta}"
        )));
    }
    if settings.thinning == 0 || settings.burn_in == 0 {
        return Err(Error::Config("burn-in and thinning must be positive".into()));
    }
    let nf = n as f64;
    let eval = move |x: &[f64], g: &mut [f64]| -> f64 {
        let mut u = 0.0;
        for (gi, &xi) in g.iter_mut().zip(x) {
            u += 0.5 * nf * p.v(xi);
            *gi = 0.5 * nf * p.dv(xi);
        }
        let logs = pairwise_log_and_inv(x, g);
        for gi in g.iter_mut() {
            *gi *= beta;
        }
        beta * (u - logs)
    };
    let valid = |x: &[f64]| strictly_increasing(x);
    let init = settings
        .init
        .clone()
        .unwrap_or_else(|| default_gas_init(p, n));
    assert_eq!(init.len(), n);
    let (samples, tau, acc) = run_mala_parallel(&eval, &valid, &init, n_samples, settings, seed)?;
    let configs = samples
        .into_iter()
        .map(|lambda| ParticleConfiguration { lambda, beta })
        .collect();
    Ok(SampleArchive {
        configs,
        sampler_id: "loggas_mala".into(),
        seed,
        step_size: tau,
        burn_in: settings.burn_in,
        thinning: settings.thinning,
        acceptance_rate: acc,
    })
}

// ---------------------------------------------------------------------------
// Local conditioned measure
// ---------------------------------------------------------------------------

/// Specification of the measure on a K-particle window conditioned on the
/// external configuration, with confinement keeping particles near the edge.
///
/// Coordinates are assumed shifted so that the spectral edge the window hangs
/// off sits at the origin (the confinement term references that origin).
#[derive(Debug, Clone)]
pub struct LocalMeasureSpec {
    /// External particles y_{K+1} ≤ … ≤ y_N (length N − K).
    pub y: Vec<f64>,
    pub k: usize,
    pub n: usize,
    /// Rigidity exponent ξ.
    pub xi: f64,
    /// Argument scale of the confinement: Θ(confinement_scale · x_i);
    /// defaults to N^{2/3−ξ}.
    pub confinement_scale: f64,
    /// Interpolation weight r ∈ [0,1]; 0 targets the plain conditioned
    /// measure, 1 the companion measure of the interpolation pair.
    pub r_interp: f64,
}

impl LocalMeasureSpec {
    pub fn new(y: Vec<f64>, k: usize, xi: f64, n: usize) -> Result<Self> {
        if k >= n {
            return Err(Error::Domain(format!("window K = {k} must be < N = {n}")));
        }
        if y.len() != n - k {
            return Err(Error::Domain(format!(
                "external configuration must cover indices K+1..N ({} values, got {})",
                n - k,
                y.len()
            )));
        }
        if y.windows(2).any(|w| w[0] >= w[1]) || !y.iter().all(|v| v.is_finite()) {
            return Err(Error::Domain(
                "external configuration must be finite and strictly increasing".into(),
            ));
        }
        if !(0.0..1.0).contains(&xi) {
            return Err(Error::Domain(format!("xi must lie in [0,1), got {xi}")));
        }
        let confinement_scale = (n as f64).powf(2.0 / 3.0 - xi);
        Ok(LocalMeasureSpec {
            y,
            k,
            n,
            xi,
            confinement_scale,
            r_interp: 0.0,
        })
    }

    pub fn with_r(mut self, r: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&r) {
            return Err(Error::Domain(format!("r must lie in [0,1], got {r}")));
        }
        self.r_interp = r;
        Ok(self)
    }

    /// First external particle: the right end of the window interval J.
    pub fn y_edge(&self) -> f64 {
        self.y[0]
    }
}

/// Energy of the conditioned window measure (−log density up to a constant):
/// external potential V plus the log-repulsion from the external particles,
/// the internal log-gas, and the edge confinement. With an interpolation
/// partner, the single-particle parts are mixed with weights (1−r, r).
/// Reference implementation for test oracles; the samplers run on the fused
/// [`local_energy_grad`].
#[cfg(test)]
pub(crate) fn local_energy(
    x: &[f64],
    lspec: &LocalMeasureSpec,
    p: &Potential,
    tilde: Option<(&LocalMeasureSpec, &Potential)>,
    beta: f64,
) -> f64 {
    let r = lspec.r_interp;
    let nf = lspec.n as f64;
    let mut u = 0.0;
    // weighted single-particle terms: (N/2)V(x_i) − Σ_ext ln(y_j − x_i)
    let mut side = |spec: &LocalMeasureSpec, pot: &Potential, w: f64| {
        if w == 0.0 {
            return;
        }
        let mut s = 0.0;
        for &xi in x {
            s += 0.5 * nf * pot.v(xi);
        }
        let mut prod = 1.0f64;
        let mut cnt = 0u32;
        let mut logs = 0.0;
        for &xi in x {
            for &yj in &spec.y {
                prod *= yj - xi;
                cnt += 1;
                if cnt == 16 {
                    logs += prod.ln();
                    prod = 1.0;
                    cnt = 0;
                }
            }
        }
        if cnt > 0 {
            logs += prod.ln();
        }
        u += w * (s - logs);
    };
    side(lspec, p, 1.0 - r);
    if let Some((ts, tp)) = tilde {
        side(ts, tp, r);
    }
    u -= pairwise_log_sum(x);
    let s = lspec.confinement_scale;
    for &xi in x {
        u += 2.0 * confinement_theta(s * xi, 0);
    }
    beta * u
}

pub(crate) fn local_grad(
    x: &[f64],
    lspec: &LocalMeasureSpec,
    p: &Potential,
    tilde: Option<(&LocalMeasureSpec, &Potential)>,
    beta: f64,
    g: &mut [f64],
) {
    let r = lspec.r_interp;
    let nf = lspec.n as f64;
    g.iter_mut().for_each(|v| *v = 0.0);
    let side = |spec: &LocalMeasureSpec, pot: &Potential, w: f64, g: &mut [f64]| {
        if w == 0.0 {
            return;
        }
        for (gi, &xi) in g.iter_mut().zip(x) {
            let mut ext = 0.0;
            for &yj in &spec.y {
                ext += 1.0 / (yj - xi);
            }
            *gi += w * (0.5 * nf * pot.dv(xi) + ext);
        }
    };
    side(lspec, p, 1.0 - r, g);
    if let Some((ts, tp)) = tilde {
        side(ts, tp, r, g);
    }
    pairwise_inv_accumulate(x, g);
    let s = lspec.confinement_scale;
    for (gi, &xi) in g.iter_mut().zip(x) {
        *gi += 2.0 * s * confinement_theta(s * xi, 1);
        *gi *= beta;
    }
}

/// One sweep over the external points for a single window particle at `xi`:
/// returns (Σ_j ln(y_j − xi), Σ_j 1/(y_j − xi)). Blocked like
/// [`pairwise_log_and_inv`]; the external gas is the bulk of the work in every
/// window-measure evaluation (K·(N−K) pairs against K² internal ones).
fn external_log_and_inv(xi: f64, ys: &[f64]) -> (f64, f64) {
    const B: usize = 8;
    let mut logs = 0.0;
    let mut inv = 0.0;
    let mut run = 1.0f64;
    let mut run_blocks = 0u32;
    let mut jb = 0;
    while jb + B <= ys.len() {
        let mut gap = [0.0f64; B];
        let mut rec = [0.0f64; B];
        for k in 0..B {
            gap[k] = ys[jb + k] - xi;
        }
        for k in 0..B {
            rec[k] = 1.0 / gap[k];
        }
        inv += ((rec[0] + rec[1]) + (rec[2] + rec[3])) + ((rec[4] + rec[5]) + (rec[6] + rec[7]));
        run *= ((gap[0] * gap[1]) * (gap[2] * gap[3])) * ((gap[4] * gap[5]) * (gap[6] * gap[7]));
        run_blocks += 1;
        if run_blocks == 4 {
            logs += run.ln();
            run = 1.0;
            run_blocks = 0;
        }
        jb += B;
    }
    if jb < ys.len() {
        let mut prod = 1.0f64;
        for &yj in &ys[jb..] {
            let gap = yj - xi;
            prod *= gap;
            inv += 1.0 / gap;
        }
        logs += prod.ln();
    }
    if run_blocks > 0 {
        logs += run.ln();
    }
    (logs, inv)
}

/// Fused energy/gradient of the window measure — one pass over the external
/// gas per particle instead of the two that separate [`local_energy`] /
/// [`local_grad`] calls would make. Returns the energy, fills `g`.
pub(crate) fn local_energy_grad(
    x: &[f64],
    lspec: &LocalMeasureSpec,
    p: &Potential,
    tilde: Option<(&LocalMeasureSpec, &Potential)>,
    beta: f64,
    g: &mut [f64],
) -> f64 {
    let r = lspec.r_interp;
    let nf = lspec.n as f64;
    let mut u = 0.0;
    g.iter_mut().for_each(|v| *v = 0.0);
    let mut side = |spec: &LocalMeasureSpec, pot: &Potential, w: f64, g: &mut [f64]| {
        if w == 0.0 {
            return;
        }
        for (gi, &xi) in g.iter_mut().zip(x) {
            let (logs, inv) = external_log_and_inv(xi, &spec.y);
            u += w * (0.5 * nf * pot.v(xi) - logs);
            *gi += w * (0.5 * nf * pot.dv(xi) + inv);
        }
    };
    side(lspec, p, 1.0 - r, g);
    if let Some((ts, tp)) = tilde {
        side(ts, tp, r, g);
    }
    u -= pairwise_log_and_inv(x, g);
    let s = lspec.confinement_scale;
    for (gi, &xi) in g.iter_mut().zip(x) {
        u += 2.0 * confinement_theta(s * xi, 0);
        *gi += 2.0 * s * confinement_theta(s * xi, 1);
        *gi *= beta;
    }
    beta * u
}

/// MALA chain for the window measure conditioned on `lspec.y` (and, when
/// `lspec.r_interp > 0`, interpolated toward the `tilde` pair).
pub fn sample_local_conditional(
    lspec: &LocalMeasureSpec,
    p: &Potential,
    tilde: Option<(&LocalMeasureSpec, &Potential)>,
    beta: f64,
    n_samples: usize,
    settings: &MalaSettings,
    seed: u64,
) -> Result<SampleArchive> {
    if beta < 1.0 {
        return Err(Error::Domain(format!(
            "local conditional sampler requires beta >= 1, got {beta}"
        )));
    }
    if lspec.r_interp > 0.0 && tilde.is_none() {
        return Err(Error::Config(
            "interpolation weight r > 0 needs the companion (spec, potential) pair".into(),
        ));
    }
    if let Some((ts, _)) = tilde {
        if ts.k != lspec.k || ts.n != lspec.n {
            return Err(Error::Config(
                "interpolation partner must share K and N".into(),
            ));
        }
    }
    let k = lspec.k;
    let ceiling = match tilde {
        Some((ts, _)) => lspec.y_edge().min(ts.y_edge()),
        None => lspec.y_edge(),
    };
    let eval = |x: &[f64], g: &mut [f64]| local_energy_grad(x, lspec, p, tilde, beta, g);
    let valid = move |x: &[f64]| strictly_increasing(x) && x[x.len() - 1] < ceiling;

    let init = settings.init.clone().unwrap_or_else(|| {
        // stack the window just below the ceiling, spaced like the first
        // external gaps (falling back to the confinement scale)
        let mut gap = f64::INFINITY;
        for w in lspec.y.windows(2).take(4) {
            gap = gap.min(w[1] - w[0]);
        }
        if !gap.is_finite() || gap <= 0.0 {
            gap = 1.0 / lspec.confinement_scale;
        }
        (0..k)
            .map(|i| ceiling - gap * (k - i) as f64)
            .collect()
    });
    assert_eq!(init.len(), k);
    let (samples, tau, acc) = run_mala_parallel(&eval, &valid, &init, n_samples, settings, seed)?;
    // the chain can never leave J^K: proposals outside are rejected
    for s in &samples {
        assert!(
            s[k - 1] < lspec.y_edge(),
            "internal invariant violation: window particle crossed the boundary"
        );
    }
    let configs = samples
        .into_iter()
        .map(|lambda| ParticleConfiguration { lambda, beta })
        .collect();
    Ok(SampleArchive {
        configs,
        sampler_id: "local_conditional_mala".into(),
        seed,
        step_size: tau,
        burn_in: settings.burn_in,
        thinning: settings.thinning,
        acceptance_rate: acc,
    })
}

// ---------------------------------------------------------------------------
// Boundary classification
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryKind {
    /// Rigidity band: |y_k − γ_k| ≤ N^{−2/3+ξ} k̂^{−1/3} for all external k.
    R,
    /// Rigidity at exponent ξ and ξ/3 plus a minimum first gap
    /// y_{K+2} − y_{K+1} ≥ N^{−2/3−ξ} K^{−1/3}.
    Rsharp,
}

/// Classifies an external configuration `y` (indices K+1..N) as a good
/// boundary condition relative to the classical locations.
pub fn is_good_boundary(
    y: &[f64],
    gammas: &ClassicalLocations,
    xi: f64,
    k: usize,
    kind: BoundaryKind,
) -> bool {
    let n = gammas.n;
    assert_eq!(y.len(), n - k, "y must cover indices K+1..N");
    let within = |ex: f64| -> bool {
        y.iter().enumerate().all(|(idx, &yk)| {
            let kk = k + 1 + idx;
            let khat = kk.min(n + 1 - kk) as f64;
            let bound = (n as f64).powf(-2.0 / 3.0 + ex) * khat.powf(-1.0 / 3.0);
            (yk - gammas.loc(kk)).abs() <= bound
        })
    };
    match kind {
        BoundaryKind::R => within(xi),
        BoundaryKind::Rsharp => {
            let gap_ok = y.len() < 2
                || y[1] - y[0]
                    >= (n as f64).powf(-2.0 / 3.0 - xi) * (k as f64).max(1.0).powf(-1.0 / 3.0);
            within(xi) && within(xi / 3.0) && gap_ok
        }
    }
}

// ---------------------------------------------------------------------------
// Generalized Wigner matrices
// ---------------------------------------------------------------------------

/// Entry variance profile with unit row sums.
#[derive(Debug, Clone)]
pub struct VarianceProfile {
    sigma2: Vec<f64>,
    n: usize,
    /// N·min σ²_{ij} and N·max σ²_{ij}.
    pub c1: f64,
    pub c2: f64,
}

impl VarianceProfile {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn sigma2(&self, i: usize, j: usize) -> f64 {
        self.sigma2[i * self.n + j]
    }

    /// Flat profile σ²_{ij} = 1/N.
    pub fn constant(n: usize) -> Self {
        VarianceProfile {
            sigma2: vec![1.0 / n as f64; n * n],
            n,
            c1: 1.0,
            c2: 1.0,
        }
    }

    /// Two diagonal blocks with in-block variance ∝ v_in and cross-block
    /// ∝ v_cross, rows normalized to 1. Requires even N so normalization
    /// keeps the matrix symmetric.
    pub fn two_band(n: usize, v_in: f64, v_cross: f64) -> Result<Self> {
        if n % 2 != 0 {
            return Err(Error::Config("two-band profile needs even N".into()));
        }
        if v_in <= 0.0 || v_cross <= 0.0 {
            return Err(Error::Config("band variances must be positive".into()));
        }
        let h = n / 2;
        let row_sum = h as f64 * (v_in + v_cross);
        let mut sigma2 = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                let same = (i < h) == (j < h);
                sigma2[i * n + j] = if same { v_in } else { v_cross } / row_sum;
            }
        }
        Self::from_matrix(sigma2, n)
    }

    /// Validates symmetry, nonnegativity, and unit row sums.
    pub fn from_matrix(sigma2: Vec<f64>, n: usize) -> Result<Self> {
        if sigma2.len() != n * n {
            return Err(Error::Config("profile matrix has wrong size".into()));
        }
        let mut lo = f64::INFINITY;
        let mut hi = 0.0f64;
        for i in 0..n {
            let mut row = 0.0;
            for j in 0..n {
                let v = sigma2[i * n + j];
                if v < 0.0 || (v - sigma2[j * n + i]).abs() > 1e-15 {
                    return Err(Error::Config(
                        "profile must be symmetric and nonnegative".into(),
                    ));
                }
                row += v;
                lo = lo.min(v);
                hi = hi.max(v);
            }
            if (row - 1.0).abs() > 1e-10 {
                return Err(Error::Config(format!(
                    "profile row {i} sums to {row}, expected 1"
                )));
            }
        }
        Ok(VarianceProfile {
            sigma2,
            n,
            c1: lo * n as f64,
            c2: hi * n as f64,
        })
    }
}

/// Mean-zero, unit-variance entry distributions with subexponential tails.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EntryDist {
    Gaussian,
    /// ±1 with probability ½ each.
    Bernoulli,
    /// Two-sided exponential scaled to unit variance.
    Laplace,
}

impl EntryDist {
    fn draw(&self, rng: &mut impl Rng) -> f64 {
        match self {
            EntryDist::Gaussian => StandardNormal.sample(rng),
            EntryDist::Bernoulli => {
                if rng.gen::<bool>() {
                    1.0
                } else {
                    -1.0
                }
            }
            EntryDist::Laplace => {
                let u: f64 = rng.gen::<f64>() - 0.5;
                let b = 1.0 / std::f64::consts::SQRT_2;
                -b * u.signum() * (1.0 - 2.0 * u.abs()).max(f64::MIN_POSITIVE).ln()
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatrixSymmetry {
    RealSymmetric,
    Hermitian,
}

/// Draws one generalized Wigner matrix under the profile and returns its
/// sorted spectrum (Householder + implicit QL; Hermitian via the 2N×2N real
/// embedding). β metadata is 1 for real symmetric, 2 for Hermitian.
pub fn sample_generalized_wigner(
    profile: &VarianceProfile,
    dist: EntryDist,
    symmetry: MatrixSymmetry,
    rng: &mut impl Rng,
) -> Result<ParticleConfiguration> {
    let n = profile.n();
    let mut lambda = match symmetry {
        MatrixSymmetry::RealSymmetric => {
            let mut m = SymMat::zeros(n);
            for i in 0..n {
                for j in i..n {
                    m.set_sym(i, j, profile.sigma2(i, j).sqrt() * dist.draw(rng));
                }
            }
            m.eigenvalues()
        }
        MatrixSymmetry::Hermitian => {
            let mut re = vec![0.0; n * n];
            let mut im = vec![0.0; n * n];
            for i in 0..n {
                for j in i..n {
                    let s = profile.sigma2(i, j).sqrt();
                    if i == j {
                        re[i * n + i] = s * dist.draw(rng);
                    } else {
                        let a = s * dist.draw(rng) / std::f64::consts::SQRT_2;
                        let b = s * dist.draw(rng) / std::f64::consts::SQRT_2;
                        re[i * n + j] = a;
                        re[j * n + i] = a;
                        im[i * n + j] = b;
                        im[j * n + i] = -b;
                    }
                }
            }
            hermitian_eigenvalues(&re, &im, n)
        }
    };
    lambda.sort_by(|a, b| a.partial_cmp(b).unwrap());
    for i in 1..lambda.len() {
        if lambda[i] <= lambda[i - 1] {
            lambda[i] = lambda[i - 1] + f64::EPSILON * lambda[i - 1].abs().max(1e-300);
        }
    }
    let beta = match symmetry {
        MatrixSymmetry::RealSymmetric => 1.0,
        MatrixSymmetry::Hermitian => 2.0,
    };
    Ok(ParticleConfiguration { lambda, beta })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equilibrium::{classical_locations, solve_equilibrium};
    use crate::statistics::ks_distance;

    #[test]
    fn fused_pairwise_pass_matches_separate_kernels() {
        // the blocked single-sweep kernel must agree with the two plain ones
        // (up to reassociation) on sizes hitting every block/remainder branch
        for (case, n) in [1usize, 2, 7, 8, 9, 31, 40, 137, 500].iter().enumerate() {
            let mut rng = stream_rng(42, case as u64);
            let mut x: Vec<f64> = (0..*n).map(|_| 4.0 * rng.gen::<f64>() - 2.0).collect();
            x.sort_by(|a, b| a.partial_cmp(b).unwrap());
            x.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
            let m = x.len();
            let mut g_fused = vec![0.0; m];
            let logs_fused = pairwise_log_and_inv(&x, &mut g_fused);
            let logs_plain = pairwise_log_sum(&x);
            let mut g_plain = vec![0.0; m];
            pairwise_inv_accumulate(&x, &mut g_plain);
            assert!(
                (logs_fused - logs_plain).abs() <= 1e-9 * (1.0 + logs_plain.abs()),
                "n = {m}: log sums {logs_fused} vs {logs_plain}"
            );
            for i in 0..m {
                assert!(
                    (g_fused[i] - g_plain[i]).abs() <= 1e-9 * (1.0 + g_plain[i].abs()),
                    "n = {m}, i = {i}: {} vs {}",
                    g_fused[i],
                    g_plain[i]
                );
            }
        }
    }

    #[test]
    fn fused_window_eval_matches_separate_kernels() {
        let n = 60;
        let k = 3;
        let mut rng = stream_rng(43, 0);
        let mut y: Vec<f64> = (0..n - k).map(|i| 0.02 * i as f64 + 0.01 * rng.gen::<f64>()).collect();
        y.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let p = Potential::quadratic(1.0);
        let pt = Potential::quartic();
        let lspec = LocalMeasureSpec::new(y.clone(), k, 0.1, n)
            .unwrap()
            .with_r(0.3)
            .unwrap();
        let tspec = LocalMeasureSpec::new(y, k, 0.1, n).unwrap();
        let beta = 2.0;
        let x = [-0.31, -0.17, -0.02];
        for tilde in [None, Some((&tspec, &pt))] {
            let lspec = if tilde.is_none() {
                &tspec // r = 0 without a partner
            } else {
                &lspec
            };
            let mut g_fused = vec![0.0; k];
            let u_fused = local_energy_grad(&x, lspec, &p, tilde, beta, &mut g_fused);
            let u_plain = local_energy(&x, lspec, &p, tilde, beta);
            let mut g_plain = vec![0.0; k];
            local_grad(&x, lspec, &p, tilde, beta, &mut g_plain);
            assert!(
                (u_fused - u_plain).abs() <= 1e-9 * (1.0 + u_plain.abs()),
                "energy {u_fused} vs {u_plain}"
            );
            for i in 0..k {
                assert!(
                    (g_fused[i] - g_plain[i]).abs() <= 1e-9 * (1.0 + g_plain[i].abs()),
                    "i = {i}: {} vs {}",
                    g_fused[i],
                    g_plain[i]
                );
            }
        }
    }

    #[test]
    fn tridiag_n1_is_gaussian() {
        let mut rng = stream_rng(7, 0);
        let m = 100_000;
        let mut sum = 0.0;
        let mut sq = 0.0;
        for _ in 0..m {
            let c = sample_gbe_tridiag(1, 2.0, &mut rng);
            sum += c.lambda[0];
            sq += c.lambda[0] * c.lambda[0];
        }
        let mean = sum / m as f64;
        let var = sq / m as f64 - mean * mean;
        // variance 2/(βN) = 1
        assert!((var - 1.0).abs() < 0.03, "var = {var}");
        assert!(mean.abs() < 0.02);
    }

    #[test]
    fn tridiag_second_moment_matches_semicircle() {
        // ∫ x² ϱ_sc = 1
        for beta in [1.0, 2.0, 4.0] {
            let mut acc = 0.0;
            for s in 0..5 {
                let c = sample_gbe_tridiag(1000, beta, &mut stream_rng(11, s));
                acc += c.lambda.iter().map(|x| x * x).sum::<f64>() / 1000.0;
            }
            let m2 = acc / 5.0;
            assert!((m2 - 1.0).abs() < 0.02, "beta {beta}: second moment {m2}");
        }
    }

    #[test]
    fn tridiag_n2_gap_matches_exact_density() {
        // for N=2, β=2, V=½x² the gap has density ∝ g² e^{−g²/2}; its CDF is
        // erf(g/√2) − √(2/π) g e^{−g²/2}
        let mut rng = stream_rng(3, 0);
        let m = 100_000;
        let mut gaps: Vec<f64> = (0..m)
            .map(|_| {
                let c = sample_gbe_tridiag(2, 2.0, &mut rng);
                c.lambda[1] - c.lambda[0]
            })
            .collect();
        gaps.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let erf = |x: f64| {
            // Abramowitz–Stegun 7.1.26, |error| < 1.5e-7
            let t = 1.0 / (1.0 + 0.3275911 * x.abs());
            let poly = t
                * (0.254829592
                    + t * (-0.284496736 + t * (1.421413741 + t * (-1.453152027 + t * 1.061405429))));
            (1.0 - poly * (-x * x).exp()).copysign(x)
        };
        let cdf = |g: f64| {
            erf(g / std::f64::consts::SQRT_2)
                - (2.0 / std::f64::consts::PI).sqrt() * g * (-0.5 * g * g).exp()
        };
        let mut ks: f64 = 0.0;
        for (i, &g) in gaps.iter().enumerate() {
            let f = cdf(g);
            ks = ks.max((f - i as f64 / m as f64).abs());
            ks = ks.max((f - (i + 1) as f64 / m as f64).abs());
        }
        assert!(ks < 0.02, "KS = {ks}");
    }

    #[test]
    fn zero_displacement_proposal_is_certain() {
        let x = [0.0, 0.7, 1.9];
        let g = [0.3, -0.2, 4.0];
        let la = mala_log_accept(&x, &x, 5.0, 5.0, &g, &g, 1e-3);
        assert_eq!(la, 0.0);
    }

    #[test]
    fn mala_two_particle_marginal_matches_quadrature() {
        // N=2, β=2, V=½x²: joint ∝ (λ₂−λ₁)² e^{−λ₁²−λ₂²}; integrate out λ₂
        // on a grid to get the λ₁ CDF oracle
        let p = Potential::gaussian();
        let settings = MalaSettings {
            step_size: 0.05,
            burn_in: 4000,
            thinning: 20,
            n_chains: 2,
            adapt: true,
            init: Some(vec![-0.5, 0.5]),
        };
        let arch = sample_loggas_mala(&p, 2, 2.0, 20_000, &settings, 42).unwrap();
        assert!(arch.acceptance_rate > 0.3, "acc {}", arch.acceptance_rate);
        let mut lam1 = arch.marginal(0);
        lam1.sort_by(|a, b| a.partial_cmp(b).unwrap());

        // marginal density on a grid, then cumulative by trapezoid
        let grid: Vec<f64> = (0..1200).map(|i| -4.0 + 6.0 * i as f64 / 1199.0).collect();
        let dens: Vec<f64> = grid
            .iter()
            .map(|&a| {
                let mut s = 0.0;
                let m = 600;
                for j in 0..m {
                    let b = a + 8.0 * (j as f64 + 0.5) / m as f64;
                    s += (b - a) * (b - a) * (-a * a - b * b).exp();
                }
                s * 8.0 / m as f64
            })
            .collect();
        let mut cum = vec![0.0; grid.len()];
        for i in 1..grid.len() {
            cum[i] = cum[i - 1] + 0.5 * (dens[i] + dens[i - 1]) * (grid[i] - grid[i - 1]);
        }
        let total = cum[grid.len() - 1];
        let cdf = |x: f64| -> f64 {
            let i = grid.partition_point(|&g| g < x);
            if i == 0 {
                0.0
            } else if i >= grid.len() {
                1.0
            } else {
                let f = (x - grid[i - 1]) / (grid[i] - grid[i - 1]);
                (cum[i - 1] + f * (cum[i] - cum[i - 1])) / total
            }
        };
        let m = lam1.len();
        let mut ks: f64 = 0.0;
        for (i, &v) in lam1.iter().enumerate() {
            let f = cdf(v);
            ks = ks.max((f - i as f64 / m as f64).abs());
            ks = ks.max((f - (i + 1) as f64 / m as f64).abs());
        }
        assert!(ks < 0.02, "KS = {ks}");
    }

    #[test]
    fn chains_are_reproducible() {
        let p = Potential::gaussian();
        let s = MalaSettings {
            step_size: 0.01,
            burn_in: 500,
            thinning: 5,
            n_chains: 3,
            adapt: true,
            init: None,
        };
        let a = sample_loggas_mala(&p, 10, 2.0, 60, &s, 9).unwrap();
        let b = sample_loggas_mala(&p, 10, 2.0, 60, &s, 9).unwrap();
        assert_eq!(a.configs, b.configs);
        let c = sample_loggas_mala(&p, 10, 2.0, 60, &s, 10).unwrap();
        assert_ne!(a.configs, c.configs);
        // tridiagonal batch likewise
        let t1 = sample_gbe_archive(20, 2.0, 8, 5);
        let t2 = sample_gbe_archive(20, 2.0, 8, 5);
        assert_eq!(t1.configs, t2.configs);
    }

    #[test]
    fn interpolation_endpoints_recover_each_measure() {
        let p = Potential::gaussian();
        let pt = Potential::quartic();
        let n = 40;
        let k = 3;
        let y: Vec<f64> = (0..n - k).map(|i| 0.1 + 0.05 * i as f64).collect();
        let yt: Vec<f64> = (0..n - k).map(|i| 0.12 + 0.05 * i as f64).collect();
        let s0 = LocalMeasureSpec::new(y.clone(), k, 0.1, n).unwrap();
        let st = LocalMeasureSpec::new(yt, k, 0.1, n).unwrap();
        let x = [-0.03, 0.01, 0.05];
        let beta = 2.0;

        let plain = local_energy(&x, &s0, &p, None, beta);
        let r0 = s0.clone().with_r(0.0).unwrap();
        let at0 = local_energy(&x, &r0, &p, Some((&st, &pt)), beta);
        assert!((plain - at0).abs() < 1e-12);

        let tilde_plain = {
            let mut st1 = st.clone();
            st1.confinement_scale = s0.confinement_scale;
            local_energy(&x, &st1, &pt, None, beta)
        };
        let r1 = s0.clone().with_r(1.0).unwrap();
        let at1 = local_energy(&x, &r1, &p, Some((&st, &pt)), beta);
        assert!((tilde_plain - at1).abs() < 1e-12, "{tilde_plain} vs {at1}");
    }

    #[test]
    fn local_gradient_matches_finite_differences() {
        let p = Potential::quartic();
        let n = 30;
        let k = 4;
        let y: Vec<f64> = (0..n - k).map(|i| 0.2 + 0.07 * i as f64).collect();
        let spec = LocalMeasureSpec::new(y, k, 0.15, n).unwrap();
        let x = [-0.4, -0.1, 0.02, 0.1];
        let beta = 1.5;
        let mut g = vec![0.0; k];
        local_grad(&x, &spec, &p, None, beta, &mut g);
        for i in 0..k {
            let h = 1e-6;
            let mut xp = x.to_vec();
            let mut xm = x.to_vec();
            xp[i] += h;
            xm[i] -= h;
            let fd = (local_energy(&xp, &spec, &p, None, beta)
                - local_energy(&xm, &spec, &p, None, beta))
                / (2.0 * h);
            assert!((g[i] - fd).abs() < 1e-4 * fd.abs().max(1.0), "i={i}");
        }
    }

    #[test]
    fn global_gradient_matches_finite_differences() {
        let p = Potential::quartic();
        let beta = 2.0;
        let n = 6;
        let x = [-1.1, -0.6, -0.1, 0.3, 0.8, 1.3];
        let nf = n as f64;
        let energy = |x: &[f64]| -> f64 {
            let mut u = 0.0;
            for &xi in x {
                u += 0.5 * nf * p.v(xi);
            }
            beta * (u - pairwise_log_sum(x))
        };
        let mut g = vec![0.0; n];
        for (gi, &xi) in g.iter_mut().zip(&x) {
            *gi = 0.5 * nf * p.dv(xi);
        }
        pairwise_inv_accumulate(&x, &mut g);
        for gi in g.iter_mut() {
            *gi *= beta;
        }
        for i in 0..n {
            let h = 1e-6;
            let mut xp = x.to_vec();
            let mut xm = x.to_vec();
            xp[i] += h;
            xm[i] -= h;
            let fd = (energy(&xp) - energy(&xm)) / (2.0 * h);
            assert!((g[i] - fd).abs() < 1e-5 * fd.abs().max(1.0), "i={i}");
        }
    }

    #[test]
    fn good_boundary_classification() {
        let meas = solve_equilibrium(&Potential::gaussian(), 1e-10).unwrap();
        let n = 400;
        let k = 16;
        let xi = 0.1;
        let gam = classical_locations(&meas, n);
        let nf = n as f64;

        // y = γ exactly
        let y: Vec<f64> = (k..n).map(|i| gam.gamma[i]).collect();
        assert!(is_good_boundary(&y, &gam, xi, k, BoundaryKind::R));
        assert!(is_good_boundary(&y, &gam, xi, k, BoundaryKind::Rsharp));

        // displace y_{K+1} by twice its allowance
        let mut y2 = y.clone();
        y2[0] -= 2.0 * nf.powf(-2.0 / 3.0 + xi) * ((k + 1) as f64).powf(-1.0 / 3.0);
        assert!(!is_good_boundary(&y2, &gam, xi, k, BoundaryKind::R));

        // squeeze the first external gap below the repulsion floor
        let mut y3 = y.clone();
        y3[1] = y3[0] + 0.5 * nf.powf(-2.0 / 3.0 - xi) * (k as f64).powf(-1.0 / 3.0);
        assert!(!is_good_boundary(&y3, &gam, xi, k, BoundaryKind::Rsharp));
    }

    #[test]
    fn wigner_single_entry() {
        let prof = VarianceProfile::constant(1);
        let mut rng = stream_rng(1, 0);
        let c =
            sample_generalized_wigner(&prof, EntryDist::Gaussian, MatrixSymmetry::RealSymmetric, &mut rng)
                .unwrap();
        assert_eq!(c.n(), 1);
        assert!(c.lambda[0].abs() < 10.0);
    }

    #[test]
    fn two_band_profile_rows_sum_to_one() {
        let prof = VarianceProfile::two_band(10, 3.0, 1.0).unwrap();
        for i in 0..10 {
            let s: f64 = (0..10).map(|j| prof.sigma2(i, j)).sum();
            assert!((s - 1.0).abs() < 1e-12);
        }
        assert!(prof.c1 < prof.c2);
        assert!(VarianceProfile::two_band(7, 3.0, 1.0).is_err());
    }

    #[test]
    fn bad_profile_rejected() {
        let n = 4;
        let sigma2 = vec![0.3; n * n]; // rows sum to 1.2
        assert!(matches!(
            VarianceProfile::from_matrix(sigma2, n),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn entry_distributions_have_unit_variance() {
        let mut rng = stream_rng(2, 0);
        for dist in [EntryDist::Gaussian, EntryDist::Bernoulli, EntryDist::Laplace] {
            let m = 200_000;
            let mut s = 0.0;
            let mut s2 = 0.0;
            for _ in 0..m {
                let v = dist.draw(&mut rng);
                s += v;
                s2 += v * v;
            }
            let mean = s / m as f64;
            let var = s2 / m as f64 - mean * mean;
            assert!(mean.abs() < 0.01, "{dist:?} mean {mean}");
            assert!((var - 1.0).abs() < 0.02, "{dist:?} var {var}");
        }
    }

    #[test]
    fn hermitian_wigner_semicircle_moment() {
        // quick sanity on the complex path: second spectral moment → 1
        let prof = VarianceProfile::constant(120);
        let mut acc = 0.0;
        let draws = 20;
        for s in 0..draws {
            let c = sample_generalized_wigner(
                &prof,
                EntryDist::Gaussian,
                MatrixSymmetry::Hermitian,
                &mut stream_rng(8, s),
            )
            .unwrap();
            assert_eq!(c.n(), 120);
            acc += c.lambda.iter().map(|x| x * x).sum::<f64>() / 120.0;
        }
        let m2 = acc / draws as f64;
        assert!((m2 - 1.0).abs() < 0.05, "second moment {m2}");
    }

    #[test]
    fn archive_binary_round_trip() {
        let arch = sample_gbe_archive(17, 2.0, 9, 33);
        let mut buf = Vec::new();
        arch.write_binary(&mut buf).unwrap();
        let back = SampleArchive::read_binary(&mut buf.as_slice()).unwrap();
        assert_eq!(back.configs, arch.configs);
        assert_eq!(back.sampler_id, arch.sampler_id);
        assert_eq!(back.seed, arch.seed);
        // csv emits one row per config
        let mut csv = Vec::new();
        arch.write_csv(&mut csv).unwrap();
        let text = String::from_utf8(csv).unwrap();
        assert_eq!(text.lines().count(), 9);
        assert_eq!(text.lines().next().unwrap().split(',').count(), 17);
    }

    #[test]
    fn pooled_and_ks_plumbing() {
        let a = sample_gbe_archive(5, 2.0, 4, 1);
        assert_eq!(a.pooled().len(), 20);
        assert_eq!(a.marginal(4).len(), 4);
        a.validate().unwrap();
        // degenerate KS example: {0,1} vs {0,1,2}
        let d = ks_distance(&[0.0, 1.0], &[0.0, 1.0, 2.0]);
        assert!((d - 1.0 / 3.0).abs() < 1e-12);
    }
}
