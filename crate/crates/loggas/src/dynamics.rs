//! Dyson Brownian motion integrators, the coupling matrix of the
//! random-walk representation, heat-flow evolution, and the Monte Carlo
//! checks built on top of them.
//!
//! Global paths run in the spectral coordinates of the ensemble. Everything
//! local — the conditioned window dynamics, coupling matrices, and the
//! representation check — works at the microscopic `N^{2/3}` magnification
//! of edge-shifted coordinates, where gaps and drifts are O(1) and time is
//! measured in local relaxation units. States are still *stored* in the
//! edge-shifted (macroscopic) coordinates of [`LocalMeasureSpec`] so they
//! compose with the samplers' archives; the integrators convert internally.

use crate::potentials::{confinement_theta, Potential};
use crate::rng::stream_rng;
use crate::samplers::{
    local_grad, pairwise_inv_accumulate, sample_local_conditional, LocalMeasureSpec,
    MalaSettings, ParticleConfiguration,
};
use crate::{Error, Result};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

/// Cap on stored snapshots per path; `dt_history` always keeps every step.
const MAX_SNAPSHOTS: usize = 4096;

/// One realized diffusion path: snapshot states along strictly increasing
/// times, the full sequence of accepted step sizes, and how many times a
/// step had to be halved to preserve the particle ordering.
#[derive(Debug, Clone)]
pub struct DbmPath {
    pub times: Vec<f64>,
    pub states: Vec<ParticleConfiguration>,
    pub dt_history: Vec<f64>,
    pub collisions_avoided: usize,
}

impl DbmPath {
    pub fn final_state(&self) -> &ParticleConfiguration {
        self.states.last().expect("a path always stores its endpoint")
    }

    /// Index of the stored state closest in time to `t`.
    fn nearest_index(&self, t: f64) -> usize {
        match self.times.binary_search_by(|v| v.partial_cmp(&t).unwrap()) {
            Ok(i) => i,
            Err(i) => {
                if i == 0 {
                    0
                } else if i >= self.times.len() {
                    self.times.len() - 1
                } else if t - self.times[i - 1] <= self.times[i] - t {
                    i - 1
                } else {
                    i
                }
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Global DBM
// ---------------------------------------------------------------------------

fn global_drift(lambda: &[f64], p: &Potential, beta: f64, drift: &mut [f64]) {
    let n = lambda.len() as f64;
    drift.iter_mut().for_each(|d| *d = 0.0);
    pairwise_inv_accumulate(lambda, drift);
    for (d, &l) in drift.iter_mut().zip(lambda) {
        // pairwise_inv_accumulate returns ∂_i of −Σ ln gaps, i.e. minus the
        // repulsion sum, hence the sign flip
        *d = -0.25 * beta * p.dv(l) - 0.5 * beta / n * *d;
    }
}

fn is_strictly_increasing(x: &[f64]) -> Option<usize> {
    if let Some(bad) = x.iter().position(|v| !v.is_finite()) {
        return Some(bad);
    }
    x.windows(2).position(|w| w[0] >= w[1])
}

struct PathRecorder {
    times: Vec<f64>,
    states: Vec<ParticleConfiguration>,
    dt_history: Vec<f64>,
    stride: usize,
    steps_done: usize,
    beta: f64,
}

impl PathRecorder {
    fn new(init: &ParticleConfiguration, est_steps: usize) -> Self {
        PathRecorder {
            times: vec![0.0],
            states: vec![init.clone()],
            dt_history: Vec::new(),
            stride: est_steps.div_ceil(MAX_SNAPSHOTS).max(1),
            steps_done: 0,
            beta: init.beta,
        }
    }

    fn record(&mut self, t: f64, x: &[f64], h: f64) -> Result<()> {
        self.dt_history.push(h);
        self.steps_done += 1;
        if self.steps_done % self.stride == 0 {
            self.times.push(t);
            self.states
                .push(ParticleConfiguration::new(x.to_vec(), self.beta)?);
        }
        Ok(())
    }

    fn finish(mut self, t: f64, x: &[f64], collisions: usize) -> Result<DbmPath> {
        if *self.times.last().unwrap() < t {
            self.times.push(t);
            self.states
                .push(ParticleConfiguration::new(x.to_vec(), self.beta)?);
        }
        Ok(DbmPath {
            times: self.times,
            states: self.states,
            dt_history: self.dt_history,
            collisions_avoided: collisions,
        })
    }
}

/// Euler–Maruyama for the global eigenvalue diffusion
/// `dλ_i = dB_i/√N + [−(β/4)V'(λ_i) + (β/2N)Σ_{j≠i} 1/(λ_i−λ_j)] dt`,
/// stationary at the β-ensemble with potential `p`. A step that would break
/// the strict ordering is retried with fresh noise at half the size, up to
/// 20 halvings.
pub fn integrate_dbm_global<R: Rng>(
    init: &ParticleConfiguration,
    p: &Potential,
    t_final: f64,
    dt: f64,
    rng: &mut R,
) -> Result<DbmPath> {
    integrate_dbm_global_scaled(init, p, t_final, dt, 1.0, rng)
}

/// Zero-noise test hook shares the stepping core with the public integrator.
pub(crate) fn integrate_dbm_global_scaled<R: Rng>(
    init: &ParticleConfiguration,
    p: &Potential,
    t_final: f64,
    dt: f64,
    noise_scale: f64,
    rng: &mut R,
) -> Result<DbmPath> {
    if init.beta < 1.0 {
        return Err(Error::Domain(format!(
            "global DBM needs beta >= 1, got {}",
            init.beta
        )));
    }
    if !(dt > 0.0 && dt.is_finite()) || !(t_final >= 0.0 && t_final.is_finite()) {
        return Err(Error::Domain(format!(
            "need dt > 0 and T >= 0, got dt = {dt}, T = {t_final}"
        )));
    }
    let n = init.n();
    let inv_sqrt_n = (n as f64).sqrt().recip() * noise_scale;
    let mut x = init.lambda.clone();
    let mut prop = vec![0.0; n];
    let mut drift = vec![0.0; n];
    let mut rec = PathRecorder::new(init, (t_final / dt).ceil() as usize);
    let mut collisions = 0usize;
    let mut t = 0.0;
    while t < t_final {
        global_drift(&x, p, init.beta, &mut drift);
        let mut h = dt.min(t_final - t);
        let mut halvings = 0;
        loop {
            let root_h = h.sqrt() * inv_sqrt_n;
            for i in 0..n {
                let z: f64 = rng.sample(StandardNormal);
                prop[i] = x[i] + drift[i] * h + root_h * z;
            }
            match is_strictly_increasing(&prop) {
                None => break,
                Some(index) => {
                    halvings += 1;
                    collisions += 1;
                    if halvings > 20 {
                        return Err(Error::StepCollapse { t, index });
                    }
                    h *= 0.5;
                }
            }
        }
        std::mem::swap(&mut x, &mut prop);
        t += h;
        rec.record(t, &x, h)?;
    }
    rec.finish(t, &x, collisions)
}

// ---------------------------------------------------------------------------
// Local SDE
// ---------------------------------------------------------------------------

fn validate_local_pair(
    lspec: &LocalMeasureSpec,
    tilde: Option<(&LocalMeasureSpec, &Potential)>,
) -> Result<f64> {
    if lspec.r_interp > 0.0 && tilde.is_none() {
        return Err(Error::Config(
            "interpolation weight r > 0 needs the companion measure".into(),
        ));
    }
    if let Some((ts, _)) = tilde {
        if ts.k != lspec.k || ts.n != lspec.n {
            return Err(Error::Config(format!(
                "interpolation partners must share (K, N): ({}, {}) vs ({}, {})",
                lspec.k, lspec.n, ts.k, ts.n
            )));
        }
    }
    Ok(match tilde {
        Some((ts, _)) => lspec.y_edge().min(ts.y_edge()),
        None => lspec.y_edge(),
    })
}

/// Euler–Maruyama for the conditioned window diffusion, stationary at the
/// measure described by `lspec` (interpolated toward `tilde` when
/// `r_interp > 0`).
///
/// `init` and the returned states are in the edge-shifted coordinates of
/// `lspec`; `t_final` and `dt` are in *microscopic* time units (the scale on
/// which the window relaxes in O(K^{1/3})). Ordering violations and
/// excursions past the first external particle are retried at half the step.
pub fn integrate_local_sde<R: Rng>(
    lspec: &LocalMeasureSpec,
    p: &Potential,
    tilde: Option<(&LocalMeasureSpec, &Potential)>,
    init: &ParticleConfiguration,
    t_final: f64,
    dt: f64,
    rng: &mut R,
) -> Result<DbmPath> {
    if init.beta < 1.0 {
        return Err(Error::Domain(format!(
            "the local diffusion needs beta >= 1, got {}",
            init.beta
        )));
    }
    if !(dt > 0.0 && dt.is_finite()) || !(t_final >= 0.0 && t_final.is_finite()) {
        return Err(Error::Domain(format!(
            "need dt > 0 and T >= 0, got dt = {dt}, T = {t_final}"
        )));
    }
    if init.n() != lspec.k {
        return Err(Error::Domain(format!(
            "initial state has {} particles, window expects {}",
            init.n(),
            lspec.k
        )));
    }
    let ceiling = validate_local_pair(lspec, tilde)?;
    if *init.lambda.last().unwrap() >= ceiling {
        return Err(Error::Domain(format!(
            "initial state reaches past the first external particle at {ceiling}"
        )));
    }
    let k = lspec.k;
    let nf = lspec.n as f64;
    // macroscopic update for one microscopic time step h:
    //   x += −½ N^{−4/3} ∇H h + N^{−2/3} √h ξ
    let drift_scale = -0.5 * nf.powf(-4.0 / 3.0);
    let noise_scale = nf.powf(-2.0 / 3.0);
    let mut x = init.lambda.clone();
    let mut prop = vec![0.0; k];
    let mut grad = vec![0.0; k];
    let mut rec = PathRecorder::new(init, (t_final / dt).ceil() as usize);
    let mut collisions = 0usize;
    let mut t = 0.0;
    while t < t_final {
        local_grad(&x, lspec, p, tilde, init.beta, &mut grad);
        let mut h = dt.min(t_final - t);
        let mut halvings = 0;
        loop {
            let root_h = h.sqrt() * noise_scale;
            for i in 0..k {
                let z: f64 = rng.sample(StandardNormal);
                prop[i] = x[i] + drift_scale * grad[i] * h + root_h * z;
            }
            let violation = match is_strictly_increasing(&prop) {
                Some(index) => Some(index),
                None if *prop.last().unwrap() >= ceiling => Some(k - 1),
                None => None,
            };
            match violation {
                None => break,
                Some(index) => {
                    halvings += 1;
                    collisions += 1;
                    if halvings > 20 {
                        return Err(Error::StepCollapse { t, index });
                    }
                    h *= 0.5;
                }
            }
        }
        std::mem::swap(&mut x, &mut prop);
        t += h;
        rec.record(t, &x, h)?;
    }
    rec.finish(t, &x, collisions)
}

// ---------------------------------------------------------------------------
// Coupling matrix
// ---------------------------------------------------------------------------

/// The K×K operator 𝒜 = ℬ + 𝒲 of the random-walk representation, in
/// microscopic units: ℬ acts as a graph Laplacian,
/// `[ℬu]_i = Σ_j B_ij (u_i − u_j)`, and 𝒲 multiplies by the diagonal `W`.
#[derive(Debug, Clone)]
pub struct CouplingMatrix {
    k: usize,
    /// Row-major K×K symmetric weights, zero diagonal.
    b: Vec<f64>,
    w: Vec<f64>,
}

impl CouplingMatrix {
    /// Assemble from explicit coefficients (synthetic operators for decay
    /// studies and test hooks). `b` is row-major K×K and must be symmetric
    /// with nonnegative off-diagonal entries; the diagonal is ignored.
    /// `w` may carry negative entries — positivity of 𝒲 is a property of
    /// good configurations, checked by callers, not baked into the type.
    pub fn new(b: Vec<f64>, w: Vec<f64>) -> Result<Self> {
        let k = w.len();
        if b.len() != k * k {
            return Err(Error::Config(format!(
                "coefficient shapes disagree: {} offdiagonal entries for K = {k}",
                b.len()
            )));
        }
        if !b.iter().all(|v| v.is_finite()) || !w.iter().all(|v| v.is_finite()) {
            return Err(Error::Config("coupling coefficients must be finite".into()));
        }
        let mut b = b;
        for i in 0..k {
            b[i * k + i] = 0.0;
            for j in (i + 1)..k {
                if b[i * k + j] < 0.0 || (b[i * k + j] - b[j * k + i]).abs() > 1e-12 {
                    return Err(Error::Config(format!(
                        "B must be symmetric with nonnegative couplings (entry {i},{j})"
                    )));
                }
                let s = b[i * k + j];
                b[j * k + i] = s;
            }
        }
        Ok(CouplingMatrix { k, b, w })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn b(&self, i: usize, j: usize) -> f64 {
        self.b[i * self.k + j]
    }

    pub fn w(&self, i: usize) -> f64 {
        self.w[i]
    }

    /// `(ℬ + 𝒲) u`.
    pub fn apply(&self, u: &[f64], out: &mut [f64]) {
        let k = self.k;
        for i in 0..k {
            let mut acc = self.w[i] * u[i];
            let row = &self.b[i * k..(i + 1) * k];
            for (j, &bij) in row.iter().enumerate() {
                acc += bij * (u[i] - u[j]);
            }
            out[i] = acc;
        }
    }

    /// `⟨u, (ℬ + 𝒲) u⟩ = Σ_{i<j} B_ij (u_i − u_j)² + Σ_i W_i u_i²`.
    pub fn quadratic_form(&self, u: &[f64]) -> f64 {
        let k = self.k;
        let mut q = 0.0;
        for i in 0..k {
            q += self.w[i] * u[i] * u[i];
            for j in (i + 1)..k {
                let d = u[i] - u[j];
                q += self.b[i * k + j] * d * d;
            }
        }
        q
    }

    /// `max_i (W_i + Σ_j B_ij)`, the Gershgorin scale bounding the spectrum;
    /// step-size caps for explicit evolution derive from it.
    pub fn row_scale_max(&self) -> f64 {
        let k = self.k;
        (0..k)
            .map(|i| self.w[i] + self.b[i * k..(i + 1) * k].iter().sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Dense symmetric matrix of the operator: `A_ii = W_i + Σ_j B_ij`,
    /// `A_ij = −B_ij`.
    fn dense(&self) -> Vec<f64> {
        let k = self.k;
        let mut a = vec![0.0; k * k];
        for i in 0..k {
            let mut diag = self.w[i];
            for j in 0..k {
                if j != i {
                    let bij = self.b[i * k + j];
                    a[i * k + j] = -bij;
                    diag += bij;
                }
            }
            a[i * k + i] = diag;
        }
        a
    }
}

fn assemble_coupling(
    x: &[f64],
    lspec: &LocalMeasureSpec,
    p: &Potential,
    tilde: Option<(&LocalMeasureSpec, &Potential)>,
    c_pair: f64,
    c_v: f64,
    c_ext: f64,
    c_conf: f64,
) -> Result<CouplingMatrix> {
    let k = lspec.k;
    if x.len() != k {
        return Err(Error::Domain(format!(
            "configuration has {} points, window expects {k}",
            x.len()
        )));
    }
    let ceiling = validate_local_pair(lspec, tilde)?;
    if let Some(i) = is_strictly_increasing(x) {
        return Err(Error::Domain(format!(
            "window configuration must be finite and strictly ordered (index {i})"
        )));
    }
    if *x.last().unwrap() >= ceiling {
        return Err(Error::Domain(format!(
            "window configuration reaches past the first external particle at {ceiling}"
        )));
    }
    let nf = lspec.n as f64;
    let micro_pair = nf.powf(-4.0 / 3.0); // 1/(microscopic gap)² per 1/(macroscopic gap)²
    let mut b = vec![0.0; k * k];
    for i in 0..k {
        for j in (i + 1)..k {
            let d = x[j] - x[i];
            let bij = c_pair * micro_pair / (d * d);
            b[i * k + j] = bij;
            b[j * k + i] = bij;
        }
    }
    let r = lspec.r_interp;
    let mut w = vec![0.0; k];
    let side = |spec: &LocalMeasureSpec, pot: &Potential, weight: f64, w: &mut [f64]| {
        if weight == 0.0 {
            return;
        }
        for (wi, &xi) in w.iter_mut().zip(x) {
            let mut ext = 0.0;
            for &yj in &spec.y {
                let d = yj - xi;
                ext += 1.0 / (d * d);
            }
            *wi += weight * (c_v * nf.powf(-1.0 / 3.0) * pot.ddv(xi) + c_ext * micro_pair * ext);
        }
    };
    side(lspec, p, 1.0 - r, &mut w);
    if let Some((ts, tp)) = tilde {
        side(ts, tp, r, &mut w);
    }
    let s = lspec.confinement_scale;
    for (wi, &xi) in w.iter_mut().zip(x) {
        *wi += c_conf * confinement_theta(s * xi, 2);
    }
    CouplingMatrix::new(b, w)
}

/// The coupling matrix at configuration `x` (edge-shifted coordinates):
/// microscopic pair couplings `B_ij = ½ / (x̂_i − x̂_j)²` and diagonal
/// `W_i = 2N^{1−2ξ}Θ''(N^{−ξ}x̂_i) + (N^{−1/3}/2)[(1−r)V'' + rṼ''](x_i)
///      + ½ Σ_{k∉I}[(1−r)/(ŷ_k−x̂_i)² + r/(ŷ̃_k−x̂_i)²]`
/// with hats denoting the `N^{2/3}` magnification.
pub fn build_coupling_matrix(
    x: &[f64],
    lspec: &LocalMeasureSpec,
    p: &Potential,
    tilde: Option<(&LocalMeasureSpec, &Potential)>,
) -> Result<CouplingMatrix> {
    let nf = lspec.n as f64;
    let c_conf = 2.0 * nf.powf(1.0 - 2.0 * lspec.xi);
    assemble_coupling(x, lspec, p, tilde, 0.5, 0.5, 0.5, c_conf)
}

/// Half the Hessian of the window energy in microscopic coordinates — the
/// generator whose fundamental solution enters the representation formula
/// for the diffusion integrated by [`integrate_local_sde`]. Shares the
/// assembly with [`build_coupling_matrix`] but carries the β-dependent
/// normalization of the sampled measure.
pub(crate) fn half_hessian_matrix(
    x: &[f64],
    lspec: &LocalMeasureSpec,
    p: &Potential,
    tilde: Option<(&LocalMeasureSpec, &Potential)>,
    beta: f64,
) -> Result<CouplingMatrix> {
    let nf = lspec.n as f64;
    let c_conf = beta * nf.powf(-2.0 * lspec.xi);
    assemble_coupling(
        x,
        lspec,
        p,
        tilde,
        0.5 * beta,
        0.25 * beta,
        0.5 * beta,
        c_conf,
    )
}

// ---------------------------------------------------------------------------
// v-ODE evolution
// ---------------------------------------------------------------------------

fn rk4_step(a: &CouplingMatrix, v: &mut [f64], h: f64, scratch: &mut [Vec<f64>; 5]) {
    let k = v.len();
    let [k1, k2, k3, k4, tmp] = scratch;
    a.apply(v, k1);
    for i in 0..k {
        tmp[i] = v[i] - 0.5 * h * k1[i];
    }
    a.apply(tmp, k2);
    for i in 0..k {
        tmp[i] = v[i] - 0.5 * h * k2[i];
    }
    a.apply(tmp, k3);
    for i in 0..k {
        tmp[i] = v[i] - h * k3[i];
    }
    a.apply(tmp, k4);
    for i in 0..k {
        v[i] -= h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
}

/// Evolve `v' = −𝒜 v` for `duration` under a fixed matrix, with the step
/// capped at `0.5 / max_i(W_i + Σ_j B_ij)` for stability. Checks the
/// (sub-)Markov invariants after every step: the L¹ norm must not grow and
/// components must stay nonnegative up to rounding.
fn flow_constant(a: &CouplingMatrix, v: &mut [f64], duration: f64) -> Result<()> {
    if duration <= 0.0 {
        return Ok(());
    }
    let cap = 0.5 / a.row_scale_max().max(1e-300);
    let n_steps = (duration / cap).ceil().max(1.0) as usize;
    let h = duration / n_steps as f64;
    let k = v.len();
    let mut scratch =
        [vec![0.0; k], vec![0.0; k], vec![0.0; k], vec![0.0; k], vec![0.0; k]];
    let mut l1_prev: f64 = v.iter().map(|x| x.abs()).sum();
    for _ in 0..n_steps {
        rk4_step(a, v, h, &mut scratch);
        let l1: f64 = v.iter().map(|x| x.abs()).sum();
        if l1 > l1_prev * (1.0 + 1e-8) {
            return Err(Error::StepTooLarge(h));
        }
        if v.iter().any(|&x| x < -1e-10) {
            return Err(Error::StepTooLarge(h));
        }
        l1_prev = l1;
    }
    Ok(())
}

/// Solve `∂_t v = −𝒜(t) v`, `v(0) = e_b` (`b` 1-based), with 𝒜 rebuilt from
/// the stored path state nearest in time to each integration step. Returns
/// `(t, v(t))` at the path's snapshot times up to `t_final`.
pub fn evolve_v(
    path: &DbmPath,
    lspec: &LocalMeasureSpec,
    p: &Potential,
    tilde: Option<(&LocalMeasureSpec, &Potential)>,
    b: usize,
    t_final: f64,
) -> Result<Vec<(f64, Vec<f64>)>> {
    let k = lspec.k;
    if b == 0 || b > k {
        return Err(Error::Domain(format!("b must lie in 1..={k}, got {b}")));
    }
    if path.states.iter().any(|s| s.n() != k) {
        return Err(Error::Domain(
            "path states and window specification disagree on K".into(),
        ));
    }
    let t_end = t_final.min(*path.times.last().unwrap());
    let mut v = vec![0.0; k];
    v[b - 1] = 1.0;
    let mut out = vec![(0.0, v.clone())];
    let mut t = 0.0;
    for &t_next in path.times.iter().skip(1) {
        if t_next > t_end {
            break;
        }
        while t < t_next {
            let near = path.nearest_index(t);
            let a = build_coupling_matrix(&path.states[near].lambda, lspec, p, tilde)?;
            let h = (0.5 / a.row_scale_max().max(1e-300)).min(t_next - t);
            flow_constant(&a, &mut v, h)?;
            t += h;
        }
        out.push((t_next, v.clone()));
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Small symmetric eigensolver (Jacobi) and the exact propagator step
// ---------------------------------------------------------------------------

/// Cyclic Jacobi on a dense symmetric matrix; returns eigenvalues and the
/// orthogonal matrix of eigenvectors (columns). Sizes here are K ≤ 6, where
/// Jacobi is both simplest and fully accurate.
fn jacobi_eigen(k: usize, a: &mut [f64], vecs: &mut [f64]) {
    vecs.iter_mut().for_each(|v| *v = 0.0);
    for i in 0..k {
        vecs[i * k + i] = 1.0;
    }
    for _sweep in 0..50 {
        let mut off = 0.0;
        for i in 0..k {
            for j in (i + 1)..k {
                off += a[i * k + j] * a[i * k + j];
            }
        }
        if off < 1e-28 * (1.0 + a.iter().map(|x| x * x).sum::<f64>()) {
            break;
        }
        for p_i in 0..k {
            for q_i in (p_i + 1)..k {
                let apq = a[p_i * k + q_i];
                if apq == 0.0 {
                    continue;
                }
                let app = a[p_i * k + p_i];
                let aqq = a[q_i * k + q_i];
                let theta = 0.5 * (aqq - app) / apq;
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for r in 0..k {
                    let arp = a[r * k + p_i];
                    let arq = a[r * k + q_i];
                    a[r * k + p_i] = c * arp - s * arq;
                    a[r * k + q_i] = s * arp + c * arq;
                }
                for col in 0..k {
                    let apr = a[p_i * k + col];
                    let aqr = a[q_i * k + col];
                    a[p_i * k + col] = c * apr - s * aqr;
                    a[q_i * k + col] = s * apr + c * aqr;
                }
                for r in 0..k {
                    let vrp = vecs[r * k + p_i];
                    let vrq = vecs[r * k + q_i];
                    vecs[r * k + p_i] = c * vrp - s * vrq;
                    vecs[r * k + q_i] = s * vrp + c * vrq;
                }
            }
        }
    }
}

/// `M ← exp(−𝒜 h) M` via the exact spectral decomposition of 𝒜.
fn propagate_exact(a: &CouplingMatrix, h: f64, m: &mut [f64]) {
    let k = a.k;
    let mut dense = a.dense();
    let mut vecs = vec![0.0; k * k];
    jacobi_eigen(k, &mut dense, &mut vecs);
    let evals: Vec<f64> = (0..k).map(|i| dense[i * k + i]).collect();
    // tmp = Vᵀ M, scaled by e^{−λ h}, then M = V tmp
    let mut tmp = vec![0.0; k * k];
    for i in 0..k {
        let decay = (-evals[i] * h).exp();
        for j in 0..k {
            let mut acc = 0.0;
            for r in 0..k {
                acc += vecs[r * k + i] * m[r * k + j];
            }
            tmp[i * k + j] = decay * acc;
        }
    }
    for i in 0..k {
        for j in 0..k {
            let mut acc = 0.0;
            for r in 0..k {
                acc += vecs[i * k + r] * tmp[r * k + j];
            }
            m[i * k + j] = acc;
        }
    }
}

// ---------------------------------------------------------------------------
// Random-walk representation check
// ---------------------------------------------------------------------------

/// A smooth observable of the window configuration in microscopic
/// coordinates, with its analytic gradient.
pub struct Observable {
    eval: Box<dyn Fn(&[f64]) -> f64 + Send + Sync>,
    grad: Box<dyn Fn(&[f64], &mut [f64]) + Send + Sync>,
    label: String,
}

impl Observable {
    pub fn new(
        label: impl Into<String>,
        eval: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        grad: impl Fn(&[f64], &mut [f64]) + Send + Sync + 'static,
    ) -> Self {
        Observable {
            eval: Box::new(eval),
            grad: Box::new(grad),
            label: label.into(),
        }
    }

    /// The coordinate observable `x_a` (`a` 1-based).
    pub fn coordinate(a: usize) -> Self {
        assert!(a >= 1, "coordinates are 1-based");
        Observable::new(
            format!("x{a}"),
            move |x: &[f64]| x[a - 1],
            move |_x: &[f64], g: &mut [f64]| {
                g.iter_mut().for_each(|v| *v = 0.0);
                g[a - 1] = 1.0;
            },
        )
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        (self.eval)(x)
    }

    pub fn gradient(&self, x: &[f64], out: &mut [f64]) {
        (self.grad)(x, out)
    }
}

impl std::fmt::Debug for Observable {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Observable({})", self.label)
    }
}

/// Outcome of the representation check: two independent Monte Carlo
/// estimates of the same time correlation, with standard errors.
#[derive(Debug, Clone)]
pub struct RwReport {
    pub lhs: f64,
    pub rhs: f64,
    pub se_lhs: f64,
    pub se_rhs: f64,
    pub n_paths: usize,
    /// Set when the two estimates fail to overlap at five combined standard
    /// errors; reported, not raised.
    pub flagged: bool,
}

/// Verifies the representation formula
/// `E[QF] − E[Q(x(0))F(x(T))] = ½∫₀ᵀ E[Σ_{a,b} ∂_bQ(x(0)) ∂_aF(x(S)) v^b_a(S)] dS`
/// by Monte Carlo over equilibrium-started paths of the window diffusion.
/// The left side pairs both expectations on the same paths; the right side
/// accumulates the time integral along each path, with the fundamental
/// solution advanced by exact spectral propagation of ½∇²H per step.
pub fn check_rw_representation(
    lspec: &LocalMeasureSpec,
    p: &Potential,
    tilde: Option<(&LocalMeasureSpec, &Potential)>,
    beta: f64,
    q_obs: &Observable,
    f_obs: &Observable,
    t_final: f64,
    n_paths: usize,
    seed: u64,
) -> Result<RwReport> {
    if lspec.k > 6 {
        return Err(Error::Domain(format!(
            "representation check is a desk-scale tool: K <= 6, got {}",
            lspec.k
        )));
    }
    if n_paths < 2 {
        return Err(Error::Domain("need at least two paths".into()));
    }
    if t_final < 0.0 || !t_final.is_finite() {
        return Err(Error::Domain(format!("need T >= 0, got {t_final}")));
    }
    if t_final == 0.0 {
        return Ok(RwReport {
            lhs: 0.0,
            rhs: 0.0,
            se_lhs: 0.0,
            se_rhs: 0.0,
            n_paths,
            flagged: false,
        });
    }
    validate_local_pair(lspec, tilde)?;

    let settings = MalaSettings {
        step_size: 1e-3,
        burn_in: 30_000,
        thinning: 150,
        n_chains: 8,
        adapt: true,
        init: None,
    };
    let archive = sample_local_conditional(lspec, p, tilde, beta, n_paths, &settings, seed)?;

    let k = lspec.k;
    let nf = lspec.n as f64;
    let micro = nf.powf(2.0 / 3.0);
    let dt = 1e-3f64;
    let pairs: Vec<(f64, f64)> = archive
        .configs
        .par_iter()
        .enumerate()
        .map(|(c, config)| -> Result<(f64, f64)> {
            let mut rng = stream_rng(seed, 1_000_000 + c as u64);
            let mut x = config.lambda.clone();
            let mut xhat: Vec<f64> = x.iter().map(|v| v * micro).collect();
            let mut grad_q0 = vec![0.0; k];
            let mut grad_f = vec![0.0; k];
            q_obs.gradient(&xhat, &mut grad_q0);
            f_obs.gradient(&xhat, &mut grad_f);
            let q0 = q_obs.value(&xhat);
            let f0 = f_obs.value(&xhat);
            let mut m = vec![0.0; k * k];
            for i in 0..k {
                m[i * k + i] = 1.0;
            }
            let dot = |gf: &[f64], m: &[f64], gq: &[f64]| -> f64 {
                let mut acc = 0.0;
                for a in 0..k {
                    for b in 0..k {
                        acc += gf[a] * m[a * k + b] * gq[b];
                    }
                }
                acc
            };
            let mut g_prev = dot(&grad_f, &m, &grad_q0);
            let mut integral = 0.0;
            let ceiling = match tilde {
                Some((ts, _)) => lspec.y_edge().min(ts.y_edge()),
                None => lspec.y_edge(),
            };
            let drift_scale = -0.5 * nf.powf(-4.0 / 3.0);
            let noise_scale = nf.powf(-2.0 / 3.0);
            let mut grad = vec![0.0; k];
            let mut prop = vec![0.0; k];
            let mut t = 0.0;
            while t < t_final {
                local_grad(&x, lspec, p, tilde, beta, &mut grad);
                let a_mat = half_hessian_matrix(&x, lspec, p, tilde, beta)?;
                let mut h = dt.min(t_final - t);
                let mut halvings = 0;
                loop {
                    let root_h = h.sqrt() * noise_scale;
                    for i in 0..k {
                        let z: f64 = rng.sample(StandardNormal);
                        prop[i] = x[i] + drift_scale * grad[i] * h + root_h * z;
                    }
                    let bad = match is_strictly_increasing(&prop) {
                        Some(i) => Some(i),
                        None if *prop.last().unwrap() >= ceiling => Some(k - 1),
                        None => None,
                    };
                    match bad {
                        None => break,
                        Some(index) => {
                            halvings += 1;
                            if halvings > 20 {
                                return Err(Error::StepCollapse { t, index });
                            }
                            h *= 0.5;
                        }
                    }
                }
                propagate_exact(&a_mat, h, &mut m);
                x.copy_from_slice(&prop);
                for i in 0..k {
                    xhat[i] = x[i] * micro;
                }
                f_obs.gradient(&xhat, &mut grad_f);
                let g_now = dot(&grad_f, &m, &grad_q0);
                integral += 0.5 * (g_prev + g_now) * h;
                g_prev = g_now;
                t += h;
            }
            let u = q0 * (f0 - f_obs.value(&xhat));
            Ok((u, 0.5 * integral))
        })
        .collect::<Result<Vec<_>>>()?;

    let n = pairs.len() as f64;
    let (mut mu_u, mut mu_r) = (0.0, 0.0);
    for &(u, r) in &pairs {
        mu_u += u;
        mu_r += r;
    }
    mu_u /= n;
    mu_r /= n;
    let (mut var_u, mut var_r) = (0.0, 0.0);
    for &(u, r) in &pairs {
        var_u += (u - mu_u) * (u - mu_u);
        var_r += (r - mu_r) * (r - mu_r);
    }
    let se_lhs = (var_u / (n * (n - 1.0))).sqrt();
    let se_rhs = (var_r / (n * (n - 1.0))).sqrt();
    Ok(RwReport {
        lhs: mu_u,
        rhs: mu_r,
        se_lhs,
        se_rhs,
        n_paths: pairs.len(),
        flagged: (mu_u - mu_r).abs() > 5.0 * (se_lhs + se_rhs),
    })
}

// ---------------------------------------------------------------------------
// Heat-kernel decay check
// ---------------------------------------------------------------------------

/// Measured decay of the heat flow `∂_s u = −𝒜 u` against the dispersive
/// envelope `(s·b·K^{−2η/3})^{−(3/p−3/q)(1−6η)}` on `s ∈ [1, K^{1/3}]`.
#[derive(Debug, Clone)]
pub struct DecayReport {
    pub k: usize,
    pub eta: f64,
    pub p_norm: f64,
    pub q_norm: f64,
    /// Per-instance sup over the time grid of ‖u(s)‖_q · envelope(s)⁻¹ / ‖u(0)‖_p.
    pub instance_ratios: Vec<f64>,
    pub sup_ratio: f64,
    /// Same quantity at 2K, for the growth flag.
    pub doubled_sup_ratio: f64,
    /// Set when doubling K more than doubles the sup ratio.
    pub growth_flagged: bool,
}

fn lp_norm(u: &[f64], p: f64) -> f64 {
    if p.is_infinite() {
        u.iter().fold(0.0f64, |m, &x| m.max(x.abs()))
    } else {
        u.iter().map(|x| x.abs().powf(p)).sum::<f64>().powf(1.0 / p)
    }
}

fn minimal_coefficients(k: usize, b: f64) -> (Vec<f64>, Vec<f64>) {
    let mut bmat = vec![0.0; k * k];
    let mut w = vec![0.0; k];
    let pow = |j: usize| ((j + 1) as f64).powf(2.0 / 3.0);
    let dk = ((k + 1) as f64).powf(2.0 / 3.0);
    for i in 0..k {
        w[i] = b * (k as f64).powf(1.0 / 3.0) / (dk - pow(i));
        for j in (i + 1)..k {
            let d = pow(j) - pow(i);
            let v = b / (d * d);
            bmat[i * k + j] = v;
            bmat[j * k + i] = v;
        }
    }
    (bmat, w)
}

fn decay_sup_ratio(
    k: usize,
    b: f64,
    p: f64,
    q: f64,
    eta: f64,
    n_instances: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    let exponent = (3.0 / p - 3.0 / q) * (1.0 - 6.0 * eta);
    let horizon = (k as f64).powf(1.0 / 3.0).max(1.5);
    let times: Vec<f64> = (0..12)
        .map(|i| horizon.powf(i as f64 / 11.0))
        .collect();
    (0..n_instances)
        .map(|inst| {
            let (mut bmat, mut w) = minimal_coefficients(k, b);
            if inst > 0 {
                let mut rng = stream_rng(seed, inst as u64);
                for i in 0..k {
                    w[i] *= 1.0 + rng.gen::<f64>();
                    for j in (i + 1)..k {
                        let f = 1.0 + rng.gen::<f64>();
                        bmat[i * k + j] *= f;
                        bmat[j * k + i] = bmat[i * k + j];
                    }
                }
            }
            let a = CouplingMatrix::new(bmat, w)?;
            let mut u = vec![0.0; k];
            u[k - 1] = 1.0;
            let u0_p = lp_norm(&u, p);
            let mut t = 0.0;
            let mut sup = 0.0f64;
            for &s in &times {
                flow_constant(&a, &mut u, s - t)?;
                t = s;
                let envelope_inv = (s * b * (k as f64).powf(-2.0 * eta / 3.0)).powf(exponent);
                sup = sup.max(lp_norm(&u, q) * envelope_inv / u0_p);
            }
            Ok(sup)
        })
        .collect()
}

/// Evolves unit initial data `e_K` under operators whose coefficients
/// dominate the minimal admissible ones (`B_jk ≥ b/(j^{2/3}−k^{2/3})²`,
/// `W_j ≥ bK^{1/3}/d_j`), and reports the worst measured-to-envelope ratio,
/// at K and at 2K. Instance 0 is exactly minimal; the rest inflate each
/// coefficient by an independent factor in [1, 2].
pub fn check_heat_decay(
    k: usize,
    b: f64,
    p: f64,
    q: f64,
    eta: f64,
    n_instances: usize,
    seed: u64,
) -> Result<DecayReport> {
    if !(1.0 <= p && p <= q) {
        return Err(Error::Domain(format!(
            "norms must satisfy 1 <= p <= q, got p = {p}, q = {q}"
        )));
    }
    if !(eta > 0.0 && eta <= 0.15) {
        return Err(Error::Domain(format!(
            "eta must lie in (0, 0.15], got {eta}"
        )));
    }
    if !(b > 0.0) || k < 2 || n_instances == 0 {
        return Err(Error::Domain(
            "need b > 0, K >= 2 and at least one instance".into(),
        ));
    }
    let ratios = decay_sup_ratio(k, b, p, q, eta, n_instances, seed)?;
    let doubled = decay_sup_ratio(2 * k, b, p, q, eta, n_instances, seed)?;
    let sup_ratio = ratios.iter().fold(0.0f64, |m, &x| m.max(x));
    let doubled_sup_ratio = doubled.iter().fold(0.0f64, |m, &x| m.max(x));
    Ok(DecayReport {
        k,
        eta,
        p_norm: p,
        q_norm: q,
        instance_ratios: ratios,
        sup_ratio,
        doubled_sup_ratio,
        growth_flagged: doubled_sup_ratio > 2.0 * sup_ratio,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equilibrium::{classical_locations, solve_equilibrium};
    use crate::samplers::local_energy;
    use crate::statistics::ks_distance_cdf;

    fn shifted_gaussian() -> Potential {
        // ½x² seen from its left edge at −2: V(u) = ½(u−2)²
        Potential::from_fns(
            |x| 0.5 * (x - 2.0) * (x - 2.0),
            |x| x - 2.0,
            |_| 1.0,
            1.0,
            2.0,
        )
        .unwrap()
    }

    /// External configuration from the semicircle's classical locations,
    /// shifted so the lower edge sits at 0.
    fn semicircle_window(n: usize, k: usize, xi: f64) -> LocalMeasureSpec {
        let meas = solve_equilibrium(&Potential::gaussian(), 1e-10).unwrap();
        let gammas = classical_locations(&meas, n);
        let y: Vec<f64> = (k + 1..=n).map(|j| gammas.loc(j) - meas.a).collect();
        LocalMeasureSpec::new(y, k, xi, n).unwrap()
    }

    #[test]
    fn rejects_bad_inputs() {
        let init = ParticleConfiguration::new(vec![0.0], 0.5).unwrap();
        let p = Potential::gaussian();
        let mut rng = stream_rng(1, 0);
        assert!(integrate_dbm_global(&init, &p, 1.0, 1e-2, &mut rng).is_err());
        let init = ParticleConfiguration::new(vec![0.0], 2.0).unwrap();
        assert!(integrate_dbm_global(&init, &p, 1.0, 0.0, &mut rng).is_err());
        assert!(integrate_dbm_global(&init, &p, f64::NAN, 1e-2, &mut rng).is_err());
    }

    #[test]
    fn ou_stationary_variance_near_one() {
        // N=1, β=2, V=½x²: dλ = dB − ½λ dt, stationary variance 2/(βN) = 1
        let init = ParticleConfiguration::new(vec![0.3], 2.0).unwrap();
        let p = Potential::gaussian();
        let mut rng = stream_rng(42, 0);
        let path = integrate_dbm_global(&init, &p, 4000.0, 5e-3, &mut rng).unwrap();
        let half = path.states.len() / 2;
        let vals: Vec<f64> = path.states[half..].iter().map(|s| s.lambda[0]).collect();
        let var = vals.iter().map(|v| v * v).sum::<f64>() / vals.len() as f64;
        assert!((var - 1.0).abs() < 0.05, "stationary variance {var}");
    }

    #[test]
    fn zero_noise_flow_preserves_symmetry() {
        let init = ParticleConfiguration::new(vec![-1.0, 1.0], 2.0).unwrap();
        let p = Potential::gaussian();
        let mut rng = stream_rng(7, 0);
        let path =
            integrate_dbm_global_scaled(&init, &p, 2.0, 1e-3, 0.0, &mut rng).unwrap();
        for s in &path.states {
            assert!((s.lambda[0] + s.lambda[1]).abs() < 1e-12);
        }
        assert!(path.times.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn path_bookkeeping_is_consistent() {
        let init =
            ParticleConfiguration::new((0..12).map(|i| i as f64 * 0.3 - 1.8).collect(), 2.0)
                .unwrap();
        let p = Potential::gaussian();
        let mut rng = stream_rng(3, 0);
        let path = integrate_dbm_global(&init, &p, 2.0, 1e-3, &mut rng).unwrap();
        let total: f64 = path.dt_history.iter().sum();
        assert!((total - 2.0).abs() < 1e-9);
        assert!((path.times.last().unwrap() - 2.0).abs() < 1e-12);
        assert_eq!(path.times.len(), path.states.len());
        assert!(path.times.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn coupling_matrix_hand_case() {
        // N = 8 makes the magnification exactly 4: macroscopic (¼, ½) is
        // microscopic (1, 2), where B₁₂ = ½ and ⟨u,ℬu⟩ = ½(u₁−u₂)² = 2
        let n = 8;
        let lspec = LocalMeasureSpec::new(vec![0.75, 1.0, 2.0, 3.0, 4.0, 5.0], 2, 0.1, n).unwrap();
        let p = shifted_gaussian();
        let cm = build_coupling_matrix(&[0.25, 0.5], &lspec, &p, None).unwrap();
        assert!((cm.b(0, 1) - 0.5).abs() < 1e-14);
        let qf_b = cm.quadratic_form(&[1.0, -1.0])
            - cm.w(0) * 1.0
            - cm.w(1) * 1.0;
        assert!((qf_b - 2.0).abs() < 1e-12, "B quadratic form {qf_b}");
        // constants are annihilated by ℬ: (ℬ+𝒲)1 = W
        let mut out = vec![0.0; 2];
        cm.apply(&[1.0, 1.0], &mut out);
        assert!((out[0] - cm.w(0)).abs() < 1e-14);
        assert!((out[1] - cm.w(1)).abs() < 1e-14);
        assert!(cm.w(0) >= 0.0 && cm.w(1) >= 0.0);
    }

    #[test]
    fn coupling_matrix_rejects_bad_configs() {
        let lspec = LocalMeasureSpec::new(vec![1.0, 2.0, 3.0], 2, 0.1, 5).unwrap();
        let p = shifted_gaussian();
        assert!(build_coupling_matrix(&[0.5, 0.5], &lspec, &p, None).is_err());
        assert!(build_coupling_matrix(&[0.5, 0.2], &lspec, &p, None).is_err());
        assert!(build_coupling_matrix(&[0.5, 1.5], &lspec, &p, None).is_err());
        assert!(build_coupling_matrix(&[0.5], &lspec, &p, None).is_err());
        let with_r = lspec.clone().with_r(0.5).unwrap();
        assert!(matches!(
            build_coupling_matrix(&[0.2, 0.5], &with_r, &p, None),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn w_is_bounded_below_on_good_configurations() {
        let n = 400;
        let k = 32;
        let xi = 0.1;
        let lspec = semicircle_window(n, k, xi);
        let meas = solve_equilibrium(&Potential::gaussian(), 1e-10).unwrap();
        let gammas = classical_locations(&meas, n);
        let x: Vec<f64> = (1..=k).map(|j| gammas.loc(j) - meas.a).collect();
        let p = shifted_gaussian();
        let cm = build_coupling_matrix(&x, &lspec, &p, None).unwrap();
        let dk = ((k + 1) as f64).powf(2.0 / 3.0);
        let floor = 0.25 * (k as f64).powf(1.0 / 3.0) * (n as f64).powf(-2.0 * xi);
        for i in 0..k {
            let d = dk - ((i + 1) as f64).powf(2.0 / 3.0);
            assert!(cm.w(i) > 0.0);
            assert!(
                cm.w(i) * d >= floor,
                "W_{} · d = {} below floor {floor}",
                i + 1,
                cm.w(i) * d
            );
        }
    }

    #[test]
    fn evolve_hooks_zero_and_constant_generators() {
        // 𝒜 ≡ 0 keeps e_b; 𝒲 = I, ℬ = 0 decays exactly exponentially
        let zero = CouplingMatrix::new(vec![0.0; 9], vec![0.0; 3]).unwrap();
        let mut v = vec![0.0, 1.0, 0.0];
        flow_constant(&zero, &mut v, 3.0).unwrap();
        assert_eq!(v, vec![0.0, 1.0, 0.0]);
        let ident = CouplingMatrix::new(vec![0.0; 9], vec![1.0; 3]).unwrap();
        let mut v = vec![0.0, 1.0, 0.0];
        flow_constant(&ident, &mut v, 1.5).unwrap();
        assert!((v[1] - (-1.5f64).exp()).abs() < 1e-3);
        assert!(v[0] == 0.0 && v[2] == 0.0);
    }

    #[test]
    fn evolve_v_contracts_along_a_real_path() {
        let n = 60;
        let k = 3;
        let lspec = semicircle_window(n, k, 0.1);
        let p = shifted_gaussian();
        let init_x: Vec<f64> = {
            let meas = solve_equilibrium(&Potential::gaussian(), 1e-10).unwrap();
            let gammas = classical_locations(&meas, n);
            (1..=k).map(|j| gammas.loc(j) - meas.a).collect()
        };
        let init = ParticleConfiguration::new(init_x, 2.0).unwrap();
        let mut rng = stream_rng(5, 0);
        let path = integrate_local_sde(&lspec, &p, None, &init, 0.5, 1e-3, &mut rng).unwrap();
        let snaps = evolve_v(&path, &lspec, &p, None, 2, 0.5).unwrap();
        assert_eq!(snaps[0].1, vec![0.0, 1.0, 0.0]);
        let mut l1_prev = f64::INFINITY;
        for (_, v) in &snaps {
            let l1: f64 = v.iter().map(|x| x.abs()).sum();
            assert!(l1 <= l1_prev * (1.0 + 1e-8));
            assert!(v.iter().all(|&x| x >= -1e-10));
            l1_prev = l1;
        }
        assert!(l1_prev < 1.0, "some mass must leak in t = 0.5");
        assert!(evolve_v(&path, &lspec, &p, None, 0, 0.5).is_err());
        assert!(evolve_v(&path, &lspec, &p, None, 4, 0.5).is_err());
    }

    #[test]
    fn local_sde_k1_stationary_matches_quadrature() {
        let n = 50;
        let lspec = semicircle_window(n, 1, 0.1);
        let p = shifted_gaussian();
        let beta = 2.0;
        let y1 = lspec.y_edge();
        let init = ParticleConfiguration::new(vec![0.5 * y1], beta).unwrap();
        let mut rng = stream_rng(17, 0);
        let path = integrate_local_sde(&lspec, &p, None, &init, 20_000.0, 2e-3, &mut rng).unwrap();
        // discard the first tenth as burn-in, sample the snapshot grid
        let skip = path.states.len() / 10;
        let samples: Vec<f64> = path.states[skip..].iter().map(|s| s.lambda[0]).collect();
        // quadrature oracle for the single-particle marginal
        let lo = y1 - 1.2;
        let m = 8001;
        let mut weights = Vec::with_capacity(m);
        let mut emin = f64::INFINITY;
        let xs: Vec<f64> = (0..m)
            .map(|i| lo + (y1 - 1e-9 - lo) * i as f64 / (m - 1) as f64)
            .collect();
        let energies: Vec<f64> = xs
            .iter()
            .map(|&x| {
                let e = local_energy(&[x], &lspec, &p, None, beta);
                emin = emin.min(e);
                e
            })
            .collect();
        for e in energies {
            weights.push((emin - e).exp());
        }
        let total: f64 = weights.iter().sum();
        let mut cum = Vec::with_capacity(m);
        let mut acc = 0.0;
        for w in &weights {
            acc += w;
            cum.push(acc / total);
        }
        let cdf = |x: f64| -> f64 {
            if x <= xs[0] {
                return 0.0;
            }
            if x >= xs[m - 1] {
                return 1.0;
            }
            let idx = ((x - xs[0]) / (xs[1] - xs[0])) as usize;
            cum[idx.min(m - 1)]
        };
        let d = ks_distance_cdf(&samples, cdf);
        assert!(d < 0.03, "KS distance to the quadrature marginal: {d}");
    }

    #[test]
    fn confinement_is_inert_right_of_the_wall() {
        // identical drift for two confinement exponents when every particle
        // sits right of the wall: Θ' vanishes there
        let n = 40;
        let a = semicircle_window(n, 2, 0.05);
        let b = semicircle_window(n, 2, 0.25);
        let p = shifted_gaussian();
        let x = vec![0.05, 0.12];
        let init = ParticleConfiguration::new(x, 2.0).unwrap();
        let mut rng1 = stream_rng(9, 0);
        let mut rng2 = stream_rng(9, 0);
        let pa = integrate_local_sde(&a, &p, None, &init, 0.05, 1e-3, &mut rng1).unwrap();
        let pb = integrate_local_sde(&b, &p, None, &init, 0.05, 1e-3, &mut rng2).unwrap();
        for (sa, sb) in pa.states.iter().zip(&pb.states) {
            assert_eq!(sa.lambda, sb.lambda);
        }
    }

    #[test]
    fn rw_check_trivial_cases() {
        let n = 40;
        let lspec = semicircle_window(n, 2, 0.1);
        let p = shifted_gaussian();
        let constant = Observable::new(
            "const",
            |_: &[f64]| 1.5,
            |_: &[f64], g: &mut [f64]| g.iter_mut().for_each(|v| *v = 0.0),
        );
        let x2 = Observable::coordinate(2);
        // T = 0: both sides vanish identically
        let r0 =
            check_rw_representation(&lspec, &p, None, 2.0, &x2, &x2, 0.0, 100, 11).unwrap();
        assert_eq!((r0.lhs, r0.rhs, r0.se_lhs, r0.se_rhs), (0.0, 0.0, 0.0, 0.0));
        assert!(!r0.flagged);
        // constant Q: the right side is exactly zero, the left only noise
        let rc = check_rw_representation(&lspec, &p, None, 2.0, &constant, &x2, 0.3, 2000, 12)
            .unwrap();
        assert_eq!(rc.rhs, 0.0);
        assert_eq!(rc.se_rhs, 0.0);
        assert!(rc.lhs.abs() <= 3.0 * rc.se_lhs, "lhs {} se {}", rc.lhs, rc.se_lhs);
    }

    #[test]
    fn rw_identity_holds_for_linear_observables() {
        let n = 60;
        let lspec = semicircle_window(n, 2, 0.1);
        let p = shifted_gaussian();
        let q = Observable::coordinate(1);
        let f = Observable::coordinate(2);
        let rep =
            check_rw_representation(&lspec, &p, None, 2.0, &q, &f, 1.0, 20_000, 23).unwrap();
        let gap = (rep.lhs - rep.rhs).abs();
        let budget = 3.0 * (rep.se_lhs + rep.se_rhs);
        assert!(
            gap <= budget,
            "lhs {} rhs {} gap {gap} budget {budget}",
            rep.lhs,
            rep.rhs
        );
        assert!(!rep.flagged);
        assert!(rep.lhs.abs() > 3.0 * rep.se_lhs, "signal should be resolved");
    }

    #[test]
    fn heat_decay_contracts_and_beats_envelope() {
        // p = q: the envelope exponent vanishes and the flow is an Lᵖ
        // contraction, so every ratio is at most 1
        let same = check_heat_decay(16, 1.0, 2.0, 2.0, 0.05, 3, 31).unwrap();
        assert!(same.sup_ratio <= 1.0 + 1e-9, "contraction ratio {}", same.sup_ratio);
        // minimal coefficients, L¹ → L∞, the dispersive regime
        let rep = check_heat_decay(64, 1.0, 1.0, f64::INFINITY, 0.05, 3, 32).unwrap();
        assert!(rep.sup_ratio < 10.0, "measured/envelope {}", rep.sup_ratio);
        assert!(!rep.growth_flagged, "doubling K must not outgrow the envelope");
        assert!(check_heat_decay(16, 1.0, 3.0, 2.0, 0.05, 1, 0).is_err());
        assert!(check_heat_decay(16, 1.0, 1.0, 2.0, 0.3, 1, 0).is_err());
    }
}
