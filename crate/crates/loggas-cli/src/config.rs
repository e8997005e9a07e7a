//! Experiment configuration.  One TOML schema covers every subcommand, so
//! the full default set is printable with `--print-defaults` and any section
//! irrelevant to a given kind is simply ignored by its runner.

use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

use loggas::potentials::Potential;

use crate::Failure;

pub const KINDS: [&str; 8] = [
    "equilibrium",
    "sample",
    "dbm",
    "rwcheck",
    "airy",
    "stats",
    "sobolev",
    "acceptance-suite",
];

/// Everything a run needs.  Every key has a default except `seed`: runs are
/// reproducible by construction, so there is no entropy fallback and a
/// missing seed is a configuration error.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    /// Experiment kind; normally implied by the subcommand and left empty in
    /// config files.  A non-empty value that disagrees with the subcommand
    /// is rejected.
    pub kind: String,
    /// Root RNG seed; all per-task generators are derived streams of it.
    pub seed: Option<u64>,
    /// Output directory.  Refuses to overwrite: the path must not exist.
    pub out: Option<PathBuf>,
    /// Worker threads; 0 means one per logical core.
    pub threads: usize,
    /// Acceptance-suite depth: "quick" or "full".
    pub level: String,
    pub potential: PotentialCfg,
    pub gas: GasCfg,
    pub sampler: SamplerCfg,
    pub dbm: DbmCfg,
    pub rwcheck: RwCfg,
    pub airy: AiryCfg,
    pub stats: StatsCfg,
    pub sobolev: SobolevCfg,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            kind: String::new(),
            seed: None,
            out: None,
            threads: 0,
            level: "full".into(),
            potential: PotentialCfg::default(),
            gas: GasCfg::default(),
            sampler: SamplerCfg::default(),
            dbm: DbmCfg::default(),
            rwcheck: RwCfg::default(),
            airy: AiryCfg::default(),
            stats: StatsCfg::default(),
            sobolev: SobolevCfg::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PotentialCfg {
    /// One of `gaussian`, `quadratic`, `quartic`, `even-poly`.
    pub form: String,
    /// Coefficient c of V(x) = (c/2)x² for the quadratic form.
    pub scale: f64,
    /// Coefficients of Σ coeffs[k]·x^{2k} (constant term first) for
    /// `even-poly`.
    pub coeffs: Vec<f64>,
    /// Convexity floor w and growth exponent α claimed for `even-poly`.
    pub convexity_floor: f64,
    pub growth: f64,
}

impl Default for PotentialCfg {
    fn default() -> Self {
        PotentialCfg {
            form: "gaussian".into(),
            scale: 1.0,
            coeffs: vec![],
            convexity_floor: 0.0,
            growth: 2.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GasCfg {
    /// Particle count N.
    pub n: usize,
    /// Inverse temperature β.
    pub beta: f64,
    /// Window size K for local experiments.
    pub k: usize,
    /// Rigidity exponent ξ.
    pub xi: f64,
}

impl Default for GasCfg {
    fn default() -> Self {
        GasCfg { n: 200, beta: 2.0, k: 4, xi: 0.1 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SamplerCfg {
    /// `auto` picks the exact tridiagonal model for the standard Gaussian
    /// potential and MALA otherwise; `tridiag` and `mala` force the choice.
    pub method: String,
    pub n_samples: usize,
    pub step_size: f64,
    pub burn_in: usize,
    pub thinning: usize,
    pub n_chains: usize,
    pub adapt: bool,
}

impl Default for SamplerCfg {
    fn default() -> Self {
        SamplerCfg {
            method: "auto".into(),
            n_samples: 2000,
            step_size: 1e-4,
            burn_in: 4000,
            thinning: 10,
            n_chains: 1,
            adapt: true,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DbmCfg {
    pub t_final: f64,
    pub dt: f64,
}

impl Default for DbmCfg {
    fn default() -> Self {
        DbmCfg { t_final: 1.0, dt: 1e-3 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RwCfg {
    pub n_paths: usize,
    pub t_final: f64,
    /// How many canonical (Q, F) coordinate pairs to check.
    pub max_pairs: usize,
}

impl Default for RwCfg {
    fn default() -> Self {
        RwCfg { n_paths: 20_000, t_final: 1.0, max_pairs: 5 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AiryCfg {
    /// Half-length of the discretization interval [0, L].
    pub l: f64,
    pub n_grid: usize,
    /// Draws for the reference distribution table (β < ∞).
    pub n_draws: usize,
    /// Eigenvalues reported per draw, or modes in the deterministic case.
    pub n_modes: usize,
}

impl Default for AiryCfg {
    fn default() -> Self {
        AiryCfg { l: 16.0, n_grid: 4000, n_draws: 2000, n_modes: 3 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StatsCfg {
    /// Edge indices j for the N^{2/3}j^{1/3}(λ_j − γ_j) statistics.
    pub edge_indices: Vec<usize>,
    /// Index for the Gaussian-fluctuation comparison (needs j ≥ 2).
    pub fluct_index: usize,
    /// Base index and partners for the covariance-decay table.
    pub cov_i: usize,
    pub cov_js: Vec<usize>,
    /// Evaluation point for the loop-equation residual.
    pub z_re: f64,
    pub z_im: f64,
}

impl Default for StatsCfg {
    fn default() -> Self {
        StatsCfg {
            edge_indices: vec![1, 2, 3],
            fluct_index: 8,
            cov_i: 4,
            cov_js: vec![8, 16, 32],
            z_re: 1.0,
            z_im: 0.5,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SobolevCfg {
    pub eta: f64,
    /// Sizes K for the first-inequality constant.
    pub first_sizes: Vec<usize>,
    /// Sizes M for the second-inequality ratio.
    pub second_sizes: Vec<usize>,
    pub restarts: usize,
}

impl Default for SobolevCfg {
    fn default() -> Self {
        SobolevCfg {
            eta: 0.1,
            first_sizes: vec![128, 256, 512],
            second_sizes: vec![64, 256, 1024],
            restarts: 32,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, Failure> {
        toml::from_str(text).map_err(|e| Failure::Config(format!("config parse: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, Failure> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::Config(format!("config {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    /// The built-in defaults as a commented TOML document.
    pub fn default_toml() -> String {
        let body = Self::default().to_toml();
        format!(
            "# Defaults for every `loggas` subcommand.  Keys left out of a config\n\
             # file take these values.\n\
             #\n\
             # `seed` is required and deliberately has no default: set it here, with\n\
             # --seed, or with LOGGAS_SEED.  Precedence: command-line flag, then\n\
             # environment (LOGGAS_SEED, LOGGAS_THREADS, LOGGAS_OUT), then this file.\n\
             # `out` defaults to runs/<kind>-seed<seed> and must not already exist.\n\n{body}"
        )
    }

    /// Field-level sanity checks.  Deeper domain validation (one-cut
    /// support, window bounds, …) lives in the library and is mapped to the
    /// same exit code.
    pub fn validate(&self) -> Result<(), Failure> {
        let fail = |m: String| Err(Failure::Config(m));
        if !KINDS.contains(&self.kind.as_str()) {
            return fail(format!(
                "kind: unknown experiment '{}' (expected one of: {})",
                self.kind,
                KINDS.join(", ")
            ));
        }
        if self.seed.is_none() {
            return fail(
                "seed: required — set it in the config file, with --seed, or with \
                 LOGGAS_SEED; runs never draw entropy"
                    .into(),
            );
        }
        if self.level != "quick" && self.level != "full" {
            return fail(format!("level: expected 'quick' or 'full', got '{}'", self.level));
        }
        match self.potential.form.as_str() {
            "gaussian" | "quadratic" | "quartic" | "even-poly" => {}
            other => {
                return fail(format!(
                    "potential.form: unknown form '{other}' (expected gaussian, quadratic, \
                     quartic, or even-poly)"
                ))
            }
        }
        if self.potential.form == "quadratic" && !(self.potential.scale > 0.0) {
            return fail(format!(
                "potential.scale: must be positive, got {}",
                self.potential.scale
            ));
        }
        if self.potential.form == "even-poly" && self.potential.coeffs.is_empty() {
            return fail("potential.coeffs: even-poly needs at least one coefficient".into());
        }
        if self.gas.n < 2 {
            return fail(format!("gas.n: need at least two particles, got {}", self.gas.n));
        }
        if !(self.gas.beta > 0.0) {
            return fail(format!("gas.beta: must be positive, got {}", self.gas.beta));
        }
        if self.gas.k < 1 || self.gas.k >= self.gas.n {
            return fail(format!(
                "gas.k: window must satisfy 1 <= k < n, got k = {}, n = {}",
                self.gas.k, self.gas.n
            ));
        }
        if !(self.gas.xi > 0.0 && self.gas.xi < 2.0 / 3.0) {
            return fail(format!(
                "gas.xi: rigidity exponent must lie in (0, 2/3), got {}",
                self.gas.xi
            ));
        }
        match self.sampler.method.as_str() {
            "auto" | "tridiag" | "mala" => {}
            other => {
                return fail(format!(
                    "sampler.method: expected auto, tridiag, or mala, got '{other}'"
                ))
            }
        }
        if self.sampler.n_samples == 0 {
            return fail("sampler.n_samples: must be positive".into());
        }
        if self.sampler.n_chains == 0 {
            return fail("sampler.n_chains: must be positive".into());
        }
        if !(self.sampler.step_size > 0.0) {
            return fail(format!(
                "sampler.step_size: must be positive, got {}",
                self.sampler.step_size
            ));
        }
        if !(self.dbm.dt > 0.0 && self.dbm.t_final > 0.0) {
            return fail(format!(
                "dbm: t_final and dt must be positive, got t_final = {}, dt = {}",
                self.dbm.t_final, self.dbm.dt
            ));
        }
        if self.rwcheck.n_paths < 2 {
            return fail(format!(
                "rwcheck.n_paths: need at least two paths, got {}",
                self.rwcheck.n_paths
            ));
        }
        if !(self.rwcheck.t_final > 0.0) {
            return fail(format!(
                "rwcheck.t_final: must be positive, got {}",
                self.rwcheck.t_final
            ));
        }
        if self.rwcheck.max_pairs == 0 {
            return fail("rwcheck.max_pairs: must be positive".into());
        }
        if !(self.airy.l > 0.0) || self.airy.n_grid < 10 {
            return fail(format!(
                "airy: need l > 0 and n_grid >= 10, got l = {}, n_grid = {}",
                self.airy.l, self.airy.n_grid
            ));
        }
        if self.airy.n_modes == 0 {
            return fail("airy.n_modes: must be positive".into());
        }
        if self.stats.edge_indices.is_empty() {
            return fail("stats.edge_indices: need at least one index".into());
        }
        if self.stats.fluct_index < 2 {
            return fail(format!(
                "stats.fluct_index: the Gaussian comparison needs j >= 2, got {}",
                self.stats.fluct_index
            ));
        }
        if self.stats.cov_js.iter().any(|&j| j < self.stats.cov_i) {
            return fail("stats.cov_js: every partner index must be >= cov_i".into());
        }
        if self.stats.z_im == 0.0 {
            return fail("stats.z_im: the loop-equation point needs Im z != 0".into());
        }
        if !(self.sobolev.eta > 0.0 && self.sobolev.eta < 0.5) {
            return fail(format!(
                "sobolev.eta: must lie in (0, 0.5), got {}",
                self.sobolev.eta
            ));
        }
        if self.sobolev.first_sizes.is_empty() && self.sobolev.second_sizes.is_empty() {
            return fail("sobolev: at least one of first_sizes/second_sizes must be non-empty".into());
        }
        if self.sobolev.restarts == 0 {
            return fail("sobolev.restarts: must be positive".into());
        }
        Ok(())
    }

    pub fn build_potential(&self) -> Result<Potential, Failure> {
        match self.potential.form.as_str() {
            "gaussian" => Ok(Potential::gaussian()),
            "quadratic" => Ok(Potential::quadratic(self.potential.scale)),
            "quartic" => Ok(Potential::quartic()),
            "even-poly" => Ok(Potential::even_poly(
                self.potential.coeffs.clone(),
                self.potential.convexity_floor,
                self.potential.growth,
            )),
            other => Err(Failure::Config(format!("potential.form: unknown form '{other}'"))),
        }
    }

    /// True when the configured potential is exactly the standard Gaussian
    /// one, which the tridiagonal model samples without error.
    pub fn is_standard_gaussian(&self) -> bool {
        match self.potential.form.as_str() {
            "gaussian" => true,
            "quadratic" => self.potential.scale == 1.0,
            _ => false,
        }
    }
}
