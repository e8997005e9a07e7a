//! The acceptance suite: one routine per advertised guarantee of the
//! library, each run against fixed seeds derived from the suite's root seed.
//! A failed criterion is a row in the report, never an early exit — the
//! suite always runs to the end and the caller decides what a failure means.
//!
//! `Full` runs every check at its stated size and tolerance; `Quick` shrinks
//! the Monte Carlo budgets and widens tolerances by 1.5 for a fast sanity
//! pass.

use std::time::Instant;

use num_complex::Complex64;

use loggas::airy::{sample_airy_eigs, tw_reference_cdf, AiryDiscretization};
use loggas::dynamics::{check_heat_decay, check_rw_representation, Observable};
use loggas::equilibrium::{classical_locations, solve_equilibrium, ClassicalLocations};
use loggas::potentials::Potential;
use loggas::rng::{stream_rng, stream_seed};
use loggas::samplers::{
    sample_gbe_archive, sample_generalized_wigner, sample_loggas_mala, EntryDist,
    LocalMeasureSpec, MalaSettings, MatrixSymmetry, SampleArchive, VarianceProfile,
};
use loggas::sobolev::{
    estimate_first_constant, estimate_second_constant, InequalityKind, RayleighProblem,
};
use loggas::statistics::{
    edge_covariance_decay, edge_statistic, gaussian_fluctuation_test, ks_distance,
    level_repulsion_fit, loop_equation_residual, rigidity_report,
};

use crate::config::ExperimentConfig;
use crate::runners::{execute, shifted_potential};
use crate::Failure;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Level {
    Quick,
    Full,
}

pub struct CriterionOutcome {
    pub id: usize,
    pub name: &'static str,
    pub pass: bool,
    pub details: String,
    pub seconds: f64,
}

pub struct AcceptanceReport {
    pub level: Level,
    pub outcomes: Vec<CriterionOutcome>,
}

impl AcceptanceReport {
    pub fn all_pass(&self) -> bool {
        self.outcomes.iter().all(|o| o.pass)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("id,name,pass,seconds,details\n");
        for o in &self.outcomes {
            s.push_str(&format!(
                "{},{},{},{:.2},{}\n",
                o.id,
                o.name,
                o.pass,
                o.seconds,
                csv_quote(&o.details)
            ));
        }
        s
    }

    pub fn table_lines(&self) -> Vec<String> {
        let mut lines = vec![format!(
            "acceptance suite ({} level)",
            match self.level {
                Level::Quick => "quick",
                Level::Full => "full",
            }
        )];
        for o in &self.outcomes {
            lines.push(format!(
                "{:>2}  {:<36} {}  {:>8.1}s  {}",
                o.id,
                o.name,
                if o.pass { "PASS" } else { "FAIL" },
                o.seconds,
                o.details
            ));
        }
        let n_fail = self.outcomes.iter().filter(|o| !o.pass).count();
        lines.push(if n_fail == 0 {
            format!("all {} criteria passed", self.outcomes.len())
        } else {
            format!("{n_fail} of {} criteria FAILED", self.outcomes.len())
        });
        lines
    }
}

fn csv_quote(s: &str) -> String {
    format!("\"{}\"", s.replace('"', "\"\""))
}

type Criterion = fn(Level, u64) -> Result<(bool, String), Failure>;

pub fn run_suite(level: Level, seed: u64) -> AcceptanceReport {
    let criteria: [(usize, &'static str, Criterion); 14] = [
        (1, "equilibrium semicircle", c01_equilibrium),
        (2, "tridiagonal vs mala agreement", c02_sampler_agreement),
        (3, "edge universality quartic vs gaussian", c03_edge_universality),
        (4, "two-band profile edge law", c04_two_band_edge),
        (5, "stochastic airy edge law", c05_airy_edge),
        (6, "mesoscopic gaussian fluctuations", c06_mesoscopic_gaussian),
        (7, "rigidity exceedance", c07_rigidity),
        (8, "small-gap repulsion exponents", c08_repulsion),
        (9, "edge covariance decay slope", c09_cov_decay),
        (10, "loop equation residual", c10_loop_equation),
        (11, "random walk representation", c11_rw_representation),
        (12, "sobolev constants", c12_sobolev),
        (13, "heat kernel decay", c13_heat_decay),
        (14, "byte-identical reruns", c14_determinism),
    ];
    let mut outcomes = Vec::with_capacity(criteria.len());
    for (id, name, f) in criteria {
        let start = Instant::now();
        let (pass, details) = match f(level, stream_seed(seed, 9000 + id as u64)) {
            Ok(r) => r,
            Err(e) => (false, format!("errored: {e}")),
        };
        outcomes.push(CriterionOutcome {
            id,
            name,
            pass,
            details,
            seconds: start.elapsed().as_secs_f64(),
        });
    }
    AcceptanceReport { level, outcomes }
}

fn tol(level: Level, full: f64) -> f64 {
    match level {
        Level::Full => full,
        Level::Quick => full * 1.5,
    }
}

fn semicircle_gammas(n: usize) -> Result<ClassicalLocations, Failure> {
    let meas = solve_equilibrium(&Potential::gaussian(), 1e-12)?;
    Ok(classical_locations(&meas, n))
}

fn largest(archive: &SampleArchive) -> Vec<f64> {
    archive.configs.iter().map(|c| *c.lambda.last().unwrap()).collect()
}

// ---------------------------------------------------------------------------

fn c01_equilibrium(_: Level, _: u64) -> Result<(bool, String), Failure> {
    let meas = solve_equilibrium(&Potential::gaussian(), 1e-12)?;
    let ea = (meas.a + 2.0).abs();
    let eb = (meas.b - 2.0).abs();
    let mut emax = 0.0f64;
    for i in 0..401 {
        let x = -2.0 + 4.0 * i as f64 / 400.0;
        let exact = (4.0 - x * x).max(0.0).sqrt() / (2.0 * std::f64::consts::PI);
        emax = emax.max((meas.density(x) - exact).abs());
    }
    let pass = ea < 1e-10 && eb < 1e-10 && emax < 1e-8;
    Ok((pass, format!("|A+2| = {ea:.2e}, |B-2| = {eb:.2e}, max density error {emax:.2e}")))
}

fn c02_sampler_agreement(level: Level, seed: u64) -> Result<(bool, String), Failure> {
    let (n, beta) = (50, 2.0);
    let m = match level {
        Level::Full => 2000,
        Level::Quick => 500,
    };
    let bound = tol(level, 0.03);
    let exact = sample_gbe_archive(n, beta, m, stream_seed(seed, 1));
    let settings = MalaSettings {
        step_size: 1e-5,
        burn_in: 5000,
        thinning: 400,
        n_chains: 4,
        adapt: true,
        init: None,
    };
    let mala = sample_loggas_mala(&Potential::gaussian(), n, beta, m, &settings, stream_seed(seed, 2))?;
    let ks = ks_distance(&largest(&exact), &largest(&mala));
    Ok((ks < bound, format!("KS(lambda_max) = {ks:.4} (bound {bound}), mala acc {:.3}", mala.acceptance_rate)))
}

fn c03_edge_universality(level: Level, seed: u64) -> Result<(bool, String), Failure> {
    let beta = 2.0;
    let (n, m, settings) = match level {
        Level::Full => (
            500,
            2000,
            MalaSettings {
                step_size: 1e-7,
                burn_in: 10_000,
                thinning: 3600,
                n_chains: 8,
                adapt: true,
                init: None, // filled below with the quartic classical locations
            },
        ),
        Level::Quick => (
            150,
            600,
            MalaSettings {
                step_size: 1.1e-6,
                burn_in: 6000,
                thinning: 900,
                n_chains: 6,
                adapt: true,
                init: None,
            },
        ),
    };
    let bound = tol(level, 0.05);

    let gauss = sample_gbe_archive(n, beta, m, stream_seed(seed, 1));
    let gammas_gauss = semicircle_gammas(n)?;

    let quartic = Potential::quartic();
    let meas_q = solve_equilibrium(&quartic, 1e-12)?;
    let gammas_q = classical_locations(&meas_q, n);
    let mut settings = settings;
    settings.init = Some((1..=n).map(|k| gammas_q.loc(k)).collect());
    let mala = sample_loggas_mala(&quartic, n, beta, m, &settings, stream_seed(seed, 2))?;

    let mut worst = 0.0f64;
    let mut parts = Vec::new();
    for j in [1usize, 2, 3] {
        let a = edge_statistic(&gauss, &gammas_gauss, j)?;
        let b = edge_statistic(&mala, &gammas_q, j)?;
        let ks = ks_distance(&a.values, &b.values);
        worst = worst.max(ks);
        parts.push(format!("KS_{j} = {ks:.4}"));
    }
    Ok((
        worst < bound,
        format!("{} (bound {bound}), mala acc {:.3}", parts.join(", "), mala.acceptance_rate),
    ))
}

fn c04_two_band_edge(level: Level, seed: u64) -> Result<(bool, String), Failure> {
    let (n, m) = match level {
        Level::Full => (400, 2000),
        Level::Quick => (200, 600),
    };
    let bound = tol(level, 0.05);
    let profile = VarianceProfile::two_band(n, 2.0, 1.0)?;
    let configs = (0..m)
        .map(|i| {
            let mut rng = stream_rng(seed, 10 + i as u64);
            sample_generalized_wigner(&profile, EntryDist::Bernoulli, MatrixSymmetry::RealSymmetric, &mut rng)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let wigner = SampleArchive {
        configs,
        sampler_id: "generalized-wigner".into(),
        seed,
        step_size: 0.0,
        burn_in: 0,
        thinning: 1,
        acceptance_rate: 1.0,
    };
    let gauss = sample_gbe_archive(n, 1.0, m, stream_seed(seed, 1));
    let gammas = semicircle_gammas(n)?;
    let a = edge_statistic(&wigner, &gammas, 1)?;
    let b = edge_statistic(&gauss, &gammas, 1)?;
    let ks = ks_distance(&a.values, &b.values);
    Ok((ks < bound, format!("KS(edge j=1, two-band Bernoulli vs gaussian beta=1) = {ks:.4} (bound {bound})")))
}

fn c05_airy_edge(level: Level, seed: u64) -> Result<(bool, String), Failure> {
    let beta = 2.0;
    let (n, m) = match level {
        Level::Full => (800, 4000),
        Level::Quick => (400, 1000),
    };
    let bound = tol(level, 0.05);

    // Deterministic hook: the noise-free ground state is the first zero of
    // the Airy function.
    let d_inf = AiryDiscretization::new(16.0, 4000, f64::INFINITY)?;
    let mut rng = stream_rng(seed, 0);
    let ground = sample_airy_eigs(&d_inf, 1, &mut rng)[0];
    let zero_err = (ground - 2.338_107_410_459_767).abs();

    let d = AiryDiscretization::default_for(beta)?;
    let mut rng = stream_rng(seed, 1);
    let table = tw_reference_cdf(beta, m, &d, &mut rng)?;
    let operator: Vec<f64> = table.values.iter().map(|&v| -v).collect();

    let tridiag = sample_gbe_archive(n, beta, m, stream_seed(seed, 2));
    let scale = (n as f64).powf(2.0 / 3.0);
    let matrix: Vec<f64> = largest(&tridiag).iter().map(|&l| scale * (l - 2.0)).collect();

    let ks = ks_distance(&operator, &matrix);
    let pass = ks < bound && zero_err < 1e-3;
    Ok((
        pass,
        format!("KS(-Lambda_1 vs N^2/3(lambda_max-2)) = {ks:.4} (bound {bound}), airy zero err {zero_err:.2e}"),
    ))
}

fn c06_mesoscopic_gaussian(level: Level, seed: u64) -> Result<(bool, String), Failure> {
    let (n, i, m) = match level {
        Level::Full => (2000, 64, 5000),
        Level::Quick => (500, 16, 1000),
    };
    let (mean_tol, var_tol, ks_tol) = (tol(level, 0.1), tol(level, 0.15), tol(level, 0.05));
    let archive = sample_gbe_archive(n, 2.0, m, stream_seed(seed, 1));
    let gammas = semicircle_gammas(n)?;
    let ft = gaussian_fluctuation_test(&archive, &gammas, i, 2.0)?;
    let pass = ft.mean.abs() < mean_tol && (ft.var - 1.0).abs() < var_tol && ft.ks_vs_normal < ks_tol;
    Ok((
        pass,
        format!(
            "X_{i}: mean {:.3} (tol {mean_tol}), var {:.3} (tol 1±{var_tol}), KS vs normal {:.3} (tol {ks_tol})",
            ft.mean, ft.var, ft.ks_vs_normal
        ),
    ))
}

fn c07_rigidity(level: Level, seed: u64) -> Result<(bool, String), Failure> {
    let (n, m) = match level {
        Level::Full => (1000, 500),
        Level::Quick => (300, 200),
    };
    let bound = tol(level, 0.01);
    let archive = sample_gbe_archive(n, 2.0, m, stream_seed(seed, 1));
    let gammas = semicircle_gammas(n)?;
    let rig = rigidity_report(&archive, &gammas, 0.2)?;
    Ok((
        rig.worst_fraction < bound,
        format!(
            "worst exceedance {:.4} at k = {} over {m} samples (bound {bound})",
            rig.worst_fraction, rig.worst_index
        ),
    ))
}

fn c08_repulsion(level: Level, seed: u64) -> Result<(bool, String), Failure> {
    let n = 200;
    let m = match level {
        Level::Full => 1000,
        Level::Quick => 300,
    };
    let half = tol(level, 0.3);
    let mut parts = Vec::new();
    let mut pass = true;
    for (idx, beta) in [2.0, 1.0].into_iter().enumerate() {
        let archive = sample_gbe_archive(n, beta, m, stream_seed(seed, 1 + idx as u64));
        let (lo, hi) = (n / 4, 3 * n / 4);
        let mut gaps = Vec::with_capacity(m * (hi - lo));
        for c in &archive.configs {
            for k in lo..hi {
                gaps.push((c.lambda[k + 1] - c.lambda[k]) * n as f64);
            }
        }
        let fit = level_repulsion_fit(&gaps, beta)?;
        let target = beta + 1.0;
        if (fit.exponent - target).abs() > half {
            pass = false;
        }
        parts.push(format!(
            "beta={beta}: exponent {:.3} (want {target}±{half}, {} gaps)",
            fit.exponent,
            gaps.len()
        ));
    }
    Ok((pass, parts.join("; ")))
}

fn c09_cov_decay(level: Level, seed: u64) -> Result<(bool, String), Failure> {
    let (n, m, i, js) = match level {
        Level::Full => (4000, 800, 4usize, [32usize, 128, 512]),
        Level::Quick => (1000, 300, 4, [16, 64, 256]),
    };
    let (lo, hi) = match level {
        Level::Full => (-0.67, -0.17),
        Level::Quick => (-0.84, -0.08),
    };
    let archive = sample_gbe_archive(n, 2.0, m, stream_seed(seed, 1));
    let gammas = semicircle_gammas(n)?;
    let cov = edge_covariance_decay(&archive, &gammas, i, &js)?;
    if cov.entries.iter().any(|&(_, c, _)| c <= 0.0) {
        let detail = cov
            .entries
            .iter()
            .map(|&(j, c, se)| format!("cov(X_{i},X_{j}) = {c:.4}±{se:.4}"))
            .collect::<Vec<_>>()
            .join(", ");
        return Ok((false, format!("non-positive covariance, no slope: {detail}")));
    }
    // Least-squares slope of ln cov against ln j.
    let pts: Vec<(f64, f64)> =
        cov.entries.iter().map(|&(j, c, _)| ((j as f64).ln(), c.ln())).collect();
    let xm = pts.iter().map(|p| p.0).sum::<f64>() / pts.len() as f64;
    let ym = pts.iter().map(|p| p.1).sum::<f64>() / pts.len() as f64;
    let slope = pts.iter().map(|p| (p.0 - xm) * (p.1 - ym)).sum::<f64>()
        / pts.iter().map(|p| (p.0 - xm) * (p.0 - xm)).sum::<f64>();
    let pass = slope >= lo && slope <= hi;
    let covs = cov
        .entries
        .iter()
        .map(|&(j, c, _)| format!("j={j}: {c:.4}"))
        .collect::<Vec<_>>()
        .join(", ");
    Ok((pass, format!("slope {slope:.3} (want [{lo}, {hi}]); {covs}")))
}

fn c10_loop_equation(level: Level, seed: u64) -> Result<(bool, String), Failure> {
    let m = match level {
        Level::Full => 10_000,
        Level::Quick => 2000,
    };
    let k_se = tol(level, 3.0);
    let archive = sample_gbe_archive(200, 2.0, m, stream_seed(seed, 1));
    let lr = loop_equation_residual(&archive, &Potential::gaussian(), 2.0, Complex64::new(1.0, 0.5))?;
    let pass = lr.residual.norm() <= k_se * lr.se;
    Ok((
        pass,
        format!("|residual| = {:.3e} vs {k_se} se = {:.3e} ({m} samples)", lr.residual.norm(), k_se * lr.se),
    ))
}

fn c11_rw_representation(level: Level, seed: u64) -> Result<(bool, String), Failure> {
    let n = 200;
    let xi = 0.1;
    let n_paths = match level {
        Level::Full => 100_000,
        Level::Quick => 20_000,
    };
    let k_se = tol(level, 3.0);
    let p = Potential::gaussian();
    let meas = solve_equilibrium(&p, 1e-12)?;
    let gammas = classical_locations(&meas, n);
    let p_win = shifted_potential(&p, meas.a)?;

    // Both window sizes, five observable pairs between them.
    let designs: [(usize, usize, usize); 5] =
        [(2, 1, 1), (2, 1, 2), (2, 2, 1), (4, 1, 4), (4, 4, 4)];
    let mut pass = true;
    let mut parts = Vec::new();
    for (t, &(k, qa, fb)) in designs.iter().enumerate() {
        let y: Vec<f64> = (k + 1..=n).map(|j| gammas.loc(j) - meas.a).collect();
        let lspec = LocalMeasureSpec::new(y, k, xi, n)?;
        let rep = check_rw_representation(
            &lspec,
            &p_win,
            None,
            2.0,
            &Observable::coordinate(qa),
            &Observable::coordinate(fb),
            1.0,
            n_paths,
            stream_seed(seed, 20 + t as u64),
        )?;
        let gap = (rep.lhs - rep.rhs).abs();
        let allowed = k_se * (rep.se_lhs + rep.se_rhs);
        if gap > allowed {
            pass = false;
        }
        parts.push(format!("K={k} x{qa}/x{fb}: |diff| {gap:.2e} vs {allowed:.2e}"));
    }
    Ok((pass, parts.join("; ")))
}

fn c12_sobolev(level: Level, seed: u64) -> Result<(bool, String), Failure> {
    let eta = 0.1;
    let (first_sizes, second_sizes, restarts): (&[usize], &[usize], usize) = match level {
        Level::Full => (&[128, 256, 512], &[64, 256, 1024], 32),
        Level::Quick => (&[64, 128], &[64, 256], 8),
    };
    let ratio_floor = match level {
        Level::Full => 0.8,
        Level::Quick => 0.8 / 1.5,
    };
    let spread_cap = tol(level, 2.0);

    let mut c_hats = Vec::new();
    for (t, &k) in first_sizes.iter().enumerate() {
        let prob = RayleighProblem::new(k, eta, InequalityKind::First)?;
        let fc = estimate_first_constant(&prob, restarts, &mut stream_rng(seed, t as u64))?;
        c_hats.push((k, fc.c_hat));
    }
    let mut pass = c_hats.iter().all(|&(_, c)| c > 0.0);
    let mut parts: Vec<String> =
        c_hats.iter().map(|&(k, c)| format!("c_hat({k}) = {c:.4}")).collect();
    for w in c_hats.windows(2) {
        let r = w[1].1 / w[0].1;
        if r < ratio_floor {
            pass = false;
        }
        parts.push(format!("ratio {}/{} = {r:.3} (floor {ratio_floor:.3})", w[1].0, w[0].0));
    }

    let mut norms = Vec::new();
    for (t, &msz) in second_sizes.iter().enumerate() {
        let sc = estimate_second_constant(msz, restarts, &mut stream_rng(seed, 100 + t as u64))?;
        norms.push(sc.ratio.ln() / (msz as f64).ln().sqrt());
    }
    // "Varies by less than a factor of two" for a quantity of constant sign:
    // at desk scale the measured R sits below 1, so ln R is negative and the
    // normalized value should be a stable negative constant.
    let same_sign =
        norms.iter().all(|&v| v > 0.0) || norms.iter().all(|&v| v < 0.0);
    let amax = norms.iter().map(|v| v.abs()).fold(f64::NEG_INFINITY, f64::max);
    let amin = norms.iter().map(|v| v.abs()).fold(f64::INFINITY, f64::min);
    if !same_sign || amax / amin >= spread_cap {
        pass = false;
    }
    parts.push(format!(
        "lnR/sqrt(lnM) in [{:.4}, {:.4}], spread {:.3} (cap {spread_cap})",
        norms.iter().cloned().fold(f64::INFINITY, f64::min),
        norms.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        amax / amin
    ));
    Ok((pass, parts.join("; ")))
}

fn c13_heat_decay(level: Level, seed: u64) -> Result<(bool, String), Failure> {
    let (k, instances, cap) = match level {
        Level::Full => (64, 5, 10.0),
        Level::Quick => (32, 3, 15.0),
    };
    let rep = check_heat_decay(k, 1.0, 1.0, f64::INFINITY, 0.1, instances, stream_seed(seed, 1))?;
    let pass = rep.sup_ratio <= cap && !rep.growth_flagged;
    Ok((
        pass,
        format!(
            "sup measured/envelope = {:.3} (cap {cap}), doubled-K sup = {:.3}{}",
            rep.sup_ratio,
            rep.doubled_sup_ratio,
            if rep.growth_flagged { ", growth flagged" } else { "" }
        ),
    ))
}

fn c14_determinism(_: Level, seed: u64) -> Result<(bool, String), Failure> {
    let mut cfg = ExperimentConfig::default();
    cfg.kind = "sample".into();
    cfg.seed = Some(stream_seed(seed, 1));
    cfg.gas.n = 40;
    cfg.sampler.n_samples = 200;
    let once = execute(&cfg, cfg.seed.unwrap())?;
    let twice = execute(&cfg, cfg.seed.unwrap())?;
    let mut same = once.files.len() == twice.files.len();
    if same {
        for ((na, ba), (nb, bb)) in once.files.iter().zip(&twice.files) {
            if na != nb || ba != bb {
                same = false;
                break;
            }
        }
    }

    let mut eq_cfg = ExperimentConfig::default();
    eq_cfg.kind = "equilibrium".into();
    eq_cfg.seed = Some(stream_seed(seed, 2));
    eq_cfg.potential.form = "quartic".into();
    let ea = execute(&eq_cfg, eq_cfg.seed.unwrap())?;
    let eb = execute(&eq_cfg, eq_cfg.seed.unwrap())?;
    let eq_same = ea.files == eb.files;

    let pass = same && eq_same;
    Ok((
        pass,
        format!(
            "sample rerun identical: {same}; equilibrium rerun identical: {eq_same} ({} + {} files)",
            once.files.len(),
            ea.files.len()
        ),
    ))
}
