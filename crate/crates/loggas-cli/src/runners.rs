//! One runner per experiment kind.  Each returns the complete set of output
//! files in memory; `run_experiment` hashes them into the manifest and hands
//! everything to the atomic writer, so a run directory either appears whole
//! or not at all.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use num_complex::Complex64;

use loggas::airy::{sample_airy_eigs, tw_reference_cdf, AiryDiscretization};
use loggas::dynamics::{check_rw_representation, integrate_dbm_global, Observable};
use loggas::equilibrium::{classical_locations, solve_equilibrium};
use loggas::potentials::Potential;
use loggas::rng::{stream_rng, stream_seed};
use loggas::samplers::{
    sample_gbe_archive, sample_loggas_mala, LocalMeasureSpec, MalaSettings, ParticleConfiguration,
    SampleArchive,
};
use loggas::sobolev::{
    estimate_first_constant, estimate_second_constant, InequalityKind, RayleighProblem,
};
use loggas::statistics::{
    edge_covariance_decay, edge_statistic, gaussian_fluctuation_test, level_repulsion_fit,
    loop_equation_residual, predicted_cov_ratio, rigidity_report,
};

use crate::config::ExperimentConfig;
use crate::manifest::{sha256_hex, unix_now, OutputEntry, RunManifest, SeedLineage, ARTIFACT_VERSION};
use crate::svg::{histogram, Plot, Series};
use crate::{acceptance, Failure};

/// Everything a runner produces: named files, the RNG streams it consumed,
/// human-readable summary lines, and — for kinds that embed a pass/fail
/// check — the verdict.
pub struct RunProduct {
    pub files: Vec<(String, Vec<u8>)>,
    pub streams: Vec<(String, u64, u64)>,
    pub summary: Vec<String>,
    /// Index into `files` of the CSV echoed by `--csv`.
    pub primary_csv: usize,
    /// `Some(reason)` when the run completed but its check failed; outputs
    /// are still written and the process exits 1.
    pub check_failed: Option<String>,
}

impl RunProduct {
    fn new() -> Self {
        RunProduct {
            files: Vec::new(),
            streams: Vec::new(),
            summary: Vec::new(),
            primary_csv: 0,
            check_failed: None,
        }
    }

    fn push_file(&mut self, name: &str, content: String) {
        self.files.push((name.to_string(), content.into_bytes()));
    }
}

/// Validate, run, hash, and write.  The output directory appears atomically
/// (assembled under a dot-prefixed sibling, then renamed) and always carries
/// a manifest describing every file in it.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<(RunManifest, RunProduct), Failure> {
    cfg.validate()?;
    let seed = cfg.seed.expect("validated");
    let out = cfg
        .out
        .clone()
        .ok_or_else(|| Failure::Config("out: output directory required".into()))?;
    if out.exists() {
        return Err(Failure::Config(format!(
            "out: {} already exists; refusing to overwrite a previous run",
            out.display()
        )));
    }
    let started = unix_now();
    let product = execute(cfg, seed)?;
    let outputs = product
        .files
        .iter()
        .map(|(name, bytes)| OutputEntry {
            file: name.clone(),
            bytes: bytes.len() as u64,
            sha256: sha256_hex(bytes),
        })
        .collect();
    let manifest = RunManifest {
        artifact_version: ARTIFACT_VERSION,
        kind: cfg.kind.clone(),
        started_unix: started,
        finished_unix: unix_now(),
        seed_lineage: SeedLineage { root: seed, streams: product.streams.clone() },
        outputs,
        config_toml: cfg.to_toml(),
    };
    write_atomic(&out, &product.files, &manifest)?;
    Ok((manifest, product))
}

pub fn execute(cfg: &ExperimentConfig, seed: u64) -> Result<RunProduct, Failure> {
    match cfg.kind.as_str() {
        "equilibrium" => run_equilibrium(cfg),
        "sample" => run_sample(cfg, seed),
        "dbm" => run_dbm(cfg, seed),
        "rwcheck" => run_rwcheck(cfg, seed),
        "airy" => run_airy(cfg, seed),
        "stats" => run_stats(cfg, seed),
        "sobolev" => run_sobolev(cfg, seed),
        "acceptance-suite" => run_acceptance(cfg, seed),
        other => Err(Failure::Config(format!("kind: unknown experiment '{other}'"))),
    }
}

fn write_atomic(
    out: &Path,
    files: &[(String, Vec<u8>)],
    manifest: &RunManifest,
) -> Result<(), Failure> {
    let parent = match out.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    std::fs::create_dir_all(&parent)?;
    let stem = out
        .file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "run".into());
    let tmp = parent.join(format!(".{stem}.partial.{}", std::process::id()));
    if tmp.exists() {
        std::fs::remove_dir_all(&tmp)?;
    }
    std::fs::create_dir(&tmp)?;
    let result = (|| -> Result<(), Failure> {
        for (name, bytes) in files {
            std::fs::write(tmp.join(name), bytes)?;
        }
        let mj = serde_json::to_vec_pretty(manifest)
            .map_err(|e| Failure::Numeric(format!("manifest serialization: {e}")))?;
        std::fs::write(tmp.join("manifest.json"), mj)?;
        std::fs::rename(&tmp, out)?;
        Ok(())
    })();
    if result.is_err() {
        let _ = std::fs::remove_dir_all(&tmp);
    }
    result
}

/// Two-column key/value CSV.
fn kv_csv(pairs: &[(&str, String)]) -> String {
    let mut s = String::from("key,value\n");
    for (k, v) in pairs {
        let _ = writeln!(s, "{k},{v}");
    }
    s
}

/// Histogram bin table (centers and densities) for CSV output; the SVG side
/// uses the step outline from `svg::histogram` instead.
fn bin_table(values: &[f64], bins: usize) -> Vec<(f64, f64)> {
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for &v in values {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if !(lo < hi) || bins == 0 {
        return vec![];
    }
    let w = (hi - lo) / bins as f64;
    let mut counts = vec![0usize; bins];
    for &v in values {
        counts[(((v - lo) / w) as usize).min(bins - 1)] += 1;
    }
    counts
        .iter()
        .enumerate()
        .map(|(b, &c)| (lo + (b as f64 + 0.5) * w, c as f64 / (values.len() as f64 * w)))
        .collect()
}

/// Shared archive path for the `sample` and `stats` kinds: the exact
/// tridiagonal model when the potential is the standard Gaussian one (or on
/// request), MALA otherwise.
fn draw_archive(
    cfg: &ExperimentConfig,
    p: &Potential,
    seed: u64,
) -> Result<(SampleArchive, Vec<(String, u64, u64)>), Failure> {
    let g = &cfg.gas;
    let s = &cfg.sampler;
    let tridiag = match s.method.as_str() {
        "tridiag" => {
            if !cfg.is_standard_gaussian() {
                return Err(Failure::Config(
                    "sampler.method: the tridiagonal model samples only the standard Gaussian \
                     potential; use mala or auto"
                        .into(),
                ));
            }
            true
        }
        "mala" => false,
        _ => cfg.is_standard_gaussian(),
    };
    if tridiag {
        let archive = sample_gbe_archive(g.n, g.beta, s.n_samples, seed);
        Ok((archive, vec![("tridiagonal draws".into(), 0, s.n_samples as u64)]))
    } else {
        let settings = MalaSettings {
            step_size: s.step_size,
            burn_in: s.burn_in,
            thinning: s.thinning,
            n_chains: s.n_chains,
            adapt: s.adapt,
            init: None,
        };
        let archive = sample_loggas_mala(p, g.n, g.beta, s.n_samples, &settings, seed)?;
        Ok((archive, vec![("mala chains".into(), 0, s.n_chains as u64)]))
    }
}

/// The configured potential re-expressed in window coordinates (lower soft
/// edge at the origin), as the local experiments expect.
pub(crate) fn shifted_potential(p: &Potential, a_edge: f64) -> Result<Potential, Failure> {
    let (pv, pd, pdd) = (p.clone(), p.clone(), p.clone());
    Ok(Potential::from_fns(
        move |x| pv.v(x + a_edge),
        move |x| pd.dv(x + a_edge),
        move |x| pdd.ddv(x + a_edge),
        0.0,
        1.0,
    )?)
}

fn run_equilibrium(cfg: &ExperimentConfig) -> Result<RunProduct, Failure> {
    let p = cfg.build_potential()?;
    let meas = solve_equilibrium(&p, 1e-12)?;
    let mut product = RunProduct::new();

    let m = 401;
    let mut density = String::from("x,density\n");
    let mut curve = Vec::with_capacity(m);
    for i in 0..m {
        let x = meas.a + (meas.b - meas.a) * i as f64 / (m - 1) as f64;
        let d = meas.density(x);
        let _ = writeln!(density, "{x},{d}");
        curve.push((x, d));
    }
    product.push_file("density.csv", density);
    product.primary_csv = 0;

    product.push_file(
        "summary.csv",
        kv_csv(&[
            ("form", cfg.potential.form.clone()),
            ("a", format!("{}", meas.a)),
            ("b", format!("{}", meas.b)),
            ("s_a", format!("{}", meas.s_a)),
            ("s_b", format!("{}", meas.s_b)),
            ("mass_defect", format!("{}", meas.mass_defect)),
        ]),
    );

    let mut plot = Plot::new("equilibrium density", "x", "density");
    plot.series.push(Series::line(&cfg.potential.form, curve));
    product.push_file("density.svg", plot.render());

    product.summary.push(format!(
        "equilibrium support [{:.12}, {:.12}]",
        meas.a, meas.b
    ));
    product.summary.push(format!(
        "edge slopes s_a = {:.6e}, s_b = {:.6e}, mass defect {:.3e}",
        meas.s_a, meas.s_b, meas.mass_defect
    ));
    Ok(product)
}

fn run_sample(cfg: &ExperimentConfig, seed: u64) -> Result<RunProduct, Failure> {
    let p = cfg.build_potential()?;
    let (archive, streams) = draw_archive(cfg, &p, seed)?;
    let n = cfg.gas.n;
    let mut product = RunProduct::new();
    product.streams = streams;

    let mut samples = String::from("sample");
    for j in 1..=n {
        let _ = write!(samples, ",lambda_{j}");
    }
    samples.push('\n');
    for (i, c) in archive.configs.iter().enumerate() {
        let _ = write!(samples, "{i}");
        for &v in &c.lambda {
            let _ = write!(samples, ",{v}");
        }
        samples.push('\n');
    }
    product.push_file("samples.csv", samples);
    product.primary_csv = 0;

    let pooled: Vec<f64> =
        archive.configs.iter().flat_map(|c| c.lambda.iter().copied()).collect();
    let bins = 61;
    let mut spectrum = String::from("bin_center,density\n");
    for (x, d) in bin_table(&pooled, bins) {
        let _ = writeln!(spectrum, "{x},{d}");
    }
    product.push_file("spectrum.csv", spectrum);

    let mut plot = Plot::new("empirical spectrum", "x", "density");
    plot.series.push(histogram(&pooled, bins, "samples"));
    if let Ok(meas) = solve_equilibrium(&p, 1e-10) {
        let curve: Vec<(f64, f64)> = (0..401)
            .map(|i| {
                let x = meas.a + (meas.b - meas.a) * i as f64 / 400.0;
                (x, meas.density(x))
            })
            .collect();
        plot.series.push(Series::line("equilibrium", curve));
    }
    product.push_file("spectrum.svg", plot.render());

    product.push_file(
        "summary.csv",
        kv_csv(&[
            ("sampler", archive.sampler_id.clone()),
            ("n", format!("{n}")),
            ("beta", format!("{}", cfg.gas.beta)),
            ("n_samples", format!("{}", archive.configs.len())),
            ("acceptance_rate", format!("{}", archive.acceptance_rate)),
            ("step_size", format!("{}", archive.step_size)),
        ]),
    );

    product.summary.push(format!(
        "{} drew {} configurations of N = {n} at beta = {}",
        archive.sampler_id,
        archive.configs.len(),
        cfg.gas.beta
    ));
    if archive.acceptance_rate < 1.0 {
        product.summary.push(format!(
            "acceptance rate {:.3}, final step size {:.3e}",
            archive.acceptance_rate, archive.step_size
        ));
    }
    Ok(product)
}

fn run_dbm(cfg: &ExperimentConfig, seed: u64) -> Result<RunProduct, Failure> {
    let p = cfg.build_potential()?;
    let n = cfg.gas.n;
    let meas = solve_equilibrium(&p, 1e-10)?;
    let gammas = classical_locations(&meas, n);
    let init = ParticleConfiguration::new((1..=n).map(|k| gammas.loc(k)).collect(), cfg.gas.beta)?;
    let mut rng = stream_rng(seed, 0);
    let path = integrate_dbm_global(&init, &p, cfg.dbm.t_final, cfg.dbm.dt, &mut rng)?;

    let mut product = RunProduct::new();
    product.streams.push(("dbm noise".into(), 0, 1));

    let tracked = n.min(6);
    let mut csv = String::from("t");
    for j in 1..=tracked {
        let _ = write!(csv, ",lambda_{j}");
    }
    if tracked < n {
        let _ = write!(csv, ",lambda_{n}");
    }
    csv.push('\n');
    let mut coord_series: Vec<Vec<(f64, f64)>> = vec![Vec::new(); tracked + usize::from(tracked < n)];
    for (i, t) in path.times.iter().enumerate() {
        let state = &path.states[i];
        let _ = write!(csv, "{t}");
        for j in 0..tracked {
            let _ = write!(csv, ",{}", state.lambda[j]);
            coord_series[j].push((*t, state.lambda[j]));
        }
        if tracked < n {
            let _ = write!(csv, ",{}", state.lambda[n - 1]);
            coord_series[tracked].push((*t, state.lambda[n - 1]));
        }
        csv.push('\n');
    }
    product.push_file("path.csv", csv);
    product.primary_csv = 0;

    let mut plot = Plot::new("Dyson Brownian motion", "t", "position");
    for (j, pts) in coord_series.iter().enumerate() {
        let label = if j < tracked { format!("lambda_{}", j + 1) } else { format!("lambda_{n}") };
        plot.series.push(Series::line(&label, pts.clone()));
    }
    product.push_file("path.svg", plot.render());

    product.push_file(
        "summary.csv",
        kv_csv(&[
            ("n", format!("{n}")),
            ("beta", format!("{}", cfg.gas.beta)),
            ("t_final", format!("{}", cfg.dbm.t_final)),
            ("dt", format!("{}", cfg.dbm.dt)),
            ("steps", format!("{}", path.dt_history.len())),
            ("collisions_avoided", format!("{}", path.collisions_avoided)),
        ]),
    );
    product.summary.push(format!(
        "integrated N = {n} particles to t = {} in {} steps ({} collision retreats)",
        cfg.dbm.t_final,
        path.dt_history.len(),
        path.collisions_avoided
    ));
    Ok(product)
}

fn run_rwcheck(cfg: &ExperimentConfig, seed: u64) -> Result<RunProduct, Failure> {
    let p = cfg.build_potential()?;
    let (n, k, beta, xi) = (cfg.gas.n, cfg.gas.k, cfg.gas.beta, cfg.gas.xi);
    let meas = solve_equilibrium(&p, 1e-10)?;
    let gammas = classical_locations(&meas, n);
    let y: Vec<f64> = (k + 1..=n).map(|j| gammas.loc(j) - meas.a).collect();
    let lspec = LocalMeasureSpec::new(y, k, xi, n)?;
    let p_win = shifted_potential(&p, meas.a)?;

    let mut pairs: Vec<(usize, usize)> = vec![(1, 1), (1, 2), (2, 1), (1, k), (k, k)];
    pairs.retain(|&(a, b)| a <= k && b <= k);
    pairs.dedup();
    let mut seen = Vec::new();
    pairs.retain(|pr| {
        if seen.contains(pr) {
            false
        } else {
            seen.push(*pr);
            true
        }
    });
    pairs.truncate(cfg.rwcheck.max_pairs);

    let mut product = RunProduct::new();
    let mut csv = String::from("q_index,f_index,lhs,rhs,se_lhs,se_rhs,flagged\n");
    let mut flagged = 0usize;
    for (idx, &(a, b)) in pairs.iter().enumerate() {
        let rep = check_rw_representation(
            &lspec,
            &p_win,
            None,
            beta,
            &Observable::coordinate(a),
            &Observable::coordinate(b),
            cfg.rwcheck.t_final,
            cfg.rwcheck.n_paths,
            stream_seed(seed, 100 + idx as u64),
        )?;
        let _ = writeln!(
            csv,
            "{a},{b},{},{},{},{},{}",
            rep.lhs, rep.rhs, rep.se_lhs, rep.se_rhs, rep.flagged
        );
        if rep.flagged {
            flagged += 1;
        }
        product.summary.push(format!(
            "Q = x_{a}, F = x_{b}: lhs {:.5e}, rhs {:.5e}, |diff| {:.2e} vs se {:.2e}{}",
            rep.lhs,
            rep.rhs,
            (rep.lhs - rep.rhs).abs(),
            rep.se_lhs + rep.se_rhs,
            if rep.flagged { "  ** flagged" } else { "" }
        ));
        product.streams.push((format!("rw pair x{a}/x{b}"), 100 + idx as u64, 1));
    }
    product.push_file("report.csv", csv);
    product.primary_csv = 0;
    if flagged > 0 {
        product.check_failed = Some(format!(
            "representation check flagged {flagged} of {} pairs",
            pairs.len()
        ));
    }
    Ok(product)
}

fn run_airy(cfg: &ExperimentConfig, seed: u64) -> Result<RunProduct, Failure> {
    let beta = cfg.gas.beta;
    let a = &cfg.airy;
    let d = AiryDiscretization::new(a.l, a.n_grid, beta)?;
    let mut product = RunProduct::new();

    if beta.is_infinite() {
        let mut rng = stream_rng(seed, 0);
        let eigs = sample_airy_eigs(&d, a.n_modes, &mut rng);
        let mut csv = String::from("mode,lambda\n");
        for (i, &v) in eigs.iter().enumerate() {
            let _ = writeln!(csv, "{},{v}", i + 1);
        }
        product.push_file("modes.csv", csv);
        product.primary_csv = 0;
        product.push_file(
            "summary.csv",
            kv_csv(&[
                ("beta", "inf".into()),
                ("l", format!("{}", a.l)),
                ("n_grid", format!("{}", a.n_grid)),
                ("lambda_1", format!("{}", eigs.first().copied().unwrap_or(f64::NAN))),
            ]),
        );
        product.summary.push(format!(
            "noise-free spectrum: {}",
            eigs.iter()
                .enumerate()
                .map(|(i, v)| format!("lambda_{} = {:.6}", i + 1, v))
                .collect::<Vec<_>>()
                .join(", ")
        ));
        return Ok(product);
    }

    let mut rng = stream_rng(seed, 0);
    let table = tw_reference_cdf(beta, a.n_draws, &d, &mut rng)?;
    let mut csv = String::from("x,cdf\n");
    for (x, f) in table.values.iter().zip(&table.cdf) {
        let _ = writeln!(csv, "{x},{f}");
    }
    product.push_file("tw_cdf.csv", csv);
    product.primary_csv = 0;
    product.streams.push(("airy noise".into(), 0, 1));

    let pts: Vec<(f64, f64)> =
        table.values.iter().zip(&table.cdf).map(|(&x, &f)| (x, f)).collect();
    let mut plot = Plot::new("edge fluctuation law (-Lambda_1)", "x", "F(x)");
    plot.series.push(Series::line(&format!("beta = {beta}"), pts));
    product.push_file("tw_cdf.svg", plot.render());

    let mean = table.values.iter().sum::<f64>() / table.values.len() as f64;
    product.push_file(
        "summary.csv",
        kv_csv(&[
            ("beta", format!("{beta}")),
            ("n_draws", format!("{}", a.n_draws)),
            ("l", format!("{}", a.l)),
            ("n_grid", format!("{}", a.n_grid)),
            ("median", format!("{}", table.median())),
            ("mean", format!("{mean}")),
        ]),
    );
    product.summary.push(format!(
        "reference edge law at beta = {beta}: median {:.5}, mean {:.5} ({} draws)",
        table.median(),
        mean,
        a.n_draws
    ));
    Ok(product)
}

fn run_stats(cfg: &ExperimentConfig, seed: u64) -> Result<RunProduct, Failure> {
    let p = cfg.build_potential()?;
    let (n, beta) = (cfg.gas.n, cfg.gas.beta);
    let st = &cfg.stats;
    let (archive, streams) = draw_archive(cfg, &p, seed)?;
    let meas = solve_equilibrium(&p, 1e-10)?;
    let gammas = classical_locations(&meas, n);

    let mut product = RunProduct::new();
    product.streams = streams;

    // Rigidity exceedance per index.
    let rig = rigidity_report(&archive, &gammas, cfg.gas.xi)?;
    let mut csv = String::from("k,exceedance_fraction\n");
    for (i, f) in rig.fractions.iter().enumerate() {
        let _ = writeln!(csv, "{},{f}", i + 1);
    }
    product.push_file("rigidity.csv", csv);
    product.primary_csv = 0;
    product.summary.push(format!(
        "rigidity at xi = {}: worst exceedance {:.4} at k = {}",
        cfg.gas.xi, rig.worst_fraction, rig.worst_index
    ));

    // Scaled edge statistics, long format.
    let mut csv = String::from("j,sample,value\n");
    let mut first_edge: Vec<f64> = Vec::new();
    for &j in &st.edge_indices {
        let es = edge_statistic(&archive, &gammas, j)?;
        if first_edge.is_empty() {
            first_edge = es.values.clone();
        }
        for (i, v) in es.values.iter().enumerate() {
            let _ = writeln!(csv, "{j},{i},{v}");
        }
    }
    product.push_file("edge.csv", csv);
    let mut plot = Plot::new("scaled edge statistic", "value", "density");
    plot.series.push(histogram(
        &first_edge,
        41,
        &format!("j = {}", st.edge_indices[0]),
    ));
    product.push_file("edge.svg", plot.render());

    // Gaussian comparison for a mesoscopic index.
    let ft = gaussian_fluctuation_test(&archive, &gammas, st.fluct_index, beta)?;
    product.push_file(
        "fluct.csv",
        kv_csv(&[
            ("j", format!("{}", st.fluct_index)),
            ("mean", format!("{}", ft.mean)),
            ("var", format!("{}", ft.var)),
            ("ks_vs_normal", format!("{}", ft.ks_vs_normal)),
            ("in_theorem_scope", format!("{}", ft.in_theorem_scope)),
        ]),
    );
    product.summary.push(format!(
        "fluctuation index j = {}: mean {:.4}, var {:.4}, KS vs normal {:.4}{}",
        st.fluct_index,
        ft.mean,
        ft.var,
        ft.ks_vs_normal,
        if ft.in_theorem_scope { "" } else { "  (outside proven regime)" }
    ));

    // Small-gap repulsion from bulk gaps, scaled to mean spacing 1.
    let lo = n / 4;
    let hi = 3 * n / 4;
    let mut gaps = Vec::with_capacity(archive.configs.len() * (hi - lo));
    for c in &archive.configs {
        for i in lo..hi.min(n - 1) {
            gaps.push((c.lambda[i + 1] - c.lambda[i]) * n as f64);
        }
    }
    match level_repulsion_fit(&gaps, beta) {
        Ok(fit) => {
            let mut csv = String::from("s,cdf\n");
            for (s, f) in &fit.curve {
                let _ = writeln!(csv, "{s},{f}");
            }
            product.push_file("repulsion.csv", csv);
            product.summary.push(format!(
                "repulsion exponent {:.3} (CI [{:.3}, {:.3}], predicted {}){}",
                fit.exponent,
                fit.ci.0,
                fit.ci.1,
                fit.predicted,
                if fit.advisory_widen_window { "  (few events; widen window)" } else { "" }
            ));
        }
        Err(e) => product.summary.push(format!("repulsion fit skipped: {e}")),
    }

    // First loop equation residual.
    let z = Complex64::new(st.z_re, st.z_im);
    let lr = loop_equation_residual(&archive, &p, beta, z)?;
    product.push_file(
        "loop.csv",
        kv_csv(&[
            ("z_re", format!("{}", st.z_re)),
            ("z_im", format!("{}", st.z_im)),
            ("residual_re", format!("{}", lr.residual.re)),
            ("residual_im", format!("{}", lr.residual.im)),
            ("se", format!("{}", lr.se)),
            ("n_samples", format!("{}", lr.n_samples)),
        ]),
    );
    product.summary.push(format!(
        "loop residual at z = {:.3} + {:.3}i: |r| = {:.3e} (se {:.3e})",
        st.z_re,
        st.z_im,
        lr.residual.norm(),
        lr.se
    ));

    // Edge covariance decay.
    let cov = edge_covariance_decay(&archive, &gammas, st.cov_i, &st.cov_js)?;
    let mut csv = String::from("i,j,cov,se,predicted_ratio\n");
    for &(j, c, se) in &cov.entries {
        let _ = writeln!(csv, "{},{j},{c},{se},{}", st.cov_i, predicted_cov_ratio(st.cov_i, j));
    }
    product.push_file("cov.csv", csv);

    Ok(product)
}

fn run_sobolev(cfg: &ExperimentConfig, seed: u64) -> Result<RunProduct, Failure> {
    let sb = &cfg.sobolev;
    let mut product = RunProduct::new();

    let mut first = String::from("k,eta,c_hat\n");
    let mut first_pts = Vec::new();
    let mut c_hats = Vec::new();
    for (i, &k) in sb.first_sizes.iter().enumerate() {
        let prob = RayleighProblem::new(k, sb.eta, InequalityKind::First)?;
        let mut rng = stream_rng(seed, i as u64);
        let fc = estimate_first_constant(&prob, sb.restarts, &mut rng)?;
        let _ = writeln!(first, "{k},{},{}", sb.eta, fc.c_hat);
        first_pts.push(((k as f64).ln(), fc.c_hat));
        c_hats.push((k, fc.c_hat));
        product.streams.push((format!("first constant K={k}"), i as u64, 1));
    }
    product.push_file("first.csv", first);
    product.primary_csv = 0;
    for w in c_hats.windows(2) {
        product.summary.push(format!(
            "c_hat({}) = {:.5}, c_hat({}) = {:.5}, ratio {:.4}",
            w[0].0,
            w[0].1,
            w[1].0,
            w[1].1,
            w[1].1 / w[0].1
        ));
    }
    if c_hats.len() == 1 {
        product.summary.push(format!("c_hat({}) = {:.5}", c_hats[0].0, c_hats[0].1));
    }

    let mut second = String::from("m,ratio,ln_ratio_over_sqrt_ln_m\n");
    let mut second_pts = Vec::new();
    for (i, &m) in sb.second_sizes.iter().enumerate() {
        let mut rng = stream_rng(seed, 1000 + i as u64);
        let sc = estimate_second_constant(m, sb.restarts, &mut rng)?;
        let norm = sc.ratio.ln() / (m as f64).ln().sqrt();
        let _ = writeln!(second, "{m},{},{norm}", sc.ratio);
        second_pts.push(((m as f64).ln(), norm));
        product.summary.push(format!(
            "second-kind ratio at M = {m}: R = {:.5}, ln R / sqrt(ln M) = {:.5}",
            sc.ratio, norm
        ));
        product.streams.push((format!("second constant M={m}"), 1000 + i as u64, 1));
    }
    product.push_file("second.csv", second);

    if !first_pts.is_empty() {
        let mut plot = Plot::new("first-kind constant", "ln K", "c_hat");
        plot.series.push(Series::scatter("c_hat", first_pts.clone()));
        plot.series.push(Series::line("", first_pts));
        product.push_file("first.svg", plot.render());
    }
    if !second_pts.is_empty() {
        let mut plot = Plot::new("second-kind growth", "ln M", "ln R / sqrt(ln M)");
        plot.series.push(Series::scatter("normalized", second_pts.clone()));
        plot.series.push(Series::line("", second_pts));
        product.push_file("second.svg", plot.render());
    }
    Ok(product)
}

fn run_acceptance(cfg: &ExperimentConfig, seed: u64) -> Result<RunProduct, Failure> {
    let level = if cfg.level == "quick" {
        acceptance::Level::Quick
    } else {
        acceptance::Level::Full
    };
    let report = acceptance::run_suite(level, seed);
    let mut product = RunProduct::new();
    product.push_file("report.csv", report.to_csv());
    product.primary_csv = 0;
    product.summary = report.table_lines();
    if !report.all_pass() {
        let failed: Vec<String> = report
            .outcomes
            .iter()
            .filter(|o| !o.pass)
            .map(|o| format!("{}", o.id))
            .collect();
        product.check_failed = Some(format!(
            "acceptance suite failed criteria: {}",
            failed.join(", ")
        ));
    }
    Ok(product)
}
