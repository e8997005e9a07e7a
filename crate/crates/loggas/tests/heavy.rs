//! Long-running dynamics checks, ignored by default. Run explicitly with
//! `cargo test --release --test heavy -- --ignored` (several minutes on a
//! laptop core; embarrassingly parallel across paths).

use loggas::dynamics::{integrate_dbm_global, integrate_local_sde};
use loggas::equilibrium::{classical_locations, solve_equilibrium};
use loggas::potentials::Potential;
use loggas::rng::stream_rng;
use loggas::samplers::{sample_gbe_archive, LocalMeasureSpec, ParticleConfiguration};
use loggas::statistics::ks_distance;
use rayon::prelude::*;

/// Integrated autocorrelation time of an evenly spaced series, in time units.
fn autocorr_time(values: &[f64], spacing: f64) -> f64 {
    let m = values.len();
    let mean = values.iter().sum::<f64>() / m as f64;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / m as f64;
    let mut acc = 0.5;
    for lag in 1..m / 3 {
        let mut c = 0.0;
        for i in 0..m - lag {
            c += (values[i] - mean) * (values[i + lag] - mean);
        }
        c /= (m - lag) as f64 * var;
        if c < 0.05 {
            break;
        }
        acc += c;
    }
    2.0 * acc * spacing
}

#[test]
#[ignore]
fn global_dbm_relaxes_to_the_gibbs_measure() {
    // N = 100 paths started far from equilibrium (uniform grid) must produce
    // the same largest-particle law as the exact tridiagonal sampler after
    // T = 10 (the slowest mode, the center of mass, relaxes on time 1/0.5)
    let n = 100;
    let p = Potential::quadratic(1.0);
    let n_paths = 300;
    let init = ParticleConfiguration {
        lambda: (0..n)
            .map(|i| -2.5 + 5.0 * (i as f64 + 0.5) / n as f64)
            .collect(),
        beta: 2.0,
    };
    let finals: Vec<f64> = (0..n_paths)
        .into_par_iter()
        .map(|c| {
            let mut rng = stream_rng(2024, c as u64);
            let path = integrate_dbm_global(&init, &p, 10.0, 1e-3, &mut rng).unwrap();
            path.final_state().lambda[n - 1]
        })
        .collect();
    let reference = sample_gbe_archive(n, 2.0, 3000, 77);
    let ref_max: Vec<f64> = reference.configs.iter().map(|c| c.lambda[n - 1]).collect();
    let d = ks_distance(&finals, &ref_max);
    // 5% critical value at (300, 3000) is 0.082; headroom for the O(dt) bias
    assert!(d < 0.10, "KS between DBM endpoints and tridiagonal draws: {d}");
}

#[test]
#[ignore]
fn local_relaxation_time_grows_like_the_cube_root_of_k() {
    // the window diffusion's slowest mode should slow down like K^{1/3}; an
    // 8x window widening must stretch the top particle's autocorrelation
    // time by about 2, asserted within a factor of two either way
    let n = 400;
    let p = Potential::quadratic(1.0);
    let meas = solve_equilibrium(&p, 1e-10).unwrap();
    let locs = classical_locations(&meas, n);
    let tau: Vec<f64> = [8usize, 64]
        .into_iter()
        .map(|k| {
            let y: Vec<f64> = (k + 1..=n).map(|j| locs.loc(j) - meas.a).collect();
            let lspec = LocalMeasureSpec::new(y, k, 0.1, n).unwrap();
            let init = ParticleConfiguration {
                lambda: (1..=k).map(|j| locs.loc(j) - meas.a).collect(),
                beta: 2.0,
            };
            let t_final = if k > 16 { 3000.0 } else { 1500.0 };
            let mut rng = stream_rng(31, k as u64);
            let path = integrate_local_sde(&lspec, &p, None, &init, t_final, 4e-3, &mut rng)
                .unwrap();
            let burn = t_final * 0.1;
            let series: Vec<f64> = path
                .times
                .iter()
                .zip(&path.states)
                .filter(|(t, _)| **t > burn)
                .map(|(_, s)| s.lambda[k - 1])
                .collect();
            let spacing = (t_final - burn) / series.len() as f64;
            autocorr_time(&series, spacing)
        })
        .collect();
    let ratio = tau[1] / tau[0];
    assert!(
        (1.0..=4.0).contains(&ratio),
        "tau(64)/tau(8) = {ratio:.2} (tau = {:.2}, {:.2}), expected about 2",
        tau[0],
        tau[1]
    );
}
