use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use loggas_cli::config::ExperimentConfig;
use loggas_cli::{runners, Failure};

/// Numerical laboratory for beta-ensembles: equilibrium measures, exact and
/// MCMC sampling, Dyson Brownian motion, edge statistics, and the
/// acceptance suite.
#[derive(Parser)]
#[command(
    name = "loggas",
    version,
    after_help = "Settings merge with precedence: command-line flag, then environment \
                  (LOGGAS_SEED, LOGGAS_THREADS, LOGGAS_OUT), then the config file, then \
                  built-in defaults (see --print-defaults).\n\nExit codes: 0 success, \
                  1 check failure, 2 configuration error, 3 numerical failure."
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct RunArgs {
    /// TOML configuration file; omitted keys take the built-in defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Root RNG seed.  Required somewhere: flag, LOGGAS_SEED, or config file.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (0 = one per logical core).
    #[arg(long)]
    threads: Option<usize>,
    /// Output directory; must not exist yet.  Default: runs/<kind>-seed<seed>
    #[arg(long)]
    out: Option<PathBuf>,
    /// Echo the primary CSV to stdout after the run.
    #[arg(long)]
    csv: bool,
    /// Print the built-in defaults as TOML and exit.
    #[arg(long)]
    print_defaults: bool,
}

#[derive(Subcommand)]
enum Cmd {
    /// Solve the equilibrium measure of the configured potential.
    Equilibrium(RunArgs),
    /// Draw an archive of spectra (exact tridiagonal model or MALA).
    Sample(RunArgs),
    /// Integrate Dyson Brownian motion from the classical locations.
    Dbm(RunArgs),
    /// Verify the random-walk representation on an edge window.
    Rwcheck(RunArgs),
    /// Tabulate the stochastic Airy edge law (or its noise-free modes).
    Airy(RunArgs),
    /// Rigidity, edge statistics, repulsion, loop equation, covariance decay.
    Stats(RunArgs),
    /// Estimate the discrete Sobolev constants.
    Sobolev(RunArgs),
    /// Run the acceptance suite and write its report.
    Acceptance {
        #[command(flatten)]
        args: RunArgs,
        /// Suite depth: quick or full (overrides the config file).
        #[arg(long)]
        level: Option<String>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("{f}");
            ExitCode::from(f.exit_code() as u8)
        }
    }
}

fn env_parsed<T: std::str::FromStr>(name: &str) -> Result<Option<T>, Failure> {
    match std::env::var(name) {
        Ok(v) => v
            .parse::<T>()
            .map(Some)
            .map_err(|_| Failure::Config(format!("{name}: cannot parse '{v}'"))),
        Err(_) => Ok(None),
    }
}

fn run(cli: Cli) -> Result<u8, Failure> {
    let (kind, args, level) = match cli.cmd {
        Cmd::Equilibrium(a) => ("equilibrium", a, None),
        Cmd::Sample(a) => ("sample", a, None),
        Cmd::Dbm(a) => ("dbm", a, None),
        Cmd::Rwcheck(a) => ("rwcheck", a, None),
        Cmd::Airy(a) => ("airy", a, None),
        Cmd::Stats(a) => ("stats", a, None),
        Cmd::Sobolev(a) => ("sobolev", a, None),
        Cmd::Acceptance { args, level } => ("acceptance-suite", args, level),
    };

    if args.print_defaults {
        print!("{}", ExperimentConfig::default_toml());
        return Ok(0);
    }

    let mut cfg = match &args.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if !cfg.kind.is_empty() && cfg.kind != kind {
        return Err(Failure::Config(format!(
            "kind: the config file says '{}' but the subcommand is '{kind}'",
            cfg.kind
        )));
    }
    cfg.kind = kind.to_string();

    // Precedence: flag over environment over file.
    cfg.seed = args.seed.or(env_parsed::<u64>("LOGGAS_SEED")?).or(cfg.seed);
    if let Some(t) = args.threads.or(env_parsed::<usize>("LOGGAS_THREADS")?) {
        cfg.threads = t;
    }
    cfg.out = args
        .out
        .clone()
        .or_else(|| std::env::var_os("LOGGAS_OUT").map(PathBuf::from))
        .or(cfg.out.take());
    if let Some(lv) = level {
        cfg.level = lv;
    }
    if cfg.out.is_none() {
        if let Some(seed) = cfg.seed {
            cfg.out = Some(PathBuf::from(format!("runs/{kind}-seed{seed}")));
        }
    }

    if cfg.threads > 0 {
        // Ignore the error from a second initialization in the same process;
        // the pool is already sized.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(cfg.threads).build_global();
    }

    let (manifest, product) = runners::run_experiment(&cfg)?;
    for line in &product.summary {
        println!("{line}");
    }
    let out = cfg.out.as_ref().expect("out resolved");
    println!("wrote {} files to {}", manifest.outputs.len() + 1, out.display());
    if args.csv {
        if let Some((name, bytes)) = product.files.get(product.primary_csv) {
            println!("--- {name}");
            print!("{}", String::from_utf8_lossy(bytes));
        }
    }
    if let Some(reason) = product.check_failed {
        eprintln!("{reason}");
        return Ok(1);
    }
    Ok(0)
}
