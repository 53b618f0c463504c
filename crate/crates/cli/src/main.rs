use clap::Parser;
use std::path::PathBuf;
use std::process::ExitCode;
use willmore::{Command, Overrides, RunConfig};

/// Construct and check foliations by area-constrained Willmore surfaces.
///
/// Exit status: 0 if every check passes, 2 if a check fails, 1 on errors.
#[derive(Parser, Debug)]
#[command(version, about)]
struct Cli {
    /// Command to run; overrides `command` in the config file.
    command: Option<Command>,
    /// TOML config file (or a `run.json` from an earlier run).
    #[arg(long)]
    config: Option<PathBuf>,
    /// ADM mass.
    #[arg(long)]
    m: Option<f64>,
    /// Perturbation amplitude(s), comma separated.
    #[arg(long, value_delimiter = ',')]
    eta: Option<Vec<f64>>,
    /// Multiplier(s), comma separated.
    #[arg(long, value_delimiter = ',')]
    lambda: Option<Vec<f64>>,
    /// Euclidean radius (radii) defining the multiplier λ(r), comma separated.
    #[arg(long, value_delimiter = ',')]
    r: Option<Vec<f64>>,
    /// Spherical-harmonic bandlimit.
    #[arg(long = "L")]
    bandlimit: Option<usize>,
    /// Newton residual tolerance (relative sup norm).
    #[arg(long)]
    tol: Option<f64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed for randomized restarts
    #[arg(long)]
    seed: Option<u64>,
}

fn threads() -> anyhow::Result<()> {
    if let Ok(v) = std::env::var("WILLMORE_THREADS") {
        let n: usize = v.parse().map_err(|_| anyhow::anyhow!("WILLMORE_THREADS must be a positive integer, got {v:?}"))?;
        rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global()?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            if e.use_stderr() {
                eprintln!("\n{}", <Cli as clap::CommandFactory>::command().render_usage());
                return ExitCode::from(1);
            }
            return ExitCode::SUCCESS;
        }
    };
    match execute(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn execute(cli: Cli) -> anyhow::Result<bool> {
    threads()?;
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if cli.command.is_some() {
        cfg.command = cli.command;
    }
    cfg.apply(&Overrides {
        m: cli.m,
        eta: cli.eta,
        lambda: cli.lambda,
        r: cli.r,
        bandlimit: cli.bandlimit,
        tol: cli.tol,
        out: cli.out,
        seed: cli.seed,
    });
    cfg.validate()?;
    cfg.ensure_output_dir()?;
    let out = willmore::run(&cfg)?;
    willmore::write_outputs(&cfg, &out)?;
    for c in &out.checks {
        println!("{} {} = {:.6e} ({} {:e})", if c.pass { "PASS" } else { "FAIL" }, c.name, c.value, c.relation, c.threshold);
    }
    for f in &out.failures {
        println!("FAIL {f}");
    }
    Ok(out.passed())
}
