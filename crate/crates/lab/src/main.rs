use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use ultrafast_lab::commands::{self, write_error_record};
use ultrafast_lab::output::num;
use ultrafast_lab::{ExperimentConfig, Failure};

#[derive(Parser)]
#[command(name = "ufde", version, about = "Weighted ultrafast diffusion experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Experiment configuration (flat key = value file)
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Overrides the configured seed
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory (default: <output.dir>/<command>, or runs/<command>)
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Worker threads for independent runs
    #[arg(long, global = true)]
    jobs: Option<usize>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Run one trajectory and check the decay bound
    Simulate,
    /// Refinement table of the discrete Poincaré constant
    Poincare,
    /// Check the functional inequalities on random fields
    Verify {
        /// Number of fields per exponent (default: verify.samples)
        #[arg(long)]
        samples: Option<usize>,
    },
    /// Truncation-ladder convergence study
    Localize,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Poincare => "poincare",
            Command::Verify { .. } => "verify",
            Command::Localize => "localize",
        }
    }
}

fn load(cli: &Cli) -> Result<ExperimentConfig, Failure> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|source| Failure::Io { path: path.clone(), source })?;
            ExperimentConfig::parse(&text)?
        }
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

/// Runs the command; `Ok(None)` on success, `Ok(Some(msg))` on a property violation.
fn dispatch(cmd: Command, cfg: &ExperimentConfig, out: &Path) -> Result<Option<String>, Failure> {
    match cmd {
        Command::Simulate => {
            let r = commands::simulate(cfg, out)?;
            println!(
                "gamma {}  C_P {}  K {}  lambda_fit {}  bound_holds {}  stationary {}",
                num(r.gamma),
                num(r.poincare),
                num(r.decay_constant),
                r.lambda_fit.map_or("none".into(), num),
                r.bound_holds,
                r.stationary
            );
            Ok((!r.passed()).then(|| {
                format!(
                    "decay bound violated (excess {}, lambda_fit {:?}, 1/K {})",
                    num(r.bound_excess),
                    r.lambda_fit,
                    num(1.0 / r.decay_constant)
                )
            }))
        }
        Command::Poincare => {
            let r = commands::poincare(cfg, out)?;
            for rung in &r.rungs {
                match &rung.result {
                    Ok(g) => println!("N {:>6}  C_P {}  residual {}", rung.n, num(g.poincare), num(g.residual)),
                    Err(msg) => eprintln!("N {:>6}  failed: {msg}", rung.n),
                }
            }
            println!("limit {}", r.limit.map_or("none".into(), num));
            if r.failures() > 0 {
                return Err(ultrafast_core::Error::Numerical {
                    what: format!("{} of {} eigensolves failed", r.failures(), r.rungs.len()),
                    residual: f64::NAN,
                }
                .into());
            }
            Ok(None)
        }
        Command::Verify { samples } => {
            let n = samples.unwrap_or(cfg.verify.samples);
            let r = commands::verify(cfg, n, out)?;
            for g in &r.groups {
                println!("r {}  passed {}/{}", num(g.r), g.passes(), g.samples.len());
            }
            Ok(r.failing_seeds().first().map(|(r, seed)| format!("inequality violated at r = {r}, seed {seed}")))
        }
        Command::Localize => {
            let r = commands::localize(cfg, out)?;
            for row in &r.table.rows {
                println!(
                    "k {}  a {}  b {}  gap_to_next {}",
                    num(row.radius),
                    num(row.a),
                    num(row.b),
                    row.l1_gap_to_next.map_or("-".into(), num)
                );
            }
            println!("verdict {}", if r.verdict { "pass" } else { "fail" });
            Ok((!r.verdict).then(|| "ladder is not monotone".to_string()))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cmd = cli.command;
    let cfg = load(&cli);
    let out = cli.out.clone().unwrap_or_else(|| {
        let base = cfg.as_ref().ok().and_then(|c| c.output_dir.clone()).unwrap_or_else(|| PathBuf::from("runs"));
        base.join(cmd.name())
    });

    let result = cfg.and_then(|cfg| {
        let mut pool = rayon::ThreadPoolBuilder::new();
        if let Some(jobs) = cli.jobs {
            pool = pool.num_threads(jobs.max(1));
        }
        let pool = pool.build().map_err(|e| {
            Failure::Core(ultrafast_core::Error::Config(format!("cannot start worker threads: {e}")))
        })?;
        pool.install(|| dispatch(cmd, &cfg, &out))
    });

    let (status, kind, message) = match result {
        Ok(None) => return ExitCode::SUCCESS,
        Ok(Some(msg)) => (1, "property_violation", msg),
        Err(f) => (f.exit_code(), f.kind(), f.to_string()),
    };
    eprintln!("error: {message}");
    if let Err(e) = write_error_record(&out, status, kind, &message) {
        eprintln!("could not write {}: {e}", out.join("error.txt").display());
    }
    ExitCode::from(status as u8)
}
