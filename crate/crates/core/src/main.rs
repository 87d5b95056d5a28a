use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use mlspline::harness::config::Format;
use mlspline::harness::experiment::{bound_csv, error_csv, fmt_f64, to_json};
use mlspline::harness::{
    compute_bound, run_experiment, run_verify, Exec, ExperimentConfig, FunctionSource, Omega, RunOptions,
};
use mlspline::moduli::{check_mc_axioms, AxiomViolation};
use mlspline::Error;

#[derive(Parser)]
#[command(name = "mlspline", version, about = "Multilinear spline error bounds and sharpness checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,

    /// Lattice points per axis per block (odd, >= 3). Overrides the config.
    #[arg(long)]
    samples: Option<usize>,

    /// Disable concurrency.
    #[arg(long)]
    sequential: bool,

    /// Differentiate expressions numerically (step 1e-6) when no
    /// derivative expression is given.
    #[arg(long)]
    fd_fallback: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Print the theorem bound for a config.
    Bound {
        #[arg(long)]
        config: PathBuf,
    },
    /// Measure the configured function's sup error against the bound.
    Sup(RunArgs),
    /// Measure the theorem's extremal function against the bound.
    Sharpness(RunArgs),
    /// Run the invariant suite.
    Verify {
        /// Seed of the MC-axiom sampler.
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Check the MC axioms for the config's omega.
    Axioms {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Serialize)]
struct AxiomReport {
    samples: usize,
    seed: u64,
    violations: Vec<AxiomViolation>,
}

fn axiom_csv(rep: &AxiomReport) -> String {
    let mut out = String::from("axiom,tau,gamma,excess\n");
    let join = |v: &[f64]| v.iter().map(|x| fmt_f64(*x)).collect::<Vec<_>>().join(";");
    for v in &rep.violations {
        let name = serde_json::to_value(v.axiom).expect("axiom serializes");
        out.push_str(&format!(
            "{},{},{},{}\n",
            name.as_str().unwrap_or_default(),
            join(&v.tau),
            join(&v.gamma),
            fmt_f64(v.excess)
        ));
    }
    out
}

struct Output {
    text: String,
    ok: bool,
}

fn load(path: &PathBuf, cli_format: Option<Format>) -> Result<(ExperimentConfig, Format), Error> {
    let cfg = ExperimentConfig::load(path)?;
    let format = cli_format.or(cfg.format).unwrap_or_default();
    Ok((cfg, format))
}

fn run_args(args: &RunArgs, cfg: &mut ExperimentConfig) -> RunOptions {
    if let Some(s) = args.samples {
        cfg.samples = s;
    }
    RunOptions {
        exec: if args.sequential { Exec::Sequential } else { Exec::Parallel },
        fd_fallback: args.fd_fallback,
    }
}

fn execute(cli: &Cli) -> Result<(Output, Option<PathBuf>), Error> {
    let mut out_path = cli.out.clone();
    let output = match &cli.command {
        Command::Bound { config } => {
            let (cfg, format) = load(config, cli.format)?;
            out_path = out_path.or(cfg.out.clone());
            let rep = compute_bound(&cfg)?;
            let text = match format {
                Format::Csv => bound_csv(&[rep]),
                Format::Json => to_json(&rep),
            };
            Output { text, ok: true }
        }
        Command::Sup(args) | Command::Sharpness(args) => {
            let (mut cfg, format) = load(&args.config, cli.format)?;
            out_path = out_path.or(cfg.out.clone());
            if matches!(cli.command, Command::Sharpness(_)) {
                cfg.function = FunctionSource::Extremal;
            }
            let opts = run_args(args, &mut cfg);
            let rep = run_experiment(&cfg, opts)?;
            let text = match format {
                Format::Csv => error_csv(&[rep]),
                Format::Json => to_json(&rep),
            };
            Output { text, ok: true }
        }
        Command::Verify { seed } => {
            let rep = run_verify(*seed);
            let text = match cli.format.unwrap_or_default() {
                Format::Csv => rep.to_csv(),
                Format::Json => to_json(&rep),
            };
            Output { text, ok: rep.passed() }
        }
        Command::Axioms { config, seed } => {
            let (cfg, format) = load(config, cli.format)?;
            out_path = out_path.or(cfg.out.clone());
            let violations = match cfg.omega.build()? {
                Omega::Multi(o) => check_mc_axioms(&o, cfg.axiom_samples, *seed),
                Omega::Uni(o) => check_mc_axioms(&o, cfg.axiom_samples, *seed),
            };
            let rep = AxiomReport { samples: cfg.axiom_samples, seed: *seed, violations };
            let ok = rep.violations.is_empty();
            let text = match format {
                Format::Csv => axiom_csv(&rep),
                Format::Json => to_json(&rep),
            };
            Output { text, ok }
        }
    };
    Ok((output, out_path))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok((output, path)) => {
            match path {
                Some(p) => {
                    if let Err(e) = std::fs::write(&p, &output.text) {
                        eprintln!("error: cannot write {}: {e}", p.display());
                        return ExitCode::from(2);
                    }
                }
                None => print!("{}", output.text),
            }
            if output.ok {
                ExitCode::SUCCESS
            } else {
                eprintln!("error: checks failed");
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
