mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{Rep, Suite};
use config::RunConfig;
use output::{error_json, write_atomic, Format, Report};

#[derive(Parser, Debug)]
#[command(name = "su2heat", version, about = "Subelliptic heat kernel on SU(2)")]
struct Cli {
    /// Flat key = value configuration file
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override a configuration key, e.g. --set eps=1e-12 (repeatable)
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[arg(long, global = true, value_enum, default_value = "json")]
    format: Format,
    /// Write the primary result here instead of stdout
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Evaluate p_t(r, z)
    Kernel {
        #[arg(long, allow_hyphen_values = true)]
        t: f64,
        #[arg(long, allow_hyphen_values = true)]
        r: f64,
        #[arg(long, allow_hyphen_values = true)]
        z: f64,
        #[arg(long, value_enum, default_value = "auto")]
        rep: Rep,
    },
    /// Carnot-Caratheodory distance from the identity
    Distance {
        #[arg(long, allow_hyphen_values = true)]
        r: f64,
        #[arg(long, allow_hyphen_values = true)]
        z: f64,
    },
    /// Table of A(t), C(t) and Phi(t)
    Constants {
        #[arg(long, value_delimiter = ',', default_values_t = vec![0.5, 1.0, 3.0])]
        t: Vec<f64>,
    },
    /// Run a verification suite; exit status 1 if any inequality is violated
    Verify {
        #[arg(long, value_enum, default_value = "all")]
        suite: Suite,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        t: Option<f64>,
    },
    /// Monte Carlo sampling of the horizontal diffusion
    Sample {
        #[arg(long, default_value_t = 10_000)]
        n: usize,
        #[arg(long, default_value_t = 1e-3)]
        step: f64,
        #[arg(long, default_value_t = 0.5)]
        t: f64,
        /// CSV file for the sampled (r, z) pairs
        #[arg(long)]
        samples: Option<PathBuf>,
    },
    /// Print every configuration key with its default
    ConfigReference,
}

fn fail(msg: &str, code: u8) -> ExitCode {
    eprintln!("{}", error_json(msg, code.into()));
    ExitCode::from(code)
}

fn lib_fail(e: su2heat::Error) -> ExitCode {
    fail(&e.to_string(), if e.is_convergence() { 3 } else { 2 })
}

fn emit(report: &Report, cli: &Cli) -> Result<(), ExitCode> {
    let text = report.render(cli.format);
    match &cli.out {
        Some(p) => write_atomic(p, &text).map_err(|e| fail(&format!("cannot write {}: {e}", p.display()), 2)),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match RunConfig::from_sources(cli.config.as_deref(), &cli.set) {
        Ok(c) => c,
        Err(e) => return fail(&e, 2),
    };
    let result = match &cli.command {
        Command::ConfigReference => {
            print!("{}", config::reference());
            return ExitCode::SUCCESS;
        }
        Command::Kernel { t, r, z, rep } => commands::kernel(&cfg, *t, *r, *z, *rep),
        Command::Distance { r, z } => commands::distance(&cfg, *r, *z),
        Command::Constants { t } => commands::constants(&cfg, t),
        Command::Verify { suite, alpha, t } => commands::verify(&cfg, *suite, *alpha, *t),
        Command::Sample { n, step, t, samples } => commands::sample(&cfg, *n, *step, *t).and_then(|(rep, csv)| {
            if let Some(p) = samples {
                write_atomic(p, &csv)
                    .map_err(|e| su2heat::Error::Domain(format!("cannot write {}: {e}", p.display())))?;
            }
            Ok(rep)
        }),
    };
    let report = match result {
        Ok(r) => r,
        Err(e) => return lib_fail(e),
    };
    if let Err(code) = emit(&report, &cli) {
        return code;
    }
    let violations: u64 = report.rows.iter().filter_map(|r| r.get("n_violations")?.as_u64()).sum();
    if violations > 0 {
        ExitCode::from(1)
    } else {
        ExitCode::SUCCESS
    }
}
