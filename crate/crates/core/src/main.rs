use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use ggp::dynamics::TwoLevelKind;
use ggp::job::{read_json, run, Command, Input, JobConfig, JobError, ScatterJob, ToleranceOverrides};

#[derive(Parser)]
#[command(
    name = "ggp",
    version,
    about = "Generalised geometric phases: chains, curves, dynamics, scattering"
)]
#[command(
    after_help = "Exit status: 0 on success, 2 on a numerical domain error (the report carries the \
error payload), 1 on I/O or parse failures.\nAngles are radians in (-pi, pi]; floats are printed with 17 \
significant digits.\nGGP_TOL_PHASE overrides the phase tolerance."
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,

    /// Write the JSON report here instead of stdout.
    #[arg(long, global = true)]
    output: Option<PathBuf>,

    /// Write CSV rows here.
    #[arg(long, global = true)]
    csv: Option<PathBuf>,

    #[arg(long, global = true)]
    seed: Option<u64>,

    #[arg(long, global = true)]
    tol_zero: Option<f64>,

    #[arg(long, global = true)]
    tol_herm: Option<f64>,

    #[arg(long, global = true)]
    tol_phase: Option<f64>,

    /// Print the wall time to stderr.
    #[arg(long, global = true)]
    timing: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    X,
    Hadamard,
}

#[derive(Subcommand)]
enum Cmd {
    /// Chain phase of a JSON list of states.
    Phase {
        #[arg(long)]
        states: PathBuf,
        #[arg(long, conflicts_with = "identity")]
        observable: Option<PathBuf>,
        /// Use bare overlaps (the default without --observable).
        #[arg(long)]
        identity: bool,
    },
    /// Phase of a sampled open curve.
    #[command(after_help = "CSV columns: s,A_O(s)")]
    Curve {
        #[arg(long)]
        curve: PathBuf,
        #[arg(long)]
        observable: Option<PathBuf>,
    },
    /// O-null curve between two states.
    #[command(after_help = "CSV columns: s,A_O(s)")]
    NullCurve {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        #[arg(long)]
        observable: Option<PathBuf>,
        #[arg(long, default_value_t = 2001)]
        samples: usize,
        #[arg(long, default_value_t = 1.0)]
        tau: f64,
    },
    /// Three-projection cycle; a seeded random 3-level H without --h.
    #[command(after_help = "CSV columns: epsilon,extracted_phase,limit_phase,limit_error")]
    Cycle {
        #[arg(long)]
        h: Option<PathBuf>,
        #[arg(long)]
        epsilon: f64,
    },
    /// Closed-form phase of (|0>, |Psi(theta, phi)>, |1>).
    #[command(after_help = "CSV columns: theta,phi,phase")]
    TwoLevel {
        #[arg(long, value_enum)]
        kind: KindArg,
        #[arg(long, allow_hyphen_values = true)]
        theta: f64,
        #[arg(long, allow_hyphen_values = true)]
        phi: f64,
    },
    /// Energy shift through third order and its triple-product phases.
    #[command(after_help = "CSV columns: k,l,modulus,gamma_v,energy_denominator")]
    Perturb {
        /// JSON list of diagonal energies.
        #[arg(long)]
        h0: PathBuf,
        #[arg(long)]
        v: PathBuf,
        #[arg(long, default_value_t = 0)]
        level: usize,
        #[arg(long, allow_hyphen_values = true)]
        lambda: f64,
    },
    /// Forward scattering amplitudes.
    Scatter {
        #[command(subcommand)]
        model: ScatterCmd,
    },
    /// Re-run a job template over a list of parameter values.
    #[command(after_help = "CSV columns: <param>, then the headline numbers of the template command")]
    Sweep {
        #[arg(long)]
        template: PathBuf,
        /// Dotted path of the field to replace, e.g. `epsilon`.
        #[arg(long)]
        param: String,
        /// Comma-separated, e.g. `1e-2,5e-3,2.5e-3`.
        #[arg(long, required = true, value_delimiter = ',', allow_hyphen_values = true)]
        values: Vec<f64>,
    },
    /// Run a JSON job file.
    Run {
        #[arg(long)]
        job: PathBuf,
    },
}

#[derive(Subcommand)]
enum ScatterCmd {
    /// Finite momentum grid: JSON {momenta: [{label, energy}], mass, epsilon, V}.
    #[command(after_help = "CSV columns: p,q,modulus,gamma_v,denominator_re,denominator_im")]
    Grid {
        #[arg(long)]
        model: PathBuf,
        #[arg(long, default_value_t = 0)]
        incoming: usize,
    },
    /// Rank-1 separable potential.
    Separable(SeparableArgs),
}

#[derive(Args)]
struct SeparableArgs {
    #[arg(long, default_value_t = 1.0)]
    beta: f64,
    #[arg(long, allow_hyphen_values = true)]
    coupling: f64,
    #[arg(long, default_value_t = 1.0)]
    mass: f64,
    #[arg(long)]
    k: f64,
}

fn build(cmd: Cmd) -> Result<(JobConfig, PathBuf), JobError> {
    let here = PathBuf::from(".");
    let command = match cmd {
        Cmd::Phase {
            states,
            observable,
            identity,
        } => Command::Phase {
            states: Input::Path(states),
            observable: observable.map(Input::Path),
            identity,
        },
        Cmd::Curve { curve, observable } => Command::Curve {
            curve: Input::Path(curve),
            observable: observable.map(Input::Path),
        },
        Cmd::NullCurve {
            a,
            b,
            observable,
            samples,
            tau,
        } => Command::NullCurve {
            a: Input::Path(a),
            b: Input::Path(b),
            observable: observable.map(Input::Path),
            samples,
            tau,
        },
        Cmd::Cycle { h, epsilon } => Command::Cycle {
            h: h.map(Input::Path),
            epsilon,
        },
        Cmd::TwoLevel { kind, theta, phi } => Command::TwoLevel {
            kind: match kind {
                KindArg::X => TwoLevelKind::SwapX,
                KindArg::Hadamard => TwoLevelKind::Hadamard,
            },
            theta,
            phi,
        },
        Cmd::Perturb { h0, v, level, lambda } => Command::Perturb {
            h0: Input::Path(h0),
            v: Input::Path(v),
            level,
            lambda,
        },
        Cmd::Scatter { model } => Command::Scatter(match model {
            ScatterCmd::Grid { model, incoming } => ScatterJob::Grid {
                grid: Input::Path(model),
                incoming,
            },
            ScatterCmd::Separable(a) => ScatterJob::Separable {
                beta: a.beta,
                coupling: a.coupling,
                mass: a.mass,
                k: a.k,
            },
        }),
        Cmd::Sweep {
            template,
            param,
            values,
        } => Command::Sweep {
            template: Input::Path(template),
            param,
            values,
        },
        Cmd::Run { job } => {
            let config: JobConfig = read_json(&job)?;
            let base = job.parent().map_or_else(|| here.clone(), Path::to_path_buf);
            return Ok((config, base));
        }
    };
    Ok((JobConfig::new(command), here))
}

fn write_or_print(target: Option<&Path>, text: &str) -> Result<(), JobError> {
    match target {
        Some(p) => fs::write(p, text).map_err(|e| JobError::Io {
            path: p.to_owned(),
            message: e.to_string(),
        }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn execute(cli: Cli) -> Result<u8, JobError> {
    let start = Instant::now();
    let (mut config, base) = build(cli.command)?;
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    let cli_tol = ToleranceOverrides {
        zero: cli.tol_zero,
        herm: cli.tol_herm,
        phase: cli.tol_phase,
    };
    config.tolerances = ToleranceOverrides {
        zero: cli_tol.zero.or(config.tolerances.zero),
        herm: cli_tol.herm.or(config.tolerances.herm),
        phase: cli_tol.phase.or(config.tolerances.phase),
    };
    let output = cli.output.or_else(|| config.output.as_ref().map(|p| base.join(p)));
    let csv_target = cli.csv.or_else(|| config.csv.as_ref().map(|p| base.join(p)));

    let outcome = run(&config, &base)?;
    write_or_print(output.as_deref(), &outcome.report.to_json())?;
    if let (Some(target), Some(rows)) = (csv_target, outcome.csv.as_deref()) {
        write_or_print(Some(&target), rows)?;
    }
    if let Some(e) = &outcome.report.error {
        eprintln!("error: {e}");
    }
    if cli.timing {
        eprintln!("wall time: {:.3} s", start.elapsed().as_secs_f64());
    }
    Ok(outcome.report.exit_code())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
