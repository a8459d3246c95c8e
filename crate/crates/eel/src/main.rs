use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use eel::commands::{self, CharacteristicsArgs, PlotKind, SimulateArgs, SweepArgs};
use eel_core::characteristics::Family;
use eel_core::evolution::SamplePolicy;
use eel_core::SimParams;

/// Expanding-background Euler laboratory.
#[derive(Parser)]
#[command(name = "eel", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct PhysicsArgs {
    /// Expansion rate, a(t) = t^alpha.
    #[arg(long, default_value_t = 0.8)]
    alpha: f64,
    /// Squared sound speed.
    #[arg(long, default_value_t = 1.0 / 6.0)]
    k: f64,
    /// Amplitude of the sine velocity perturbation.
    #[arg(long, default_value_t = 0.1)]
    epsilon: f64,
}

#[derive(Subcommand)]
enum Command {
    /// Evolve one initial datum; writes series.csv, verdict.json, h4_ratio.svg.
    Simulate {
        #[command(flatten)]
        phys: PhysicsArgs,
        #[arg(long, default_value_t = 256)]
        n: usize,
        #[arg(long, default_value_t = 1e6)]
        t_max: f64,
        /// Couple to the gravitational potential.
        #[arg(long)]
        gravity: bool,
        /// Geometric spacing of diagnostic samples.
        #[arg(long, default_value_t = SamplePolicy::default().ratio)]
        sample_ratio: f64,
        /// Keep integrating after the instability threshold instead of stopping there.
        #[arg(long)]
        no_stop: bool,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Breaking times over a parameter grid; writes sweep.csv.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Parallel runs (the EEL_WORKERS environment variable takes precedence).
        #[arg(long)]
        workers: Option<usize>,
        /// Overrides `out` from the config file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Scaling and critical-rate fits of a sweep; writes fits.json, scaling.svg, critical.svg.
    Fit {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Trace characteristic curves; writes chars.csv, chars.svg, crossing.json.
    Characteristics {
        #[command(flatten)]
        phys: PhysicsArgs,
        #[arg(long, default_value_t = 64)]
        seeds: usize,
        #[arg(long, default_value_t = 100.0)]
        t_max: f64,
        #[arg(long, default_value_t = 2048)]
        n: usize,
        #[arg(long, value_enum, default_value_t = FamilyArg::Both)]
        family: FamilyArg,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Re-render a CSV table as SVG.
    Plot {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, value_enum)]
        kind: KindArg,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum FamilyArg {
    Plus,
    Minus,
    Both,
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Norms,
    Scaling,
    Critical,
    Chars,
}

fn params(phys: &PhysicsArgs, n: usize, t_max: f64, gravity: bool) -> SimParams {
    SimParams::new(phys.alpha, phys.k, phys.epsilon).with_grid(n).with_t_max(t_max).with_gravity(gravity)
}

fn opt(x: Option<f64>) -> String {
    x.map_or_else(|| "none".into(), |v| format!("{v:.6e}"))
}

fn execute(cmd: Command) -> eel::Result<()> {
    match cmd {
        Command::Simulate { phys, n, t_max, gravity, sample_ratio, no_stop, out } => {
            let args =
                SimulateArgs { params: params(&phys, n, t_max, gravity), sample_ratio, run_past_breaking: no_stop, out };
            let doc = commands::simulate(&args)?;
            let c = &doc.classification;
            println!(
                "verdict={} t_star={} t_s={} outcome={} t_final={:.6e} steps={}",
                c.verdict,
                opt(c.t_star),
                opt(c.t_s),
                doc.outcome.kind,
                doc.t_final,
                doc.steps
            );
        }
        Command::Sweep { config, workers, out } => {
            let s = commands::sweep(&SweepArgs { config, workers, out })?;
            println!("{} rows ({} failed) with {} workers -> {}", s.rows.len(), s.failures, s.workers, s.out.join("sweep.csv").display());
        }
        Command::Fit { input, out } => {
            let doc = commands::fit(&input, &out)?;
            for f in &doc.scaling {
                println!("alpha={} K={} A={:.6} B={:.6} r2={}", f.alpha, f.sound_speed_sq, f.slope, f.intercept, opt(f.r2));
            }
            for c in &doc.critical {
                println!("K={} C={:.6} alpha_crit={:.6} residual={:.3e}", c.sound_speed_sq, c.c, c.alpha_crit, c.residual);
            }
        }
        Command::Characteristics { phys, seeds, t_max, n, family, out } => {
            let families = match family {
                FamilyArg::Plus => vec![Family::Plus],
                FamilyArg::Minus => vec![Family::Minus],
                FamilyArg::Both => vec![Family::Plus, Family::Minus],
            };
            let args = CharacteristicsArgs { params: params(&phys, n, t_max, false), seeds, families, out };
            for d in commands::characteristics(&args)? {
                match d.t_cross {
                    Some(t) => println!("{}: crossing at t={t:.6}", d.family),
                    None => println!("{}: none before t_end={:.6e}", d.family, d.t_end),
                }
            }
        }
        Command::Plot { input, kind, out } => {
            let kind = match kind {
                KindArg::Norms => PlotKind::Norms,
                KindArg::Scaling => PlotKind::Scaling,
                KindArg::Critical => PlotKind::Critical,
                KindArg::Chars => PlotKind::Chars,
            };
            commands::plot(&input, kind, &out)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // help and version requests are not errors
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("eel: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
