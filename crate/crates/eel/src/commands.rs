//! The `eel` subcommands as library functions. Each writes its artifacts
//! into the output directory and returns a one-line summary.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::Instant;

use eel_core::characteristics::{crossing_time, trace_from, uniform_seeds, CharTrajectory, Family};
use eel_core::diagnostics::classify_run;
use eel_core::evolution::{run, Outcome, SamplePolicy};
use eel_core::scaling::{fit_all, fit_critical, CriticalFit, ScalingFit};
use eel_core::state::{init_state, InitialProfile};
use eel_core::SimParams;

use crate::config::Config;
use crate::error::{Error, Result};
use crate::plot;
use crate::report::{CriticalFitDoc, CrossingDoc, FitFailure, FitsDoc, ScalingFitDoc, VerdictDoc};
use crate::sweep::{resolve_workers, run_sweep, WORKERS_ENV};
use crate::table::{self, SweepRow};

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    let path = dir.join(name);
    File::create(&path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| Error::io(path, e))
}

fn write_text(dir: &Path, name: &str, text: &str) -> Result<()> {
    let path = dir.join(name);
    fs::write(&path, text).map_err(|e| Error::io(path, e))
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write_json<T: serde::Serialize>(dir: &Path, name: &str, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_text(dir, name, &text)
}

#[derive(Debug, Clone)]
pub struct SimulateArgs {
    pub params: SimParams,
    pub sample_ratio: f64,
    /// Keep integrating after the instability threshold is crossed.
    pub run_past_breaking: bool,
    pub out: PathBuf,
}

/// Writes `series.csv`, `verdict.json` and `h4_ratio.svg`. A numerical
/// failure still writes everything, then reports exit code 2.
pub fn simulate(args: &SimulateArgs) -> Result<VerdictDoc> {
    args.params.validate()?;
    ensure_dir(&args.out)?;
    let clock = Instant::now();
    let policy = SamplePolicy {
        ratio: args.sample_ratio,
        stop_on_instability: !args.run_past_breaking,
        stop_on_stability: false,
    };
    let mut result = run(&args.params, policy)?;
    result.wall_clock_s = Some(clock.elapsed().as_secs_f64());
    let classification = classify_run(&result)?;
    table::write_series(create(&args.out, "series.csv")?, &result.series)?;
    let doc = VerdictDoc::new(&result, &classification);
    write_json(&args.out, "verdict.json", &doc)?;
    let p = &args.params;
    let title = format!("Sobolev norms, alpha = {}, K = {:.4}, eps = {}", p.alpha, p.sound_speed_sq, p.epsilon);
    let fig = plot::norms_figure(&result.series, (p.stab_threshold, p.instab_threshold), &title);
    write_text(&args.out, "h4_ratio.svg", &fig.render())?;
    if let Outcome::NumericalFailure { t } = result.outcome {
        return Err(Error::NumericalFailure(t));
    }
    Ok(doc)
}

#[derive(Debug, Clone)]
pub struct SweepArgs {
    pub config: PathBuf,
    pub workers: Option<usize>,
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone)]
pub struct SweepSummary {
    pub rows: Vec<SweepRow>,
    pub workers: usize,
    pub failures: usize,
    pub out: PathBuf,
}

/// Writes `sweep.csv`, plus `sweep_notes.csv` when some points failed.
pub fn sweep(args: &SweepArgs) -> Result<SweepSummary> {
    let cfg = Config::load(&args.config)?;
    let env = std::env::var(WORKERS_ENV).ok();
    let workers = resolve_workers(env.as_deref(), args.workers, cfg.workers)?;
    let points = cfg.sweep_grid()?;
    let out = args.out.clone().unwrap_or_else(|| cfg.out.clone());
    ensure_dir(&out)?;
    let records = run_sweep(&points, cfg.sample_policy(), workers)?;
    let rows: Vec<SweepRow> = records.iter().map(SweepRow::from).collect();
    table::write_sweep(create(&out, "sweep.csv")?, &rows)?;
    let failures = records.iter().filter(|r| r.note.is_some()).count();
    if failures > 0 {
        table::write_sweep_notes(create(&out, "sweep_notes.csv")?, &records)?;
    }
    Ok(SweepSummary { rows, workers, failures, out })
}

/// Scaling fits per `(alpha, K)` and the critical fit per `K`.
pub fn fit_rows(rows: &[SweepRow]) -> (Vec<ScalingFit>, Vec<(f64, CriticalFit)>, Vec<FitFailure>) {
    let records: Vec<_> = rows.iter().map(SweepRow::to_record).collect();
    let mut fits = Vec::new();
    let mut failures = Vec::new();
    for ((alpha, k), fit) in fit_all(&records) {
        match fit {
            Ok(f) => fits.push(f),
            Err(e) => failures.push(FitFailure { alpha: Some(alpha), sound_speed_sq: k, reason: e.to_string() }),
        }
    }
    let mut ks: Vec<f64> = rows.iter().map(|r| r.sound_speed_sq).collect();
    ks.sort_by(f64::total_cmp);
    ks.dedup();
    let mut critical = Vec::new();
    for k in ks {
        let group: Vec<ScalingFit> = fits.iter().filter(|f| f.sound_speed_sq == k).copied().collect();
        match fit_critical(&group) {
            Ok(c) => critical.push((k, c)),
            Err(e) => {
                let fitted: Vec<String> = group.iter().map(|f| f.alpha.to_string()).collect();
                let reason = format!("{e} (alphas with a usable scaling fit: [{}])", fitted.join(", "));
                failures.push(FitFailure { alpha: None, sound_speed_sq: k, reason })
            }
        }
    }
    (fits, critical, failures)
}

/// Reads `sweep.csv` and writes `fits.json`, `scaling.svg`, `critical.svg`.
/// Any group that cannot be fitted makes the command fail with exit code 2
/// after the artifacts are written.
pub fn fit(input: &Path, out: &Path) -> Result<FitsDoc> {
    let rows = table::read_sweep(open(input)?)?;
    if rows.is_empty() {
        return Err(Error::InsufficientData(format!("{} has no rows", input.display())));
    }
    ensure_dir(out)?;
    let (fits, critical, failures) = fit_rows(&rows);
    let doc = FitsDoc {
        scaling: fits.iter().map(ScalingFitDoc::from).collect(),
        critical: critical.iter().map(|(k, c)| CriticalFitDoc::new(*k, c)).collect(),
        failures,
    };
    write_json(out, "fits.json", &doc)?;
    write_text(out, "scaling.svg", &plot::scaling_figure(&rows, &fits).render())?;
    write_text(out, "critical.svg", &plot::critical_figure(&fits, &critical).render())?;
    if !doc.failures.is_empty() {
        let lines: Vec<String> = doc
            .failures
            .iter()
            .map(|f| match f.alpha {
                Some(a) => format!("alpha = {a}, K = {}: {}", f.sound_speed_sq, f.reason),
                None => format!("critical fit at K = {}: {}", f.sound_speed_sq, f.reason),
            })
            .collect();
        return Err(Error::InsufficientData(lines.join("; ")));
    }
    Ok(doc)
}

/// Samples per trajectory kept in `chars.csv`; the crossing report always
/// uses every integrator step.
pub const CHARS_MAX_SAMPLES: usize = 400;

/// Keeps roughly `max` samples spaced geometrically in `t`, always retaining
/// the first and last.
pub fn thin_trajectory(traj: &CharTrajectory, max: usize) -> CharTrajectory {
    let samples = &traj.samples;
    let (Some(first), Some(last)) = (samples.first(), samples.last()) else { return traj.clone() };
    if samples.len() <= max || max < 2 {
        return traj.clone();
    }
    let ratio = (last.t / first.t).powf(1.0 / (max - 1) as f64);
    let mut kept = vec![*first];
    for s in &samples[1..samples.len() - 1] {
        if s.t >= kept[kept.len() - 1].t * ratio {
            kept.push(*s);
        }
    }
    kept.push(*last);
    CharTrajectory { family: traj.family, seed: traj.seed, samples: kept }
}

#[derive(Debug, Clone)]
pub struct CharacteristicsArgs {
    pub params: SimParams,
    pub seeds: usize,
    pub families: Vec<Family>,
    pub out: PathBuf,
}

/// Writes `chars.csv`, `chars.svg` and `crossing.json` (one entry per family).
pub fn characteristics(args: &CharacteristicsArgs) -> Result<Vec<CrossingDoc>> {
    if args.seeds < 2 {
        return Err(Error::InvalidConfig("at least 2 seeds are needed".into()));
    }
    args.params.validate()?;
    ensure_dir(&args.out)?;
    let state = init_state(&args.params, InitialProfile::Sine)?;
    let tracing = trace_from(state, &args.params, &uniform_seeds(args.seeds), &args.families)?;
    let thinned: Vec<CharTrajectory> =
        tracing.trajectories.iter().map(|t| thin_trajectory(t, CHARS_MAX_SAMPLES)).collect();
    table::write_chars(create(&args.out, "chars.csv")?, &thinned)?;
    let p = &args.params;
    let title = format!("Characteristics, alpha = {}, K = {:.4}, eps = {}", p.alpha, p.sound_speed_sq, p.epsilon);
    write_text(&args.out, "chars.svg", &plot::chars_figure(&thinned, &title).render())?;
    let mut docs = Vec::new();
    for &family in &args.families {
        let trajs: Vec<_> = tracing.trajectories.iter().filter(|t| t.family == family).cloned().collect();
        docs.push(CrossingDoc::new(family, &crossing_time(&trajs)?));
    }
    write_json(&args.out, "crossing.json", &docs)?;
    if let Outcome::NumericalFailure { t } = tracing.outcome {
        return Err(Error::NumericalFailure(t));
    }
    Ok(docs)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotKind {
    Norms,
    Scaling,
    Critical,
    Chars,
}

/// Re-renders a CSV table. `norms` takes `series.csv`, `scaling` and
/// `critical` take `sweep.csv`, `chars` takes `chars.csv`.
pub fn plot(input: &Path, kind: PlotKind, out: &Path) -> Result<()> {
    let file = open(input)?;
    let svg = match kind {
        PlotKind::Norms => {
            let series = table::read_series(file)?;
            if series.is_empty() {
                return Err(Error::Schema(format!("{} has no rows", input.display())));
            }
            let d = SimParams::default();
            plot::norms_figure(&series, (d.stab_threshold, d.instab_threshold), "Sobolev norms").render()
        }
        PlotKind::Scaling | PlotKind::Critical => {
            let rows = table::read_sweep(file)?;
            let (fits, critical, _) = fit_rows(&rows);
            if kind == PlotKind::Scaling {
                plot::scaling_figure(&rows, &fits).render()
            } else {
                plot::critical_figure(&fits, &critical).render()
            }
        }
        PlotKind::Chars => {
            let trajs = table::read_chars(file)?;
            plot::chars_figure(&trajs, "Characteristics").render()
        }
    };
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        ensure_dir(dir)?;
    }
    fs::write(out, svg).map_err(|e| Error::io(out, e))
}
