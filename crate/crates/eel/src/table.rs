//! CSV tables: per-run diagnostics, sweep results and characteristics.
//!
//! Floats are written with 17 significant digits so every value read back
//! is bit-identical to the one written. Missing values are empty cells.

use std::io::{Read, Write};

use eel_core::characteristics::{CharSample, CharTrajectory, Family};
use eel_core::diagnostics::Verdict;
use eel_core::evolution::{Outcome, SeriesRow, TimeSeries};
use eel_core::scaling::SweepRecord;

use crate::error::{Error, Result};

pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        // NaN / inf parse back through f64::from_str
        format!("{x}")
    }
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map_or_else(String::new, fmt_f64)
}

fn parse_f64(cell: &str, col: &str, row: usize) -> Result<f64> {
    cell.trim().parse().map_err(|_| Error::Schema(format!("row {row}, column {col}: `{cell}` is not a number")))
}

fn parse_opt(cell: &str, col: &str, row: usize) -> Result<Option<f64>> {
    if cell.trim().is_empty() {
        Ok(None)
    } else {
        parse_f64(cell, col, row).map(Some)
    }
}

fn check_header(found: &csv::StringRecord, expected: &[String]) -> Result<()> {
    if found.iter().eq(expected.iter().map(String::as_str)) {
        Ok(())
    } else {
        Err(Error::Schema(format!(
            "expected columns `{}`, found `{}`",
            expected.join(","),
            found.iter().collect::<Vec<_>>().join(",")
        )))
    }
}

fn reader<R: Read>(r: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new().has_headers(true).flexible(false).from_reader(r)
}

pub fn series_header(s_max: usize) -> Vec<String> {
    let mut h = vec!["t".to_string()];
    h.extend((0..=s_max).map(|k| format!("H{k}_v")));
    h.extend((0..=s_max).map(|k| format!("H{k}_L")));
    h.extend((1..=s_max).map(|l| format!("E{l}")));
    h.extend(["Etot", "mean_L", "mean_v", "max_dv", "max_dL"].map(String::from));
    h
}

pub fn write_series<W: Write>(w: W, series: &TimeSeries) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(series_header(series.s_max))?;
    for row in &series.rows {
        let mut rec = vec![fmt_f64(row.t)];
        rec.extend(row.h_v.iter().chain(&row.h_l).chain(&row.energies).map(|&x| fmt_f64(x)));
        rec.extend([row.total_energy, row.mean_l, row.mean_v, row.max_dv, row.max_dl].map(fmt_f64));
        out.write_record(rec)?;
    }
    out.flush().map_err(|e| Error::io("series.csv", e))?;
    Ok(())
}

/// Reads a table written by [`write_series`]; `s_max` is inferred from the header.
pub fn read_series<R: Read>(r: R) -> Result<TimeSeries> {
    let mut rd = reader(r);
    let header = rd.headers()?.clone();
    // t, (s+1) + (s+1) norms, s energies, 5 trailing columns
    let s_max = header.len().checked_sub(8).filter(|n| n % 3 == 0).map(|n| n / 3);
    let s_max = s_max.ok_or_else(|| Error::Schema(format!("{} columns is not a series table", header.len())))?;
    let expected = series_header(s_max);
    check_header(&header, &expected)?;
    let mut rows = Vec::new();
    for (i, rec) in rd.records().enumerate() {
        let rec = rec?;
        let vals: Vec<f64> =
            rec.iter().zip(&expected).map(|(c, name)| parse_f64(c, name, i + 1)).collect::<Result<_>>()?;
        let n = s_max + 1;
        let tail = &vals[1 + 2 * n + s_max..];
        rows.push(SeriesRow {
            t: vals[0],
            h_v: vals[1..1 + n].to_vec(),
            h_l: vals[1 + n..1 + 2 * n].to_vec(),
            energies: vals[1 + 2 * n..1 + 2 * n + s_max].to_vec(),
            total_energy: tail[0],
            mean_l: tail[1],
            mean_v: tail[2],
            max_dv: tail[3],
            max_dl: tail[4],
        });
    }
    Ok(TimeSeries { s_max, rows })
}

pub const SWEEP_HEADER: [&str; 5] = ["alpha", "K", "epsilon", "verdict", "t_star"];

/// One line of `sweep.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub alpha: f64,
    pub sound_speed_sq: f64,
    pub epsilon: f64,
    pub verdict: String,
    pub t_star: Option<f64>,
}

impl From<&SweepRecord> for SweepRow {
    fn from(r: &SweepRecord) -> Self {
        Self {
            alpha: r.alpha,
            sound_speed_sq: r.sound_speed_sq,
            epsilon: r.epsilon,
            verdict: r.verdict.label().to_string(),
            t_star: r.t_star,
        }
    }
}

impl SweepRow {
    /// Rebuilds a record for fitting. The table does not carry the stability
    /// time, run outcome or hash, so those are placeholders (`t_s` is NaN).
    pub fn to_record(&self) -> SweepRecord {
        let verdict = match (self.verdict.as_str(), self.t_star) {
            ("unstable", Some(t_star)) => Verdict::Unstable { t_star },
            ("stable", _) => Verdict::Stable { t_s: f64::NAN },
            _ => Verdict::Undecided,
        };
        SweepRecord {
            alpha: self.alpha,
            sound_speed_sq: self.sound_speed_sq,
            epsilon: self.epsilon,
            t_star: verdict.t_star(),
            verdict,
            outcome: Outcome::Completed,
            note: None,
            params_hash: 0,
        }
    }
}

pub fn write_sweep<W: Write>(w: W, rows: &[SweepRow]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(SWEEP_HEADER)?;
    for r in rows {
        out.write_record([
            fmt_f64(r.alpha),
            fmt_f64(r.sound_speed_sq),
            fmt_f64(r.epsilon),
            r.verdict.clone(),
            fmt_opt(r.t_star),
        ])?;
    }
    out.flush().map_err(|e| Error::io("sweep.csv", e))?;
    Ok(())
}

pub fn read_sweep<R: Read>(r: R) -> Result<Vec<SweepRow>> {
    let mut rd = reader(r);
    let expected: Vec<String> = SWEEP_HEADER.iter().map(|s| s.to_string()).collect();
    check_header(rd.headers()?, &expected)?;
    let mut rows = Vec::new();
    for (i, rec) in rd.records().enumerate() {
        let rec = rec?;
        let row = i + 1;
        let verdict = rec[3].trim().to_string();
        if !matches!(verdict.as_str(), "stable" | "unstable" | "undecided") {
            return Err(Error::Schema(format!("row {row}: unknown verdict `{verdict}`")));
        }
        let t_star = parse_opt(&rec[4], "t_star", row)?;
        if (verdict == "unstable") != t_star.is_some() {
            return Err(Error::Schema(format!("row {row}: t_star must be present exactly for unstable rows")));
        }
        rows.push(SweepRow {
            alpha: parse_f64(&rec[0], "alpha", row)?,
            sound_speed_sq: parse_f64(&rec[1], "K", row)?,
            epsilon: parse_f64(&rec[2], "epsilon", row)?,
            verdict,
            t_star,
        });
    }
    Ok(rows)
}

/// Side table of per-point failures that `sweep.csv` cannot express.
pub fn write_sweep_notes<W: Write>(w: W, records: &[SweepRecord]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["alpha", "K", "epsilon", "outcome", "note"])?;
    for r in records.iter().filter(|r| r.note.is_some()) {
        out.write_record([
            fmt_f64(r.alpha),
            fmt_f64(r.sound_speed_sq),
            fmt_f64(r.epsilon),
            r.outcome.label().to_string(),
            r.note.clone().unwrap_or_default(),
        ])?;
    }
    out.flush().map_err(|e| Error::io("sweep_notes.csv", e))?;
    Ok(())
}

pub const CHARS_HEADER: [&str; 6] = ["family", "seed", "t", "x_unwrapped", "R", "u"];

pub fn write_chars<W: Write>(w: W, trajectories: &[CharTrajectory]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(CHARS_HEADER)?;
    for traj in trajectories {
        for s in &traj.samples {
            out.write_record([
                traj.family.label().to_string(),
                fmt_f64(traj.seed),
                fmt_f64(s.t),
                fmt_f64(s.x),
                fmt_f64(s.riemann),
                fmt_f64(s.u),
            ])?;
        }
    }
    out.flush().map_err(|e| Error::io("chars.csv", e))?;
    Ok(())
}

/// Regroups the rows of `chars.csv` into trajectories, in first-seen order.
pub fn read_chars<R: Read>(r: R) -> Result<Vec<CharTrajectory>> {
    let mut rd = reader(r);
    let expected: Vec<String> = CHARS_HEADER.iter().map(|s| s.to_string()).collect();
    check_header(rd.headers()?, &expected)?;
    let mut out: Vec<CharTrajectory> = Vec::new();
    for (i, rec) in rd.records().enumerate() {
        let rec = rec?;
        let row = i + 1;
        let family = match rec[0].trim() {
            "plus" => Family::Plus,
            "minus" => Family::Minus,
            other => return Err(Error::Schema(format!("row {row}: unknown family `{other}`"))),
        };
        let seed = parse_f64(&rec[1], "seed", row)?;
        let sample = CharSample {
            t: parse_f64(&rec[2], "t", row)?,
            x: parse_f64(&rec[3], "x_unwrapped", row)?,
            riemann: parse_f64(&rec[4], "R", row)?,
            u: parse_f64(&rec[5], "u", row)?,
        };
        match out.iter_mut().find(|t| t.family == family && t.seed.to_bits() == seed.to_bits()) {
            Some(traj) => traj.samples.push(sample),
            None => out.push(CharTrajectory { family, seed, samples: vec![sample] }),
        }
    }
    Ok(out)
}
