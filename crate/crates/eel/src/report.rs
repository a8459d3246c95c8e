//! JSON documents: `verdict.json`, `fits.json` and `crossing.json`.
//!
//! `verdict.json` follows `schema/verdict.schema.json`.

use serde::{Deserialize, Serialize};

use eel_core::characteristics::{CrossingReport, Family};
use eel_core::diagnostics::{Classification, Verdict};
use eel_core::evolution::{Outcome, RunResult};
use eel_core::scaling::{CriticalFit, ScalingFit};
use eel_core::SimParams;

pub const VERDICT_SCHEMA_ID: &str = "eel/verdict/v1";
/// The schema shipped with the crate.
pub const VERDICT_SCHEMA: &str = include_str!("../schema/verdict.schema.json");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsDoc {
    pub alpha: f64,
    #[serde(rename = "K")]
    pub sound_speed_sq: f64,
    pub epsilon: f64,
    pub n_grid: usize,
    pub t_max: f64,
    pub cfl: f64,
    pub gravity: bool,
    pub s_max: usize,
    pub stab_threshold: f64,
    pub instab_threshold: f64,
    pub blowup_guard: Option<f64>,
}

impl From<&SimParams> for ParamsDoc {
    fn from(p: &SimParams) -> Self {
        Self {
            alpha: p.alpha,
            sound_speed_sq: p.sound_speed_sq,
            epsilon: p.epsilon,
            n_grid: p.n_grid,
            t_max: p.t_max,
            cfl: p.cfl,
            gravity: p.gravity,
            s_max: p.s_max,
            stab_threshold: p.stab_threshold,
            instab_threshold: p.instab_threshold,
            blowup_guard: p.blowup_guard,
        }
    }
}

impl From<&ParamsDoc> for SimParams {
    fn from(d: &ParamsDoc) -> Self {
        SimParams {
            alpha: d.alpha,
            sound_speed_sq: d.sound_speed_sq,
            epsilon: d.epsilon,
            n_grid: d.n_grid,
            t_max: d.t_max,
            cfl: d.cfl,
            gravity: d.gravity,
            s_max: d.s_max,
            stab_threshold: d.stab_threshold,
            instab_threshold: d.instab_threshold,
            blowup_guard: d.blowup_guard,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassificationDoc {
    pub verdict: String,
    pub t_star: Option<f64>,
    pub t_s: Option<f64>,
    pub threshold_used: f64,
}

impl From<&Classification> for ClassificationDoc {
    fn from(c: &Classification) -> Self {
        let t_s = match c.verdict {
            Verdict::Stable { t_s } => Some(t_s),
            _ => None,
        };
        Self { verdict: c.verdict.label().into(), t_star: c.verdict.t_star(), t_s, threshold_used: c.threshold_used }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutcomeDoc {
    pub kind: String,
    pub t: Option<f64>,
}

impl From<&Outcome> for OutcomeDoc {
    fn from(o: &Outcome) -> Self {
        Self { kind: o.label().into(), t: o.time() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerdictDoc {
    pub schema: String,
    pub params: ParamsDoc,
    pub classification: ClassificationDoc,
    pub outcome: OutcomeDoc,
    pub steps: u64,
    pub t_final: f64,
    pub n_samples: usize,
    pub wall_clock_s: Option<f64>,
}

impl VerdictDoc {
    pub fn new(result: &RunResult, classification: &Classification) -> Self {
        Self {
            schema: VERDICT_SCHEMA_ID.into(),
            params: (&result.params).into(),
            classification: classification.into(),
            outcome: (&result.outcome).into(),
            steps: result.steps,
            t_final: result.final_state.time,
            n_samples: result.series.len(),
            wall_clock_s: result.wall_clock_s,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingFitDoc {
    pub alpha: f64,
    #[serde(rename = "K")]
    pub sound_speed_sq: f64,
    #[serde(rename = "A")]
    pub slope: f64,
    #[serde(rename = "B")]
    pub intercept: f64,
    pub r2: Option<f64>,
    pub n_points: usize,
    pub poor_fit: bool,
}

impl From<&ScalingFit> for ScalingFitDoc {
    fn from(f: &ScalingFit) -> Self {
        Self {
            alpha: f.alpha,
            sound_speed_sq: f.sound_speed_sq,
            slope: f.slope,
            intercept: f.intercept,
            r2: f.r2,
            n_points: f.n_points,
            poor_fit: f.is_poor(),
        }
    }
}

impl From<&ScalingFitDoc> for ScalingFit {
    fn from(d: &ScalingFitDoc) -> Self {
        Self {
            alpha: d.alpha,
            sound_speed_sq: d.sound_speed_sq,
            slope: d.slope,
            intercept: d.intercept,
            r2: d.r2,
            n_points: d.n_points,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalFitDoc {
    #[serde(rename = "K")]
    pub sound_speed_sq: f64,
    #[serde(rename = "C")]
    pub c: f64,
    pub alpha_crit: f64,
    pub residual: f64,
    /// `(alpha, A)` pairs used by the fit.
    pub inputs: Vec<(f64, f64)>,
}

impl CriticalFitDoc {
    pub fn new(sound_speed_sq: f64, fit: &CriticalFit) -> Self {
        Self {
            sound_speed_sq,
            c: fit.c,
            alpha_crit: fit.alpha_crit,
            residual: fit.residual,
            inputs: fit.inputs.clone(),
        }
    }
}

/// A group (one `(alpha, K)` scaling fit, or one `K` critical fit) that
/// could not be fitted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitFailure {
    pub alpha: Option<f64>,
    #[serde(rename = "K")]
    pub sound_speed_sq: f64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct FitsDoc {
    pub scaling: Vec<ScalingFitDoc>,
    pub critical: Vec<CriticalFitDoc>,
    pub failures: Vec<FitFailure>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossingDoc {
    pub family: String,
    pub t_cross: Option<f64>,
    pub pair: Option<(f64, f64)>,
    pub t_end: f64,
    pub min_relative_separation: f64,
}

impl CrossingDoc {
    pub fn new(family: Family, r: &CrossingReport) -> Self {
        Self {
            family: family.label().into(),
            t_cross: r.t_cross,
            pair: r.pair,
            t_end: r.t_end,
            min_relative_separation: r.min_separation.iter().map(|m| m.1).fold(f64::INFINITY, f64::min),
        }
    }
}
