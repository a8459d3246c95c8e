//! Breaking-time extraction over parameter grids and the two regressions
//! that locate the critical expansion rate:
//!
//! ```text
//! ln t_* = A ln eps + B          (per alpha)
//! A      = C / (alpha - alpha_crit)
//! ```
//!
//! The second law is fitted in its linear form `1/A = alpha/C - alpha_crit/C`.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::diagnostics::{classify_run, Verdict};
use crate::evolution::{run, Outcome, SamplePolicy};
use crate::math;
use crate::{Error, Result, SimParams};

/// R^2 below which a log-log fit is flagged as poor.
pub const POOR_FIT_R2: f64 = 0.9;

/// The critical rate the scaling law is expected to recover.
pub const ALPHA_CRIT: f64 = 2.0 / 3.0;

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRecord {
    pub alpha: f64,
    pub sound_speed_sq: f64,
    pub epsilon: f64,
    /// Present iff the verdict is unstable.
    pub t_star: Option<f64>,
    pub verdict: Verdict,
    pub outcome: Outcome,
    pub note: Option<String>,
    /// FNV-1a hash of the full parameter set that produced the record.
    pub params_hash: u64,
}

impl SweepRecord {
    pub fn key_cmp(&self, other: &Self) -> Ordering {
        key_cmp(
            (self.alpha, self.sound_speed_sq, self.epsilon),
            (other.alpha, other.sound_speed_sq, other.epsilon),
        )
    }
}

fn key_cmp(a: (f64, f64, f64), b: (f64, f64, f64)) -> Ordering {
    a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)).then(a.2.total_cmp(&b.2))
}

/// Stable FNV-1a hash over the bit patterns of every parameter.
pub fn params_hash(p: &SimParams) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    let mut eat = |word: u64| {
        for b in word.to_le_bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
    };
    eat(p.alpha.to_bits());
    eat(p.sound_speed_sq.to_bits());
    eat(p.epsilon.to_bits());
    eat(p.n_grid as u64);
    eat(p.t_max.to_bits());
    eat(p.cfl.to_bits());
    eat(p.gravity as u64);
    eat(p.s_max as u64);
    eat(p.stab_threshold.to_bits());
    eat(p.instab_threshold.to_bits());
    eat(p.blowup_guard.map_or(u64::MAX, f64::to_bits));
    h
}

/// Runs the sine data to a verdict and records the breaking time.
pub fn breaking_time(params: &SimParams) -> Result<SweepRecord> {
    breaking_time_with(params, SamplePolicy::default())
}

/// [`breaking_time`] with an explicit sampling policy; the run always stops
/// at the first verdict.
pub fn breaking_time_with(params: &SimParams, policy: SamplePolicy) -> Result<SweepRecord> {
    let result = run(params, policy.stop_at_verdict())?;
    let verdict = classify_run(&result)?.verdict;
    let note = match result.outcome {
        Outcome::NumericalFailure { t } => Some(format!("numerical failure at t = {t:.6e}")),
        Outcome::BlowupGuard { t } if verdict.t_star().is_none() => {
            Some(format!("blowup guard at t = {t:.6e} before threshold"))
        }
        _ => None,
    };
    Ok(SweepRecord {
        alpha: params.alpha,
        sound_speed_sq: params.sound_speed_sq,
        epsilon: params.epsilon,
        t_star: verdict.t_star(),
        verdict,
        outcome: result.outcome,
        note,
        params_hash: params_hash(params),
    })
}

/// Parameter sets for every `(alpha, K, eps)` triple, sorted by that key.
pub fn sweep_points(
    alphas: &[f64],
    sound_speeds_sq: &[f64],
    epsilons: &[f64],
    base: &SimParams,
) -> Result<Vec<SimParams>> {
    if alphas.is_empty() {
        return Err(Error::Empty("alpha list"));
    }
    if sound_speeds_sq.is_empty() {
        return Err(Error::Empty("K list"));
    }
    if epsilons.is_empty() {
        return Err(Error::Empty("epsilon list"));
    }
    let mut points = Vec::with_capacity(alphas.len() * sound_speeds_sq.len() * epsilons.len());
    for &alpha in alphas {
        for &k in sound_speeds_sq {
            for &epsilon in epsilons {
                let p = SimParams { alpha, sound_speed_sq: k, epsilon, ..*base };
                p.validate()?;
                points.push(p);
            }
        }
    }
    points.sort_by(|a, b| {
        key_cmp((a.alpha, a.sound_speed_sq, a.epsilon), (b.alpha, b.sound_speed_sq, b.epsilon))
    });
    Ok(points)
}

/// Sequential sweep over `alphas x epsilons` at the base `K`.
pub fn sweep(alphas: &[f64], epsilons: &[f64], base: &SimParams) -> Result<Vec<SweepRecord>> {
    sweep_points(alphas, &[base.sound_speed_sq], epsilons, base)?
        .iter()
        .map(breaking_time)
        .collect()
}

/// `eps_k = first * ratio^k` for `k = 0..count`.
pub fn geometric_grid(first: f64, ratio: f64, count: usize) -> Vec<f64> {
    (0..count).map(|k| first * math::powf(ratio, k as f64)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    /// `None` when the response has zero variance.
    pub r2: Option<f64>,
    /// Root-mean-square residual.
    pub rms_residual: f64,
}

/// Ordinary least squares `y = slope x + intercept`.
pub fn least_squares(xs: &[f64], ys: &[f64]) -> Result<LinearFit> {
    let n = xs.len();
    if n != ys.len() {
        return Err(Error::LengthMismatch { expected: n, got: ys.len() });
    }
    if n < 2 {
        return Err(Error::InsufficientData { needed: 2, got: n });
    }
    let nf = n as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (&x, &y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
        syy += (y - my) * (y - my);
    }
    if sxx == 0.0 {
        return Err(Error::InvalidParam { name: "x", reason: "abscissae are all equal".into() });
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = xs
        .iter()
        .zip(ys)
        .map(|(&x, &y)| {
            let r = y - (slope * x + intercept);
            r * r
        })
        .sum();
    let r2 = (syy > 0.0).then(|| 1.0 - ss_res / syy);
    Ok(LinearFit { slope, intercept, r2, rms_residual: math::sqrt(ss_res / nf) })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingFit {
    pub alpha: f64,
    pub sound_speed_sq: f64,
    /// Slope `A` of `ln t_*` against `ln eps`.
    pub slope: f64,
    /// Intercept `B`.
    pub intercept: f64,
    pub r2: Option<f64>,
    pub n_points: usize,
}

impl ScalingFit {
    /// True when R^2 is undefined or below [`POOR_FIT_R2`].
    pub fn is_poor(&self) -> bool {
        self.r2.map_or(true, |r2| r2 < POOR_FIT_R2)
    }
}

/// Fits `ln t_* = A ln eps + B` to the unstable records of a single `(alpha, K)`.
pub fn fit_loglog(records: &[SweepRecord]) -> Result<ScalingFit> {
    let first = records.first().ok_or(Error::Empty("records"))?;
    let (alpha, k) = (first.alpha, first.sound_speed_sq);
    if records.iter().any(|r| r.alpha != alpha || r.sound_speed_sq != k) {
        return Err(Error::InvalidParam {
            name: "records",
            reason: "records mix several (alpha, K) pairs".into(),
        });
    }
    let mut pts: Vec<(f64, f64)> =
        records.iter().filter_map(|r| r.t_star.map(|t| (r.epsilon, t))).collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    pts.dedup_by(|a, b| a.0 == b.0);
    if pts.len() < 3 {
        return Err(Error::InsufficientData { needed: 3, got: pts.len() });
    }
    let xs: Vec<f64> = pts.iter().map(|p| math::ln(p.0)).collect();
    let ys: Vec<f64> = pts.iter().map(|p| math::ln(p.1)).collect();
    let fit = least_squares(&xs, &ys)?;
    Ok(ScalingFit {
        alpha,
        sound_speed_sq: k,
        slope: fit.slope,
        intercept: fit.intercept,
        r2: fit.r2,
        n_points: pts.len(),
    })
}

/// Groups records by `(alpha, K)` and fits each group that has enough
/// breakings. Groups that cannot be fitted are returned with their error.
pub fn fit_all(records: &[SweepRecord]) -> Vec<((f64, f64), Result<ScalingFit>)> {
    let mut sorted: Vec<&SweepRecord> = records.iter().collect();
    sorted.sort_by(|a, b| a.key_cmp(b));
    let mut out = Vec::new();
    let mut start = 0;
    while start < sorted.len() {
        let key = (sorted[start].alpha, sorted[start].sound_speed_sq);
        let mut end = start;
        while end < sorted.len() && (sorted[end].alpha, sorted[end].sound_speed_sq) == key {
            end += 1;
        }
        let group: Vec<SweepRecord> = sorted[start..end].iter().map(|r| (*r).clone()).collect();
        out.push((key, fit_loglog(&group)));
        start = end;
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct CriticalFit {
    pub c: f64,
    pub alpha_crit: f64,
    /// RMS residual of the linear fit in `1/A` space.
    pub residual: f64,
    /// `(alpha_i, A_i)` used in the fit.
    pub inputs: Vec<(f64, f64)>,
}

/// Fits `A = C / (alpha - alpha_crit)` through `1/A = alpha/C - alpha_crit/C`.
pub fn fit_critical(fits: &[ScalingFit]) -> Result<CriticalFit> {
    let mut inputs: Vec<(f64, f64)> = fits.iter().map(|f| (f.alpha, f.slope)).collect();
    inputs.sort_by(|a, b| a.0.total_cmp(&b.0));
    inputs.dedup_by(|a, b| a.0 == b.0);
    if inputs.len() < 3 {
        return Err(Error::InsufficientData { needed: 3, got: inputs.len() });
    }
    if let Some(&(alpha, slope)) = inputs.iter().find(|(_, a)| !(*a < 0.0)) {
        return Err(Error::NonNegativeSlope { alpha, slope });
    }
    let xs: Vec<f64> = inputs.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = inputs.iter().map(|p| 1.0 / p.1).collect();
    let lin = least_squares(&xs, &ys)?;
    let c = 1.0 / lin.slope;
    let alpha_crit = -lin.intercept / lin.slope;
    Ok(CriticalFit { c, alpha_crit, residual: lin.rms_residual, inputs })
}

/// `eps^(-1 / (1 - 3 alpha / 2))`, the breaking-time law with `C = alpha_crit = 2/3`
/// and unit prefactor.
pub fn predict_breaking(alpha: f64, epsilon: f64) -> Result<f64> {
    if !(alpha < ALPHA_CRIT) {
        return Err(Error::NotSubcritical(alpha));
    }
    if !(epsilon > 0.0) {
        return Err(Error::InvalidParam { name: "epsilon", reason: format!("{epsilon} must be positive") });
    }
    Ok(math::powf(epsilon, -1.0 / (1.0 - 1.5 * alpha)))
}

/// The slope `-1 / (1 - 3 alpha / 2)` implied by [`predict_breaking`].
pub fn predicted_slope(alpha: f64) -> f64 {
    -1.0 / (1.0 - 1.5 * alpha)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use proptest::prelude::*;

    fn record(alpha: f64, epsilon: f64, t_star: Option<f64>) -> SweepRecord {
        SweepRecord {
            alpha,
            sound_speed_sq: 1.0 / 6.0,
            epsilon,
            t_star,
            verdict: t_star.map_or(Verdict::Undecided, |t_star| Verdict::Unstable { t_star }),
            outcome: Outcome::Completed,
            note: None,
            params_hash: 0,
        }
    }

    fn synthetic(alpha: f64, a: f64, b: f64, eps: &[f64]) -> Vec<SweepRecord> {
        eps.iter().map(|&e| record(alpha, e, Some((a * e.ln() + b).exp()))).collect()
    }

    #[test]
    fn exact_power_law() {
        let eps = geometric_grid(0.25, 0.5, 6);
        let fit = fit_loglog(&synthetic(0.3, -2.0, 0.0, &eps)).unwrap();
        assert!((fit.slope + 2.0).abs() < 1e-12);
        assert!(fit.intercept.abs() < 1e-12);
        assert!((fit.r2.unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(fit.n_points, 6);
        assert!(!fit.is_poor());

        let fit = fit_loglog(&synthetic(0.3, -1.818, 10f64.ln(), &eps)).unwrap();
        assert!((fit.slope + 1.818).abs() < 1e-12);
        assert!((fit.intercept - 10f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn constant_breaking_time_is_flagged() {
        let recs: Vec<SweepRecord> = [0.1, 0.2, 0.4].iter().map(|&e| record(0.3, e, Some(7.0))).collect();
        let fit = fit_loglog(&recs).unwrap();
        assert!(fit.slope.abs() < 1e-15);
        assert_eq!(fit.r2, None);
        assert!(fit.is_poor());
    }

    #[test]
    fn fit_needs_three_breakings() {
        let mut recs = synthetic(0.3, -2.0, 0.0, &[0.1, 0.2]);
        recs.push(record(0.3, 0.05, None));
        assert_eq!(fit_loglog(&recs), Err(Error::InsufficientData { needed: 3, got: 2 }));
        let mixed = vec![record(0.3, 0.1, Some(2.0)), record(0.4, 0.2, Some(3.0))];
        assert!(fit_loglog(&mixed).is_err());
    }

    #[test]
    fn critical_round_trip_on_asserted_law() {
        let fits: Vec<ScalingFit> = [0.3, 0.4, 0.5]
            .iter()
            .map(|&alpha| ScalingFit {
                alpha,
                sound_speed_sq: 1.0 / 6.0,
                slope: (2.0 / 3.0) / (alpha - 2.0 / 3.0),
                intercept: 0.0,
                r2: Some(1.0),
                n_points: 6,
            })
            .collect();
        assert!((fits[0].slope + 20.0 / 11.0).abs() < 1e-14);
        assert!((fits[1].slope + 2.5).abs() < 1e-14);
        assert!((fits[2].slope + 4.0).abs() < 1e-14);
        let crit = fit_critical(&fits).unwrap();
        assert!((crit.c - 2.0 / 3.0).abs() < 1e-12);
        assert!((crit.alpha_crit - 2.0 / 3.0).abs() < 1e-12);
        assert!(crit.residual < 1e-14);
        assert!(fit_critical(&fits[..2]).is_err());
    }

    #[test]
    fn critical_rejects_positive_slope() {
        let mk = |alpha, slope| ScalingFit { alpha, sound_speed_sq: 0.1, slope, intercept: 0.0, r2: None, n_points: 3 };
        let fits = [mk(0.3, -2.0), mk(0.4, 0.5), mk(0.5, -4.0)];
        assert_eq!(fit_critical(&fits), Err(Error::NonNegativeSlope { alpha: 0.4, slope: 0.5 }));
    }

    #[test]
    fn predict_examples() {
        assert!((predict_breaking(0.0, 0.1).unwrap() - 10.0).abs() < 1e-12);
        let t = predict_breaking(0.3, 0.1).unwrap();
        assert!((t - 10f64.powf(1.0 / 0.55)).abs() < 1e-10);
        assert!((t - 65.79).abs() < 0.01);
        assert!((predict_breaking(0.5, 0.5).unwrap() - 16.0).abs() < 1e-12);
        assert_eq!(predict_breaking(2.0 / 3.0, 0.1), Err(Error::NotSubcritical(2.0 / 3.0)));
        assert!(predict_breaking(0.8, 0.1).is_err());
    }

    #[test]
    fn sweep_points_cover_grid_in_key_order() {
        let base = SimParams::default().with_grid(16);
        let eps = geometric_grid(0.25, 0.5, 6);
        let pts = sweep_points(&[0.5, 0.3, 0.4], &[1.0 / 6.0], &eps, &base).unwrap();
        assert_eq!(pts.len(), 18);
        assert!(pts.windows(2).all(|w| {
            key_cmp((w[0].alpha, w[0].sound_speed_sq, w[0].epsilon), (w[1].alpha, w[1].sound_speed_sq, w[1].epsilon))
                == Ordering::Less
        }));
        assert_eq!(sweep_points(&[0.3], &[0.1], &[], &base), Err(Error::Empty("epsilon list")));
        assert_eq!(sweep(&[0.3], &[], &base), Err(Error::Empty("epsilon list")));
    }

    #[test]
    fn single_point_sweep_matches_breaking_time() {
        let base = SimParams::new(0.3, 1.0 / 6.0, 0.5).with_grid(64).with_t_max(100.0);
        let one = sweep(&[0.3], &[0.5], &base).unwrap();
        assert_eq!(one, vec![breaking_time(&base).unwrap()]);
        assert!(one[0].t_star.is_some());
    }

    #[test]
    fn hash_tracks_every_field() {
        let p = SimParams::default();
        let h = params_hash(&p);
        assert_eq!(h, params_hash(&p.clone()));
        assert_ne!(h, params_hash(&SimParams { cfl: 0.3, ..p }));
        assert_ne!(h, params_hash(&p.with_gravity(true)));
        assert_ne!(h, params_hash(&SimParams { blowup_guard: Some(1.0), ..p }));
    }

    #[test]
    fn fit_all_groups_by_alpha() {
        let eps = [0.1, 0.2, 0.4];
        let mut recs = synthetic(0.4, -2.5, 1.0, &eps);
        recs.extend(synthetic(0.3, -1.8, 0.5, &eps));
        recs.push(record(0.5, 0.1, Some(3.0)));
        let fits = fit_all(&recs);
        assert_eq!(fits.len(), 3);
        assert_eq!(fits[0].0 .0, 0.3);
        assert!((fits[0].1.as_ref().unwrap().slope + 1.8).abs() < 1e-12);
        assert!((fits[1].1.as_ref().unwrap().slope + 2.5).abs() < 1e-12);
        assert!(fits[2].1.is_err());
    }

    proptest! {
        #[test]
        fn loglog_round_trip(a in -6.0f64..-0.5, b in -3.0f64..3.0, first in 0.05f64..0.5) {
            let eps = geometric_grid(first, 0.5, 6);
            let fit = fit_loglog(&synthetic(0.4, a, b, &eps)).unwrap();
            prop_assert!((fit.slope - a).abs() <= 1e-12);
            prop_assert!((fit.intercept - b).abs() <= 1e-11);
        }

        #[test]
        fn critical_round_trip(c in 0.2f64..2.0, crit in 0.55f64..0.9) {
            let fits: Vec<ScalingFit> = [0.2, 0.3, 0.4, 0.5]
                .iter()
                .map(|&alpha| ScalingFit {
                    alpha,
                    sound_speed_sq: 0.1,
                    slope: c / (alpha - crit),
                    intercept: 0.0,
                    r2: Some(1.0),
                    n_points: 3,
                })
                .collect();
            let out = fit_critical(&fits).unwrap();
            prop_assert!((out.c - c).abs() <= 1e-12 * c.max(1.0));
            prop_assert!((out.alpha_crit - crit).abs() <= 1e-12);
        }
    }
}
