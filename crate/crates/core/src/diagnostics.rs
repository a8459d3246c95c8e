//! Corrected energy functionals, the stability/instability classifier and
//! the empirical decay monitor.
//!
//! The energies use the mixing constant `c = alpha`:
//!
//! ```text
//! E_1 = |mean v|^2 + |v|^2_{H1} + K |L|^2_{H1} + t^(alpha-1) alpha (v, L_x)
//! E_l = |v|^2_{Hl} + K |L|^2_{Hl} + t^(alpha-1) alpha (d^(l-1) v, d^l L)
//! ```
//!
//! with homogeneous seminorms `|f|^2_{Hl} = H_l[f]`.

use alloc::vec::Vec;
use num_complex::Complex64;

use crate::evolution::{Outcome, RunResult, TimeSeries, CLASSIFIER_ORDER};
use crate::math;
use crate::spectral::{self, SpectralWorkspace};
use crate::{Error, FluidState, Result, SimParams};

#[derive(Debug, Clone, PartialEq)]
pub struct EnergyReport {
    pub t: f64,
    /// `E_1 .. E_s`.
    pub energies: Vec<f64>,
    /// Sum of `energies`.
    pub total: f64,
    /// `total / (|v|^2_{H^s} + |L_x|^2_{H^(s-1)})`, `None` for vanishing norms.
    pub coercivity_ratio: Option<f64>,
}

impl EnergyReport {
    pub fn from_coeffs(
        ws: &SpectralWorkspace,
        l_hat: &[Complex64],
        v_hat: &[Complex64],
        t: f64,
        params: &SimParams,
        s: usize,
    ) -> Self {
        let energies: Vec<f64> =
            (1..=s).map(|ell| energy_coeffs(ws, l_hat, v_hat, t, params, ell)).collect();
        let total = energies.iter().sum();
        let norm: f64 = (0..=s).map(|k| ws.sobolev_hk_coeffs(v_hat, k as u32)).sum::<f64>()
            + (1..=s).map(|k| ws.sobolev_hk_coeffs(l_hat, k as u32)).sum::<f64>();
        let coercivity_ratio = (norm > 0.0).then(|| total / norm);
        Self { t, energies, total, coercivity_ratio }
    }

    pub fn energy(&self, ell: usize) -> f64 {
        self.energies[ell - 1]
    }
}

fn mixing_weight(t: f64, params: &SimParams) -> f64 {
    if params.alpha == 0.0 {
        return 0.0;
    }
    params.alpha * math::powf(t, params.alpha - 1.0)
}

fn energy_coeffs(
    ws: &SpectralWorkspace,
    l_hat: &[Complex64],
    v_hat: &[Complex64],
    t: f64,
    params: &SimParams,
    ell: usize,
) -> f64 {
    let order = ell as u32;
    let mut e = ws.sobolev_hk_coeffs(v_hat, order)
        + params.sound_speed_sq * ws.sobolev_hk_coeffs(l_hat, order)
        + mixing_weight(t, params) * ws.inner_product_coeffs(v_hat, order - 1, l_hat, order);
    if ell == 1 {
        // grid mean of v is the zeroth coefficient
        e += v_hat[0].norm_sqr();
    }
    e
}

fn coeffs(state: &FluidState) -> Result<(SpectralWorkspace, Vec<Complex64>, Vec<Complex64>)> {
    let n = state.len();
    let ws = SpectralWorkspace::new(n)?;
    let (mut lh, mut vh) = (spectral::zeros(n), spectral::zeros(n));
    ws.forward_pair(&state.log_density, &state.velocity, &mut lh, &mut vh);
    Ok((ws, lh, vh))
}

/// First-order corrected energy `E_1`.
pub fn energy_first_order(state: &FluidState, params: &SimParams) -> Result<f64> {
    energy_order_ell(state, 1, params)
}

/// Corrected energy `E_ell` for `ell >= 1`.
pub fn energy_order_ell(state: &FluidState, ell: usize, params: &SimParams) -> Result<f64> {
    if ell == 0 {
        return Err(Error::InvalidParam { name: "ell", reason: "order must be >= 1".into() });
    }
    let (ws, lh, vh) = coeffs(state)?;
    Ok(energy_coeffs(&ws, &lh, &vh, state.time, params, ell))
}

/// Total energy `sum_{k=1}^{s_max} E_k` with its parts.
pub fn total_energy(state: &FluidState, params: &SimParams) -> Result<EnergyReport> {
    let (ws, lh, vh) = coeffs(state)?;
    Ok(EnergyReport::from_coeffs(&ws, &lh, &vh, state.time, params, params.s_max))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Verdict {
    /// `H_4(t)/H_4(1)` fell to the stability threshold at `t_s`.
    Stable { t_s: f64 },
    /// `[H_4/H_0](t)` reached the instability threshold times its initial value at `t_star`.
    Unstable { t_star: f64 },
    Undecided,
}

impl Verdict {
    pub fn label(&self) -> &'static str {
        match self {
            Verdict::Stable { .. } => "stable",
            Verdict::Unstable { .. } => "unstable",
            Verdict::Undecided => "undecided",
        }
    }

    pub fn t_star(&self) -> Option<f64> {
        match *self {
            Verdict::Unstable { t_star } => Some(t_star),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Classification {
    pub verdict: Verdict,
    pub threshold_used: f64,
}

/// Time at which `log y` crosses `log target` assuming `log y` is linear in
/// `log t` between the two samples.
fn log_interp(t0: f64, y0: f64, t1: f64, y1: f64, target: f64) -> f64 {
    let (ly0, ly1, lt) = (math::ln(y0), math::ln(y1), math::ln(target));
    if !(ly0.is_finite() && ly1.is_finite()) || ly1 == ly0 {
        return t1;
    }
    let frac = ((lt - ly0) / (ly1 - ly0)).clamp(0.0, 1.0);
    math::exp(math::ln(t0) + frac * (math::ln(t1) - math::ln(t0)))
}

/// Applies the stability and instability thresholds to the velocity norms.
pub fn classify(series: &TimeSeries, params: &SimParams) -> Result<Classification> {
    let first = series.first().ok_or(Error::Empty("time series"))?;
    let undecided = Classification { verdict: Verdict::Undecided, threshold_used: params.instab_threshold };
    let h4_init = first.h_v[CLASSIFIER_ORDER];
    let steep_init = first.steepness();
    if !(first.h_v[0] > 0.0 && h4_init > 0.0) {
        return Ok(undecided);
    }
    let instab = params.instab_threshold;
    let stab = params.stab_threshold;
    for w in series.rows.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        let ra = a.steepness() / steep_init;
        let rb = b.steepness() / steep_init;
        if rb >= instab {
            let t_star = log_interp(a.t, ra, b.t, rb, instab);
            return Ok(Classification { verdict: Verdict::Unstable { t_star }, threshold_used: instab });
        }
        let sa = a.h_v[CLASSIFIER_ORDER] / h4_init;
        let sb = b.h_v[CLASSIFIER_ORDER] / h4_init;
        if sb <= stab {
            let t_s = log_interp(a.t, sa, b.t, sb, stab);
            return Ok(Classification { verdict: Verdict::Stable { t_s }, threshold_used: stab });
        }
    }
    Ok(undecided)
}

/// Growth of `H_4/H_0` past which a guarded run counts as unstable.
pub const GUARD_UNSTABLE_RATIO: f64 = 1e3;

/// [`classify`] plus the blowup-guard rule: a run stopped by the guard whose
/// last steepness ratio already exceeds `1e3` is unstable at the guard time.
pub fn classify_run(result: &RunResult) -> Result<Classification> {
    let c = classify(&result.series, &result.params)?;
    if c.verdict != Verdict::Undecided {
        return Ok(c);
    }
    if let Outcome::BlowupGuard { t } = result.outcome {
        let (first, last) = (result.series.first(), result.series.last());
        if let (Some(first), Some(last)) = (first, last) {
            let ratio = last.steepness() / first.steepness();
            if ratio.is_finite() && ratio > GUARD_UNSTABLE_RATIO {
                return Ok(Classification {
                    verdict: Verdict::Unstable { t_star: t },
                    threshold_used: GUARD_UNSTABLE_RATIO,
                });
            }
        }
    }
    Ok(c)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayCheck {
    pub passed: bool,
    /// `max_t E_s(t) t^(alpha - eta) / E_s(1)`; zero for identically vanishing energy.
    pub worst_ratio: f64,
    pub worst_t: f64,
}

/// Checks `E_s(t) <= E_s(1) t^(-alpha + eta)` at every sample.
pub fn decay_monitor(series: &TimeSeries, params: &SimParams, eta: f64) -> Result<DecayCheck> {
    if !(eta.is_finite() && eta >= 0.0) {
        return Err(Error::InvalidParam { name: "eta", reason: alloc::format!("{eta} must be >= 0") });
    }
    let first = series.first().ok_or(Error::Empty("time series"))?;
    let e0 = first.total_energy;
    let mut check = DecayCheck { passed: true, worst_ratio: 0.0, worst_t: first.t };
    for row in &series.rows {
        let ratio = if e0 == 0.0 {
            if row.total_energy == 0.0 { 0.0 } else { f64::INFINITY }
        } else {
            row.total_energy * math::powf(row.t, params.alpha - eta) / e0
        };
        if ratio > check.worst_ratio || ratio.is_nan() {
            check.worst_ratio = ratio;
            check.worst_t = row.t;
        }
    }
    // the t = 1 sample gives exactly 1 up to rounding
    check.passed = check.worst_ratio <= 1.0 + 1e-12;
    Ok(check)
}
