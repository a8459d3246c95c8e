use alloc::format;
use core::f64::consts::PI;

use crate::{Error, Result};

/// Physical and numerical knobs of a single run.
///
/// `alpha = 0` and `sound_speed_sq = 0` lie outside the physical ranges
/// (`alpha > 0`, `0 < K < 1/3`) but are accepted so that the classical
/// Burgers problem can serve as an oracle; see [`SimParams::is_oracle_mode`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimParams {
    /// Expansion rate `alpha` in `a(t) = t^alpha`.
    pub alpha: f64,
    /// Squared sound speed `K` of the equation of state `p = K rho`.
    pub sound_speed_sq: f64,
    /// Amplitude of the initial velocity perturbation.
    pub epsilon: f64,
    pub n_grid: usize,
    pub t_max: f64,
    pub cfl: f64,
    /// Couple the velocity to the Newtonian potential.
    pub gravity: bool,
    /// Highest Sobolev order tracked in the diagnostics.
    pub s_max: usize,
    pub stab_threshold: f64,
    pub instab_threshold: f64,
    /// Explicit ceiling on `max |dv/dx|`; `None` uses [`SimParams::effective_blowup_guard`].
    pub blowup_guard: Option<f64>,
}

impl SimParams {
    /// Initial time. Fixed so that `a(T0) = 1`.
    pub const T0: f64 = 1.0;

    pub fn new(alpha: f64, sound_speed_sq: f64, epsilon: f64) -> Self {
        Self { alpha, sound_speed_sq, epsilon, ..Self::default() }
    }

    pub fn with_grid(mut self, n_grid: usize) -> Self {
        self.n_grid = n_grid;
        self
    }

    pub fn with_t_max(mut self, t_max: f64) -> Self {
        self.t_max = t_max;
        self
    }

    pub fn with_gravity(mut self, gravity: bool) -> Self {
        self.gravity = gravity;
        self
    }

    pub fn validate(&self) -> Result<()> {
        fn bad(name: &'static str, reason: alloc::string::String) -> Error {
            Error::InvalidParam { name, reason }
        }
        if !(self.alpha.is_finite() && (0.0..1.0).contains(&self.alpha)) {
            return Err(bad("alpha", format!("{} not in [0, 1)", self.alpha)));
        }
        if !(self.sound_speed_sq.is_finite() && (0.0..1.0 / 3.0).contains(&self.sound_speed_sq)) {
            return Err(bad("sound_speed_sq", format!("{} not in [0, 1/3)", self.sound_speed_sq)));
        }
        if !(self.epsilon.is_finite() && self.epsilon >= 0.0) {
            return Err(bad("epsilon", format!("{} is negative or not finite", self.epsilon)));
        }
        if self.n_grid < 16 || !self.n_grid.is_power_of_two() {
            return Err(Error::BadGridSize(self.n_grid));
        }
        if !(self.t_max > Self::T0) {
            return Err(bad("t_max", format!("{} must exceed t0 = 1", self.t_max)));
        }
        if !(self.cfl > 0.0 && self.cfl < 1.0) {
            return Err(bad("cfl", format!("{} not in (0, 1)", self.cfl)));
        }
        if self.s_max < 1 {
            return Err(bad("s_max", format!("{} must be at least 1", self.s_max)));
        }
        if !(self.stab_threshold > 0.0
            && self.stab_threshold < 1.0
            && self.instab_threshold > 1.0)
        {
            return Err(bad(
                "thresholds",
                format!(
                    "need 0 < stab ({}) < 1 < instab ({})",
                    self.stab_threshold, self.instab_threshold
                ),
            ));
        }
        if let Some(g) = self.blowup_guard {
            if !(g > 0.0) {
                return Err(bad("blowup_guard", format!("{g} must be positive")));
            }
        }
        Ok(())
    }

    /// True when the run uses `alpha = 0` or `K = 0`, values admitted only
    /// for the Burgers breaking-time oracle.
    pub fn is_oracle_mode(&self) -> bool {
        self.alpha == 0.0 || self.sound_speed_sq == 0.0
    }

    /// Guard on `max |dv/dx|`: explicit value, or `1e3 * eps * N / (2 pi)`.
    pub fn effective_blowup_guard(&self) -> f64 {
        self.blowup_guard
            .unwrap_or(1e3 * self.epsilon * self.n_grid as f64 / (2.0 * PI))
    }

    pub fn sound_speed(&self) -> f64 {
        crate::math::sqrt(self.sound_speed_sq)
    }
}

impl Default for SimParams {
    fn default() -> Self {
        Self {
            alpha: 0.8,
            sound_speed_sq: 1.0 / 6.0,
            epsilon: 0.1,
            n_grid: 256,
            t_max: 1e6,
            cfl: 0.4,
            gravity: false,
            s_max: 4,
            stab_threshold: 1e-6,
            instab_threshold: 1e6,
            blowup_guard: None,
        }
    }
}
