//! Fluid state in expansion-normalized variables and the maps to and from
//! physical variables.
//!
//! `L = ln(a^3 rho)` and `v = a u`, sampled on `x_j = 2 pi j / N`.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::math;
use crate::{Error, Result, SimParams};

/// Returns `(a, da/dt)` for `a(t) = t^alpha`.
pub fn scale_factor(t: f64, alpha: f64) -> (f64, f64) {
    if alpha == 0.0 {
        return (1.0, 0.0);
    }
    let a = math::powf(t, alpha);
    (a, alpha * a / t)
}

/// Uniform periodic grid on `[0, 2 pi)`.
pub fn grid(n: usize) -> Vec<f64> {
    (0..n).map(|j| 2.0 * PI * j as f64 / n as f64).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct FluidState {
    pub time: f64,
    /// `L = ln(a^3 rho)`.
    pub log_density: Vec<f64>,
    /// `v = a u`.
    pub velocity: Vec<f64>,
}

pub enum InitialProfile {
    /// `L = 0`, `v = eps sin(x)`.
    Sine,
    Custom { log_density: Vec<f64>, velocity: Vec<f64> },
}

impl FluidState {
    pub fn new(time: f64, log_density: Vec<f64>, velocity: Vec<f64>) -> Result<Self> {
        if log_density.len() != velocity.len() {
            return Err(Error::LengthMismatch { expected: log_density.len(), got: velocity.len() });
        }
        Ok(Self { time, log_density, velocity })
    }

    pub fn len(&self) -> usize {
        self.velocity.len()
    }

    pub fn is_empty(&self) -> bool {
        self.velocity.is_empty()
    }

    pub fn is_finite(&self) -> bool {
        self.time.is_finite()
            && self.log_density.iter().chain(&self.velocity).all(|x| x.is_finite())
    }

    /// Inverse of [`FluidState::to_physical`].
    pub fn from_physical(time: f64, alpha: f64, density: &[f64], u: &[f64]) -> Result<Self> {
        if density.len() != u.len() {
            return Err(Error::LengthMismatch { expected: density.len(), got: u.len() });
        }
        let (a, _) = scale_factor(time, alpha);
        let log_a3 = 3.0 * math::ln(a);
        let mut log_density = Vec::with_capacity(density.len());
        for &rho in density {
            if !(rho > 0.0) {
                return Err(Error::NonPositiveDensity(rho));
            }
            log_density.push(math::ln(rho) + log_a3);
        }
        let velocity = u.iter().map(|&u| a * u).collect();
        Ok(Self { time, log_density, velocity })
    }

    /// `rho = t^(-3 alpha) exp(L)`.
    pub fn density(&self, alpha: f64) -> Vec<f64> {
        let dilution = math::powf(self.time, -3.0 * alpha);
        self.log_density.iter().map(|&l| dilution * math::exp(l)).collect()
    }

    /// Returns `(rho, u)` with `u = v / a`.
    pub fn to_physical(&self, alpha: f64) -> (Vec<f64>, Vec<f64>) {
        let (a, _) = scale_factor(self.time, alpha);
        let u = self.velocity.iter().map(|&v| v / a).collect();
        (self.density(alpha), u)
    }
}

/// Builds the state at `t = 1`.
pub fn init_state(params: &SimParams, profile: InitialProfile) -> Result<FluidState> {
    params.validate()?;
    let n = params.n_grid;
    match profile {
        InitialProfile::Sine => {
            let velocity = grid(n).into_iter().map(|x| params.epsilon * math::sin(x)).collect();
            Ok(FluidState { time: SimParams::T0, log_density: vec![0.0; n], velocity })
        }
        InitialProfile::Custom { log_density, velocity } => {
            for len in [log_density.len(), velocity.len()] {
                if len != n {
                    return Err(Error::LengthMismatch { expected: n, got: len });
                }
            }
            Ok(FluidState { time: SimParams::T0, log_density, velocity })
        }
    }
}

/// Spatially homogeneous background `rho_hom(t) = rho_c t^(-3 alpha)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HomogeneousSolution {
    pub rho_c: f64,
}

impl HomogeneousSolution {
    pub fn new(rho_c: f64) -> Result<Self> {
        if !(rho_c > 0.0) {
            return Err(Error::NonPositiveDensity(rho_c));
        }
        Ok(Self { rho_c })
    }

    pub fn density(&self, t: f64, alpha: f64) -> f64 {
        self.rho_c * math::powf(t, -3.0 * alpha)
    }

    /// The corresponding fixed point `L = ln rho_c`, `v = 0` at time `t`.
    pub fn state(&self, t: f64, n: usize) -> FluidState {
        FluidState {
            time: t,
            log_density: vec![math::ln(self.rho_c); n],
            velocity: vec![0.0; n],
        }
    }
}
