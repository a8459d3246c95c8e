//! Riemann invariants and characteristic curves of the reduced system.
//!
//! With `a = t^alpha` the invariants are `R_pm = pm sqrt(K) ln(rho) + a u`,
//! carried along `dgamma_pm/dt = lambda_pm = pm sqrt(K)/a + u`. Curves are
//! advected through the spectral solution: every RK4 stage of the PDE also
//! advances the curve positions and their invariants, with `u` sampled off
//! grid by trigonometric interpolation. Positions live on the universal
//! cover, so they never wrap.

use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::evolution::{Integrator, Outcome};
use crate::math;
use crate::state::{init_state, scale_factor, InitialProfile};
use crate::{Error, FluidState, Result, SimParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Family {
    Plus,
    Minus,
}

impl Family {
    pub fn sign(self) -> f64 {
        match self {
            Family::Plus => 1.0,
            Family::Minus => -1.0,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Family::Plus => "plus",
            Family::Minus => "minus",
        }
    }
}

/// `(R_+, R_-)` for density `rho`, velocity `u`, scale factor `a`.
pub fn riemann_invariants(rho: f64, u: f64, a: f64, sound_speed_sq: f64) -> Result<(f64, f64)> {
    if !(rho > 0.0) {
        return Err(Error::NonPositiveDensity(rho));
    }
    let s = math::sqrt(sound_speed_sq) * math::ln(rho);
    Ok((s + a * u, -s + a * u))
}

/// Inverse of [`riemann_invariants`]: `u = (R_+ + R_-) / 2a`,
/// `rho = exp((R_+ - R_-) / 2 sqrt(K))`.
pub fn invert_riemann(r_plus: f64, r_minus: f64, a: f64, sound_speed_sq: f64) -> Result<(f64, f64)> {
    if !(sound_speed_sq > 0.0) {
        return Err(Error::DegenerateSoundSpeed);
    }
    if !(a > 0.0) {
        return Err(Error::InvalidParam { name: "a", reason: alloc::format!("{a} must be positive") });
    }
    let rho = math::exp((r_plus - r_minus) / (2.0 * math::sqrt(sound_speed_sq)));
    let u = (r_plus + r_minus) / (2.0 * a);
    Ok((rho, u))
}

/// `(lambda_+, lambda_-) = (u + sqrt(K)/a, u - sqrt(K)/a)` at time `t`.
pub fn char_speeds(u: f64, t: f64, params: &SimParams) -> (f64, f64) {
    let (a, _) = scale_factor(t, params.alpha);
    let c = params.sound_speed() / a;
    (u + c, u - c)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CharSample {
    pub t: f64,
    /// Position on the universal cover of the circle.
    pub x: f64,
    pub riemann: f64,
    pub u: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CharTrajectory {
    pub family: Family,
    pub seed: f64,
    pub samples: Vec<CharSample>,
}

#[derive(Debug, Clone)]
pub struct Tracing {
    pub trajectories: Vec<CharTrajectory>,
    pub outcome: Outcome,
    pub final_state: FluidState,
}

/// `n` seeds spread uniformly over `[0, 2 pi)`.
pub fn uniform_seeds(n: usize) -> Vec<f64> {
    (0..n).map(|j| 2.0 * PI * j as f64 / n as f64).collect()
}

/// Traces one family from `n_seeds` uniform seeds on the sine initial data.
pub fn trace_characteristics(params: &SimParams, n_seeds: usize, family: Family) -> Result<Tracing> {
    if n_seeds < 2 {
        return Err(Error::InsufficientData { needed: 2, got: n_seeds });
    }
    let state = init_state(params, InitialProfile::Sine)?;
    trace_from(state, params, &uniform_seeds(n_seeds), &[family])
}

struct Curve {
    family: Family,
    x: f64,
    r: f64,
}

/// Co-evolves `state` with characteristics of every `family` from each seed,
/// until `t_max`, the blowup guard or a numerical failure.
pub fn trace_from(
    mut state: FluidState,
    params: &SimParams,
    seeds: &[f64],
    families: &[Family],
) -> Result<Tracing> {
    params.validate()?;
    if params.gravity {
        return Err(Error::InvalidParam {
            name: "gravity",
            reason: "characteristics are traced without the potential".into(),
        });
    }
    let mut integ = Integrator::new(params)?;
    let n = params.n_grid;
    let sqrt_k = params.sound_speed();
    let guard = params.effective_blowup_guard();

    let mut curves: Vec<Curve> = Vec::with_capacity(seeds.len() * families.len());
    let mut trajectories = Vec::with_capacity(curves.capacity());
    {
        let ws = integ.workspace();
        let (lh, vh) = (ws.forward(&state.log_density), ws.forward(&state.velocity));
        let (a, _) = scale_factor(state.time, params.alpha);
        let dilution = -3.0 * params.alpha * math::ln(state.time);
        for &family in families {
            for &seed in seeds {
                let log_rho = ws.interpolate(&lh, seed) + dilution;
                let u = ws.interpolate(&vh, seed) / a;
                let r = family.sign() * sqrt_k * log_rho + a * u;
                curves.push(Curve { family, x: seed, r });
                trajectories.push(CharTrajectory { family, seed, samples: Vec::new() });
            }
        }
    }

    let m = curves.len();
    let mut kx = [alloc::vec![0.0; m], alloc::vec![0.0; m], alloc::vec![0.0; m], alloc::vec![0.0; m]];
    let mut kr = kx.clone();
    let mut u_now = alloc::vec![0.0; m];
    let mut kl: [Vec<f64>; 4] = core::array::from_fn(|_| alloc::vec![0.0; n]);
    let mut kv = kl.clone();
    let (mut tl, mut tv) = (alloc::vec![0.0; n], alloc::vec![0.0; n]);
    let (mut sx, mut sr) = (alloc::vec![0.0; m], alloc::vec![0.0; m]);

    let signs: Vec<f64> = curves.iter().map(|c| c.family.sign()).collect();
    // Evaluates the curve right-hand sides at stage time `t` from the
    // velocity coefficients held by the integrator.
    let curve_rhs = |integ: &Integrator, t: f64, xs: &[f64], dx: &mut [f64], dr: &mut [f64], u_out: &mut [f64]| {
        let (a, a_dot) = scale_factor(t, params.alpha);
        let ws = integ.workspace();
        let vh = integ.velocity_coeffs();
        for j in 0..xs.len() {
            let sign = signs[j];
            let u = ws.interpolate(vh, xs[j]) / a;
            u_out[j] = u;
            dx[j] = sign * sqrt_k / a + u;
            // along the curve, d/dt R = -+ 3 sqrt(K) a'/a - a' u
            dr[j] = -sign * 3.0 * sqrt_k * a_dot / a - a_dot * u;
        }
    };

    let outcome = loop {
        let t = state.time;
        let (max_dv, _) = integ.rhs_into(t, &state.log_density, &state.velocity, &mut kl[0], &mut kv[0]);
        let xs: Vec<f64> = curves.iter().map(|c| c.x).collect();
        curve_rhs(&integ, t, &xs, &mut kx[0], &mut kr[0], &mut u_now);
        for (j, traj) in trajectories.iter_mut().enumerate() {
            traj.samples.push(CharSample { t, x: curves[j].x, riemann: curves[j].r, u: u_now[j] });
        }
        if max_dv > guard || !max_dv.is_finite() {
            break Outcome::BlowupGuard { t };
        }
        if t >= params.t_max {
            break Outcome::Completed;
        }
        let dt = integ.cfl_dt(&state);
        let stage = [0.5 * dt, 0.5 * dt, dt];
        for s in 0..3 {
            let h = stage[s];
            for i in 0..n {
                tl[i] = state.log_density[i] + h * kl[s][i];
                tv[i] = state.velocity[i] + h * kv[s][i];
            }
            for j in 0..m {
                sx[j] = curves[j].x + h * kx[s][j];
                sr[j] = curves[j].r + h * kr[s][j];
            }
            integ.rhs_into(t + h, &tl, &tv, &mut kl[s + 1], &mut kv[s + 1]);
            let (kx_s, kr_s) = (&mut kx[s + 1], &mut kr[s + 1]);
            curve_rhs(&integ, t + h, &sx, kx_s, kr_s, &mut u_now);
        }
        let w = dt / 6.0;
        let combine = |k: &[Vec<f64>; 4], i: usize| k[0][i] + 2.0 * k[1][i] + 2.0 * k[2][i] + k[3][i];
        let mut finite = true;
        for i in 0..n {
            tl[i] = state.log_density[i] + w * combine(&kl, i);
            tv[i] = state.velocity[i] + w * combine(&kv, i);
            finite &= tl[i].is_finite() && tv[i].is_finite();
        }
        for j in 0..m {
            sx[j] = curves[j].x + w * combine(&kx, j);
            sr[j] = curves[j].r + w * combine(&kr, j);
            finite &= sx[j].is_finite() && sr[j].is_finite();
        }
        if !finite {
            break Outcome::NumericalFailure { t };
        }
        core::mem::swap(&mut state.log_density, &mut tl);
        core::mem::swap(&mut state.velocity, &mut tv);
        state.time = t + dt;
        for (j, c) in curves.iter_mut().enumerate() {
            c.x = sx[j];
            c.r = sr[j];
        }
    };

    Ok(Tracing { trajectories, outcome, final_state: state })
}

/// Relative separation under which adjacent curves count as crossed.
pub const CROSSING_TOLERANCE: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq)]
pub struct CrossingReport {
    /// Earliest crossing; `None` when no adjacent pair met before `t_end`.
    pub t_cross: Option<f64>,
    /// Seeds of the pair that crossed first.
    pub pair: Option<(f64, f64)>,
    /// `(t, min_i sep_i(t) / sep_i(t0))` over the samples.
    pub min_separation: Vec<(f64, f64)>,
    pub t_end: f64,
}

/// Finds the earliest time at which two neighbouring curves of one family
/// come within [`CROSSING_TOLERANCE`] of their initial separation.
/// Neighbours are taken in seed order, including the pair that closes the
/// circle.
pub fn crossing_time(trajectories: &[CharTrajectory]) -> Result<CrossingReport> {
    if trajectories.len() < 2 {
        return Err(Error::InsufficientData { needed: 2, got: trajectories.len() });
    }
    let family = trajectories[0].family;
    if trajectories.iter().any(|t| t.family != family) {
        return Err(Error::InvalidParam { name: "trajectories", reason: "mixed families".into() });
    }
    let mut order: Vec<&CharTrajectory> = trajectories.iter().collect();
    order.sort_by(|a, b| a.seed.total_cmp(&b.seed));
    let n_samples = order.iter().map(|t| t.samples.len()).min().unwrap_or(0);
    if n_samples == 0 {
        return Err(Error::Empty("trajectory samples"));
    }
    let m = order.len();
    let sep = |i: usize, s: usize| -> f64 {
        if i + 1 < m {
            order[i + 1].samples[s].x - order[i].samples[s].x
        } else {
            order[0].samples[s].x + 2.0 * PI - order[m - 1].samples[s].x
        }
    };
    let initial: Vec<f64> = (0..m).map(|i| sep(i, 0)).collect();
    let mut min_separation = Vec::with_capacity(n_samples);
    let mut best: Option<(f64, usize)> = None;
    for s in 0..n_samples {
        let t = order[0].samples[s].t;
        let mut min_rel = f64::INFINITY;
        for i in 0..m {
            let rel = sep(i, s) / initial[i];
            min_rel = min_rel.min(rel);
            if s > 0 && rel <= CROSSING_TOLERANCE {
                let prev = sep(i, s - 1) / initial[i];
                if prev > CROSSING_TOLERANCE {
                    let t0 = order[0].samples[s - 1].t;
                    let frac = (prev - CROSSING_TOLERANCE) / (prev - rel);
                    let tc = t0 + frac * (t - t0);
                    if best.map_or(true, |(b, _)| tc < b) {
                        best = Some((tc, i));
                    }
                }
            }
        }
        min_separation.push((t, min_rel));
        if best.is_some() {
            break;
        }
    }
    let t_end = order[0].samples[n_samples - 1].t;
    let pair = best.map(|(_, i)| (order[i].seed, order[(i + 1) % m].seed));
    Ok(CrossingReport { t_cross: best.map(|b| b.0), pair, min_separation, t_end })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::SpectralWorkspace;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::vec;

    fn burgers(n: usize) -> SimParams {
        SimParams::new(0.0, 0.0, 0.1).with_grid(n).with_t_max(12.0)
    }

    #[test]
    fn invariant_examples() {
        assert_eq!(riemann_invariants(1.0, 0.0, 1.0, 1.0 / 6.0).unwrap(), (0.0, 0.0));
        assert_eq!(riemann_invariants(1.0, 0.5, 2.0, 1.0 / 6.0).unwrap(), (1.0, 1.0));
        let (rp, rm) = riemann_invariants(core::f64::consts::E, 0.0, 1.0, 0.25).unwrap();
        assert_relative_eq!(rp, 0.5, epsilon = 1e-15);
        assert_relative_eq!(rm, -0.5, epsilon = 1e-15);
        assert!(matches!(riemann_invariants(0.0, 0.0, 1.0, 0.1), Err(Error::NonPositiveDensity(_))));
    }

    #[test]
    fn inverse_examples() {
        assert_eq!(invert_riemann(0.0, 0.0, 3.0, 0.2).unwrap(), (1.0, 0.0));
        let (rho, u) = invert_riemann(1.0, -1.0, 1.0, 0.25).unwrap();
        assert_relative_eq!(rho, core::f64::consts::E * core::f64::consts::E, max_relative = 1e-15);
        assert_eq!(u, 0.0);
        assert!(matches!(invert_riemann(1.0, 0.0, 1.0, 0.0), Err(Error::DegenerateSoundSpeed)));
    }

    #[test]
    fn speed_examples() {
        let p = SimParams::new(0.5, 1.0 / 6.0, 0.1);
        let (lp, lm) = char_speeds(0.0, 1.0, &p);
        assert_relative_eq!(lp, 0.408_248_290_463_863, epsilon = 1e-15);
        assert_relative_eq!(lm, -lp);
        let (lp, _) = char_speeds(0.0, 16.0, &p);
        assert_relative_eq!(lp, (1.0f64 / 6.0).sqrt() / 4.0, epsilon = 1e-15);
        let p = SimParams::new(0.0, 0.0, 0.1);
        assert_eq!(char_speeds(0.1, 1.0, &p), (0.1, 0.1));
    }

    proptest! {
        #[test]
        fn riemann_round_trip(k in 1e-3f64..(1.0 / 3.0), rho in 0.1f64..10.0, u in -1.0f64..1.0, a in 1.0f64..100.0) {
            let (rp, rm) = riemann_invariants(rho, u, a, k).unwrap();
            let (rho2, u2) = invert_riemann(rp, rm, a, k).unwrap();
            // recovering ln(rho) from R_+ - R_- cancels a*u, so the
            // attainable accuracy degrades with |R| / sqrt(K)
            let cond = (rp.abs().max(rm.abs()) / k.sqrt()).max(1.0);
            prop_assert!((rho2.ln() - rho.ln()).abs() <= 1e-14 * cond);
            prop_assert!((u2 - u).abs() <= 1e-14);
            let (rp2, rm2) = riemann_invariants(rho2, u2, a, k).unwrap();
            let scale = rp.abs().max(rm.abs()).max(1.0);
            prop_assert!((rp2 - rp).abs() <= 1e-14 * scale && (rm2 - rm).abs() <= 1e-14 * scale);
        }

        #[test]
        fn speed_gap(u in -1.0f64..1.0, t in 1.0f64..1e4, alpha in 0.0f64..0.99, k in 0.0f64..(1.0 / 3.0)) {
            let p = SimParams::new(alpha, k, 0.1);
            let (lp, lm) = char_speeds(u, t, &p);
            let (a, _) = scale_factor(t, alpha);
            prop_assert!(((lp - lm) - 2.0 * k.sqrt() / a).abs() <= 1e-15 * (1.0 + u.abs()));
        }
    }

    #[test]
    fn burgers_crossing_matches_closed_form() {
        // the crossing is detected just past the shock, where the spectral
        // solution converges only like 1/N; N = 2048 lands within ~1%
        let tr = trace_characteristics(&burgers(2048), 64, Family::Plus).unwrap();
        let rep = crossing_time(&tr.trajectories).unwrap();
        let tc = rep.t_cross.expect("burgers characteristics must cross");
        assert!((tc / 11.0 - 1.0).abs() < 0.02, "t_cross = {tc}");
        assert!(tc > 1.0);
        // before steepening the curves are the straight Burgers lines
        for traj in &tr.trajectories {
            let xi = traj.seed;
            for s in traj.samples.iter().filter(|s| s.t <= 8.0) {
                let exact = xi + (s.t - 1.0) * 0.1 * xi.sin();
                assert!((s.x - exact).abs() < 1e-6, "seed {xi} t {} off by {}", s.t, s.x - exact);
            }
        }
    }

    #[test]
    fn invariants_constant_without_expansion() {
        let p = SimParams::new(0.0, 1.0 / 6.0, 0.05).with_grid(128).with_t_max(11.0);
        let st = init_state(&p, InitialProfile::Sine).unwrap();
        let tr = trace_from(st, &p, &uniform_seeds(16), &[Family::Plus, Family::Minus]).unwrap();
        assert_eq!(tr.outcome, Outcome::Completed);
        let fin = &tr.final_state;
        let ws = SpectralWorkspace::new(p.n_grid).unwrap();
        let (lh, vh) = (ws.forward(&fin.log_density), ws.forward(&fin.velocity));
        for traj in &tr.trajectories {
            let s = traj.samples.last().unwrap();
            assert!(s.t >= 11.0);
            // with a = 1 the fields are the physical ones
            let rho = ws.interpolate(&lh, s.x).exp();
            let (rp, rm) = riemann_invariants(rho, ws.interpolate(&vh, s.x), 1.0, p.sound_speed_sq).unwrap();
            let now = if traj.family == Family::Plus { rp } else { rm };
            assert!((now - traj.samples[0].riemann).abs() <= 1e-6, "drift {}", now - traj.samples[0].riemann);
        }
    }

    #[test]
    fn positions_are_unwrapped() {
        let mut p = SimParams::new(0.0, 0.0, 0.0).with_grid(32).with_t_max(30.0);
        p.cfl = 0.5;
        let st = FluidState::new(1.0, vec![0.0; 32], vec![0.7; 32]).unwrap();
        let tr = trace_from(st, &p, &uniform_seeds(8), &[Family::Plus]).unwrap();
        for traj in &tr.trajectories {
            for w in traj.samples.windows(2) {
                assert!(w[1].x > w[0].x && w[1].x - w[0].x < 1.0);
            }
            let last = traj.samples.last().unwrap();
            assert_relative_eq!(last.x, traj.seed + 0.7 * (last.t - 1.0), epsilon = 1e-10);
        }
        let rep = crossing_time(&tr.trajectories).unwrap();
        assert_eq!(rep.t_cross, None);
        assert_eq!(rep.pair, None);
        assert_relative_eq!(rep.t_end, 30.0);
    }

    #[test]
    fn larger_amplitude_crosses_earlier() {
        let base = SimParams::new(0.3, 1.0 / 6.0, 1.0).with_grid(256).with_t_max(2000.0);
        let big = crossing_time(&trace_characteristics(&base, 64, Family::Plus).unwrap().trajectories).unwrap();
        let mut small_p = base.clone();
        small_p.epsilon = 0.125;
        let small = crossing_time(&trace_characteristics(&small_p, 64, Family::Plus).unwrap().trajectories).unwrap();
        let tb = big.t_cross.expect("eps = 1 must cross");
        assert!(small.t_cross.map_or(true, |ts| tb < ts), "{tb} vs {:?}", small.t_cross);
    }

    #[test]
    fn fast_expansion_homogenizes() {
        let p = SimParams::new(0.8, 1.0 / 6.0, 0.25).with_grid(128).with_t_max(1e3);
        let tr = trace_characteristics(&p, 64, Family::Plus).unwrap();
        assert_eq!(tr.outcome, Outcome::Completed);
        let rep = crossing_time(&tr.trajectories).unwrap();
        assert_eq!(rep.t_cross, None);
        let worst = rep.min_separation.iter().map(|m| m.1).fold(f64::INFINITY, f64::min);
        assert!(worst > 0.3, "closest approach {worst}");
    }

    #[test]
    fn traced_invariants_match_pde() {
        // expanding background, so the a'(t) source terms are exercised
        let p = SimParams::new(0.5, 1.0 / 6.0, 0.05).with_grid(128).with_t_max(4.0);
        let st = init_state(&p, InitialProfile::Sine).unwrap();
        let seeds = uniform_seeds(16);
        let tr = trace_from(st, &p, &seeds, &[Family::Plus, Family::Minus]).unwrap();
        let fin = &tr.final_state;
        let ws = SpectralWorkspace::new(p.n_grid).unwrap();
        let (lh, vh) = (ws.forward(&fin.log_density), ws.forward(&fin.velocity));
        let (a, _) = scale_factor(fin.time, p.alpha);
        let k = p.sound_speed_sq;
        for traj in &tr.trajectories {
            let s = traj.samples.last().unwrap();
            assert_eq!(s.t, fin.time);
            let log_rho = ws.interpolate(&lh, s.x) - 3.0 * p.alpha * fin.time.ln();
            let u = ws.interpolate(&vh, s.x) / a;
            let (rp, rm) = riemann_invariants(log_rho.exp(), u, a, k).unwrap();
            let (traced, other) = match traj.family {
                Family::Plus => ((s.riemann, rm), rp),
                Family::Minus => ((rp, s.riemann), rm),
            };
            let expect = if traj.family == Family::Plus { traced.0 } else { traced.1 };
            assert!((expect - other).abs() < 1e-3, "R drift {}", expect - other);
            let (rho, u2) = invert_riemann(traced.0, traced.1, a, k).unwrap();
            assert!((rho.ln() - log_rho).abs() < 1e-3 && (u2 - u).abs() < 1e-3);
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(trace_characteristics(&burgers(64), 1, Family::Plus).is_err());
        assert!(trace_characteristics(&burgers(64).with_gravity(true), 8, Family::Plus).is_err());
        assert!(crossing_time(&[]).is_err());
    }
}
