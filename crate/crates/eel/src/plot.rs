//! Standalone SVG figures: norm histories, scaling fits, the critical-rate
//! fit and characteristic curves.

use std::f64::consts::PI;
use std::fmt::Write as _;

use eel_core::characteristics::{CharTrajectory, Family};
use eel_core::evolution::TimeSeries;
use eel_core::scaling::{CriticalFit, ScalingFit};

use crate::table::SweepRow;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 55.0;
/// Longest polyline emitted per curve; longer data is thinned.
const MAX_POINTS: usize = 1500;

const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b", "#e377c2"];

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Mark {
    Line,
    Dashed,
    Dots,
}

#[derive(Debug, Clone)]
pub struct Curve {
    pub label: Option<String>,
    pub points: Vec<(f64, f64)>,
    pub mark: Mark,
    pub color: String,
}

impl Curve {
    pub fn new(label: impl Into<Option<String>>, points: Vec<(f64, f64)>, mark: Mark, color: &str) -> Self {
        Self { label: label.into(), points, mark, color: color.to_string() }
    }
}

#[derive(Debug, Clone)]
pub struct Axis {
    pub label: String,
    pub log: bool,
    /// Fixed range; derived from the data when `None`.
    pub range: Option<(f64, f64)>,
}

impl Axis {
    pub fn linear(label: &str) -> Self {
        Self { label: label.into(), log: false, range: None }
    }

    pub fn log(label: &str) -> Self {
        Self { label: label.into(), log: true, range: None }
    }

    fn fwd(&self, v: f64) -> f64 {
        if self.log {
            v.log10()
        } else {
            v
        }
    }

    fn usable(&self, v: f64) -> bool {
        v.is_finite() && (!self.log || v > 0.0)
    }
}

#[derive(Debug, Clone)]
pub struct Figure {
    pub title: String,
    pub x: Axis,
    pub y: Axis,
    pub curves: Vec<Curve>,
    /// Clip curves to the plot area (needed when a fixed range cuts data).
    pub clip: bool,
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn nice_step(span: f64, target: usize) -> f64 {
    let raw = span / target as f64;
    let mag = 10f64.powf(raw.log10().floor());
    let frac = raw / mag;
    let f = if frac < 1.5 {
        1.0
    } else if frac < 3.0 {
        2.0
    } else if frac < 7.0 {
        5.0
    } else {
        10.0
    };
    f * mag
}

/// Tick positions in axis space together with their labels.
fn ticks(axis: &Axis, lo: f64, hi: f64) -> Vec<(f64, String)> {
    if axis.log {
        let (a, b) = (lo.floor() as i32, hi.ceil() as i32);
        let stride = ((b - a) / 8).max(1);
        (a..=b)
            .filter(|e| (e - a) % stride == 0)
            .map(|e| e as f64)
            .filter(|&e| e >= lo - 1e-9 && e <= hi + 1e-9)
            .map(|e| (e, format!("1e{}", e as i32)))
            .collect()
    } else {
        let step = nice_step(hi - lo, 6);
        let mut v = (lo / step).ceil() * step;
        let mut out = Vec::new();
        while v <= hi + 1e-9 * step {
            let label = if step >= 1.0 { format!("{v:.0}") } else { format!("{v:.*}", (-step.log10().floor()) as usize) };
            out.push((v, label));
            v += step;
        }
        out
    }
}

fn data_range(axis: &Axis, values: impl Iterator<Item = f64>) -> (f64, f64) {
    if let Some((a, b)) = axis.range {
        return (axis.fwd(a), axis.fwd(b));
    }
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for v in values.filter(|&v| axis.usable(v)) {
        let f = axis.fwd(v);
        lo = lo.min(f);
        hi = hi.max(f);
    }
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-12 {
        let pad = if lo == 0.0 { 1.0 } else { 0.1 * lo.abs() };
        return (lo - pad, hi + pad);
    }
    let pad = if axis.log { 0.0 } else { 0.04 * (hi - lo) };
    (lo - pad, hi + pad)
}

fn thin(points: &[(f64, f64)]) -> Vec<(f64, f64)> {
    if points.len() <= MAX_POINTS {
        return points.to_vec();
    }
    let stride = points.len().div_ceil(MAX_POINTS);
    let mut out: Vec<_> = points.iter().step_by(stride).copied().collect();
    if let Some(&last) = points.last() {
        if out.last() != Some(&last) {
            out.push(last);
        }
    }
    out
}

impl Figure {
    pub fn new(title: &str, x: Axis, y: Axis) -> Self {
        Self { title: title.into(), x, y, curves: Vec::new(), clip: false }
    }

    pub fn render(&self) -> String {
        let xs = self.curves.iter().flat_map(|c| c.points.iter().map(|p| p.0));
        let (x0, x1) = data_range(&self.x, xs);
        let ys = self.curves.iter().flat_map(|c| c.points.iter().filter(|p| self.x.usable(p.0)).map(|p| p.1));
        let (y0, y1) = data_range(&self.y, ys);
        let (pw, ph) = (WIDTH - LEFT - RIGHT, HEIGHT - TOP - BOTTOM);
        let px = |v: f64| LEFT + (self.x.fwd(v) - x0) / (x1 - x0) * pw;
        let py = |v: f64| TOP + ph - (self.y.fwd(v) - y0) / (y1 - y0) * ph;

        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
        let _ = writeln!(s, r#"<defs><clipPath id="plot"><rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}"/></clipPath></defs>"#);
        let _ = writeln!(s, r#"<text x="{}" y="22" text-anchor="middle" font-size="15">{}</text>"#, WIDTH / 2.0, esc(&self.title));

        for (v, label) in ticks(&self.x, x0, x1) {
            let x = LEFT + (v - x0) / (x1 - x0) * pw;
            let _ = writeln!(s, r##"<line x1="{x:.2}" y1="{TOP}" x2="{x:.2}" y2="{:.2}" stroke="#e5e5e5"/>"##, TOP + ph);
            let _ = writeln!(s, r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{label}</text>"#, TOP + ph + 16.0);
        }
        for (v, label) in ticks(&self.y, y0, y1) {
            let y = TOP + ph - (v - y0) / (y1 - y0) * ph;
            let _ = writeln!(s, r##"<line x1="{LEFT}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#e5e5e5"/>"##, LEFT + pw);
            let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{label}</text>"#, LEFT - 6.0, y + 4.0);
        }
        let _ = writeln!(s, r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#);
        let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, LEFT + pw / 2.0, HEIGHT - 12.0, esc(&self.x.label));
        let _ = writeln!(
            s,
            r#"<text x="18" y="{:.2}" text-anchor="middle" transform="rotate(-90 18 {:.2})">{}</text>"#,
            TOP + ph / 2.0,
            TOP + ph / 2.0,
            esc(&self.y.label)
        );

        let clip = if self.clip { r#" clip-path="url(#plot)""# } else { "" };
        let _ = writeln!(s, "<g{clip}>");
        for c in &self.curves {
            let pts: Vec<(f64, f64)> = thin(&c.points)
                .into_iter()
                .filter(|p| self.x.usable(p.0) && self.y.usable(p.1))
                .map(|(x, y)| (px(x), py(y)))
                .collect();
            match c.mark {
                Mark::Dots => {
                    for (x, y) in &pts {
                        let _ = writeln!(s, r#"<circle cx="{x:.2}" cy="{y:.2}" r="3.5" fill="{}"/>"#, c.color);
                    }
                }
                Mark::Line | Mark::Dashed if pts.len() >= 2 => {
                    let dash = if c.mark == Mark::Dashed { r#" stroke-dasharray="6 4""# } else { "" };
                    let path: Vec<String> = pts.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
                    let _ = writeln!(
                        s,
                        r#"<polyline points="{}" fill="none" stroke="{}" stroke-width="1.4"{dash}/>"#,
                        path.join(" "),
                        c.color
                    );
                }
                _ => {}
            }
        }
        let _ = writeln!(s, "</g>");

        let labelled: Vec<&Curve> = self.curves.iter().filter(|c| c.label.is_some()).take(12).collect();
        let longest = labelled.iter().filter_map(|c| c.label.as_ref()).map(|l| l.chars().count()).max().unwrap_or(0);
        let box_w = 36.0 + 7.0 * longest as f64;
        if !labelled.is_empty() {
            let _ = writeln!(
                s,
                r##"<rect x="{:.2}" y="{:.2}" width="{box_w:.2}" height="{:.2}" fill="white" fill-opacity="0.85" stroke="#bbbbbb"/>"##,
                LEFT + pw - box_w - 6.0,
                TOP + 4.0,
                16.0 * labelled.len() as f64 + 6.0
            );
        }
        for (i, c) in labelled.iter().enumerate() {
            let y = TOP + 20.0 + 16.0 * i as f64;
            let x = LEFT + pw - box_w;
            match c.mark {
                Mark::Dots => {
                    let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="3.5" fill="{}"/>"#, x + 10.0, y - 4.0, c.color);
                }
                _ => {
                    let _ = writeln!(s, r#"<line x1="{x:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="{}" stroke-width="2"/>"#, y - 4.0, x + 20.0, y - 4.0, c.color);
                }
            }
            let _ = writeln!(s, r#"<text x="{:.2}" y="{y:.2}">{}</text>"#, x + 26.0, esc(c.label.as_deref().unwrap_or("")));
        }
        s.push_str("</svg>\n");
        s
    }
}

/// `H_k(v)(t)/H_k(v)(1)` for every order, the normalized steepness
/// `[H_s/H_0](t)/[H_s/H_0](1)`, and the `(stability, instability)` thresholds.
pub fn norms_figure(series: &TimeSeries, thresholds: (f64, f64), title: &str) -> Figure {
    let mut fig = Figure::new(title, Axis::log("t"), Axis::log("ratio to t = 1"));
    let Some(first) = series.first() else { return fig };
    for k in 0..=series.s_max {
        let pts = series.rows.iter().map(|r| (r.t, r.h_v[k] / first.h_v[k])).collect();
        fig.curves.push(Curve::new(format!("H{k}(v)"), pts, Mark::Line, PALETTE[k % PALETTE.len()]));
    }
    let s0 = first.steepness();
    let pts = series.rows.iter().map(|r| (r.t, r.steepness() / s0)).collect();
    fig.curves.push(Curve::new(format!("H{}/H0 (v)", series.s_max), pts, Mark::Dashed, "black"));
    let (t0, t1) = (first.t, series.last().map_or(first.t, |r| r.t));
    for (thr, label) in [(thresholds.0, "stability threshold"), (thresholds.1, "instability threshold")] {
        fig.curves.push(Curve::new(label.to_string(), vec![(t0, thr), (t1, thr)], Mark::Dashed, "#7f7f7f"));
    }
    fig
}

/// Breaking times against amplitude on log-log axes with the fitted power laws.
pub fn scaling_figure(rows: &[SweepRow], fits: &[ScalingFit]) -> Figure {
    let mut fig = Figure::new("Breaking time vs amplitude", Axis::log("epsilon"), Axis::log("t_*"));
    let mut keys: Vec<(f64, f64)> = rows.iter().map(|r| (r.alpha, r.sound_speed_sq)).collect();
    keys.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    keys.dedup();
    for (i, &(alpha, k)) in keys.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let group: Vec<&SweepRow> = rows.iter().filter(|r| (r.alpha, r.sound_speed_sq) == (alpha, k)).collect();
        let pts: Vec<(f64, f64)> = group.iter().filter_map(|r| r.t_star.map(|t| (r.epsilon, t))).collect();
        let label = if keys.iter().any(|q| q.1 != k) { format!("alpha={alpha}, K={k:.4}") } else { format!("alpha={alpha}") };
        fig.curves.push(Curve::new(label, pts, Mark::Dots, color));
        if let Some(f) = fits.iter().find(|f| (f.alpha, f.sound_speed_sq) == (alpha, k)) {
            let (lo, hi) = group.iter().fold((f64::INFINITY, 0.0f64), |acc, r| (acc.0.min(r.epsilon), acc.1.max(r.epsilon)));
            let line = (0..=20)
                .map(|j| {
                    let e = lo * (hi / lo).powf(j as f64 / 20.0);
                    (e, (f.intercept + f.slope * e.ln()).exp())
                })
                .collect();
            fig.curves.push(Curve::new(None, line, Mark::Line, color));
        }
    }
    fig
}

/// Fitted slopes `A` against `alpha` with `A = C/(alpha - alpha_crit)`.
pub fn critical_figure(fits: &[ScalingFit], critical: &[(f64, CriticalFit)]) -> Figure {
    let mut fig = Figure::new("Scaling slope vs expansion rate", Axis::linear("alpha"), Axis::linear("A"));
    let mut ks: Vec<f64> = fits.iter().map(|f| f.sound_speed_sq).collect();
    ks.sort_by(f64::total_cmp);
    ks.dedup();
    for (i, &k) in ks.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let pts: Vec<(f64, f64)> = fits.iter().filter(|f| f.sound_speed_sq == k).map(|f| (f.alpha, f.slope)).collect();
        fig.curves.push(Curve::new(format!("K={k:.4}"), pts.clone(), Mark::Dots, color));
        if let Some((_, c)) = critical.iter().find(|(ck, _)| *ck == k) {
            let lo = pts.iter().map(|p| p.0).fold(f64::INFINITY, f64::min) - 0.05;
            let hi = pts.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max) + 0.05;
            let hi = hi.min(c.alpha_crit - 0.05);
            if hi > lo {
                let curve = (0..=50)
                    .map(|j| {
                        let a = lo + (hi - lo) * j as f64 / 50.0;
                        (a, c.c / (a - c.alpha_crit))
                    })
                    .collect();
                let label = format!("C={:.3}, alpha_crit={:.3}", c.c, c.alpha_crit);
                fig.curves.push(Curve::new(label, curve, Mark::Line, color));
            }
        }
    }
    fig
}

/// Characteristic curves `gamma(t)` in the covering space, each drawn at
/// every `2 pi` shift that lands in the two-period window `[0, 4 pi]`.
pub fn chars_figure(trajectories: &[CharTrajectory], title: &str) -> Figure {
    let t_end = trajectories.iter().filter_map(|t| t.samples.last()).map(|s| s.t).fold(1.0, f64::max);
    let y = if t_end > 50.0 { Axis::log("t") } else { Axis::linear("t") };
    let mut fig = Figure::new(title, Axis { label: "x (covering space)".into(), log: false, range: Some((0.0, 4.0 * PI)) }, y);
    fig.clip = true;
    let mut labelled = [false; 2];
    for traj in trajectories {
        let (color, slot) = match traj.family {
            Family::Plus => ("#1f77b4", 0),
            Family::Minus => ("#d62728", 1),
        };
        let (lo, hi) = traj.samples.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |a, s| (a.0.min(s.x), a.1.max(s.x)));
        if !lo.is_finite() {
            continue;
        }
        let k_lo = ((0.0 - hi) / (2.0 * PI)).floor() as i64;
        let k_hi = ((4.0 * PI - lo) / (2.0 * PI)).ceil() as i64;
        for k in k_lo..=k_hi {
            let shift = 2.0 * PI * k as f64;
            let inside = |x: f64| (-0.5..=4.0 * PI + 0.5).contains(&(x + shift));
            // contiguous in-window runs, padded by one sample for continuity
            let n = traj.samples.len();
            let mut i = 0;
            while i < n {
                if !inside(traj.samples[i].x) {
                    i += 1;
                    continue;
                }
                let start = i.saturating_sub(1);
                while i < n && inside(traj.samples[i].x) {
                    i += 1;
                }
                let end = (i + 1).min(n);
                let pts = traj.samples[start..end].iter().map(|s| (s.x + shift, s.t)).collect();
                let label = (!labelled[slot]).then(|| format!("{} family", traj.family.label()));
                labelled[slot] = true;
                fig.curves.push(Curve::new(label, pts, Mark::Line, color));
            }
        }
    }
    fig
}
