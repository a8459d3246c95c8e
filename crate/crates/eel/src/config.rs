//! Flat `key = value` configuration files.
//!
//! ```text
//! # Fig-3 style sweep
//! alpha_list = 0.3, 0.4, 0.5
//! epsilon_list = 0.25, 0.125, 0.0625
//! n_grid = 512
//! ```
//!
//! Keys not listed in [`KEYS`] are rejected, as are repeated keys. Lists are
//! comma separated; `blowup_guard = none` selects the default guard.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use eel_core::evolution::SamplePolicy;
use eel_core::SimParams;

use crate::error::{Error, Result};

pub const KEYS: &[&str] = &[
    "alpha",
    "K",
    "epsilon",
    "n_grid",
    "t_max",
    "cfl",
    "gravity",
    "s_max",
    "stab_threshold",
    "instab_threshold",
    "blowup_guard",
    "alpha_list",
    "K_list",
    "epsilon_list",
    "workers",
    "out",
    "sample_ratio",
];

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub params: SimParams,
    pub alpha_list: Vec<f64>,
    /// Empty means "sweep only `params.sound_speed_sq`".
    pub k_list: Vec<f64>,
    pub epsilon_list: Vec<f64>,
    pub workers: usize,
    pub out: PathBuf,
    pub sample_ratio: f64,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            params: SimParams::default(),
            alpha_list: Vec::new(),
            k_list: Vec::new(),
            epsilon_list: Vec::new(),
            workers: 1,
            out: PathBuf::from("."),
            sample_ratio: SamplePolicy::default().ratio,
        }
    }
}

fn parse_value<T: FromStr>(line: usize, key: &str, raw: &str) -> Result<T> {
    raw.parse().map_err(|_| Error::Config { line, msg: format!("cannot parse `{raw}` for {key}") })
}

fn parse_list(line: usize, key: &str, raw: &str) -> Result<Vec<f64>> {
    if raw.is_empty() {
        return Ok(Vec::new());
    }
    raw.split(',').map(|item| parse_value(line, key, item.trim())).collect()
}

fn join(xs: &[f64]) -> String {
    xs.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(", ")
}

impl Config {
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Config::default();
        let mut seen: Vec<&str> = Vec::new();
        for (idx, raw_line) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw_line.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| Error::Config { line, msg: format!("expected `key = value`, got `{content}`") })?;
            let (key, value) = (key.trim(), value.trim());
            let Some(&known) = KEYS.iter().find(|k| **k == key) else {
                return Err(Error::Config { line, msg: format!("unknown key `{key}`") });
            };
            if seen.contains(&known) {
                return Err(Error::Config { line, msg: format!("duplicate key `{key}`") });
            }
            seen.push(known);
            let p = &mut cfg.params;
            match known {
                "alpha" => p.alpha = parse_value(line, key, value)?,
                "K" => p.sound_speed_sq = parse_value(line, key, value)?,
                "epsilon" => p.epsilon = parse_value(line, key, value)?,
                "n_grid" => p.n_grid = parse_value(line, key, value)?,
                "t_max" => p.t_max = parse_value(line, key, value)?,
                "cfl" => p.cfl = parse_value(line, key, value)?,
                "gravity" => p.gravity = parse_value(line, key, value)?,
                "s_max" => p.s_max = parse_value(line, key, value)?,
                "stab_threshold" => p.stab_threshold = parse_value(line, key, value)?,
                "instab_threshold" => p.instab_threshold = parse_value(line, key, value)?,
                "blowup_guard" => {
                    p.blowup_guard = match value {
                        "none" => None,
                        v => Some(parse_value(line, key, v)?),
                    }
                }
                "alpha_list" => cfg.alpha_list = parse_list(line, key, value)?,
                "K_list" => cfg.k_list = parse_list(line, key, value)?,
                "epsilon_list" => cfg.epsilon_list = parse_list(line, key, value)?,
                "workers" => cfg.workers = parse_value(line, key, value)?,
                "out" => cfg.out = PathBuf::from(value),
                "sample_ratio" => cfg.sample_ratio = parse_value(line, key, value)?,
                _ => unreachable!("every entry of KEYS is handled"),
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    /// Checks the scalar parameters and the sweep settings. Empty sweep
    /// lists are allowed here; [`Config::sweep_grid`] rejects them.
    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        if self.workers == 0 {
            return Err(Error::InvalidConfig("workers must be at least 1".into()));
        }
        if !(self.sample_ratio > 1.0) || !self.sample_ratio.is_finite() {
            return Err(Error::InvalidConfig(format!("sample_ratio {} must exceed 1", self.sample_ratio)));
        }
        let lists = [("alpha_list", &self.alpha_list), ("K_list", &self.k_list), ("epsilon_list", &self.epsilon_list)];
        for (name, list) in lists {
            if list.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidConfig(format!("{name} contains a non-finite value")));
            }
        }
        if self.out.as_os_str().is_empty() {
            return Err(Error::InvalidConfig("out must not be empty".into()));
        }
        Ok(())
    }

    /// Canonical text form; `Config::parse(&c.print()) == c`.
    pub fn print(&self) -> String {
        let p = &self.params;
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        kv("alpha", format!("{:?}", p.alpha));
        kv("K", format!("{:?}", p.sound_speed_sq));
        kv("epsilon", format!("{:?}", p.epsilon));
        kv("n_grid", p.n_grid.to_string());
        kv("t_max", format!("{:?}", p.t_max));
        kv("cfl", format!("{:?}", p.cfl));
        kv("gravity", p.gravity.to_string());
        kv("s_max", p.s_max.to_string());
        kv("stab_threshold", format!("{:?}", p.stab_threshold));
        kv("instab_threshold", format!("{:?}", p.instab_threshold));
        kv("blowup_guard", p.blowup_guard.map_or("none".into(), |g| format!("{g:?}")));
        kv("alpha_list", join(&self.alpha_list));
        kv("K_list", join(&self.k_list));
        kv("epsilon_list", join(&self.epsilon_list));
        kv("workers", self.workers.to_string());
        kv("out", self.out.display().to_string());
        kv("sample_ratio", format!("{:?}", self.sample_ratio));
        s
    }

    pub fn sample_policy(&self) -> SamplePolicy {
        SamplePolicy { ratio: self.sample_ratio, ..SamplePolicy::default() }
    }

    /// Every `(alpha, K, eps)` parameter set of the sweep, sorted by key.
    pub fn sweep_grid(&self) -> Result<Vec<SimParams>> {
        let ks = if self.k_list.is_empty() { vec![self.params.sound_speed_sq] } else { self.k_list.clone() };
        Ok(eel_core::scaling::sweep_points(&self.alpha_list, &ks, &self.epsilon_list, &self.params)?)
    }
}
