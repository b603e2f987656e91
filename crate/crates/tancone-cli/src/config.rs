//! Run configuration: a `key = value` file, overridden by command-line flags.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};

/// Keys accepted in a config file, in echo order.
pub const KEYS: &[&str] = &[
    "example", "mesh", "h", "radius", "power", "lines", "center", "r_max", "levels", "ratio", "field", "delta",
    "theta_hat", "c", "samples", "seed", "out", "tol_calibrated", "tol_monotone", "tol_slack", "tol_k", "tol_poincare",
    "tol_gap",
];

/// Raw key/value pairs in file order of precedence: later sets win.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RawConfig {
    pub values: BTreeMap<String, String>,
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut values = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                bail!("config line {}: expected `key = value`", i + 1);
            };
            let (k, v) = (k.trim(), v.trim());
            if !KEYS.contains(&k) {
                bail!("config line {}: unknown key `{k}`", i + 1);
            }
            if v.is_empty() {
                bail!("config line {}: empty value for `{k}`", i + 1);
            }
            values.insert(k.to_string(), v.to_string());
        }
        Ok(RawConfig { values })
    }

    pub fn set(&mut self, k: &str, v: impl ToString) {
        self.values.insert(k.to_string(), v.to_string());
    }

    fn get(&self, k: &str) -> Option<&str> {
        self.values.get(k).map(|s| s.as_str())
    }

    fn num(&self, k: &str) -> Result<Option<f64>> {
        self.get(k).map(|v| parse_number(v).with_context(|| format!("bad value for `{k}`"))).transpose()
    }

    fn int(&self, k: &str) -> Result<Option<u64>> {
        self.get(k).map(|v| v.parse::<u64>().with_context(|| format!("bad integer for `{k}`: {v}"))).transpose()
    }
}

/// Plain floats plus `pi`, `2pi`, `pi/2` style multiples.
pub fn parse_number(s: &str) -> Result<f64> {
    let s = s.trim();
    if let Ok(v) = s.parse::<f64>() {
        return Ok(v);
    }
    let lower = s.to_ascii_lowercase();
    if let Some(idx) = lower.find("pi") {
        let (pre, post) = (lower[..idx].trim().trim_end_matches('*'), lower[idx + 2..].trim());
        let mult = if pre.is_empty() { 1.0 } else { pre.parse::<f64>().with_context(|| format!("bad number {s}"))? };
        let div = match post.strip_prefix('/') {
            Some(d) => d.trim().parse::<f64>().with_context(|| format!("bad number {s}"))?,
            None if post.is_empty() => 1.0,
            None => bail!("bad number {s}"),
        };
        return Ok(mult * PI / div);
    }
    bail!("bad number {s}")
}

/// What the example generator produces.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Current,
    Map,
}

pub const CURRENT_EXAMPLES: &[&str] =
    &["flat-disk", "holomorphic-graph", "z2-graph", "cusp", "two-lines", "complex-lines", "nonholomorphic-graph", "clifford-torus"];
pub const MAP_EXAMPLES: &[&str] = &["constant", "z1", "z1z2", "hopf", "cubic", "perturbed-z1"];

pub fn kind_of(example: &str) -> Option<Kind> {
    if CURRENT_EXAMPLES.contains(&example) {
        Some(Kind::Current)
    } else if MAP_EXAMPLES.contains(&example) {
        Some(Kind::Map)
    } else {
        None
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tolerances {
    pub calibrated: f64,
    pub monotone: f64,
    pub slack: f64,
    pub k: f64,
    pub poincare: f64,
    pub gap: f64,
}

/// Resolved configuration with defaults filled in.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub example: Option<String>,
    pub mesh: Option<PathBuf>,
    pub kind: Kind,
    pub h: f64,
    pub radius: f64,
    pub power: u32,
    pub lines: usize,
    pub center: Option<Vec<f64>>,
    pub r_max: f64,
    pub levels: usize,
    pub ratio: f64,
    pub field: String,
    pub delta: f64,
    pub theta_hat: Option<f64>,
    pub c: f64,
    pub samples: usize,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub tol: Tolerances,
}

fn default_h(example: &str) -> f64 {
    match example {
        "flat-disk" | "two-lines" | "complex-lines" | "nonholomorphic-graph" => 0.05,
        "holomorphic-graph" | "z2-graph" | "cusp" => 0.02,
        "clifford-torus" => 0.1,
        _ => tancone::jholo::FD_STEP,
    }
}

fn default_r_max(example: &str) -> f64 {
    match example {
        "cusp" | "nonholomorphic-graph" => 0.4,
        "holomorphic-graph" | "z2-graph" => 0.8,
        "clifford-torus" => 0.5,
        _ => 0.9,
    }
}

impl RunConfig {
    pub fn resolve(raw: &RawConfig) -> Result<Self> {
        let example = raw.get("example").map(str::to_string);
        let mesh = raw.get("mesh").map(PathBuf::from);
        let kind = match (&example, &mesh) {
            (Some(_), Some(_)) => bail!("give either an example or a mesh file, not both"),
            (None, None) => bail!("no input: set `example` or `mesh`"),
            (None, Some(_)) => Kind::Current,
            (Some(e), None) => kind_of(e).with_context(|| {
                format!("unknown example `{e}`; known: {}, {}", CURRENT_EXAMPLES.join(", "), MAP_EXAMPLES.join(", "))
            })?,
        };
        let name = example.clone().unwrap_or_default();
        let h = raw.num("h")?.unwrap_or_else(|| default_h(&name));
        if !(h > 0.0) {
            bail!("h must be positive, got {h}");
        }
        let radius = raw.num("radius")?.unwrap_or(if name == "nonholomorphic-graph" { 0.5 } else { 1.0 });
        if !(radius > 0.0) {
            bail!("radius must be positive");
        }
        let power = raw.int("power")?.unwrap_or(2) as u32;
        let lines = raw.int("lines")?.unwrap_or(2) as usize;
        let center = match raw.get("center") {
            Some(v) => Some(
                v.split(',').map(parse_number).collect::<Result<Vec<f64>>>().context("bad value for `center`")?,
            ),
            None => None,
        };
        let r_max = raw.num("r_max")?.unwrap_or_else(|| if kind == Kind::Map { 1.0 } else { default_r_max(&name) });
        let levels = raw.int("levels")?.unwrap_or(if kind == Kind::Map { 12 } else { 8 }) as usize;
        let ratio = raw.num("ratio")?.unwrap_or(if kind == Kind::Map { tancone::jholo::LADDER_RATIO } else { 0.7 });
        if !(ratio > 0.0 && ratio < 1.0) {
            bail!("ladder ratio must lie in (0, 1), got {ratio}");
        }
        if levels < 4 {
            bail!("ladder needs at least 4 levels, got {levels}");
        }
        if !(r_max > 0.0) {
            bail!("r_max must be positive");
        }
        let field = raw.get("field").unwrap_or("omega0").to_string();
        if !["omega0", "tubular", "special-legendrian"].contains(&field.as_str()) {
            bail!("unknown field `{field}`; known: omega0, tubular, special-legendrian");
        }
        let tol = Tolerances {
            calibrated: raw.num("tol_calibrated")?.unwrap_or(tancone::CALIBRATED_TOL),
            monotone: raw.num("tol_monotone")?.unwrap_or(1e-6),
            slack: raw.num("tol_slack")?.unwrap_or(tancone::jholo::MONOTONICITY_SLACK),
            k: raw.num("tol_k")?.unwrap_or(tancone::blowup::PERTURBATION_K),
            poincare: raw.num("tol_poincare")?.unwrap_or(0.05),
            gap: raw.num("tol_gap")?.unwrap_or(1e-6),
        };
        Ok(RunConfig {
            example,
            mesh,
            kind,
            h,
            radius,
            power,
            lines,
            center,
            r_max,
            levels,
            ratio,
            field,
            delta: raw.num("delta")?.unwrap_or(0.05),
            theta_hat: raw.num("theta_hat")?,
            c: raw.num("c")?.unwrap_or(0.03),
            samples: raw.int("samples")?.unwrap_or(tancone::jholo::DEFAULT_LINES as u64) as usize,
            seed: raw.int("seed")?.unwrap_or(0),
            out: raw.get("out").map(PathBuf::from),
            tol,
        })
    }

    /// Resolved values as `key = value` lines, in a fixed order.
    pub fn echo(&self) -> Vec<(String, String)> {
        let mut v: Vec<(String, String)> = Vec::new();
        let mut push = |k: &str, val: String| v.push((k.to_string(), val));
        if let Some(e) = &self.example {
            push("example", e.clone());
        }
        if let Some(m) = &self.mesh {
            push("mesh", m.display().to_string());
        }
        push("h", self.h.to_string());
        push("radius", self.radius.to_string());
        push("power", self.power.to_string());
        push("lines", self.lines.to_string());
        if let Some(c) = &self.center {
            push("center", c.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(","));
        }
        push("r_max", self.r_max.to_string());
        push("levels", self.levels.to_string());
        push("ratio", self.ratio.to_string());
        push("field", self.field.clone());
        push("delta", self.delta.to_string());
        if let Some(t) = self.theta_hat {
            push("theta_hat", t.to_string());
        }
        push("c", self.c.to_string());
        push("samples", self.samples.to_string());
        push("seed", self.seed.to_string());
        push("tol_calibrated", self.tol.calibrated.to_string());
        push("tol_monotone", self.tol.monotone.to_string());
        push("tol_slack", self.tol.slack.to_string());
        push("tol_k", self.tol.k.to_string());
        push("tol_poincare", self.tol.poincare.to_string());
        push("tol_gap", self.tol.gap.to_string());
        v
    }

    /// Ladder radii r_max q^k, decreasing.
    pub fn ladder(&self) -> Vec<f64> {
        (0..self.levels).map(|k| self.r_max * self.ratio.powi(k as i32)).collect()
    }
}
