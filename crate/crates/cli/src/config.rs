//! Experiment settings: built-in defaults, then a `key = value` file, then
//! command-line flags.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use adfilter::filter::PovmMode;
use adfilter::scheme_b::PhaseScaling;

use crate::CliError;

pub const DEFAULT_T1: f64 = 0.8;
pub const DEFAULT_POINTS: usize = 40;
pub const DEFAULT_TMIN: f64 = 0.01;
pub const DEFAULT_TMAX: f64 = 1.2;
pub const DEFAULT_N_MAX: usize = adfilter::scheme_a::DEFAULT_N_MAX;
pub const DEFAULT_SEED: u64 = 1;

/// Which sweep to run.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scheme {
    Ideal,
    A,
    B,
}

impl Scheme {
    pub fn default_nbars(self) -> Vec<f64> {
        match self {
            Scheme::Ideal => vec![0.0],
            Scheme::A => vec![0.0, 0.05, 0.09, 0.125],
            Scheme::B => vec![0.0, 10.0, 25.0, 50.0],
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scheme::Ideal => "ideal",
            Scheme::A => "a",
            Scheme::B => "b",
        })
    }
}

impl FromStr for Scheme {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        match s.trim() {
            "ideal" => Ok(Scheme::Ideal),
            "a" | "scheme-a" => Ok(Scheme::A),
            "b" | "scheme-b" => Ok(Scheme::B),
            other => Err(CliError::Config(format!("unknown scheme `{other}`"))),
        }
    }
}

pub fn parse_mode(s: &str) -> Result<PhaseScaling, CliError> {
    match s.trim() {
        "scale_zz_only" => Ok(PhaseScaling::ScaleZzOnly),
        "scale_all" => Ok(PhaseScaling::ScaleAll),
        other => Err(CliError::Config(format!("unknown mode `{other}` (expected scale_zz_only or scale_all)"))),
    }
}

pub fn mode_name(mode: PhaseScaling) -> &'static str {
    match mode {
        PhaseScaling::ScaleZzOnly => "scale_zz_only",
        PhaseScaling::ScaleAll => "scale_all",
    }
}

pub fn parse_povm(s: &str) -> Result<PovmMode, CliError> {
    match s.trim() {
        "circuit" | "circuit_derived" => Ok(PovmMode::CircuitDerived),
        "paper" | "povm_paper" => Ok(PovmMode::PovmPaper),
        other => Err(CliError::Config(format!("unknown POVM mode `{other}` (expected circuit or paper)"))),
    }
}

pub fn povm_name(mode: PovmMode) -> &'static str {
    match mode {
        PovmMode::CircuitDerived => "circuit",
        PovmMode::PovmPaper => "paper",
    }
}

/// Comma-separated list of numbers.
pub fn parse_list(s: &str) -> Result<Vec<f64>, CliError> {
    s.split(',').map(str::trim).filter(|x| !x.is_empty()).map(|x| parse_num::<f64>("nbar", x)).collect()
}

fn parse_num<T: FromStr>(key: &str, value: &str) -> Result<T, CliError> {
    value.trim().parse().map_err(|_| CliError::Config(format!("invalid value `{value}` for `{key}`")))
}

/// Partially specified settings. Every layer (file, flags) produces one of
/// these; later layers win.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Overrides {
    pub t1: Option<f64>,
    pub points: Option<usize>,
    pub tmin: Option<f64>,
    pub tmax: Option<f64>,
    pub nbar: Option<Vec<f64>>,
    pub n_max: Option<usize>,
    pub mode: Option<PhaseScaling>,
    pub povm: Option<PovmMode>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub json: Option<bool>,
}

impl Overrides {
    /// Parses `key = value` lines. `#` starts a comment.
    pub fn parse_text(text: &str) -> Result<Self, CliError> {
        let mut o = Overrides::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("line {}: expected key = value", lineno + 1)))?;
            let (key, value) = (key.trim(), value.trim());
            match key {
                "t1" => o.t1 = Some(parse_num(key, value)?),
                "points" => o.points = Some(parse_num(key, value)?),
                "tmin" => o.tmin = Some(parse_num(key, value)?),
                "tmax" => o.tmax = Some(parse_num(key, value)?),
                "nbar" => o.nbar = Some(parse_list(value)?),
                "nmax" => o.n_max = Some(parse_num(key, value)?),
                "mode" => o.mode = Some(parse_mode(value)?),
                "povm" => o.povm = Some(parse_povm(value)?),
                "seed" => o.seed = Some(parse_num(key, value)?),
                "out" => o.out = Some(PathBuf::from(value)),
                "json" => o.json = Some(parse_num(key, value)?),
                other => return Err(CliError::Config(format!("line {}: unknown key `{other}`", lineno + 1))),
            }
        }
        Ok(o)
    }

    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config file {}: {e}", path.display())))?;
        Self::parse_text(&text)
    }

    /// `self` with every field set in `top` replaced.
    pub fn layered(self, top: Overrides) -> Overrides {
        Overrides {
            t1: top.t1.or(self.t1),
            points: top.points.or(self.points),
            tmin: top.tmin.or(self.tmin),
            tmax: top.tmax.or(self.tmax),
            nbar: top.nbar.or(self.nbar),
            n_max: top.n_max.or(self.n_max),
            mode: top.mode.or(self.mode),
            povm: top.povm.or(self.povm),
            seed: top.seed.or(self.seed),
            out: top.out.or(self.out),
            json: top.json.or(self.json),
        }
    }
}

/// `points` evenly spaced values from `tmin` to `tmax` inclusive.
pub fn linear_grid(tmin: f64, tmax: f64, points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![tmax],
        n => (0..n).map(|k| tmin + (tmax - tmin) * k as f64 / (n - 1) as f64).collect(),
    }
}

/// Fully resolved settings of one run.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub t1: f64,
    pub t_over_t1_grid: Vec<f64>,
    pub nbar_values: Vec<f64>,
    pub n_max: usize,
    pub scheme: Scheme,
    pub scheme_b_mode: PhaseScaling,
    pub povm_mode: PovmMode,
    pub seed: u64,
    pub output_path: Option<PathBuf>,
    pub json: bool,
}

impl ExperimentConfig {
    pub fn defaults(scheme: Scheme) -> Self {
        Self::resolve(scheme, &Overrides::default()).expect("defaults are valid")
    }

    pub fn resolve(scheme: Scheme, o: &Overrides) -> Result<Self, CliError> {
        let tmin = o.tmin.unwrap_or(DEFAULT_TMIN);
        let tmax = o.tmax.unwrap_or(DEFAULT_TMAX);
        if tmax < tmin {
            return Err(CliError::Config(format!("tmax {tmax} is below tmin {tmin}")));
        }
        let nbar_values = match scheme {
            Scheme::Ideal => vec![0.0],
            _ => o.nbar.clone().unwrap_or_else(|| scheme.default_nbars()),
        };
        let cfg = Self {
            t1: o.t1.unwrap_or(DEFAULT_T1),
            t_over_t1_grid: linear_grid(tmin, tmax, o.points.unwrap_or(DEFAULT_POINTS)),
            nbar_values,
            n_max: o.n_max.unwrap_or(DEFAULT_N_MAX),
            scheme,
            scheme_b_mode: o.mode.unwrap_or_default(),
            povm_mode: o.povm.unwrap_or_default(),
            seed: o.seed.unwrap_or(DEFAULT_SEED),
            output_path: o.out.clone(),
            json: o.json.unwrap_or(false),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if !(self.t1.is_finite() && self.t1 > 0.0) {
            return Err(CliError::Config(format!("t1 must be positive, got {}", self.t1)));
        }
        if self.t_over_t1_grid.is_empty() {
            return Err(CliError::Config("time grid is empty".into()));
        }
        if let Some(t) = self.t_over_t1_grid.iter().find(|t| !t.is_finite() || **t < 0.0) {
            return Err(CliError::Config(format!("grid value {t} must be non-negative")));
        }
        if self.nbar_values.is_empty() {
            return Err(CliError::Config("nbar list is empty".into()));
        }
        if let Some(n) = self.nbar_values.iter().find(|n| !n.is_finite() || **n < 0.0) {
            return Err(CliError::Config(format!("nbar {n} must be non-negative")));
        }
        if self.n_max < 1 {
            return Err(CliError::Config("nmax must be at least 1".into()));
        }
        Ok(())
    }
}
