//! Run configuration from a flat `key = value` file.
//!
//! Lines starting with `#` and blank lines are ignored. Keys:
//!
//! | key | default |
//! |---|---|
//! | `rho` | 0.1 |
//! | `v_max` | 3 |
//! | `clamp` | true |
//! | `distance_weighting` | flow |
//! | `old_age_min` | 65 |
//! | `stressed_fraction` | 0.5 |
//! | `overload` | 0.1 |
//! | `unstressed_headroom` | 0.1 |
//! | `repetitions` | 100 |
//! | `seed` | 0 |
//! | `input` | none |
//! | `output` | none |
//!
//! `ABSORBNET_SEED` in the environment replaces the file's seed.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use crate::absorb::CapacityModel;
use crate::builder::DEFAULT_V_MAX;
use crate::domain::AgeBands;
use crate::error::{Error, Result};
use crate::metrics::DistanceWeighting;
use crate::scenario::ScenarioConfig;

pub const SEED_ENV: &str = "ABSORBNET_SEED";

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub rho: f64,
    pub v_max: u32,
    pub clamp: bool,
    pub distance_weighting: DistanceWeighting,
    pub age_bands: AgeBands,
    pub stressed_fraction: f64,
    pub overload: f64,
    pub unstressed_headroom: f64,
    pub repetitions: usize,
    pub seed: u64,
    pub input: Option<PathBuf>,
    pub output: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let scenario = ScenarioConfig::default();
        RunConfig {
            rho: 0.1,
            v_max: DEFAULT_V_MAX,
            clamp: true,
            distance_weighting: DistanceWeighting::Flow,
            age_bands: AgeBands::default(),
            stressed_fraction: scenario.stressed_fraction,
            overload: scenario.overload,
            unstressed_headroom: scenario.unstressed_headroom,
            repetitions: scenario.repetitions,
            seed: scenario.seed,
            input: None,
            output: None,
        }
    }
}

fn parse_value<T: std::str::FromStr>(key: &str, raw: &str) -> Result<T> {
    raw.parse()
        .map_err(|_| Error::Config(format!("{key}: cannot parse {raw:?}")))
}

fn parse_bool(key: &str, raw: &str) -> Result<bool> {
    match raw.to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(Error::Config(format!("{key}: expected true or false, got {raw:?}"))),
    }
}

impl RunConfig {
    /// Parses config text on top of the defaults and validates the result.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = RunConfig::default();
        let mut seen = BTreeSet::new();
        for (k, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", k + 1)))?;
            let (key, value) = (key.trim(), value.trim());
            if !seen.insert(key.to_string()) {
                return Err(Error::Config(format!("line {}: duplicate key {key}", k + 1)));
            }
            cfg.set(key, value)
                .map_err(|e| Error::Config(format!("line {}: {e}", k + 1)))?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "rho" => self.rho = parse_value(key, value)?,
            "v_max" => self.v_max = parse_value(key, value)?,
            "clamp" => self.clamp = parse_bool(key, value)?,
            "distance_weighting" => self.distance_weighting = value.parse()?,
            "old_age_min" => self.age_bands.old_min = parse_value(key, value)?,
            "stressed_fraction" => self.stressed_fraction = parse_value(key, value)?,
            "overload" => self.overload = parse_value(key, value)?,
            "unstressed_headroom" => self.unstressed_headroom = parse_value(key, value)?,
            "repetitions" => self.repetitions = parse_value(key, value)?,
            "seed" => self.seed = parse_value(key, value)?,
            "input" => self.input = Some(PathBuf::from(value)),
            "output" => self.output = Some(PathBuf::from(value)),
            _ => return Err(Error::Config(format!("unknown key {key:?}"))),
        }
        Ok(())
    }

    /// Replaces the seed with `ABSORBNET_SEED` when that variable is set.
    pub fn apply_env(&mut self) -> Result<()> {
        self.apply_seed_override(std::env::var(SEED_ENV).ok().as_deref())
    }

    pub fn apply_seed_override(&mut self, raw: Option<&str>) -> Result<()> {
        if let Some(raw) = raw {
            self.seed = raw
                .trim()
                .parse()
                .map_err(|_| Error::Config(format!("{SEED_ENV}: cannot parse {raw:?} as a seed")))?;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        CapacityModel::new(self.rho)?;
        if self.v_max < 1 {
            return Err(Error::Config("v_max must be at least 1".into()));
        }
        if !(44..=130).contains(&self.age_bands.old_min) {
            return Err(Error::Config(format!(
                "old_age_min must lie in [44, 130], got {}",
                self.age_bands.old_min
            )));
        }
        self.scenario().validate()
    }

    pub fn capacity_model(&self) -> CapacityModel {
        CapacityModel::new(self.rho).expect("rho validated")
    }

    pub fn scenario(&self) -> ScenarioConfig {
        ScenarioConfig {
            stressed_fraction: self.stressed_fraction,
            overload: self.overload,
            unstressed_headroom: self.unstressed_headroom,
            repetitions: self.repetitions,
            seed: self.seed,
            clamp: self.clamp,
            ..ScenarioConfig::default()
        }
    }
}
