//! Experiment protocols: the empirical pre/during comparison under one
//! shared stress profile, the seeded identical-stress protocol, and sweeps
//! over one network characteristic at a time.
//!
//! Randomness is derived from the configured seed only. Repetition `k` at
//! grid point `g` draws its stressed set from `(seed, g, k)`; a standalone
//! protocol run is grid point 0. Perturbation draws use their own streams.

mod perturb;
pub mod rng;

use std::ops::RangeInclusive;

use rand::seq::index;
use rayon::prelude::*;

pub use perturb::{edges_for_density, perturb_density, perturb_heterogeneity, perturb_sigma, Rewired, Rewirer};

use crate::absorb::{absorptivity_of_residuals, absorptivity_total, evaluate, AbsorptivityTotal};
use crate::domain::{AbsorptivityResult, FlowNetwork, MonthIndex, StressProfile};
use crate::error::{Error, Result};
use crate::metrics::{cross_region_ratio, density, heterogeneity};
use rng::{derived_rng, STRESS_STREAM};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ScenarioKind {
    Pandemic,
    #[default]
    Identical,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub kind: ScenarioKind,
    pub stressed_fraction: f64,
    /// Stressed regions carry `λ = overload · C`.
    pub overload: f64,
    /// Other regions carry `λ = −unstressed_headroom · C`.
    pub unstressed_headroom: f64,
    pub repetitions: usize,
    pub seed: u64,
    pub clamp: bool,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            kind: ScenarioKind::Identical,
            stressed_fraction: 0.5,
            overload: 0.10,
            unstressed_headroom: 0.10,
            repetitions: 100,
            seed: 0,
            clamp: true,
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("stressed_fraction", self.stressed_fraction),
            ("overload", self.overload),
            ("unstressed_headroom", self.unstressed_headroom),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Config(format!("{name} must lie in [0, 1], got {v}")));
            }
        }
        if self.repetitions == 0 {
            return Err(Error::Config("repetitions must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PandemicComparison {
    pub pre: AbsorptivityResult,
    pub during: AbsorptivityResult,
    /// Aggregate over defined timesteps; `None` if every step was undefined.
    pub r_pre: Option<AbsorptivityTotal>,
    pub r_during: Option<AbsorptivityTotal>,
}

/// Evaluates both phase networks against the same profile, optionally
/// restricted to `months`.
pub fn run_pandemic_scenario(
    net_pre: &FlowNetwork,
    net_during: &FlowNetwork,
    profile: &StressProfile,
    months: Option<RangeInclusive<MonthIndex>>,
    clamp: bool,
) -> Result<PandemicComparison> {
    let profile = match months {
        Some(range) => restrict(profile, range)?,
        None => profile.clone(),
    };
    let pre = evaluate(net_pre, &profile, clamp)?;
    let during = evaluate(net_during, &profile, clamp)?;
    let r_pre = absorptivity_total(&pre.r).ok();
    let r_during = absorptivity_total(&during.r).ok();
    Ok(PandemicComparison {
        pre,
        during,
        r_pre,
        r_during,
    })
}

fn restrict(profile: &StressProfile, range: RangeInclusive<MonthIndex>) -> Result<StressProfile> {
    let n = profile.regions().len();
    let mut months = Vec::new();
    let mut load = Vec::new();
    let mut cap = Vec::new();
    for (t, m) in profile.months().iter().enumerate() {
        if range.contains(m) {
            months.push(*m);
            load.extend((0..n).map(|i| profile.load(t, i)));
            cap.extend((0..n).map(|i| profile.capacity(t, i)));
        }
    }
    if months.is_empty() {
        return Err(Error::Validation("stress profile has no months in the requested range".into()));
    }
    StressProfile::new(profile.regions().to_vec(), months, load, cap)
}

#[derive(Debug, Clone, PartialEq)]
pub struct IdenticalStressResult {
    pub mean: f64,
    /// Sample standard deviation over defined repetitions.
    pub std_dev: f64,
    pub per_repetition: Vec<Option<f64>>,
}

impl IdenticalStressResult {
    pub fn defined(&self) -> usize {
        self.per_repetition.iter().flatten().count()
    }

    pub fn std_error(&self) -> f64 {
        self.std_dev / (self.defined() as f64).sqrt()
    }
}

/// Stressed-set size `⌊fraction · n⌉`, rounding halves up.
pub fn stressed_count(n: usize, fraction: f64) -> usize {
    ((fraction * n as f64 + 0.5).floor() as usize).min(n)
}

/// Residuals of one repetition: a seeded random stressed set at
/// `overload · C`, the rest at `−headroom · C`.
pub fn identical_residuals(capacities: &[f64], cfg: &ScenarioConfig, grid_index: usize, repetition: usize) -> Vec<f64> {
    let n = capacities.len();
    let mut rng = derived_rng(cfg.seed, &[STRESS_STREAM, grid_index as u64, repetition as u64]);
    let mut stressed = vec![false; n];
    for k in index::sample(&mut rng, n, stressed_count(n, cfg.stressed_fraction)) {
        stressed[k] = true;
    }
    capacities
        .iter()
        .zip(&stressed)
        .map(|(&c, &s)| if s { cfg.overload * c } else { -cfg.unstressed_headroom * c })
        .collect()
}

/// Identical-stress protocol over `cfg.repetitions` seeded draws.
pub fn run_identical_stress(net: &FlowNetwork, capacities: &[f64], cfg: &ScenarioConfig) -> Result<IdenticalStressResult> {
    identical_stress_at(net, capacities, cfg, 0)
}

fn identical_stress_at(
    net: &FlowNetwork,
    capacities: &[f64],
    cfg: &ScenarioConfig,
    grid_index: usize,
) -> Result<IdenticalStressResult> {
    cfg.validate()?;
    if capacities.len() != net.node_count() {
        return Err(Error::Structural(format!(
            "{} capacities for {} nodes",
            capacities.len(),
            net.node_count()
        )));
    }
    if capacities.iter().all(|&c| c == 0.0) {
        return Err(Error::DegenerateScenario("every regional capacity is zero".into()));
    }
    let per_repetition: Vec<Option<f64>> = (0..cfg.repetitions)
        .into_par_iter()
        .map(|k| absorptivity_of_residuals(net, &identical_residuals(capacities, cfg, grid_index, k), cfg.clamp))
        .collect::<Result<_>>()?;
    let defined: Vec<f64> = per_repetition.iter().flatten().copied().collect();
    if defined.is_empty() {
        return Err(Error::DegenerateScenario("no repetition produced any baseline stress".into()));
    }
    let n = defined.len() as f64;
    let mean = defined.iter().sum::<f64>() / n;
    let std_dev = if defined.len() > 1 {
        (defined.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    Ok(IdenticalStressResult {
        mean,
        std_dev,
        per_repetition,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Characteristic {
    Sigma,
    Density,
    Heterogeneity,
}

impl Characteristic {
    pub fn as_str(self) -> &'static str {
        match self {
            Characteristic::Sigma => "sigma",
            Characteristic::Density => "density",
            Characteristic::Heterogeneity => "heterogeneity",
        }
    }
}

impl std::str::FromStr for Characteristic {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "sigma" => Ok(Characteristic::Sigma),
            "density" | "d" => Ok(Characteristic::Density),
            "heterogeneity" | "h" => Ok(Characteristic::Heterogeneity),
            _ => Err(Error::parse("characteristic", format!("unknown value {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub characteristic: Characteristic,
    pub grid: Vec<f64>,
    pub repetitions: usize,
    pub seed: u64,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.grid.is_empty() {
            return Err(Error::Config("sweep grid is empty".into()));
        }
        if self.grid.iter().any(|g| !g.is_finite()) {
            return Err(Error::Config("sweep grid values must be finite".into()));
        }
        let up = self.grid.windows(2).all(|w| w[0] < w[1]);
        let down = self.grid.windows(2).all(|w| w[0] > w[1]);
        if !(up || down) {
            return Err(Error::Config("sweep grid must be strictly monotone".into()));
        }
        if self.repetitions == 0 {
            return Err(Error::Config("repetitions must be at least 1".into()));
        }
        Ok(())
    }
}

/// `count` evenly spaced values from `start` to `end` inclusive.
pub fn linear_grid(start: f64, end: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![start],
        _ => (0..count)
            .map(|k| start + (end - start) * k as f64 / (count - 1) as f64)
            .collect(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub target: f64,
    pub sigma: f64,
    pub density: f64,
    pub heterogeneity: f64,
    pub mean_r: f64,
    pub std_r: f64,
    /// Rewiring ran out of valid moves before reaching the target.
    pub saturated: bool,
}

impl SweepPoint {
    /// Realized value of the swept characteristic.
    pub fn realized(&self, c: Characteristic) -> f64 {
        match c {
            Characteristic::Sigma => self.sigma,
            Characteristic::Density => self.density,
            Characteristic::Heterogeneity => self.heterogeneity,
        }
    }
}

fn point(
    net: &FlowNetwork,
    grid_index: usize,
    target: f64,
    saturated: bool,
    capacities: &[f64],
    cfg: &ScenarioConfig,
) -> Result<SweepPoint> {
    let result = identical_stress_at(net, capacities, cfg, grid_index)?;
    Ok(SweepPoint {
        target,
        sigma: cross_region_ratio(net)?.0,
        density: density(net)?,
        heterogeneity: heterogeneity(net),
        mean_r: result.mean,
        std_r: result.std_dev,
        saturated,
    })
}

/// Perturbs `net` to each grid value and runs the identical-stress protocol.
///
/// `spec.seed` and `spec.repetitions` override those of `cfg`.
pub fn run_sweep(net: &FlowNetwork, capacities: &[f64], spec: &SweepSpec, cfg: &ScenarioConfig) -> Result<Vec<SweepPoint>> {
    spec.validate()?;
    let cfg = ScenarioConfig {
        seed: spec.seed,
        repetitions: spec.repetitions,
        ..cfg.clone()
    };
    cfg.validate()?;
    let networks: Vec<(FlowNetwork, bool)> = match spec.characteristic {
        Characteristic::Sigma => spec
            .grid
            .iter()
            .map(|&g| perturb_sigma(net, g).map(|n| (n, false)))
            .collect::<Result<_>>()?,
        Characteristic::Density => spec
            .grid
            .iter()
            .map(|&g| perturb_density(net, g, spec.seed).map(|n| (n, false)))
            .collect::<Result<_>>()?,
        Characteristic::Heterogeneity => heterogeneity_chain(net, &spec.grid, spec.seed)?,
    };
    networks
        .par_iter()
        .zip(spec.grid.par_iter())
        .enumerate()
        .map(|(g, ((n, saturated), &target))| point(n, g, target, *saturated, capacities, &cfg))
        .collect()
}

/// Rewires one chain of moves and snapshots it at each target, so higher
/// targets continue from lower ones.
fn heterogeneity_chain(net: &FlowNetwork, grid: &[f64], seed: u64) -> Result<Vec<(FlowNetwork, bool)>> {
    let mut order: Vec<usize> = (0..grid.len()).collect();
    order.sort_by(|&a, &b| grid[a].total_cmp(&grid[b]));
    let mut rewirer = Rewirer::new(net, seed)?;
    let mut out: Vec<Option<(FlowNetwork, bool)>> = vec![None; grid.len()];
    for k in order {
        while rewirer.heterogeneity() < grid[k] && rewirer.step() {}
        let reached = rewirer.heterogeneity() >= grid[k];
        let snapshot = if rewirer.accepted() == 0 {
            net.clone()
        } else {
            rewirer.network()?
        };
        out[k] = Some((snapshot, !reached && rewirer.saturated()));
    }
    Ok(out.into_iter().map(|p| p.expect("every grid point visited")).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::Zip3;

    fn zips(n: usize) -> Vec<Zip3> {
        (0..n).map(|i| Zip3::new(&format!("{:03}", 100 + i)).unwrap()).collect()
    }

    fn complete(n: usize, w: f64, incoming: f64) -> FlowNetwork {
        let mut weights = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    weights[i * n + j] = w;
                }
            }
        }
        FlowNetwork::new("t", zips(n), weights, vec![incoming; n]).unwrap()
    }

    fn ten_node_fixture() -> FlowNetwork {
        let n = 10;
        let mut weights = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                if i != j && (i * 7 + j * 3) % 4 != 0 {
                    weights[i * n + j] = 1.0 + ((i * 31 + j * 17) % 9) as f64;
                }
            }
            weights[i * n + i] = 20.0;
        }
        let incoming = (0..n).map(|i| 150.0 + 40.0 * i as f64).collect();
        FlowNetwork::new("fixture", zips(n), weights, incoming).unwrap()
    }

    #[test]
    fn zero_headroom_gives_zero_absorption() {
        let net = ten_node_fixture();
        let cfg = ScenarioConfig {
            unstressed_headroom: 0.0,
            seed: 3,
            ..ScenarioConfig::default()
        };
        let res = run_identical_stress(&net, net.incoming_totals(), &cfg).unwrap();
        assert_eq!(res.mean, 0.0);
        assert!(res.per_repetition.iter().all(|r| *r == Some(0.0)));
    }

    #[test]
    fn ample_headroom_absorbs_everything() {
        // m_j = 3 · 2 = 6 ≤ C_j = 10; stressed need 1 and shed 2 · 2 = 4.
        let net = complete(4, 2.0, 10.0);
        let cfg = ScenarioConfig {
            unstressed_headroom: 1.0,
            seed: 5,
            ..ScenarioConfig::default()
        };
        let res = run_identical_stress(&net, net.incoming_totals(), &cfg).unwrap();
        assert_eq!(res.mean, 1.0);
        assert!(res.per_repetition.iter().all(|r| *r == Some(1.0)));
    }

    #[test]
    fn fixed_seed_snapshot_is_reproducible() {
        let net = ten_node_fixture();
        let cfg = ScenarioConfig {
            seed: 2024,
            ..ScenarioConfig::default()
        };
        let a = run_identical_stress(&net, net.incoming_totals(), &cfg).unwrap();
        let b = run_identical_stress(&net, net.incoming_totals(), &cfg).unwrap();
        assert_eq!(a.mean.to_bits(), b.mean.to_bits());
        assert_eq!(a.per_repetition, b.per_repetition);
        assert!(a.mean > 0.0 && a.mean < 1.0);
    }

    #[test]
    fn zero_capacity_is_degenerate() {
        let net = complete(3, 1.0, 5.0);
        let err = run_identical_stress(&net, &[0.0; 3], &ScenarioConfig::default()).unwrap_err();
        assert!(matches!(err, Error::DegenerateScenario(_)));
    }

    #[test]
    fn stressed_half_rounds_up() {
        assert_eq!(stressed_count(10, 0.5), 5);
        assert_eq!(stressed_count(5, 0.5), 3);
        assert_eq!(stressed_count(4, 0.0), 0);
        assert_eq!(stressed_count(4, 1.0), 4);
    }

    #[test]
    fn pandemic_identical_networks_identical_series() {
        let net = ten_node_fixture();
        let n = net.node_count();
        let months: Vec<MonthIndex> = (1..=3).map(|m| MonthIndex::new(2020, m).unwrap()).collect();
        let load: Vec<f64> = (0..3 * n).map(|k| 100.0 + ((k * 37) % 50) as f64).collect();
        let cap: Vec<f64> = (0..3 * n).map(|k| 100.0 + ((k * 11) % 50) as f64).collect();
        let profile = StressProfile::new(zips(n), months, load, cap).unwrap();
        let cmp = run_pandemic_scenario(&net, &net, &profile, None, true).unwrap();
        assert_eq!(cmp.pre, cmp.during);

        let cut = net.map_off_diagonal(|_, _, _| 0.0).unwrap();
        let cmp = run_pandemic_scenario(&net, &cut, &profile, None, true).unwrap();
        assert_eq!(cmp.r_during.unwrap().r, 0.0);
        assert!(cmp.r_pre.unwrap().r >= 0.0);

        let jan = MonthIndex::new(2020, 1).unwrap();
        let cmp = run_pandemic_scenario(&net, &net, &profile, Some(jan..=jan), true).unwrap();
        assert_eq!(cmp.pre.months, vec![jan]);
    }

    #[test]
    fn sweep_of_one_point_matches_protocol() {
        let net = ten_node_fixture();
        let sigma = cross_region_ratio(&net).unwrap().0;
        let cfg = ScenarioConfig::default();
        let spec = SweepSpec {
            characteristic: Characteristic::Sigma,
            grid: vec![sigma],
            repetitions: 50,
            seed: 17,
        };
        let curve = run_sweep(&net, net.incoming_totals(), &spec, &cfg).unwrap();
        let direct = run_identical_stress(
            &net,
            net.incoming_totals(),
            &ScenarioConfig {
                seed: 17,
                repetitions: 50,
                ..cfg
            },
        )
        .unwrap();
        assert_eq!(curve.len(), 1);
        assert_eq!(curve[0].mean_r, direct.mean);
    }

    #[test]
    fn sweep_is_deterministic() {
        let net = ten_node_fixture();
        let spec = SweepSpec {
            characteristic: Characteristic::Heterogeneity,
            grid: linear_grid(heterogeneity(&net), heterogeneity(&net) + 0.5, 4),
            repetitions: 20,
            seed: 4,
        };
        let a = run_sweep(&net, net.incoming_totals(), &spec, &ScenarioConfig::default()).unwrap();
        let b = run_sweep(&net, net.incoming_totals(), &spec, &ScenarioConfig::default()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn grid_validation() {
        let bad = SweepSpec {
            characteristic: Characteristic::Sigma,
            grid: vec![0.1, 0.1],
            repetitions: 1,
            seed: 0,
        };
        assert!(bad.validate().is_err());
        assert!(SweepSpec { grid: vec![], ..bad.clone() }.validate().is_err());
        assert!(SweepSpec {
            grid: vec![0.3, 0.2],
            ..bad
        }
        .validate()
        .is_ok());
        assert_eq!(linear_grid(0.02, 0.20, 10).len(), 10);
        assert!((linear_grid(0.02, 0.20, 10)[9] - 0.20).abs() < 1e-15);
    }
}
