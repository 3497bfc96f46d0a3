//! Baseline stress, networked stress and absorptivity.
//!
//! Each receiver `j` with spare capacity `-λ_j` absorbs the same fraction
//! `u_j` of every inflow it gets, so that total absorbed stress never
//! exceeds its spare capacity. A sender `i` sheds `Σ_j w_ij u_j` of its
//! excess. With clamping (the default) residual stress is floored at zero
//! per node, which keeps `r(t)` inside `[0, 1]`.

use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::domain::{AbsorptivityResult, FlowNetwork, MonthIndex, RegionInfo, StressProfile, Zip3};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CapacitySource {
    #[default]
    PhysicianCounts,
    Explicit,
}

/// Physician-to-patient ratio used to turn physician counts into capacity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CapacityModel {
    pub rho: f64,
    pub source: CapacitySource,
}

impl CapacityModel {
    pub fn new(rho: f64) -> Result<Self> {
        if !(rho > 0.0 && rho.is_finite()) {
            return Err(Error::Config(format!("rho must be positive, got {rho}")));
        }
        Ok(CapacityModel {
            rho,
            source: CapacitySource::PhysicianCounts,
        })
    }
}

/// `C = P / ρ`.
pub fn capacity(physicians: f64, model: &CapacityModel) -> Result<f64> {
    if !(model.rho > 0.0 && model.rho.is_finite()) {
        return Err(Error::Config(format!("rho must be positive, got {}", model.rho)));
    }
    if !(physicians >= 0.0) {
        return Err(Error::Validation(format!("physician count must be non-negative, got {physicians}")));
    }
    Ok(physicians / model.rho)
}

/// Builds a profile whose capacities come from physician counts.
///
/// `loads` maps each month to per-region incoming visits in `regions` order.
/// Regions or months without a physician entry get zero capacity.
pub fn profile_from_physicians(
    regions: &[Zip3],
    loads: &BTreeMap<MonthIndex, Vec<f64>>,
    infos: &BTreeMap<Zip3, RegionInfo>,
    model: &CapacityModel,
) -> Result<StressProfile> {
    let months: Vec<MonthIndex> = loads.keys().copied().collect();
    let mut load = Vec::with_capacity(months.len() * regions.len());
    let mut cap = Vec::with_capacity(months.len() * regions.len());
    for (month, row) in loads {
        if row.len() != regions.len() {
            return Err(Error::Structural(format!("load row for {month} has {} entries", row.len())));
        }
        load.extend_from_slice(row);
        for zip in regions {
            let p = infos.get(zip).and_then(|info| info.physicians_at(*month)).unwrap_or(0);
            cap.push(capacity(p as f64, model)?);
        }
    }
    StressProfile::new(regions.to_vec(), months, load, cap)
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Per-region `max(0, λ_i)` and their mean.
pub fn baseline_stress(profile: &StressProfile, t: usize) -> (Vec<f64>, f64) {
    let per_region: Vec<f64> = profile.residuals(t).into_iter().map(|l| l.max(0.0)).collect();
    let m = mean(&per_region);
    (per_region, m)
}

/// Share of each unit of inflow that receiver `j` can take on.
pub fn absorbed_fraction(lambda_j: f64, inflow_j: f64) -> f64 {
    if lambda_j >= 0.0 {
        0.0
    } else if inflow_j > 0.0 {
        (-lambda_j / inflow_j).min(1.0)
    } else {
        // Nothing flows in, so the value never contributes.
        1.0
    }
}

fn check_alignment(net: &FlowNetwork, profile: &StressProfile) -> Result<()> {
    if net.nodes() != profile.regions() {
        return Err(Error::Structural(format!(
            "network {} nodes do not match the stress profile regions",
            net.period()
        )));
    }
    Ok(())
}

/// Per-region stress left after redistribution over `net`, and its mean.
pub fn networked_stress(net: &FlowNetwork, profile: &StressProfile, t: usize, clamp: bool) -> Result<(Vec<f64>, f64)> {
    check_alignment(net, profile)?;
    Ok(networked_stress_unchecked(net, &profile.residuals(t), clamp))
}

fn networked_stress_unchecked(net: &FlowNetwork, residuals: &[f64], clamp: bool) -> (Vec<f64>, f64) {
    let n = net.node_count();
    let w = net.weights();
    let mut inflow = vec![0.0; n];
    for i in 0..n {
        for j in 0..n {
            if i != j {
                inflow[j] += w[i * n + j];
            }
        }
    }
    let u: Vec<f64> = residuals
        .iter()
        .zip(&inflow)
        .map(|(&l, &m)| absorbed_fraction(l, m))
        .collect();
    let per_region: Vec<f64> = (0..n)
        .map(|i| {
            let row = &w[i * n..(i + 1) * n];
            let absorbed: f64 = row
                .iter()
                .zip(&u)
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, (wij, uj))| wij * uj)
                .sum();
            let raw = residuals[i].max(0.0) - absorbed;
            if clamp {
                raw.max(0.0)
            } else {
                raw
            }
        })
        .collect();
    let m = mean(&per_region);
    (per_region, m)
}

/// `1 − λ^W / λ^O`, undefined when there is no baseline stress.
pub fn absorptivity_at(lambda_o: f64, lambda_w: f64) -> Option<f64> {
    (lambda_o > 0.0).then(|| 1.0 - lambda_w / lambda_o)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AbsorptivityTotal {
    pub r: f64,
    pub defined: usize,
    pub skipped: usize,
}

/// Mean of `r(t)` over the timesteps where it is defined.
pub fn absorptivity_total(series: &[Option<f64>]) -> Result<AbsorptivityTotal> {
    let defined: Vec<f64> = series.iter().flatten().copied().collect();
    let skipped = series.len() - defined.len();
    if defined.is_empty() {
        return Err(Error::UndefinedAggregate(skipped));
    }
    Ok(AbsorptivityTotal {
        r: mean(&defined),
        defined: defined.len(),
        skipped,
    })
}

/// Evaluates every month of `profile` against one network.
pub fn evaluate(net: &FlowNetwork, profile: &StressProfile, clamp: bool) -> Result<AbsorptivityResult> {
    check_alignment(net, profile)?;
    let steps: Vec<(f64, f64)> = (0..profile.months().len())
        .into_par_iter()
        .map(|t| {
            let residuals = profile.residuals(t);
            let baseline: Vec<f64> = residuals.iter().map(|l| l.max(0.0)).collect();
            let (_, lw) = networked_stress_unchecked(net, &residuals, clamp);
            (mean(&baseline), lw)
        })
        .collect();
    let (lambda_o, lambda_w): (Vec<f64>, Vec<f64>) = steps.into_iter().unzip();
    let r = lambda_o
        .iter()
        .zip(&lambda_w)
        .map(|(&o, &w)| absorptivity_at(o, w))
        .collect();
    Ok(AbsorptivityResult {
        months: profile.months().to_vec(),
        lambda_o,
        lambda_w,
        r,
    })
}

/// Absorptivity of a single residual vector (one timestep).
pub fn absorptivity_of_residuals(net: &FlowNetwork, residuals: &[f64], clamp: bool) -> Result<Option<f64>> {
    if residuals.len() != net.node_count() {
        return Err(Error::Structural(format!(
            "{} residuals for {} nodes",
            residuals.len(),
            net.node_count()
        )));
    }
    let baseline: Vec<f64> = residuals.iter().map(|l| l.max(0.0)).collect();
    let (_, lw) = networked_stress_unchecked(net, residuals, clamp);
    Ok(absorptivity_at(mean(&baseline), lw))
}
