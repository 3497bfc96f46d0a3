//! Seeded synthetic visit corpora and a naive absorptivity oracle.
//!
//! Each patient has a home region drawn with power-law preference over the
//! region index (`hub_bias = 0` is uniform). Every month the patient makes
//! a truncated-Poisson number of visits, all in one region: home, or with
//! probability `transit_prob` another region drawn with the same preference.

use std::collections::BTreeMap;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Poisson;

use crate::domain::{AgeGroup, FlowNetwork, MonthIndex, Race, RegionId, RegionInfo, StressProfile, VisitRecord};
use crate::error::{Error, Result};
use crate::services::ServiceClass;

/// Real codes drawn from the chronic ranges.
pub const CHRONIC_CODES: &[&str] = &[
    "G30.9", "J45.909", "I70.0", "C50.911", "C34.90", "I63.9", "K70.30", "K74.60", "J44.9", "E11.9", "E10.9",
    "I10", "I12.9", "I15.0", "I05.9", "I11.9", "I13.0", "I25.10", "I50.9", "N03.9", "N18.3", "N25.81", "I73.9",
    "I82.90",
];

/// Real codes drawn from the acute respiratory ranges.
pub const ACUTE_CODES: &[&str] = &["U07.1", "U09.9", "J06.9", "J02.9", "J09.X2", "J11.1", "J18.9", "J20.9", "J22"];

pub const OTHER_CODES: &[&str] = &["Z00.00", "M54.5", "R05.9", "K21.9", "Z23", "H52.4", "L70.0"];

#[derive(Debug, Clone, PartialEq)]
pub struct SynthParams {
    pub n_regions: usize,
    pub n_patients: usize,
    pub start: MonthIndex,
    pub n_months: usize,
    /// Poisson mean of visits per patient per month.
    pub visits_per_month: f64,
    pub visit_cap: u32,
    pub transit_prob: f64,
    pub hub_bias: f64,
    /// child, young, middle, old, unknown
    pub age_mix: [f64; 5],
    /// asian, black, hispanic, white, other, unknown
    pub race_mix: [f64; 6],
    /// chronic, acute respiratory, other; a visit carries one code
    pub service_mix: [f64; 3],
    /// Physicians per expected monthly visit at baseline.
    pub physician_ratio: f64,
    /// Physicians added per region per month.
    pub physician_trend: f64,
    pub state: String,
    pub center: (f64, f64),
    pub spread_deg: f64,
    pub seed: u64,
}

impl Default for SynthParams {
    fn default() -> Self {
        SynthParams {
            n_regions: 10,
            n_patients: 1000,
            start: MonthIndex::new(2019, 1).expect("valid month"),
            n_months: 24,
            visits_per_month: 0.8,
            visit_cap: 10,
            transit_prob: 0.05,
            hub_bias: 1.0,
            age_mix: [0.2, 0.35, 0.25, 0.18, 0.02],
            race_mix: [0.05, 0.12, 0.15, 0.55, 0.08, 0.05],
            service_mix: [0.25, 0.15, 0.60],
            physician_ratio: 0.1,
            physician_trend: 0.05,
            state: "NY".into(),
            center: (42.9, -75.5),
            spread_deg: 1.5,
            seed: 7,
        }
    }
}

fn check_mixture(name: &str, mix: &[f64]) -> Result<()> {
    if mix.iter().any(|p| !(0.0..=1.0).contains(p)) || (mix.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(Error::Config(format!("{name} must be probabilities summing to 1")));
    }
    Ok(())
}

impl SynthParams {
    pub fn validate(&self) -> Result<()> {
        if self.n_regions == 0 || self.n_patients == 0 || self.n_months == 0 {
            return Err(Error::Config("regions, patients and months must all be at least 1".into()));
        }
        if self.n_regions > 900 {
            return Err(Error::Config("at most 900 three-digit regions are available".into()));
        }
        if !(0.0..=1.0).contains(&self.transit_prob) {
            return Err(Error::Config("transit_prob must lie in [0, 1]".into()));
        }
        if !(self.visits_per_month > 0.0) || self.visit_cap == 0 {
            return Err(Error::Config("visit mean and cap must be positive".into()));
        }
        if !(self.hub_bias >= 0.0) || !(self.physician_ratio >= 0.0) || !(self.physician_trend >= 0.0) {
            return Err(Error::Config("hub bias and physician parameters must be non-negative".into()));
        }
        check_mixture("age_mix", &self.age_mix)?;
        check_mixture("race_mix", &self.race_mix)?;
        check_mixture("service_mix", &self.service_mix)?;
        Ok(())
    }

    /// Normalized home-region preference `(i + 1)^-hub_bias`.
    pub fn region_preference(&self) -> Vec<f64> {
        let raw: Vec<f64> = (0..self.n_regions).map(|i| ((i + 1) as f64).powf(-self.hub_bias)).collect();
        let total: f64 = raw.iter().sum();
        raw.into_iter().map(|w| w / total).collect()
    }

    /// Expected visits per active patient-month under the truncated Poisson.
    pub fn expected_visits(&self) -> f64 {
        let mu = self.visits_per_month;
        let mut pmf = (-mu).exp();
        let mut mean = 0.0;
        let mut below = pmf;
        for k in 1..self.visit_cap {
            pmf *= mu / f64::from(k);
            mean += f64::from(k) * pmf;
            below += pmf;
        }
        mean += f64::from(self.visit_cap) * (1.0 - below);
        mean
    }

    pub fn months(&self) -> Vec<MonthIndex> {
        (0..self.n_months as i64).map(|k| self.start.add_months(k)).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthCorpus {
    pub records: Vec<VisitRecord>,
    pub regions: Vec<RegionInfo>,
}

fn pick<'a>(rng: &mut ChaCha8Rng, items: &[&'a str]) -> &'a str {
    items[rng.random_range(0..items.len())]
}

pub fn generate_corpus(params: &SynthParams) -> Result<SynthCorpus> {
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let pref = params.region_preference();
    let home_dist = WeightedIndex::new(&pref).map_err(|e| Error::Config(e.to_string()))?;
    let age_dist = WeightedIndex::new(params.age_mix).map_err(|e| Error::Config(e.to_string()))?;
    let race_dist = WeightedIndex::new(params.race_mix).map_err(|e| Error::Config(e.to_string()))?;
    let service_dist = WeightedIndex::new(params.service_mix).map_err(|e| Error::Config(e.to_string()))?;
    let visits = Poisson::new(params.visits_per_month).map_err(|e| Error::Config(e.to_string()))?;

    let ids: Vec<RegionId> = (0..params.n_regions)
        .map(|i| RegionId::new(&format!("{:03}", 100 + i), &params.state))
        .collect::<Result<_>>()?;
    let months = params.months();

    let mut records = Vec::new();
    let width = params.n_patients.to_string().len().max(6);
    for k in 0..params.n_patients {
        let patient = format!("P{k:0width$}");
        let home = home_dist.sample(&mut rng);
        let age = AgeGroup::ALL[age_dist.sample(&mut rng)];
        let race = Race::ALL[race_dist.sample(&mut rng)];
        for &month in &months {
            let count = (visits.sample(&mut rng) as u32).min(params.visit_cap);
            if count == 0 {
                continue;
            }
            let region = if params.n_regions > 1 && rng.random_bool(params.transit_prob) {
                let mut away = pref.clone();
                away[home] = 0.0;
                WeightedIndex::new(&away)
                    .map_err(|e| Error::Config(e.to_string()))?
                    .sample(&mut rng)
            } else {
                home
            };
            for _ in 0..count {
                let code = match [ServiceClass::Chronic, ServiceClass::AcuteRespiratory, ServiceClass::Other]
                    [service_dist.sample(&mut rng)]
                {
                    ServiceClass::Chronic => pick(&mut rng, CHRONIC_CODES),
                    ServiceClass::AcuteRespiratory => pick(&mut rng, ACUTE_CODES),
                    ServiceClass::Other => pick(&mut rng, OTHER_CODES),
                };
                records.push(VisitRecord::new(&patient, month, ids[region].clone(), age, race, &[code])?);
            }
        }
    }

    let expected_load = params.n_patients as f64 * params.expected_visits();
    let mut regions = Vec::with_capacity(params.n_regions);
    for (i, id) in ids.into_iter().enumerate() {
        let lat = params.center.0 + rng.random_range(-params.spread_deg..=params.spread_deg);
        let lon = params.center.1 + rng.random_range(-params.spread_deg..=params.spread_deg);
        let jitter = rng.random_range(0.85..=1.15);
        let baseline = (params.physician_ratio * expected_load * pref[i] * jitter).round();
        let physicians: BTreeMap<MonthIndex, u64> = months
            .iter()
            .enumerate()
            .map(|(t, &m)| (m, (baseline + (params.physician_trend * t as f64).floor()) as u64))
            .collect();
        regions.push(RegionInfo::new(id, lat.clamp(-90.0, 90.0), lon.clamp(-180.0, 180.0))?.with_physicians(physicians));
    }
    Ok(SynthCorpus { records, regions })
}

/// Per-region networked stress and `r(t)` by plain edge-by-edge bookkeeping.
///
/// Kept free of any code shared with [`crate::absorb`] so it can serve as an
/// independent check.
pub fn oracle_absorptivity(
    net: &FlowNetwork,
    profile: &StressProfile,
    t: usize,
    clamp: bool,
) -> Result<(Vec<f64>, Option<f64>)> {
    if net.nodes() != profile.regions() {
        return Err(Error::Structural("network nodes do not match profile regions".into()));
    }
    let n = net.node_count();
    let mut edge_list = Vec::new();
    for src in 0..n {
        for dst in 0..n {
            let w = net.weight(src, dst);
            if src != dst && w > 0.0 {
                edge_list.push((src, dst, w));
            }
        }
    }

    let mut stress_after = Vec::with_capacity(n);
    let mut baseline_sum = 0.0;
    let mut after_sum = 0.0;
    for i in 0..n {
        let lambda_i = profile.load(t, i) - profile.capacity(t, i);
        let excess = if lambda_i > 0.0 { lambda_i } else { 0.0 };
        let mut shed = 0.0;
        for &(src, dst, w) in &edge_list {
            if src != i {
                continue;
            }
            let lambda_j = profile.load(t, dst) - profile.capacity(t, dst);
            let mut inflow = 0.0;
            for &(s2, d2, w2) in &edge_list {
                if d2 == dst && s2 != dst {
                    inflow += w2;
                }
            }
            let u = if lambda_j >= 0.0 {
                0.0
            } else if -lambda_j < inflow {
                -lambda_j / inflow
            } else {
                1.0
            };
            shed += w * u;
        }
        let mut left = excess - shed;
        if clamp && left < 0.0 {
            left = 0.0;
        }
        stress_after.push(left);
        baseline_sum += excess;
        after_sum += left;
    }
    let lambda_o = baseline_sum / n as f64;
    let lambda_w = after_sum / n as f64;
    let r = if lambda_o > 0.0 { Some(1.0 - lambda_w / lambda_o) } else { None };
    Ok((stress_after, r))
}
