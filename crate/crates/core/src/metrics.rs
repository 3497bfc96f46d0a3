//! Structural and spatial measures of a flow network.
//!
//! Topology-based measures (density, heterogeneity) only look at which
//! off-diagonal entries are strictly positive, so zero-weight entries never
//! count as edges.

use std::collections::BTreeMap;

use crate::domain::{FlowNetwork, RegionInfo, Zip3};
use crate::error::{Error, Result};

pub const EARTH_RADIUS_KM: f64 = 6371.0088;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DistanceWeighting {
    #[default]
    Flow,
    Unweighted,
}

impl DistanceWeighting {
    pub fn as_str(self) -> &'static str {
        match self {
            DistanceWeighting::Flow => "flow",
            DistanceWeighting::Unweighted => "unweighted",
        }
    }
}

impl std::str::FromStr for DistanceWeighting {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "flow" => Ok(DistanceWeighting::Flow),
            "unweighted" => Ok(DistanceWeighting::Unweighted),
            _ => Err(Error::parse("distance_weighting", format!("unknown value {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkMetrics {
    pub sigma: f64,
    pub cross_flow: f64,
    pub density: f64,
    pub heterogeneity: f64,
    pub avg_distance_km: Option<f64>,
    pub edge_count: usize,
    pub node_count: usize,
}

/// Returns `(σ, φ)`: the share of all incoming visits that cross regions,
/// and the cross-region mass itself.
pub fn cross_region_ratio(net: &FlowNetwork) -> Result<(f64, f64)> {
    let total: f64 = net.incoming_totals().iter().sum();
    if total <= 0.0 {
        return Err(Error::UndefinedMetric("cross-region ratio with zero incoming visits".into()));
    }
    let phi = net.cross_flow();
    Ok((phi / total, phi))
}

pub fn density(net: &FlowNetwork) -> Result<f64> {
    let n = net.node_count();
    if n < 2 {
        return Err(Error::UndefinedMetric(format!("density needs at least 2 nodes, got {n}")));
    }
    Ok(net.edge_count() as f64 / (n * (n - 1)) as f64)
}

/// Unweighted off-diagonal (in, out) degree of every node.
pub fn degrees(net: &FlowNetwork) -> (Vec<usize>, Vec<usize>) {
    let n = net.node_count();
    let mut indeg = vec![0; n];
    let mut outdeg = vec![0; n];
    for (i, j, _) in net.edges() {
        outdeg[i] += 1;
        indeg[j] += 1;
    }
    (indeg, outdeg)
}

fn population_std(values: &[usize]) -> f64 {
    let n = values.len() as f64;
    let mean = values.iter().sum::<usize>() as f64 / n;
    let var = values.iter().map(|&v| (v as f64 - mean).powi(2)).sum::<f64>() / n;
    var.sqrt()
}

/// `σ_in · σ_out / ⟨s⟩` with population standard deviations of unweighted
/// degrees and `⟨s⟩ = E / N`. Zero for an edgeless network.
pub fn heterogeneity(net: &FlowNetwork) -> f64 {
    let (indeg, outdeg) = degrees(net);
    let edges: usize = outdeg.iter().sum();
    if edges == 0 {
        return 0.0;
    }
    let mean_degree = edges as f64 / net.node_count() as f64;
    population_std(&indeg) * population_std(&outdeg) / mean_degree
}

/// Great-circle distance in km between `(lat, lon)` points in degrees.
pub fn haversine(a: (f64, f64), b: (f64, f64)) -> f64 {
    let (lat1, lon1) = (a.0.to_radians(), a.1.to_radians());
    let (lat2, lon2) = (b.0.to_radians(), b.1.to_radians());
    let h = ((lat2 - lat1) / 2.0).sin().powi(2) + lat1.cos() * lat2.cos() * ((lon2 - lon1) / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_KM * h.sqrt().min(1.0).asin()
}

/// Mean great-circle length of cross-region flow; `None` when there is none.
pub fn average_flow_distance(
    net: &FlowNetwork,
    regions: &BTreeMap<Zip3, RegionInfo>,
    weighting: DistanceWeighting,
) -> Result<Option<f64>> {
    let nodes = net.nodes();
    let mut missing: Vec<String> = net
        .edges()
        .flat_map(|(i, j, _)| [i, j])
        .filter(|&k| !regions.contains_key(&nodes[k]))
        .map(|k| nodes[k].to_string())
        .collect();
    missing.sort();
    missing.dedup();
    if !missing.is_empty() {
        return Err(Error::MissingCoordinates(missing));
    }
    let mut num = 0.0;
    let mut den = 0.0;
    for (i, j, w) in net.edges() {
        let (a, b) = (&regions[&nodes[i]], &regions[&nodes[j]]);
        let d = haversine((a.lat, a.lon), (b.lat, b.lon));
        let w = match weighting {
            DistanceWeighting::Flow => w,
            DistanceWeighting::Unweighted => 1.0,
        };
        num += w * d;
        den += w;
    }
    Ok((den > 0.0).then(|| num / den))
}

/// All measures at once. Distance is skipped when no region table is given;
/// σ and density are NaN where undefined.
pub fn compute_metrics(
    net: &FlowNetwork,
    regions: Option<&BTreeMap<Zip3, RegionInfo>>,
    weighting: DistanceWeighting,
) -> Result<NetworkMetrics> {
    let (sigma, cross_flow) = cross_region_ratio(net).unwrap_or((f64::NAN, net.cross_flow()));
    let avg_distance_km = match regions {
        Some(r) => average_flow_distance(net, r, weighting)?,
        None => None,
    };
    Ok(NetworkMetrics {
        sigma,
        cross_flow,
        density: density(net).unwrap_or(f64::NAN),
        heterogeneity: heterogeneity(net),
        avg_distance_km,
        edge_count: net.edge_count(),
        node_count: net.node_count(),
    })
}
