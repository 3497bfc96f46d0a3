//! One-characteristic-at-a-time network perturbations.
//!
//! * [`perturb_sigma`] scales off-diagonal weights; the edge pattern is kept.
//! * [`perturb_density`] adds edges, then rescales to the original σ.
//! * [`perturb_heterogeneity`] rewires edge endpoints toward hubs; the edge
//!   count is kept and σ is restored.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::rng::{derived_rng, DENSITY_STREAM, HETEROGENEITY_STREAM};
use crate::domain::FlowNetwork;
use crate::error::{Error, Result};
use crate::metrics::cross_region_ratio;

fn sigma_and_flow(net: &FlowNetwork) -> Result<(f64, f64)> {
    let (sigma, phi) = cross_region_ratio(net).map_err(|e| Error::Perturbation(e.to_string()))?;
    if phi <= 0.0 {
        return Err(Error::Perturbation("network has no cross-region flow to scale".into()));
    }
    Ok((sigma, phi))
}

/// Scales every off-diagonal weight so that σ equals `target`.
pub fn perturb_sigma(net: &FlowNetwork, target: f64) -> Result<FlowNetwork> {
    if !(target > 0.0 && target < 1.0) {
        return Err(Error::Perturbation(format!("target sigma {target} outside (0, 1)")));
    }
    let (sigma, _) = sigma_and_flow(net)?;
    if sigma == target {
        return Ok(net.clone());
    }
    let factor = target / sigma;
    let out = net.map_off_diagonal(|_, _, w| w * factor)?;
    if out.edge_count() != net.edge_count() {
        return Err(Error::Perturbation("scaling underflowed an edge to zero".into()));
    }
    Ok(out)
}

/// Rescales off-diagonal mass so that σ returns to `sigma`.
fn restore_sigma(net: FlowNetwork, sigma: f64) -> Result<FlowNetwork> {
    let (now, _) = sigma_and_flow(&net)?;
    if now == sigma {
        return Ok(net);
    }
    let factor = sigma / now;
    net.map_off_diagonal(|_, _, w| w * factor)
}

fn round_half_up(x: f64) -> usize {
    (x + 0.5).floor().max(0.0) as usize
}

/// Number of directed off-diagonal edges that density `d` corresponds to.
pub fn edges_for_density(n: usize, d: f64) -> usize {
    round_half_up(d * (n * (n - 1)) as f64)
}

/// Adds randomly chosen absent edges until the edge count matches
/// `target_density`, giving each the mean existing cross-region weight, then
/// restores σ. For a fixed `seed` the added edges of a lower target are a
/// subset of those of a higher one.
pub fn perturb_density(net: &FlowNetwork, target_density: f64, seed: u64) -> Result<FlowNetwork> {
    let n = net.node_count();
    if n < 2 {
        return Err(Error::Perturbation("density needs at least two nodes".into()));
    }
    if !(0.0..=1.0).contains(&target_density) {
        return Err(Error::Perturbation(format!("target density {target_density} outside [0, 1]")));
    }
    let (sigma, phi) = sigma_and_flow(net)?;
    let current = net.edge_count();
    let wanted = edges_for_density(n, target_density);
    if wanted < current {
        return Err(Error::Perturbation(format!(
            "target density {target_density} is below the current {current} edges"
        )));
    }
    if wanted == current {
        return Ok(net.clone());
    }
    let mut absent: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .filter(|&(i, j)| i != j && !net.has_edge(i, j))
        .collect();
    let mut rng = derived_rng(seed, &[DENSITY_STREAM]);
    absent.shuffle(&mut rng);
    let fill = phi / current as f64;
    let mut grown = net.clone();
    for &(i, j) in &absent[..wanted - current] {
        grown = grown.with_weight(i, j, fill)?;
    }
    restore_sigma(grown, sigma)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Rewired {
    pub net: FlowNetwork,
    pub accepted: usize,
    /// No valid move was found within N² consecutive attempts.
    pub saturated: bool,
}

/// Incremental hub-preferential rewiring state.
///
/// A move picks a uniformly random edge `u→v` and either re-targets it to
/// `u→h` with `h` drawn proportionally to in-degree, or re-sources it to
/// `h→v` with `h` drawn proportionally to out-degree. Moves creating
/// self-loops or duplicates, or lowering the variance of the degree being
/// changed, are rejected. Edge weights travel with the edge.
pub struct Rewirer {
    base: FlowNetwork,
    sigma: f64,
    n: usize,
    weights: Vec<f64>,
    edges: Vec<(usize, usize)>,
    indeg: Vec<usize>,
    outdeg: Vec<usize>,
    rng: ChaCha8Rng,
    accepted: usize,
    saturated: bool,
}

impl Rewirer {
    pub fn new(net: &FlowNetwork, seed: u64) -> Result<Self> {
        let (sigma, _) = sigma_and_flow(net)?;
        let n = net.node_count();
        let edges: Vec<(usize, usize)> = net.edges().map(|(i, j, _)| (i, j)).collect();
        let mut indeg = vec![0; n];
        let mut outdeg = vec![0; n];
        for &(i, j) in &edges {
            outdeg[i] += 1;
            indeg[j] += 1;
        }
        Ok(Rewirer {
            base: net.clone(),
            sigma,
            n,
            weights: net.weights().to_vec(),
            edges,
            indeg,
            outdeg,
            rng: derived_rng(seed, &[HETEROGENEITY_STREAM]),
            accepted: 0,
            saturated: false,
        })
    }

    pub fn accepted(&self) -> usize {
        self.accepted
    }

    pub fn saturated(&self) -> bool {
        self.saturated
    }

    pub fn in_degrees(&self) -> &[usize] {
        &self.indeg
    }

    /// Heterogeneity of the current pattern, from the degree vectors.
    pub fn heterogeneity(&self) -> f64 {
        let e = self.edges.len() as f64;
        let n = self.n as f64;
        let mean = e / n;
        let sd = |d: &[usize]| (d.iter().map(|&x| (x as f64 - mean).powi(2)).sum::<f64>() / n).sqrt();
        sd(&self.indeg) * sd(&self.outdeg) / mean
    }

    fn sample_by_degree(&mut self, degrees: &[usize]) -> usize {
        let total: usize = degrees.iter().sum();
        let mut pick = self.rng.random_range(0..total);
        for (k, &d) in degrees.iter().enumerate() {
            if pick < d {
                return k;
            }
            pick -= d;
        }
        unreachable!("degree total mismatch")
    }

    fn try_move(&mut self) -> bool {
        let n = self.n;
        let slot = self.rng.random_range(0..self.edges.len());
        let (u, v) = self.edges[slot];
        let retarget = self.rng.random_bool(0.5);
        if retarget {
            let degrees = self.indeg.clone();
            let h = self.sample_by_degree(&degrees);
            if h == u || h == v || self.weights[u * n + h] > 0.0 || self.indeg[h] + 1 < self.indeg[v] {
                return false;
            }
            self.weights[u * n + h] = self.weights[u * n + v];
            self.weights[u * n + v] = 0.0;
            self.indeg[v] -= 1;
            self.indeg[h] += 1;
            self.edges[slot] = (u, h);
        } else {
            let degrees = self.outdeg.clone();
            let h = self.sample_by_degree(&degrees);
            if h == u || h == v || self.weights[h * n + v] > 0.0 || self.outdeg[h] + 1 < self.outdeg[u] {
                return false;
            }
            self.weights[h * n + v] = self.weights[u * n + v];
            self.weights[u * n + v] = 0.0;
            self.outdeg[u] -= 1;
            self.outdeg[h] += 1;
            self.edges[slot] = (h, v);
        }
        true
    }

    /// Performs one accepted move; returns false once saturated.
    pub fn step(&mut self) -> bool {
        if self.saturated {
            return false;
        }
        let limit = self.n * self.n;
        for _ in 0..limit {
            if self.try_move() {
                self.accepted += 1;
                return true;
            }
        }
        self.saturated = true;
        false
    }

    /// Current network with σ restored to the starting value.
    pub fn network(&self) -> Result<FlowNetwork> {
        let net = FlowNetwork::new(
            self.base.period().to_string(),
            self.base.nodes().to_vec(),
            self.weights.clone(),
            self.base.incoming_totals().to_vec(),
        )?;
        restore_sigma(net, self.sigma)
    }
}

/// Performs `steps` accepted hub-preferential rewiring moves.
pub fn perturb_heterogeneity(net: &FlowNetwork, steps: usize, seed: u64) -> Result<Rewired> {
    if net.edge_count() == 0 {
        return Err(Error::Perturbation("rewiring needs at least one edge".into()));
    }
    if steps == 0 {
        return Ok(Rewired {
            net: net.clone(),
            accepted: 0,
            saturated: false,
        });
    }
    let mut rewirer = Rewirer::new(net, seed)?;
    while rewirer.accepted() < steps && rewirer.step() {}
    Ok(Rewired {
        net: rewirer.network()?,
        accepted: rewirer.accepted(),
        saturated: rewirer.saturated(),
    })
}
