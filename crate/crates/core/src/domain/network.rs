use std::collections::{BTreeSet, HashMap};

use crate::domain::Zip3;
use crate::error::{Error, Result};

/// Weighted directed patient-flow network for one period.
///
/// `weights` is an N×N row-major matrix: entry `(i, j)` is the number of
/// patients moving from node `i` to node `j`; the diagonal holds
/// within-region flow. `incoming` is the total number of visits landing in
/// each node, which is independent of the transit mass.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowNetwork {
    period: String,
    nodes: Vec<Zip3>,
    weights: Vec<f64>,
    incoming: Vec<f64>,
}

fn check_value(what: &str, v: f64) -> Result<f64> {
    if !v.is_finite() || v < 0.0 {
        return Err(Error::Validation(format!("{what} must be finite and non-negative, got {v}")));
    }
    // Normalizes -0.0 so that serialized files stay canonical.
    Ok(v + 0.0)
}

impl FlowNetwork {
    pub fn new(period: impl Into<String>, nodes: Vec<Zip3>, weights: Vec<f64>, incoming: Vec<f64>) -> Result<Self> {
        let n = nodes.len();
        if n == 0 {
            return Err(Error::Validation("network needs at least one node".into()));
        }
        let distinct: BTreeSet<&Zip3> = nodes.iter().collect();
        if distinct.len() != n {
            return Err(Error::Validation("duplicate node in network".into()));
        }
        if weights.len() != n * n {
            return Err(Error::Structural(format!(
                "weight matrix has {} entries, expected {}",
                weights.len(),
                n * n
            )));
        }
        if incoming.len() != n {
            return Err(Error::Structural(format!(
                "{} incoming totals for {n} nodes",
                incoming.len()
            )));
        }
        let weights = weights
            .into_iter()
            .map(|w| check_value("weight", w))
            .collect::<Result<Vec<_>>>()?;
        let incoming = incoming
            .into_iter()
            .map(|w| check_value("incoming total", w))
            .collect::<Result<Vec<_>>>()?;
        Ok(FlowNetwork {
            period: period.into(),
            nodes,
            weights,
            incoming,
        })
    }

    /// Network with no flow at all.
    pub fn empty(period: impl Into<String>, nodes: Vec<Zip3>) -> Result<Self> {
        let n = nodes.len();
        Self::new(period, nodes, vec![0.0; n * n], vec![0.0; n])
    }

    pub fn period(&self) -> &str {
        &self.period
    }

    pub fn with_period(mut self, period: impl Into<String>) -> Self {
        self.period = period.into();
        self
    }

    pub fn nodes(&self) -> &[Zip3] {
        &self.nodes
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn index_of(&self, zip: &Zip3) -> Option<usize> {
        self.nodes.iter().position(|z| z == zip)
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.weights[i * self.nodes.len() + j]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn incoming_totals(&self) -> &[f64] {
        &self.incoming
    }

    pub fn incoming(&self, i: usize) -> f64 {
        self.incoming[i]
    }

    /// Positive off-diagonal entries as `(src, dst, weight)` in row-major order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        let n = self.nodes.len();
        self.weights.iter().enumerate().filter_map(move |(k, &w)| {
            let (i, j) = (k / n, k % n);
            (i != j && w > 0.0).then_some((i, j, w))
        })
    }

    pub fn edge_count(&self) -> usize {
        self.edges().count()
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        i != j && self.weight(i, j) > 0.0
    }

    /// Total cross-region flow (off-diagonal mass).
    pub fn cross_flow(&self) -> f64 {
        self.edges().map(|(_, _, w)| w).sum()
    }

    /// Returns a copy with the matrix entry replaced.
    pub fn with_weight(&self, i: usize, j: usize, w: f64) -> Result<Self> {
        let mut out = self.clone();
        let n = self.nodes.len();
        out.weights[i * n + j] = check_value("weight", w)?;
        Ok(out)
    }

    /// Returns a copy with every off-diagonal weight mapped through `f`.
    pub fn map_off_diagonal(&self, mut f: impl FnMut(usize, usize, f64) -> f64) -> Result<Self> {
        let n = self.nodes.len();
        let mut out = self.clone();
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    let k = i * n + j;
                    out.weights[k] = check_value("weight", f(i, j, self.weights[k]))?;
                }
            }
        }
        Ok(out)
    }

    /// Reorders nodes (and the matrix) by `order`, a permutation of indices.
    pub fn permuted(&self, order: &[usize]) -> Result<Self> {
        let n = self.nodes.len();
        let mut seen = vec![false; n];
        if order.len() != n || order.iter().any(|&k| k >= n || std::mem::replace(&mut seen[k], true)) {
            return Err(Error::Structural("not a permutation of the node indices".into()));
        }
        let nodes = order.iter().map(|&k| self.nodes[k].clone()).collect();
        let incoming = order.iter().map(|&k| self.incoming[k]).collect();
        let mut weights = vec![0.0; n * n];
        for (a, &i) in order.iter().enumerate() {
            for (b, &j) in order.iter().enumerate() {
                weights[a * n + b] = self.weight(i, j);
            }
        }
        Self::new(self.period.clone(), nodes, weights, incoming)
    }

    pub fn node_lookup(&self) -> HashMap<&Zip3, usize> {
        self.nodes.iter().enumerate().map(|(i, z)| (z, i)).collect()
    }

    pub fn same_nodes(&self, other: &FlowNetwork) -> bool {
        self.nodes == other.nodes
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn zips(n: usize) -> Vec<Zip3> {
        (0..n).map(|i| Zip3::new(&format!("{:03}", 100 + i)).unwrap()).collect()
    }

    #[test]
    fn rejects_bad_shapes_and_values() {
        assert!(FlowNetwork::new("x", vec![], vec![], vec![]).is_err());
        assert!(FlowNetwork::new("x", zips(2), vec![0.0; 3], vec![0.0; 2]).is_err());
        assert!(FlowNetwork::new("x", zips(2), vec![0.0, -1.0, 0.0, 0.0], vec![0.0; 2]).is_err());
        assert!(FlowNetwork::new("x", zips(2), vec![0.0; 4], vec![f64::NAN, 0.0]).is_err());
        let dup = vec![zips(1)[0].clone(), zips(1)[0].clone()];
        assert!(FlowNetwork::new("x", dup, vec![0.0; 4], vec![0.0; 2]).is_err());
    }

    #[test]
    fn edges_skip_diagonal_and_zeros() {
        let net = FlowNetwork::new("x", zips(2), vec![3.0, 0.0, 2.0, 1.0], vec![5.0, 5.0]).unwrap();
        let edges: Vec<_> = net.edges().collect();
        assert_eq!(edges, vec![(1, 0, 2.0)]);
        assert_eq!(net.cross_flow(), 2.0);
    }

    #[test]
    fn permutation_moves_rows_and_columns() {
        let net = FlowNetwork::new("x", zips(2), vec![1.0, 2.0, 3.0, 4.0], vec![5.0, 6.0]).unwrap();
        let p = net.permuted(&[1, 0]).unwrap();
        assert_eq!(p.weights(), &[4.0, 3.0, 2.0, 1.0]);
        assert_eq!(p.incoming_totals(), &[6.0, 5.0]);
        assert!(net.permuted(&[0, 0]).is_err());
    }
}
