//! Temporal flow-network construction from visit records.
//!
//! A patient seen in region `i` during month `t` and in region `j` during any
//! of the months `t+1 ..= t+v_max` contributes exactly one unit to
//! `w_ij(t)`, however many of those later months qualify. Same-month visits
//! to several regions do not count as a transit. The diagonal uses the same
//! rule (a revisit to `i` within the window).

use std::collections::{BTreeMap, BTreeSet, HashMap};

use rayon::prelude::*;

use crate::domain::{CohortFilter, FlowNetwork, MonthIndex, VisitRecord, Zip3};
use crate::error::{Error, Result};

pub const DEFAULT_V_MAX: u32 = 3;

/// Sparse patient × region visit counts `m_kj` for one month.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VisitMatrix {
    pub month: MonthIndex,
    entries: BTreeMap<(String, Zip3), u32>,
}

impl VisitMatrix {
    pub fn new(month: MonthIndex) -> Self {
        VisitMatrix {
            month,
            entries: BTreeMap::new(),
        }
    }

    pub fn add_visit(&mut self, patient: &str, region: &Zip3) {
        *self
            .entries
            .entry((patient.to_string(), region.clone()))
            .or_insert(0) += 1;
    }

    pub fn get(&self, patient: &str, region: &Zip3) -> u32 {
        self.entries
            .get(&(patient.to_string(), region.clone()))
            .copied()
            .unwrap_or(0)
    }

    pub fn entries(&self) -> impl Iterator<Item = (&str, &Zip3, u32)> {
        self.entries.iter().map(|((p, z), &c)| (p.as_str(), z, c))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn regions(&self) -> BTreeSet<&Zip3> {
        self.entries.keys().map(|(_, z)| z).collect()
    }

    pub fn patients(&self) -> BTreeSet<&str> {
        self.entries.keys().map(|(p, _)| p.as_str()).collect()
    }
}

pub fn build_visit_matrices(records: &[VisitRecord], filter: &CohortFilter) -> BTreeMap<MonthIndex, VisitMatrix> {
    let mut out: BTreeMap<MonthIndex, VisitMatrix> = BTreeMap::new();
    for rec in records.iter().filter(|r| filter.matches(r)) {
        out.entry(rec.month)
            .or_insert_with(|| VisitMatrix::new(rec.month))
            .add_visit(&rec.patient_id, &rec.region.zip3);
    }
    out
}

/// Sorted union of every region appearing in any matrix.
pub fn node_set(matrices: &BTreeMap<MonthIndex, VisitMatrix>) -> Vec<Zip3> {
    let set: BTreeSet<&Zip3> = matrices.values().flat_map(|m| m.regions()).collect();
    set.into_iter().cloned().collect()
}

fn check_v_max(v_max: u32) -> Result<()> {
    if v_max < 1 {
        return Err(Error::Config("transit window v_max must be at least 1".into()));
    }
    Ok(())
}

/// Per-month index `patient -> regions visited`, as node indices.
fn presence<'a>(
    matrix: Option<&'a VisitMatrix>,
    lookup: &HashMap<&Zip3, usize>,
) -> Result<HashMap<&'a str, BTreeSet<usize>>> {
    let mut out: HashMap<&str, BTreeSet<usize>> = HashMap::new();
    if let Some(m) = matrix {
        for (patient, zip, _) in m.entries() {
            let idx = *lookup
                .get(zip)
                .ok_or_else(|| Error::Structural(format!("region {zip} is not a network node")))?;
            out.entry(patient).or_default().insert(idx);
        }
    }
    Ok(out)
}

/// Builds `W(t)` over an explicit node list.
pub fn build_flow_network_on(
    matrices: &BTreeMap<MonthIndex, VisitMatrix>,
    t: MonthIndex,
    v_max: u32,
    nodes: &[Zip3],
) -> Result<FlowNetwork> {
    check_v_max(v_max)?;
    let n = nodes.len();
    let lookup: HashMap<&Zip3, usize> = nodes.iter().enumerate().map(|(i, z)| (z, i)).collect();
    let mut weights = vec![0.0; n * n];
    let mut incoming = vec![0.0; n];

    let now = matrices.get(&t);
    if let Some(m) = now {
        for (_, zip, count) in m.entries() {
            let idx = *lookup
                .get(zip)
                .ok_or_else(|| Error::Structural(format!("region {zip} is not a network node")))?;
            incoming[idx] += f64::from(count);
        }
    }
    let current = presence(now, &lookup)?;
    let later: Vec<_> = (1..=i64::from(v_max))
        .map(|v| presence(matrices.get(&t.add_months(v)), &lookup))
        .collect::<Result<_>>()?;

    for (patient, origins) in &current {
        let destinations: BTreeSet<usize> = later
            .iter()
            .filter_map(|month| month.get(patient))
            .flatten()
            .copied()
            .collect();
        for &i in origins {
            for &j in &destinations {
                weights[i * n + j] += 1.0;
            }
        }
    }
    FlowNetwork::new(t.to_string(), nodes.to_vec(), weights, incoming)
}

/// Builds `W(t)` with nodes taken from every region present in `matrices`.
pub fn build_flow_network(
    matrices: &BTreeMap<MonthIndex, VisitMatrix>,
    t: MonthIndex,
    v_max: u32,
) -> Result<FlowNetwork> {
    let nodes = node_set(matrices);
    if nodes.is_empty() {
        return Err(Error::Validation("no visits to build a network from".into()));
    }
    build_flow_network_on(matrices, t, v_max, &nodes)
}

/// One network per month present in `matrices`, over a shared node list.
pub fn build_flow_series(
    matrices: &BTreeMap<MonthIndex, VisitMatrix>,
    v_max: u32,
    nodes: &[Zip3],
) -> Result<BTreeMap<MonthIndex, FlowNetwork>> {
    check_v_max(v_max)?;
    let months: Vec<MonthIndex> = matrices.keys().copied().collect();
    let built: Vec<FlowNetwork> = months
        .par_iter()
        .map(|&t| build_flow_network_on(matrices, t, v_max, nodes))
        .collect::<Result<_>>()?;
    Ok(months.into_iter().zip(built).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AggregationScheme {
    Seasonal,
    Yearly,
}

const SEASONS: [&str; 4] = ["DJF", "MAM", "JJA", "SON"];

/// Season bucket of a month; December belongs to the following year's winter.
pub fn season_of(month: MonthIndex) -> (i32, usize) {
    match month.month() {
        12 => (month.year() + 1, 0),
        1 | 2 => (month.year(), 0),
        3..=5 => (month.year(), 1),
        6..=8 => (month.year(), 2),
        _ => (month.year(), 3),
    }
}

fn sum_into(acc: &mut FlowNetwork, net: &FlowNetwork) -> Result<()> {
    if !acc.same_nodes(net) {
        return Err(Error::Structural(format!(
            "network {} does not share the node list of {}",
            net.period(),
            acc.period()
        )));
    }
    let weights: Vec<f64> = acc.weights().iter().zip(net.weights()).map(|(a, b)| a + b).collect();
    let incoming: Vec<f64> = acc
        .incoming_totals()
        .iter()
        .zip(net.incoming_totals())
        .map(|(a, b)| a + b)
        .collect();
    *acc = FlowNetwork::new(acc.period().to_string(), acc.nodes().to_vec(), weights, incoming)?;
    Ok(())
}

/// Element-wise sums of weights and incoming totals per seasonal or yearly
/// bucket, in chronological bucket order.
pub fn aggregate_flows(
    series: &BTreeMap<MonthIndex, FlowNetwork>,
    scheme: AggregationScheme,
) -> Result<Vec<FlowNetwork>> {
    let mut buckets: BTreeMap<(i32, usize), FlowNetwork> = BTreeMap::new();
    for (&month, net) in series {
        let key = match scheme {
            AggregationScheme::Seasonal => season_of(month),
            AggregationScheme::Yearly => (month.year(), 0),
        };
        let label = match scheme {
            AggregationScheme::Seasonal => format!("{}-{}", SEASONS[key.1], key.0),
            AggregationScheme::Yearly => key.0.to_string(),
        };
        match buckets.get_mut(&key) {
            Some(acc) => sum_into(acc, net)?,
            None => {
                buckets.insert(key, net.clone().with_period(label));
            }
        }
    }
    Ok(buckets.into_values().collect())
}

/// Mean monthly network over a set of months (a phase snapshot).
pub fn average_flows<'a>(nets: impl IntoIterator<Item = &'a FlowNetwork>, label: &str) -> Result<FlowNetwork> {
    let mut iter = nets.into_iter();
    let first = iter
        .next()
        .ok_or_else(|| Error::Validation(format!("no networks to average for {label}")))?;
    let mut acc = first.clone().with_period(label);
    let mut count = 1.0;
    for net in iter {
        sum_into(&mut acc, net)?;
        count += 1.0;
    }
    let weights = acc.weights().iter().map(|w| w / count).collect();
    let incoming = acc.incoming_totals().iter().map(|w| w / count).collect();
    FlowNetwork::new(label, acc.nodes().to_vec(), weights, incoming)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{AgeGroup, Race, RegionId};

    fn visit(patient: &str, month: &str, zip: &str) -> VisitRecord {
        visit_as(patient, month, zip, Race::White)
    }

    fn visit_as(patient: &str, month: &str, zip: &str, race: Race) -> VisitRecord {
        VisitRecord::new(
            patient,
            month.parse().unwrap(),
            RegionId::new(zip, "NY").unwrap(),
            AgeGroup::Middle,
            race,
            &[],
        )
        .unwrap()
    }

    fn m(s: &str) -> MonthIndex {
        s.parse().unwrap()
    }

    fn z(s: &str) -> Zip3 {
        Zip3::new(s).unwrap()
    }

    #[test]
    fn counts_repeat_visits() {
        let recs = vec![visit("a", "2020-01", "100"), visit("a", "2020-01", "100")];
        let mats = build_visit_matrices(&recs, &CohortFilter::all());
        assert_eq!(mats.len(), 1);
        assert_eq!(mats[&m("2020-01")].get("a", &z("100")), 2);
    }

    #[test]
    fn months_keyed_separately() {
        let recs = vec![visit("a", "2020-01", "100"), visit("b", "2020-02", "101")];
        let mats = build_visit_matrices(&recs, &CohortFilter::all());
        assert_eq!(mats.keys().copied().collect::<Vec<_>>(), vec![m("2020-01"), m("2020-02")]);
        assert!(mats.values().all(|mat| mat.len() == 1));
    }

    #[test]
    fn race_filter_counts_only_matching_rows() {
        let recs = vec![
            visit_as("a", "2020-01", "100", Race::Asian),
            visit_as("a", "2020-01", "100", Race::Asian),
            visit_as("b", "2020-01", "100", Race::White),
            visit_as("c", "2020-01", "101", Race::Asian),
            visit_as("d", "2020-02", "101", Race::Black),
        ];
        let filter = CohortFilter::all().with_races([Race::Asian]);
        let mats = build_visit_matrices(&recs, &filter);
        // Hand count: a→100 twice, c→101 once; b and d excluded.
        assert_eq!(mats.len(), 1);
        let jan = &mats[&m("2020-01")];
        assert_eq!(jan.get("a", &z("100")), 2);
        assert_eq!(jan.get("c", &z("101")), 1);
        assert_eq!(jan.get("b", &z("100")), 0);
        assert_eq!(jan.len(), 2);
    }

    #[test]
    fn single_transit() {
        let recs = vec![visit("a", "2020-01", "100"), visit("a", "2020-02", "101")];
        let mats = build_visit_matrices(&recs, &CohortFilter::all());
        let net = build_flow_network(&mats, m("2020-01"), 3).unwrap();
        assert_eq!(net.weight(0, 1), 1.0);
        assert_eq!(net.weight(1, 0), 0.0);
        assert_eq!(net.incoming_totals(), &[1.0, 0.0]);
    }

    #[test]
    fn transit_counted_once_across_window() {
        let recs = vec![
            visit("a", "2020-01", "100"),
            visit("a", "2020-02", "101"),
            visit("a", "2020-03", "101"),
        ];
        let mats = build_visit_matrices(&recs, &CohortFilter::all());
        let net = build_flow_network(&mats, m("2020-01"), 3).unwrap();
        assert_eq!(net.weight(0, 1), 1.0);
    }

    #[test]
    fn lone_visit_has_no_cross_flow() {
        let recs = vec![visit("a", "2020-01", "100"), visit("b", "2020-01", "101")];
        let mats = build_visit_matrices(&recs, &CohortFilter::all());
        let net = build_flow_network(&mats, m("2020-01"), 3).unwrap();
        assert_eq!(net.cross_flow(), 0.0);
    }

    #[test]
    fn same_month_multi_region_is_not_a_transit() {
        let recs = vec![visit("a", "2020-01", "100"), visit("a", "2020-01", "101")];
        let mats = build_visit_matrices(&recs, &CohortFilter::all());
        let net = build_flow_network(&mats, m("2020-01"), 3).unwrap();
        assert_eq!(net.cross_flow(), 0.0);
        assert_eq!(net.incoming_totals(), &[1.0, 1.0]);
    }

    #[test]
    fn window_bounds_respected() {
        let recs = vec![visit("a", "2020-01", "100"), visit("a", "2020-05", "101")];
        let mats = build_visit_matrices(&recs, &CohortFilter::all());
        assert_eq!(build_flow_network(&mats, m("2020-01"), 3).unwrap().cross_flow(), 0.0);
        assert_eq!(build_flow_network(&mats, m("2020-01"), 4).unwrap().cross_flow(), 1.0);
    }

    #[test]
    fn revisit_goes_on_diagonal() {
        let recs = vec![visit("a", "2020-01", "100"), visit("a", "2020-03", "100")];
        let mats = build_visit_matrices(&recs, &CohortFilter::all());
        let net = build_flow_network(&mats, m("2020-01"), 3).unwrap();
        assert_eq!(net.weight(0, 0), 1.0);
    }

    #[test]
    fn zero_window_is_config_error() {
        let recs = vec![visit("a", "2020-01", "100")];
        let mats = build_visit_matrices(&recs, &CohortFilter::all());
        assert!(matches!(build_flow_network(&mats, m("2020-01"), 0), Err(Error::Config(_))));
    }

    fn ones(label: MonthIndex) -> FlowNetwork {
        FlowNetwork::new(label.to_string(), vec![z("100"), z("101")], vec![1.0; 4], vec![1.0; 2]).unwrap()
    }

    #[test]
    fn yearly_sum_of_twelve() {
        let series: BTreeMap<_, _> = MonthIndex::range_inclusive(m("2020-01"), m("2020-12"))
            .map(|t| (t, ones(t)))
            .collect();
        let out = aggregate_flows(&series, AggregationScheme::Yearly).unwrap();
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].period(), "2020");
        assert!(out[0].weights().iter().all(|&w| w == 12.0));
        assert!(out[0].incoming_totals().iter().all(|&w| w == 12.0));
    }

    #[test]
    fn winter_bucket_takes_previous_december() {
        let series: BTreeMap<_, _> = ["2019-12", "2020-01", "2020-02", "2020-03"]
            .into_iter()
            .map(|s| (m(s), ones(m(s))))
            .collect();
        let out = aggregate_flows(&series, AggregationScheme::Seasonal).unwrap();
        let labels: Vec<_> = out.iter().map(|n| n.period().to_string()).collect();
        assert_eq!(labels, vec!["DJF-2020", "MAM-2020"]);
        assert_eq!(out[0].weight(0, 1), 3.0);
        assert_eq!(out[1].weight(0, 1), 1.0);
    }

    #[test]
    fn mismatched_nodes_rejected() {
        let mut series = BTreeMap::new();
        series.insert(m("2020-01"), ones(m("2020-01")));
        series.insert(
            m("2020-02"),
            FlowNetwork::new("x", vec![z("100"), z("102")], vec![1.0; 4], vec![1.0; 2]).unwrap(),
        );
        assert!(matches!(
            aggregate_flows(&series, AggregationScheme::Yearly),
            Err(Error::Structural(_))
        ));
    }

    #[test]
    fn average_is_mean_of_members() {
        let a = ones(m("2020-01"));
        let b = a.map_off_diagonal(|_, _, w| w * 3.0).unwrap();
        let avg = average_flows([&a, &b], "pre").unwrap();
        assert_eq!(avg.weight(0, 1), 2.0);
        assert_eq!(avg.weight(0, 0), 1.0);
        assert_eq!(avg.period(), "pre");
    }
}
