use std::collections::BTreeSet;

use absorbnet::absorb::{absorptivity_of_residuals, evaluate};
use absorbnet::builder::{build_flow_network_on, build_flow_series, build_visit_matrices, node_set};
use absorbnet::domain::{AgeBands, AgeGroup, CohortFilter, FlowNetwork, MonthIndex, StressProfile, VisitRecord, Zip3};
use absorbnet::io::{load_network, load_visits, write_network, write_visits};
use absorbnet::scenario::{run_identical_stress, ScenarioConfig};
use absorbnet::synth::{generate_corpus, SynthParams};
use proptest::prelude::*;

fn zips(n: usize) -> Vec<Zip3> {
    (0..n).map(|i| Zip3::new(&format!("{:03}", 300 + i)).unwrap()).collect()
}

fn small_corpus(seed: u64) -> Vec<VisitRecord> {
    generate_corpus(&SynthParams {
        n_patients: 200,
        n_regions: 6,
        n_months: 12,
        seed,
        ..SynthParams::default()
    })
    .unwrap()
    .records
}

fn arb_network() -> impl Strategy<Value = FlowNetwork> {
    (1usize..8).prop_flat_map(|n| {
        (
            prop::collection::vec(prop_oneof![Just(0.0), 0.0..1e6f64, 1e-300..1e-290f64], n * n),
            prop::collection::vec(0.0..1e7f64, n),
        )
            .prop_map(move |(w, inc)| FlowNetwork::new("2020-01", zips(n), w, inc).unwrap())
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn network_file_round_trips(net in arb_network()) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("2020-01.csv");
        write_network(&path, &net).unwrap();
        let back = load_network(&path).unwrap();
        prop_assert_eq!(back, net);
    }

    #[test]
    fn scaling_cross_flow_never_lowers_r(
        net in arb_network(),
        scale in 1.0..5.0f64,
        stress in prop::collection::vec(-50.0..50.0f64, 8),
    ) {
        let n = net.node_count();
        let residuals = &stress[..n];
        let scaled = net.map_off_diagonal(|_, _, w| w * scale).unwrap();
        let before = absorptivity_of_residuals(&net, residuals, true).unwrap();
        let after = absorptivity_of_residuals(&scaled, residuals, true).unwrap();
        if let (Some(a), Some(b)) = (before, after) {
            prop_assert!(b >= a - 1e-12, "{a} -> {b}");
        }
    }
}

#[test]
fn visit_file_round_trip_is_a_fixpoint() {
    let dir = tempfile::tempdir().unwrap();
    let records = small_corpus(11);
    let first = dir.path().join("a.csv");
    let second = dir.path().join("b.csv");
    write_visits(&first, &records).unwrap();
    let loaded = load_visits(&first, &AgeBands::default()).unwrap();
    assert!(loaded.rejected.is_empty());
    assert_eq!(loaded.records.len(), records.len());
    write_visits(&second, &loaded.records).unwrap();
    assert_eq!(std::fs::read(&first).unwrap(), std::fs::read(&second).unwrap());
}

#[test]
fn malformed_visit_rows_are_skipped() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("v.csv");
    std::fs::write(
        &path,
        "patient_id,month,zip3,state,age_group,race,icd10_codes\n\
         P1,2020-01,100,NY,70,white,I10\n\
         P1,2020-13,100,NY,70,white,I10\n\
         P2,2020-02,1000,NY,young,black,\n\
         P3,2020-02,101,NY,child,asian,J18.9;Z23\n",
    )
    .unwrap();
    let load = load_visits(&path, &AgeBands::default()).unwrap();
    assert_eq!(load.records.len(), 2);
    assert_eq!(load.records[0].age_group, AgeGroup::Old);
    assert_eq!(load.records[1].service_codes.len(), 2);
    let lines: Vec<u64> = load.rejected.iter().map(|r| r.line).collect();
    assert_eq!(lines, vec![3, 4]);

    std::fs::write(&path, "patient_id,month,zip3,state,age_group,race,icd10_codes\n").unwrap();
    assert!(load_visits(&path, &AgeBands::default()).unwrap().records.is_empty());

    std::fs::write(&path, "patient_id,month,zip3,state,race,icd10_codes\nP1,2020-01,100,NY,white,\n").unwrap();
    assert!(load_visits(&path, &AgeBands::default()).is_err());
}

#[test]
fn edgeless_network_writes_header_and_totals() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("2021-05.csv");
    let net = FlowNetwork::empty("2021-05", zips(2)).unwrap();
    write_network(&path, &net).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(text, "src_zip3,dst_zip3,weight\n#totals\nzip3,incoming_total\n300,0\n301,0\n");
    assert_eq!(load_network(&path).unwrap(), net);
}

#[test]
fn standard_error_shrinks_with_repetitions() {
    let records = small_corpus(5);
    let matrices = build_visit_matrices(&records, &CohortFilter::all());
    let nodes = node_set(&matrices);
    let t = *matrices.keys().nth(3).unwrap();
    let net = build_flow_network_on(&matrices, t, 3, &nodes).unwrap();
    let se = |reps| {
        let cfg = ScenarioConfig {
            repetitions: reps,
            seed: 17,
            ..ScenarioConfig::default()
        };
        run_identical_stress(&net, net.incoming_totals(), &cfg).unwrap().std_error()
    };
    let ratio = se(400) / se(100);
    assert!((0.4..=0.6).contains(&ratio), "ratio {ratio}");
}

#[test]
fn clamped_networked_stress_never_exceeds_baseline() {
    let records = small_corpus(8);
    let matrices = build_visit_matrices(&records, &CohortFilter::all());
    let nodes = node_set(&matrices);
    let series = build_flow_series(&matrices, 3, &nodes).unwrap();
    let months: Vec<MonthIndex> = series.keys().copied().collect();
    let n = nodes.len();
    let capacity: Vec<f64> = (0..n * months.len()).map(|k| 20.0 + (k % 7) as f64 * 15.0).collect();
    let load: Vec<f64> = (0..n * months.len()).map(|k| 30.0 + (k % 5) as f64 * 12.0).collect();
    let profile = StressProfile::new(nodes.clone(), months.clone(), load, capacity).unwrap();
    for net in series.values() {
        let res = evaluate(net, &profile, true).unwrap();
        for t in 0..months.len() {
            assert!(res.lambda_w[t] <= res.lambda_o[t] + 1e-12);
        }
    }
}

#[test]
fn age_strata_partition_incoming_totals() {
    let records = small_corpus(3);
    let all = build_visit_matrices(&records, &CohortFilter::all());
    let nodes = node_set(&all);
    let whole = build_flow_series(&all, 3, &nodes).unwrap();
    let mut summed = vec![0.0; nodes.len()];
    for group in AgeGroup::ALL {
        let m = build_visit_matrices(&records, &CohortFilter::all().with_age_groups([*group]));
        for &t in m.keys() {
            let net = build_flow_network_on(&m, t, 3, &nodes).unwrap();
            for (s, x) in summed.iter_mut().zip(net.incoming_totals()) {
                *s += x;
            }
        }
    }
    let mut total = vec![0.0; nodes.len()];
    for net in whole.values() {
        for (s, x) in total.iter_mut().zip(net.incoming_totals()) {
            *s += x;
        }
    }
    assert_eq!(summed, total);
}

#[test]
fn shifting_every_month_shifts_the_series() {
    let records = small_corpus(4);
    let shifted: Vec<VisitRecord> = records
        .iter()
        .map(|r| VisitRecord {
            month: r.month.add_months(17),
            ..r.clone()
        })
        .collect();
    let a = build_visit_matrices(&records, &CohortFilter::all());
    let b = build_visit_matrices(&shifted, &CohortFilter::all());
    let nodes = node_set(&a);
    let sa = build_flow_series(&a, 2, &nodes).unwrap();
    let sb = build_flow_series(&b, 2, &nodes).unwrap();
    assert_eq!(sa.len(), sb.len());
    for ((ta, na), (tb, nb)) in sa.iter().zip(&sb) {
        assert_eq!(ta.add_months(17), *tb);
        assert_eq!(na.weights(), nb.weights());
        assert_eq!(na.incoming_totals(), nb.incoming_totals());
    }
}

#[test]
fn flows_bounded_by_active_patients() {
    let records = small_corpus(9);
    let matrices = build_visit_matrices(&records, &CohortFilter::all());
    let nodes = node_set(&matrices);
    for (&t, m) in &matrices {
        let active = m.patients().len() as f64;
        let net = build_flow_network_on(&matrices, t, 3, &nodes).unwrap();
        assert!(net.weights().iter().all(|&w| w <= active));
        let distinct: BTreeSet<&str> = records.iter().filter(|r| r.month == t).map(|r| r.patient_id.as_str()).collect();
        assert_eq!(distinct.len() as f64, active);
    }
}
