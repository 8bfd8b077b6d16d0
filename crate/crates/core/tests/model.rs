mod common;

use meterguard::fixtures;
use meterguard::grid::{parse_case, parse_measurements};
use meterguard::linalg::{exact, rank};
use meterguard::synth::{random_system, SynthParams};
use meterguard::grid::{MeterKind, Orientation};
use meterguard::System;
use num_rational::BigRational;
use num_traits::{One, Zero};
use proptest::prelude::*;

/// H rebuilt over the rationals straight from the branch data.
fn exact_jacobian(sys: &System) -> Vec<Vec<BigRational>> {
    let net = &sys.network;
    let cols = sys.jacobian.cols();
    let flow = |row: &mut Vec<BigRational>, branch: usize, out_of: usize| {
        let br = net.branch(branch);
        let g = BigRational::one() / exact::to_rational(br.reactance);
        if let Some(c) = sys.jacobian.column_of(out_of) {
            row[c] += &g;
        }
        if let Some(c) = sys.jacobian.column_of(br.other(out_of)) {
            row[c] -= &g;
        }
    };
    sys.placement
        .meters()
        .iter()
        .map(|m| {
            let mut row = vec![BigRational::zero(); cols];
            match m.kind {
                MeterKind::Flow { branch, orientation, .. } => {
                    let br = net.branch(branch);
                    let out_of = match orientation {
                        Orientation::Forward => br.from,
                        Orientation::Reverse => br.to,
                    };
                    flow(&mut row, branch, out_of);
                }
                MeterKind::Injection { bus } => {
                    for b in net.real_incident(bus) {
                        flow(&mut row, b, bus);
                    }
                }
            }
            row
        })
        .collect()
}

#[test]
fn five_bus_jacobian_entries() {
    let sys = fixtures::five_bus().unwrap();
    let want: [[i64; 4]; 6] = [
        [-1, 0, 0, 0],
        [1, 0, -1, 0],
        [0, -1, 0, 1],
        [0, 0, 1, -1],
        [-1, 2, 0, -1],
        [-1, 0, 2, -1],
    ];
    let h = &sys.jacobian.matrix;
    assert_eq!((h.rows(), h.cols()), (6, 4));
    for (r, row) in want.iter().enumerate() {
        for (c, &v) in row.iter().enumerate() {
            assert_eq!(exact::to_rational(h.get(r, c)), BigRational::from_integer(v.into()));
        }
    }
    assert_eq!(exact::rank_integer(&want.map(|r| r.to_vec())), 4);
    assert_eq!(rank(h, sys.eps), 4);
}

#[test]
fn three_bus_entries_follow_reactances() {
    let case = r#"{"buses":[1,2,3],"reference":1,"branches":[
        {"id":"a","from":1,"to":2,"x":0.5},{"id":"b","from":2,"to":3,"x":0.25}]}"#;
    let meas = r#"{"flow":[{"id":"f","branch":"a"},{"id":"g","branch":"b","dir":"rev"}],
        "injection":[{"id":"i","bus":2}]}"#;
    let net = parse_case(case).unwrap();
    let placement = parse_measurements(meas, &net).unwrap();
    let sys = meterguard::System::new(net, placement);
    let h = sys.jacobian.matrix.to_rows();
    // flow a out of 1: -2 on bus 2; flow b out of 3: -4 on bus 2, +4 on bus 3;
    // injection at 2: 2 + 4 on bus 2, -4 on bus 3
    assert_eq!(h, vec![vec![-2.0, 0.0], vec![-4.0, 4.0], vec![6.0, -4.0]]);
}

#[test]
fn single_bus_network_has_no_states() {
    let net = parse_case(r#"{"buses":[7],"reference":7,"branches":[]}"#).unwrap();
    assert_eq!(net.state_count(), 0);
    let err = parse_case(r#"{"buses":[1,2],"reference":1,"branches":[{"id":"a","from":1,"to":99}]}"#)
        .unwrap_err();
    assert!(err.to_string().contains("unknown bus"));
}

#[test]
fn fourteen_bus_fixture_is_observable() {
    let sys = fixtures::ieee14().unwrap();
    assert_eq!(sys.jacobian.rows(), 19);
    assert_eq!(rank(&sys.jacobian.matrix, sys.eps), 13);
}

#[test]
fn pmu_next_to_reference_reuses_the_real_line() {
    let net = parse_case(fixtures::SEVEN_BUS_CASE).unwrap();
    let exact_rank = |sys: &System| exact::rank_rational(&mut exact_jacobian(sys), sys.jacobian.cols());

    let meas = parse_measurements(
        r#"{"flow":[{"id":"f12","branch":"e12","dir":"fwd"}],"pmu":[{"id":"p4","bus":4}]}"#,
        &net,
    )
    .unwrap();
    let before = System::new(net.clone(), meas.clone());
    let after = System::with_pmus(&net, &meas);
    assert!(after.pseudo_branches.is_empty());
    assert_eq!(after.network.branches().len(), net.branches().len());
    assert_eq!(exact_rank(&after), exact_rank(&before) + 1);
    let e14 = net.branch_index("e14").unwrap();
    let p4 = after.placement.meter_index("p4").unwrap();
    assert!(after.placement.flow_meters_on(e14).any(|m| m == p4));

    // a real meter on the same line stays; the pseudo meter joins it
    let meas = parse_measurements(
        r#"{"flow":[{"id":"f14","branch":"e14","dir":"fwd"}],"pmu":[{"id":"p4","bus":4}]}"#,
        &net,
    )
    .unwrap();
    let after = System::with_pmus(&net, &meas);
    assert_eq!(after.placement.flow_meters_on(e14).count(), 2);
    assert_eq!(exact_rank(&after), 1);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn float_rank_matches_exact_rank(seed in 0u64..10_000, buses in 3usize..9, extra in 0usize..5) {
        let p = SynthParams {
            unit_reactance: false,
            observable: false,
            ..SynthParams::small(buses, buses - 1 + extra, buses / 2 + 1, buses / 3)
        };
        let sys = random_system(&p, seed).unwrap();
        let mut oracle = exact_jacobian(&sys);
        let want = exact::rank_rational(&mut oracle, sys.jacobian.cols());
        prop_assert_eq!(rank(&sys.jacobian.matrix, sys.eps), want);
    }

    #[test]
    fn injection_row_is_sum_of_outgoing_flow_rows(seed in 0u64..10_000, buses in 2usize..9) {
        let p = SynthParams {
            unit_reactance: false,
            ..SynthParams::small(buses, buses + 2, 0, buses)
        };
        let sys = random_system(&SynthParams { observable: false, ..p }, seed).unwrap();
        let net = &sys.network;
        for m in 0..sys.placement.len() {
            let meter = sys.placement.meter(m);
            let meterguard::grid::MeterKind::Injection { bus } = meter.kind else { continue };
            let mut want = vec![0.0; sys.jacobian.cols()];
            for b in net.real_incident(bus) {
                let br = net.branch(b);
                let g = 1.0 / br.reactance;
                if let Some(c) = sys.jacobian.column_of(bus) {
                    want[c] += g;
                }
                if let Some(c) = sys.jacobian.column_of(br.other(bus)) {
                    want[c] -= g;
                }
            }
            let got = sys.jacobian.matrix.row(m);
            for (a, b) in got.iter().zip(&want) {
                prop_assert!((a - b).abs() <= 1e-12 * (1.0 + b.abs()));
            }
        }
    }
}
