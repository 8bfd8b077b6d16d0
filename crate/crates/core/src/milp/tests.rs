use super::*;
use crate::fixtures;
use crate::observability::is_protected;

fn solve(sys: &System, d: &StateSet) -> (MmsaInstance, MilpSolution) {
    let inst = build_instance(sys, d, &BuildOptions::default()).unwrap();
    let sol = solve_exact(&inst, &SolveOptions::default()).unwrap();
    (inst, sol)
}

#[test]
fn fourteen_bus_instance_shape() {
    let sys = fixtures::ieee14().unwrap();
    let d = sys.targets(&[8, 12]).unwrap();
    let inst = build_instance(&sys, &d, &BuildOptions::default()).unwrap();
    assert_eq!(inst.arcs.len(), 40);
    assert_eq!(inst.w, (40 + 19 + 2 + 1) as f64);
    let xs = (0..inst.arcs.len()).map(|a| inst.x_var(a)).count();
    assert_eq!(xs, 40);
}

#[test]
fn fourteen_bus_two_targets() {
    let sys = fixtures::ieee14().unwrap();
    let d = sys.targets(&[8, 12]).unwrap();
    let (inst, sol) = solve(&sys, &d);
    assert!(sol.optimal);
    assert_eq!(sol.objective.floor(), 8.0);
    assert!(sol.root_bound <= sol.objective + 1e-9);
    let plan = extract_plan(&sys, &inst, &sol).unwrap();
    assert_eq!(plan.meters.len(), 8);
    assert!(is_protected(&sys.jacobian, &plan.meters, &d, sys.eps));
}

#[test]
fn empty_target_costs_nothing() {
    let sys = fixtures::ieee14().unwrap();
    let (_, sol) = solve(&sys, &StateSet::empty());
    assert_eq!(sol.objective, 0.0);
    assert!(sol.arcs.is_empty());
}

#[test]
fn triangle_with_flow_meters_uses_one_arc() {
    let case = r#"{"buses":[1,2,3],"reference":1,"branches":[
        {"id":"a","from":1,"to":2},{"id":"b","from":2,"to":3},{"id":"c","from":1,"to":3}]}"#;
    let meas = r#"{"flow":[{"id":"fa","branch":"a"},{"id":"fb","branch":"b"},{"id":"fc","branch":"c"}]}"#;
    let sys = System::from_json(case, meas, false).unwrap();
    let d = sys.targets(&[2]).unwrap();
    let (inst, sol) = solve(&sys, &d);
    assert_eq!(sol.arcs.len(), 1);
    let arc = inst.arcs[sol.arcs[0]];
    assert_eq!((sys.network.bus_id(arc.tail), sys.network.bus_id(arc.head)), (1, 2));
    assert!(sol.injections.is_empty());
}

#[test]
fn pseudo_branches_get_no_injection_variables() {
    let sys = fixtures::seven_bus(true).unwrap();
    let d = sys.targets(&[7]).unwrap();
    let inst = build_instance(&sys, &d, &BuildOptions::default()).unwrap();
    for &b in &sys.pseudo_branches {
        assert!(inst.injections.iter().all(|z| z.branch != b));
        assert!(inst.flow_metered[b]);
    }
}

#[test]
fn secondary_term_never_changes_the_arc_count() {
    let sys = fixtures::ieee14().unwrap();
    for ids in [&[8u32, 12][..], &[3, 14], &[10], &[6, 7, 13]] {
        let d = sys.targets(ids).unwrap();
        let (_, with) = solve(&sys, &d);
        let inst = build_instance(
            &sys,
            &d,
            &BuildOptions {
                secondary_term: false,
                ..BuildOptions::default()
            },
        )
        .unwrap();
        let without = solve_exact(&inst, &SolveOptions::default()).unwrap();
        assert_eq!(with.arc_count(), without.arc_count(), "{ids:?}");
    }
}

#[test]
fn cuts_and_aux_inequality_do_not_change_the_optimum() {
    let sys = fixtures::ieee14().unwrap();
    let d = sys.targets(&[5, 11]).unwrap();
    let (_, base) = solve(&sys, &d);
    let plain = build_instance(
        &sys,
        &d,
        &BuildOptions {
            aux_cut: false,
            ..BuildOptions::default()
        },
    )
    .unwrap();
    let bare = solve_exact(
        &plain,
        &SolveOptions {
            separate_cuts: false,
            ..SolveOptions::default()
        },
    )
    .unwrap();
    assert!(bare.optimal);
    assert_eq!(base.objective, bare.objective);
}

#[test]
fn warm_start_from_a_feasible_tree_is_accepted() {
    let sys = fixtures::ieee14().unwrap();
    let d = sys.targets(&[8, 12]).unwrap();
    let inst = build_instance(&sys, &d, &BuildOptions::default()).unwrap();
    let tph = crate::tph::solve_tph(&sys, &d, &crate::tph::TphOptions::new(2, 0)).unwrap();
    assert!(assignment_from_tree(&inst, &tph.tree).is_some());
    let sol = solve_exact(
        &inst,
        &SolveOptions {
            warm_start: Some(&tph.tree),
            ..SolveOptions::default()
        },
    )
    .unwrap();
    assert_eq!(sol.arc_count(), 8);
}

#[test]
fn budget_exhaustion_is_reported() {
    let sys = fixtures::ieee14().unwrap();
    let d = sys.targets(&[2, 8, 12, 14]).unwrap();
    let inst = build_instance(&sys, &d, &BuildOptions::default()).unwrap();
    let tph = crate::tph::solve_tph(&sys, &d, &crate::tph::TphOptions::new(1, 0)).unwrap();
    let sol = solve_exact(
        &inst,
        &SolveOptions {
            limits: Limits {
                node_budget: 0,
                time_budget: Duration::from_secs(5),
            },
            separate_cuts: false,
            warm_start: Some(&tph.tree),
        },
    )
    .unwrap();
    assert!(!sol.optimal);
    assert!(sol.lower_bound <= sol.objective);
}

#[test]
fn incremental_growth_keeps_the_prior_tree() {
    let sys = fixtures::ieee14().unwrap();
    let d1 = sys.targets(&[5]).unwrap();
    let first = solve_milp(&sys, &d1, &MilpOptions::default()).unwrap();
    let d2 = sys.targets(&[13]).unwrap();
    let grown = solve_incremental(&sys, &first.tree, &d2, &MilpOptions::default()).unwrap();
    for e in &first.tree.edges {
        assert!(grown.tree.edges.contains(e));
    }
    let both = d1.union(&d2);
    assert!(is_protected(&sys.jacobian, &grown.meters, &both, sys.eps));
    let once = solve_milp(&sys, &both, &MilpOptions::default()).unwrap();
    assert!(grown.meters.len() >= once.meters.len());
}

#[test]
fn lp_dump_lists_every_variable() {
    let sys = fixtures::seven_bus(true).unwrap();
    let d = sys.targets(&[7]).unwrap();
    let inst = build_instance(&sys, &d, &BuildOptions::default()).unwrap();
    let text = write_lp(&sys, &inst);
    assert!(text.starts_with("\\ minimum measured Steiner arborescence"));
    assert!(text.contains("Subject To"));
    assert!(text.contains("x_5_1_pmu_p5"));
    assert!(text.trim_end().ends_with("End"));
    let binaries = text.split("Binaries\n").nth(1).unwrap().lines().filter(|l| l.starts_with(' ')).count();
    assert_eq!(binaries, inst.arcs.len() + inst.injections.len());
}
