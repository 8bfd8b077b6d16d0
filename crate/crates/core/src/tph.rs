//! Tree-pruning heuristic.
//!
//! Each round draws `K` distinct basic measurement sets of the current vertex
//! set, turns each into a feasible measured tree, prunes every tree from the
//! root towards the leaves, and keeps the smallest residual tree. Rounds stop
//! once nothing can be pruned.

use std::collections::BTreeSet;
use std::time::Instant;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::{construct_feasible_tree, identify_descendants, FeasibleMeasuredTree, OrientedTree, TreeBackend};
use crate::observability::{basic_measurement_set, meters_within, StateSet};
use crate::par;
use crate::plan::{Solution, SolverStats};
use crate::system::System;

/// Up to this many children the largest prunable subset is found exactly.
pub const EXHAUSTIVE_CHILDREN: usize = 12;

#[derive(Clone, Debug)]
pub struct TphOptions {
    pub k: usize,
    pub seed: u64,
    pub backend: TreeBackend,
}

impl TphOptions {
    pub fn new(k: usize, seed: u64) -> Self {
        TphOptions {
            k,
            seed,
            backend: TreeBackend::Matroid,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RoundLog {
    pub round: usize,
    /// Vertices at the start of the round.
    pub w: usize,
    /// Vertices of the best residual tree.
    pub best: usize,
    pub trees: usize,
}

#[derive(Clone, Debug)]
pub struct TphRun {
    pub solution: Solution,
    pub rounds: Vec<RoundLog>,
    /// Vertices with at least one live child visited during pruning.
    pub examined: u64,
}

pub fn solve_tph(sys: &System, targets: &StateSet, opts: &TphOptions) -> Result<Solution> {
    run_tph(sys, targets, opts).map(|r| r.solution)
}

pub fn run_tph(sys: &System, targets: &StateSet, opts: &TphOptions) -> Result<TphRun> {
    if opts.k == 0 {
        return Err(Error::Invalid("K must be at least 1".into()));
    }
    let start = Instant::now();
    let r = sys.reference();
    let n = sys.network.bus_count();
    let mut terminal = vec![false; n];
    terminal[r] = true;
    for t in targets.iter() {
        terminal[t] = true;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut vertices: Vec<usize> = (0..n).collect();
    let mut rounds = Vec::new();
    let mut examined = 0u64;
    let all = sys.all_meters();
    loop {
        let w = vertices.len();
        let mut inside = vec![false; n];
        for &v in &vertices {
            inside[v] = true;
        }
        let states = StateSet::from_indices(&sys.network, vertices.iter().copied().filter(|&v| v != r))?;
        let cands = meters_within(&sys.jacobian, all.iter().copied(), &inside);
        let mut sets: Vec<Vec<usize>> = Vec::with_capacity(opts.k);
        let mut distinct = BTreeSet::new();
        for _ in 0..10 * opts.k {
            let basic = basic_measurement_set(&sys.jacobian, &cands, &states, Some(rng.next_u64()), sys.eps)
                .ok_or_else(|| {
                    Error::Infeasible("the vertex set is not observable from the placement".into())
                })?;
            if distinct.insert(basic.clone()) {
                sets.push(basic);
                if sets.len() == opts.k {
                    break;
                }
            }
        }
        let results: Vec<Option<(FeasibleMeasuredTree, u64)>> = par::map(&sets, |basic| {
            let tree = construct_feasible_tree(&sys.graph, basic, r, opts.backend)?;
            Some(prune(sys, &tree, &terminal))
        });
        let mut best: Option<FeasibleMeasuredTree> = None;
        for res in results {
            let (tree, count) = res.ok_or_else(|| Error::Verification("no feasible tree for a basic measurement set".into()))?;
            examined += count;
            if best.as_ref().map_or(true, |b| tree.vertices.len() < b.vertices.len()) {
                best = Some(tree);
            }
        }
        let best = best.expect("at least one basic set per round");
        let log = RoundLog {
            round: rounds.len() + 1,
            w,
            best: best.vertices.len(),
            trees: sets.len(),
        };
        log::info!("tph round {}: W = {}, |T*| = {}", log.round, log.w, log.best);
        rounds.push(log);
        if best.vertices.len() == w {
            let meters = best.meters();
            return Ok(TphRun {
                solution: Solution {
                    meters,
                    tree: best,
                    optimal: false,
                    stats: SolverStats {
                        iterations: examined,
                        rounds: rounds.len() as u64,
                        wall_ms: start.elapsed().as_secs_f64() * 1e3,
                        lower_bound: None,
                    },
                },
                rounds,
                examined,
            });
        }
        vertices = best.vertices;
    }
}

/// Prunes `tree` from the root down; returns the residual tree and the
/// number of vertices examined.
pub fn prune(sys: &System, tree: &FeasibleMeasuredTree, terminal: &[bool]) -> (FeasibleMeasuredTree, u64) {
    let o = identify_descendants(tree, &sys.graph, sys.network.bus_ids());
    let n = sys.network.bus_count();
    let mut alive = vec![false; n];
    for &v in &tree.vertices {
        alive[v] = true;
    }
    let mut examined = 0u64;
    for &i in &o.order {
        if !alive[i] {
            continue;
        }
        let children: Vec<usize> = o.children(i).iter().copied().filter(|&c| alive[c]).collect();
        if children.is_empty() {
            continue;
        }
        examined += 1;
        let chosen = largest_prunable(sys, tree, &o, &alive, terminal, &children);
        for c in chosen {
            alive[c] = false;
            for d in o.descendants(c) {
                alive[d] = false;
            }
        }
    }
    let edges = tree
        .edges
        .iter()
        .copied()
        .filter(|e| {
            let (a, b) = sys.graph.endpoints(e.branch);
            alive[a] && alive[b]
        })
        .collect();
    (FeasibleMeasuredTree::from_edges(tree.root, &sys.graph, edges), examined)
}

/// Whether removing the subtrees under `subset` keeps the tree feasible and
/// all terminals in place.
fn prunable(
    sys: &System,
    tree: &FeasibleMeasuredTree,
    o: &OrientedTree,
    alive: &[bool],
    terminal: &[bool],
    subset: &[usize],
) -> bool {
    let mut removed = vec![false; alive.len()];
    for &c in subset {
        for v in std::iter::once(c).chain(o.descendants(c)) {
            if !alive[v] {
                continue;
            }
            if terminal[v] {
                return false;
            }
            removed[v] = true;
        }
    }
    tree.edges.iter().all(|e| {
        let (a, b) = sys.graph.endpoints(e.branch);
        let remains = alive[a] && alive[b] && !removed[a] && !removed[b];
        !remains
            || !sys.graph.is_injection(e.meter)
            || sys.graph.measured_vertices(e.meter).iter().all(|&v| !removed[v])
    })
}

fn largest_prunable(
    sys: &System,
    tree: &FeasibleMeasuredTree,
    o: &OrientedTree,
    alive: &[bool],
    terminal: &[bool],
    children: &[usize],
) -> Vec<usize> {
    if children.len() <= EXHAUSTIVE_CHILDREN {
        // prunable subsets are closed under union, so the largest one is
        // the union of all of them
        let mut union = 0u32;
        for mask in 1u32..(1 << children.len()) {
            if mask & !union == 0 {
                continue;
            }
            let subset: Vec<usize> = (0..children.len())
                .filter(|&b| mask >> b & 1 == 1)
                .map(|b| children[b])
                .collect();
            if prunable(sys, tree, o, alive, terminal, &subset) {
                union |= mask;
            }
        }
        return (0..children.len())
            .filter(|&b| union >> b & 1 == 1)
            .map(|b| children[b])
            .collect();
    }
    let mut order = children.to_vec();
    order.sort_by_key(|&c| std::cmp::Reverse(o.descendants(c).len()));
    let mut chosen = Vec::new();
    for c in order {
        chosen.push(c);
        if !prunable(sys, tree, o, alive, terminal, &chosen) {
            chosen.pop();
        }
    }
    chosen
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::observability::is_protected;

    fn terminals(sys: &System, ids: &[u32]) -> Vec<bool> {
        let mut t = vec![false; sys.network.bus_count()];
        for &id in ids {
            t[sys.network.bus_index(id).unwrap()] = true;
        }
        t
    }

    #[test]
    fn example_tree_prunes_to_seven_vertices() {
        let sys = fixtures::pruning13().unwrap();
        let tree = fixtures::pruning13_tree(&sys).unwrap();
        tree.validate(&sys.graph).unwrap();
        let (rest, examined) = prune(&sys, &tree, &terminals(&sys, &[1, 5, 8]));
        let ids: Vec<u32> = rest.vertices.iter().map(|&v| sys.network.bus_id(v)).collect();
        assert_eq!(ids, [1, 3, 4, 5, 6, 7, 8]);
        rest.validate(&sys.graph).unwrap();
        assert!(examined <= tree.vertices.len() as u64);
    }

    #[test]
    fn subtree_under_seven_alone_is_not_prunable() {
        let sys = fixtures::pruning13().unwrap();
        let tree = fixtures::pruning13_tree(&sys).unwrap();
        let o = identify_descendants(&tree, &sys.graph, sys.network.bus_ids());
        let mut alive = vec![false; sys.network.bus_count()];
        for &v in &tree.vertices {
            alive[v] = true;
        }
        let t = terminals(&sys, &[1, 5, 8]);
        let b = |id| sys.network.bus_index(id).unwrap();
        assert!(!prunable(&sys, &tree, &o, &alive, &t, &[b(7)]));
        assert!(prunable(&sys, &tree, &o, &alive, &t, &[b(9), b(10)]));
        assert!(prunable(&sys, &tree, &o, &alive, &t, &[b(2)]));
    }

    #[test]
    fn all_targets_leave_a_basic_set() {
        let sys = fixtures::ieee14().unwrap();
        let d = sys.all_states();
        let sol = solve_tph(&sys, &d, &TphOptions::new(3, 1)).unwrap();
        assert_eq!(sol.meters.len(), 13);
        assert!(is_protected(&sys.jacobian, &sol.meters, &d, sys.eps));
    }

    #[test]
    fn heuristic_output_protects_targets() {
        let sys = fixtures::ieee14().unwrap();
        let d = sys.targets(&[8, 12]).unwrap();
        for k in [1, 3, 5] {
            let run = run_tph(&sys, &d, &TphOptions::new(k, 7)).unwrap();
            assert!(is_protected(&sys.jacobian, &run.solution.meters, &d, sys.eps));
            assert!(run.solution.meters.len() >= 8);
            run.solution.tree.validate(&sys.graph).unwrap();
            let bound = (k * (13 - 2 + 1) * 13) as u64;
            assert!(run.examined <= bound);
            assert!(run.rounds.windows(2).all(|w| w[1].best <= w[0].best));
        }
    }

    #[test]
    fn same_seed_same_plan() {
        let sys = fixtures::ieee14().unwrap();
        let d = sys.targets(&[3, 9, 14]).unwrap();
        let a = solve_tph(&sys, &d, &TphOptions::new(4, 99)).unwrap();
        let b = solve_tph(&sys, &d, &TphOptions::new(4, 99)).unwrap();
        assert_eq!(a.meters, b.meters);
        assert_eq!(a.tree, b.tree);
    }
}
