//! Exact Steiner-vertex enumeration.
//!
//! Candidate Steiner vertex sets `V₀ ⊆ I∖D` are tried by increasing size and,
//! within a size, in lexicographic bus-id order. For `S = D ∪ V₀` the meters
//! whose rows live entirely in the columns of `S` are collected; the first `S`
//! they observe gives an optimal plan of `|S|` meters.

use std::time::Instant;

use crate::error::{Error, Result};
use crate::graph::{construct_feasible_tree, TreeBackend};
use crate::observability::{basic_measurement_set, meters_within, rank_of, StateSet};
use crate::par;
use crate::plan::{Solution, SolverStats};
use crate::system::System;

/// Largest number of candidate subsets enumerated without `force`.
pub const SUBSET_LIMIT: u128 = 1 << 25;

#[derive(Clone, Copy, Debug, Default)]
pub struct SveOptions {
    pub force: bool,
    pub backend: TreeBackend,
}

pub fn solve_sve(sys: &System, targets: &StateSet, opts: SveOptions) -> Result<Solution> {
    let start = Instant::now();
    let r = sys.reference();
    if targets.is_empty() {
        return Ok(Solution {
            meters: Vec::new(),
            tree: crate::graph::FeasibleMeasuredTree::trivial(r),
            optimal: true,
            stats: SolverStats::default(),
        });
    }
    let mut free: Vec<usize> = sys.network.states().filter(|&b| !targets.contains(b)).collect();
    free.sort_by_key(|&b| sys.network.bus_id(b));
    let total = 1u128 << free.len().min(127);
    if total > SUBSET_LIMIT && !opts.force {
        return Err(Error::SizeGuard {
            subsets: total,
            limit: SUBSET_LIMIT,
        });
    }
    let all = sys.all_meters();
    let n = sys.network.bus_count();

    let feasible = |v0: &[usize]| -> bool {
        let mut inside = vec![false; n];
        inside[r] = true;
        for b in targets.iter().chain(v0.iter().copied()) {
            inside[b] = true;
        }
        let states: Vec<usize> = targets.iter().chain(v0.iter().copied()).collect();
        let cands = meters_within(&sys.jacobian, all.iter().copied(), &inside);
        cands.len() >= states.len() && rank_of(&sys.jacobian, &cands, &states, sys.eps) == states.len()
    };

    let mut examined: u64 = 0;
    for k in 0..=free.len() {
        let count = binomial(free.len() as u64, k as u64);
        let hit = par::find_first(count, |idx| {
            let pick = unrank_combination(free.len(), k, idx);
            let v0: Vec<usize> = pick.iter().map(|&i| free[i]).collect();
            feasible(&v0)
        });
        match hit {
            Some(idx) => {
                examined += idx + 1;
                let pick = unrank_combination(free.len(), k, idx);
                let v0: Vec<usize> = pick.iter().map(|&i| free[i]).collect();
                let states = StateSet::from_indices(&sys.network, targets.iter().chain(v0.iter().copied()))?;
                let mut inside = vec![false; n];
                inside[r] = true;
                for b in states.iter() {
                    inside[b] = true;
                }
                let cands = meters_within(&sys.jacobian, all.iter().copied(), &inside);
                let basic = basic_measurement_set(&sys.jacobian, &cands, &states, None, sys.eps)
                    .ok_or_else(|| Error::Verification("rank test and basic set disagree".into()))?;
                let tree = construct_feasible_tree(&sys.graph, &basic, r, opts.backend)
                    .ok_or_else(|| Error::Verification("no feasible tree for a basic measurement set".into()))?;
                log::debug!("sve: |V0| = {k}, {examined} subsets");
                return Ok(Solution {
                    meters: basic,
                    tree,
                    optimal: true,
                    stats: SolverStats {
                        iterations: examined,
                        rounds: k as u64,
                        wall_ms: start.elapsed().as_secs_f64() * 1e3,
                        lower_bound: None,
                    },
                });
            }
            None => examined += count,
        }
    }
    Err(Error::Infeasible(format!(
        "targets {:?} are not observable from the placement",
        targets.bus_ids(&sys.network)
    )))
}

pub(crate) fn binomial(n: u64, k: u64) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc as u64
}

/// The `idx`-th `k`-subset of `0..n` in lexicographic order.
pub(crate) fn unrank_combination(n: usize, k: usize, mut idx: u64) -> Vec<usize> {
    let mut out = Vec::with_capacity(k);
    let mut next = 0;
    for slot in 0..k {
        let remaining = k - slot - 1;
        loop {
            let with_next = binomial((n - next - 1) as u64, remaining as u64);
            if idx < with_next {
                out.push(next);
                next += 1;
                break;
            }
            idx -= with_next;
            next += 1;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::observability::is_protected;

    #[test]
    fn combinations_unrank_in_lexicographic_order() {
        let all: Vec<Vec<usize>> = (0..binomial(5, 3)).map(|i| unrank_combination(5, 3, i)).collect();
        assert_eq!(all.len(), 10);
        assert_eq!(all[0], [0, 1, 2]);
        assert_eq!(all[1], [0, 1, 3]);
        assert_eq!(all[9], [2, 3, 4]);
        let mut sorted = all.clone();
        sorted.sort();
        assert_eq!(all, sorted);
        assert_eq!(unrank_combination(4, 0, 0), Vec::<usize>::new());
    }

    #[test]
    fn empty_target_needs_nothing() {
        let sys = fixtures::five_bus().unwrap();
        let sol = solve_sve(&sys, &StateSet::empty(), SveOptions::default()).unwrap();
        assert!(sol.meters.is_empty());
    }

    #[test]
    fn fourteen_bus_two_targets() {
        let sys = fixtures::ieee14().unwrap();
        let d = sys.targets(&[8, 12]).unwrap();
        let sol = solve_sve(&sys, &d, SveOptions::default()).unwrap();
        assert_eq!(sol.meters.len(), 8);
        assert!(is_protected(&sys.jacobian, &sol.meters, &d, sys.eps));
        sol.tree.validate(&sys.graph).unwrap();
        assert_eq!(sol.tree.meters(), sol.meters);
    }

    #[test]
    fn guard_refuses_large_enumerations() {
        let sys = crate::synth::random_system(&crate::synth::SynthParams::scale57(), 3).unwrap();
        let d = StateSet::from_indices(&sys.network, [1]).unwrap();
        assert!(matches!(
            solve_sve(&sys, &d, SveOptions::default()),
            Err(Error::SizeGuard { .. })
        ));
    }
}
