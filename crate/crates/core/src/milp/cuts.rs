//! Directed-cut separation for the arborescence model.
//!
//! Any integer point routes commodity from the reference to every target and
//! to every bus measured by a used injection meter, so for each vertex set
//! `S` not containing the reference and containing such a bus `j`:
//!
//! * `x(δ⁻(S)) >= 1` when `j` is a target,
//! * `x(δ⁻(S)) >= Σ z_k` when `j` is measured by injection meter `k`.
//!
//! Violated sets are found as minimum cuts under the fractional `x`.

use std::collections::{HashSet, VecDeque};

use super::bnb::{RowSpec, Sense, Separator};
use super::MmsaInstance;

const VIOLATION_TOL: f64 = 1e-6;

pub(crate) struct DirectedCuts {
    n: usize,
    reference: usize,
    arcs: Vec<(usize, usize)>,
    targets: Vec<usize>,
    injection_reach: Vec<(Vec<usize>, Vec<usize>)>,
}

impl DirectedCuts {
    pub(crate) fn new(inst: &MmsaInstance) -> Self {
        DirectedCuts {
            n: inst.bus_count,
            reference: inst.reference,
            arcs: inst.arcs.iter().map(|a| (a.tail, a.head)).collect(),
            targets: inst.targets.iter().collect(),
            injection_reach: inst
                .injection_reach
                .iter()
                .map(|(reach, own)| (reach.clone(), own.iter().map(|&k| inst.z_var(k)).collect()))
                .collect(),
        }
    }

    /// Arcs entering the sink side of a minimum cut, or `None` when the flow
    /// from the reference to `sink` reaches `need`.
    fn violated_cut(&self, caps: &[f64], sink: usize, need: f64) -> Option<Vec<usize>> {
        let flow = MaxFlow::new(self.n, &self.arcs, caps);
        let (value, reach) = flow.run(self.reference, sink, need);
        if value >= need - VIOLATION_TOL {
            return None;
        }
        Some(
            self.arcs
                .iter()
                .enumerate()
                .filter(|(_, &(t, h))| reach[t] && !reach[h])
                .map(|(i, _)| i)
                .collect(),
        )
    }
}

impl Separator for DirectedCuts {
    fn separate(&self, x: &[f64]) -> Vec<RowSpec> {
        let caps = &x[..self.arcs.len()];
        let mut rows = Vec::new();
        let mut seen: HashSet<(Vec<usize>, usize)> = HashSet::new();
        for &t in &self.targets {
            if let Some(cut) = self.violated_cut(caps, t, 1.0) {
                if seen.insert((cut.clone(), usize::MAX)) {
                    rows.push(RowSpec {
                        coefs: cut.into_iter().map(|i| (i, 1.0)).collect(),
                        sense: Sense::Ge,
                        rhs: 1.0,
                    });
                }
            }
        }
        for (k, (reach, zs)) in self.injection_reach.iter().enumerate() {
            let used: f64 = zs.iter().map(|&z| x[z]).sum();
            if used <= VIOLATION_TOL {
                continue;
            }
            for &v in reach {
                if v == self.reference {
                    continue;
                }
                if let Some(cut) = self.violated_cut(caps, v, used) {
                    if seen.insert((cut.clone(), k)) {
                        let mut coefs: Vec<(usize, f64)> = cut.into_iter().map(|i| (i, 1.0)).collect();
                        coefs.extend(zs.iter().map(|&z| (z, -1.0)));
                        rows.push(RowSpec {
                            coefs,
                            sense: Sense::Ge,
                            rhs: 0.0,
                        });
                    }
                }
            }
        }
        rows
    }
}

/// Edmonds-Karp on a small dense-ish digraph with real capacities.
struct MaxFlow {
    head: Vec<usize>,
    cap: Vec<f64>,
    adj: Vec<Vec<usize>>,
}

impl MaxFlow {
    fn new(n: usize, arcs: &[(usize, usize)], caps: &[f64]) -> Self {
        let mut head = Vec::with_capacity(2 * arcs.len());
        let mut cap = Vec::with_capacity(2 * arcs.len());
        let mut adj = vec![Vec::new(); n];
        for (&(t, h), &c) in arcs.iter().zip(caps) {
            adj[t].push(head.len());
            head.push(h);
            cap.push(c.max(0.0));
            adj[h].push(head.len());
            head.push(t);
            cap.push(0.0);
        }
        MaxFlow { head, cap, adj }
    }

    /// Pushes flow until `limit` is reached or no augmenting path remains.
    /// Returns the flow value and the residual reachability from `s`.
    fn run(mut self, s: usize, t: usize, limit: f64) -> (f64, Vec<bool>) {
        let n = self.adj.len();
        let mut total = 0.0;
        loop {
            let mut prev: Vec<Option<usize>> = vec![None; n];
            let mut reach = vec![false; n];
            reach[s] = true;
            let mut queue = VecDeque::from([s]);
            while let Some(v) = queue.pop_front() {
                if v == t {
                    break;
                }
                for &e in &self.adj[v] {
                    let u = self.head[e];
                    if !reach[u] && self.cap[e] > 1e-9 {
                        reach[u] = true;
                        prev[u] = Some(e);
                        queue.push_back(u);
                    }
                }
            }
            if !reach[t] || total >= limit - VIOLATION_TOL {
                return (total, reach);
            }
            let mut push = f64::INFINITY;
            let mut v = t;
            while let Some(e) = prev[v] {
                push = push.min(self.cap[e]);
                v = self.head[e ^ 1];
            }
            let mut v = t;
            while let Some(e) = prev[v] {
                self.cap[e] -= push;
                self.cap[e ^ 1] += push;
                v = self.head[e ^ 1];
            }
            total += push;
        }
    }
}
