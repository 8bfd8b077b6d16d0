//! Measurability graph, feasible measured trees and their construction.
//!
//! A flow meter measures its branch and the two endpoints; an injection meter
//! measures every physical branch at its bus plus the far endpoints. A
//! feasible measured tree maps each tree edge to a distinct meter that
//! measures it, and its vertex set is exactly what those meters measure.

use std::collections::{BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{MeasurementPlacement, MeterKind, PowerNetwork};
use crate::system::System;

#[derive(Clone, Debug)]
pub struct MeasuredGraph {
    bus_count: usize,
    reference: usize,
    endpoints: Vec<(usize, usize)>,
    meter_vertices: Vec<Vec<usize>>,
    meter_edges: Vec<Vec<usize>>,
    edge_meters: Vec<Vec<usize>>,
    vertex_meters: Vec<Vec<usize>>,
    injection: Vec<bool>,
}

impl MeasuredGraph {
    pub fn new(net: &PowerNetwork, meas: &MeasurementPlacement) -> Self {
        let endpoints: Vec<(usize, usize)> = net.branches().iter().map(|b| (b.from, b.to)).collect();
        let mut meter_vertices = Vec::with_capacity(meas.len());
        let mut meter_edges = Vec::with_capacity(meas.len());
        let mut injection = Vec::with_capacity(meas.len());
        for m in meas.meters() {
            let (mut vs, es) = match m.kind {
                MeterKind::Flow { branch, .. } => {
                    let (a, b) = endpoints[branch];
                    (vec![a, b], vec![branch])
                }
                MeterKind::Injection { bus } => {
                    let es: Vec<usize> = net.real_incident(bus).collect();
                    let mut vs = vec![bus];
                    vs.extend(es.iter().map(|&e| net.branch(e).other(bus)));
                    (vs, es)
                }
            };
            vs.sort_unstable();
            vs.dedup();
            meter_vertices.push(vs);
            meter_edges.push(es);
            injection.push(m.is_injection());
        }
        let mut edge_meters = vec![Vec::new(); endpoints.len()];
        let mut vertex_meters = vec![Vec::new(); net.bus_count()];
        for (m, es) in meter_edges.iter().enumerate() {
            for &e in es {
                edge_meters[e].push(m);
            }
            for &v in &meter_vertices[m] {
                vertex_meters[v].push(m);
            }
        }
        MeasuredGraph {
            bus_count: net.bus_count(),
            reference: net.reference(),
            endpoints,
            meter_vertices,
            meter_edges,
            edge_meters,
            vertex_meters,
            injection,
        }
    }

    pub fn bus_count(&self) -> usize {
        self.bus_count
    }

    pub fn reference(&self) -> usize {
        self.reference
    }

    pub fn meter_count(&self) -> usize {
        self.meter_edges.len()
    }

    pub fn edge_count(&self) -> usize {
        self.endpoints.len()
    }

    pub fn endpoints(&self, edge: usize) -> (usize, usize) {
        self.endpoints[edge]
    }

    pub fn measured_vertices(&self, meter: usize) -> &[usize] {
        &self.meter_vertices[meter]
    }

    pub fn measured_edges(&self, meter: usize) -> &[usize] {
        &self.meter_edges[meter]
    }

    /// Meters that measure `edge` (flow meters on it, injections at either end).
    pub fn meters_of_edge(&self, edge: usize) -> &[usize] {
        &self.edge_meters[edge]
    }

    /// Meters that measure `vertex`.
    pub fn meters_of_vertex(&self, vertex: usize) -> &[usize] {
        &self.vertex_meters[vertex]
    }

    pub fn is_injection(&self, meter: usize) -> bool {
        self.injection[meter]
    }

    pub fn measures(&self, meter: usize, edge: usize) -> bool {
        self.meter_edges[meter].contains(&edge)
    }

    /// Union of the measured subnetworks of `meters`, as sorted vertex and
    /// edge lists.
    pub fn measured_subnetwork(&self, meters: &[usize]) -> (Vec<usize>, Vec<usize>) {
        let mut vs = BTreeSet::new();
        let mut es = BTreeSet::new();
        for &m in meters {
            vs.extend(self.meter_vertices[m].iter().copied());
            es.extend(self.meter_edges[m].iter().copied());
        }
        (vs.into_iter().collect(), es.into_iter().collect())
    }
}

/// Looks meters up by id and returns their measured subnetwork.
pub fn measured_subnetwork(sys: &System, meter_ids: &[&str]) -> Result<(Vec<usize>, Vec<usize>)> {
    let meters = sys.meters_by_id(meter_ids)?;
    Ok(sys.graph.measured_subnetwork(&meters))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TreeEdge {
    pub branch: usize,
    pub meter: usize,
}

/// A tree on `vertices` rooted at `root` with an injective edge-to-meter map.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FeasibleMeasuredTree {
    pub root: usize,
    /// Sorted.
    pub vertices: Vec<usize>,
    pub edges: Vec<TreeEdge>,
}

impl FeasibleMeasuredTree {
    pub fn trivial(root: usize) -> Self {
        FeasibleMeasuredTree {
            root,
            vertices: vec![root],
            edges: Vec::new(),
        }
    }

    pub fn from_edges(root: usize, graph: &MeasuredGraph, mut edges: Vec<TreeEdge>) -> Self {
        edges.sort_unstable();
        let mut vs = BTreeSet::from([root]);
        for e in &edges {
            let (a, b) = graph.endpoints(e.branch);
            vs.insert(a);
            vs.insert(b);
        }
        FeasibleMeasuredTree {
            root,
            vertices: vs.into_iter().collect(),
            edges,
        }
    }

    pub fn meters(&self) -> Vec<usize> {
        let mut m: Vec<usize> = self.edges.iter().map(|e| e.meter).collect();
        m.sort_unstable();
        m
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn contains_vertex(&self, v: usize) -> bool {
        self.vertices.binary_search(&v).is_ok()
    }

    /// Checks tree shape, the meter mapping rules and that the vertex set is
    /// exactly what the mapped meters measure.
    pub fn validate(&self, graph: &MeasuredGraph) -> std::result::Result<(), String> {
        if !self.contains_vertex(self.root) {
            return Err("root is not a tree vertex".into());
        }
        if self.edges.len() + 1 != self.vertices.len() {
            return Err(format!(
                "{} edges for {} vertices",
                self.edges.len(),
                self.vertices.len()
            ));
        }
        let mut branches = BTreeSet::new();
        let mut meters = BTreeSet::new();
        for e in &self.edges {
            if !branches.insert(e.branch) {
                return Err(format!("branch {} used twice", e.branch));
            }
            if !meters.insert(e.meter) {
                return Err(format!("meter {} mapped to two edges", e.meter));
            }
            if !graph.measures(e.meter, e.branch) {
                return Err(format!("meter {} does not measure branch {}", e.meter, e.branch));
            }
        }
        let mut uf = UnionFind::new(graph.bus_count());
        for e in &self.edges {
            let (a, b) = graph.endpoints(e.branch);
            if !self.contains_vertex(a) || !self.contains_vertex(b) {
                return Err(format!("branch {} leaves the vertex set", e.branch));
            }
            if !uf.union(a, b) {
                return Err(format!("branch {} closes a cycle", e.branch));
            }
        }
        let measured: BTreeSet<usize> = self
            .edges
            .iter()
            .flat_map(|e| graph.measured_vertices(e.meter).iter().copied())
            .collect();
        if !self.edges.is_empty() && measured.iter().copied().ne(self.vertices.iter().copied()) {
            return Err("vertex set differs from the vertices measured by the mapped meters".into());
        }
        Ok(())
    }

    pub fn to_json(&self, sys: &System) -> TreeJson {
        TreeJson {
            root: sys.network.bus_id(self.root),
            vertices: self.vertices.iter().map(|&v| sys.network.bus_id(v)).collect(),
            edges: self
                .edges
                .iter()
                .map(|e| TreeEdgeJson {
                    edge: sys.network.branch(e.branch).id.clone(),
                    meter: sys.placement.meter(e.meter).id.clone(),
                })
                .collect(),
        }
    }

    pub fn from_json(sys: &System, json: &TreeJson) -> Result<Self> {
        let root = sys.network.bus_index(json.root)?;
        let edges = json
            .edges
            .iter()
            .map(|e| {
                Ok(TreeEdge {
                    branch: sys.network.branch_index(&e.edge)?,
                    meter: sys.placement.meter_index(&e.meter)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let tree = FeasibleMeasuredTree::from_edges(root, &sys.graph, edges);
        tree.validate(&sys.graph).map_err(Error::Invalid)?;
        Ok(tree)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TreeJson {
    pub root: u32,
    #[serde(default)]
    pub vertices: Vec<u32>,
    pub edges: Vec<TreeEdgeJson>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TreeEdgeJson {
    pub edge: String,
    pub meter: String,
}

// ---------------------------------------------------------------- construction

#[derive(Clone, Debug)]
pub(crate) struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    pub(crate) fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
        }
    }

    pub(crate) fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// Merges the sets of `a` and `b`; false if they were already joined.
    pub(crate) fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.parent[ra] = rb;
        true
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TreeBackend {
    /// Graphic ∩ partition matroid intersection; exact.
    #[default]
    Matroid,
    /// Root-edge enumeration with augmenting-path bipartite matching and
    /// union-find cycle rejection. May miss trees the matroid backend finds.
    MaxFlow,
}

/// Builds a feasible measured tree over the vertices measured by `meters`
/// (which should be a basic measurement set of those vertices minus the root).
/// Returns `None` when no tree exists, i.e. the set is not observable.
pub fn construct_feasible_tree(
    graph: &MeasuredGraph,
    meters: &[usize],
    root: usize,
    backend: TreeBackend,
) -> Option<FeasibleMeasuredTree> {
    if meters.is_empty() {
        return Some(FeasibleMeasuredTree::trivial(root));
    }
    let (vertices, _) = graph.measured_subnetwork(meters);
    if vertices.binary_search(&root).is_err() {
        return None;
    }
    let target = vertices.len() - 1;
    if meters.len() < target {
        return None;
    }
    let edges = match backend {
        TreeBackend::Matroid => colorful_spanning_tree(graph, meters, target)?,
        TreeBackend::MaxFlow => root_pinned_matching(graph, meters, root, target)?,
    };
    let tree = FeasibleMeasuredTree::from_edges(root, graph, edges);
    debug_assert_eq!(tree.vertices, vertices);
    Some(tree)
}

/// Maximum common independent set of the graphic matroid over (meter, edge)
/// pairs and the partition matroid "each meter at most once". Parallel copies
/// of an edge form 2-cycles, so an edge is never used twice.
fn colorful_spanning_tree(graph: &MeasuredGraph, meters: &[usize], target: usize) -> Option<Vec<TreeEdge>> {
    let ground: Vec<TreeEdge> = meters
        .iter()
        .flat_map(|&m| graph.measured_edges(m).iter().map(move |&e| TreeEdge { branch: e, meter: m }))
        .collect();
    let color_of: Vec<usize> = ground
        .iter()
        .map(|g| meters.iter().position(|&m| m == g.meter).unwrap())
        .collect();
    let n = graph.bus_count();
    let mut in_set = vec![false; ground.len()];
    let mut color_used = vec![false; meters.len()];
    let mut size = 0;

    // greedy start
    let mut uf = UnionFind::new(n);
    for (i, g) in ground.iter().enumerate() {
        if color_used[color_of[i]] {
            continue;
        }
        let (a, b) = graph.endpoints(g.branch);
        if uf.union(a, b) {
            in_set[i] = true;
            color_used[color_of[i]] = true;
            size += 1;
        }
    }

    while size < target {
        // forest of the current set, for component and path queries
        let mut adj: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
        let mut comp = UnionFind::new(n);
        for (i, g) in ground.iter().enumerate() {
            if in_set[i] {
                let (a, b) = graph.endpoints(g.branch);
                adj[a].push((b, i));
                adj[b].push((a, i));
                comp.union(a, b);
            }
        }
        let mut comp_of = vec![0; n];
        for (v, c) in comp_of.iter_mut().enumerate() {
            *c = comp.find(v);
        }
        let is_source = |i: usize| {
            let (a, b) = graph.endpoints(ground[i].branch);
            comp_of[a] != comp_of[b]
        };
        // for each outside element inside a component: the set elements on its cycle
        let mut cycle_of: Vec<Vec<usize>> = vec![Vec::new(); ground.len()];
        for i in 0..ground.len() {
            if in_set[i] || is_source(i) {
                continue;
            }
            let (a, b) = graph.endpoints(ground[i].branch);
            cycle_of[i] = forest_path(&adj, a, b);
        }
        // arcs x -> y (x in set): y's cycle passes through x
        let mut exchanges_into: Vec<Vec<usize>> = vec![Vec::new(); ground.len()];
        for (y, cyc) in cycle_of.iter().enumerate() {
            for &x in cyc {
                exchanges_into[x].push(y);
            }
        }
        let mut prev: Vec<Option<usize>> = vec![None; ground.len()];
        let mut seen = vec![false; ground.len()];
        let mut queue = VecDeque::new();
        for i in 0..ground.len() {
            if !in_set[i] && is_source(i) {
                seen[i] = true;
                queue.push_back(i);
            }
        }
        let mut sink = None;
        while let Some(u) = queue.pop_front() {
            if !in_set[u] {
                if !color_used[color_of[u]] {
                    sink = Some(u);
                    break;
                }
                // y -> x: swapping keeps every color at most once
                for x in 0..ground.len() {
                    if in_set[x] && !seen[x] && color_of[x] == color_of[u] {
                        seen[x] = true;
                        prev[x] = Some(u);
                        queue.push_back(x);
                    }
                }
            } else {
                for &y in &exchanges_into[u] {
                    if !seen[y] {
                        seen[y] = true;
                        prev[y] = Some(u);
                        queue.push_back(y);
                    }
                }
                // outside elements that become sources once u leaves
                for y in 0..ground.len() {
                    if !seen[y] && !in_set[y] && is_source(y) {
                        seen[y] = true;
                        prev[y] = Some(u);
                        queue.push_back(y);
                    }
                }
            }
        }
        let mut cur = sink?;
        loop {
            in_set[cur] = !in_set[cur];
            match prev[cur] {
                Some(p) => cur = p,
                None => break,
            }
        }
        color_used.iter_mut().for_each(|c| *c = false);
        for i in 0..ground.len() {
            if in_set[i] {
                color_used[color_of[i]] = true;
            }
        }
        size += 1;
    }
    Some(
        (0..ground.len())
            .filter(|&i| in_set[i])
            .map(|i| ground[i])
            .collect(),
    )
}

/// Set elements on the forest path from `a` to `b` (same component assumed).
fn forest_path(adj: &[Vec<(usize, usize)>], a: usize, b: usize) -> Vec<usize> {
    if a == b {
        return Vec::new();
    }
    let mut back: Vec<Option<(usize, usize)>> = vec![None; adj.len()];
    let mut seen = vec![false; adj.len()];
    seen[a] = true;
    let mut queue = VecDeque::from([a]);
    while let Some(v) = queue.pop_front() {
        if v == b {
            break;
        }
        for &(w, el) in &adj[v] {
            if !seen[w] {
                seen[w] = true;
                back[w] = Some((v, el));
                queue.push_back(w);
            }
        }
    }
    let mut path = Vec::new();
    let mut v = b;
    while let Some((p, el)) = back[v] {
        path.push(el);
        v = p;
    }
    path
}

/// Pins each root edge in turn, then matches the remaining meters to edges by
/// augmenting paths, rejecting any new edge that would close a cycle.
fn root_pinned_matching(
    graph: &MeasuredGraph,
    meters: &[usize],
    root: usize,
    target: usize,
) -> Option<Vec<TreeEdge>> {
    let (_, edges) = graph.measured_subnetwork(meters);
    let root_edges: Vec<usize> = edges
        .iter()
        .copied()
        .filter(|&e| {
            let (a, b) = graph.endpoints(e);
            a == root || b == root
        })
        .collect();
    'pin: for &pinned in &root_edges {
        for &first in meters.iter().filter(|&&m| graph.measures(m, pinned)) {
            // edge -> meter currently assigned
            let mut owner: Vec<Option<usize>> = vec![None; graph.edge_count()];
            let mut assigned: Vec<Option<usize>> = vec![None; graph.meter_count()];
            let mut uf = UnionFind::new(graph.bus_count());
            let (a, b) = graph.endpoints(pinned);
            uf.union(a, b);
            owner[pinned] = Some(first);
            assigned[first] = Some(pinned);
            let mut size = 1;
            for &m in meters {
                if size == target {
                    break;
                }
                if assigned[m].is_some() {
                    continue;
                }
                let mut visited = vec![false; graph.meter_count()];
                if let Some(new_edge) = augment(graph, m, pinned, &mut owner, &mut assigned, &mut uf, &mut visited) {
                    let (a, b) = graph.endpoints(new_edge);
                    uf.union(a, b);
                    size += 1;
                }
            }
            if size == target {
                let out = (0..graph.edge_count())
                    .filter_map(|e| owner[e].map(|m| TreeEdge { branch: e, meter: m }))
                    .collect();
                return Some(out);
            }
            if root_edges.len() > 1 {
                continue 'pin;
            }
        }
    }
    None
}

/// DFS augmenting path from meter `m`; returns the newly covered edge.
fn augment(
    graph: &MeasuredGraph,
    m: usize,
    pinned: usize,
    owner: &mut [Option<usize>],
    assigned: &mut [Option<usize>],
    uf: &mut UnionFind,
    visited: &mut [bool],
) -> Option<usize> {
    visited[m] = true;
    for &e in graph.measured_edges(m) {
        if owner[e].is_none() {
            let (a, b) = graph.endpoints(e);
            if uf.find(a) != uf.find(b) {
                owner[e] = Some(m);
                assigned[m] = Some(e);
                return Some(e);
            }
        }
    }
    for &e in graph.measured_edges(m) {
        let Some(other) = owner[e] else { continue };
        if visited[other] {
            continue;
        }
        if let Some(found) = augment(graph, other, pinned, owner, assigned, uf, visited) {
            owner[e] = Some(m);
            assigned[m] = Some(e);
            return Some(found);
        }
    }
    None
}

// ---------------------------------------------------------------- orientation

/// Tree oriented away from the root by breadth-first search; children are
/// visited in ascending bus-id order.
#[derive(Clone, Debug)]
pub struct OrientedTree {
    pub root: usize,
    /// BFS order starting at the root.
    pub order: Vec<usize>,
    pub parent: Vec<Option<usize>>,
    /// Index into the tree's edge list of the edge to the parent.
    pub parent_edge: Vec<Option<usize>>,
    pub children: Vec<Vec<usize>>,
}

impl OrientedTree {
    pub fn children(&self, v: usize) -> &[usize] {
        &self.children[v]
    }

    /// All proper descendants of `v`, in BFS order.
    pub fn descendants(&self, v: usize) -> Vec<usize> {
        let mut out = Vec::new();
        let mut queue: VecDeque<usize> = self.children[v].iter().copied().collect();
        while let Some(u) = queue.pop_front() {
            out.push(u);
            queue.extend(self.children[u].iter().copied());
        }
        out
    }
}

pub fn identify_descendants(tree: &FeasibleMeasuredTree, graph: &MeasuredGraph, bus_ids: &[u32]) -> OrientedTree {
    let n = graph.bus_count();
    let mut adj: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
    for (i, e) in tree.edges.iter().enumerate() {
        let (a, b) = graph.endpoints(e.branch);
        adj[a].push((b, i));
        adj[b].push((a, i));
    }
    for list in adj.iter_mut() {
        list.sort_by_key(|&(w, _)| bus_ids[w]);
    }
    let mut parent = vec![None; n];
    let mut parent_edge = vec![None; n];
    let mut children = vec![Vec::new(); n];
    let mut seen = vec![false; n];
    let mut order = vec![tree.root];
    seen[tree.root] = true;
    let mut head = 0;
    while head < order.len() {
        let v = order[head];
        head += 1;
        for &(w, ei) in &adj[v] {
            if !seen[w] {
                seen[w] = true;
                parent[w] = Some(v);
                parent_edge[w] = Some(ei);
                children[v].push(w);
                order.push(w);
            }
        }
    }
    OrientedTree {
        root: tree.root,
        order,
        parent,
        parent_edge,
        children,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::observability::{basic_measurement_set, is_observable_subnetwork, meters_within, StateSet};

    fn ids(sys: &System, buses: &[usize]) -> Vec<u32> {
        buses.iter().map(|&b| sys.network.bus_id(b)).collect()
    }

    fn branch_ids(sys: &System, es: &[usize]) -> Vec<String> {
        es.iter().map(|&e| sys.network.branch(e).id.clone()).collect()
    }

    #[test]
    fn measured_subnetwork_of_fourteen_bus_meters() {
        let sys = fixtures::ieee14().unwrap();
        let (v, e) = measured_subnetwork(&sys, &["r6"]).unwrap();
        assert_eq!(ids(&sys, &v), [5, 6]);
        assert_eq!(branch_ids(&sys, &e), ["e10"]);
        let (v, e) = measured_subnetwork(&sys, &["r12"]).unwrap();
        assert_eq!(ids(&sys, &v), [1, 2, 5]);
        assert_eq!(branch_ids(&sys, &e), ["e1", "e2"]);
        let (v, e) = measured_subnetwork(&sys, &["r6", "r12"]).unwrap();
        assert_eq!(ids(&sys, &v), [1, 2, 5, 6]);
        assert_eq!(branch_ids(&sys, &e), ["e1", "e2", "e10"]);
        assert_eq!(measured_subnetwork(&sys, &[]).unwrap(), (vec![], vec![]));
        assert!(measured_subnetwork(&sys, &["nope"]).is_err());
    }

    #[test]
    fn tree_for_fourteen_bus_basic_set() {
        let sys = fixtures::ieee14().unwrap();
        let basic = sys.meters_by_id(&["r1", "r6", "r12", "r14"]).unwrap();
        for backend in [TreeBackend::Matroid, TreeBackend::MaxFlow] {
            let t = construct_feasible_tree(&sys.graph, &basic, sys.reference(), backend).unwrap();
            t.validate(&sys.graph).unwrap();
            assert_eq!(ids(&sys, &t.vertices), [1, 2, 4, 5, 6]);
            let mut mapping: Vec<(String, String)> = t
                .edges
                .iter()
                .map(|e| (sys.placement.meter(e.meter).id.clone(), sys.network.branch(e.branch).id.clone()))
                .collect();
            mapping.sort_by_key(|(m, _)| m[1..].parse::<u32>().unwrap());
            let expected = [("r1", "e1"), ("r6", "e10"), ("r12", "e2"), ("r14", "e7")];
            assert_eq!(
                mapping,
                expected.map(|(a, b)| (a.to_string(), b.to_string())).to_vec(),
                "{backend:?}"
            );
        }
    }

    #[test]
    fn single_root_flow_meter_gives_one_edge_tree() {
        let sys = fixtures::five_bus().unwrap();
        let r1 = sys.placement.meter_index("r1").unwrap();
        let t = construct_feasible_tree(&sys.graph, &[r1], sys.reference(), TreeBackend::Matroid).unwrap();
        assert_eq!(t.edges, vec![TreeEdge { branch: 0, meter: r1 }]);
    }

    #[test]
    fn insufficient_meters_yield_no_tree() {
        let sys = fixtures::five_bus().unwrap();
        let r4 = sys.placement.meter_index("r4").unwrap();
        assert!(construct_feasible_tree(&sys.graph, &[r4], sys.reference(), TreeBackend::Matroid).is_none());
    }

    #[test]
    fn trees_from_random_basic_sets_are_valid() {
        let sys = fixtures::ieee14().unwrap();
        let all = sys.all_states();
        for seed in 0..50 {
            let basic = basic_measurement_set(&sys.jacobian, &sys.all_meters(), &all, Some(seed), sys.eps).unwrap();
            let t = construct_feasible_tree(&sys.graph, &basic, sys.reference(), TreeBackend::Matroid).unwrap();
            t.validate(&sys.graph).unwrap();
            assert_eq!(t.meters(), basic);
            assert!(is_observable_subnetwork(&sys, &t.meters()));
        }
    }

    #[test]
    fn basic_set_of_small_subnetwork() {
        let sys = fixtures::ieee14().unwrap();
        let mut inside = vec![false; 14];
        for b in [1, 2, 4, 5, 6] {
            inside[sys.network.bus_index(b).unwrap()] = true;
        }
        let cands = meters_within(&sys.jacobian, sys.all_meters(), &inside);
        let s = StateSet::from_bus_ids(&sys.network, &[2, 4, 5, 6]).unwrap();
        let basic = basic_measurement_set(&sys.jacobian, &cands, &s, None, sys.eps).unwrap();
        assert_eq!(basic.len(), 4);
        assert!(is_observable_subnetwork(&sys, &basic));
    }

    #[test]
    fn descendants_of_pruning_example() {
        let sys = fixtures::pruning13().unwrap();
        let tree = fixtures::pruning13_tree(&sys).unwrap();
        tree.validate(&sys.graph).unwrap();
        let o = identify_descendants(&tree, &sys.graph, sys.network.bus_ids());
        let b = |id: u32| sys.network.bus_index(id).unwrap();
        assert_eq!(ids(&sys, o.children(b(4))), [6, 7]);
        let mut d = ids(&sys, &o.descendants(b(4)));
        d.sort_unstable();
        assert_eq!(d, (6..=13).collect::<Vec<u32>>());
        assert!(o.children(b(13)).is_empty());
        assert!(o.descendants(b(13)).is_empty());
        assert_eq!(o.descendants(b(1)).len(), tree.vertices.len() - 1);
    }
}
