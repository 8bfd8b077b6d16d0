//! Minimum measured Steiner arborescence as a mixed-integer program.
//!
//! Every branch becomes two opposite arcs. Binary `x` marks arcs in the
//! arborescence, continuous `y` carries one unit of commodity from the
//! reference to every target and to every bus seen by a used injection meter,
//! and binary `z` maps an injection meter to one of its incident branches.
//! The objective counts arcs, with mapped injections as a tie-breaker that is
//! always dominated by the arc count.

mod bnb;
mod cuts;
mod lpfile;

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use crate::error::{Error, Result};
use crate::graph::{identify_descendants, FeasibleMeasuredTree, TreeEdge};
use crate::grid::MeterKind;
use crate::observability::StateSet;
use crate::plan::{Solution, SolverStats};
use crate::system::System;

use bnb::{Model, Sense, VarSpec};

pub use lpfile::write_lp;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ArcVar {
    pub branch: usize,
    pub tail: usize,
    pub head: usize,
}

/// Injection meter at `bus` mapped to `branch`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct InjectionVar {
    pub meter: usize,
    pub bus: usize,
    pub branch: usize,
}

#[derive(Clone, Debug)]
pub struct BuildOptions<'a> {
    /// Adds `x_ij + x_ji <= 1` for every branch.
    pub aux_cut: bool,
    /// Keeps the `z / w` tie-breaking term in the objective.
    pub secondary_term: bool,
    /// Tree whose arcs and injection mappings are pinned to 1.
    pub fixed_tree: Option<&'a FeasibleMeasuredTree>,
}

impl Default for BuildOptions<'_> {
    fn default() -> Self {
        BuildOptions {
            aux_cut: true,
            secondary_term: true,
            fixed_tree: None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct MmsaInstance {
    pub targets: StateSet,
    /// Arc `2b` runs from → to on branch `b`, arc `2b + 1` the other way.
    pub arcs: Vec<ArcVar>,
    pub injections: Vec<InjectionVar>,
    /// Big-M constant, `|A| + |M| + |D| + 1`.
    pub w: f64,
    /// Whether a flow meter (possibly PMU-derived) sits on each branch.
    pub flow_metered: Vec<bool>,
    /// Arc indices pinned to 1.
    pub fixed_arcs: Vec<usize>,
    /// Injection-variable indices pinned to 1.
    pub fixed_injections: Vec<usize>,
    pub secondary_term: bool,
    reference: usize,
    bus_count: usize,
    /// Measured vertices of each injection meter that has variables, with
    /// the indices of its variables.
    injection_reach: Vec<(Vec<usize>, Vec<usize>)>,
    model: Model,
}

impl MmsaInstance {
    pub fn x_var(&self, arc: usize) -> usize {
        arc
    }

    pub fn y_var(&self, arc: usize) -> usize {
        self.arcs.len() + arc
    }

    pub fn z_var(&self, inj: usize) -> usize {
        2 * self.arcs.len() + inj
    }

    pub fn var_count(&self) -> usize {
        self.model.vars.len()
    }

    pub fn row_count(&self) -> usize {
        self.model.rows.len()
    }

    fn arc_of(&self, branch: usize, tail: usize) -> usize {
        if self.arcs[2 * branch].tail == tail {
            2 * branch
        } else {
            2 * branch + 1
        }
    }
}

pub fn build_instance(sys: &System, targets: &StateSet, opts: &BuildOptions) -> Result<MmsaInstance> {
    let net = &sys.network;
    let r = net.reference();
    let n = net.bus_count();
    let mut arcs = Vec::with_capacity(2 * net.branches().len());
    for (b, br) in net.branches().iter().enumerate() {
        arcs.push(ArcVar {
            branch: b,
            tail: br.from,
            head: br.to,
        });
        arcs.push(ArcVar {
            branch: b,
            tail: br.to,
            head: br.from,
        });
    }
    let flow_metered: Vec<bool> = (0..net.branches().len())
        .map(|b| sys.placement.flow_meters_on(b).next().is_some())
        .collect();
    let mut injections = Vec::new();
    let mut injection_reach = Vec::new();
    let mut z_of_meter = vec![Vec::new(); sys.placement.len()];
    for (m, meter) in sys.placement.meters().iter().enumerate() {
        if let MeterKind::Injection { bus } = meter.kind {
            let mut own = Vec::new();
            for b in net.real_incident(bus) {
                own.push(injections.len());
                injections.push(InjectionVar { meter: m, bus, branch: b });
            }
            if !own.is_empty() {
                injection_reach.push((sys.graph.measured_vertices(m).to_vec(), own.clone()));
            }
            z_of_meter[m] = own;
        }
    }
    let a = arcs.len();
    let w = (a + sys.placement.len() + targets.len() + 1) as f64;

    let mut fixed_arcs = Vec::new();
    let mut fixed_injections = Vec::new();
    if let Some(tree) = opts.fixed_tree {
        tree.validate(&sys.graph).map_err(Error::Invalid)?;
        if tree.root != r {
            return Err(Error::Invalid("prior tree is not rooted at the reference".into()));
        }
        let o = identify_descendants(tree, &sys.graph, net.bus_ids());
        for &v in &o.order[1..] {
            let e = tree.edges[o.parent_edge[v].unwrap()];
            let p = o.parent[v].unwrap();
            let arc = if arcs[2 * e.branch].tail == p { 2 * e.branch } else { 2 * e.branch + 1 };
            fixed_arcs.push(arc);
            if sys.graph.is_injection(e.meter) {
                let z = z_of_meter[e.meter]
                    .iter()
                    .copied()
                    .find(|&z| injections[z].branch == e.branch)
                    .ok_or_else(|| Error::Invalid("prior tree maps an injection meter to a pseudo branch".into()))?;
                fixed_injections.push(z);
            }
        }
        fixed_arcs.sort_unstable();
        fixed_injections.sort_unstable();
    }

    // variables: x (arcs), y (arcs), z (injection mappings)
    let mut model = Model::default();
    let mut z_on_branch = vec![Vec::new(); net.branches().len()];
    for (k, z) in injections.iter().enumerate() {
        z_on_branch[z.branch].push(k);
    }
    for arc in &arcs {
        let usable = flow_metered[arc.branch] || !z_on_branch[arc.branch].is_empty();
        model.add_var(VarSpec {
            obj: w,
            lb: 0.0,
            ub: if usable { 1.0 } else { 0.0 },
            class: Some(0),
        });
    }
    for _ in &arcs {
        model.add_var(VarSpec {
            obj: 0.0,
            lb: 0.0,
            ub: f64::INFINITY,
            class: None,
        });
    }
    for _ in &injections {
        model.add_var(VarSpec {
            obj: if opts.secondary_term { 1.0 } else { 0.0 },
            lb: 0.0,
            ub: 1.0,
            class: Some(1),
        });
    }
    for &arc in &fixed_arcs {
        model.vars[arc].lb = 1.0;
    }
    for &z in &fixed_injections {
        model.vars[2 * a + z].lb = 1.0;
    }

    // w x - y >= 0
    for i in 0..a {
        model.add_row(vec![(i, w), (a + i, -1.0)], Sense::Ge, 0.0);
    }
    // x - z_i - z_j <= 1_E
    for (i, arc) in arcs.iter().enumerate() {
        let mut coefs = vec![(i, 1.0)];
        coefs.extend(z_on_branch[arc.branch].iter().map(|&z| (2 * a + z, -1.0)));
        let rhs = if flow_metered[arc.branch] { 1.0 } else { 0.0 };
        model.add_row(coefs, Sense::Le, rhs);
    }
    // sum_j z_ij <= 1
    for (_, own) in &injection_reach {
        model.add_row(own.iter().map(|&z| (2 * a + z, 1.0)).collect(), Sense::Le, 1.0);
    }
    // inflow - outflow - (pseudo demand from z) = [j in D]
    let mut demand_terms: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for (reach, own) in &injection_reach {
        for &v in reach {
            for &z in own {
                demand_terms[v].push((2 * a + z, -1.0));
            }
        }
    }
    for (j, terms) in demand_terms.iter().enumerate() {
        if j == r {
            continue;
        }
        let mut coefs = Vec::new();
        for (i, arc) in arcs.iter().enumerate() {
            if arc.head == j {
                coefs.push((a + i, 1.0));
            }
            if arc.tail == j {
                coefs.push((a + i, -1.0));
            }
        }
        coefs.extend(terms.iter().copied());
        let rhs = if targets.contains(j) { 1.0 } else { 0.0 };
        model.add_row(coefs, Sense::Eq, rhs);
    }
    // nothing flows back into the reference
    for (i, arc) in arcs.iter().enumerate() {
        if arc.head == r {
            model.vars[i].ub = 0.0;
        }
    }
    if opts.aux_cut {
        for b in 0..net.branches().len() {
            model.add_row(vec![(2 * b, 1.0), (2 * b + 1, 1.0)], Sense::Le, 1.0);
        }
    }
    Ok(MmsaInstance {
        targets: targets.clone(),
        arcs,
        injections,
        w,
        flow_metered,
        fixed_arcs,
        fixed_injections,
        secondary_term: opts.secondary_term,
        reference: r,
        bus_count: n,
        injection_reach,
        model,
    })
}

#[derive(Clone, Debug)]
pub struct Limits {
    pub node_budget: u64,
    pub time_budget: Duration,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            node_budget: 1_000_000,
            time_budget: Duration::from_secs(600),
        }
    }
}

#[derive(Clone, Debug)]
pub struct SolveOptions<'a> {
    pub limits: Limits,
    /// Separates directed-cut inequalities at every node.
    pub separate_cuts: bool,
    /// Feasible tree used as the starting incumbent.
    pub warm_start: Option<&'a FeasibleMeasuredTree>,
}

impl Default for SolveOptions<'_> {
    fn default() -> Self {
        SolveOptions {
            limits: Limits::default(),
            separate_cuts: true,
            warm_start: None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct MilpSolution {
    /// Value of the objective as stated: arcs plus mapped injections over `w`.
    pub objective: f64,
    pub arcs: Vec<usize>,
    pub injections: Vec<usize>,
    pub nodes: u64,
    pub optimal: bool,
    /// Relaxation bound at the root, in the same units as `objective`.
    pub root_bound: f64,
    pub lower_bound: f64,
    pub cuts: usize,
    pub wall: Duration,
}

impl MilpSolution {
    pub fn arc_count(&self) -> usize {
        self.arcs.len()
    }
}

pub fn solve_exact(inst: &MmsaInstance, opts: &SolveOptions) -> Result<MilpSolution> {
    let start = Instant::now();
    let scale = inst.w;
    if inst.targets.is_empty() && inst.fixed_arcs.is_empty() {
        return Ok(MilpSolution {
            objective: 0.0,
            arcs: Vec::new(),
            injections: Vec::new(),
            nodes: 0,
            optimal: true,
            root_bound: 0.0,
            lower_bound: 0.0,
            cuts: 0,
            wall: start.elapsed(),
        });
    }
    let cfg = bnb::Config {
        node_budget: opts.limits.node_budget,
        time_budget: opts.limits.time_budget,
        root_cut_rounds: if opts.separate_cuts { 200 } else { 0 },
        node_cut_rounds: if opts.separate_cuts { 10 } else { 0 },
    };
    let incumbent = opts.warm_start.and_then(|t| assignment_from_tree(inst, t));
    let out = if opts.separate_cuts {
        let sep = cuts::DirectedCuts::new(inst);
        bnb::solve(&inst.model, &sep, &cfg, incumbent)
    } else {
        bnb::solve(&inst.model, &bnb::NoCuts, &cfg, incumbent)
    };
    log::debug!(
        "milp: {} nodes, {} cuts, root bound {:.4}, optimal {}",
        out.nodes,
        out.cuts,
        out.root_bound / scale,
        out.optimal
    );
    let Some((obj, x)) = out.best else {
        return Err(if out.optimal {
            Error::Infeasible("no measured Steiner arborescence reaches the targets".into())
        } else {
            Error::Infeasible("budget exhausted before any feasible tree was found".into())
        });
    };
    let a = inst.arcs.len();
    Ok(MilpSolution {
        objective: obj / scale,
        arcs: (0..a).filter(|&i| x[i] > 0.5).collect(),
        injections: (0..inst.injections.len()).filter(|&k| x[2 * a + k] > 0.5).collect(),
        nodes: out.nodes,
        optimal: out.optimal,
        root_bound: out.root_bound / scale,
        lower_bound: out.lower_bound / scale,
        cuts: out.cuts,
        wall: start.elapsed(),
    })
}

/// MILP point encoding `tree`, or `None` if it is inconsistent with the
/// instance (fixed variables, targets or injection mappings).
pub(crate) fn assignment_from_tree(inst: &MmsaInstance, tree: &FeasibleMeasuredTree) -> Option<Vec<f64>> {
    if tree.root != inst.reference {
        return None;
    }
    let a = inst.arcs.len();
    let mut x = vec![0.0; inst.var_count()];
    let mut parent_arc = vec![None; inst.bus_count];
    let mut adj: Vec<Vec<(usize, usize)>> = vec![Vec::new(); inst.bus_count];
    for (i, e) in tree.edges.iter().enumerate() {
        let arc = &inst.arcs[2 * e.branch];
        adj[arc.tail].push((arc.head, i));
        adj[arc.head].push((arc.tail, i));
    }
    let mut order = vec![tree.root];
    let mut seen = vec![false; inst.bus_count];
    seen[tree.root] = true;
    let mut head = 0;
    while head < order.len() {
        let v = order[head];
        head += 1;
        for &(u, i) in &adj[v] {
            if !seen[u] {
                seen[u] = true;
                let e = tree.edges[i];
                let arc = inst.arc_of(e.branch, v);
                parent_arc[u] = Some(arc);
                x[arc] = 1.0;
                if let Some(k) = inst
                    .injections
                    .iter()
                    .position(|z| z.meter == e.meter && z.branch == e.branch)
                {
                    x[2 * a + k] = 1.0;
                }
                order.push(u);
            }
        }
    }
    let mut demand = vec![0.0; inst.bus_count];
    for t in inst.targets.iter() {
        demand[t] += 1.0;
    }
    for (reach, own) in &inst.injection_reach {
        let used: f64 = own.iter().map(|&k| x[2 * a + k]).sum();
        for &v in reach {
            demand[v] += used;
        }
    }
    for &v in order.iter().rev() {
        if let Some(arc) = parent_arc[v] {
            let below = demand[v];
            x[a + arc] = below;
            demand[inst.arcs[arc].tail] += below;
        }
    }
    inst.model.is_feasible(&x, 1e-6).then_some(x)
}

/// Turns the arcs and injection mappings of a solution into a meter set and
/// its feasible measured tree.
pub fn extract_plan(sys: &System, inst: &MmsaInstance, sol: &MilpSolution) -> Result<Solution> {
    let mut edges = Vec::with_capacity(sol.arcs.len());
    let mut branches = BTreeSet::new();
    for &arc in &sol.arcs {
        let b = inst.arcs[arc].branch;
        if !branches.insert(b) {
            return Err(Error::Verification(format!("branch {b} selected in both directions")));
        }
        let by_injection = sol.injections.iter().map(|&k| inst.injections[k]).find(|z| z.branch == b);
        let meter = match by_injection {
            Some(z) => z.meter,
            None => {
                let mut on = sys.placement.flow_meters_on(b).collect::<Vec<_>>();
                on.sort_by_key(|&m| sys.placement.meter(m).is_pmu());
                *on
                    .first()
                    .ok_or_else(|| Error::Verification(format!("branch {b} selected without a meter")))?
            }
        };
        edges.push(TreeEdge { branch: b, meter });
    }
    let tree = FeasibleMeasuredTree::from_edges(inst.reference, &sys.graph, edges);
    tree.validate(&sys.graph).map_err(Error::Verification)?;
    if let Some(t) = inst.targets.iter().find(|&t| !tree.contains_vertex(t)) {
        return Err(Error::Verification(format!(
            "target bus {} missing from the arborescence",
            sys.network.bus_id(t)
        )));
    }
    let meters = tree.meters();
    Ok(Solution {
        meters,
        tree,
        optimal: sol.optimal,
        stats: SolverStats {
            iterations: sol.nodes,
            rounds: sol.cuts as u64,
            wall_ms: sol.wall.as_secs_f64() * 1e3,
            lower_bound: (!sol.optimal).then_some(sol.lower_bound.floor()),
        },
    })
}

#[derive(Clone, Debug)]
pub struct MilpOptions {
    pub aux_cut: bool,
    pub separate_cuts: bool,
    pub secondary_term: bool,
    /// Seeds the search with a tree-pruning solution of this many trees
    /// (0 disables the warm start).
    pub warm_start_k: usize,
    pub limits: Limits,
}

impl Default for MilpOptions {
    fn default() -> Self {
        MilpOptions {
            aux_cut: true,
            separate_cuts: true,
            secondary_term: true,
            warm_start_k: 3,
            limits: Limits::default(),
        }
    }
}

/// Builds, solves and extracts in one go.
pub fn solve_milp(sys: &System, targets: &StateSet, opts: &MilpOptions) -> Result<Solution> {
    let inst = build_instance(
        sys,
        targets,
        &BuildOptions {
            aux_cut: opts.aux_cut,
            secondary_term: opts.secondary_term,
            fixed_tree: None,
        },
    )?;
    let warm = if opts.warm_start_k > 0 && !targets.is_empty() {
        crate::tph::solve_tph(sys, targets, &crate::tph::TphOptions::new(opts.warm_start_k, 0))
            .ok()
            .map(|s| s.tree)
    } else {
        None
    };
    let sol = solve_exact(
        &inst,
        &SolveOptions {
            limits: opts.limits.clone(),
            separate_cuts: opts.separate_cuts,
            warm_start: warm.as_ref(),
        },
    )?;
    extract_plan(sys, &inst, &sol)
}

/// Grows `prior` into a tree that also reaches `targets`; the prior arcs and
/// injection mappings stay fixed.
pub fn solve_incremental(
    sys: &System,
    prior: &FeasibleMeasuredTree,
    targets: &StateSet,
    opts: &MilpOptions,
) -> Result<Solution> {
    let prior_targets: Vec<usize> = prior.vertices.iter().copied().filter(|&v| v != sys.reference()).collect();
    let all = targets.union(&StateSet::from_indices(&sys.network, prior_targets)?);
    let demanded = StateSet::from_indices(&sys.network, targets.iter())?;
    let inst = build_instance(
        sys,
        &demanded,
        &BuildOptions {
            aux_cut: opts.aux_cut,
            secondary_term: opts.secondary_term,
            fixed_tree: Some(prior),
        },
    )?;
    let sol = solve_exact(
        &inst,
        &SolveOptions {
            limits: opts.limits.clone(),
            separate_cuts: opts.separate_cuts,
            warm_start: None,
        },
    )?;
    let out = extract_plan(sys, &inst, &sol)?;
    debug_assert!(all.iter().all(|v| out.tree.contains_vertex(v)));
    Ok(out)
}

#[cfg(test)]
mod tests;
