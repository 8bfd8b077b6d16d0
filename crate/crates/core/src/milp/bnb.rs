//! LP-based branch-and-bound for small binary programs.
//!
//! Relaxations are solved by `minilp`; children reuse the parent's simplex
//! state through `fix_var`, and separated cuts are added with warm starts.
//! The objective is assumed integral on integer points, which lets a node be
//! pruned as soon as `ceil(bound) >= incumbent`.

use std::rc::Rc;
use std::time::{Duration, Instant};

use minilp::{ComparisonOp, OptimizationDirection, Problem, Variable};

/// Values within this distance of an integer count as integral.
pub(crate) const INT_TOL: f64 = 1e-6;
/// Slack allowed when rounding an LP bound up to the next integer.
const BOUND_TOL: f64 = 1e-6;
/// Every this many nodes the open node with the lowest bound is taken next.
const RESTART_EVERY: u64 = 1000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Sense {
    Le,
    Ge,
    Eq,
}

#[derive(Clone, Debug)]
pub(crate) struct VarSpec {
    pub obj: f64,
    pub lb: f64,
    pub ub: f64,
    /// `None` for continuous variables; otherwise the branching class
    /// (lower classes are branched on first).
    pub class: Option<u8>,
}

#[derive(Clone, Debug)]
pub(crate) struct RowSpec {
    pub coefs: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

impl RowSpec {
    pub(crate) fn activity(&self, x: &[f64]) -> f64 {
        self.coefs.iter().map(|&(v, c)| c * x[v]).sum()
    }

    pub(crate) fn violation(&self, x: &[f64]) -> f64 {
        let a = self.activity(x);
        match self.sense {
            Sense::Le => a - self.rhs,
            Sense::Ge => self.rhs - a,
            Sense::Eq => (a - self.rhs).abs(),
        }
    }
}

#[derive(Clone, Debug, Default)]
pub(crate) struct Model {
    pub vars: Vec<VarSpec>,
    pub rows: Vec<RowSpec>,
}

impl Model {
    pub(crate) fn add_var(&mut self, v: VarSpec) -> usize {
        self.vars.push(v);
        self.vars.len() - 1
    }

    pub(crate) fn add_row(&mut self, coefs: Vec<(usize, f64)>, sense: Sense, rhs: f64) {
        self.rows.push(RowSpec { coefs, sense, rhs });
    }

    pub(crate) fn objective(&self, x: &[f64]) -> f64 {
        self.vars.iter().zip(x).map(|(v, val)| v.obj * val).sum()
    }

    /// Whether `x` satisfies bounds, rows and integrality within `tol`.
    pub(crate) fn is_feasible(&self, x: &[f64], tol: f64) -> bool {
        x.len() == self.vars.len()
            && self.vars.iter().zip(x).all(|(v, &val)| {
                val >= v.lb - tol
                    && val <= v.ub + tol
                    && (v.class.is_none() || (val - val.round()).abs() <= tol)
            })
            && self.rows.iter().all(|r| r.violation(x) <= tol)
    }
}

/// Supplies valid inequalities violated by a relaxation optimum.
pub(crate) trait Separator {
    fn separate(&self, x: &[f64]) -> Vec<RowSpec>;
}

pub(crate) struct NoCuts;

impl Separator for NoCuts {
    fn separate(&self, _: &[f64]) -> Vec<RowSpec> {
        Vec::new()
    }
}

#[derive(Clone, Debug)]
pub(crate) struct Config {
    pub node_budget: u64,
    pub time_budget: Duration,
    pub root_cut_rounds: usize,
    pub node_cut_rounds: usize,
}

#[derive(Clone, Debug)]
pub(crate) struct Outcome {
    /// Best integer point and its objective.
    pub best: Option<(f64, Vec<f64>)>,
    pub nodes: u64,
    /// True when the search closed: `best` is optimal or the model is infeasible.
    pub optimal: bool,
    pub root_bound: f64,
    /// Lowest bound over open nodes when the search stopped.
    pub lower_bound: f64,
    pub cuts: usize,
}

struct Node {
    parent: Rc<minilp::Solution>,
    /// Fixings still to apply on top of the parent solution.
    fix: Option<(usize, f64)>,
    bound: f64,
}

struct Search<'a, S: Separator> {
    model: &'a Model,
    sep: &'a S,
    vars: Vec<Variable>,
    pool: Vec<RowSpec>,
    best: Option<(f64, Vec<f64>)>,
}

impl<S: Separator> Search<'_, S> {
    fn values(&self, sol: &minilp::Solution) -> Vec<f64> {
        self.vars.iter().map(|&v| sol[v]).collect()
    }

    fn cutoff(&self) -> f64 {
        self.best.as_ref().map_or(f64::INFINITY, |b| b.0)
    }

    fn pruned(&self, bound: f64) -> bool {
        (bound - BOUND_TOL).ceil() >= self.cutoff() - 0.5
    }

    fn add_rows(&self, mut sol: minilp::Solution, rows: &[RowSpec]) -> Option<minilp::Solution> {
        for r in rows {
            let expr: Vec<(Variable, f64)> = r.coefs.iter().map(|&(v, c)| (self.vars[v], c)).collect();
            sol = sol.add_constraint(&expr[..], op(r.sense), r.rhs).ok()?;
        }
        Some(sol)
    }

    /// Cut loop on one node; returns the final relaxation, or `None` if it
    /// became infeasible or can be pruned.
    fn strengthen(&mut self, mut sol: minilp::Solution, rounds: usize) -> Option<minilp::Solution> {
        for _ in 0..rounds {
            if self.pruned(sol.objective()) {
                return None;
            }
            let x = self.values(&sol);
            let cuts = self.sep.separate(&x);
            if cuts.is_empty() {
                break;
            }
            sol = self.add_rows(sol, &cuts)?;
            self.pool.extend(cuts);
        }
        Some(sol)
    }

    fn branch_var(&self, x: &[f64]) -> Option<usize> {
        let mut best: Option<(u8, f64, usize)> = None;
        for (i, v) in self.model.vars.iter().enumerate() {
            let Some(class) = v.class else { continue };
            let frac = x[i] - x[i].floor();
            if frac <= INT_TOL || frac >= 1.0 - INT_TOL {
                continue;
            }
            let dist = (frac - 0.5).abs();
            let better = match best {
                None => true,
                Some((c, d, _)) => class < c || (class == c && dist < d - 1e-12),
            };
            if better {
                best = Some((class, dist, i));
            }
        }
        best.map(|b| b.2)
    }
}

fn op(s: Sense) -> ComparisonOp {
    match s {
        Sense::Le => ComparisonOp::Le,
        Sense::Ge => ComparisonOp::Ge,
        Sense::Eq => ComparisonOp::Eq,
    }
}

pub(crate) fn solve<S: Separator>(
    model: &Model,
    sep: &S,
    cfg: &Config,
    incumbent: Option<Vec<f64>>,
) -> Outcome {
    let start = Instant::now();
    let mut lp = Problem::new(OptimizationDirection::Minimize);
    let vars: Vec<Variable> = model.vars.iter().map(|v| lp.add_var(v.obj, (v.lb, v.ub))).collect();
    for r in &model.rows {
        let expr: Vec<(Variable, f64)> = r.coefs.iter().map(|&(v, c)| (vars[v], c)).collect();
        lp.add_constraint(&expr[..], op(r.sense), r.rhs);
    }
    let mut search = Search {
        model,
        sep,
        vars,
        pool: Vec::new(),
        best: incumbent
            .filter(|x| model.is_feasible(x, 1e-6))
            .map(|x| (model.objective(&x).round(), x)),
    };
    let closed = |search: &Search<S>, nodes: u64, root_bound: f64, lower: f64| Outcome {
        best: search.best.clone(),
        nodes,
        optimal: true,
        root_bound,
        lower_bound: lower,
        cuts: search.pool.len(),
    };

    let Ok(root) = lp.solve() else {
        return closed(&search, 1, f64::INFINITY, f64::INFINITY);
    };
    let Some(root) = search.strengthen(root, cfg.root_cut_rounds) else {
        let b = search.cutoff();
        return closed(&search, 1, b, b);
    };
    let root_bound = root.objective();
    let mut open = vec![Node {
        parent: Rc::new(root),
        fix: None,
        bound: root_bound,
    }];
    let mut nodes = 0u64;
    while !open.is_empty() {
        if nodes >= cfg.node_budget || start.elapsed() > cfg.time_budget {
            let lower = open.iter().map(|n| n.bound).fold(search.cutoff(), f64::min);
            return Outcome {
                best: search.best.clone(),
                nodes,
                optimal: false,
                root_bound,
                lower_bound: lower,
                cuts: search.pool.len(),
            };
        }
        let pick = if nodes > 0 && nodes % RESTART_EVERY == 0 {
            open.iter()
                .enumerate()
                .min_by(|a, b| a.1.bound.total_cmp(&b.1.bound))
                .map(|(i, _)| i)
                .unwrap()
        } else {
            open.len() - 1
        };
        let node = open.swap_remove(pick);
        nodes += 1;
        if search.pruned(node.bound) {
            continue;
        }
        let sol = match node.fix {
            None => Some(Rc::try_unwrap(node.parent).unwrap_or_else(|rc| (*rc).clone())),
            Some((v, val)) => {
                let parent = Rc::try_unwrap(node.parent).unwrap_or_else(|rc| (*rc).clone());
                parent.fix_var(search.vars[v], val).ok()
            }
        };
        let Some(sol) = sol else { continue };
        let rounds = if nodes == 1 { 0 } else { cfg.node_cut_rounds };
        let Some(sol) = search.strengthen(sol, rounds) else { continue };
        let bound = sol.objective();
        if search.pruned(bound) {
            continue;
        }
        let x = search.values(&sol);
        match search.branch_var(&x) {
            None => {
                let mut x = x;
                for (val, v) in x.iter_mut().zip(&model.vars) {
                    if v.class.is_some() {
                        *val = val.round();
                    }
                }
                let obj = model.objective(&x).round();
                if obj < search.cutoff() {
                    log::debug!("bnb: incumbent {obj} at node {nodes}");
                    search.best = Some((obj, x));
                }
            }
            Some(v) => {
                let parent = Rc::new(sol);
                // pushed last is explored first: up-branch
                open.push(Node {
                    parent: Rc::clone(&parent),
                    fix: Some((v, 0.0)),
                    bound,
                });
                open.push(Node {
                    parent,
                    fix: Some((v, 1.0)),
                    bound,
                });
            }
        }
    }
    let b = search.cutoff();
    closed(&search, nodes, root_bound, b)
}
