use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{anyhow, Context};
use clap::Args;
use serde_json::{json, Value};

use meterguard::experiment::{run_trials, summarize, TrialSpec};
use meterguard::graph::{construct_feasible_tree, TreeBackend};
use meterguard::milp::{build_instance, solve_incremental, solve_milp, write_lp, BuildOptions, Limits, MilpOptions};
use meterguard::observability::{
    basic_measurement_set, bdd_demo, is_observable_subnetwork, rank_of, synthesize_attack,
};
use meterguard::plan::{parse_plan, Status, Verification};
use meterguard::sve::{solve_sve, SveOptions};
use meterguard::tph::{run_tph, TphOptions};
use meterguard::{Method, ProtectionPlan, StateSet};

use crate::io::{emit, emit_json, load_system, parse_targets, read, read_meter_list};
use crate::{CmdResult, Failure, Format, Global};

fn fail(code: u8, error: anyhow::Error) -> Failure {
    Failure { code, error }
}

pub fn jacobian(g: &Global) -> CmdResult {
    let sys = load_system(g)?;
    let h = &sys.jacobian;
    let cols: Vec<u32> = (0..h.cols()).map(|c| sys.network.bus_id(h.bus_of(c))).collect();
    let meters = sys.meter_ids(&sys.all_meters());
    match g.format.unwrap_or(Format::Json) {
        Format::Json => emit_json(
            g,
            &json!({
                "buses": cols,
                "meters": meters,
                "rows": h.matrix.to_rows(),
            }),
        )?,
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            let mut header = vec!["meter".to_string()];
            header.extend(cols.iter().map(|b| b.to_string()));
            w.write_record(&header)?;
            for (m, id) in meters.iter().enumerate() {
                let mut rec = vec![id.clone()];
                rec.extend(h.matrix.row(m).iter().map(|v| v.to_string()));
                w.write_record(&rec)?;
            }
            emit(g, &String::from_utf8(w.into_inner()?)?)?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

#[derive(Args, Debug)]
pub struct CheckArgs {
    /// Comma-separated meter ids to check.
    #[arg(long, value_delimiter = ',', conflicts_with = "plan")]
    pub meters: Option<Vec<String>>,
    /// Plan JSON to re-verify.
    #[arg(long)]
    pub plan: Option<PathBuf>,
    /// Target buses (comma-separated ids or `all`).
    #[arg(short = 'D', long = "targets", value_delimiter = ',')]
    pub targets: Option<Vec<String>>,
}

pub fn check(g: &Global, a: &CheckArgs) -> CmdResult {
    let sys = load_system(g)?;
    let all = sys.all_meters();
    let states: Vec<usize> = sys.network.states().collect();
    let rank = rank_of(&sys.jacobian, &all, &states, sys.eps);
    let mut report = json!({
        "observable": rank == states.len(),
        "rank": rank,
        "states": states.len(),
        "meters": all.len(),
    });
    if let Some(path) = &a.plan {
        let pj = parse_plan(&read(path)?)?;
        let plan = ProtectionPlan::from_json(&sys, &pj)?;
        let tree_ok = plan.tree.validate(&sys.graph);
        report["plan"] = json!({
            "method": plan.method,
            "claimed_status": pj.status,
            "status": plan.status,
            "targets": plan.targets.bus_ids(&sys.network),
            "size": plan.len(),
            "verification": plan.verification,
            "tree_valid": tree_ok.is_ok(),
        });
        emit_json(g, &report)?;
        if plan.status == Status::Failed || tree_ok.is_err() {
            let why = tree_ok.err().unwrap_or_else(|| "rank condition or attack check failed".into());
            return Err(fail(3, anyhow!("plan does not verify: {why}")));
        }
        return Ok(ExitCode::SUCCESS);
    }
    if let Some(ids) = &a.meters {
        let mut meters = sys.meters_by_id(ids)?;
        meters.sort_unstable();
        meters.dedup();
        let targets = match &a.targets {
            Some(t) => parse_targets(&sys, t)?,
            None => StateSet::empty(),
        };
        let (vertices, edges) = sys.graph.measured_subnetwork(&meters);
        let v = Verification::run(&sys, &meters, &targets);
        report["selection"] = json!({
            "meters": sys.meter_ids(&meters),
            "targets": targets.bus_ids(&sys.network),
            "protected": v.passed(),
            "verification": v,
            "measured_vertices": vertices.iter().map(|&b| sys.network.bus_id(b)).collect::<Vec<_>>(),
            "measured_edges": edges.iter().map(|&e| sys.network.branch(e).id.clone()).collect::<Vec<_>>(),
            "observable_subnetwork": is_observable_subnetwork(&sys, &meters),
        });
    } else if a.targets.is_some() {
        return Err(fail(2, anyhow!("-D needs --meters")));
    }
    emit_json(g, &report)?;
    Ok(ExitCode::SUCCESS)
}

#[derive(Args, Debug)]
pub struct ProtectArgs {
    #[arg(long, default_value = "milp")]
    pub method: Method,
    /// Target buses (comma-separated ids or `all`).
    #[arg(short = 'D', long = "targets", value_delimiter = ',', required = true)]
    pub targets: Vec<String>,
    /// Trees per round for the heuristic.
    #[arg(long, default_value_t = 5)]
    pub k: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Extend the tree of an earlier plan (milp only).
    #[arg(long)]
    pub incremental: Option<PathBuf>,
    /// Write the MILP in CPLEX LP format (milp only).
    #[arg(long)]
    pub dump_lp: Option<PathBuf>,
    #[arg(long, default_value_t = 1_000_000)]
    pub node_budget: u64,
    /// Seconds.
    #[arg(long, default_value_t = 600.0)]
    pub time_budget: f64,
    /// Skip directed-cut separation.
    #[arg(long)]
    pub no_cuts: bool,
    /// Drop the two-direction inequality x_ij + x_ji <= 1.
    #[arg(long)]
    pub no_aux_cut: bool,
    /// Feasible-tree construction for sve and tph.
    #[arg(long, value_enum, default_value = "matroid")]
    pub backend: Backend,
    /// Run sve even beyond the enumeration guard.
    #[arg(long)]
    pub force: bool,
}

#[derive(clap::ValueEnum, Clone, Copy, Debug)]
pub enum Backend {
    Matroid,
    Maxflow,
}

impl From<Backend> for TreeBackend {
    fn from(b: Backend) -> Self {
        match b {
            Backend::Matroid => TreeBackend::Matroid,
            Backend::Maxflow => TreeBackend::MaxFlow,
        }
    }
}

pub fn protect(g: &Global, a: &ProtectArgs) -> CmdResult {
    let sys = load_system(g)?;
    let targets = parse_targets(&sys, &a.targets)?;
    if !(a.time_budget >= 0.0) {
        return Err(fail(2, anyhow!("--time-budget must be non-negative")));
    }
    let milp = MilpOptions {
        aux_cut: !a.no_aux_cut,
        separate_cuts: !a.no_cuts,
        limits: Limits {
            node_budget: a.node_budget,
            time_budget: Duration::from_secs_f64(a.time_budget),
        },
        ..MilpOptions::default()
    };
    if (a.incremental.is_some() || a.dump_lp.is_some()) && a.method != Method::Milp {
        return Err(fail(2, anyhow!("--incremental and --dump-lp need --method milp")));
    }
    let (sol, all_targets) = if let Some(path) = &a.incremental {
        let prior = ProtectionPlan::from_json(&sys, &parse_plan(&read(path)?)?)
            .with_context(|| format!("loading prior plan {}", path.display()))?;
        if prior.status == Status::Failed {
            return Err(fail(3, anyhow!("prior plan {} does not verify", path.display())));
        }
        let union = prior.targets.union(&targets);
        (solve_incremental(&sys, &prior.tree, &targets, &milp)?, union)
    } else {
        let sol = match a.method {
            Method::Sve => solve_sve(
                &sys,
                &targets,
                SveOptions {
                    force: a.force,
                    backend: a.backend.into(),
                },
            )?,
            Method::Milp => solve_milp(&sys, &targets, &milp)?,
            Method::Tph => {
                let opts = TphOptions {
                    k: a.k,
                    seed: a.seed,
                    backend: a.backend.into(),
                };
                run_tph(&sys, &targets, &opts)?.solution
            }
        };
        (sol, targets.clone())
    };
    if let Some(path) = &a.dump_lp {
        let inst = build_instance(
            &sys,
            &targets,
            &BuildOptions {
                aux_cut: milp.aux_cut,
                secondary_term: milp.secondary_term,
                fixed_tree: None,
            },
        )?;
        fs::write(path, write_lp(&sys, &inst)).with_context(|| format!("writing {}", path.display()))?;
    }
    let plan = ProtectionPlan::certify(&sys, a.method, &all_targets, sol);
    emit_json(g, &plan.to_json(&sys))?;
    match plan.status {
        Status::Verified => Ok(ExitCode::SUCCESS),
        Status::UnverifiedOptimality => {
            log::warn!("budget exhausted; emitted the best plan found");
            Ok(ExitCode::from(4))
        }
        Status::Failed => Err(fail(3, anyhow!("solver output failed verification"))),
    }
}

#[derive(Args, Debug)]
pub struct AttackArgs {
    /// Plan JSON or JSON list of meter ids the attacker cannot touch.
    #[arg(long)]
    pub protected: Option<PathBuf>,
    /// Bus whose state the attacker wants to shift.
    #[arg(long)]
    pub target: u32,
    /// Noisy snapshots for the residual test.
    #[arg(long, default_value_t = 100)]
    pub trials: usize,
    /// Standard deviation of measurement noise.
    #[arg(long, default_value_t = 0.01)]
    pub sigma: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

pub fn attack(g: &Global, a: &AttackArgs) -> CmdResult {
    let sys = load_system(g)?;
    let mut meters = match &a.protected {
        Some(p) => sys.meters_by_id(&read_meter_list(p)?)?,
        None => Vec::new(),
    };
    meters.sort_unstable();
    meters.dedup();
    let target = sys.targets(&[a.target])?.as_slice()[0];
    let Some(att) = synthesize_attack(&sys.jacobian, &meters, target, sys.eps) else {
        emit_json(g, &json!({ "target": a.target, "attack": "none" }))?;
        return Ok(ExitCode::SUCCESS);
    };
    let bdd = match bdd_demo(&sys, &att.a, a.trials, a.sigma, a.seed) {
        Ok(trials) => {
            let worst = trials
                .iter()
                .map(|t| (t.attacked - t.clean).abs() / (1.0 + t.clean))
                .fold(0.0, f64::max);
            let mean = |f: fn(&meterguard::observability::BddTrial) -> f64| {
                trials.iter().map(f).sum::<f64>() / trials.len().max(1) as f64
            };
            json!({
                "trials": trials.len(),
                "sigma": a.sigma,
                "seed": a.seed,
                "mean_r_clean": mean(|t| t.clean),
                "mean_r_attacked": mean(|t| t.attacked),
                "mean_r_random": mean(|t| t.random),
                "max_relative_change": worst,
                "random_larger": trials.iter().filter(|t| t.random > t.clean).count(),
            })
        }
        Err(e) => {
            log::warn!("skipping residual demonstration: {e}");
            Value::Null
        }
    };
    let out = json!({
        "target": a.target,
        "attack": att.to_json(&sys),
        "compromised": sys.meter_ids(&att.compromised_meters()),
        "bdd": bdd,
    });
    emit_json(g, &out)?;
    Ok(ExitCode::SUCCESS)
}

#[derive(Args, Debug)]
pub struct BenchArgs {
    #[arg(long, value_delimiter = ',', default_value = "1,2,4,7,10")]
    pub sizes: Vec<usize>,
    #[arg(long, default_value_t = 20)]
    pub trials: usize,
    #[arg(long, value_delimiter = ',', default_value = "sve,milp")]
    pub methods: Vec<Method>,
    /// Tree counts for tph.
    #[arg(long = "k", value_delimiter = ',', default_value = "1,3,5,10,15")]
    pub ks: Vec<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// One row per run instead of per-size summaries.
    #[arg(long)]
    pub raw: bool,
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn bench(g: &Global, a: &BenchArgs) -> CmdResult {
    let sys = load_system(g)?;
    if a.ks.iter().any(|&k| k == 0) {
        return Err(fail(2, anyhow!("K must be at least 1")));
    }
    let spec = TrialSpec {
        sizes: a.sizes.clone(),
        trials: a.trials,
        methods: a.methods.clone(),
        ks: a.ks.clone(),
        seed: a.seed,
        milp: MilpOptions::default(),
    };
    let rows = run_trials(&sys, &spec)?;
    if rows.iter().any(|r| !r.verified) {
        log::error!("some runs produced plans that do not verify");
    }
    let format = g.format.unwrap_or(Format::Csv);
    if a.raw {
        if format == Format::Json {
            emit_json(g, &rows)?;
        } else {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record([
                "size", "trial", "seed", "method", "k", "protected", "optimum", "optimal", "verified",
                "iterations", "wall_ms",
            ])?;
            for r in &rows {
                w.write_record([
                    r.size.to_string(),
                    r.trial.to_string(),
                    r.seed.to_string(),
                    r.method.to_string(),
                    opt(r.k),
                    r.protected.to_string(),
                    opt(r.optimum),
                    r.optimal.to_string(),
                    r.verified.to_string(),
                    r.iterations.to_string(),
                    format!("{:.3}", r.wall_ms),
                ])?;
            }
            emit(g, &String::from_utf8(w.into_inner().map_err(|e| anyhow!("{e}"))?)?)?;
        }
    } else {
        let summary = summarize(&rows);
        if format == Format::Json {
            emit_json(g, &json!({ "seed": a.seed, "rows": summary }))?;
        } else {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record([
                "size", "method", "k", "trials", "seed", "mean_protected", "hit_ratio", "mean_ratio",
                "mean_gap", "verified", "mean_iterations", "mean_wall_ms",
            ])?;
            for s in &summary {
                w.write_record([
                    s.size.to_string(),
                    s.method.to_string(),
                    opt(s.k),
                    s.trials.to_string(),
                    a.seed.to_string(),
                    format!("{:.3}", s.mean_protected),
                    opt(s.hit_ratio.map(|v| format!("{v:.3}"))),
                    opt(s.mean_ratio.map(|v| format!("{v:.4}"))),
                    opt(s.mean_gap.map(|v| format!("{v:.3}"))),
                    s.verified.to_string(),
                    format!("{:.1}", s.mean_iterations),
                    format!("{:.3}", s.mean_wall_ms),
                ])?;
            }
            emit(g, &String::from_utf8(w.into_inner().map_err(|e| anyhow!("{e}"))?)?)?;
        }
    }
    if rows.iter().any(|r| !r.verified) {
        return Err(fail(3, anyhow!("verification failed in at least one run")));
    }
    Ok(ExitCode::SUCCESS)
}

#[derive(Args, Debug)]
pub struct TreeArgs {
    /// Meter ids; defaults to a basic measurement set of the whole network.
    #[arg(long, value_delimiter = ',')]
    pub meters: Option<Vec<String>>,
    #[arg(long, value_enum, default_value = "matroid")]
    pub backend: Backend,
    /// Shuffles the row order when picking the default basic set.
    #[arg(long)]
    pub seed: Option<u64>,
}

pub fn tree(g: &Global, a: &TreeArgs) -> CmdResult {
    let sys = load_system(g)?;
    let meters = match &a.meters {
        Some(ids) => sys.meters_by_id(ids)?,
        None => basic_measurement_set(&sys.jacobian, &sys.all_meters(), &sys.all_states(), a.seed, sys.eps)
            .ok_or_else(|| anyhow!("the placement does not observe the whole network"))?,
    };
    let Some(t) = construct_feasible_tree(&sys.graph, &meters, sys.reference(), a.backend.into()) else {
        return Err(fail(2, anyhow!("no feasible measured tree uses exactly these meters")));
    };
    if let Err(e) = t.validate(&sys.graph) {
        return Err(fail(3, anyhow!("constructed tree is invalid: {e}")));
    }
    emit_json(g, &t.to_json(&sys))?;
    Ok(ExitCode::SUCCESS)
}
