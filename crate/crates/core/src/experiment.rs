//! Repeated solver runs over random target sets, and their summaries.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::milp::{solve_milp, MilpOptions};
use crate::par;
use crate::plan::{Method, Solution, Verification};
use crate::sve::{solve_sve, SveOptions};
use crate::synth::{random_system, random_targets, SynthParams};
use crate::system::System;
use crate::tph::{solve_tph, TphOptions};

#[derive(Clone, Debug)]
pub struct TrialSpec {
    pub sizes: Vec<usize>,
    pub trials: usize,
    pub methods: Vec<Method>,
    /// Tree counts tried for the heuristic.
    pub ks: Vec<usize>,
    pub seed: u64,
    pub milp: MilpOptions,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrialRow {
    pub size: usize,
    pub trial: usize,
    pub seed: u64,
    pub method: Method,
    pub k: Option<usize>,
    pub protected: usize,
    /// |P| from the exact method run on the same targets, when one ran.
    pub optimum: Option<usize>,
    pub optimal: bool,
    pub verified: bool,
    pub iterations: u64,
    pub wall_ms: f64,
}

/// Seed used for the targets (and heuristic) of one trial.
pub fn trial_seed(base: u64, size: usize, trial: usize) -> u64 {
    base.wrapping_mul(0x9e37_79b9_7f4a_7c15)
        .wrapping_add((size as u64) << 32)
        .wrapping_add(trial as u64)
}

pub fn run_trials(sys: &System, spec: &TrialSpec) -> Result<Vec<TrialRow>> {
    if let Some(&s) = spec.sizes.iter().find(|&&s| s > sys.network.state_count()) {
        return Err(Error::InvalidTargets(format!(
            "|D| = {s} exceeds the {} state variables",
            sys.network.state_count()
        )));
    }
    let jobs: Vec<(usize, usize)> = spec
        .sizes
        .iter()
        .flat_map(|&s| (0..spec.trials).map(move |t| (s, t)))
        .collect();
    let per_job = par::map(&jobs, |&(size, trial)| run_one(sys, spec, size, trial));
    let mut rows = Vec::new();
    for r in per_job {
        rows.extend(r?);
    }
    Ok(rows)
}

fn run_one(sys: &System, spec: &TrialSpec, size: usize, trial: usize) -> Result<Vec<TrialRow>> {
    let seed = trial_seed(spec.seed, size, trial);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = random_targets(&sys.network, size, &mut rng);
    let mut rows = Vec::new();
    let mut record = |method: Method, k: Option<usize>, sol: Solution| {
        let verified = Verification::run(sys, &sol.meters, &d).passed();
        rows.push(TrialRow {
            size,
            trial,
            seed,
            method,
            k,
            protected: sol.meters.len(),
            optimum: None,
            optimal: sol.optimal,
            verified,
            iterations: sol.stats.iterations,
            wall_ms: sol.stats.wall_ms,
        });
    };
    for &m in &spec.methods {
        match m {
            Method::Sve => record(m, None, solve_sve(sys, &d, SveOptions::default())?),
            Method::Milp => record(m, None, solve_milp(sys, &d, &spec.milp)?),
            Method::Tph => {
                for &k in &spec.ks {
                    record(m, Some(k), solve_tph(sys, &d, &TphOptions::new(k, seed))?);
                }
            }
        }
    }
    let optimum = rows
        .iter()
        .find(|r| r.method != Method::Tph && r.optimal)
        .map(|r| r.protected);
    for r in &mut rows {
        r.optimum = optimum;
    }
    Ok(rows)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SummaryRow {
    pub size: usize,
    pub method: Method,
    pub k: Option<usize>,
    pub trials: usize,
    pub mean_protected: f64,
    /// Share of trials where |P| equals the exact optimum.
    pub hit_ratio: Option<f64>,
    /// Mean of |P| / |P*|.
    pub mean_ratio: Option<f64>,
    /// Mean of |P| - |P*|.
    pub mean_gap: Option<f64>,
    pub verified: usize,
    pub mean_iterations: f64,
    pub mean_wall_ms: f64,
}

pub fn summarize(rows: &[TrialRow]) -> Vec<SummaryRow> {
    let mut groups: BTreeMap<(usize, u8, Option<usize>), Vec<&TrialRow>> = BTreeMap::new();
    for r in rows {
        let order = match r.method {
            Method::Sve => 0,
            Method::Milp => 1,
            Method::Tph => 2,
        };
        groups.entry((r.size, order, r.k)).or_default().push(r);
    }
    groups
        .into_values()
        .map(|g| {
            let n = g.len() as f64;
            let mean = |f: &dyn Fn(&TrialRow) -> f64| g.iter().map(|r| f(r)).sum::<f64>() / n;
            let with_opt: Vec<&&TrialRow> = g.iter().filter(|r| r.optimum.is_some()).collect();
            let m = with_opt.len() as f64;
            let over_opt = |f: &dyn Fn(&TrialRow, f64) -> f64| {
                (!with_opt.is_empty()).then(|| {
                    with_opt
                        .iter()
                        .map(|r| f(r, r.optimum.unwrap() as f64))
                        .sum::<f64>()
                        / m
                })
            };
            SummaryRow {
                size: g[0].size,
                method: g[0].method,
                k: g[0].k,
                trials: g.len(),
                mean_protected: mean(&|r| r.protected as f64),
                hit_ratio: over_opt(&|r, o| if r.protected as f64 == o { 1.0 } else { 0.0 }),
                mean_ratio: over_opt(&|r, o| if o > 0.0 { r.protected as f64 / o } else { 1.0 }),
                mean_gap: over_opt(&|r, o| r.protected as f64 - o),
                verified: g.iter().filter(|r| r.verified).count(),
                mean_iterations: mean(&|r| r.iterations as f64),
                mean_wall_ms: mean(&|r| r.wall_ms),
            }
        })
        .collect()
}

/// Heuristic-versus-exact comparison over freshly generated systems.
#[derive(Clone, Debug)]
pub struct StudySpec {
    pub params: SynthParams,
    pub instances: usize,
    /// |D| of instance `i` is `sizes[i % sizes.len()]`.
    pub sizes: Vec<usize>,
    pub ks: Vec<usize>,
    /// Instance `i` uses system seed `system_seed + i`.
    pub system_seed: u64,
    /// Instance `i` draws targets and runs the heuristic with `seed + i`.
    pub seed: u64,
    pub milp: MilpOptions,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HeuristicRun {
    pub k: usize,
    pub protected: usize,
    pub examined: u64,
    pub verified: bool,
    pub wall_ms: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StudyRow {
    pub instance: usize,
    pub size: usize,
    pub states: usize,
    pub optimum: usize,
    pub optimal: bool,
    pub milp_ms: f64,
    pub heuristic: Vec<HeuristicRun>,
}

impl StudyRow {
    pub fn ratio(&self, k: usize) -> Option<f64> {
        let run = self.heuristic.iter().find(|h| h.k == k)?;
        Some(if self.optimum == 0 { 1.0 } else { run.protected as f64 / self.optimum as f64 })
    }
}

pub fn heuristic_study(spec: &StudySpec) -> Result<Vec<StudyRow>> {
    if spec.sizes.is_empty() {
        return Err(Error::Invalid("no target sizes given".into()));
    }
    let ids: Vec<usize> = (0..spec.instances).collect();
    par::map(&ids, |&i| {
        let sys = random_system(&spec.params, spec.system_seed + i as u64)?;
        let size = spec.sizes[i % spec.sizes.len()].min(sys.network.state_count());
        let seed = spec.seed + i as u64;
        let d = random_targets(&sys.network, size, &mut ChaCha8Rng::seed_from_u64(seed));
        let exact = solve_milp(&sys, &d, &spec.milp)?;
        let heuristic = spec
            .ks
            .iter()
            .map(|&k| {
                let run = crate::tph::run_tph(&sys, &d, &TphOptions::new(k, seed))?;
                Ok(HeuristicRun {
                    k,
                    protected: run.solution.meters.len(),
                    examined: run.examined,
                    verified: Verification::run(&sys, &run.solution.meters, &d).passed(),
                    wall_ms: run.solution.stats.wall_ms,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(StudyRow {
            instance: i,
            size,
            states: sys.network.state_count(),
            optimum: exact.meters.len(),
            optimal: exact.optimal,
            milp_ms: exact.stats.wall_ms,
            heuristic,
        })
    })
    .into_iter()
    .collect()
}

/// Mean of `|P_TPH| / |P*|` per entry of `ks`.
pub fn mean_ratios(rows: &[StudyRow], ks: &[usize]) -> Vec<f64> {
    ks.iter()
        .map(|&k| {
            let r: Vec<f64> = rows.iter().filter_map(|row| row.ratio(k)).collect();
            r.iter().sum::<f64>() / r.len().max(1) as f64
        })
        .collect()
}
