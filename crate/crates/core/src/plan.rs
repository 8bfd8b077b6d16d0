//! Solver output, verification and the versioned plan JSON.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{FeasibleMeasuredTree, TreeJson};
use crate::observability::{is_protected, no_attack_on_any, StateSet};
use crate::system::System;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Sve,
    Milp,
    Tph,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Sve => "sve",
            Method::Milp => "milp",
            Method::Tph => "tph",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sve" => Ok(Method::Sve),
            "milp" => Ok(Method::Milp),
            "tph" => Ok(Method::Tph),
            other => Err(Error::Invalid(format!("unknown method `{other}`"))),
        }
    }
}

/// Work counters. `iterations` is method specific: subsets tried (sve),
/// branch-and-bound nodes (milp) or vertices examined (tph).
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SolverStats {
    pub iterations: u64,
    #[serde(default)]
    pub rounds: u64,
    pub wall_ms: f64,
    /// Best proven lower bound on |P| when the solver stopped early.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lower_bound: Option<f64>,
}

/// Meters and tree returned by a solver, before verification.
#[derive(Clone, Debug)]
pub struct Solution {
    pub meters: Vec<usize>,
    pub tree: FeasibleMeasuredTree,
    /// False when a budget ran out before optimality was proven.
    pub optimal: bool,
    pub stats: SolverStats,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verification {
    pub rank_condition: bool,
    pub attack_none: bool,
}

impl Verification {
    pub fn run(sys: &System, meters: &[usize], targets: &StateSet) -> Self {
        Verification {
            rank_condition: is_protected(&sys.jacobian, meters, targets, sys.eps),
            attack_none: no_attack_on_any(&sys.jacobian, meters, targets, sys.eps),
        }
    }

    pub fn passed(&self) -> bool {
        self.rank_condition && self.attack_none
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Verified,
    /// Protection holds but the solver stopped before proving minimality.
    UnverifiedOptimality,
    Failed,
}

#[derive(Clone, Debug)]
pub struct ProtectionPlan {
    pub method: Method,
    pub targets: StateSet,
    pub meters: Vec<usize>,
    pub tree: FeasibleMeasuredTree,
    pub verification: Verification,
    pub status: Status,
    pub stats: SolverStats,
}

impl ProtectionPlan {
    /// Verifies a solution and wraps it as a plan. An exact method that
    /// stopped early yields [`Status::UnverifiedOptimality`]; the heuristic
    /// never claims minimality, so a protecting TPH plan is simply verified.
    pub fn certify(sys: &System, method: Method, targets: &StateSet, sol: Solution) -> Self {
        let verification = Verification::run(sys, &sol.meters, targets);
        let status = if !verification.passed() {
            Status::Failed
        } else if method != Method::Tph && !sol.optimal {
            Status::UnverifiedOptimality
        } else {
            Status::Verified
        };
        ProtectionPlan {
            method,
            targets: targets.clone(),
            meters: sol.meters,
            tree: sol.tree,
            verification,
            status,
            stats: sol.stats,
        }
    }

    pub fn len(&self) -> usize {
        self.meters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.meters.is_empty()
    }

    pub fn to_json(&self, sys: &System) -> PlanJson {
        PlanJson {
            format: 1,
            method: self.method,
            status: self.status,
            targets: self.targets.bus_ids(&sys.network),
            protected: sys.meter_ids(&self.meters),
            size: self.meters.len(),
            tree: self.tree.to_json(sys),
            verification: self.verification,
            stats: self.stats.clone(),
        }
    }

    /// Rebuilds a plan from its JSON and re-runs verification against `sys`.
    pub fn from_json(sys: &System, json: &PlanJson) -> Result<Self> {
        if json.format != 1 {
            return Err(Error::Format(json.format));
        }
        let targets = sys.targets(&json.targets)?;
        let mut meters = sys.meters_by_id(&json.protected)?;
        meters.sort_unstable();
        let tree = FeasibleMeasuredTree::from_json(sys, &json.tree)?;
        let verification = Verification::run(sys, &meters, &targets);
        let status = match (verification.passed(), json.status) {
            (false, _) => Status::Failed,
            (true, s) => s,
        };
        Ok(ProtectionPlan {
            method: json.method,
            targets,
            meters,
            tree,
            verification,
            status,
            stats: json.stats.clone(),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlanJson {
    pub format: u64,
    pub method: Method,
    pub status: Status,
    pub targets: Vec<u32>,
    pub protected: Vec<String>,
    pub size: usize,
    pub tree: TreeJson,
    pub verification: Verification,
    pub stats: SolverStats,
}

pub fn parse_plan(text: &str) -> Result<PlanJson> {
    serde_json::from_str(text).map_err(Error::from_json)
}
