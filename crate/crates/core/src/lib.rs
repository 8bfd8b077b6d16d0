//! Minimum meter protection against undetectable false-data injection on DC
//! power-system state estimation.
//!
//! A set of meters `P` defends state variables `D` when no attack `a = Hc`
//! that leaves every meter in `P` untouched can move any `c_k`, `k ∈ D`. The
//! crate offers three ways to find a smallest such `P`:
//!
//! * [`sve`]: exact Steiner-vertex enumeration (small systems only),
//! * [`milp`]: exact minimum measured Steiner arborescence by branch-and-bound,
//! * [`tph`]: the polynomial tree-pruning heuristic.
//!
//! Every plan can be checked with [`observability::is_protected`] and the
//! independent attack construction in [`observability::synthesize_attack`].

pub mod error;
pub mod experiment;
pub mod fixtures;
pub mod graph;
pub mod grid;
pub mod linalg;
pub mod milp;
pub mod observability;
mod par;
pub mod plan;
pub mod sve;
pub mod synth;
pub mod system;
pub mod tph;

pub use error::{Error, Result};
pub use graph::{FeasibleMeasuredTree, MeasuredGraph, TreeBackend};
pub use grid::{Jacobian, MeasurementPlacement, PowerNetwork};
pub use observability::{AttackVector, StateSet};
pub use plan::{Method, ProtectionPlan};
pub use system::System;
