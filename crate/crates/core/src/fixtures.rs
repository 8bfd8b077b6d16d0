//! Bundled example networks.
//!
//! The 14-bus placement is a best-effort layout, not a canonical one: its
//! meter count, the few meters with known sites and the eight-meter plan for
//! buses 8 and 12 are fixed, and the other sites were chosen to agree with
//! them.

use crate::error::Result;
use crate::graph::{FeasibleMeasuredTree, TreeEdge};
use crate::system::System;

pub const FIVE_BUS_CASE: &str = include_str!("../fixtures/five_bus.case.json");
pub const FIVE_BUS_MEAS: &str = include_str!("../fixtures/five_bus.meas.json");
pub const IEEE14_CASE: &str = include_str!("../fixtures/ieee14.case.json");
pub const IEEE14_MEAS: &str = include_str!("../fixtures/ieee14.meas.json");
pub const SEVEN_BUS_CASE: &str = include_str!("../fixtures/seven_bus.case.json");
pub const SEVEN_BUS_MEAS: &str = include_str!("../fixtures/seven_bus.meas.json");
pub const PRUNING13_CASE: &str = include_str!("../fixtures/pruning13.case.json");
pub const PRUNING13_MEAS: &str = include_str!("../fixtures/pruning13.meas.json");

pub fn five_bus() -> Result<System> {
    System::from_json(FIVE_BUS_CASE, FIVE_BUS_MEAS, false)
}

pub fn ieee14() -> Result<System> {
    System::from_json(IEEE14_CASE, IEEE14_MEAS, false)
}

/// Seven-bus network with PMUs at buses 1 and 5; `pmus` selects whether the
/// PMUs are turned into pseudo flow meters.
pub fn seven_bus(pmus: bool) -> Result<System> {
    System::from_json(SEVEN_BUS_CASE, SEVEN_BUS_MEAS, pmus)
}

pub fn pruning13() -> Result<System> {
    System::from_json(PRUNING13_CASE, PRUNING13_MEAS, false)
}

/// The hand-built tree of the pruning example: every tree branch mapped to its
/// flow meter, except 4-6 and 9-11 which use the injections at 6 and 9.
pub fn pruning13_tree(sys: &System) -> Result<FeasibleMeasuredTree> {
    let mut edges = Vec::new();
    for br in sys.network.branches() {
        let (a, b) = (sys.network.bus_id(br.from), sys.network.bus_id(br.to));
        let meter = match (a, b) {
            (6, 7) => continue,
            (4, 6) => "i6".to_string(),
            (9, 11) => "i9".to_string(),
            _ => format!("f{a}_{b}"),
        };
        edges.push(TreeEdge {
            branch: sys.network.branch_index(&br.id)?,
            meter: sys.placement.meter_index(&meter)?,
        });
    }
    Ok(FeasibleMeasuredTree::from_edges(sys.reference(), &sys.graph, edges))
}
