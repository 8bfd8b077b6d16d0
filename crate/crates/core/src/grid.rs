//! Network and meter-placement model, JSON ingestion, the DC measurement
//! Jacobian and the PMU pseudo-branch transformation.
//!
//! Buses carry their external (1-based) ids for I/O; everything else works
//! on dense 0-based indices.

use std::collections::{HashMap, HashSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;

#[derive(Clone, Debug, PartialEq)]
pub struct Branch {
    pub id: String,
    pub from: usize,
    pub to: usize,
    pub reactance: f64,
    /// Added for a PMU; carries no physical flow.
    pub pseudo: bool,
}

impl Branch {
    pub fn other(&self, bus: usize) -> usize {
        if self.from == bus {
            self.to
        } else {
            self.from
        }
    }

    pub fn touches(&self, bus: usize) -> bool {
        self.from == bus || self.to == bus
    }
}

#[derive(Clone, Debug)]
pub struct PowerNetwork {
    bus_ids: Vec<u32>,
    bus_index: HashMap<u32, usize>,
    branches: Vec<Branch>,
    branch_index: HashMap<String, usize>,
    incident: Vec<Vec<usize>>,
    reference: usize,
}

impl PowerNetwork {
    /// Builds and validates a network. Endpoints are external bus ids.
    pub fn new(
        bus_ids: Vec<u32>,
        reference: u32,
        branches: impl IntoIterator<Item = (String, u32, u32, f64)>,
    ) -> Result<Self> {
        let mut bus_index = HashMap::with_capacity(bus_ids.len());
        for (i, &b) in bus_ids.iter().enumerate() {
            if bus_index.insert(b, i).is_some() {
                return Err(Error::DuplicateBus(b));
            }
        }
        let lookup = |b: u32| bus_index.get(&b).copied().ok_or(Error::UnknownBus(b as i64));
        let reference = lookup(reference)?;
        let mut net = PowerNetwork {
            incident: vec![Vec::new(); bus_ids.len()],
            bus_ids: bus_ids.clone(),
            bus_index: bus_index.clone(),
            branches: Vec::new(),
            branch_index: HashMap::new(),
            reference,
        };
        for (id, from, to, x) in branches {
            let (f, t) = (lookup(from)?, lookup(to)?);
            net.push_branch(id, f, t, x, false)?;
        }
        net.check_connected()?;
        Ok(net)
    }

    fn push_branch(&mut self, id: String, from: usize, to: usize, x: f64, pseudo: bool) -> Result<usize> {
        if from == to {
            return Err(Error::InvalidBranch {
                id,
                reason: "endpoints must be distinct".into(),
            });
        }
        if !(x.is_finite() && x > 0.0) {
            return Err(Error::InvalidBranch {
                id,
                reason: format!("reactance must be positive, got {x}"),
            });
        }
        if self.branch_index.contains_key(&id) {
            return Err(Error::DuplicateBranch(id));
        }
        let idx = self.branches.len();
        self.branch_index.insert(id.clone(), idx);
        self.incident[from].push(idx);
        self.incident[to].push(idx);
        self.branches.push(Branch {
            id,
            from,
            to,
            reactance: x,
            pseudo,
        });
        Ok(idx)
    }

    fn check_connected(&self) -> Result<()> {
        let mut seen = vec![false; self.bus_count()];
        let mut queue = VecDeque::from([self.reference]);
        seen[self.reference] = true;
        while let Some(b) = queue.pop_front() {
            for &e in &self.incident[b] {
                let o = self.branches[e].other(b);
                if !seen[o] {
                    seen[o] = true;
                    queue.push_back(o);
                }
            }
        }
        match seen.iter().position(|s| !s) {
            Some(b) => Err(Error::Disconnected(self.bus_ids[b])),
            None => Ok(()),
        }
    }

    pub fn bus_count(&self) -> usize {
        self.bus_ids.len()
    }

    /// Number of state variables (all buses but the reference).
    pub fn state_count(&self) -> usize {
        self.bus_ids.len() - 1
    }

    pub fn reference(&self) -> usize {
        self.reference
    }

    pub fn bus_id(&self, idx: usize) -> u32 {
        self.bus_ids[idx]
    }

    pub fn bus_ids(&self) -> &[u32] {
        &self.bus_ids
    }

    pub fn bus_index(&self, id: u32) -> Result<usize> {
        self.bus_index.get(&id).copied().ok_or(Error::UnknownBus(id as i64))
    }

    pub fn branches(&self) -> &[Branch] {
        &self.branches
    }

    pub fn branch(&self, idx: usize) -> &Branch {
        &self.branches[idx]
    }

    pub fn branch_index(&self, id: &str) -> Result<usize> {
        self.branch_index
            .get(id)
            .copied()
            .ok_or_else(|| Error::UnknownBranch(id.to_string()))
    }

    /// Branches incident to `bus`, pseudo branches included.
    pub fn incident(&self, bus: usize) -> &[usize] {
        &self.incident[bus]
    }

    /// Physical (non-pseudo) branches incident to `bus`.
    pub fn real_incident(&self, bus: usize) -> impl Iterator<Item = usize> + '_ {
        self.incident[bus].iter().copied().filter(|&e| !self.branches[e].pseudo)
    }

    /// State-variable buses in ascending index order.
    pub fn states(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.bus_count()).filter(|&b| b != self.reference)
    }

    pub fn find_branch_between(&self, a: usize, b: usize) -> Option<usize> {
        self.incident[a]
            .iter()
            .copied()
            .find(|&e| !self.branches[e].pseudo && self.branches[e].other(a) == b)
    }

    pub fn to_case_json(&self) -> CaseFile {
        CaseFile {
            format: Some(1),
            buses: self.bus_ids.clone(),
            reference: self.bus_ids[self.reference],
            branches: self
                .branches
                .iter()
                .filter(|b| !b.pseudo)
                .map(|b| CaseBranch {
                    id: b.id.clone(),
                    from: self.bus_ids[b.from] as i64,
                    to: self.bus_ids[b.to] as i64,
                    x: Some(b.reactance),
                })
                .collect(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Orientation {
    #[serde(rename = "fwd")]
    Forward,
    #[serde(rename = "rev")]
    Reverse,
}

#[derive(Clone, Debug, PartialEq)]
pub enum MeterKind {
    Flow {
        branch: usize,
        orientation: Orientation,
        /// Pseudo flow meter standing in for a PMU.
        pmu: bool,
    },
    Injection {
        bus: usize,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Meter {
    pub id: String,
    pub kind: MeterKind,
}

impl Meter {
    pub fn is_injection(&self) -> bool {
        matches!(self.kind, MeterKind::Injection { .. })
    }

    pub fn is_pmu(&self) -> bool {
        matches!(self.kind, MeterKind::Flow { pmu: true, .. })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Pmu {
    pub id: String,
    pub bus: usize,
}

/// Meters in declaration order: flow meters, then injection meters, then any
/// PMU-derived pseudo flow meters. The order fixes the Jacobian row order.
#[derive(Clone, Debug, Default)]
pub struct MeasurementPlacement {
    meters: Vec<Meter>,
    pmus: Vec<Pmu>,
    meter_index: HashMap<String, usize>,
}

impl MeasurementPlacement {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Builds a validated placement. `flow` holds (id, branch id, orientation),
    /// `injection` (id, bus id) and `pmus` (id, bus id).
    pub fn new(
        net: &PowerNetwork,
        flow: impl IntoIterator<Item = (String, String, Orientation)>,
        injection: impl IntoIterator<Item = (String, u32)>,
        pmus: impl IntoIterator<Item = (String, u32)>,
    ) -> Result<Self> {
        let mut p = MeasurementPlacement::default();
        let mut ids = HashSet::new();
        let mut claim = |id: &str| -> Result<()> {
            if ids.insert(id.to_string()) {
                Ok(())
            } else {
                Err(Error::DuplicateMeter(id.to_string()))
            }
        };
        let mut metered_branches = HashSet::new();
        for (id, branch, orientation) in flow {
            claim(&id)?;
            let b = net.branch_index(&branch)?;
            if !metered_branches.insert(b) {
                return Err(Error::DuplicateSite {
                    kind: "flow",
                    site: format!("branch {branch}"),
                });
            }
            p.push(Meter {
                id,
                kind: MeterKind::Flow {
                    branch: b,
                    orientation,
                    pmu: false,
                },
            });
        }
        let mut metered_buses = HashSet::new();
        for (id, bus) in injection {
            claim(&id)?;
            let b = net.bus_index(bus)?;
            if !metered_buses.insert(b) {
                return Err(Error::DuplicateSite {
                    kind: "injection",
                    site: format!("bus {bus}"),
                });
            }
            p.push(Meter {
                id,
                kind: MeterKind::Injection { bus: b },
            });
        }
        let mut pmu_buses = HashSet::new();
        for (id, bus) in pmus {
            claim(&id)?;
            let b = net.bus_index(bus)?;
            if !pmu_buses.insert(b) {
                return Err(Error::DuplicateSite {
                    kind: "PMU",
                    site: format!("bus {bus}"),
                });
            }
            p.pmus.push(Pmu { id, bus: b });
        }
        Ok(p)
    }

    fn push(&mut self, m: Meter) -> usize {
        let idx = self.meters.len();
        self.meter_index.insert(m.id.clone(), idx);
        self.meters.push(m);
        idx
    }

    pub fn meters(&self) -> &[Meter] {
        &self.meters
    }

    pub fn meter(&self, idx: usize) -> &Meter {
        &self.meters[idx]
    }

    pub fn len(&self) -> usize {
        self.meters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.meters.is_empty()
    }

    pub fn pmus(&self) -> &[Pmu] {
        &self.pmus
    }

    pub fn meter_index(&self, id: &str) -> Result<usize> {
        self.meter_index
            .get(id)
            .copied()
            .ok_or_else(|| Error::UnknownMeter(id.to_string()))
    }

    /// Flow meters (real or pseudo) sitting on `branch`.
    pub fn flow_meters_on(&self, branch: usize) -> impl Iterator<Item = usize> + '_ {
        self.meters.iter().enumerate().filter_map(move |(i, m)| match m.kind {
            MeterKind::Flow { branch: b, .. } if b == branch => Some(i),
            _ => None,
        })
    }

    pub fn injection_at(&self, bus: usize) -> Option<usize> {
        self.meters
            .iter()
            .position(|m| matches!(m.kind, MeterKind::Injection { bus: b } if b == bus))
    }

    pub fn to_meas_json(&self, net: &PowerNetwork) -> MeasFile {
        let mut f = MeasFile {
            format: Some(1),
            ..Default::default()
        };
        for m in &self.meters {
            match m.kind {
                MeterKind::Flow {
                    branch,
                    orientation,
                    pmu: false,
                } => f.flow.push(MeasFlow {
                    id: m.id.clone(),
                    branch: net.branch(branch).id.clone(),
                    dir: Some(orientation),
                }),
                MeterKind::Injection { bus } => f.injection.push(MeasBus {
                    id: m.id.clone(),
                    bus: net.bus_id(bus) as i64,
                }),
                MeterKind::Flow { pmu: true, .. } => {}
            }
        }
        for p in &self.pmus {
            f.pmu.push(MeasBus {
                id: p.id.clone(),
                bus: net.bus_id(p.bus) as i64,
            });
        }
        f
    }
}

// ---------------------------------------------------------------- file schema

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CaseFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub format: Option<u64>,
    pub buses: Vec<u32>,
    pub reference: u32,
    #[serde(default)]
    pub branches: Vec<CaseBranch>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CaseBranch {
    pub id: String,
    pub from: i64,
    pub to: i64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x: Option<f64>,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub format: Option<u64>,
    #[serde(default)]
    pub flow: Vec<MeasFlow>,
    #[serde(default)]
    pub injection: Vec<MeasBus>,
    #[serde(default)]
    pub pmu: Vec<MeasBus>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasFlow {
    pub id: String,
    pub branch: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<Orientation>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasBus {
    pub id: String,
    pub bus: i64,
}

fn check_format(v: Option<u64>) -> Result<()> {
    match v {
        None | Some(1) => Ok(()),
        Some(other) => Err(Error::Format(other)),
    }
}

fn bus_id(v: i64) -> Result<u32> {
    u32::try_from(v).map_err(|_| Error::UnknownBus(v))
}

/// Parses a case file. Missing reactances default to 1.0 p.u.
pub fn parse_case(text: &str) -> Result<PowerNetwork> {
    let file: CaseFile = serde_json::from_str(text).map_err(Error::from_json)?;
    check_format(file.format)?;
    let branches = file
        .branches
        .into_iter()
        .map(|b| Ok((b.id, bus_id(b.from)?, bus_id(b.to)?, b.x.unwrap_or(1.0))))
        .collect::<Result<Vec<_>>>()?;
    PowerNetwork::new(file.buses, file.reference, branches)
}

pub fn parse_measurements(text: &str, net: &PowerNetwork) -> Result<MeasurementPlacement> {
    let file: MeasFile = serde_json::from_str(text).map_err(Error::from_json)?;
    check_format(file.format)?;
    let injection = file
        .injection
        .into_iter()
        .map(|m| Ok((m.id, bus_id(m.bus)?)))
        .collect::<Result<Vec<_>>>()?;
    let pmus = file
        .pmu
        .into_iter()
        .map(|m| Ok((m.id, bus_id(m.bus)?)))
        .collect::<Result<Vec<_>>>()?;
    MeasurementPlacement::new(
        net,
        file.flow
            .into_iter()
            .map(|f| (f.id, f.branch, f.dir.unwrap_or(Orientation::Forward))),
        injection,
        pmus,
    )
}

// ---------------------------------------------------------------- Jacobian

/// The DC measurement matrix H: one row per meter (placement order), one
/// column per state variable (ascending bus index, reference omitted).
#[derive(Clone, Debug)]
pub struct Jacobian {
    pub matrix: Matrix,
    col_bus: Vec<usize>,
    bus_col: Vec<Option<usize>>,
}

impl Jacobian {
    pub fn rows(&self) -> usize {
        self.matrix.rows()
    }

    pub fn cols(&self) -> usize {
        self.matrix.cols()
    }

    pub fn column_of(&self, bus: usize) -> Option<usize> {
        self.bus_col.get(bus).copied().flatten()
    }

    pub fn bus_of(&self, col: usize) -> usize {
        self.col_bus[col]
    }

    /// Buses (by index) with a non-zero entry in row `meter`.
    pub fn row_support(&self, meter: usize) -> impl Iterator<Item = usize> + '_ {
        self.matrix
            .row(meter)
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != 0.0)
            .map(|(c, _)| self.col_bus[c])
    }
}

fn add_flow_row(
    h: &mut Matrix,
    row: usize,
    net: &PowerNetwork,
    bus_col: &[Option<usize>],
    branch: usize,
    out_of: usize,
) {
    let br = net.branch(branch);
    let into = br.other(out_of);
    let g = 1.0 / br.reactance;
    if let Some(c) = bus_col[out_of] {
        h.add_to(row, c, g);
    }
    if let Some(c) = bus_col[into] {
        h.add_to(row, c, -g);
    }
}

pub fn build_jacobian(net: &PowerNetwork, meas: &MeasurementPlacement) -> Jacobian {
    let mut bus_col = vec![None; net.bus_count()];
    let mut col_bus = Vec::with_capacity(net.state_count());
    for b in net.states() {
        bus_col[b] = Some(col_bus.len());
        col_bus.push(b);
    }
    let mut h = Matrix::zeros(meas.len(), col_bus.len());
    for (row, m) in meas.meters().iter().enumerate() {
        match m.kind {
            MeterKind::Flow {
                branch,
                orientation,
                ..
            } => {
                let br = net.branch(branch);
                let out_of = match orientation {
                    Orientation::Forward => br.from,
                    Orientation::Reverse => br.to,
                };
                add_flow_row(&mut h, row, net, &bus_col, branch, out_of);
            }
            MeterKind::Injection { bus } => {
                for e in net.real_incident(bus) {
                    add_flow_row(&mut h, row, net, &bus_col, e, bus);
                }
            }
        }
    }
    Jacobian {
        matrix: h,
        col_bus,
        bus_col,
    }
}

// ---------------------------------------------------------------- PMU

/// Network extended with one pseudo branch per non-reference PMU bus lacking a
/// direct line to the reference.
#[derive(Clone, Debug)]
pub struct PmuAugmentedNetwork {
    pub network: PowerNetwork,
    pub pseudo_branches: Vec<usize>,
    /// Meter indices (into the returned placement) of the pseudo flow meters.
    pub pseudo_flow_meters: Vec<usize>,
}

pub fn pseudo_branch_id(pmu_id: &str) -> String {
    format!("pmu:{pmu_id}")
}

/// Models each PMU as a secured flow meter between its bus and the reference.
pub fn augment_with_pmus(
    net: &PowerNetwork,
    meas: &MeasurementPlacement,
) -> (PmuAugmentedNetwork, MeasurementPlacement) {
    let mut network = net.clone();
    let mut placement = meas.clone();
    let r = net.reference();
    let mut pseudo_branches = Vec::new();
    let mut pseudo_flow_meters = Vec::new();
    for pmu in meas.pmus() {
        if pmu.bus == r {
            continue;
        }
        let branch = match net.find_branch_between(pmu.bus, r) {
            Some(e) => e,
            None => {
                let e = network
                    .push_branch(pseudo_branch_id(&pmu.id), pmu.bus, r, 1.0, true)
                    .expect("pseudo branch ids are derived from unique PMU ids");
                pseudo_branches.push(e);
                e
            }
        };
        let orientation = if network.branch(branch).from == pmu.bus {
            Orientation::Forward
        } else {
            Orientation::Reverse
        };
        let idx = placement.push(Meter {
            id: pmu.id.clone(),
            kind: MeterKind::Flow {
                branch,
                orientation,
                pmu: true,
            },
        });
        pseudo_flow_meters.push(idx);
    }
    (
        PmuAugmentedNetwork {
            network,
            pseudo_branches,
            pseudo_flow_meters,
        },
        placement,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn five_bus_case_parses() {
        let net = parse_case(fixtures::FIVE_BUS_CASE).unwrap();
        assert_eq!(net.bus_count(), 5);
        assert_eq!(net.branches().len(), 6);
        assert_eq!(net.bus_id(net.reference()), 1);
        assert!(net.branches().iter().all(|b| b.reactance == 1.0));
    }

    #[test]
    fn single_bus_network_has_no_states() {
        let net = parse_case(r#"{"buses":[1],"reference":1,"branches":[]}"#).unwrap();
        assert_eq!(net.state_count(), 0);
        let h = build_jacobian(&net, &MeasurementPlacement::empty());
        assert_eq!((h.rows(), h.cols()), (0, 0));
    }

    #[test]
    fn rejects_bad_cases() {
        let unknown = r#"{"buses":[1,2],"reference":1,"branches":[{"id":"e1","from":1,"to":99}]}"#;
        assert!(matches!(parse_case(unknown), Err(Error::UnknownBus(99))));
        let dup = r#"{"buses":[1,2],"reference":1,"branches":[{"id":"e1","from":1,"to":2},{"id":"e1","from":2,"to":1}]}"#;
        assert!(matches!(parse_case(dup), Err(Error::DuplicateBranch(_))));
        let split = r#"{"buses":[1,2,3],"reference":1,"branches":[{"id":"e1","from":1,"to":2}]}"#;
        assert!(matches!(parse_case(split), Err(Error::Disconnected(3))));
        let neg = r#"{"buses":[1,2],"reference":1,"branches":[{"id":"e1","from":1,"to":2,"x":-0.5}]}"#;
        assert!(matches!(parse_case(neg), Err(Error::InvalidBranch { .. })));
        let loop_ = r#"{"buses":[1,2],"reference":1,"branches":[{"id":"e1","from":1,"to":2},{"id":"e2","from":2,"to":2}]}"#;
        assert!(matches!(parse_case(loop_), Err(Error::InvalidBranch { .. })));
        let version = r#"{"format":2,"buses":[1],"reference":1}"#;
        assert!(matches!(parse_case(version), Err(Error::Format(2))));
    }

    #[test]
    fn syntax_errors_carry_line_numbers() {
        let text = "{\n  \"buses\": [1,2],\n  \"reference\": 1,\n  \"branches\": [ oops ]\n}";
        match parse_case(text) {
            Err(Error::Syntax { line, .. }) => assert_eq!(line, 4),
            other => panic!("expected syntax error, got {other:?}"),
        }
    }

    #[test]
    fn rejects_duplicate_meters() {
        let net = parse_case(fixtures::FIVE_BUS_CASE).unwrap();
        let twice_on_branch = r#"{"flow":[{"id":"a","branch":"e12"},{"id":"b","branch":"e12","dir":"rev"}]}"#;
        assert!(matches!(
            parse_measurements(twice_on_branch, &net),
            Err(Error::DuplicateSite { kind: "flow", .. })
        ));
        let same_id = r#"{"flow":[{"id":"a","branch":"e12"}],"injection":[{"id":"a","bus":3}]}"#;
        assert!(matches!(parse_measurements(same_id, &net), Err(Error::DuplicateMeter(_))));
        let twice_on_bus = r#"{"injection":[{"id":"a","bus":3},{"id":"b","bus":3}]}"#;
        assert!(matches!(
            parse_measurements(twice_on_bus, &net),
            Err(Error::DuplicateSite { kind: "injection", .. })
        ));
        let unknown = r#"{"flow":[{"id":"a","branch":"nope"}]}"#;
        assert!(matches!(parse_measurements(unknown, &net), Err(Error::UnknownBranch(_))));
    }

    #[test]
    fn five_bus_jacobian_matches_reference_matrix() {
        let net = parse_case(fixtures::FIVE_BUS_CASE).unwrap();
        let meas = parse_measurements(fixtures::FIVE_BUS_MEAS, &net).unwrap();
        let h = build_jacobian(&net, &meas);
        let expected = [
            [-1., 0., 0., 0.],
            [1., 0., -1., 0.],
            [0., -1., 0., 1.],
            [0., 0., 1., -1.],
            [-1., 2., 0., -1.],
            [-1., 0., 2., -1.],
        ];
        assert_eq!(h.matrix.to_rows(), expected.map(|r| r.to_vec()).to_vec());
    }

    #[test]
    fn triangle_flow_row() {
        let net = parse_case(
            r#"{"buses":[1,2,3],"reference":1,"branches":[
                {"id":"a","from":1,"to":2},{"id":"b","from":2,"to":3},{"id":"c","from":1,"to":3}]}"#,
        )
        .unwrap();
        let meas = parse_measurements(r#"{"flow":[{"id":"r","branch":"a"}]}"#, &net).unwrap();
        let h = build_jacobian(&net, &meas);
        assert_eq!(h.matrix.to_rows(), vec![vec![-1.0, 0.0]]);
    }

    #[test]
    fn injection_rows_sum_incident_flows() {
        let net = parse_case(fixtures::IEEE14_CASE).unwrap();
        let meas = parse_measurements(fixtures::IEEE14_MEAS, &net).unwrap();
        let h = build_jacobian(&net, &meas);
        for (row, m) in meas.meters().iter().enumerate() {
            let MeterKind::Injection { bus } = m.kind else { continue };
            let mut sum = vec![0.0; h.cols()];
            for e in net.incident(bus) {
                let br = net.branch(*e);
                let g = 1.0 / br.reactance;
                if let Some(c) = h.column_of(bus) {
                    sum[c] += g;
                }
                if let Some(c) = h.column_of(br.other(bus)) {
                    sum[c] -= g;
                }
            }
            for (a, b) in h.matrix.row(row).iter().zip(&sum) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn pmu_adds_pseudo_branch_when_no_line_to_reference() {
        let net = parse_case(fixtures::SEVEN_BUS_CASE).unwrap();
        let meas = parse_measurements(fixtures::SEVEN_BUS_MEAS, &net).unwrap();
        let (aug, placed) = augment_with_pmus(&net, &meas);
        assert_eq!(aug.pseudo_branches.len(), 1);
        let br = aug.network.branch(aug.pseudo_branches[0]);
        assert!(br.pseudo);
        assert_eq!(
            (aug.network.bus_id(br.from), aug.network.bus_id(br.to)),
            (5, 1)
        );
        assert_eq!(aug.pseudo_flow_meters.len(), 1);
        assert!(placed.meter(aug.pseudo_flow_meters[0]).is_pmu());
        // injection rows ignore the pseudo branch
        let h0 = build_jacobian(&net, &meas);
        let h1 = build_jacobian(&aug.network, &placed);
        for r in 0..h0.rows() {
            assert_eq!(h0.matrix.row(r), h1.matrix.row(r));
        }
        let last = h1.matrix.row(h1.rows() - 1);
        let c5 = h1.column_of(aug.network.bus_index(5).unwrap()).unwrap();
        assert!(last.iter().enumerate().all(|(c, v)| if c == c5 { *v == 1.0 } else { *v == 0.0 }));
    }

    #[test]
    fn pmu_at_reference_changes_nothing() {
        let net = parse_case(fixtures::SEVEN_BUS_CASE).unwrap();
        let meas = parse_measurements(r#"{"pmu":[{"id":"p1","bus":1}]}"#, &net).unwrap();
        let (aug, placed) = augment_with_pmus(&net, &meas);
        assert!(aug.pseudo_branches.is_empty());
        assert!(aug.pseudo_flow_meters.is_empty());
        assert_eq!(placed.len(), 0);
        assert_eq!(aug.network.branches().len(), net.branches().len());
    }
}
