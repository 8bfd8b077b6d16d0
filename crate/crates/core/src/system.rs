use crate::error::Result;
use crate::graph::MeasuredGraph;
use crate::grid::{
    augment_with_pmus, build_jacobian, parse_case, parse_measurements, Jacobian,
    MeasurementPlacement, PowerNetwork,
};
use crate::linalg::DEFAULT_EPS;
use crate::observability::StateSet;

/// A network with its meters, Jacobian and measurability graph, built once and
/// shared read-only by every solver.
#[derive(Clone, Debug)]
pub struct System {
    pub network: PowerNetwork,
    pub placement: MeasurementPlacement,
    pub jacobian: Jacobian,
    pub graph: MeasuredGraph,
    /// Relative pivot tolerance used by every rank test.
    pub eps: f64,
    /// Pseudo branches added for PMUs (empty unless built with PMUs).
    pub pseudo_branches: Vec<usize>,
}

impl System {
    pub fn new(network: PowerNetwork, placement: MeasurementPlacement) -> Self {
        let jacobian = build_jacobian(&network, &placement);
        let graph = MeasuredGraph::new(&network, &placement);
        System {
            network,
            placement,
            jacobian,
            graph,
            eps: DEFAULT_EPS,
            pseudo_branches: Vec::new(),
        }
    }

    /// Same as [`System::new`] after turning every PMU into a pseudo flow meter.
    pub fn with_pmus(network: &PowerNetwork, placement: &MeasurementPlacement) -> Self {
        let (aug, placement) = augment_with_pmus(network, placement);
        let mut sys = System::new(aug.network, placement);
        sys.pseudo_branches = aug.pseudo_branches;
        sys
    }

    pub fn from_json(case: &str, meas: &str, pmus: bool) -> Result<Self> {
        let network = parse_case(case)?;
        let placement = parse_measurements(meas, &network)?;
        Ok(if pmus {
            System::with_pmus(&network, &placement)
        } else {
            System::new(network, placement)
        })
    }

    pub fn with_eps(mut self, eps: f64) -> Self {
        self.eps = eps;
        self
    }

    pub fn reference(&self) -> usize {
        self.network.reference()
    }

    pub fn all_meters(&self) -> Vec<usize> {
        (0..self.placement.len()).collect()
    }

    pub fn all_states(&self) -> StateSet {
        StateSet::from_indices(&self.network, self.network.states()).expect("states are valid")
    }

    /// Target set from external bus ids.
    pub fn targets(&self, bus_ids: &[u32]) -> Result<StateSet> {
        StateSet::from_bus_ids(&self.network, bus_ids)
    }

    pub fn meter_ids(&self, meters: &[usize]) -> Vec<String> {
        meters.iter().map(|&m| self.placement.meter(m).id.clone()).collect()
    }

    pub fn meters_by_id<S: AsRef<str>>(&self, ids: &[S]) -> Result<Vec<usize>> {
        ids.iter().map(|id| self.placement.meter_index(id.as_ref())).collect()
    }
}
