//! Seeded random networks, placements and target sets for tests and benches.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::grid::{MeasurementPlacement, Orientation, PowerNetwork};
use crate::linalg;
use crate::observability::StateSet;
use crate::system::System;

#[derive(Clone, Debug)]
pub struct SynthParams {
    pub buses: usize,
    pub lines: usize,
    pub flow_meters: usize,
    pub injection_meters: usize,
    /// All reactances 1.0 instead of uniform in [0.05, 0.5].
    pub unit_reactance: bool,
    /// Retry placements until the whole network is observable.
    pub observable: bool,
    /// A new bus attaches to one of the previous `locality` buses, which
    /// keeps the diameter close to that of transmission grids.
    pub locality: usize,
}

impl SynthParams {
    /// Size of the IEEE 57-bus case statistics: 80 lines, 50 flow and 30
    /// injection meters.
    pub fn scale57() -> Self {
        SynthParams {
            buses: 57,
            lines: 80,
            flow_meters: 50,
            injection_meters: 30,
            unit_reactance: false,
            observable: true,
            locality: 5,
        }
    }

    pub fn small(buses: usize, lines: usize, flow: usize, injection: usize) -> Self {
        SynthParams {
            buses,
            lines,
            flow_meters: flow,
            injection_meters: injection,
            unit_reactance: true,
            observable: true,
            locality: buses.max(1),
        }
    }
}

/// Connected network on buses `1..=n`, reference bus 1.
pub fn random_network(p: &SynthParams, rng: &mut impl Rng) -> Result<PowerNetwork> {
    let n = p.buses;
    if n == 0 {
        return Err(Error::Invalid("network needs at least one bus".into()));
    }
    let max_lines = n * (n - 1) / 2;
    let lines = p.lines.clamp(n - 1, max_lines);
    let mut pairs: Vec<(usize, usize)> = Vec::with_capacity(lines);
    let mut present = vec![vec![false; n]; n];
    for i in 1..n {
        let lo = i.saturating_sub(p.locality.max(1));
        let j = rng.gen_range(lo..i);
        pairs.push((j, i));
        present[j][i] = true;
        present[i][j] = true;
    }
    let window = (p.locality * 2).max(2);
    let mut guard = 0;
    while pairs.len() < lines {
        guard += 1;
        let a = rng.gen_range(0..n);
        let b = if guard < 100 * lines {
            let lo = a.saturating_sub(window);
            let hi = (a + window + 1).min(n);
            rng.gen_range(lo..hi)
        } else {
            rng.gen_range(0..n)
        };
        if a == b || present[a][b] {
            continue;
        }
        present[a][b] = true;
        present[b][a] = true;
        pairs.push((a.min(b), a.max(b)));
    }
    let branches: Vec<(String, u32, u32, f64)> = pairs
        .iter()
        .enumerate()
        .map(|(k, &(a, b))| {
            let x = if p.unit_reactance {
                1.0
            } else {
                (rng.gen_range(50..=500) as f64) / 1000.0
            };
            (format!("e{}", k + 1), a as u32 + 1, b as u32 + 1, x)
        })
        .collect();
    PowerNetwork::new((1..=n as u32).collect(), 1, branches)
}

/// Random placement of `flow` flow meters (`r1..`) on distinct branches and
/// `injection` injection meters on distinct buses.
pub fn random_placement(
    net: &PowerNetwork,
    flow: usize,
    injection: usize,
    rng: &mut impl Rng,
) -> Result<MeasurementPlacement> {
    let mut branches: Vec<usize> = (0..net.branches().len()).collect();
    branches.shuffle(rng);
    branches.truncate(flow.min(branches.len()));
    branches.sort_unstable();
    let mut buses: Vec<usize> = (0..net.bus_count()).collect();
    buses.shuffle(rng);
    buses.truncate(injection.min(buses.len()));
    buses.sort_unstable();
    let mut k = 0;
    let mut next_id = || {
        k += 1;
        format!("r{k}")
    };
    let flows: Vec<(String, String, Orientation)> = branches
        .iter()
        .map(|&b| {
            let o = if rng.gen_bool(0.5) {
                Orientation::Forward
            } else {
                Orientation::Reverse
            };
            (next_id(), net.branch(b).id.clone(), o)
        })
        .collect();
    let injections: Vec<(String, u32)> = buses.iter().map(|&b| (next_id(), net.bus_id(b))).collect();
    MeasurementPlacement::new(net, flows, injections, Vec::new())
}

pub fn is_fully_observable(sys: &System) -> bool {
    linalg::rank(&sys.jacobian.matrix, sys.eps) == sys.network.state_count()
}

/// Random placement on a fixed network, retried until observable.
pub fn observable_placement(
    net: &PowerNetwork,
    flow: usize,
    injection: usize,
    seed: u64,
) -> Result<System> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..1000 {
        let placement = random_placement(net, flow, injection, &mut rng)?;
        let sys = System::new(net.clone(), placement);
        if is_fully_observable(&sys) {
            return Ok(sys);
        }
    }
    Err(Error::Infeasible("no observable placement found in 1000 draws".into()))
}

pub fn random_system(p: &SynthParams, seed: u64) -> Result<System> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..1000 {
        let net = random_network(p, &mut rng)?;
        let placement = random_placement(&net, p.flow_meters, p.injection_meters, &mut rng)?;
        let sys = System::new(net, placement);
        if !p.observable || is_fully_observable(&sys) {
            return Ok(sys);
        }
    }
    Err(Error::Infeasible("no observable system found in 1000 draws".into()))
}

/// `k` distinct non-reference buses.
pub fn random_targets(net: &PowerNetwork, k: usize, rng: &mut impl Rng) -> StateSet {
    let mut states: Vec<usize> = net.states().collect();
    states.shuffle(rng);
    states.truncate(k);
    StateSet::from_indices(net, states).expect("states exclude the reference")
}

/// Adds `count` PMUs (`p1..`) at random distinct buses to a placement.
pub fn with_random_pmus(sys: &System, count: usize, rng: &mut impl Rng) -> Result<System> {
    let mut buses: Vec<usize> = (0..sys.network.bus_count()).collect();
    buses.shuffle(rng);
    buses.truncate(count);
    buses.sort_unstable();
    let json = sys.placement.to_meas_json(&sys.network);
    let flows = json.flow.iter().map(|f| (f.id.clone(), f.branch.clone(), f.dir.unwrap_or(Orientation::Forward)));
    let injections = json.injection.iter().map(|i| (i.id.clone(), i.bus as u32));
    let pmus: Vec<(String, u32)> = buses
        .iter()
        .enumerate()
        .map(|(k, &b)| (format!("p{}", k + 1), sys.network.bus_id(b)))
        .collect();
    let placement = MeasurementPlacement::new(&sys.network, flows, injections, pmus)?;
    Ok(System::with_pmus(&sys.network, &placement))
}
