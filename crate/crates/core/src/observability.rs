//! Rank conditions on the measurement Jacobian: protection, subnetwork
//! observability, basic measurement sets, undetectable-attack synthesis and
//! the bad-data residual test.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::grid::{Jacobian, PowerNetwork};
use crate::linalg::{self, exact, cholesky_solve, norm2, Matrix, RowBasis};
use crate::system::System;

/// Sorted, duplicate-free set of state-variable buses (dense indices, never
/// the reference).
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct StateSet(Vec<usize>);

impl StateSet {
    pub fn empty() -> Self {
        StateSet(Vec::new())
    }

    pub fn from_indices(net: &PowerNetwork, buses: impl IntoIterator<Item = usize>) -> Result<Self> {
        let mut v: Vec<usize> = buses.into_iter().collect();
        v.sort_unstable();
        v.dedup();
        for &b in &v {
            if b >= net.bus_count() {
                return Err(Error::InvalidTargets(format!("bus index {b} out of range")));
            }
            if b == net.reference() {
                return Err(Error::InvalidTargets(format!(
                    "bus {} is the reference",
                    net.bus_id(b)
                )));
            }
        }
        Ok(StateSet(v))
    }

    pub fn from_bus_ids(net: &PowerNetwork, ids: &[u32]) -> Result<Self> {
        let idx = ids
            .iter()
            .map(|&id| net.bus_index(id))
            .collect::<Result<Vec<_>>>()?;
        Self::from_indices(net, idx)
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, bus: usize) -> bool {
        self.0.binary_search(&bus).is_ok()
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().copied()
    }

    pub fn union(&self, other: &StateSet) -> StateSet {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        v.sort_unstable();
        v.dedup();
        StateSet(v)
    }

    pub fn bus_ids(&self, net: &PowerNetwork) -> Vec<u32> {
        self.0.iter().map(|&b| net.bus_id(b)).collect()
    }
}

fn columns(h: &Jacobian, buses: impl IntoIterator<Item = usize>) -> Vec<usize> {
    buses.into_iter().filter_map(|b| h.column_of(b)).collect()
}

/// Numerical rank of `H[rows, buses]`.
pub fn rank_of(h: &Jacobian, rows: &[usize], buses: &[usize], eps: f64) -> usize {
    let cols = columns(h, buses.iter().copied());
    linalg::rank(&h.matrix.select(rows, &cols), eps)
}

/// Exact rank of `H[rows, buses]` over the rationals.
pub fn rank_of_exact(h: &Jacobian, rows: &[usize], buses: &[usize]) -> usize {
    let cols = columns(h, buses.iter().copied());
    exact::rank(&h.matrix.select(rows, &cols))
}

/// `rank(H_P,*) == rank(H_P,I\D) + |D|`: securing `meters` leaves no
/// undetectable attack that moves any state in `targets`.
pub fn is_protected(h: &Jacobian, meters: &[usize], targets: &StateSet, eps: f64) -> bool {
    if targets.is_empty() {
        return true;
    }
    if meters.len() < targets.len() {
        return false;
    }
    let all: Vec<usize> = (0..h.cols()).collect();
    let rest: Vec<usize> = (0..h.cols())
        .filter(|&c| !targets.contains(h.bus_of(c)))
        .collect();
    let full = linalg::rank(&h.matrix.select(meters, &all), eps);
    let reduced = linalg::rank(&h.matrix.select(meters, &rest), eps);
    full == reduced + targets.len()
}

/// Same condition evaluated with exact rational arithmetic on the stored
/// entries. Only meaningful when those entries are exact, as with unit or
/// dyadic reactances; rounded `1/x` values can break true dependencies.
pub fn is_protected_exact(h: &Jacobian, meters: &[usize], targets: &StateSet) -> bool {
    if targets.is_empty() {
        return true;
    }
    let all: Vec<usize> = (0..h.cols()).collect();
    let rest: Vec<usize> = (0..h.cols())
        .filter(|&c| !targets.contains(h.bus_of(c)))
        .collect();
    exact::rank(&h.matrix.select(meters, &all))
        == exact::rank(&h.matrix.select(meters, &rest)) + targets.len()
}

/// Whether the subnetwork measured by `meters` is observable: it contains the
/// reference and `H[meters, S]` has full column rank for its states `S`.
pub fn is_observable_subnetwork(sys: &System, meters: &[usize]) -> bool {
    let (vertices, _) = sys.graph.measured_subnetwork(meters);
    let r = sys.reference();
    if !vertices.contains(&r) {
        return false;
    }
    let states: Vec<usize> = vertices.into_iter().filter(|&v| v != r).collect();
    rank_of(&sys.jacobian, meters, &states, sys.eps) == states.len()
}

/// Meters whose Jacobian row is non-zero only in the columns of `states`.
pub fn meters_within(h: &Jacobian, candidates: impl IntoIterator<Item = usize>, in_set: &[bool]) -> Vec<usize> {
    candidates
        .into_iter()
        .filter(|&m| h.row_support(m).all(|b| in_set[b]))
        .collect()
}

/// Picks `|states|` candidate rows that are independent on the columns of
/// `states`, scanning candidates in order (or in a seed-shuffled order).
/// Returns `None` when the candidates are rank deficient.
pub fn basic_measurement_set(
    h: &Jacobian,
    candidates: &[usize],
    states: &StateSet,
    seed: Option<u64>,
    eps: f64,
) -> Option<Vec<usize>> {
    if states.is_empty() {
        return Some(Vec::new());
    }
    let cols = columns(h, states.iter());
    let sub = h.matrix.select(candidates, &cols);
    let mut order: Vec<usize> = (0..candidates.len()).collect();
    if let Some(seed) = seed {
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    }
    let mut basis = RowBasis::new(sub.max_abs(), eps);
    let mut chosen = Vec::with_capacity(cols.len());
    for i in order {
        if basis.insert(sub.row(i)) {
            chosen.push(candidates[i]);
            if chosen.len() == cols.len() {
                chosen.sort_unstable();
                return Some(chosen);
            }
        }
    }
    None
}

/// An undetectable injection: state error `c` and meter error `a = Hc`.
#[derive(Clone, Debug, PartialEq)]
pub struct AttackVector {
    /// Indexed by Jacobian column.
    pub c: Vec<f64>,
    /// Indexed by meter.
    pub a: Vec<f64>,
}

impl AttackVector {
    pub fn to_json(&self, sys: &System) -> Value {
        let mut c = Map::new();
        for (col, v) in self.c.iter().enumerate() {
            let bus = sys.network.bus_id(sys.jacobian.bus_of(col));
            c.insert(bus.to_string(), Value::from(*v));
        }
        let mut a = Map::new();
        for (m, v) in self.a.iter().enumerate() {
            a.insert(sys.placement.meter(m).id.clone(), Value::from(*v));
        }
        let mut out = Map::new();
        out.insert("c".into(), Value::Object(c));
        out.insert("a".into(), Value::Object(a));
        Value::Object(out)
    }

    /// Meters the attacker has to tamper with.
    pub fn compromised_meters(&self) -> Vec<usize> {
        (0..self.a.len()).filter(|&m| self.a[m] != 0.0).collect()
    }
}

/// Relative size below which RREF entries count as zero in attack synthesis.
const NULL_ENTRY_TOL: f64 = 1e-7;

/// Builds `c` in the null space of `H_P,*` with `c_target = 1`, or returns
/// `None` when every such null vector has `c_target = 0` (the target is then
/// protected by `meters`).
pub fn synthesize_attack(
    h: &Jacobian,
    meters: &[usize],
    target: usize,
    eps: f64,
) -> Option<AttackVector> {
    let t = h.column_of(target)?;
    let all: Vec<usize> = (0..h.cols()).collect();
    let sub = h.matrix.select(meters, &all);
    let rref = linalg::rref(&sub, eps);
    let free = rref.free_columns();
    let c = if free.binary_search(&t).is_ok() {
        rref.null_vector(t)
    } else {
        let row = rref.pivots.iter().position(|&p| p == t)?;
        let r = rref.matrix.row(row);
        let scale = r.iter().fold(1.0_f64, |acc, v| acc.max(v.abs()));
        let f = free
            .iter()
            .copied()
            .find(|&f| r[f].abs() > NULL_ENTRY_TOL * scale)?;
        let mut v = rref.null_vector(f);
        let ct = v[t];
        for x in v.iter_mut() {
            *x /= ct;
        }
        v[t] = 1.0;
        v
    };
    let mut a = h.matrix.mul_vec(&c);
    let scale = h.matrix.max_abs() * norm2(&c).max(1.0);
    for x in a.iter_mut() {
        if x.abs() <= 1e-10 * scale {
            *x = 0.0;
        }
    }
    Some(AttackVector { c, a })
}

/// `is_protected` evaluated target-by-target through attack synthesis.
pub fn no_attack_on_any(h: &Jacobian, meters: &[usize], targets: &StateSet, eps: f64) -> bool {
    targets
        .iter()
        .all(|t| synthesize_attack(h, meters, t, eps).is_none())
}

/// Least-squares state estimate `θ = (HᵀH)⁻¹Hᵀz` (identity covariance).
pub fn estimate_state(h: &Matrix, z: &[f64], eps: f64) -> Result<Vec<f64>> {
    if linalg::rank(h, eps) < h.cols() {
        return Err(Error::Unobservable);
    }
    let ht = h.transpose();
    let mut gram = Matrix::zeros(h.cols(), h.cols());
    for i in 0..h.cols() {
        for j in 0..h.cols() {
            let v: f64 = ht.row(i).iter().zip(ht.row(j)).map(|(a, b)| a * b).sum();
            gram.set(i, j, v);
        }
    }
    let rhs = ht.mul_vec(z);
    cholesky_solve(&gram, &rhs).ok_or(Error::Unobservable)
}

pub fn residual_norm(h: &Matrix, z: &[f64], eps: f64) -> Result<f64> {
    let theta = estimate_state(h, z, eps)?;
    let fit = h.mul_vec(&theta);
    Ok(norm2(
        &z.iter().zip(&fit).map(|(a, b)| a - b).collect::<Vec<_>>(),
    ))
}

/// Bad-data residuals of `z` and of the attacked measurements `z + a`.
pub fn bdd_residual_check(h: &Matrix, z: &[f64], a: &[f64], eps: f64) -> Result<(f64, f64)> {
    let clean = residual_norm(h, z, eps)?;
    let attacked: Vec<f64> = z.iter().zip(a).map(|(x, y)| x + y).collect();
    Ok((clean, residual_norm(h, &attacked, eps)?))
}

/// Residuals of one noisy measurement snapshot.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BddTrial {
    pub clean: f64,
    /// With the structured attack `a` added.
    pub attacked: f64,
    /// With a random vector of the same norm as `a` added.
    pub random: f64,
}

/// Runs the residual test on `trials` snapshots `z = Hθ + e`, `θ` uniform in
/// `[-1, 1]` and `e ~ N(0, sigma²)`. Needs the full placement to be observable.
pub fn bdd_demo(
    sys: &System,
    a: &[f64],
    trials: usize,
    sigma: f64,
    seed: u64,
) -> Result<Vec<BddTrial>> {
    let h = &sys.jacobian.matrix;
    if linalg::rank(h, sys.eps) < h.cols() {
        return Err(Error::Unobservable);
    }
    let noise = Normal::new(0.0, sigma).map_err(|e| Error::Invalid(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scale = norm2(a);
    (0..trials)
        .map(|_| {
            let theta: Vec<f64> = (0..h.cols()).map(|_| rng.gen_range(-1.0..=1.0)).collect();
            let z: Vec<f64> = h
                .mul_vec(&theta)
                .into_iter()
                .map(|v| v + noise.sample(&mut rng))
                .collect();
            let dir: Vec<f64> = (0..a.len()).map(|_| StandardNormal.sample(&mut rng)).collect();
            let n = norm2(&dir).max(f64::MIN_POSITIVE);
            let r: Vec<f64> = dir.iter().map(|v| v * scale / n).collect();
            let (clean, attacked) = bdd_residual_check(h, &z, a, sys.eps)?;
            let (_, random) = bdd_residual_check(h, &z, &r, sys.eps)?;
            Ok(BddTrial {
                clean,
                attacked,
                random,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn empty_target_is_protected() {
        let sys = fixtures::five_bus().unwrap();
        assert!(is_protected(&sys.jacobian, &[], &StateSet::empty(), sys.eps));
    }

    #[test]
    fn nothing_protected_without_meters() {
        let sys = fixtures::five_bus().unwrap();
        let d = sys.targets(&[2]).unwrap();
        assert!(!is_protected(&sys.jacobian, &[], &d, sys.eps));
        let att = synthesize_attack(&sys.jacobian, &[], sys.network.bus_index(2).unwrap(), sys.eps).unwrap();
        let col = sys.jacobian.column_of(sys.network.bus_index(2).unwrap()).unwrap();
        assert_eq!(att.c[col], 1.0);
    }

    #[test]
    fn observable_subnetwork_needs_the_reference() {
        let sys = fixtures::five_bus().unwrap();
        let r1 = sys.placement.meter_index("r1").unwrap();
        let r4 = sys.placement.meter_index("r4").unwrap();
        assert!(is_observable_subnetwork(&sys, &[r1]));
        assert!(!is_observable_subnetwork(&sys, &[r4]));
        assert!(is_observable_subnetwork(&sys, &sys.all_meters()));
        assert!(!is_observable_subnetwork(&sys, &[]));
    }

    #[test]
    fn selected_meters_for_subset_of_five_bus() {
        // meters measuring only {v1, v2, v4, v5}
        let sys = fixtures::five_bus().unwrap();
        let mut inside = vec![false; 5];
        for id in [1, 2, 4, 5] {
            inside[sys.network.bus_index(id).unwrap()] = true;
        }
        let picked = meters_within(&sys.jacobian, 0..sys.placement.len(), &inside);
        assert_eq!(sys.meter_ids(&picked), ["r1", "r2", "r4", "r6"]);
    }

    #[test]
    fn basic_set_edge_cases() {
        let sys = fixtures::five_bus().unwrap();
        let h = &sys.jacobian;
        assert_eq!(basic_measurement_set(h, &[0, 1], &StateSet::empty(), None, sys.eps), Some(vec![]));
        let all = sys.all_states();
        assert!(basic_measurement_set(h, &[0, 1, 2], &all, Some(3), sys.eps).is_none());
        let b = basic_measurement_set(h, &sys.all_meters(), &all, Some(7), sys.eps).unwrap();
        assert_eq!(b.len(), 4);
        assert_eq!(rank_of(h, &b, all.as_slice(), sys.eps), 4);
    }

    #[test]
    fn boundary_attack_on_seven_bus() {
        // interior meters secured: the attacker shifts buses 4..7 together
        let sys = fixtures::seven_bus(false).unwrap();
        let p = sys.meters_by_id(&["f45", "f56", "f57", "i5"]).unwrap();
        let b5 = sys.network.bus_index(5).unwrap();
        let att = synthesize_attack(&sys.jacobian, &p, b5, sys.eps).unwrap();
        let mut c_by_bus: Vec<(u32, f64)> = att
            .c
            .iter()
            .enumerate()
            .map(|(col, v)| (sys.network.bus_id(sys.jacobian.bus_of(col)), *v))
            .collect();
        c_by_bus.sort_by_key(|x| x.0);
        assert_eq!(c_by_bus, vec![(2, 0.0), (3, 0.0), (4, 1.0), (5, 1.0), (6, 1.0), (7, 1.0)]);
        let hit = sys.meter_ids(&att.compromised_meters());
        assert_eq!(hit, ["f14", "f34", "i3"]);
    }

    #[test]
    fn residuals_agree_for_structured_attack() {
        let sys = fixtures::ieee14().unwrap();
        let h = &sys.jacobian.matrix;
        let theta: Vec<f64> = (0..h.cols()).map(|i| 0.01 * i as f64).collect();
        let z = h.mul_vec(&theta);
        let att = synthesize_attack(&sys.jacobian, &[], sys.network.bus_index(9).unwrap(), sys.eps).unwrap();
        let (clean, attacked) = bdd_residual_check(h, &z, &att.a, sys.eps).unwrap();
        assert!(clean < 1e-10 && attacked < 1e-10);
    }

    #[test]
    fn estimator_rejects_unobservable_matrix() {
        let sys = fixtures::five_bus().unwrap();
        let h = sys.jacobian.matrix.select(&[0, 1], &[0, 1, 2, 3]);
        assert!(matches!(bdd_residual_check(&h, &[0.0, 0.0], &[0.0, 0.0], 1e-9), Err(Error::Unobservable)));
    }
}
