#![allow(dead_code)]

use meterguard::observability::is_protected_exact;
use meterguard::synth::{random_system, SynthParams};
use meterguard::{StateSet, System};

/// Smallest meter subset satisfying the exact rank condition, by trying every
/// subset in order of size.
pub fn brute_force_minimum(sys: &System, targets: &StateSet) -> Option<usize> {
    let m = sys.placement.len();
    assert!(m <= 16, "brute force is limited to 16 meters");
    let mut best: Option<usize> = None;
    for mask in 0u32..(1 << m) {
        let size = mask.count_ones() as usize;
        if best.is_some_and(|b| size >= b) {
            continue;
        }
        let meters: Vec<usize> = (0..m).filter(|&i| mask >> i & 1 == 1).collect();
        if is_protected_exact(&sys.jacobian, &meters, targets) {
            best = Some(size);
        }
    }
    best
}

/// Observable system with at most 7 buses and 8 meters.
pub fn tiny_system(seed: u64) -> System {
    let buses = 3 + (seed % 5) as usize;
    let lines = (buses - 1 + (seed / 5 % 4) as usize).min(buses * (buses - 1) / 2);
    let meters = (buses - 1 + (seed / 3 % 3) as usize).min(8);
    let injection = (seed / 7 % 3) as usize;
    let injection = injection.min(meters);
    let p = SynthParams::small(buses, lines, meters - injection, injection);
    random_system(&p, seed).expect("observable tiny system")
}
