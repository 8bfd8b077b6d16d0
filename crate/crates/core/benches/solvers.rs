use criterion::{criterion_group, criterion_main, Criterion};

use meterguard::experiment::{run_trials, TrialSpec};
use meterguard::fixtures;
use meterguard::milp::MilpOptions;
use meterguard::plan::Method;
use meterguard::sve::{solve_sve, SveOptions};
use meterguard::synth::{random_system, random_targets, SynthParams};
use meterguard::tph::{solve_tph, TphOptions};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Runs `f` on the global pool and on a single-thread pool. Without the
/// `parallel` feature only the sequential path exists.
fn both<F: Fn() + Sync>(c: &mut Criterion, group: &str, f: F) {
    let mut g = c.benchmark_group(group);
    g.sample_size(10);
    #[cfg(feature = "parallel")]
    {
        g.bench_function(criterion::BenchmarkId::new("global_pool", rayon::current_num_threads()), |b| b.iter(&f));
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        g.bench_function(criterion::BenchmarkId::new("single_thread", 1), |b| b.iter(|| one.install(&f)));
    }
    #[cfg(not(feature = "parallel"))]
    g.bench_function("sequential", |b| b.iter(&f));
    g.finish();
}

fn tph(c: &mut Criterion) {
    let sys = random_system(&SynthParams::scale57(), 7).unwrap();
    let d = random_targets(&sys.network, 4, &mut ChaCha8Rng::seed_from_u64(7));
    both(c, "tph_k15_57bus", || {
        solve_tph(&sys, &d, &TphOptions::new(15, 0)).unwrap();
    });
}

fn sve(c: &mut Criterion) {
    let sys = fixtures::ieee14().unwrap();
    let d = sys.targets(&[3, 14]).unwrap();
    both(c, "sve_14bus", || {
        solve_sve(&sys, &d, SveOptions::default()).unwrap();
    });
}

fn trials(c: &mut Criterion) {
    let sys = fixtures::ieee14().unwrap();
    let spec = TrialSpec {
        sizes: vec![1, 4, 10],
        trials: 4,
        methods: vec![Method::Sve, Method::Tph],
        ks: vec![1, 5],
        seed: 0,
        milp: MilpOptions::default(),
    };
    both(c, "trials_14bus", || {
        run_trials(&sys, &spec).unwrap();
    });
}

criterion_group!(benches, tph, sve, trials);
criterion_main!(benches);
