use std::hint::black_box;
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use beltforge::erl::{run_erl, ErlConfig};
use beltforge::grid::make_benchmark;
use beltforge::psa::{random_solution, run_psa, PsaConfig};
use beltforge::qgp::{run_qgp, QgpConfig};
use beltforge::{EvalBackend, Exec, SimBackend, SimConfig, Weights};
use rand::SeedableRng;

const MODES: [(&str, Exec); 2] = [("sequential", Exec::Sequential), ("parallel", Exec::Parallel)];

fn batch_evaluate(c: &mut Criterion) {
    let mut group = c.benchmark_group("evaluate_batch");
    let sim = SimConfig::default();
    let w = Weights::default();
    for size in [6, 12] {
        let problem = make_benchmark(size, true, 0).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let batch: Vec<_> = (0..256).map(|_| random_solution(size, &mut rng)).collect();
        for (name, exec) in MODES {
            group.bench_with_input(BenchmarkId::new(name, size), &batch, |b, batch| {
                b.iter(|| {
                    black_box(exec.map(batch, |s| SimBackend.evaluate(&problem, s, &sim, &w).unwrap()))
                });
            });
        }
    }
    group.finish();
}

fn solvers(c: &mut Criterion) {
    let mut group = c.benchmark_group("solvers");
    group.sample_size(10);
    let sim = SimConfig::default();
    let w = Weights::default();
    let problem = make_benchmark(6, false, 0).unwrap();
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::new("psa_6x6_40it", name), |b| {
            let config = PsaConfig { exec, ..PsaConfig::default() }.with_budget(40);
            b.iter(|| black_box(run_psa(&problem, &config, &SimBackend, &sim, &w).unwrap()));
        });
        group.bench_function(BenchmarkId::new("qgp_6x6_40gen", name), |b| {
            let config = QgpConfig { exec, generations: 40, ..QgpConfig::default() };
            b.iter(|| black_box(run_qgp(&problem, &config, &SimBackend, &sim, &w).unwrap()));
        });
        group.bench_function(BenchmarkId::new("erl_3x3_20gen", name), |b| {
            let config = ErlConfig { exec, generations: 20, ..ErlConfig::default() };
            b.iter(|| black_box(run_erl(&config, &SimBackend, &sim, &w).unwrap()));
        });
    }
    group.finish();
}

criterion_group!(benches, batch_evaluate, solvers);
criterion_main!(benches);
