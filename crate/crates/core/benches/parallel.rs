//! Sequential against rayon execution for the three data-parallel kernels:
//! assembly, the sparse matvec and one full estimator sample.

use std::hint::black_box;

use cgstop::estimators::{EstimatorSet, EstimatorSuite};
use cgstop::exec::Execution;
use cgstop::experiment::{base_mesh, build, ProblemKind};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

const POLICIES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn assembly(c: &mut Criterion) {
    let mut g = c.benchmark_group("assembly");
    g.sample_size(10);
    for (name, exec) in POLICIES {
        g.bench_function(BenchmarkId::new(name, "test1 n=8 N=4"), |b| {
            b.iter(|| build(ProblemKind::Test1, base_mesh(ProblemKind::Test1, 8, 0.0).unwrap(), 4, exec).unwrap())
        });
    }
    g.finish();
}

fn matvec(c: &mut Criterion) {
    let p = build(ProblemKind::Test1, base_mesh(ProblemKind::Test1, 16, 0.0).unwrap(), 6, Execution::Sequential).unwrap();
    let a = &p.system().a;
    let x: Vec<f64> = (0..a.nrows()).map(|i| (i as f64).sin()).collect();
    let mut y = vec![0.0; a.nrows()];
    let mut g = c.benchmark_group("matvec");
    for (name, exec) in POLICIES {
        g.bench_function(BenchmarkId::new(name, format!("{} dofs", a.nrows())), |b| {
            b.iter(|| a.matvec_into(black_box(&x), &mut y, exec))
        });
    }
    g.finish();
}

fn estimators(c: &mut Criterion) {
    let mut g = c.benchmark_group("estimators");
    g.sample_size(10);
    for (name, exec) in POLICIES {
        let p = build(ProblemKind::Test1, base_mesh(ProblemKind::Test1, 8, 0.0).unwrap(), 4, exec).unwrap();
        let suite = EstimatorSuite::new(&p, EstimatorSet::ALL).unwrap();
        let x: Vec<f64> = (0..p.num_free()).map(|i| (0.37 * i as f64).cos()).collect();
        g.bench_function(BenchmarkId::new(name, "all estimators"), |b| b.iter(|| suite.sample(&p, 0, black_box(&x)).unwrap()));
    }
    g.finish();
}

criterion_group!(benches, assembly, matvec, estimators);
criterion_main!(benches);
