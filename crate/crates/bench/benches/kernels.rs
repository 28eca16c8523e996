use std::hint::black_box;

use amdpkit::dp::DEFAULT_TOL;
use amdpkit::ergodicity::minorization_time;
use amdpkit::{
    build_empirical_kernel, hard_instance, random_ergodic_mdp, solve_bellman, GenerativeModel,
    HardInstanceSpec, Policy,
};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};

fn bench_solve_bellman(c: &mut Criterion) {
    let mut group = c.benchmark_group("solve_bellman");
    for (states, gamma) in [(4, 0.9), (4, 0.99), (16, 0.99)] {
        let mdp = random_ergodic_mdp(states, 3, 7, 0.01).unwrap();
        group.bench_with_input(
            BenchmarkId::new(format!("S{states}"), gamma),
            &gamma,
            |b, &g| b.iter(|| solve_bellman(black_box(&mdp), None, g, DEFAULT_TOL).unwrap()),
        );
    }
    group.finish();
}

fn bench_empirical_kernel(c: &mut Criterion) {
    let spec = HardInstanceSpec {
        t_minorize_target: 10.0,
        theta: 0.05,
        kappa: 0.2,
        n_actions: 4,
    };
    let mdp = hard_instance(&spec).unwrap();
    let n = 100_000u64;
    let mut group = c.benchmark_group("build_empirical_kernel");
    group.throughput(Throughput::Elements(n * mdp.n_pairs() as u64));
    group.bench_function("hard_instance_n1e5", |b| {
        b.iter(|| {
            let gm = GenerativeModel::new(mdp.clone(), 3);
            build_empirical_kernel(&gm, black_box(n)).unwrap()
        })
    });
    let random = random_ergodic_mdp(8, 2, 1, 0.01).unwrap();
    group.throughput(Throughput::Elements(n * random.n_pairs() as u64));
    group.bench_function("random_S8_n1e5", |b| {
        b.iter(|| {
            let gm = GenerativeModel::new(random.clone(), 3);
            build_empirical_kernel(&gm, black_box(n)).unwrap()
        })
    });
    group.finish();
}

fn bench_minorization(c: &mut Criterion) {
    let mut group = c.benchmark_group("minorization_time");
    for t in [10.0, 100.0] {
        let spec = HardInstanceSpec {
            t_minorize_target: t,
            theta: 1.0 / (2.0 * t),
            kappa: 0.2,
            n_actions: 2,
        };
        let chain = hard_instance(&spec)
            .unwrap()
            .induce(&Policy::new(vec![0, 0]))
            .unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(t), &chain, |b, chain| {
            b.iter(|| minorization_time(black_box(chain), 4096).unwrap())
        });
    }
    group.finish();
}

criterion_group!(
    benches,
    bench_solve_bellman,
    bench_empirical_kernel,
    bench_minorization
);
criterion_main!(benches);
