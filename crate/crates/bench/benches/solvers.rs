use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use mlota::experiments::run_sweep;
use mlota::sdp::{solve_sdr, SdpOptions, SdrProblem};
use mlota::topology::random_geometric_topology;
use mlota::{build_mst_kruskal, build_mst_prim, simulate_aggregation, ExperimentConfig, RealifiedProblem, Scheme};
use mlota_bench::feasible_instance;
use std::hint::black_box;

fn mst(c: &mut Criterion) {
    let cfg = ExperimentConfig::default();
    let mut group = c.benchmark_group("mst");
    for k in [20usize, 100] {
        let graph = random_geometric_topology(k, cfg.radius, 7, &cfg.fading).unwrap().graph;
        group.bench_with_input(BenchmarkId::new("prim", k), &graph, |b, g| b.iter(|| build_mst_prim(black_box(g)).unwrap()));
        group.bench_with_input(BenchmarkId::new("kruskal", k), &graph, |b, g| {
            b.iter(|| build_mst_kruskal(black_box(g)).unwrap())
        });
    }
    group.finish();
}

fn sdr(c: &mut Criterion) {
    let cfg = ExperimentConfig::default();
    let mut group = c.benchmark_group("sdr");
    group.sample_size(20);
    for k in [5usize, 10, 20] {
        let inst = feasible_instance(&cfg, k, 5.0);
        let problem = RealifiedProblem::new(&inst.ivas, &inst.caps, inst.sigma_sq).unwrap();
        let sdr = SdrProblem::new(problem.b_matrix(inst.sigma_sq), problem.caps.clone()).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(k), &sdr, |b, p| {
            b.iter(|| solve_sdr(black_box(p), &SdpOptions::default()).unwrap())
        });
    }
    group.finish();
}

fn designs(c: &mut Criterion) {
    let cfg = ExperimentConfig::default();
    let mut group = c.benchmark_group("design");
    group.sample_size(10);
    let inst = feasible_instance(&cfg, 10, 5.0);
    for scheme in [Scheme::Dinkelbach, Scheme::Rayleigh, Scheme::Common] {
        group.bench_function(scheme.to_string(), |b| b.iter(|| inst.solve(black_box(scheme), &cfg).unwrap()));
    }
    group.finish();
}

fn protocol(c: &mut Criterion) {
    let cfg = ExperimentConfig::default();
    let inst = feasible_instance(&cfg, 20, 5.0);
    let design = inst.solve(Scheme::Common, &cfg).unwrap().design;
    c.bench_function("simulate_aggregation/20", |b| {
        b.iter(|| simulate_aggregation(&inst.tree, &inst.ivas, &design, &inst.noise, black_box(3)).unwrap())
    });
}

fn sweep(c: &mut Criterion) {
    let cfg = ExperimentConfig {
        k: 8,
        trials: 10,
        snr_db: vec![0.0, 10.0],
        ..ExperimentConfig::default()
    };
    let mut group = c.benchmark_group("sweep");
    group.sample_size(10);
    group.bench_function("k8_t10_all_schemes", |b| b.iter(|| run_sweep(black_box(&cfg)).unwrap()));
    group.finish();
}

criterion_group!(benches, mst, sdr, designs, protocol, sweep);
criterion_main!(benches);
