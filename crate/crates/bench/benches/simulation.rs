use criterion::{criterion_group, criterion_main, Criterion};
use sfcsim::harness::sweep;
use sfcsim_bench::{case, prefault_solver};
use std::hint::black_box;

fn network_solve(c: &mut Criterion) {
    let (solver, e) = prefault_solver(3);
    c.bench_function("network_solve", |b| b.iter(|| solver.solve(black_box(e))));
}

fn loadflow(c: &mut Criterion) {
    let (sc, _) = case(3);
    c.bench_function("loadflow_case3", |b| b.iter(|| sc.loadflow().unwrap()));
}

fn cases(c: &mut Criterion) {
    let mut g = c.benchmark_group("builtin_case");
    g.sample_size(10);
    for n in 1..=4 {
        let (sc, cfg) = case(n);
        g.bench_function(format!("case{n}"), |b| b.iter(|| sc.run_with_stats(&cfg).unwrap()));
    }
    g.finish();
}

fn parallel_sweep(c: &mut Criterion) {
    let (sc, _) = case(4);
    let values: Vec<String> = (1..=8).map(|k| format!("{} MW", k as f64 * 0.5)).collect();
    let mut g = c.benchmark_group("sweep_load_8");
    g.sample_size(10);
    for threads in [1, 4] {
        g.bench_function(format!("{threads}_threads"), |b| {
            b.iter(|| sweep(&sc, "load.p", &values, Some(threads)).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, network_solve, loadflow, cases, parallel_sweep);
criterion_main!(benches);
