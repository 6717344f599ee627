use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use voltorus_core::{
    estimate_cb, eval_gd, simulate_convolution, solve_resolvent, CovarianceSpectrum, GdQuad,
    Kernel, Normalization, SimulationConfig, ZeroModePolicy,
};

fn bench_resolvent(c: &mut Criterion) {
    let mut group = c.benchmark_group("resolvent_solve");
    for kernel in [Kernel::Exp, Kernel::TExp] {
        group.bench_with_input(BenchmarkId::from_parameter(kernel.id()), &kernel, |b, k| {
            b.iter(|| solve_resolvent(black_box(k), -4.0, 1e-3, 10.0).unwrap())
        });
    }
    group.finish();
}

fn bench_admissibility(c: &mut Criterion) {
    let mut group = c.benchmark_group("admissibility_cb");
    group.sample_size(20);
    for n_max in [32u32, 128] {
        group.bench_with_input(BenchmarkId::from_parameter(n_max), &n_max, |b, &n| {
            b.iter(|| estimate_cb(black_box(&Kernel::TExp), n, 1e-6).unwrap())
        });
    }
    group.finish();
}

fn bench_green(c: &mut Criterion) {
    let quad = GdQuad::default();
    c.bench_function("gd_point_d3", |b| {
        b.iter(|| eval_gd(3, black_box(&[0.05, 0.0, 0.0]), quad, Normalization::AsPrinted).unwrap())
    });
}

fn bench_simulate(c: &mut Criterion) {
    let kernel = Kernel::Exp;
    let spec = CovarianceSpectrum::parametric(1, 4, 1.0, 1.0);
    let dt = (2f64).powi(-8);
    let config = SimulationConfig {
        d: 1,
        alpha: -1.0,
        n_max: 4,
        time_grid: (1..=4).map(|k| k as f64 * 0.25).collect(),
        conv_dt: dt,
        memory_horizon: 12.0,
        n_paths: 16,
        seed: 1,
        zero_mode_policy: ZeroModePolicy::StationaryKernel,
    };
    let mut group = c.benchmark_group("simulate_convolution");
    group.sample_size(10);
    group.bench_function("d1_n4_p16", |b| {
        b.iter(|| simulate_convolution(black_box(&kernel), &spec, &config).unwrap())
    });
    group.finish();
}

criterion_group!(
    benches,
    bench_resolvent,
    bench_admissibility,
    bench_green,
    bench_simulate
);
criterion_main!(benches);
