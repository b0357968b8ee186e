//! Sequential vs rayon execution on the three parallel hot paths:
//! differentiation-matrix assembly, the Laplace frequency sweep, and the
//! per-time contour inversions of a linear solve.
//!
//! Run with `cargo bench` (rayon path) and compare against the sequential
//! baseline bars; with `--no-default-features` only the sequential bars
//! remain meaningful.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use fracwave::diffmat::{local_diff_matrix, ShapeRule};
use fracwave::geometry::{build_stencils, NodeSet};
use fracwave::kernels::KernelFamily;
use fracwave::par::Exec;
use fracwave::presets::resolve_contour;
use fracwave::problems::builtin;
use fracwave::solver::{solve_time_grid, Discretization, SolverOptions};

fn modes() -> Vec<(&'static str, Exec)> {
    vec![("sequential", Exec::sequential()), ("parallel", Exec::default())]
}

/// Weight solves for all three derivative orders on a dense-stencil grid.
fn bench_diffmat_assembly(c: &mut Criterion) {
    let mut group = c.benchmark_group("diffmat_assembly");
    let nodes = NodeSet::uniform(-1.0, 1.0, 800).unwrap();
    let stencils = build_stencils(&nodes, 25).unwrap();
    let rule = ShapeRule::default_local();
    for (name, exec) in modes() {
        group.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, exec| {
            b.iter(|| {
                for order in 1..=3 {
                    let m = local_diff_matrix(
                        &nodes,
                        &stencils,
                        KernelFamily::Multiquadric,
                        &rule,
                        order,
                        exec,
                    )
                    .unwrap();
                    black_box(m);
                }
            })
        });
    }
    group.finish();
}

/// One full nonlinear benchmark solve: the frequency sweep dominates, and
/// every contour-node system factors independently.
fn bench_frequency_sweep(c: &mut Criterion) {
    let mut group = c.benchmark_group("frequency_sweep");
    group.sample_size(20);
    let setup = builtin("problem2").unwrap();
    let (spec, disc) = setup.build(&Exec::default()).unwrap();
    let (contour, _) = resolve_contour(setup.contour_kind, setup.window, setup.m).unwrap();
    for (name, exec) in modes() {
        let opts = SolverOptions {
            exec,
            ..SolverOptions::default()
        };
        group.bench_with_input(BenchmarkId::from_parameter(name), &opts, |b, opts| {
            b.iter(|| {
                let r = solve_time_grid(&spec, &disc, &contour, &setup.times, opts).unwrap();
                black_box(r);
            })
        });
    }
    group.finish();
}

/// Linear solve over many output times: one sweep, then per-time inversions
/// fan out.
fn bench_many_time_inversion(c: &mut Criterion) {
    let mut group = c.benchmark_group("many_time_inversion");
    group.sample_size(20);
    let mut setup = builtin("periodic_burgers").unwrap();
    setup.eta = 0.0; // linear path: single sweep + parallel inversions
    setup.n = 120;
    setup.n_x = 11;
    let (spec, disc) = setup.build(&Exec::default()).unwrap();
    let (contour, _) = resolve_contour(setup.contour_kind, setup.window, setup.m).unwrap();
    let disc: &Discretization = &disc;
    for (name, exec) in modes() {
        let opts = SolverOptions {
            exec,
            ..SolverOptions::default()
        };
        group.bench_with_input(BenchmarkId::from_parameter(name), &opts, |b, opts| {
            b.iter(|| {
                let r = solve_time_grid(&spec, disc, &contour, &setup.times, opts).unwrap();
                black_box(r);
            })
        });
    }
    group.finish();
}

criterion_group!(
    benches,
    bench_diffmat_assembly,
    bench_frequency_sweep,
    bench_many_time_inversion
);
criterion_main!(benches);
