use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use modenergy::experiments::oscillation_sweep;
use modenergy::fourier::paper_initial;
use modenergy::{builtin_scheme, make_grid, PotentialSpec, Propagator};

fn single_step(c: &mut Criterion) {
    let mut group = c.benchmark_group("step");
    let v = PotentialSpec::paper();
    for cutoff in [16usize, 64, 256] {
        let grid = make_grid(1, cutoff).unwrap();
        for name in ["lie-midpoint", "tj4", "suzuki8"] {
            let scheme = builtin_scheme(name).unwrap();
            let mut prop = Propagator::new(&scheme, 0.01, grid, &v).unwrap();
            let mut u = paper_initial(grid);
            group.bench_with_input(BenchmarkId::new(name, cutoff), &cutoff, |b, _| {
                b.iter(|| prop.step_in_place(black_box(&mut u)).unwrap())
            });
        }
    }
    group.finish();
}

fn short_sweep(c: &mut Criterion) {
    let grid = make_grid(1, 64).unwrap();
    let u0 = paper_initial(grid);
    let v = PotentialSpec::paper();
    let hs: Vec<f64> = (0..8).map(|i| 0.01 + 0.01 * i as f64).collect();
    let scheme = builtin_scheme("strang-r-outside").unwrap();
    c.bench_function("sweep/strang-r-outside/T=1", |b| {
        b.iter(|| oscillation_sweep(&scheme, black_box(&hs), 1.0, &u0, &v, 20).unwrap())
    });
}

criterion_group!(benches, single_step, short_sweep);
criterion_main!(benches);
