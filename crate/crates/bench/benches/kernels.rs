use std::hint::black_box;
use std::sync::Arc;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rnp_core::krylov::{cg, pcg};
use rnp_core::linops::{gaussian_kernel, ConvolutionOperator, LinearOperator, NormalOperator, Operator, RadonOperator};
use rnp_core::sketch::{nystrom_approx, NystromOptions};
use rnp_core::{Preconditioner, Rng};

fn blur(n: usize) -> Operator {
    Arc::new(ConvolutionOperator::new(&gaussian_kernel(9, 1.6), n, n).unwrap())
}

fn bench_nystrom(c: &mut Criterion) {
    let normal = NormalOperator(blur(64));
    let mut g = c.benchmark_group("nystrom_64x64_blur");
    for k in [20, 64, 100] {
        g.bench_with_input(BenchmarkId::from_parameter(k), &k, |b, &k| {
            let mut rng = Rng::new(1);
            b.iter(|| nystrom_approx(&normal, k, NystromOptions::default(), &mut rng).unwrap());
        });
    }
    g.finish();
}

/// `Φ + μI`.
struct Shifted(NormalOperator, f64);

impl LinearOperator for Shifted {
    fn domain_dim(&self) -> usize {
        self.0.domain_dim()
    }
    fn range_dim(&self) -> usize {
        self.0.range_dim()
    }
    fn apply_into(&self, x: &[f64], y: &mut [f64]) {
        self.0.apply_into(x, y);
        for (yi, xi) in y.iter_mut().zip(x) {
            *yi += self.1 * xi;
        }
    }
    fn adjoint_into(&self, y: &[f64], x: &mut [f64]) {
        self.apply_into(y, x);
    }
}

fn bench_pcg(c: &mut Criterion) {
    let a = blur(64);
    let normal = NormalOperator(Arc::clone(&a));
    let n = a.domain_dim();
    let mut rng = Rng::new(2);
    let rhs = rng.normal_vec(n);
    let x0 = vec![0.0; n];
    let mu = 1e-2;
    let shifted = Shifted(NormalOperator(Arc::clone(&a)), mu);
    let f = nystrom_approx(&normal, 64, NystromOptions::default(), &mut rng).unwrap();
    let pre = Preconditioner::new(&f, mu, false).unwrap();
    let mut g = c.benchmark_group("solve_64x64_blur_mu1e-2");
    g.bench_function("cg", |b| b.iter(|| cg(&shifted, black_box(&rhs), 1e-6, 1000, &x0).unwrap()));
    g.bench_function("pcg_k64", |b| {
        b.iter(|| pcg(&shifted, black_box(&rhs), |r: &[f64]| pre.apply_pinv(r), 1e-6, 1000, &x0).unwrap())
    });
    g.finish();
}

fn bench_radon(c: &mut Criterion) {
    let mut g = c.benchmark_group("radon");
    for n in [32, 64] {
        let op = RadonOperator::new(n, 60, RadonOperator::default_bins(n)).unwrap();
        let x = Rng::new(3).normal_vec(n * n);
        let y = op.apply(&x);
        g.bench_with_input(BenchmarkId::new("forward", n), &x, |b, x| b.iter(|| op.apply(black_box(x))));
        g.bench_with_input(BenchmarkId::new("adjoint", n), &y, |b, y| b.iter(|| op.adjoint(black_box(y))));
    }
    g.finish();
}

criterion_group!(benches, bench_nystrom, bench_pcg, bench_radon);
criterion_main!(benches);
