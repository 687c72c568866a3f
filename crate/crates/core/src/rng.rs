//! Seeded, counter-based random streams.
//!
//! Every draw request consumes one or more ChaCha8 streams addressed by
//! `(seed, counter)`. Column `j` of a Gaussian test matrix always comes from
//! stream `base + j`, so filling columns in parallel gives the same bits as
//! filling them sequentially. Normal deviates use the ziggurat sampler of
//! `rand_distr::StandardNormal`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::dense::DenseMatrix;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rng {
    seed: u64,
    counter: u64,
}

impl Rng {
    pub fn new(seed: u64) -> Self {
        Self { seed, counter: 0 }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn counter(&self) -> u64 {
        self.counter
    }

    fn stream_at(&self, index: u64) -> ChaCha8Rng {
        let mut inner = ChaCha8Rng::seed_from_u64(self.seed);
        inner.set_stream(index);
        inner
    }

    /// Hands out the next raw stream for sequential sampling.
    pub fn stream(&mut self) -> ChaCha8Rng {
        let s = self.stream_at(self.counter);
        self.counter += 1;
        s
    }

    /// Independent child generator, e.g. one per outer solver iteration.
    pub fn fork(&mut self) -> Rng {
        let mut s = self.stream();
        Rng::new(rand::Rng::random::<u64>(&mut s))
    }

    pub fn normal_vec(&mut self, n: usize) -> Vec<f64> {
        let mut s = self.stream();
        (0..n).map(|_| StandardNormal.sample(&mut s)).collect()
    }

    pub fn uniform_vec(&mut self, n: usize) -> Vec<f64> {
        let mut s = self.stream();
        (0..n).map(|_| rand::Rng::random::<f64>(&mut s)).collect()
    }

    /// `n x k` matrix of i.i.d. standard normal samples.
    pub fn standard_normal_matrix(&mut self, n: usize, k: usize) -> DenseMatrix {
        let base = self.counter;
        self.counter += k as u64;
        let mut data = vec![0.0; n * k];
        data.par_chunks_mut(n.max(1))
            .enumerate()
            .for_each(|(j, col)| {
                let mut s = self.stream_at(base + j as u64);
                for v in col.iter_mut() {
                    *v = StandardNormal.sample(&mut s);
                }
            });
        DenseMatrix::from_vec(n, k, data)
    }
}

/// Free-function form of [`Rng::standard_normal_matrix`].
pub fn standard_normal_matrix(n: usize, k: usize, rng: &mut Rng) -> DenseMatrix {
    rng.standard_normal_matrix(n, k)
}
