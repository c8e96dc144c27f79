//! Shared helpers for integration tests: a tiny deterministic RNG and
//! builders for random matrices, covariances, and fixed-channel ensembles.

use cogdpc_core::ensemble::{CsitModel, EnsembleConfig, FadingSpec, LinkSpec};
use cogdpc_core::matrix::{ComplexMatrix, HermitianPsd};
use num_complex::Complex;

/// xorshift64*, enough randomness for test instances.
pub struct TestRng(pub u64);

impl TestRng {
    pub fn new(seed: u64) -> Self {
        Self(seed.wrapping_mul(0x9e3779b97f4a7c15).wrapping_add(0x2545f4914f6cdd1d))
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0 ^= self.0 << 13;
        self.0 ^= self.0 >> 7;
        self.0 ^= self.0 << 17;
        self.0.wrapping_mul(0x2545f4914f6cdd1d)
    }

    /// Uniform in (-0.5, 0.5).
    pub fn unit(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64 - 0.5
    }

    pub fn complex(&mut self) -> Complex<f64> {
        Complex::new(self.unit() * 2.0, self.unit() * 2.0)
    }

    pub fn matrix(&mut self, rows: usize, cols: usize) -> ComplexMatrix<f64> {
        let mut m = ComplexMatrix::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m.set(i, j, self.complex());
            }
        }
        m
    }

    pub fn real_matrix(&mut self, rows: usize, cols: usize) -> ComplexMatrix<f64> {
        let mut m = ComplexMatrix::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m.set(i, j, Complex::new(self.unit() * 2.0, 0.0));
            }
        }
        m
    }

    /// Well-conditioned random HPD matrix with the given trace.
    pub fn hpd(&mut self, n: usize, trace: f64) -> HermitianPsd<f64> {
        let b = self.matrix(n, n);
        let g = &b.matmul(&b.adjoint()).hermitize() + &ComplexMatrix::scaled_identity(n, 0.5);
        let t = g.trace().re;
        HermitianPsd::new(g.scale(trace / t)).unwrap()
    }
}

/// Single-sample deterministic ensemble carrying the given link matrices.
pub fn fixed_ensemble(links: Vec<ComplexMatrix<f64>>) -> EnsembleConfig<f64> {
    let specs = links
        .into_iter()
        .map(|m| LinkSpec::new(m.rows(), m.cols(), FadingSpec::Fixed { matrix: m }))
        .collect();
    EnsembleConfig::new(0, 1, specs, CsitModel::None).unwrap()
}

/// i.i.d. CN(mean, variance) ensemble over the given link shapes.
pub fn gaussian_ensemble(
    seed: u64,
    samples: usize,
    shapes: &[(usize, usize)],
    mean: Complex<f64>,
    variance: f64,
) -> EnsembleConfig<f64> {
    let specs = shapes
        .iter()
        .map(|&(r, c)| LinkSpec::new(r, c, FadingSpec::ComplexGaussianIid { mean, variance }))
        .collect();
    EnsembleConfig::new(seed, samples, specs, CsitModel::None).unwrap()
}
