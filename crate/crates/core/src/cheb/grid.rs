use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Chebyshev–Gauss–Lobatto grid of degree `N`.
///
/// Nodes are stored in descending order, `x_k = cos(kπ/N)`, so `nodes[0] = 1`
/// and `nodes[N] = -1`. The grid also owns the FFT plan used by the discrete
/// cosine transforms, which makes it cheap to share one grid between many
/// transforms (and threads).
#[derive(Clone)]
pub struct ChebGrid {
    n_max: usize,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    norms: Vec<f64>,
    fft: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for ChebGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ChebGrid")
            .field("n_max", &self.n_max)
            .field("nodes", &self.nodes)
            .finish_non_exhaustive()
    }
}

/// Builds the Gauss–Lobatto grid of degree `n_max`.
pub fn gauss_lobatto_grid(n_max: usize) -> Result<ChebGrid> {
    ChebGrid::new(n_max)
}

impl ChebGrid {
    pub fn new(n_max: usize) -> Result<Self> {
        if n_max == 0 {
            return Err(Error::DegenerateGrid(n_max));
        }
        let n = n_max as f64;
        let mut nodes: Vec<f64> = (0..=n_max).map(|k| (k as f64 * PI / n).cos()).collect();
        // Enforce the exact endpoint values and the mirror symmetry that
        // floating point cos() only gets approximately right.
        nodes[0] = 1.0;
        nodes[n_max] = -1.0;
        for k in 0..=n_max / 2 {
            let mirrored = n_max - k;
            if 2 * k == n_max {
                nodes[k] = 0.0;
            } else {
                nodes[mirrored] = -nodes[k];
            }
        }
        let weights = (0..=n_max)
            .map(|k| if k == 0 || k == n_max { PI / (2.0 * n) } else { PI / n })
            .collect();
        let norms = (0..=n_max)
            .map(|k| if k == 0 || k == n_max { PI } else { PI / 2.0 })
            .collect();
        let fft = FftPlanner::new().plan_fft_forward(2 * n_max);
        Ok(Self {
            n_max,
            nodes,
            weights,
            norms,
            fft,
        })
    }

    /// Polynomial degree `N`.
    pub fn n_max(&self) -> usize {
        self.n_max
    }

    /// Number of nodes, `N + 1`.
    pub fn len(&self) -> usize {
        self.n_max + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Quadrature weights `w_k`.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Normalization constants `γ_n`.
    pub fn norms(&self) -> &[f64] {
        &self.norms
    }

    /// Type-I discrete cosine transform
    /// `G_n = x_0 + (-1)^n x_N + 2 Σ_{k=1}^{N-1} x_k cos(π n k / N)`,
    /// computed with one complex FFT of length `2N` on the even extension.
    pub(crate) fn dct1(&self, input: &[f64], output: &mut [f64]) {
        let n = self.n_max;
        debug_assert_eq!(input.len(), n + 1);
        debug_assert_eq!(output.len(), n + 1);
        let mut buf: Vec<Complex<f64>> = Vec::with_capacity(2 * n);
        buf.extend(input.iter().map(|&v| Complex::new(v, 0.0)));
        buf.extend(input[1..n].iter().rev().map(|&v| Complex::new(v, 0.0)));
        self.fft.process(&mut buf);
        for (o, c) in output.iter_mut().zip(&buf) {
            *o = c.re;
        }
    }

    /// Endpoint factor `c̄_n` (2 at `n = 0, N`, 1 otherwise).
    pub(crate) fn end_factor(&self, k: usize) -> f64 {
        if k == 0 || k == self.n_max {
            2.0
        } else {
            1.0
        }
    }
}
