//! Fractional Gaussian noise: second-order descriptors and exact sampling.
//!
//! Increments of fractional Brownian motion on a uniform grid are drawn by
//! circulant embedding of their Toeplitz covariance (Davies–Harte). When the
//! embedding has a materially negative eigenvalue the sampler falls back to
//! a Cholesky factor of the full covariance. White-noise increments are drawn
//! from an independent substream of the same root seed.

use std::f64::consts::PI;
use std::sync::Arc;

use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::special::gamma_fn;

/// Eigenvalues below this (unit time step) are treated as an embedding failure.
const EIGEN_TOLERANCE: f64 = -1e-10;

/// Hurst exponent of the fractional noise.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct HurstParam(f64);

impl HurstParam {
    /// Hurst exponent in the solver regime `1/2 < H < 1`.
    pub fn new(value: f64) -> Result<Self> {
        if value.is_finite() && value > 0.5 && value < 1.0 {
            Ok(Self(value))
        } else {
            Err(Error::domain(format!(
                "Hurst parameter must satisfy 1/2 < H < 1, got {value}"
            )))
        }
    }

    /// Also admits `H = 1/2`, the white-noise case used when testing samplers.
    pub fn for_sampling(value: f64) -> Result<Self> {
        if value == 0.5 {
            Ok(Self(value))
        } else {
            Self::new(value)
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// `2H − 1`, the exponent of the memory kernel's integrated power law.
    pub fn memory_exponent(self) -> f64 {
        2.0 * self.0 - 1.0
    }
}

/// Uniform time grid of the noise increments.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IncrementGrid {
    n_steps: usize,
    dt: f64,
}

impl IncrementGrid {
    pub fn new(n_steps: usize, dt: f64) -> Result<Self> {
        if n_steps == 0 {
            return Err(Error::domain("increment grid needs at least one step"));
        }
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::domain(format!("time step must be positive, got {dt}")));
        }
        Ok(Self { n_steps, dt })
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn horizon(&self) -> f64 {
        self.n_steps as f64 * self.dt
    }
}

/// Covariance of FBM increments `ΔB^H` at integer `lag` on a grid of spacing `dt`.
pub fn fgn_increment_autocov(hurst: HurstParam, lag: usize, dt: f64) -> Result<f64> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::domain(format!("time step must be positive, got {dt}")));
    }
    Ok(dt.powf(2.0 * hurst.value()) * unit_autocov(hurst.value(), lag))
}

fn unit_autocov(h: f64, lag: usize) -> f64 {
    let k = lag as f64;
    let two_h = 2.0 * h;
    0.5 * ((k + 1.0).powf(two_h) + (k - 1.0).abs().powf(two_h) - 2.0 * k.powf(two_h))
}

/// Power spectral density `S_H(ω) = H Γ(2H) sin(Hπ)/π · |ω|^{1−2H}` of unit FGN.
///
/// Returns `f64::INFINITY` at `ω = 0` when `H > 1/2`.
pub fn spectral_density(hurst: HurstParam, omega: f64) -> Result<f64> {
    if !omega.is_finite() {
        return Err(Error::domain(format!("frequency must be finite, got {omega}")));
    }
    let h = hurst.value();
    let scale = h * gamma_fn(2.0 * h)? * (h * PI).sin() / PI;
    if omega == 0.0 {
        return Ok(if h > 0.5 { f64::INFINITY } else { scale });
    }
    Ok(scale * omega.abs().powf(1.0 - 2.0 * h))
}

/// Which factorisation produced the samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SamplingMethod {
    /// Circulant embedding with Cholesky fallback.
    Auto,
    CirculantEmbedding,
    Cholesky,
}

/// Purpose tags separating the random substreams of a path.
#[derive(Debug, Clone, Copy)]
pub(crate) enum Stream {
    Fgn = 0,
    Gwn = 1,
    Initial = 2,
}

/// Counter-based substream: one ChaCha stream per (path, purpose).
pub(crate) fn substream(seed: u64, path: usize, purpose: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(path as u64 * 4 + purpose as u64);
    rng
}

enum Factor {
    Circulant {
        /// `sqrt(λ_k / M)` for the unit-step covariance.
        sqrt_eigen: Vec<f64>,
        fft: Arc<dyn Fft<f64>>,
    },
    Cholesky {
        /// Row-major lower-triangular factor of the unit-step covariance.
        lower: Vec<f64>,
    },
}

/// Reusable exact sampler of FGN and GWN increments for one `(H, grid)` pair.
pub struct NoiseSampler {
    hurst: HurstParam,
    grid: IncrementGrid,
    factor: Factor,
    fgn_scale: f64,
    gwn_scale: f64,
}

impl NoiseSampler {
    pub fn new(hurst: HurstParam, grid: IncrementGrid) -> Result<Self> {
        Self::with_method(hurst, grid, SamplingMethod::Auto)
    }

    pub fn with_method(hurst: HurstParam, grid: IncrementGrid, method: SamplingMethod) -> Result<Self> {
        let n = grid.n_steps;
        let factor = match method {
            SamplingMethod::Cholesky => cholesky_factor(hurst, n)?,
            SamplingMethod::CirculantEmbedding => circulant_factor(hurst, n)?.ok_or_else(|| {
                Error::domain(format!(
                    "circulant embedding has negative eigenvalues (H = {}, n_steps = {n})",
                    hurst.value()
                ))
            })?,
            SamplingMethod::Auto => match circulant_factor(hurst, n)? {
                Some(f) => f,
                None => {
                    log::debug!("circulant embedding not PSD; using Cholesky (n_steps = {n})");
                    cholesky_factor(hurst, n)?
                }
            },
        };
        Ok(Self {
            hurst,
            grid,
            factor,
            fgn_scale: grid.dt.powf(hurst.value()),
            gwn_scale: grid.dt.sqrt(),
        })
    }

    pub fn hurst(&self) -> HurstParam {
        self.hurst
    }

    pub fn grid(&self) -> IncrementGrid {
        self.grid
    }

    pub fn method(&self) -> SamplingMethod {
        match self.factor {
            Factor::Circulant { .. } => SamplingMethod::CirculantEmbedding,
            Factor::Cholesky { .. } => SamplingMethod::Cholesky,
        }
    }

    /// Fills one path's increments from its own substreams.
    pub fn fill_path(&self, seed: u64, path: usize, fgn: &mut [f64], gwn: &mut [f64]) {
        let n = self.grid.n_steps;
        assert_eq!(fgn.len(), n);
        assert_eq!(gwn.len(), n);

        let mut rng = substream(seed, path, Stream::Fgn);
        match &self.factor {
            Factor::Circulant { sqrt_eigen, fft } => {
                let mut buf: Vec<Complex64> = sqrt_eigen
                    .iter()
                    .map(|&s| {
                        let re: f64 = StandardNormal.sample(&mut rng);
                        let im: f64 = StandardNormal.sample(&mut rng);
                        Complex64::new(s * re, s * im)
                    })
                    .collect();
                fft.process(&mut buf);
                for (out, y) in fgn.iter_mut().zip(&buf) {
                    *out = self.fgn_scale * y.re;
                }
            }
            Factor::Cholesky { lower } => {
                let z: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
                for (i, out) in fgn.iter_mut().enumerate() {
                    let row = &lower[i * n..i * n + i + 1];
                    *out = self.fgn_scale * row.iter().zip(&z).map(|(l, z)| l * z).sum::<f64>();
                }
            }
        }

        let mut rng = substream(seed, path, Stream::Gwn);
        for out in gwn.iter_mut() {
            let z: f64 = StandardNormal.sample(&mut rng);
            *out = self.gwn_scale * z;
        }
    }

    /// Samples a whole ensemble; rows are paths.
    pub fn sample(&self, n_paths: usize, seed: u64) -> Result<NoiseEnsemble> {
        if n_paths == 0 {
            return Err(Error::domain("ensemble needs at least one path"));
        }
        let n = self.grid.n_steps;
        let mut fgn = Array2::<f64>::zeros((n_paths, n));
        let mut gwn = Array2::<f64>::zeros((n_paths, n));
        {
            let fgn_rows = fgn.as_slice_mut().expect("standard layout");
            let gwn_rows = gwn.as_slice_mut().expect("standard layout");
            fgn_rows
                .par_chunks_mut(n)
                .zip(gwn_rows.par_chunks_mut(n))
                .enumerate()
                .for_each(|(p, (f, w))| self.fill_path(seed, p, f, w));
        }
        Ok(NoiseEnsemble {
            fgn,
            gwn,
            seed,
            hurst: self.hurst,
            grid: self.grid,
        })
    }
}

fn circulant_factor(hurst: HurstParam, n: usize) -> Result<Option<Factor>> {
    if n < 2 {
        // A single increment has no embedding; the 1x1 Cholesky is exact.
        return Ok(None);
    }
    let m = 2 * (n - 1);
    let h = hurst.value();
    let mut row: Vec<Complex64> = (0..m)
        .map(|k| {
            let lag = if k < n { k } else { m - k };
            Complex64::new(unit_autocov(h, lag), 0.0)
        })
        .collect();
    let mut planner = FftPlanner::<f64>::new();
    let fft = planner.plan_fft_forward(m);
    fft.process(&mut row);
    let min = row.iter().map(|c| c.re).fold(f64::INFINITY, f64::min);
    if min < EIGEN_TOLERANCE {
        return Ok(None);
    }
    let sqrt_eigen = row.iter().map(|c| (c.re.max(0.0) / m as f64).sqrt()).collect();
    Ok(Some(Factor::Circulant { sqrt_eigen, fft }))
}

fn cholesky_factor(hurst: HurstParam, n: usize) -> Result<Factor> {
    let h = hurst.value();
    let cov = |i: usize, j: usize| unit_autocov(h, i.abs_diff(j));
    let mut lower = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let dot: f64 = (0..j).map(|k| lower[i * n + k] * lower[j * n + k]).sum();
            if i == j {
                let d = cov(i, i) - dot;
                if !(d > 0.0 && d.is_finite()) {
                    return Err(Error::Cholesky { hurst: h, n_steps: n });
                }
                lower[i * n + i] = d.sqrt();
            } else {
                lower[i * n + j] = (cov(i, j) - dot) / lower[j * n + j];
            }
        }
    }
    Ok(Factor::Cholesky { lower })
}

/// FGN and GWN increments for a batch of paths (row = path, column = step).
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseEnsemble {
    pub fgn: Array2<f64>,
    pub gwn: Array2<f64>,
    pub seed: u64,
    pub hurst: HurstParam,
    pub grid: IncrementGrid,
}

impl NoiseEnsemble {
    pub fn n_paths(&self) -> usize {
        self.fgn.nrows()
    }
}

/// Draws `n_paths` independent FGN/GWN increment paths.
pub fn sample_noise(hurst: HurstParam, grid: IncrementGrid, n_paths: usize, seed: u64) -> Result<NoiseEnsemble> {
    NoiseSampler::new(hurst, grid)?.sample(n_paths, seed)
}
