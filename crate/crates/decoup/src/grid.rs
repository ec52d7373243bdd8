//! Uniform periodic grids.

use crate::error::{Error, Result};
use crate::numeric::{is_prime, log_p_exact};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Bins are read as elements of Z/p^e; cutoffs are subgroup indicators.
    Exact { p: u64 },
    /// Bins are read as signed frequencies; cutoffs are raised cosines.
    Real,
}

impl Mode {
    pub fn exact2() -> Self {
        Mode::Exact { p: 2 }
    }

    /// Radix of the scale lattice: p in exact mode, 2 in real mode.
    pub fn radix(&self) -> u64 {
        match self {
            Mode::Exact { p } => *p,
            Mode::Real => 2,
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Mode::Exact { .. })
    }
}

/// A periodic box `prod [0, extent_i)` sampled with `samples_i` points per axis.
///
/// Axes may differ: the exponential-sum grid is `[0, N) x [0, N^2)`, one
/// period in each variable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub extents: Vec<f64>,
    pub samples: Vec<usize>,
    pub mode: Mode,
}

impl GridSpec {
    pub fn new(extents: Vec<f64>, samples: Vec<usize>, mode: Mode) -> Result<Self> {
        if extents.is_empty() || extents.len() != samples.len() {
            return Err(Error::Shape("extents and samples must have equal nonzero length".into()));
        }
        if extents.iter().any(|&e| !(e > 0.0) || !e.is_finite()) {
            return Err(Error::InvalidParameter("extents must be positive".into()));
        }
        if samples.iter().any(|&m| m == 0) {
            return Err(Error::InvalidParameter("samples must be positive".into()));
        }
        if let Mode::Exact { p } = mode {
            if !is_prime(p) {
                return Err(Error::InvalidParameter(format!("p = {p} is not prime")));
            }
            for &m in &samples {
                if log_p_exact(m as u64, p).is_none() {
                    return Err(Error::InvalidParameter(format!(
                        "exact mode needs samples that are powers of {p}, got {m}"
                    )));
                }
            }
        }
        Ok(Self { extents, samples, mode })
    }

    /// Square grid of side `side` with `m` samples per axis.
    pub fn cube(side: f64, m: usize, dims: usize, mode: Mode) -> Result<Self> {
        Self::new(vec![side; dims], vec![m; dims], mode)
    }

    pub fn dims(&self) -> usize {
        self.samples.len()
    }

    pub fn len(&self) -> usize {
        self.samples.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        self.extents[axis] / self.samples[axis] as f64
    }

    pub fn cell_volume(&self) -> f64 {
        (0..self.dims()).map(|a| self.spacing(a)).product()
    }

    pub fn volume(&self) -> f64 {
        self.extents.iter().product()
    }

    /// Row-major strides (last axis fastest).
    pub fn strides(&self) -> Vec<usize> {
        let mut s = vec![1; self.dims()];
        for a in (0..self.dims().saturating_sub(1)).rev() {
            s[a] = s[a + 1] * self.samples[a + 1];
        }
        s
    }

    pub fn unravel(&self, mut idx: usize) -> Vec<usize> {
        let mut out = vec![0; self.dims()];
        for a in (0..self.dims()).rev() {
            out[a] = idx % self.samples[a];
            idx /= self.samples[a];
        }
        out
    }

    pub fn ravel(&self, multi: &[usize]) -> usize {
        multi
            .iter()
            .zip(&self.samples)
            .fold(0, |acc, (&i, &m)| acc * m + (i % m))
    }

    pub fn point(&self, multi: &[usize]) -> Vec<f64> {
        multi
            .iter()
            .enumerate()
            .map(|(a, &i)| i as f64 * self.spacing(a))
            .collect()
    }

    /// Signed frequency (cycles per unit length) of bin `k` on `axis`.
    pub fn signed_freq(&self, axis: usize, k: usize) -> f64 {
        let m = self.samples[axis];
        let ks = if 2 * k < m { k as f64 } else { k as f64 - m as f64 };
        ks / self.extents[axis]
    }

    /// Exponent e with samples = p^e on `axis` (exact mode only).
    pub fn exponent(&self, axis: usize) -> Option<u32> {
        match self.mode {
            Mode::Exact { p } => log_p_exact(self.samples[axis] as u64, p),
            Mode::Real => None,
        }
    }

    pub fn same_shape(&self, other: &GridSpec) -> bool {
        self.samples == other.samples
            && self
                .extents
                .iter()
                .zip(&other.extents)
                .all(|(a, b)| (a - b).abs() <= 1e-12 * a.abs().max(1.0))
    }

    pub fn with_mode(&self, mode: Mode) -> Result<Self> {
        Self::new(self.extents.clone(), self.samples.clone(), mode)
    }
}
