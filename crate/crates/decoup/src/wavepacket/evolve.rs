//! Free Schrödinger evolution on a periodic spatial grid.
//!
//! `e^{it Delta} f` multiplies frequency `xi` by `exp(-4 pi^2 i t |xi|^2)`.
//! The spacetime experiments use the time variable `s = 2 pi t`, so that
//! `u(x, s) = sum_xi f^(xi) e(x.xi - s |xi|^2)`: packets at frequency `c` then
//! travel with velocity `2c`, along the normal `(-2c, 1)` to the graph of
//! `-|xi|^2`, and tubes have slope `2 c_theta`.

use crate::error::{Error, Result};
use crate::fft::{analyze, synthesize};
use crate::field::Field;
use crate::grid::GridSpec;
use crate::numeric::e;
use super::real::band_freq;
use num_complex::Complex64;
use std::f64::consts::TAU;

fn freq_sq(grid: &GridSpec, rep: impl Fn(&GridSpec, usize, usize) -> f64) -> Vec<f64> {
    (0..grid.len())
        .map(|i| {
            let k = grid.unravel(i);
            k.iter().enumerate().map(|(a, &ka)| rep(grid, a, ka).powi(2)).sum()
        })
        .collect()
}

/// Precomputed spectrum for repeated evolution of one datum.
#[derive(Debug, Clone)]
pub struct Evolver {
    coeffs: Field,
    freq_sq: Vec<f64>,
}

impl Evolver {
    /// Bins read as signed frequencies.
    pub fn new(f: &Field) -> Self {
        Self { coeffs: analyze(f), freq_sq: freq_sq(&f.grid, |g, a, k| g.signed_freq(a, k)) }
    }

    /// Bins read in the window centered at 1/2 (see [`band_freq`]); for data
    /// band-limited to `[0, 1]^d` on grids too coarse to hold `[-1, 1]^d`.
    pub fn banded(f: &Field) -> Self {
        Self { coeffs: analyze(f), freq_sq: freq_sq(&f.grid, band_freq) }
    }

    /// Slice at lab time `s`: multiplier `e(-s |xi|^2)`.
    pub fn lab_slice(&self, s: f64) -> Field {
        let mut c = self.coeffs.clone();
        for (z, &q) in c.data.iter_mut().zip(&self.freq_sq) {
            *z *= e(-s * q);
        }
        synthesize(c)
    }

    /// `e^{it Delta} f`.
    pub fn schrodinger_slice(&self, t: f64) -> Field {
        self.lab_slice(TAU * t)
    }
}

/// `e^{it Delta} f` at each requested time.
pub fn schrodinger_evolve(f: &Field, times: &[f64]) -> Result<Vec<Field>> {
    if f.grid.mode.is_exact() {
        return Err(Error::InvalidParameter("evolution runs on real-mode grids".into()));
    }
    let ev = Evolver::new(f);
    Ok(times.iter().map(|&t| ev.schrodinger_slice(t)).collect())
}

/// Samples on `space x [0, t_extent)` with `nt` uniformly spaced slices.
#[derive(Debug, Clone)]
pub struct SpacetimeField {
    pub space: GridSpec,
    pub t_extent: f64,
    pub slices: Vec<Vec<Complex64>>,
}

impl SpacetimeField {
    pub fn dt(&self) -> f64 {
        self.t_extent / self.slices.len() as f64
    }

    pub fn time(&self, i: usize) -> f64 {
        i as f64 * self.dt()
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            space: self.space.clone(),
            t_extent: self.t_extent,
            slices: vec![vec![Complex64::new(0.0, 0.0); self.space.len()]; self.slices.len()],
        }
    }

    /// `int |u|^2 dx dt` by the rectangle rule.
    pub fn energy(&self) -> f64 {
        let w = self.space.cell_volume() * self.dt();
        self.slices.iter().flatten().map(|z| z.norm_sqr()).sum::<f64>() * w
    }

    pub fn lp_norm(&self, p: f64) -> f64 {
        let w = self.space.cell_volume() * self.dt();
        (self.slices.iter().flatten().map(|z| z.norm().powf(p)).sum::<f64>() * w).powf(1.0 / p)
    }

    pub fn add_assign(&mut self, other: &SpacetimeField) {
        for (a, b) in self.slices.iter_mut().zip(&other.slices) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
    }

    pub fn sub(&self, other: &SpacetimeField) -> SpacetimeField {
        let mut out = self.clone();
        for (a, b) in out.slices.iter_mut().zip(&other.slices) {
            for (x, y) in a.iter_mut().zip(b) {
                *x -= y;
            }
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.slices.iter().flatten().fold(0.0, |m, z| m.max(z.norm()))
    }
}

/// `u(x, s)` in lab time for `s` in `[0, t_extent)` with `nt` slices.
pub fn extension_spacetime(f: &Field, t_extent: f64, nt: usize) -> Result<SpacetimeField> {
    if f.grid.mode.is_exact() {
        return Err(Error::InvalidParameter("evolution runs on real-mode grids".into()));
    }
    if nt == 0 || !(t_extent > 0.0) {
        return Err(Error::InvalidParameter("need nt > 0 and a positive time extent".into()));
    }
    let ev = Evolver::new(f);
    let dt = t_extent / nt as f64;
    let slices = (0..nt).map(|i| ev.lab_slice(i as f64 * dt).data).collect();
    Ok(SpacetimeField { space: f.grid.clone(), t_extent, slices })
}
