//! Frequency cutoffs.
//!
//! Exact mode: the ball of radius `p^{-j}` is the subgroup of bins whose
//! p-adic valuation is at least `j` on every axis. Real mode: radial raised
//! cosine, 1 on `|xi| <= r` and 0 from `2r` on.

use crate::error::{Error, Result};
use crate::fft::{analyze, synthesize};
use crate::field::{Field, RealField};
use crate::grid::{GridSpec, Mode};
use crate::numeric::valuation;
use std::f64::consts::FRAC_PI_2;

/// Integer j with `r = p^{-j}`; errors if `r` is not on the lattice.
pub fn exact_level(r: f64, p: u64) -> Result<i32> {
    if !(r > 0.0) {
        return Err(Error::InvalidParameter(format!("cutoff {r} must be positive")));
    }
    let j = (-(r.ln()) / (p as f64).ln()).round() as i32;
    let back = (p as f64).powi(-j);
    if ((back - r) / r).abs() > 1e-9 {
        return Err(Error::InvalidParameter(format!("cutoff {r} is not a power of 1/{p}")));
    }
    Ok(j)
}

/// Whether bin `k` lies in the closed p-adic ball of level `j`.
#[inline]
pub fn in_exact_ball(grid: &GridSpec, p: u64, k: &[usize], j: i32) -> bool {
    if j <= 0 {
        return true;
    }
    k.iter().enumerate().all(|(a, &ka)| {
        let e = grid.exponent(a).unwrap_or(0);
        valuation(ka as u64, p, e) >= (j as u32).min(e)
    })
}

/// Smallest level j such that bin `k` lies in the ball of level j fails; i.e.
/// the p-adic size of `k` is `p^{-level}`. Returns the minimal axis valuation.
pub fn exact_size_level(grid: &GridSpec, p: u64, k: &[usize]) -> u32 {
    k.iter()
        .enumerate()
        .map(|(a, &ka)| {
            let e = grid.exponent(a).unwrap_or(0);
            if ka == 0 {
                u32::MAX
            } else {
                valuation(ka as u64, p, e)
            }
        })
        .min()
        .unwrap_or(u32::MAX)
}

/// Raised-cosine step: 1 for `s <= 0`, 0 for `s >= 1`.
#[inline]
pub fn cos_ramp(s: f64) -> f64 {
    if s <= 0.0 {
        1.0
    } else if s >= 1.0 {
        0.0
    } else {
        (FRAC_PI_2 * s).cos().powi(2)
    }
}

pub fn lowpass_symbol(grid: &GridSpec, cutoff: f64) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(grid.len());
    match grid.mode {
        Mode::Exact { p } => {
            let j = exact_level(cutoff, p)?;
            for i in 0..grid.len() {
                let k = grid.unravel(i);
                out.push(if in_exact_ball(grid, p, &k, j) { 1.0 } else { 0.0 });
            }
        }
        Mode::Real => {
            if !(cutoff > 0.0) {
                return Err(Error::InvalidParameter("cutoff must be positive".into()));
            }
            for i in 0..grid.len() {
                let k = grid.unravel(i);
                let r2: f64 = k
                    .iter()
                    .enumerate()
                    .map(|(a, &ka)| grid.signed_freq(a, ka).powi(2))
                    .sum();
                out.push(cos_ramp(r2.sqrt() / cutoff - 1.0));
            }
        }
    }
    Ok(out)
}

pub fn apply_multiplier(field: &Field, symbol: &[f64]) -> Result<Field> {
    if symbol.len() != field.len() {
        return Err(Error::Shape("symbol length mismatch".into()));
    }
    let mut c = analyze(field);
    for (z, &s) in c.data.iter_mut().zip(symbol) {
        *z *= s;
    }
    Ok(synthesize(c))
}

pub fn lowpass_convolve(field: &Field, cutoff: f64) -> Result<Field> {
    let s = lowpass_symbol(&field.grid, cutoff)?;
    apply_multiplier(field, &s)
}

pub fn highpass_part(field: &Field, cutoff: f64) -> Result<Field> {
    let low = lowpass_convolve(field, cutoff)?;
    field.sub(&low)
}

pub fn lowpass_real(field: &RealField, cutoff: f64) -> Result<RealField> {
    let out = lowpass_convolve(&field.to_complex(), cutoff)?;
    Ok(RealField { grid: out.grid, data: out.data.iter().map(|z| z.re).collect() })
}

pub fn highpass_real(field: &RealField, cutoff: f64) -> Result<RealField> {
    let low = lowpass_real(field, cutoff)?;
    let data = field.data.iter().zip(&low.data).map(|(a, b)| a - b).collect();
    Ok(RealField { grid: field.grid.clone(), data })
}

/// Phase of the character of bin `k` at grid index `x`, as an integer mod `L`
/// where `L` is the largest axis size. Exact-mode grids only (all axis sizes
/// are powers of one prime, so each divides `L`).
#[inline]
pub fn pairing(grid: &GridSpec, k: &[usize], x: &[usize]) -> u64 {
    let l = *grid.samples.iter().max().unwrap() as u64;
    let mut acc = 0u64;
    for a in 0..k.len() {
        let m = grid.samples[a] as u64;
        let t = (k[a] as u64 % m) * (x[a] as u64 % m) % m;
        acc = (acc + t * (l / m)) % l;
    }
    acc
}

/// All elements of the subgroup generated by `gens` (flat bin indices).
pub fn subgroup_elements(grid: &GridSpec, gens: &[Vec<usize>]) -> Vec<usize> {
    let mut seen = vec![false; grid.len()];
    let mut out = vec![0usize];
    seen[0] = true;
    let mut head = 0;
    while head < out.len() {
        let cur = grid.unravel(out[head]);
        head += 1;
        for g in gens {
            let next: Vec<usize> =
                cur.iter().zip(g).zip(&grid.samples).map(|((c, gi), m)| (c + gi) % m).collect();
            let f = grid.ravel(&next);
            if !seen[f] {
                seen[f] = true;
                out.push(f);
            }
        }
    }
    out.sort_unstable();
    out
}

/// Outcome of the uncertainty-principle check on one coset.
#[derive(Debug, Clone, PartialEq)]
pub struct UncertaintyCheck {
    pub subgroup_size: usize,
    pub support_size: usize,
    pub expected_support: usize,
    pub modulus_spread: f64,
    pub support_is_annihilator: bool,
}

impl UncertaintyCheck {
    pub fn passes(&self, tol: f64) -> bool {
        self.support_size == self.expected_support
            && self.support_is_annihilator
            && self.modulus_spread <= tol
    }
}

/// Inverse DFT of the indicator of `offset + <gens>` must have modulus
/// `|H| / sqrt(|X|)` on the annihilator of `H` and vanish elsewhere.
pub fn check_uncertainty(grid: &GridSpec, gens: &[Vec<usize>], offset: &[usize]) -> Result<UncertaintyCheck> {
    if !grid.mode.is_exact() {
        return Err(Error::InvalidParameter("uncertainty check needs exact mode".into()));
    }
    let h = subgroup_elements(grid, gens);
    let mut spec = Field::zeros(grid);
    for &f in &h {
        let k = grid.unravel(f);
        let shifted: Vec<usize> =
            k.iter().zip(offset).zip(&grid.samples).map(|((a, b), m)| (a + b) % m).collect();
        spec.data[grid.ravel(&shifted)] = 1.0.into();
    }
    let x = crate::fft::dft_inverse(&spec)?;
    let level = h.len() as f64 / (grid.len() as f64).sqrt();
    let tiny = 1e-9 * level;
    let mut support = 0;
    let mut spread: f64 = 0.0;
    let mut annihilator = true;
    for (i, z) in x.data.iter().enumerate() {
        let m = z.norm();
        let xi = grid.unravel(i);
        let in_perp = gens.iter().all(|g| pairing(grid, g, &xi) == 0);
        if m > tiny {
            support += 1;
            spread = spread.max((m - level).abs() / level);
            annihilator &= in_perp;
        } else {
            annihilator &= !in_perp;
        }
    }
    Ok(UncertaintyCheck {
        subgroup_size: h.len(),
        support_size: support,
        expected_support: grid.len() / h.len(),
        modulus_spread: spread,
        support_is_annihilator: annihilator,
    })
}
