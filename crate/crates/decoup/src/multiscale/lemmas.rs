//! Numerical checks of the low lemma, the high lemma and its small-scale
//! variant. The high-pass keeps frequencies outside the closed ball of the
//! cutoff radius.

use super::prune::{cap_index_map, NO_CAP};
use super::spectral::SparseSpectrum;
use crate::error::{Error, Result};
use crate::exp_sum::{check_q_grid, DyadicPartition, ExpSumSpec};
use crate::field::RealField;
use crate::filter::{exact_level, highpass_real, in_exact_ball, lowpass_real, lowpass_symbol};
use crate::grid::{GridSpec, Mode};
use crate::numeric::{log_p_exact, KahanSum};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LemmaBackend {
    /// Both sides from sparse pair spectra and Parseval.
    Spectral,
    /// Both sides from synthesized fields and FFT filtering.
    Grid,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LowLemmaCheck {
    pub max_discrepancy: f64,
    pub sup_f_sq: f64,
}

impl LowLemmaCheck {
    pub fn relative(&self) -> f64 {
        if self.sup_f_sq == 0.0 {
            self.max_discrepancy
        } else {
            self.max_discrepancy / self.sup_f_sq
        }
    }
}

/// `max_x | lowpass(|sum_I f_I|^2) - lowpass(sum_I |f_I|^2) |` at radius
/// `r = part.delta()`. Each side is built from its own synthesized fields.
pub fn verify_low_lemma(spec: &ExpSumSpec, part: &DyadicPartition, grid: &GridSpec) -> Result<LowLemmaCheck> {
    check_mode(part, grid)?;
    let r = part.delta();
    let f = crate::exp_sum::eval_exp_sum(spec, grid)?;
    let lhs = lowpass_real(&f.abs_sq(), r)?;
    let mut sq = RealField::zeros(grid);
    for i in 0..part.count() {
        let sp = SparseSpectrum::from_frequencies(spec, grid, |m| part.index_of(m) == i)?;
        if sp.is_empty() {
            continue;
        }
        sq.add_assign(&sp.synthesize().abs_sq())?;
    }
    let rhs = lowpass_real(&sq, r)?;
    let max_discrepancy = lhs.data.iter().zip(&rhs.data).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let s = f.sup_norm();
    Ok(LowLemmaCheck { max_discrepancy, sup_f_sq: s * s })
}

fn check_mode(part: &DyadicPartition, grid: &GridSpec) -> Result<()> {
    check_q_grid(part.n, grid)?;
    if part.exact != grid.mode.is_exact() {
        return Err(Error::InvalidParameter("partition and grid modes differ".into()));
    }
    Ok(())
}

/// Squared high-pass weight `(1 - low(k))^2` per flat bin.
fn high_weight(grid: &GridSpec, cutoff: f64) -> Result<Box<dyn Fn(usize) -> f64>> {
    match grid.mode {
        Mode::Exact { p } => {
            let j = exact_level(cutoff, p)?;
            let g = grid.clone();
            Ok(Box::new(move |k| if in_exact_ball(&g, p, &g.unravel(k), j) { 0.0 } else { 1.0 }))
        }
        Mode::Real => {
            let s = lowpass_symbol(grid, cutoff)?;
            Ok(Box::new(move |k| (1.0 - s[k]).powi(2)))
        }
    }
}

fn mean_square(f: &RealField) -> f64 {
    let mut s = KahanSum::new();
    for v in &f.data {
        s.add(v * v);
    }
    s.value() / f.data.len() as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HighLemmaCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
    pub holds: bool,
}

/// `avg |sum_I high(|f_I|^2)|^2 <= (delta_coarse / cutoff) sum_I avg |high(|f_I|^2)|^2`
/// over the intervals `I` of `coarse`, high-pass at radius `cutoff`.
pub fn verify_high_lemma(
    spec: &ExpSumSpec,
    coarse: &DyadicPartition,
    cutoff: f64,
    grid: &GridSpec,
    backend: LemmaBackend,
) -> Result<HighLemmaCheck> {
    check_mode(coarse, grid)?;
    if !(coarse.delta() > cutoff) {
        return Err(Error::InvalidParameter(format!(
            "coarse scale {} must exceed the cutoff {cutoff}",
            coarse.delta()
        )));
    }
    let ratio = coarse.delta() / cutoff;
    let pieces: Vec<SparseSpectrum> = (0..coarse.count())
        .map(|i| SparseSpectrum::from_frequencies(spec, grid, |m| coarse.index_of(m) == i))
        .collect::<Result<_>>()?;
    let blocks: Vec<Vec<SparseSpectrum>> = pieces.into_iter().map(|p| vec![p]).collect();
    let (lhs, rhs_sum) = block_energies(grid, cutoff, &blocks, backend)?;
    let rhs = ratio * rhs_sum;
    Ok(HighLemmaCheck { lhs, rhs, ratio, holds: lhs <= rhs * (1.0 + 1e-9) })
}

/// For blocks `B` of pieces `f_I`: returns
/// `(avg |sum_B sum_I high(|f_I|^2)|^2, sum_B avg |sum_{I in B} high(|f_I|^2)|^2)`.
fn block_energies(
    grid: &GridSpec,
    cutoff: f64,
    blocks: &[Vec<SparseSpectrum>],
    backend: LemmaBackend,
) -> Result<(f64, f64)> {
    match backend {
        LemmaBackend::Spectral => {
            let w = high_weight(grid, cutoff)?;
            let mut all = Vec::new();
            let mut per_block = KahanSum::new();
            for block in blocks {
                let autos: Vec<SparseSpectrum> = block.iter().map(|p| p.autocorrelation()).collect();
                let sum = SparseSpectrum::sum(grid, &autos)?;
                per_block.add(sum.weighted_energy(&w));
                all.push(sum);
            }
            let total = SparseSpectrum::sum(grid, &all)?;
            Ok((total.weighted_energy(&w), per_block.value()))
        }
        LemmaBackend::Grid => {
            let mut total = RealField::zeros(grid);
            let mut per_block = KahanSum::new();
            for block in blocks {
                let mut g = RealField::zeros(grid);
                for p in block {
                    if !p.is_empty() {
                        g.add_assign(&p.synthesize().abs_sq())?;
                    }
                }
                per_block.add(mean_square(&highpass_real(&g, cutoff)?));
                total.add_assign(&g)?;
            }
            Ok((mean_square(&highpass_real(&total, cutoff)?), per_block.value()))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VariantCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub rel_gap: f64,
    pub holds: bool,
}

/// Small-scale variant: with `f_I` the pieces on the caps of scale `1/N` and
/// blocks the intervals of scale `p^{-coarse_level}`,
/// `avg |sum_I high(|f_I|^2)|^2 = sum_B avg |sum_{I in B} high(|f_I|^2)|^2`
/// at radius `w = N^{-2} p^{coarse_level}`. Exact mode only.
pub fn verify_high_lemma_variant(
    field: &SparseSpectrum,
    n: usize,
    coarse_level: u32,
    backend: LemmaBackend,
) -> Result<VariantCheck> {
    let grid = &field.grid;
    let p = match grid.mode {
        Mode::Exact { p } => p,
        Mode::Real => return Err(Error::InvalidParameter("the variant check needs exact mode".into())),
    };
    let k = log_p_exact(n as u64, p)
        .ok_or_else(|| Error::InvalidParameter(format!("N = {n} is not a power of {p}")))?;
    if coarse_level > k {
        return Err(Error::InvalidParameter(format!("coarse level {coarse_level} finer than 1/N")));
    }
    let fine = DyadicPartition::new(n, k, grid.mode)?;
    let map = cap_index_map(grid, &fine)?;
    let mut caps: Vec<Vec<(usize, num_complex::Complex64)>> = vec![Vec::new(); fine.count()];
    for &(bin, z) in &field.terms {
        match map[bin] {
            NO_CAP => return Err(Error::InvalidParameter(format!("bin {bin} lies outside every 1/N cap"))),
            c => caps[c as usize].push((bin, z)),
        }
    }
    let block_count = p.pow(coarse_level) as usize;
    let mut blocks: Vec<Vec<SparseSpectrum>> = vec![Vec::new(); block_count];
    for (c, terms) in caps.into_iter().enumerate() {
        if !terms.is_empty() {
            blocks[c % block_count].push(SparseSpectrum { grid: grid.clone(), terms });
        }
    }
    let w = (p as f64).powi(-((2 * k - coarse_level) as i32));
    let (lhs, rhs) = block_energies(grid, w, &blocks, backend)?;
    let scale = lhs.abs().max(rhs.abs());
    let rel_gap = if scale == 0.0 { 0.0 } else { (lhs - rhs).abs() / scale };
    Ok(VariantCheck { lhs, rhs, rel_gap, holds: rel_gap <= 1e-9 })
}
