use super::spectral::SparseSpectrum;
use crate::error::Result;
use crate::exp_sum::{DyadicPartition, ExpSumSpec};
use crate::field::RegionMask;
use crate::grid::GridSpec;

/// Per-point data over the intervals at the bilinear scale: the two largest
/// `|f_I|` and `sum_I |f_I|^6`.
#[derive(Debug, Clone)]
pub struct BilinearProfile {
    pub grid: GridSpec,
    pub top1: Vec<f64>,
    pub top2: Vec<f64>,
    pub s6: Vec<f64>,
}

impl BilinearProfile {
    /// `max_{I != I'} |f_I f_I'|^{1/2}`.
    pub fn bilinear(&self, i: usize) -> f64 {
        (self.top1[i] * self.top2[i]).sqrt()
    }

    pub fn sixth_root(&self, i: usize) -> f64 {
        self.s6[i].powf(1.0 / 6.0)
    }

    pub fn max_bilinear(&self) -> f64 {
        (0..self.top1.len()).map(|i| self.bilinear(i)).fold(0.0, f64::max)
    }
}

pub fn bilinear_profile(spec: &ExpSumSpec, part: &DyadicPartition, grid: &GridSpec) -> Result<BilinearProfile> {
    let len = grid.len();
    let mut top1 = vec![0.0; len];
    let mut top2 = vec![0.0; len];
    let mut s6 = vec![0.0; len];
    // Singletons: |f_I| = |a_m| everywhere.
    if (0..part.count()).all(|i| part.members(i).len() <= 1) {
        let mut mods: Vec<f64> = (1..=spec.n()).map(|m| spec.a(m).norm()).collect();
        mods.sort_by(|a, b| b.total_cmp(a));
        let t1 = mods.first().copied().unwrap_or(0.0);
        let t2 = mods.get(1).copied().unwrap_or(0.0);
        let six: f64 = mods.iter().map(|m| m.powi(6)).sum();
        return Ok(BilinearProfile { grid: grid.clone(), top1: vec![t1; len], top2: vec![t2; len], s6: vec![six; len] });
    }
    for i in 0..part.count() {
        let sp = SparseSpectrum::from_frequencies(spec, grid, |m| part.index_of(m) == i)?;
        if sp.is_empty() {
            continue;
        }
        let fi = sp.synthesize();
        for (x, z) in fi.data.iter().enumerate() {
            let m = z.norm();
            s6[x] += m.powi(6);
            if m > top1[x] {
                top2[x] = top1[x];
                top1[x] = m;
            } else if m > top2[x] {
                top2[x] = m;
            }
        }
    }
    Ok(BilinearProfile { grid: grid.clone(), top1, top2, s6 })
}

/// `U_alpha`: bilinear size in `[alpha, 2 alpha)` and
/// `(sum |f_I|^6)^{1/6} <= (ln N)^{c'} alpha`.
pub fn level_set(profile: &BilinearProfile, n: usize, alpha: f64, c_prime: f64) -> RegionMask {
    let cap = if n > 1 { (n as f64).ln().powf(c_prime) * alpha } else { alpha };
    let bits = (0..profile.top1.len())
        .map(|i| {
            let b = profile.bilinear(i);
            alpha > 0.0 && b >= alpha && b < 2.0 * alpha && profile.sixth_root(i) <= cap
        })
        .collect();
    RegionMask { grid: profile.grid.clone(), bits }
}

/// Dyadic levels `alpha = 2^k` covering `[lo, hi]`.
pub fn dyadic_alphas(lo: f64, hi: f64) -> Vec<f64> {
    if !(lo > 0.0) || !(hi >= lo) {
        return Vec::new();
    }
    let k0 = lo.log2().floor() as i32;
    let k1 = hi.log2().floor() as i32;
    (k0..=k1).map(|k| 2f64.powi(k)).collect()
}
