//! Sparse spectra on two-axis grids. Pair autocorrelations of exponential
//! sums have at most `|I|^2` terms, far fewer than grid bins.

use crate::error::{Error, Result};
use crate::exp_sum::{check_q_grid, freq_bin, ExpSumSpec};
use crate::fft::synthesize;
use crate::field::Field;
use crate::grid::GridSpec;
use crate::numeric::{e, KahanSum};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Terms `(flat bin, coefficient)` sorted by bin, bins unique.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseSpectrum {
    pub grid: GridSpec,
    pub terms: Vec<(usize, Complex64)>,
}

impl SparseSpectrum {
    pub fn empty(grid: &GridSpec) -> Self {
        Self { grid: grid.clone(), terms: Vec::new() }
    }

    /// Sorts and merges duplicate bins.
    pub fn from_terms(grid: &GridSpec, mut terms: Vec<(usize, Complex64)>) -> Result<Self> {
        if let Some(&(k, _)) = terms.iter().find(|(k, _)| *k >= grid.len()) {
            return Err(Error::Shape(format!("bin {k} outside grid of {} bins", grid.len())));
        }
        terms.sort_by_key(|t| t.0);
        let mut out: Vec<(usize, Complex64)> = Vec::with_capacity(terms.len());
        for (k, z) in terms {
            match out.last_mut() {
                Some(last) if last.0 == k => last.1 += z,
                _ => out.push((k, z)),
            }
        }
        Ok(Self { grid: grid.clone(), terms: out })
    }

    pub fn from_exp_sum(spec: &ExpSumSpec, grid: &GridSpec) -> Result<Self> {
        Self::from_frequencies(spec, grid, |_| true)
    }

    /// Terms of `spec` with `keep(n)`.
    pub fn from_frequencies(spec: &ExpSumSpec, grid: &GridSpec, keep: impl Fn(usize) -> bool) -> Result<Self> {
        check_q_grid(spec.n(), grid)?;
        let b = grid.samples[1];
        let terms = (1..=spec.n())
            .filter(|&n| keep(n) && spec.a(n) != Complex64::new(0.0, 0.0))
            .map(|n| {
                let [k1, k2] = freq_bin(grid, n);
                (k1 * b + k2, spec.a(n))
            })
            .collect();
        Self::from_terms(grid, terms)
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn l1(&self) -> f64 {
        let mut s = KahanSum::new();
        for (_, z) in &self.terms {
            s.add(z.norm());
        }
        s.value()
    }

    /// `sum |c_k|^2`, the averaged squared L^2 norm of the synthesized field.
    pub fn energy(&self) -> f64 {
        let mut s = KahanSum::new();
        for (_, z) in &self.terms {
            s.add(z.norm_sqr());
        }
        s.value()
    }

    pub fn to_coeff_field(&self) -> Field {
        let mut f = Field::zeros(&self.grid);
        for &(k, z) in &self.terms {
            f.data[k] += z;
        }
        f
    }

    pub fn synthesize(&self) -> Field {
        synthesize(self.to_coeff_field())
    }

    /// Spectrum of `|f|^2`: bin `k - k'` carries `c_k conj(c_k')`.
    pub fn autocorrelation(&self) -> SparseSpectrum {
        let (a, b) = (self.grid.samples[0], self.grid.samples[1]);
        let mut terms = Vec::with_capacity(self.terms.len() * self.terms.len());
        for &(k, z) in &self.terms {
            let (k1, k2) = (k / b, k % b);
            for &(m, w) in &self.terms {
                let (m1, m2) = (m / b, m % b);
                let d1 = (k1 + a - m1) % a;
                let d2 = (k2 + b - m2) % b;
                terms.push((d1 * b + d2, z * w.conj()));
            }
        }
        Self::from_terms(&self.grid, terms).expect("bins stay on the grid")
    }

    pub fn restrict(&self, keep: impl Fn(usize) -> bool) -> SparseSpectrum {
        SparseSpectrum {
            grid: self.grid.clone(),
            terms: self.terms.iter().copied().filter(|(k, _)| keep(*k)).collect(),
        }
    }

    /// Sum of several spectra on the same grid.
    pub fn sum<'a>(grid: &GridSpec, parts: impl IntoIterator<Item = &'a SparseSpectrum>) -> Result<SparseSpectrum> {
        let mut terms = Vec::new();
        for p in parts {
            if !p.grid.same_shape(grid) {
                return Err(Error::Shape("spectra on different grids".into()));
            }
            terms.extend_from_slice(&p.terms);
        }
        Self::from_terms(grid, terms)
    }

    /// `sum_k w(k) |c_k|^2`.
    pub fn weighted_energy(&self, weight: impl Fn(usize) -> f64) -> f64 {
        let mut s = KahanSum::new();
        for &(k, z) in &self.terms {
            s.add(weight(k) * z.norm_sqr());
        }
        s.value()
    }
}

/// Random field whose spectrum fills every cap of `level` on `grid`, with
/// independent complex Gaussian coefficients.
pub fn random_cap_filling(grid: &GridSpec, level: u32, seed: u64) -> Result<SparseSpectrum> {
    use crate::wavepacket::exact::exact_caps;
    let caps = exact_caps(grid, level)?;
    let (a, b) = (grid.samples[0], grid.samples[1]);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut terms = Vec::new();
    for cap in &caps {
        let m = cap.modulus() as usize;
        let s = cap.slab_modulus() as usize;
        let c = cap.residue as i128;
        for k1 in (cap.residue as usize..a).step_by(m) {
            let base = (2 * c * k1 as i128 - c * c).rem_euclid(s as i128) as usize;
            for k2 in (base..b).step_by(s) {
                let r = (-2.0 * (1.0 - rng.gen::<f64>()).ln()).sqrt();
                terms.push((k1 * b + k2, r * e(rng.gen::<f64>())));
            }
        }
    }
    SparseSpectrum::from_terms(grid, terms)
}
