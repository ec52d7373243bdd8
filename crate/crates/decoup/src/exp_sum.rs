//! Exponential sums `f(x) = sum_{n=1}^N a_n e(n x1/N + n^2 x2/N^2)`.
//!
//! `f` has period `N` in `x1` and `N^2` in `x2`, so its averages over
//! `Q = [0, N^2]^2` equal averages over one period cell `[0, N) x [0, N^2)`.
//! All grids here sample that cell. Frequency `n` sits in bin
//! `(n mod A, n^2 mod B)` for a grid of `A x B` samples.

use crate::error::{Error, Result};
use crate::fft::synthesize;
use crate::field::{lp_avg_norm, Field, Normalization, RegionMask};
use crate::grid::{GridSpec, Mode};
use crate::numeric::{e, l2_norm, KahanComplex};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::path::PathBuf;

#[derive(Debug, Clone, PartialEq)]
pub struct ExpSumSpec {
    /// `coeffs[n - 1] = a_n`.
    pub coeffs: Vec<Complex64>,
}

impl ExpSumSpec {
    pub fn new(coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::InvalidParameter("N must be at least 1".into()));
        }
        Ok(Self { coeffs })
    }

    pub fn all_ones(n: usize) -> Self {
        Self { coeffs: vec![Complex64::new(1.0, 0.0); n.max(1)] }
    }

    /// i.i.d. uniform unit-modulus phases from a ChaCha8 stream.
    pub fn random_phase(n: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self { coeffs: (0..n.max(1)).map(|_| e(rng.gen::<f64>())).collect() }
    }

    /// Complex Gaussian coefficients (used where varying moduli matter).
    pub fn random_gaussian(n: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let coeffs = (0..n.max(1))
            .map(|_| {
                let r = (-2.0 * (1.0 - rng.gen::<f64>()).ln()).sqrt();
                r * e(rng.gen::<f64>())
            })
            .collect();
        Self { coeffs }
    }

    pub fn n(&self) -> usize {
        self.coeffs.len()
    }

    pub fn a(&self, n: usize) -> Complex64 {
        self.coeffs[n - 1]
    }

    pub fn l2(&self) -> f64 {
        l2_norm(&self.coeffs)
    }

    pub fn scaled(&self, c: Complex64) -> Self {
        Self { coeffs: self.coeffs.iter().map(|a| a * c).collect() }
    }

    pub fn conj(&self) -> Self {
        Self { coeffs: self.coeffs.iter().map(|a| a.conj()).collect() }
    }

    /// Keeps only the frequencies `n` accepted by `keep`.
    pub fn restrict(&self, keep: impl Fn(usize) -> bool) -> Self {
        let coeffs = (1..=self.n())
            .map(|n| if keep(n) { self.a(n) } else { Complex64::new(0.0, 0.0) })
            .collect();
        Self { coeffs }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|a| a.norm_sqr() == 0.0)
    }
}

/// How coefficients are produced in configs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum CoeffSource {
    AllOnes,
    RandomPhase { seed: u64 },
    /// One coefficient per line, `re im` or `re,im`.
    File { path: PathBuf },
}

impl CoeffSource {
    pub fn build(&self, n: usize) -> Result<ExpSumSpec> {
        match self {
            CoeffSource::AllOnes => Ok(ExpSumSpec::all_ones(n)),
            CoeffSource::RandomPhase { seed } => Ok(ExpSumSpec::random_phase(n, *seed)),
            CoeffSource::File { path } => {
                let text = std::fs::read_to_string(path)?;
                let coeffs = parse_coeffs(&text)?;
                if coeffs.len() != n {
                    return Err(Error::InvalidParameter(format!(
                        "{} coefficients in file, expected {n}",
                        coeffs.len()
                    )));
                }
                ExpSumSpec::new(coeffs)
            }
        }
    }
}

pub fn parse_coeffs(text: &str) -> Result<Vec<Complex64>> {
    let mut out = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let parts: Vec<&str> = line.split(|c: char| c == ',' || c.is_whitespace()).filter(|s| !s.is_empty()).collect();
        let parse = |s: &str| {
            s.parse::<f64>()
                .map_err(|_| Error::InvalidParameter(format!("line {}: bad number {s:?}", ln + 1)))
        };
        let z = match parts.as_slice() {
            [re] => Complex64::new(parse(re)?, 0.0),
            [re, im] => Complex64::new(parse(re)?, parse(im)?),
            _ => return Err(Error::InvalidParameter(format!("line {}: expected 1 or 2 numbers", ln + 1))),
        };
        out.push(z);
    }
    Ok(out)
}

/// Grid on the period cell `[0, N) x [0, N^2)` with `s1 N` and `s2 N^2` samples.
pub fn q_grid(n: usize, s1: usize, s2: usize, mode: Mode) -> Result<GridSpec> {
    GridSpec::new(vec![n as f64, (n * n) as f64], vec![s1 * n, s2 * n * n], mode)
}

/// Real-mode grid with 4x oversampling on both axes. Every frequency
/// difference of up to three pairs is resolved, so L^2, L^4 and L^6
/// quadrature are exact character sums.
pub fn default_q_grid(n: usize) -> Result<GridSpec> {
    q_grid(n, 4, 4, Mode::Real)
}

/// The full p-adic model `Z/N^2 x Z/N^2` (`N` a power of `p`), where caps at
/// every scale down to `1/N` have slabs of full thickness.
pub fn exact_q_grid(n: usize, p: u64) -> Result<GridSpec> {
    q_grid(n, n, 1, Mode::Exact { p })
}

/// Bin of frequency `n` on a period-cell grid.
#[inline]
pub fn freq_bin(grid: &GridSpec, n: usize) -> [usize; 2] {
    let a = grid.samples[0] as u128;
    let b = grid.samples[1] as u128;
    let nn = n as u128;
    [(nn % a) as usize, (nn * nn % b) as usize]
}

pub fn check_q_grid(n: usize, grid: &GridSpec) -> Result<()> {
    let ok = grid.dims() == 2
        && (grid.extents[0] - n as f64).abs() < 1e-9
        && (grid.extents[1] - (n * n) as f64).abs() < 1e-9
        && grid.samples[0] % n == 0
        && grid.samples[1] % (n * n) == 0;
    if ok {
        Ok(())
    } else {
        Err(Error::Shape(format!(
            "grid {:?}/{:?} is not a period cell for N = {n}",
            grid.extents, grid.samples
        )))
    }
}

/// Evaluates `sum_n c_n e(...)` for explicit `(n, c_n)` terms.
pub fn eval_terms(n: usize, grid: &GridSpec, terms: impl IntoIterator<Item = (usize, Complex64)>) -> Result<Field> {
    check_q_grid(n, grid)?;
    let mut spec = Field::zeros(grid);
    for (m, c) in terms {
        let [k1, k2] = freq_bin(grid, m);
        spec.data[k1 * grid.samples[1] + k2] += c;
    }
    Ok(synthesize(spec))
}

pub fn eval_exp_sum(spec: &ExpSumSpec, grid: &GridSpec) -> Result<Field> {
    eval_terms(spec.n(), grid, (1..=spec.n()).map(|n| (n, spec.a(n))))
}

/// Direct evaluation at one point, ascending `n`, compensated.
pub fn eval_at(spec: &ExpSumSpec, x: [f64; 2]) -> Complex64 {
    let nf = spec.n() as f64;
    let mut acc = KahanComplex::new();
    for n in 1..=spec.n() {
        let t = n as f64;
        let phase = (t * x[0] / nf).fract() + (t * t * x[1] / (nf * nf)).fract();
        acc.add(spec.a(n) * e(phase));
    }
    acc.value()
}

/// Partition of the frequencies `1..=N` at scale `delta = p^{-level}`.
///
/// Real mode: interval `k` holds the `n` with `n/N` in `(k delta, (k+1) delta]`.
/// Exact mode: interval `k` is the residue class `n = k mod p^level`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DyadicPartition {
    pub n: usize,
    pub p: u64,
    pub level: u32,
    pub exact: bool,
}

impl DyadicPartition {
    pub fn new(n: usize, level: u32, mode: Mode) -> Result<Self> {
        let p = mode.radix();
        let count = (p as u128).checked_pow(level).unwrap_or(u128::MAX);
        if count > n.max(1) as u128 {
            return Err(Error::InvalidParameter(format!(
                "scale {p}^-{level} is finer than 1/N for N = {n}"
            )));
        }
        Ok(Self { n, p, level, exact: mode.is_exact() })
    }

    pub fn from_delta(n: usize, delta: f64, mode: Mode) -> Result<Self> {
        let j = crate::filter::exact_level(delta, mode.radix())?;
        if j < 0 {
            return Err(Error::InvalidParameter(format!("delta {delta} exceeds 1")));
        }
        Self::new(n, j as u32, mode)
    }

    pub fn delta(&self) -> f64 {
        (self.p as f64).powi(-(self.level as i32))
    }

    pub fn count(&self) -> usize {
        self.p.pow(self.level) as usize
    }

    pub fn index_of(&self, m: usize) -> usize {
        let c = self.count();
        if self.exact {
            m % c
        } else {
            (m * c - 1) / self.n
        }
    }

    /// Members in ascending order.
    pub fn members(&self, k: usize) -> Vec<usize> {
        (1..=self.n).filter(|&m| self.index_of(m) == k).collect()
    }

    /// `(k delta, (k+1) delta]` in real mode.
    pub fn bounds(&self, k: usize) -> (f64, f64) {
        let d = self.delta();
        (k as f64 * d, (k + 1) as f64 * d)
    }
}

pub fn partial_spec(spec: &ExpSumSpec, part: &DyadicPartition, k: usize) -> ExpSumSpec {
    spec.restrict(|m| part.index_of(m) == k)
}

pub fn partial_sum(spec: &ExpSumSpec, part: &DyadicPartition, k: usize, grid: &GridSpec) -> Result<Field> {
    if k >= part.count() {
        return Err(Error::InvalidParameter(format!("interval {k} out of range")));
    }
    eval_terms(
        spec.n(),
        grid,
        (1..=spec.n()).filter(|&m| part.index_of(m) == k).map(|m| (m, spec.a(m))),
    )
}

/// `||f||_{L^p_avg(Q)} / ||a||_2`.
pub fn strichartz_ratio(spec: &ExpSumSpec, p: f64, grid: &GridSpec) -> Result<f64> {
    if p < 2.0 {
        return Err(Error::InvalidParameter("p must be at least 2".into()));
    }
    if spec.is_zero() {
        return Err(Error::InvalidParameter("zero coefficient vector".into()));
    }
    let f = eval_exp_sum(spec, grid)?;
    Ok(lp_avg_norm(&f, p, &RegionMask::full(grid), Normalization::FullDomain)? / spec.l2())
}

/// `||sum_I f_I||_p / (sum_I ||f_I||_p^2)^{1/2}`, averaged norms over Q.
pub fn decoupling_ratio(spec: &ExpSumSpec, part: &DyadicPartition, p: f64, grid: &GridSpec) -> Result<f64> {
    if spec.is_zero() {
        return Err(Error::InvalidParameter("zero coefficient vector".into()));
    }
    let full = RegionMask::full(grid);
    let f = eval_exp_sum(spec, grid)?;
    let num = lp_avg_norm(&f, p, &full, Normalization::FullDomain)?;
    let mut den = crate::numeric::KahanSum::new();
    for k in 0..part.count() {
        let fk = partial_sum(spec, part, k, grid)?;
        den.add(lp_avg_norm(&fk, p, &full, Normalization::FullDomain)?.powi(2));
    }
    Ok(num / den.value().sqrt())
}
