//! Exact solution counts for the parabola systems and the Parseval oracle
//! `avg_Q |f|^{2m} = sum over (n_1..n_m, n'_1..n'_m) with equal sums and
//! equal sums of squares of a_{n_1}...a_{n_m} conj(a_{n'_1}...a_{n'_m})`.

use crate::error::{Error, Result};
use crate::exp_sum::{eval_exp_sum, DyadicPartition, ExpSumSpec};
use crate::field::{lp_avg_power, Normalization, RegionMask};
use crate::grid::GridSpec;
use crate::numeric::{KahanComplex, KahanSum};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::HashMap;
use std::path::{Path, PathBuf};

/// Largest N accepted by the meet-in-the-middle oracle for m = 3.
pub const MAX_N_SIXTH: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemSolutionCount {
    pub n: usize,
    pub count: u64,
    /// `sum a_n conj(a_m) conj(a_n') a_m'` over solutions.
    pub weighted: Complex64,
}

/// Counts `(n, m, n', m')` with `n, m` in interval `i`, `n', m'` in interval
/// `i2`, `n != m`, `n' != m'`, `n - m = n' - m'` and `n^2 - m^2 = n'^2 - m'^2`.
pub fn count_pair_system(spec: &ExpSumSpec, part: &DyadicPartition, i: usize, i2: usize) -> SystemSolutionCount {
    let keyed = |k: usize| {
        let mut map: HashMap<(i64, i64), (u64, Complex64)> = HashMap::new();
        let mem = part.members(k);
        for &n in &mem {
            for &m in &mem {
                if n == m {
                    continue;
                }
                let (a, b) = (n as i64, m as i64);
                let e = map.entry((a - b, a * a - b * b)).or_insert((0, Complex64::new(0.0, 0.0)));
                e.0 += 1;
                e.1 += spec.a(n) * spec.a(m).conj();
            }
        }
        map
    };
    let left = keyed(i);
    let right = if i == i2 { left.clone() } else { keyed(i2) };
    let mut keys: Vec<_> = left.keys().filter(|k| right.contains_key(k)).copied().collect();
    keys.sort_unstable();
    let mut count = 0u64;
    let mut w = KahanComplex::new();
    for k in keys {
        let (c1, w1) = left[&k];
        let (c2, w2) = right[&k];
        count += c1 * c2;
        w.add(w1 * w2.conj());
    }
    SystemSolutionCount { n: spec.n(), count, weighted: w.value() }
}

/// Same count for all-ones coefficients over explicit member lists.
pub fn count_pair_system_all_ones(n: usize, part: &DyadicPartition, i: usize, i2: usize) -> u64 {
    count_pair_system(&ExpSumSpec::all_ones(n), part, i, i2).count
}

fn sums_key_space(n: usize, m: usize) -> (usize, usize) {
    (m * n + 1, m * n * n + 1)
}

/// `avg_Q |f|^{2m}` computed from the solution system; `m` in `{1, 2, 3}`.
pub fn l2m_norm_by_counting(coeffs: &[Complex64], m: usize) -> Result<f64> {
    let n = coeffs.len();
    if !(1..=3).contains(&m) {
        return Err(Error::InvalidParameter(format!("m = {m} not in 1..=3")));
    }
    if n == 0 {
        return Err(Error::InvalidParameter("empty coefficient vector".into()));
    }
    if m == 3 && n > MAX_N_SIXTH {
        return Err(Error::Infeasible(format!(
            "sixth moment oracle limited to N <= {MAX_N_SIXTH}; use sixth_moment_all_ones for unit coefficients"
        )));
    }
    if m == 2 && n > 1024 {
        return Err(Error::Infeasible("fourth moment oracle limited to N <= 1024".into()));
    }
    let (s1, s2) = sums_key_space(n, m);
    let mut acc = vec![Complex64::new(0.0, 0.0); s1 * s2];
    // Ordered m-tuples in lexicographic order, so accumulation order is fixed.
    fn rec(c: &[Complex64], left: usize, prod: Complex64, a: usize, b: usize, s2: usize, acc: &mut [Complex64]) {
        if left == 0 {
            acc[a * s2 + b] += prod;
            return;
        }
        for (i, &z) in c.iter().enumerate() {
            let t = i + 1;
            rec(c, left - 1, prod * z, a + t, b + t * t, s2, acc);
        }
    }
    rec(coeffs, m, Complex64::new(1.0, 0.0), 0, 0, s2, &mut acc);
    let mut total = KahanSum::new();
    for z in &acc {
        total.add(z.norm_sqr());
    }
    Ok(total.value())
}

/// Exact integer count of solutions for `a_n = 1`, via the same table.
pub fn l2m_count_all_ones(n: usize, m: usize) -> Result<u128> {
    if !(1..=3).contains(&m) || n == 0 {
        return Err(Error::InvalidParameter("need 1 <= m <= 3 and N >= 1".into()));
    }
    if m == 3 && n > 4 * MAX_N_SIXTH {
        return Err(Error::Infeasible("use sixth_moment_all_ones".into()));
    }
    let (s1, s2) = sums_key_space(n, m);
    let mut acc = vec![0u64; s1 * s2];
    fn rec(n: usize, left: usize, a: usize, b: usize, s2: usize, acc: &mut [u64]) {
        if left == 0 {
            acc[a * s2 + b] += 1;
            return;
        }
        for t in 1..=n {
            rec(n, left - 1, a + t, b + t * t, s2, acc);
        }
    }
    rec(n, m, 0, 0, s2, &mut acc);
    Ok(acc.iter().map(|&c| (c as u128) * (c as u128)).sum())
}

/// Number of `(n1,n2,n3,m1,m2,m3)` in `[1,N]^6` with equal sums and equal
/// sums of squares.
///
/// Writes a triple as `(t + a, t + b, t)`. Then `sum = 3t + a + b` and
/// `3 sum of squares - sum^2 = 2 (a^2 - ab + b^2)`, so two triples match iff
/// their difference vectors have the same Eisenstein norm, `a + b` agrees mod
/// 3, and the base points are offset by `(a + b - a' - b') / 3`. The count is a
/// sum of interval overlaps over difference vectors with equal norm.
pub fn sixth_moment_all_ones(n: usize) -> Result<u128> {
    if n == 0 {
        return Err(Error::InvalidParameter("N must be positive".into()));
    }
    if n > 8192 {
        return Err(Error::Infeasible("N above 8192 exceeds the memory budget".into()));
    }
    let ni = n as i64;
    let off = ni; // shift a, b into [1, 2N)
    let mut keys: Vec<u64> = Vec::with_capacity(3 * n * n);
    for a in (1 - ni)..ni {
        for b in (1 - ni)..ni {
            let lo = 1.max(1 - a).max(1 - b);
            let hi = ni.min(ni - a).min(ni - b);
            if lo > hi {
                continue;
            }
            let e = (a * a - a * b + b * b) as u64;
            let r = (a + b).rem_euclid(3) as u64;
            keys.push((e << 30) | (r << 28) | (((a + off) as u64) << 14) | ((b + off) as u64));
        }
    }
    keys.sort_unstable();
    let unpack = |k: u64| {
        let a = ((k >> 14) & 0x3fff) as i64 - off;
        let b = (k & 0x3fff) as i64 - off;
        let lo = 1.max(1 - a).max(1 - b);
        let hi = ni.min(ni - a).min(ni - b);
        (a + b, lo, hi)
    };
    let mut total: u128 = 0;
    let mut start = 0;
    let mut bucket: Vec<(i64, i64, i64)> = Vec::new();
    while start < keys.len() {
        let class = keys[start] >> 28;
        let mut end = start;
        bucket.clear();
        while end < keys.len() && keys[end] >> 28 == class {
            bucket.push(unpack(keys[end]));
            end += 1;
        }
        for &(s1, lo1, hi1) in &bucket {
            for &(s2, lo2, hi2) in &bucket {
                let d = (s1 - s2) / 3;
                let lo = lo1.max(lo2 - d);
                let hi = hi1.min(hi2 - d);
                if hi >= lo {
                    total += (hi - lo + 1) as u128;
                }
            }
        }
        start = end;
    }
    Ok(total)
}

/// `D(N) = ||f||_{L^6_avg(Q)} / ||a||_2` for `a_n = 1`, from the exact count.
pub fn strichartz_ratio_all_ones(n: usize) -> Result<f64> {
    let j = sixth_moment_all_ones(n)? as f64;
    Ok((j / (n as f64).powi(3)).powf(1.0 / 6.0))
}

/// Relative gap between grid quadrature of `avg |f|^{2m}` and the oracle.
pub fn verify_quadrature(spec: &ExpSumSpec, grid: &GridSpec, m: usize) -> Result<f64> {
    let oracle = l2m_norm_by_counting(&spec.coeffs, m)?;
    let f = eval_exp_sum(spec, grid)?;
    let quad = lp_avg_power(&f, 2.0 * m as f64, &RegionMask::full(grid), Normalization::FullDomain)?;
    Ok((quad - oracle).abs() / oracle)
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct CachedMoment {
    pub n: usize,
    pub coeff_sha256: String,
    pub m: usize,
    pub value: f64,
}

/// On-disk memo of oracle values keyed by `(N, sha256(coeffs), m)`.
#[derive(Debug, Clone)]
pub struct OracleCache {
    dir: PathBuf,
}

pub fn coeff_hash(coeffs: &[Complex64]) -> String {
    let mut h = Sha256::new();
    for z in coeffs {
        h.update(z.re.to_le_bytes());
        h.update(z.im.to_le_bytes());
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

impl OracleCache {
    pub fn new(dir: impl AsRef<Path>) -> Result<Self> {
        std::fs::create_dir_all(dir.as_ref())?;
        Ok(Self { dir: dir.as_ref().to_path_buf() })
    }

    fn path(&self, n: usize, hash: &str, m: usize) -> PathBuf {
        self.dir.join(format!("moment_n{n}_m{m}_{}.json", &hash[..16]))
    }

    pub fn get(&self, coeffs: &[Complex64], m: usize) -> Option<f64> {
        let hash = coeff_hash(coeffs);
        let text = std::fs::read_to_string(self.path(coeffs.len(), &hash, m)).ok()?;
        let c: CachedMoment = serde_json::from_str(&text).ok()?;
        (c.coeff_sha256 == hash && c.m == m && c.n == coeffs.len()).then_some(c.value)
    }

    pub fn get_or_compute(&self, coeffs: &[Complex64], m: usize) -> Result<f64> {
        if let Some(v) = self.get(coeffs, m) {
            return Ok(v);
        }
        let value = l2m_norm_by_counting(coeffs, m)?;
        let hash = coeff_hash(coeffs);
        let entry = CachedMoment { n: coeffs.len(), coeff_sha256: hash.clone(), m, value };
        let text = serde_json::to_string(&entry).map_err(|e| Error::Io(e.to_string()))?;
        std::fs::write(self.path(coeffs.len(), &hash, m), text)?;
        Ok(value)
    }
}
