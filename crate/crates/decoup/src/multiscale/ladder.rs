use crate::error::{Error, Result};
use crate::grid::Mode;
use crate::numeric::log_p_exact;
use serde::{Deserialize, Serialize};

/// `delta_j = (ln N)^{-c j}` rounded down to a power of `1/p`, clamped at
/// `1/N`, repeated scales removed. Stored as exponents: `delta_j = p^{-levels[j]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaleLadder {
    pub n: usize,
    pub c: f64,
    pub p: u64,
    pub levels: Vec<u32>,
}

pub fn build_ladder(n: usize, c: f64, mode: Mode) -> Result<ScaleLadder> {
    if n < 16 {
        return Err(Error::InvalidParameter(format!("N = {n} < 16: log log N is not positive")));
    }
    if !(c > 0.0) {
        return Err(Error::InvalidParameter(format!("ladder exponent c = {c} must be positive")));
    }
    let p = mode.radix();
    let k = log_p_exact(n as u64, p)
        .ok_or_else(|| Error::InvalidParameter(format!("N = {n} is not a power of {p}")))?;
    let ln_n = (n as f64).ln();
    let lp = (p as f64).ln();
    let mut levels = vec![0u32];
    let mut i = 1;
    while *levels.last().unwrap() < k {
        let want = c * i as f64 * ln_n.ln() / lp;
        let m = ((want - 1e-12).ceil().max(0.0) as u32).min(k);
        if m > *levels.last().unwrap() {
            levels.push(m);
        }
        i += 1;
    }
    Ok(ScaleLadder { n, c, p, levels })
}

impl ScaleLadder {
    /// Index of the finest scale.
    pub fn j_max(&self) -> usize {
        self.levels.len() - 1
    }

    pub fn delta(&self, j: usize) -> f64 {
        (self.p as f64).powi(-(self.levels[j] as i32))
    }

    pub fn deltas(&self) -> Vec<f64> {
        (0..self.levels.len()).map(|j| self.delta(j)).collect()
    }

    pub fn epsilon(&self) -> f64 {
        1.0 / (self.n as f64).ln()
    }

    /// Exponent of `w_j = N^{-2} delta_j^{-1}`.
    pub fn w_level(&self, j: usize) -> u32 {
        let k = log_p_exact(self.n as u64, self.p).unwrap();
        2 * k - self.levels[j]
    }

    pub fn w(&self, j: usize) -> f64 {
        (self.p as f64).powi(-(self.w_level(j) as i32))
    }
}

/// `epsilon = 1/ln N`, `lambda = (ln N)^{tilde_c} ||g_J||_inf / alpha`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PruningParams {
    pub epsilon: f64,
    pub tilde_c: f64,
    pub c_prime: f64,
    pub lambda: f64,
    pub alpha: f64,
}

impl PruningParams {
    pub fn new(n: usize, tilde_c: f64, c_prime: f64, g_j_sup: f64, alpha: f64) -> Result<Self> {
        if !(alpha > 0.0) {
            return Err(Error::InvalidParameter("alpha must be positive".into()));
        }
        let ln_n = (n as f64).ln();
        let lambda = ln_n.powf(tilde_c) * g_j_sup / alpha;
        Ok(Self { epsilon: 1.0 / ln_n, tilde_c, c_prime, lambda, alpha })
    }
}
