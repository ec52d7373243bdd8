use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// A cube `theta` of side `delta` in `[0,1]^d` and its slab on the paraboloid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cap {
    /// Multi-index of theta in the lattice of side `delta`.
    pub index: Vec<usize>,
    pub delta: f64,
    pub center: Vec<f64>,
}

impl Cap {
    pub fn dim(&self) -> usize {
        self.index.len()
    }

    /// `L(xi) = |c|^2 + 2 c.(xi - c)`.
    pub fn linearization(&self, xi: &[f64]) -> f64 {
        let c2: f64 = self.center.iter().map(|c| c * c).sum();
        c2 + self.center.iter().zip(xi).map(|(c, x)| 2.0 * c * (x - c)).sum::<f64>()
    }

    /// Gradient of `L`, i.e. `2 c`; the tube moves with this velocity.
    pub fn slope(&self) -> Vec<f64> {
        self.center.iter().map(|c| 2.0 * c).collect()
    }

    /// Unit normal to the graph of `|xi|^2` at the center, `(-2c, 1)` normalized.
    pub fn normal(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.center.iter().map(|c| -2.0 * c).collect();
        v.push(1.0);
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        v.iter().map(|x| x / n).collect()
    }

    /// `xi` in the doubled cube `2 theta` and `|eta - L(xi)| <= delta^2`.
    pub fn slab_contains(&self, xi: &[f64], eta: f64) -> bool {
        let in_2theta = xi.iter().zip(&self.center).all(|(x, c)| (x - c).abs() <= self.delta);
        in_2theta && (eta - self.linearization(xi)).abs() <= self.delta * self.delta
    }
}

/// All `delta^{-d}` caps, row-major over the index.
pub fn build_caps(delta: f64, d: usize) -> Result<Vec<Cap>> {
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(Error::InvalidParameter(format!("delta = {delta} not in (0, 1]")));
    }
    let inv = 1.0 / delta;
    let m = inv.round();
    if (inv - m).abs() > 1e-9 * m {
        return Err(Error::InvalidParameter(format!("1/delta = {inv} is not an integer")));
    }
    if d == 0 || d > 2 {
        return Err(Error::InvalidParameter(format!("d = {d} not in {{1, 2}}")));
    }
    let m = m as usize;
    let total = m.pow(d as u32);
    let caps = (0..total)
        .map(|flat| {
            let index: Vec<usize> = if d == 1 { vec![flat] } else { vec![flat / m, flat % m] };
            let center = index.iter().map(|&i| (i as f64 + 0.5) * delta).collect();
            Cap { index, delta, center }
        })
        .collect();
    Ok(caps)
}
