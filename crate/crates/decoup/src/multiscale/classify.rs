use crate::error::{Error, Result};
use crate::field::{RealField, RegionMask};
use crate::grid::GridSpec;
use serde::{Deserialize, Serialize};

/// Region label per grid point: `j < J` for `Omega_j`, `J` for the low set.
#[derive(Debug, Clone, PartialEq)]
pub struct OmegaDecomposition {
    pub grid: GridSpec,
    pub j_max: usize,
    pub region: Vec<u16>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegionId {
    Omega(usize),
    Low,
}

impl std::fmt::Display for RegionId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RegionId::Omega(j) => write!(f, "omega_{j}"),
            RegionId::Low => write!(f, "low"),
        }
    }
}

impl OmegaDecomposition {
    /// Everything starts in the low set.
    pub fn new(grid: &GridSpec, j_max: usize) -> Result<Self> {
        if j_max >= u16::MAX as usize {
            return Err(Error::InvalidParameter("too many levels".into()));
        }
        Ok(Self { grid: grid.clone(), j_max, region: vec![j_max as u16; grid.len()] })
    }

    /// Classification step for level `j`, called for `j = J-1, ..., 0` in order.
    /// Points still in the low set with `g_j >= (1 + eps) g_{j+1}` and
    /// `g_j > 0` move to `Omega_j`.
    pub fn step(&mut self, j: usize, g_j: &RealField, g_next: &RealField, epsilon: f64) -> Result<()> {
        if j >= self.j_max {
            return Err(Error::InvalidParameter(format!("level {j} is not below J = {}", self.j_max)));
        }
        if g_j.data.len() != self.region.len() || g_next.data.len() != self.region.len() {
            return Err(Error::Shape("square function on a different grid".into()));
        }
        let low = self.j_max as u16;
        let factor = 1.0 + epsilon;
        for ((r, &a), &b) in self.region.iter_mut().zip(&g_j.data).zip(&g_next.data) {
            if *r == low && a > 0.0 && a >= factor * b {
                *r = j as u16;
            }
        }
        Ok(())
    }

    pub fn ids(&self) -> Vec<RegionId> {
        let mut v: Vec<RegionId> = (0..self.j_max).rev().map(RegionId::Omega).collect();
        v.push(RegionId::Low);
        v
    }

    fn code(&self, id: RegionId) -> u16 {
        match id {
            RegionId::Omega(j) => j as u16,
            RegionId::Low => self.j_max as u16,
        }
    }

    pub fn mask(&self, id: RegionId) -> RegionMask {
        let c = self.code(id);
        RegionMask { grid: self.grid.clone(), bits: self.region.iter().map(|&r| r == c).collect() }
    }

    pub fn low_mask(&self) -> RegionMask {
        self.mask(RegionId::Low)
    }

    pub fn omega_masks(&self) -> Vec<RegionMask> {
        (0..self.j_max).rev().map(|j| self.mask(RegionId::Omega(j))).collect()
    }

    pub fn count(&self, id: RegionId) -> usize {
        let c = self.code(id);
        self.region.iter().filter(|&&r| r == c).count()
    }

    pub fn id_at(&self, i: usize) -> RegionId {
        match self.region[i] as usize {
            j if j == self.j_max => RegionId::Low,
            j => RegionId::Omega(j),
        }
    }
}

/// Classifies from a full stack `g_0, ..., g_J`.
pub fn classify(stack: &[RealField], epsilon: f64) -> Result<OmegaDecomposition> {
    if stack.is_empty() {
        return Err(Error::InvalidParameter("empty square-function stack".into()));
    }
    let j_max = stack.len() - 1;
    let mut dec = OmegaDecomposition::new(&stack[0].grid, j_max)?;
    for j in (0..j_max).rev() {
        dec.step(j, &stack[j], &stack[j + 1], epsilon)?;
    }
    Ok(dec)
}
