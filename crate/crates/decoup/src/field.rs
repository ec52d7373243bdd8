//! Sampled fields and region masks.

use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::numeric::KahanSum;
use num_complex::Complex64;

/// Complex samples on a grid, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    pub grid: GridSpec,
    pub data: Vec<Complex64>,
}

impl Field {
    pub fn new(grid: GridSpec, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != grid.len() {
            return Err(Error::Shape(format!(
                "{} samples for a grid of {} points",
                data.len(),
                grid.len()
            )));
        }
        Ok(Self { grid, data })
    }

    pub fn zeros(grid: &GridSpec) -> Self {
        Self { grid: grid.clone(), data: vec![Complex64::new(0.0, 0.0); grid.len()] }
    }

    pub fn from_fn(grid: &GridSpec, mut f: impl FnMut(&[f64]) -> Complex64) -> Self {
        let data = (0..grid.len())
            .map(|i| f(&grid.point(&grid.unravel(i))))
            .collect();
        Self { grid: grid.clone(), data }
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn abs(&self) -> RealField {
        RealField { grid: self.grid.clone(), data: self.data.iter().map(|z| z.norm()).collect() }
    }

    pub fn abs_sq(&self) -> RealField {
        RealField { grid: self.grid.clone(), data: self.data.iter().map(|z| z.norm_sqr()).collect() }
    }

    pub fn sup_norm(&self) -> f64 {
        self.data.iter().fold(0.0, |m, z| m.max(z.norm()))
    }

    /// Plain Euclidean norm of the sample vector.
    pub fn l2_samples(&self) -> f64 {
        let mut s = KahanSum::new();
        for z in &self.data {
            s.add(z.norm_sqr());
        }
        s.value().sqrt()
    }

    pub fn add_assign(&mut self, other: &Field) -> Result<()> {
        check_same(&self.grid, &other.grid)?;
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
        Ok(())
    }

    pub fn sub(&self, other: &Field) -> Result<Field> {
        check_same(&self.grid, &other.grid)?;
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect();
        Ok(Field { grid: self.grid.clone(), data })
    }

    pub fn scale(&self, c: Complex64) -> Field {
        Field { grid: self.grid.clone(), data: self.data.iter().map(|z| z * c).collect() }
    }

    pub fn max_abs_diff(&self, other: &Field) -> Result<f64> {
        check_same(&self.grid, &other.grid)?;
        Ok(self.data.iter().zip(&other.data).fold(0.0, |m, (a, b)| m.max((a - b).norm())))
    }
}

/// Real samples on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct RealField {
    pub grid: GridSpec,
    pub data: Vec<f64>,
}

impl RealField {
    pub fn new(grid: GridSpec, data: Vec<f64>) -> Result<Self> {
        if data.len() != grid.len() {
            return Err(Error::Shape("sample count mismatch".into()));
        }
        Ok(Self { grid, data })
    }

    pub fn zeros(grid: &GridSpec) -> Self {
        Self { grid: grid.clone(), data: vec![0.0; grid.len()] }
    }

    pub fn to_complex(&self) -> Field {
        Field {
            grid: self.grid.clone(),
            data: self.data.iter().map(|&x| Complex64::new(x, 0.0)).collect(),
        }
    }

    pub fn max(&self) -> f64 {
        self.data.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.data.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    /// Mean over the whole grid.
    pub fn mean(&self) -> f64 {
        let mut s = KahanSum::new();
        for &x in &self.data {
            s.add(x);
        }
        s.value() / self.data.len() as f64
    }

    pub fn add_assign(&mut self, other: &RealField) -> Result<()> {
        check_same(&self.grid, &other.grid)?;
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
        Ok(())
    }
}

/// Subset of grid points.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionMask {
    pub grid: GridSpec,
    pub bits: Vec<bool>,
}

impl RegionMask {
    pub fn full(grid: &GridSpec) -> Self {
        Self { grid: grid.clone(), bits: vec![true; grid.len()] }
    }

    pub fn empty(grid: &GridSpec) -> Self {
        Self { grid: grid.clone(), bits: vec![false; grid.len()] }
    }

    pub fn from_bits(grid: &GridSpec, bits: Vec<bool>) -> Result<Self> {
        if bits.len() != grid.len() {
            return Err(Error::Shape("mask length mismatch".into()));
        }
        Ok(Self { grid: grid.clone(), bits })
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn is_disjoint(&self, other: &RegionMask) -> bool {
        self.bits.iter().zip(&other.bits).all(|(a, b)| !(*a && *b))
    }

    pub fn union(&self, other: &RegionMask) -> RegionMask {
        let bits = self.bits.iter().zip(&other.bits).map(|(a, b)| *a || *b).collect();
        RegionMask { grid: self.grid.clone(), bits }
    }

    pub fn intersect(&self, other: &RegionMask) -> RegionMask {
        let bits = self.bits.iter().zip(&other.bits).map(|(a, b)| *a && *b).collect();
        RegionMask { grid: self.grid.clone(), bits }
    }

    pub fn complement(&self) -> RegionMask {
        RegionMask { grid: self.grid.clone(), bits: self.bits.iter().map(|b| !b).collect() }
    }

    /// Fraction of the grid covered.
    pub fn fraction(&self) -> f64 {
        self.count() as f64 / self.bits.len() as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Normalization {
    /// Divide by the volume of the whole grid.
    #[default]
    FullDomain,
    /// Divide by the volume of the region.
    Region,
}

/// `((1/V) sum_{x in region} |f(x)|^p * cell)^{1/p}`, V per `norm`.
pub fn lp_avg_norm(field: &Field, p: f64, region: &RegionMask, norm: Normalization) -> Result<f64> {
    Ok(lp_avg_power(field, p, region, norm)?.powf(1.0 / p))
}

/// The p-th power of [`lp_avg_norm`], without the final root.
pub fn lp_avg_power(field: &Field, p: f64, region: &RegionMask, norm: Normalization) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(Error::InvalidParameter(format!("p = {p} < 1")));
    }
    check_same(&field.grid, &region.grid)?;
    let count = region.count();
    if count == 0 {
        return Err(Error::EmptyRegion);
    }
    let mut s = KahanSum::new();
    let int = p.fract() == 0.0 && p <= 16.0;
    for (z, &b) in field.data.iter().zip(&region.bits) {
        if b {
            let a2 = z.norm_sqr();
            let v = if int && (p as u32) % 2 == 0 {
                a2.powi(p as i32 / 2)
            } else {
                a2.sqrt().powf(p)
            };
            s.add(v);
        }
    }
    let denom = match norm {
        Normalization::FullDomain => field.len(),
        Normalization::Region => count,
    } as f64;
    Ok(s.value() / denom)
}

pub(crate) fn check_same(a: &GridSpec, b: &GridSpec) -> Result<()> {
    if a.same_shape(b) {
        Ok(())
    } else {
        Err(Error::Shape(format!("grids differ: {:?} vs {:?}", a.samples, b.samples)))
    }
}
