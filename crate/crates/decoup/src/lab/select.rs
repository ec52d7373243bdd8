use super::{cube_powers, CubePowers, Lab};
use crate::error::{Error, Result};
use crate::field::Field;
use crate::growth::least_squares;
use serde::{Deserialize, Serialize};

/// How the dyadic band `[v, 2v)` of cube norms is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BandPolicy {
    /// The band holding the most cubes (ties go to the higher band).
    MaxCount,
    /// The band holding the most `L^p` mass.
    MaxMass,
    /// A fixed lower edge `v`.
    Fixed(f64),
}

/// Cubes with `||u||_{L^p(Q)}` in one dyadic band, restricted to slabs whose
/// count is within a factor 2 of the median count over nonempty slabs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparableCubes {
    pub band: f64,
    pub selected: Vec<bool>,
    pub slab_counts: Vec<usize>,
    /// Median cubes per nonempty slab; 0 when nothing is in the band.
    pub sigma: usize,
    /// Slabs kept after the factor-2 filter.
    pub rho: usize,
}

impl ComparableCubes {
    pub fn count(&self) -> usize {
        self.selected.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        self.sigma == 0
    }
}

/// Cube norms below this fraction of the largest are roundoff and never banded.
pub const NOISE_FLOOR: f64 = 1e-10;

fn band_of(v: f64, floor: f64) -> Option<i32> {
    (v > floor && v.is_finite()).then(|| v.log2().floor() as i32)
}

pub fn select_comparable_cubes(cp: &CubePowers, policy: BandPolicy) -> ComparableCubes {
    let lab = &cp.lab;
    let norms = cp.cube_norms();
    let floor = NOISE_FLOOR * norms.iter().copied().fold(0.0, f64::max);
    let band = match policy {
        BandPolicy::Fixed(v) => Some(v),
        BandPolicy::MaxCount | BandPolicy::MaxMass => {
            let mut tally: std::collections::BTreeMap<i32, (usize, f64)> = Default::default();
            for (n, v) in norms.iter().zip(&cp.values) {
                if let Some(e) = band_of(*n, floor) {
                    let t = tally.entry(e).or_default();
                    t.0 += 1;
                    t.1 += v;
                }
            }
            let best = match policy {
                BandPolicy::MaxCount => tally.iter().max_by(|a, b| a.1 .0.cmp(&b.1 .0).then(a.0.cmp(b.0))),
                _ => tally.iter().max_by(|a, b| a.1 .1.total_cmp(&b.1 .1).then(a.0.cmp(b.0))),
            };
            best.map(|(&e, _)| 2f64.powi(e))
        }
    };
    let slabs = lab.slabs();
    let empty = |band: f64| ComparableCubes {
        band,
        selected: vec![false; norms.len()],
        slab_counts: vec![0; slabs],
        sigma: 0,
        rho: 0,
    };
    let Some(v) = band.filter(|v| *v > 0.0) else {
        return empty(band.unwrap_or(0.0));
    };
    let in_band: Vec<bool> = norms.iter().map(|&n| n > floor && n >= v && n < 2.0 * v).collect();
    let mut slab_counts = vec![0usize; slabs];
    for (i, &b) in in_band.iter().enumerate() {
        if b {
            slab_counts[lab.slab_of(i)] += 1;
        }
    }
    let mut nonempty: Vec<usize> = slab_counts.iter().copied().filter(|&c| c > 0).collect();
    if nonempty.is_empty() {
        return empty(v);
    }
    nonempty.sort_unstable();
    let sigma = nonempty[(nonempty.len() - 1) / 2];
    let keep: Vec<bool> = slab_counts.iter().map(|&c| c > 0 && 2 * c >= sigma && c <= 2 * sigma).collect();
    let selected: Vec<bool> = in_band.iter().enumerate().map(|(i, &b)| b && keep[lab.slab_of(i)]).collect();
    let rho = keep.iter().filter(|&&k| k).count();
    let slab_counts = (0..slabs).map(|b| if keep[b] { slab_counts[b] } else { 0 }).collect();
    ComparableCubes { band: v, selected, slab_counts, sigma, rho }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefinedReport {
    pub theorem: String,
    pub d: usize,
    pub r: f64,
    pub p: f64,
    pub sigma: usize,
    /// Lower edge of the cube-norm band.
    pub lambda_amp: f64,
    pub cubes: usize,
    pub slabs: usize,
    pub l2: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
    pub skip: bool,
}

/// `||u||_{L^p(Y)}` against `sigma^{-(1/2 - 1/p)} ||f||_2`.
pub fn refined_strichartz_check(lab: &Lab, f: &Field, policy: BandPolicy) -> Result<RefinedReport> {
    let p = lab.p();
    let cp = cube_powers(lab, f, p)?;
    Ok(refined_from_powers(&cp, lab.l2(f), policy))
}

pub fn refined_from_powers(cp: &CubePowers, l2: f64, policy: BandPolicy) -> RefinedReport {
    let lab = &cp.lab;
    let p = cp.p;
    let sel = select_comparable_cubes(cp, policy);
    let base = RefinedReport {
        theorem: "refined_strichartz_v1".into(),
        d: lab.d,
        r: lab.r,
        p,
        sigma: sel.sigma,
        lambda_amp: sel.band,
        cubes: sel.count(),
        slabs: sel.rho,
        l2,
        lhs: 0.0,
        rhs: 0.0,
        ratio: 0.0,
        skip: true,
    };
    if sel.is_empty() || l2 == 0.0 {
        return base;
    }
    let lhs = cp.norm_over(|i| sel.selected[i]);
    let rhs = (sel.sigma as f64).powf(-(0.5 - 1.0 / p)) * l2;
    RefinedReport { lhs, rhs, ratio: lhs / rhs, skip: false, ..base }
}

/// Least-squares slope of `ln value` against `ln scale`.
pub fn fitted_exponent(samples: &[(f64, f64)]) -> Result<f64> {
    if samples.iter().any(|&(s, v)| !(s > 0.0 && v > 0.0)) {
        return Err(Error::InvalidParameter("scales and values must be positive".into()));
    }
    let xs: Vec<f64> = samples.iter().map(|s| s.0.ln()).collect();
    let ys: Vec<f64> = samples.iter().map(|s| s.1.ln()).collect();
    Ok(least_squares(&xs, &ys)?.slope)
}
