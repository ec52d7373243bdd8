//! Caps and tubes on `Z/A x Z/B` (A, B powers of p).
//!
//! The cap of residue `c` at level `j` is
//! `tau = {(k1, k2): k1 = c mod p^j, k2 = 2 c k1 - c^2 mod p^e}` with slab
//! exponent `e = min(2j, v_p(B), v_p(2A))`. It is a coset of
//! `H = <(p^j, 2 c p^j), (0, p^e)>`, independent of the representative `c`,
//! and caps nest across levels. Tubes are the cosets of the annihilator of
//! `H`; a packet `1_T P_tau F` has constant modulus on `T`.

use crate::error::{Error, Result};
use crate::fft::{analyze, synthesize};
use crate::field::Field;
use crate::filter::pairing;
use crate::grid::{GridSpec, Mode};
use num_complex::Complex64;
use std::collections::HashMap;

fn prime_of(grid: &GridSpec) -> Result<u64> {
    match grid.mode {
        Mode::Exact { p } if grid.dims() == 2 => Ok(p),
        Mode::Exact { .. } => Err(Error::Shape("exact caps need a 2-axis grid".into())),
        Mode::Real => Err(Error::InvalidParameter("exact caps need an exact-mode grid".into())),
    }
}

/// Thickness exponent of level-`level` slabs on this grid.
pub fn slab_exponent(grid: &GridSpec, level: u32) -> Result<u32> {
    let p = prime_of(grid)?;
    let ea = grid.exponent(0).unwrap();
    let eb = grid.exponent(1).unwrap();
    let well_defined = if p == 2 { ea + 1 } else { ea };
    Ok((2 * level).min(eb).min(well_defined))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExactCap {
    pub p: u64,
    pub level: u32,
    pub residue: u64,
    pub slab_exp: u32,
}

impl ExactCap {
    pub fn new(grid: &GridSpec, level: u32, residue: u64) -> Result<Self> {
        let p = prime_of(grid)?;
        let modulus = p.pow(level);
        if modulus > grid.samples[0] as u64 {
            return Err(Error::InvalidParameter(format!("level {level} finer than the grid")));
        }
        if residue >= modulus {
            return Err(Error::InvalidParameter(format!("residue {residue} >= {modulus}")));
        }
        Ok(Self { p, level, residue, slab_exp: slab_exponent(grid, level)? })
    }

    pub fn modulus(&self) -> u64 {
        self.p.pow(self.level)
    }

    pub fn slab_modulus(&self) -> u64 {
        self.p.pow(self.slab_exp)
    }

    pub fn contains(&self, k1: usize, k2: usize) -> bool {
        if k1 as u64 % self.modulus() != self.residue {
            return false;
        }
        let c = self.residue as i128;
        let target = 2 * c * k1 as i128 - c * c;
        (k2 as i128 - target).rem_euclid(self.slab_modulus() as i128) == 0
    }

    /// Generators of the subgroup `H` whose coset is this cap.
    pub fn generators(&self, grid: &GridSpec) -> [Vec<usize>; 2] {
        let a = grid.samples[0] as u128;
        let b = grid.samples[1] as u128;
        let pj = self.modulus() as u128;
        let g1 = vec![(pj % a) as usize, ((2 * self.residue as u128 * pj) % b) as usize];
        let g2 = vec![0, (self.slab_modulus() as u128 % b) as usize];
        [g1, g2]
    }

    /// Tube containing grid index `x`: the pair of character values of the
    /// generators, packed into one key.
    pub fn tube_label(&self, grid: &GridSpec, x: &[usize]) -> u64 {
        let l = *grid.samples.iter().max().unwrap() as u64;
        let [g1, g2] = self.generators(grid);
        pairing(grid, &g1, x) * l + pairing(grid, &g2, x)
    }

    /// `|H|`: number of tubes in the tiling of this cap.
    pub fn tube_count(&self, grid: &GridSpec) -> usize {
        let a = grid.samples[0] as u64;
        let b = grid.samples[1] as u64;
        ((a / self.modulus()) * (b / self.slab_modulus())) as usize
    }
}

/// The `p^level` caps of one level.
pub fn exact_caps(grid: &GridSpec, level: u32) -> Result<Vec<ExactCap>> {
    let p = prime_of(grid)?;
    (0..p.pow(level)).map(|c| ExactCap::new(grid, level, c)).collect()
}

/// Index of the cap containing bin `(k1, k2)`, if any.
pub fn cap_of_bin(grid: &GridSpec, level: u32, k1: usize, k2: usize) -> Result<Option<usize>> {
    let p = prime_of(grid)?;
    let c = (k1 as u64 % p.pow(level)) as u64;
    let cap = ExactCap::new(grid, level, c)?;
    Ok(cap.contains(k1, k2).then_some(c as usize))
}

/// Tube labels of every grid point for one cap.
pub fn tube_labels(grid: &GridSpec, cap: &ExactCap) -> Vec<u64> {
    let l = *grid.samples.iter().max().unwrap() as u64;
    let [g1, g2] = cap.generators(grid);
    let (a, b) = (grid.samples[0], grid.samples[1]);
    // Character values are additive in the two coordinates.
    let axis = |g: &[usize], ax: usize, m: usize| -> Vec<u64> {
        let mut k = vec![0; grid.dims()];
        k[ax] = g[ax];
        (0..m)
            .map(|t| {
                let mut x = vec![0; grid.dims()];
                x[ax] = t;
                pairing(grid, &k, &x)
            })
            .collect()
    };
    let (r1, c1) = (axis(&g1, 0, a), axis(&g1, 1, b));
    let (r2, c2) = (axis(&g2, 0, a), axis(&g2, 1, b));
    let mut out = Vec::with_capacity(a * b);
    for x0 in 0..a {
        for x1 in 0..b {
            out.push(((r1[x0] + c1[x1]) % l) * l + (r2[x0] + c2[x1]) % l);
        }
    }
    out
}

/// `P_tau F` from precomputed coefficients `F = sum c_k e(k.x)`.
pub fn project_coeffs(coeffs: &Field, cap: &ExactCap) -> Field {
    let b = coeffs.grid.samples[1];
    let mut masked = Field::zeros(&coeffs.grid);
    for (i, z) in coeffs.data.iter().enumerate() {
        if *z != Complex64::new(0.0, 0.0) && cap.contains(i / b, i % b) {
            masked.data[i] = *z;
        }
    }
    synthesize(masked)
}

pub fn project_cap_exact(field: &Field, cap: &ExactCap) -> Result<Field> {
    prime_of(&field.grid)?;
    Ok(project_coeffs(&analyze(field), cap))
}

/// Per-tube statistics of one projected cap. `l2sq` is the averaged squared
/// norm `(1/|X|) sum_T |P_tau F|^2`.
#[derive(Debug, Clone, PartialEq)]
pub struct TubeStat {
    pub label: u64,
    pub points: usize,
    pub l2sq: f64,
    pub sup: f64,
    pub inf: f64,
}

pub fn tube_stats(field: &Field, labels: &[u64]) -> Vec<TubeStat> {
    let mut map: HashMap<u64, TubeStat> = HashMap::new();
    let inv = 1.0 / field.len() as f64;
    for (z, &l) in field.data.iter().zip(labels) {
        let m = z.norm();
        let s = map.entry(l).or_insert(TubeStat { label: l, points: 0, l2sq: 0.0, sup: 0.0, inf: f64::INFINITY });
        s.points += 1;
        s.l2sq += m * m * inv;
        s.sup = s.sup.max(m);
        s.inf = s.inf.min(m);
    }
    let mut v: Vec<TubeStat> = map.into_values().collect();
    v.sort_by_key(|s| s.label);
    v
}

#[derive(Debug, Clone)]
pub struct CapProjection {
    pub cap: ExactCap,
    pub field: Field,
    pub labels: Vec<u64>,
    pub tubes: Vec<TubeStat>,
}

impl CapProjection {
    /// `1_T P_tau F` for the tube with this label.
    pub fn packet(&self, label: u64) -> Field {
        let mut out = Field::zeros(&self.field.grid);
        for (i, (&l, z)) in self.labels.iter().zip(&self.field.data).enumerate() {
            if l == label {
                out.data[i] = *z;
            }
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct ExactDecomposition {
    pub level: u32,
    pub caps: Vec<CapProjection>,
    /// Part of the spectrum outside every cap.
    pub residual: Field,
}

impl ExactDecomposition {
    pub fn reconstruct(&self) -> Field {
        let mut out = self.residual.clone();
        for c in &self.caps {
            out.add_assign(&c.field).expect("same grid");
        }
        out
    }

    /// Packets whose sup exceeds `tol`.
    pub fn nonzero_packets(&self, tol: f64) -> usize {
        self.caps.iter().flat_map(|c| &c.tubes).filter(|t| t.sup > tol).count()
    }

    pub fn packet_energy(&self) -> f64 {
        self.caps.iter().flat_map(|c| &c.tubes).map(|t| t.l2sq).sum()
    }

    /// Largest relative spread `(sup - inf)/sup` of modulus over a tube.
    /// Tubes at roundoff level (sup below `1e-12` of the largest) are skipped.
    pub fn max_modulus_spread(&self) -> f64 {
        let top = self.caps.iter().flat_map(|c| &c.tubes).map(|t| t.sup).fold(0.0, f64::max);
        self.caps
            .iter()
            .flat_map(|c| &c.tubes)
            .filter(|t| t.sup > 1e-12 * top)
            .map(|t| (t.sup - t.inf) / t.sup)
            .fold(0.0, f64::max)
    }
}

/// Caps with empty spectrum are omitted from `caps`.
pub fn decompose_exact(field: &Field, level: u32) -> Result<ExactDecomposition> {
    let grid = &field.grid;
    let coeffs = analyze(field);
    let b = grid.samples[1];
    let mut residual_coeffs = coeffs.clone();
    let mut caps = Vec::new();
    for cap in exact_caps(grid, level)? {
        let mut masked = Field::zeros(grid);
        let mut any = false;
        for (i, z) in coeffs.data.iter().enumerate() {
            if cap.contains(i / b, i % b) {
                masked.data[i] = *z;
                residual_coeffs.data[i] = Complex64::new(0.0, 0.0);
                any |= *z != Complex64::new(0.0, 0.0);
            }
        }
        if !any {
            continue;
        }
        let f = synthesize(masked);
        let labels = tube_labels(grid, &cap);
        let tubes = tube_stats(&f, &labels);
        caps.push(CapProjection { cap, field: f, labels, tubes });
    }
    Ok(ExactDecomposition { level, caps, residual: synthesize(residual_coeffs) })
}

#[derive(Debug, Clone)]
pub struct PruneReport {
    pub field: Field,
    /// Averaged squared norm of the removed packets.
    pub removed_mass: f64,
    pub kept: usize,
    pub removed: usize,
    /// Largest sup over kept packets; for caps kept whole this is the
    /// `sum |c_k|` bound instead.
    pub max_kept_sup: f64,
    /// Caps kept whole because `sum |c_k| <= lambda` bounds every packet.
    pub bounded_caps: usize,
}

/// Keeps the packets at `level` with `sup <= lambda`. The part of the
/// spectrum outside every cap passes through unchanged.
pub fn prune_exact(field: &Field, level: u32, lambda: f64) -> Result<PruneReport> {
    let grid = &field.grid;
    let coeffs = analyze(field);
    let b = grid.samples[1];
    let mut passthrough = coeffs.clone();
    let mut out = Field::zeros(grid);
    let (mut kept, mut removed, mut bounded) = (0, 0, 0);
    let mut removed_mass = 0.0;
    let mut max_kept_sup: f64 = 0.0;
    for cap in exact_caps(grid, level)? {
        let mut masked = Field::zeros(grid);
        let mut l1 = 0.0;
        let mut any = false;
        for (i, z) in coeffs.data.iter().enumerate() {
            if *z != Complex64::new(0.0, 0.0) && cap.contains(i / b, i % b) {
                masked.data[i] = *z;
                l1 += z.norm();
                any = true;
            }
        }
        if !any {
            continue;
        }
        if l1 <= lambda {
            // Every packet of this cap is bounded by l1; keep the whole cap.
            bounded += 1;
            kept += cap.tube_count(grid);
            max_kept_sup = max_kept_sup.max(l1.min(lambda));
            continue;
        }
        for (i, z) in masked.data.iter().enumerate() {
            if *z != Complex64::new(0.0, 0.0) {
                passthrough.data[i] = Complex64::new(0.0, 0.0);
            }
        }
        let f = synthesize(masked);
        let labels = tube_labels(grid, &cap);
        let stats = tube_stats(&f, &labels);
        let keep: HashMap<u64, bool> = stats.iter().map(|t| (t.label, t.sup <= lambda)).collect();
        for t in &stats {
            if t.sup <= lambda {
                kept += 1;
                max_kept_sup = max_kept_sup.max(t.sup);
            } else {
                removed += 1;
                removed_mass += t.l2sq;
            }
        }
        for ((o, z), l) in out.data.iter_mut().zip(&f.data).zip(&labels) {
            if keep[l] {
                *o += z;
            }
        }
    }
    out.add_assign(&synthesize(passthrough))?;
    Ok(PruneReport { field: out, removed_mass, kept, removed, max_kept_sup, bounded_caps: bounded })
}
