//! Caps, tubes and pruning on the period-cell grid of an exponential sum.
//!
//! Exact mode defers to the p-adic caps of `wavepacket::exact`. Real mode
//! uses sharp frequency intervals on the first axis and tubes that are
//! tilted boxes of width `1/delta` in `x1 + 2c x2` and height `1/delta^2`
//! in `x2`; a packet's sup is the max over the box.

use crate::error::{Error, Result};
use crate::exp_sum::{check_q_grid, DyadicPartition, ExpSumSpec};
use crate::fft::{analyze, synthesize};
use crate::field::Field;
use crate::grid::GridSpec;
use crate::wavepacket::exact::{exact_caps, prune_exact, tube_stats, PruneReport};
use num_complex::Complex64;
use std::collections::HashMap;

pub const NO_CAP: u32 = u32::MAX;

/// Cap index of every bin, or [`NO_CAP`].
pub fn cap_index_map(grid: &GridSpec, part: &DyadicPartition) -> Result<Vec<u32>> {
    check_q_grid(part.n, grid)?;
    if part.exact != grid.mode.is_exact() {
        return Err(Error::InvalidParameter("partition and grid modes differ".into()));
    }
    let (a, b) = (grid.samples[0], grid.samples[1]);
    let mut out = vec![NO_CAP; a * b];
    if part.exact {
        let caps = exact_caps(grid, part.level)?;
        let m = part.count();
        for k1 in 0..a {
            let cap = &caps[k1 % m];
            for k2 in 0..b {
                if cap.contains(k1, k2) {
                    out[k1 * b + k2] = cap.residue as u32;
                }
            }
        }
    } else {
        let count = part.count();
        for k1 in 0..a {
            if let Some(i) = real_cap_of_row(part.n, a, count, k1) {
                out[k1 * b..(k1 + 1) * b].fill(i as u32);
            }
        }
    }
    Ok(out)
}

/// Real mode: the interval of frequency bin row `k1`, if the bin can hold
/// some `n` in `1..=N`.
#[inline]
pub fn real_cap_of_row(n: usize, a: usize, count: usize, k1: usize) -> Option<usize> {
    let r = if k1 == 0 { a } else { k1 };
    (r <= n).then(|| (r * count - 1) / n)
}

/// Tube labels of every grid point for real-mode cap `index`.
pub fn real_tube_labels(grid: &GridSpec, n: usize, count: usize, index: usize) -> Vec<u64> {
    let (a, b) = (grid.samples[0], grid.samples[1]);
    let nf = n as f64;
    let width = count as f64;
    let height = width * width;
    let c = (index as f64 + 0.5) / width;
    let blocks = (nf * nf / height).ceil().max(1.0) as u64;
    let mut out = Vec::with_capacity(a * b);
    for i1 in 0..a {
        let x1 = i1 as f64 * nf / a as f64;
        for i2 in 0..b {
            let x2 = i2 as f64 * nf * nf / b as f64;
            let u = (x1 + 2.0 * c * x2).rem_euclid(nf);
            let cell = (u / width).floor() as u64;
            let block = (x2 / height).floor() as u64;
            out.push(cell * blocks + block);
        }
    }
    out
}

/// `max_I sum_{n in I} |a_n|`: a sup bound for every packet at this scale.
pub fn max_cap_l1(spec: &ExpSumSpec, part: &DyadicPartition) -> f64 {
    let mut sums = vec![0.0; part.count()];
    for m in 1..=spec.n() {
        sums[part.index_of(m)] += spec.a(m).norm();
    }
    sums.into_iter().fold(0.0, f64::max)
}

/// Keeps the packets of scale `part.delta()` whose sup is at most `lambda`.
pub fn prune(field: &Field, part: &DyadicPartition, lambda: f64) -> Result<PruneReport> {
    if part.exact {
        check_q_grid(part.n, &field.grid)?;
        return prune_exact(field, part.level, lambda);
    }
    prune_real(field, part, lambda)
}

fn prune_real(field: &Field, part: &DyadicPartition, lambda: f64) -> Result<PruneReport> {
    let grid = &field.grid;
    let map = cap_index_map(grid, part)?;
    let coeffs = analyze(field);
    let zero = Complex64::new(0.0, 0.0);
    let mut passthrough = coeffs.clone();
    let mut out = Field::zeros(grid);
    let (mut kept, mut removed, mut bounded) = (0, 0, 0);
    let mut removed_mass = 0.0;
    let mut max_kept_sup: f64 = 0.0;
    let count = part.count();
    let tubes_per_cap = {
        let w = count as f64;
        ((part.n as f64 / w).ceil() * (part.n as f64 * part.n as f64 / (w * w)).ceil()) as usize
    };
    for cap in 0..count {
        let mut masked = Field::zeros(grid);
        let mut l1 = 0.0;
        let mut any = false;
        for (i, z) in coeffs.data.iter().enumerate() {
            if map[i] == cap as u32 && *z != zero {
                masked.data[i] = *z;
                l1 += z.norm();
                any = true;
            }
        }
        if !any {
            continue;
        }
        if l1 <= lambda {
            bounded += 1;
            kept += tubes_per_cap;
            max_kept_sup = max_kept_sup.max(l1);
            continue;
        }
        for (i, z) in masked.data.iter().enumerate() {
            if *z != zero {
                passthrough.data[i] = zero;
            }
        }
        let f = synthesize(masked);
        let labels = real_tube_labels(grid, part.n, count, cap);
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
        for (i, z) in f.data.iter().enumerate() {
            if keep[&labels[i]] {
                out.data[i] += *z;
            }
        }
    }
    out.add_assign(&synthesize(passthrough))?;
    Ok(PruneReport { field: out, removed_mass, kept, removed, max_kept_sup, bounded_caps: bounded })
}

/// Projection of a field onto cap `index`, from its coefficient field.
pub fn project_cap(coeffs: &Field, map: &[u32], index: u32) -> Field {
    let mut masked = Field::zeros(&coeffs.grid);
    for (i, z) in coeffs.data.iter().enumerate() {
        if map[i] == index {
            masked.data[i] = *z;
        }
    }
    synthesize(masked)
}
