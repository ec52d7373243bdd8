//! Tube-cube incidences. The tube `T_{theta,nu}` has axis
//! `x(s) = nu h + 2 c_theta s` (mod the torus) for `s` in `[0, R]`, and
//! `Q ⊂ T` is read as: the axis spends positive time inside `Q`.

use super::examples::{cap_center, packet_data, PacketSpec};
use super::{cube_powers, CubePowers, Lab};
use crate::error::{Error, Result};
use crate::numeric::KahanSum;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TubeId {
    pub cap: Vec<usize>,
    pub nu: Vec<usize>,
}

impl From<&PacketSpec> for TubeId {
    fn from(p: &PacketSpec) -> Self {
        Self { cap: p.cap.clone(), nu: p.nu.clone() }
    }
}

/// Largest power of 2 not above `m`; `m >= 1`.
pub fn dyadic_class(m: u64) -> u64 {
    1 << (63 - m.leading_zeros())
}

fn check_lab(lab: &Lab) -> Result<()> {
    if lab.period_factor != 1 {
        return Err(Error::InvalidParameter("incidence needs the torus of extent R".into()));
    }
    Ok(())
}

/// Per axis: the cells the axis visits during `[s0, s1]`, with the visiting
/// time interval, walking along the unwrapped axis.
fn axis_visits(x0: f64, v: f64, s0: f64, s1: f64, h: f64, m: usize) -> Vec<(usize, f64, f64)> {
    let wrap = |j: i64| j.rem_euclid(m as i64) as usize;
    if v == 0.0 {
        let j = ((x0 + h / 2.0) / h).floor() as i64;
        return vec![(wrap(j), s0, s1)];
    }
    let (xa, xb) = (x0 + v * s0, x0 + v * s1);
    let (lo, hi) = (xa.min(xb), xa.max(xb));
    let j0 = ((lo + h / 2.0) / h).floor() as i64;
    let j1 = ((hi + h / 2.0) / h).floor() as i64;
    let mut out = Vec::new();
    for j in j0..=j1 {
        let ta = ((j as f64 - 0.5) * h - x0) / v;
        let tb = ((j as f64 + 0.5) * h - x0) / v;
        let (a, b) = (ta.min(tb).max(s0), ta.max(tb).min(s1));
        if b > a {
            out.push((wrap(j), a, b));
        }
    }
    out
}

/// Cubes of one tube, slab by slab.
pub fn tube_cubes(lab: &Lab, tube: &TubeId) -> Vec<usize> {
    let h = lab.h();
    let m = lab.cells_per_axis();
    let vel: Vec<f64> = cap_center(lab, &tube.cap).iter().map(|c| 2.0 * c).collect();
    let mut out = Vec::new();
    for b in 0..lab.slabs() {
        let (s0, s1) = (b as f64 * h, (b + 1) as f64 * h);
        let per_axis: Vec<Vec<(usize, f64, f64)>> =
            (0..lab.d).map(|a| axis_visits(tube.nu[a] as f64 * h, vel[a], s0, s1, h, m)).collect();
        let mut stack: Vec<(Vec<usize>, f64, f64)> = vec![(Vec::new(), s0, s1)];
        for visits in &per_axis {
            let mut next = Vec::new();
            for (cells, a, b) in &stack {
                for &(c, va, vb) in visits {
                    let (lo, hi) = (a.max(va), b.min(vb));
                    if hi > lo {
                        let mut cs = cells.clone();
                        cs.push(c);
                        next.push((cs, lo, hi));
                    }
                }
            }
            stack = next;
        }
        let mut cubes: Vec<usize> = stack.iter().map(|(cs, _, _)| lab.cube_index(b, cs)).collect();
        cubes.sort_unstable();
        cubes.dedup();
        out.extend(cubes);
    }
    out
}

/// Times in `[s0, s1]` at which `x0 + v s`, read mod `period`, lies in
/// `[lo, lo + h)`, as intervals; one per wrap of the torus.
fn cell_times(x0: f64, v: f64, s0: f64, s1: f64, lo: f64, h: f64, period: f64) -> Vec<(f64, f64)> {
    if v == 0.0 {
        let x = (x0 - lo).rem_euclid(period);
        return if x < h { vec![(s0, s1)] } else { Vec::new() };
    }
    let (xa, xb) = (x0 + v * s0, x0 + v * s1);
    let (xmin, xmax) = (xa.min(xb), xa.max(xb));
    let k0 = ((xmin - lo - h) / period).floor() as i64;
    let k1 = ((xmax - lo) / period).ceil() as i64;
    (k0..=k1)
        .filter_map(|k| {
            let c = lo + k as f64 * period;
            let (ta, tb) = ((c - x0) / v, (c + h - x0) / v);
            let (a, b) = (ta.min(tb).max(s0), ta.max(tb).min(s1));
            (b > a).then_some((a, b))
        })
        .collect()
}

fn intersect(a: &[(f64, f64)], b: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    for &(a0, a1) in a {
        for &(b0, b1) in b {
            let (lo, hi) = (a0.max(b0), a1.min(b1));
            if hi > lo {
                out.push((lo, hi));
            }
        }
    }
    out
}

/// Whether the axis of `tube` spends positive time in cube `idx`.
pub fn cube_meets_tube(lab: &Lab, idx: usize, tube: &TubeId) -> bool {
    let h = lab.h();
    let (slab, cells) = lab.cube_coords(idx);
    let (s0, s1) = (slab as f64 * h, (slab + 1) as f64 * h);
    let vel: Vec<f64> = cap_center(lab, &tube.cap).iter().map(|c| 2.0 * c).collect();
    let mut times = vec![(s0, s1)];
    for a in 0..lab.d {
        let lo = (cells[a] as f64 - 0.5) * h;
        let t = cell_times(tube.nu[a] as f64 * h, vel[a], s0, s1, lo, h, lab.period());
        times = intersect(&times, &t);
    }
    !times.is_empty()
}

/// `M(Q)` per cube, computed cube by cube, and the cube list of each tube,
/// computed tube by tube.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IncidenceTable {
    pub lab: Lab,
    pub tubes: Vec<TubeId>,
    pub m_of_cube: Vec<u32>,
    pub cubes_of_tube: Vec<Vec<usize>>,
}

pub fn incidence(lab: &Lab, tubes: &[TubeId]) -> Result<IncidenceTable> {
    check_lab(lab)?;
    let m = lab.cells_per_axis();
    let mut seen = std::collections::HashSet::new();
    for t in tubes {
        if t.cap.len() != lab.d || t.nu.len() != lab.d || t.cap.iter().chain(&t.nu).any(|&i| i >= m) {
            return Err(Error::InvalidParameter(format!("tube {t:?} outside the lattice")));
        }
        if !seen.insert(t) {
            return Err(Error::InvalidParameter(format!("tube {t:?} listed twice")));
        }
    }
    let cubes_of_tube: Vec<Vec<usize>> = tubes.iter().map(|t| tube_cubes(lab, t)).collect();
    let m_of_cube: Vec<u32> = (0..lab.cube_count())
        .map(|q| tubes.iter().filter(|t| cube_meets_tube(lab, q, t)).count() as u32)
        .collect();
    Ok(IncidenceTable { lab: *lab, tubes: tubes.to_vec(), m_of_cube, cubes_of_tube })
}

impl IncidenceTable {
    pub fn w(&self) -> usize {
        self.tubes.len()
    }

    /// `sum_Q M(Q)`.
    pub fn cube_side_total(&self) -> u64 {
        self.m_of_cube.iter().map(|&m| m as u64).sum()
    }

    /// `sum_T #cubes(T)`.
    pub fn tube_side_total(&self) -> u64 {
        self.cubes_of_tube.iter().map(|c| c.len() as u64).sum()
    }

    /// The double count holds and both enumerations agree cube by cube.
    pub fn consistent(&self) -> bool {
        let mut counts = vec![0u32; self.m_of_cube.len()];
        for cubes in &self.cubes_of_tube {
            for &q in cubes {
                counts[q] += 1;
            }
        }
        counts == self.m_of_cube && self.cube_side_total() == self.tube_side_total()
    }

    /// `Y_M` for each dyadic `M`: cubes with `M <= M(Q) < 2M`.
    pub fn y_m(&self) -> BTreeMap<u64, Vec<bool>> {
        let mut out: BTreeMap<u64, Vec<bool>> = BTreeMap::new();
        for (q, &c) in self.m_of_cube.iter().enumerate() {
            if c > 0 {
                out.entry(dyadic_class(c as u64)).or_insert_with(|| vec![false; self.m_of_cube.len()])[q] = true;
            }
        }
        out
    }

    /// `M(Q)` counting only the tubes in `keep`.
    pub fn counts_for(&self, keep: &[bool]) -> Vec<u32> {
        let mut counts = vec![0u32; self.m_of_cube.len()];
        for (t, cubes) in self.cubes_of_tube.iter().enumerate() {
            if keep[t] {
                for &q in cubes {
                    counts[q] += 1;
                }
            }
        }
        counts
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecouplingRow {
    pub m: u64,
    pub cubes: usize,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
}

/// `||F||_{L^p(Y_M)}` against `M^{1/2 - 1/p} (sum_theta ||F_theta||_p^p)^{1/p}`
/// for every nonempty `Y_M`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefinedDecoupling {
    pub table: IncidenceTable,
    pub rows: Vec<DecouplingRow>,
    pub max_ratio: f64,
    pub theta_sum: f64,
    #[serde(skip)]
    pub powers: Option<CubePowers>,
}

pub fn refined_decoupling_ratio(lab: &Lab, packets: &[PacketSpec]) -> Result<RefinedDecoupling> {
    let tubes: Vec<TubeId> = packets.iter().map(TubeId::from).collect();
    let table = incidence(lab, &tubes)?;
    let p = lab.p();
    let f = packet_data(lab, packets)?;
    let powers = cube_powers(lab, &f, p)?;
    let mut by_cap: BTreeMap<&[usize], Vec<PacketSpec>> = BTreeMap::new();
    for pk in packets {
        by_cap.entry(&pk.cap).or_default().push(pk.clone());
    }
    let mut theta_sum = KahanSum::new();
    for group in by_cap.values() {
        let ft = packet_data(lab, group)?;
        for v in cube_powers(lab, &ft, p)?.values {
            theta_sum.add(v);
        }
    }
    let theta_sum = theta_sum.value();
    let rows: Vec<DecouplingRow> = table
        .y_m()
        .into_iter()
        .map(|(m, mask)| {
            let lhs = powers.norm_over(|q| mask[q]);
            let rhs = (m as f64).powf(0.5 - 1.0 / p) * theta_sum.powf(1.0 / p);
            DecouplingRow { m, cubes: mask.iter().filter(|&&b| b).count(), lhs, rhs, ratio: lhs / rhs }
        })
        .collect();
    let max_ratio = rows.iter().map(|r| r.ratio).fold(0.0, f64::max);
    Ok(RefinedDecoupling { table, rows, max_ratio, theta_sum, powers: Some(powers) })
}
