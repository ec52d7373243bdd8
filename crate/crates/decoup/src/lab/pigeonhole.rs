//! The counting behind the refined Strichartz estimates: dyadic pigeonholing
//! of amplitudes and incidences, and the `M' M'' <= M` cascade over strips.

use super::examples::{packet_data, PacketSpec};
use super::incidence::{dyadic_class, IncidenceTable};
use super::rescale::strips;
use super::select::{select_comparable_cubes, BandPolicy};
use super::{cube_powers, CubePowers, Lab};
use crate::error::{Error, Result};
use crate::wavepacket::real::gaussian_packet;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PigeonholeReport {
    /// Median cubes per slab of `Y`.
    pub sigma: usize,
    /// Slabs of `Y`.
    pub rho_y: usize,
    /// Cubes of `Y`.
    pub y_cubes: usize,
    /// Dyadic packet-norm class kept (lower edge).
    pub amplitude: f64,
    pub w: usize,
    pub m: u64,
    /// Cubes of `Y'`.
    pub n: usize,
    /// Slabs meeting `Y'`.
    pub rho: usize,
    /// `16 (ln R)^3 W / M`.
    pub sigma_bound: f64,
    pub holds: bool,
    /// `N M <= 3^d rho W`: a tube meets at most `3^d` cubes per slab.
    pub counting_ok: bool,
    /// `||u_W||_{L^p(Y')} / ((M/W)^{1/2-1/p} ||f_W||_2)`.
    pub rsi_v2_ratio: f64,
    pub skip: bool,
}

/// Pigeonholes the packets by dyadic `L^2` norm and the cubes of `Y` by
/// dyadic incidence count, keeping the class with the most cubes.
pub fn pigeonhole_sigma(
    lab: &Lab,
    packets: &[PacketSpec],
    table: &IncidenceTable,
    powers: &CubePowers,
    policy: BandPolicy,
) -> Result<PigeonholeReport> {
    if table.tubes.len() != packets.len() {
        return Err(Error::Shape("incidence table and packets differ".into()));
    }
    let sel = select_comparable_cubes(powers, policy);
    let grid = lab.space_grid();
    let unit = lab.l2(&gaussian_packet(&grid, &vec![0.0; lab.d], &vec![0.0; lab.d], lab.h()));
    let norm_class = |p: &PacketSpec| (p.amp.norm() * unit).log2().floor() as i32;
    let mut best: Option<(usize, i32, u64, Vec<bool>)> = None;
    let classes: std::collections::BTreeSet<i32> =
        packets.iter().filter(|p| p.amp.norm() > 0.0).map(norm_class).collect();
    for &a in &classes {
        let keep: Vec<bool> = packets.iter().map(|p| p.amp.norm() > 0.0 && norm_class(p) == a).collect();
        let counts = table.counts_for(&keep);
        let mut by_m: BTreeMap<u64, Vec<bool>> = BTreeMap::new();
        for (q, &c) in counts.iter().enumerate() {
            if c > 0 && sel.selected[q] {
                by_m.entry(dyadic_class(c as u64)).or_insert_with(|| vec![false; counts.len()])[q] = true;
            }
        }
        for (m, mask) in by_m {
            let n = mask.iter().filter(|&&b| b).count();
            if best.as_ref().map_or(true, |b| n > b.0) {
                best = Some((n, a, m, mask));
            }
        }
    }
    let ln_r = lab.r.ln();
    let Some((n, a, m, mask)) = best else {
        return Ok(PigeonholeReport {
            sigma: sel.sigma,
            rho_y: sel.rho,
            y_cubes: sel.count(),
            amplitude: 0.0,
            w: 0,
            m: 0,
            n: 0,
            rho: 0,
            sigma_bound: 0.0,
            holds: true,
            counting_ok: true,
            rsi_v2_ratio: 0.0,
            skip: true,
        });
    };
    let class: Vec<PacketSpec> =
        packets.iter().filter(|p| p.amp.norm() > 0.0 && norm_class(p) == a).cloned().collect();
    let w = class.len();
    let mut slabs = vec![false; lab.slabs()];
    for (q, &b) in mask.iter().enumerate() {
        if b {
            slabs[lab.slab_of(q)] = true;
        }
    }
    let rho = slabs.iter().filter(|&&b| b).count();
    let sigma_bound = 16.0 * ln_r.powi(3) * w as f64 / m as f64;
    let counting_ok = (n as u64) * m <= 3u64.pow(lab.d as u32) * (rho * w) as u64;
    let p = lab.p();
    let (class_powers, class_l2) = if w == packets.len() {
        (powers.clone(), lab.l2(&packet_data(lab, packets)?))
    } else {
        let f = packet_data(lab, &class)?;
        (cube_powers(lab, &f, p)?, lab.l2(&f))
    };
    let lhs = class_powers.norm_over(|q| mask[q]);
    let rhs = (m as f64 / w as f64).powf(0.5 - 1.0 / p) * class_l2;
    Ok(PigeonholeReport {
        sigma: sel.sigma,
        rho_y: sel.rho,
        y_cubes: sel.count(),
        amplitude: 2f64.powi(a),
        w,
        m,
        n,
        rho,
        sigma_bound,
        holds: (sel.sigma as f64) <= sigma_bound,
        counting_ok,
        rsi_v2_ratio: lhs / rhs,
        skip: false,
    })
}

/// Outcome of the `M' M'' <= M` cascade over all cubes `Q_0` with `M(Q_0) >= 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainReport {
    pub k: usize,
    /// `(Q_0, M')` pairs examined.
    pub instances: usize,
    pub violations: usize,
    /// `sum_beta M'(Q_0, beta) <= M(Q_0)` at every `Q_0`.
    pub disjoint_ok: bool,
    pub max_product_over_m: f64,
}

impl ChainReport {
    pub fn holds(&self) -> bool {
        self.violations == 0 && self.disjoint_ok
    }
}

/// For each `beta` in `P_{1/K}`, every strip `S` gets `M'_S`, the number of
/// tubes of `W_beta` incident to all cubes of `S`. At each cube `Q_0` and
/// dyadic `M'`, `M''` is the dyadic class of `#{beta : M'_S ~ M'}` where
/// `S` is the `beta`-strip through `Q_0`.
pub fn chain_check(table: &IncidenceTable, k: usize) -> Result<ChainReport> {
    let lab = &table.lab;
    let m = lab.cells_per_axis();
    let d = lab.d;
    let betas = k.pow(d as u32);
    let per_beta = m / k;
    let beta_of = |cap: &[usize]| cap.iter().fold(0, |acc, &c| acc * k + c / per_beta);
    let cube_sets: Vec<std::collections::HashSet<usize>> =
        table.cubes_of_tube.iter().map(|c| c.iter().copied().collect()).collect();
    // m_prime[beta][cube]
    let mut m_prime = vec![vec![0u32; lab.cube_count()]; betas];
    for (flat, row) in m_prime.iter_mut().enumerate() {
        let mut beta = vec![0; d];
        let mut rest = flat;
        for a in (0..d).rev() {
            beta[a] = rest % k;
            rest /= k;
        }
        let part = strips(lab, &beta, k)?;
        let members: Vec<usize> =
            (0..table.tubes.len()).filter(|&t| beta_of(&table.tubes[t].cap) == flat).collect();
        for strip in &part.strips {
            let c = members.iter().filter(|&&t| strip.iter().all(|q| cube_sets[t].contains(q))).count() as u32;
            for &q in strip {
                row[q] = c;
            }
        }
    }
    let mut instances = 0;
    let mut violations = 0;
    let mut disjoint_ok = true;
    let mut max_product_over_m: f64 = 0.0;
    for (q, &mq) in table.m_of_cube.iter().enumerate() {
        if mq == 0 {
            continue;
        }
        let big_m = dyadic_class(mq as u64);
        let total: u64 = m_prime.iter().map(|row| row[q] as u64).sum();
        disjoint_ok &= total <= mq as u64;
        let mut n_of: BTreeMap<u64, u64> = BTreeMap::new();
        for row in &m_prime {
            if row[q] > 0 {
                *n_of.entry(dyadic_class(row[q] as u64)).or_default() += 1;
            }
        }
        for (mp, n) in n_of {
            let mpp = dyadic_class(n);
            instances += 1;
            if mp * mpp > big_m {
                violations += 1;
            }
            max_product_over_m = max_product_over_m.max((mp * mpp) as f64 / big_m as f64);
        }
    }
    Ok(ChainReport { k, instances, violations, disjoint_ok, max_product_over_m })
}
