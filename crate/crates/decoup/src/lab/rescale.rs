//! Strips along `beta` in `P_{1/K}` and parabolic rescaling of `F_beta`.
//!
//! The rescale shears about the left corner `a` of `beta`:
//! `x' = (x - 2 a s) / K`, `s' = s / K^2`, `eta = K (xi - a)`, which sends
//! `beta` onto `[0, 1]^d`; `K = 1` with `beta = [0, 1]^d` is the identity.

use super::Lab;
use crate::error::{Error, Result};
use crate::fft::analyze;
use crate::field::Field;
use crate::grid::{GridSpec, Mode};
use crate::numeric::{e, log_p_exact, KahanSum};
use crate::wavepacket::evolve::Evolver;
use crate::wavepacket::real::band_freq;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// `R^{1/4}` rounded down to a power of 2.
pub fn default_k(r: f64) -> usize {
    let q = r.powf(0.25);
    let mut k = 1;
    while ((2 * k) as f64) <= q * (1.0 + 1e-12) {
        k *= 2;
    }
    k
}

fn check_k(lab: &Lab, beta: &[usize], k: usize) -> Result<()> {
    let m = lab.cells_per_axis();
    if log_p_exact(k as u64, 2).is_none() || k > m || m % k != 0 {
        return Err(Error::InvalidParameter(format!("K = {k} must be a power of 2 dividing R^(1/2) = {m}")));
    }
    if beta.len() != lab.d || beta.iter().any(|&b| b >= k) {
        return Err(Error::InvalidParameter(format!("beta {beta:?} is not a cap of P_(1/{k})")));
    }
    Ok(())
}

/// Partition of the cubes into strips: `K` consecutive slabs from a multiple
/// of `K`, cells `a + round(2 c_beta r)` in the `r`-th slab.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StripPartition {
    pub k: usize,
    pub beta: Vec<usize>,
    /// `(block, a)` per strip.
    pub anchors: Vec<(usize, Vec<usize>)>,
    pub strips: Vec<Vec<usize>>,
    pub strip_of_cube: Vec<usize>,
}

impl StripPartition {
    /// Every cube lies in exactly one strip and every strip has `K` cubes.
    pub fn is_partition(&self, lab: &Lab) -> bool {
        let mut hits = vec![0usize; lab.cube_count()];
        for s in &self.strips {
            for &q in s {
                hits[q] += 1;
            }
        }
        hits.iter().all(|&h| h == 1)
            && self.strips.iter().all(|s| s.len() == self.k)
            && self.strips.iter().enumerate().all(|(i, s)| s.iter().all(|&q| self.strip_of_cube[q] == i))
    }
}

fn shift(beta: usize, k: usize, r: usize) -> i64 {
    // round((2 beta + 1) r / K), ties up
    ((2 * (2 * beta + 1) * r + k) / (2 * k)) as i64
}

pub fn strips(lab: &Lab, beta: &[usize], k: usize) -> Result<StripPartition> {
    check_k(lab, beta, k)?;
    let m = lab.cells_per_axis();
    let per_slab = lab.cubes_per_slab();
    let blocks = lab.slabs() / k;
    let mut anchors = Vec::with_capacity(blocks * per_slab);
    let mut out = Vec::with_capacity(blocks * per_slab);
    let mut strip_of_cube = vec![usize::MAX; lab.cube_count()];
    for block in 0..blocks {
        for flat in 0..per_slab {
            let (_, a) = lab.cube_coords(flat);
            let cubes: Vec<usize> = (0..k)
                .map(|r| {
                    let cells: Vec<usize> = (0..lab.d)
                        .map(|ax| (a[ax] as i64 + shift(beta[ax], k, r)).rem_euclid(m as i64) as usize)
                        .collect();
                    lab.cube_index(block * k + r, &cells)
                })
                .collect();
            for &q in &cubes {
                strip_of_cube[q] = out.len();
            }
            anchors.push((block, a));
            out.push(cubes);
        }
    }
    Ok(StripPartition { k, beta: beta.to_vec(), anchors, strips: out, strip_of_cube })
}

/// Geometry of the strip images under the shear, in units of `R_1^{1/2}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StripImageCheck {
    pub r1: f64,
    /// Time side of every image; `1` means exactly `R_1^{1/2}`.
    pub time_side: f64,
    pub max_space_side: f64,
    /// `3 + 2 a_beta`, the largest spatial side the shear can produce.
    pub space_bound: f64,
    /// Anchors `(a - 2 beta block mod R^{1/2}, block)` run over the
    /// `R_1^{1/2}`-lattice of `[0, R/K)^d x [0, R_1)` exactly once.
    pub tiles: bool,
    /// Each image contains the center of its anchor cube.
    pub anchored: bool,
}

impl StripImageCheck {
    pub fn holds(&self) -> bool {
        (self.time_side - 1.0).abs() < 1e-12 && self.max_space_side <= self.space_bound + 1e-12 && self.tiles && self.anchored
    }
}

pub fn strip_images(lab: &Lab, part: &StripPartition) -> StripImageCheck {
    let h = lab.h();
    let k = part.k as f64;
    let m = lab.cells_per_axis();
    let unit = h / k;
    let corner: Vec<f64> = part.beta.iter().map(|&b| b as f64 / k).collect();
    let mut time_side: f64 = 0.0;
    let mut max_space_side: f64 = 0.0;
    let mut anchored = true;
    let mut seen = std::collections::HashSet::new();
    for (block, a) in &part.anchors {
        let (t_lo, t_hi) = ((block * part.k) as f64 * h / (k * k), ((block + 1) * part.k) as f64 * h / (k * k));
        time_side = time_side.max((t_hi - t_lo) / unit);
        let mut anchor = vec![*block];
        for ax in 0..lab.d {
            let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
            for r in 0..part.k {
                let cell = a[ax] as f64 + shift(part.beta[ax], part.k, r) as f64;
                let slab = (block * part.k + r) as f64;
                for (dx, dt) in [(-0.5, 0.0), (0.5, 0.0), (-0.5, 1.0), (0.5, 1.0)] {
                    let x = (cell + dx) * h;
                    let t = (slab + dt) * h;
                    let xp = (x - 2.0 * corner[ax] * t) / k;
                    lo = lo.min(xp);
                    hi = hi.max(xp);
                }
            }
            max_space_side = max_space_side.max((hi - lo) / unit);
            let shifted = a[ax] as i64 - 2 * (part.beta[ax] * block) as i64;
            let center = shifted as f64 * unit;
            anchored &= lo <= center && center <= hi;
            anchor.push(shifted.rem_euclid(m as i64) as usize);
        }
        seen.insert(anchor);
    }
    let lattice = (lab.slabs() / part.k) * lab.cubes_per_slab();
    let space_bound = 3.0 + 2.0 * corner.iter().cloned().fold(0.0, f64::max);
    StripImageCheck {
        r1: lab.r / (k * k),
        time_side,
        max_space_side,
        space_bound,
        tiles: seen.len() == lattice && part.anchors.len() == lattice,
        anchored,
    }
}

/// Sharp projection onto the bins of `beta` (band frequencies in `[b/K, (b+1)/K)`).
pub fn project_to_beta(lab: &Lab, f: &Field, beta: &[usize], k: usize) -> Result<Field> {
    check_k(lab, beta, k)?;
    let grid = &f.grid;
    let mut c = analyze(f);
    for (i, z) in c.data.iter_mut().enumerate() {
        let bins = grid.unravel(i);
        let inside = (0..lab.d).all(|a| {
            let xi = band_freq(grid, a, bins[a]) * k as f64;
            xi >= beta[a] as f64 && xi < (beta[a] + 1) as f64
        });
        if !inside {
            *z = Complex64::new(0.0, 0.0);
        }
    }
    Ok(crate::fft::synthesize(c))
}

/// `G(x', 0) = e(-K a.x') F_beta(K x', 0)` on the torus of extent `L/K`.
#[derive(Debug, Clone)]
pub struct Rescaled {
    pub k: usize,
    pub beta: Vec<usize>,
    pub corner: Vec<f64>,
    pub r1: f64,
    pub g: Field,
    /// `||F_beta||_{L^p}^p = K^{d+2} ||G||_{L^p}^p` on spacetime.
    pub jacobian: f64,
    /// Same for spatial slices at matched times: `K^d`.
    pub spatial_jacobian: f64,
}

pub fn parabolic_rescale(lab: &Lab, f_beta: &Field, beta: &[usize], k: usize) -> Result<Rescaled> {
    check_k(lab, beta, k)?;
    let grid = &f_beta.grid;
    if !grid.same_shape(&lab.space_grid()) {
        return Err(Error::Shape("F_beta is not on the lab grid".into()));
    }
    let l = lab.period();
    let kf = k as f64;
    let corner: Vec<f64> = beta.iter().map(|&b| b as f64 / kf).collect();
    let g_grid = GridSpec::new(vec![l / kf; lab.d], grid.samples.clone(), Mode::Real)?;
    let c = analyze(f_beta);
    let peak = c.data.iter().fold(0.0f64, |m, z| m.max(z.norm()));
    let mut gc = Field::zeros(&g_grid);
    for (i, z) in c.data.iter().enumerate() {
        if *z == Complex64::new(0.0, 0.0) {
            continue;
        }
        let bins = grid.unravel(i);
        let mut target = Vec::with_capacity(lab.d);
        for a in 0..lab.d {
            let xi = band_freq(grid, a, bins[a]);
            let eta = kf * (xi - corner[a]);
            if !(-1e-9..1.0 + 1e-9).contains(&eta) {
                if z.norm() > 1e-12 * peak {
                    return Err(Error::InvalidParameter(format!("F_beta has frequency {xi} outside beta")));
                }
                target.clear();
                break;
            }
            let n = ((xi - corner[a]) * l).round() as i64;
            target.push(n.rem_euclid(grid.samples[a] as i64) as usize);
        }
        if target.len() == lab.d {
            let j = g_grid.ravel(&target);
            gc.data[j] += z;
        }
    }
    let g = crate::fft::synthesize(gc);
    Ok(Rescaled {
        k,
        beta: beta.to_vec(),
        corner,
        r1: lab.r / (kf * kf),
        g,
        jacobian: kf.powi(lab.d as i32 + 2),
        spatial_jacobian: kf.powi(lab.d as i32),
    })
}

fn band_terms(f: &Field) -> Vec<(Vec<f64>, Complex64)> {
    let grid = &f.grid;
    analyze(f)
        .data
        .into_iter()
        .enumerate()
        .filter(|(_, z)| z.norm() > 0.0)
        .map(|(i, z)| {
            let bins = grid.unravel(i);
            ((0..grid.dims()).map(|a| band_freq(grid, a, bins[a])).collect(), z)
        })
        .collect()
}

fn eval_terms(terms: &[(Vec<f64>, Complex64)], x: &[f64], s: f64) -> Complex64 {
    terms
        .iter()
        .map(|(xi, z)| {
            let ph: f64 = xi.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() - s * xi.iter().map(|a| a * a).sum::<f64>();
            z * e(ph)
        })
        .sum()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RescaleCheck {
    /// `max | |F_beta(x, s)| - |G(x', s')| | / sup |F_beta|` over random points.
    pub pointwise_max_rel: f64,
    /// `max | int |F_beta(s)|^p - K^d int |G(s')|^p | / int |F_beta(s)|^p` over matched times.
    pub lp_max_rel: f64,
    pub jacobian: f64,
}

pub fn verify_rescale(lab: &Lab, f_beta: &Field, res: &Rescaled, points: usize, seed: u64) -> RescaleCheck {
    let kf = res.k as f64;
    let l = lab.period();
    let tf = band_terms(f_beta);
    let tg = band_terms(&res.g);
    let scale = tf.iter().map(|t| t.1.norm()).sum::<f64>().max(f64::MIN_POSITIVE);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pointwise: f64 = 0.0;
    for _ in 0..points {
        let x: Vec<f64> = (0..lab.d).map(|_| rng.gen::<f64>() * l).collect();
        let s = rng.gen::<f64>() * lab.r;
        let xp: Vec<f64> = (0..lab.d).map(|a| (x[a] - 2.0 * res.corner[a] * s) / kf).collect();
        let a = eval_terms(&tf, &x, s).norm();
        let b = eval_terms(&tg, &xp, s / (kf * kf)).norm();
        pointwise = pointwise.max((a - b).abs() / scale);
    }
    let p = lab.p();
    let ef = Evolver::banded(f_beta);
    let eg = Evolver::banded(&res.g);
    let integral = |u: &Field| {
        let mut acc = KahanSum::new();
        for z in &u.data {
            acc.add(z.norm().powf(p));
        }
        acc.value() * u.grid.cell_volume()
    };
    let mut lp: f64 = 0.0;
    for i in 0..=4 {
        let s = lab.r * i as f64 / 4.0;
        let a = integral(&ef.lab_slice(s));
        let b = res.spatial_jacobian * integral(&eg.lab_slice(s / (kf * kf)));
        if a > 0.0 {
            lp = lp.max((a - b).abs() / a);
        }
    }
    RescaleCheck { pointwise_max_rel: pointwise, lp_max_rel: lp, jacobian: res.jacobian }
}
