//! Spacetime experiments on `[0, R]^{d+1}` at cube scale `R^{1/2}`.
//!
//! Time is lab time `s`, with multiplier `e(-s |xi|^2)`, so tubes of cap
//! `theta` have slope `2 c_theta`. Space is a torus of extent
//! `period_factor * R`; cubes of side `h = R^{1/2}` are centered on the
//! lattice `h Z^d` and cover `[-h/2, R - h/2)^d`, time slabs are `[b h, (b+1) h)`.

pub mod examples;
pub mod incidence;
pub mod pigeonhole;
pub mod rescale;
pub mod select;

use crate::error::{Error, Result};
use crate::field::Field;
use crate::grid::{GridSpec, Mode};
use crate::numeric::{log_p_exact, KahanSum};
use crate::wavepacket::evolve::Evolver;
use serde::{Deserialize, Serialize};

pub use examples::{bush_example, packet_data, parallel_example, single_packet, PacketSpec};
pub use incidence::{incidence, refined_decoupling_ratio, IncidenceTable, RefinedDecoupling, TubeId};
pub use pigeonhole::{chain_check, pigeonhole_sigma, ChainReport, PigeonholeReport};
pub use rescale::{default_k, parabolic_rescale, strip_images, strips, verify_rescale, StripPartition};
pub use select::{refined_strichartz_check, select_comparable_cubes, BandPolicy, RefinedReport};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Lab {
    pub d: usize,
    pub r: f64,
    pub dx: f64,
    pub dt: f64,
    pub period_factor: usize,
}

impl Lab {
    /// `R` must be an even power of 2. Defaults: `dx = dt = 1/2` for `d = 1`,
    /// `dx = dt = 1` for `d = 2`; spatial period `R`.
    pub fn new(d: usize, r: usize) -> Result<Self> {
        let k = log_p_exact(r as u64, 2)
            .filter(|k| k % 2 == 0 && *k >= 4)
            .ok_or_else(|| Error::InvalidParameter(format!("R = {r} must be 4^m with R >= 16")))?;
        let _ = k;
        let (dx, dt) = match d {
            1 => (0.5, 0.5),
            2 => (1.0, 1.0),
            _ => return Err(Error::InvalidParameter(format!("d = {d} not in {{1, 2}}"))),
        };
        Ok(Self { d, r: r as f64, dx, dt, period_factor: 1 })
    }

    pub fn with_period_factor(mut self, factor: usize) -> Result<Self> {
        if factor == 0 {
            return Err(Error::InvalidParameter("period factor must be positive".into()));
        }
        self.period_factor = factor;
        Ok(self)
    }

    /// `p = 2(d+2)/d`.
    pub fn p(&self) -> f64 {
        2.0 * (self.d as f64 + 2.0) / self.d as f64
    }

    /// Cube side `R^{1/2}`.
    pub fn h(&self) -> f64 {
        self.r.sqrt()
    }

    pub fn cells_per_axis(&self) -> usize {
        self.h().round() as usize
    }

    pub fn slabs(&self) -> usize {
        self.cells_per_axis()
    }

    pub fn cubes_per_slab(&self) -> usize {
        self.cells_per_axis().pow(self.d as u32)
    }

    pub fn cube_count(&self) -> usize {
        self.slabs() * self.cubes_per_slab()
    }

    pub fn period(&self) -> f64 {
        self.period_factor as f64 * self.r
    }

    pub fn space_grid(&self) -> GridSpec {
        let n = (self.period() / self.dx).round() as usize;
        GridSpec::new(vec![self.period(); self.d], vec![n; self.d], Mode::Real).expect("valid lab grid")
    }

    pub fn nt(&self) -> usize {
        (self.r / self.dt).round() as usize
    }

    /// Flat cube index from slab and spatial cells.
    pub fn cube_index(&self, slab: usize, cells: &[usize]) -> usize {
        let m = self.cells_per_axis();
        cells.iter().fold(slab, |acc, &c| acc * m + c)
    }

    /// `(slab, cells)` of a flat cube index.
    pub fn cube_coords(&self, idx: usize) -> (usize, Vec<usize>) {
        let m = self.cells_per_axis();
        let mut cells = vec![0; self.d];
        let mut rest = idx;
        for a in (0..self.d).rev() {
            cells[a] = rest % m;
            rest /= m;
        }
        (rest, cells)
    }

    pub fn slab_of(&self, idx: usize) -> usize {
        idx / self.cubes_per_slab()
    }

    /// Spatial cell holding coordinate `x`, or `None` outside the cube range.
    pub fn cell_of(&self, x: f64) -> Option<usize> {
        let h = self.h();
        let m = self.cells_per_axis() as i64;
        let c = ((x + h / 2.0) / h).floor() as i64;
        if self.period_factor == 1 {
            Some(c.rem_euclid(m) as usize)
        } else if (0..m).contains(&c) {
            Some(c as usize)
        } else if c == self.period_factor as i64 * m {
            // The wrap-around half cell at the far end belongs to cell 0.
            Some(0)
        } else {
            None
        }
    }

    /// `||f||_{L^2}` over the spatial torus.
    pub fn l2(&self, f: &Field) -> f64 {
        let mut s = KahanSum::new();
        for z in &f.data {
            s.add(z.norm_sqr());
        }
        (s.value() * f.grid.cell_volume()).sqrt()
    }

    fn check(&self, f: &Field) -> Result<()> {
        if !f.grid.same_shape(&self.space_grid()) || f.grid.mode.is_exact() {
            return Err(Error::Shape("initial data is not on the lab grid".into()));
        }
        Ok(())
    }
}

/// `int_Q |u|^p` for every cube, where `u` is the evolution of `f`; streamed
/// slice by slice with the rectangle rule.
#[derive(Debug, Clone, PartialEq)]
pub struct CubePowers {
    pub lab: Lab,
    pub p: f64,
    pub values: Vec<f64>,
}

impl CubePowers {
    /// `(sum over cubes in mask)^{1/p}`.
    pub fn norm_over(&self, keep: impl Fn(usize) -> bool) -> f64 {
        let mut s = KahanSum::new();
        for (i, &v) in self.values.iter().enumerate() {
            if keep(i) {
                s.add(v);
            }
        }
        s.value().powf(1.0 / self.p)
    }

    pub fn total_norm(&self) -> f64 {
        self.norm_over(|_| true)
    }

    /// `||u||_{L^p(Q)}` per cube.
    pub fn cube_norms(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.powf(1.0 / self.p)).collect()
    }
}

pub fn cube_powers(lab: &Lab, f: &Field, p: f64) -> Result<CubePowers> {
    lab.check(f)?;
    let grid = &f.grid;
    let ev = Evolver::banded(f);
    let h = lab.h();
    let n_axis = grid.samples[0];
    let cell_of_index: Vec<Option<usize>> = (0..n_axis).map(|j| lab.cell_of(j as f64 * lab.dx)).collect();
    let weight = grid.cell_volume() * lab.dt;
    let mut values = vec![0.0; lab.cube_count()];
    let per_slab = lab.cubes_per_slab();
    let m = lab.cells_per_axis();
    let mut acc = vec![0.0; per_slab];
    let mut current_slab = usize::MAX;
    let flush = |slab: usize, acc: &mut Vec<f64>, values: &mut Vec<f64>| {
        if slab != usize::MAX {
            values[slab * per_slab..(slab + 1) * per_slab].copy_from_slice(acc);
        }
        acc.iter_mut().for_each(|a| *a = 0.0);
    };
    for i in 0..lab.nt() {
        let s = i as f64 * lab.dt;
        let slab = ((s / h).floor() as usize).min(lab.slabs() - 1);
        if slab != current_slab {
            flush(current_slab, &mut acc, &mut values);
            current_slab = slab;
        }
        let u = ev.lab_slice(s);
        let pw = |z: num_complex::Complex64| -> f64 {
            let a = z.norm_sqr();
            if p == 6.0 {
                a * a * a
            } else if p == 4.0 {
                a * a
            } else {
                a.powf(p / 2.0)
            }
        };
        match lab.d {
            1 => {
                for (j, z) in u.data.iter().enumerate() {
                    if let Some(c) = cell_of_index[j] {
                        acc[c] += pw(*z) * weight;
                    }
                }
            }
            _ => {
                for (j, z) in u.data.iter().enumerate() {
                    let (j0, j1) = (j / n_axis, j % n_axis);
                    if let (Some(c0), Some(c1)) = (cell_of_index[j0], cell_of_index[j1]) {
                        acc[c0 * m + c1] += pw(*z) * weight;
                    }
                }
            }
        }
    }
    flush(current_slab, &mut acc, &mut values);
    Ok(CubePowers { lab: *lab, p, values })
}

/// `||u||_{L^p([0,R]^{d+1})} / ||f||_2` over the cube range.
pub fn strichartz_lab_ratio(lab: &Lab, f: &Field) -> Result<f64> {
    let cp = cube_powers(lab, f, lab.p())?;
    let l2 = lab.l2(f);
    if l2 == 0.0 {
        return Err(Error::InvalidParameter("zero initial data".into()));
    }
    Ok(cp.total_norm() / l2)
}
