//! Real-mode caps: raised-cosine partitions of unity in each frequency
//! coordinate, sharp tilings of spacetime by tilted tubes.

use super::caps::{build_caps, Cap};
use super::evolve::SpacetimeField;
use crate::error::{Error, Result};
use crate::fft::{analyze, synthesize};
use crate::field::Field;
use crate::filter::cos_ramp;
use crate::grid::GridSpec;
use num_complex::Complex64;

/// Representative of bin `k` on `axis` in a window centered at 1/2, so the
/// band `[0, 1]` and its margins are not split by the wrap-around.
pub fn band_freq(grid: &GridSpec, axis: usize, k: usize) -> f64 {
    let l = grid.extents[axis];
    let span = grid.samples[axis] as f64 / l;
    let lo = 0.5 - span / 2.0;
    let xi = k as f64 / l;
    lo + (xi - lo).rem_euclid(span)
}

/// Partition of unity subordinate to the caps of side `delta`.
///
/// Interfaces sit at `i delta + shift`; each ramp has half-width `half_width`
/// (at most `delta / 4`). At the two outer edges the windows fall to zero
/// outside `[shift, 1 + shift]` over `2 half_width`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RealPartition {
    pub delta: f64,
    pub d: usize,
    pub shift: f64,
    pub half_width: f64,
}

impl RealPartition {
    pub fn new(delta: f64, d: usize) -> Result<Self> {
        build_caps(delta, d)?;
        Ok(Self { delta, d, shift: 0.0, half_width: delta / 4.0 })
    }

    pub fn with_ramp(delta: f64, d: usize, shift: f64, half_width: f64) -> Result<Self> {
        build_caps(delta, d)?;
        if !(half_width > 0.0 && half_width <= delta / 4.0) {
            return Err(Error::InvalidParameter("ramp half-width must be in (0, delta/4]".into()));
        }
        Ok(Self { delta, d, shift, half_width })
    }

    pub fn per_axis(&self) -> usize {
        (1.0 / self.delta).round() as usize
    }

    pub fn caps(&self) -> Vec<Cap> {
        build_caps(self.delta, self.d).expect("validated")
    }

    pub fn window_1d(&self, i: usize, xi: f64) -> f64 {
        let m = self.per_axis();
        let w = self.half_width;
        let lo = i as f64 * self.delta + self.shift;
        let hi = lo + self.delta;
        let lower = if i == 0 {
            cos_ramp((lo - xi) / (2.0 * w))
        } else {
            1.0 - cos_ramp((xi - (lo - w)) / (2.0 * w))
        };
        let upper = if i + 1 == m {
            cos_ramp((xi - hi) / (2.0 * w))
        } else {
            cos_ramp((xi - (hi - w)) / (2.0 * w))
        };
        lower * upper
    }

    pub fn window(&self, index: &[usize], xi: &[f64]) -> f64 {
        index.iter().zip(xi).map(|(&i, &x)| self.window_1d(i, x)).product()
    }

    /// Multiplier of cap `index` on every bin of a spatial grid.
    pub fn symbol(&self, grid: &GridSpec, index: &[usize]) -> Vec<f64> {
        (0..grid.len())
            .map(|b| {
                let k = grid.unravel(b);
                let xi: Vec<f64> = k.iter().enumerate().map(|(a, &ka)| band_freq(grid, a, ka)).collect();
                self.window(index, &xi)
            })
            .collect()
    }
}

fn check_spatial(grid: &GridSpec, d: usize) -> Result<()> {
    if grid.mode.is_exact() || grid.dims() != d {
        return Err(Error::Shape(format!("need a real-mode grid with {d} axes")));
    }
    Ok(())
}

/// `P_theta f`: spatial Fourier multiplier by the cap window.
pub fn project_spatial(f: &Field, part: &RealPartition, index: &[usize]) -> Result<Field> {
    check_spatial(&f.grid, part.d)?;
    let mut c = analyze(f);
    for (z, s) in c.data.iter_mut().zip(part.symbol(&f.grid, index)) {
        *z *= s;
    }
    Ok(synthesize(c))
}

/// Index of the cube `q_nu` (side `1/delta`, centered on the lattice) holding `x`.
pub fn nu_index(x: f64, delta: f64, count: usize) -> usize {
    let side = 1.0 / delta;
    (((x + side / 2.0) / side).floor() as i64).rem_euclid(count as i64) as usize
}

/// `{P_theta f}` for every cap; packets `1_{q_nu} P_theta f` are cut on demand.
#[derive(Debug, Clone)]
pub struct InitialPackets {
    pub part: RealPartition,
    pub caps: Vec<Cap>,
    pub projections: Vec<Field>,
    /// Number of `q_nu` per axis on the periodic grid.
    pub nu_per_axis: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PacketRow {
    pub cap: Vec<usize>,
    pub nu: Vec<usize>,
    pub l2: f64,
    pub sup: f64,
}

impl InitialPackets {
    fn nu_of(&self, grid: &GridSpec, i: usize) -> Vec<usize> {
        grid.point(&grid.unravel(i))
            .iter()
            .map(|&x| nu_index(x, self.part.delta, self.nu_per_axis))
            .collect()
    }

    pub fn packet(&self, cap: usize, nu: &[usize]) -> Field {
        let src = &self.projections[cap];
        let mut out = Field::zeros(&src.grid);
        for i in 0..src.len() {
            if self.nu_of(&src.grid, i) == nu {
                out.data[i] = src.data[i];
            }
        }
        out
    }

    pub fn reconstruct(&self) -> Field {
        let mut out = Field::zeros(&self.projections[0].grid);
        for p in &self.projections {
            out.add_assign(p).expect("same grid");
        }
        out
    }

    /// One row per nonzero packet with `L^2` and sup norms.
    pub fn table(&self, tol: f64) -> Vec<PacketRow> {
        let grid = &self.projections[0].grid;
        let cell = grid.cell_volume();
        let mut rows = Vec::new();
        for (ci, p) in self.projections.iter().enumerate() {
            let mut acc: std::collections::BTreeMap<Vec<usize>, (f64, f64)> = Default::default();
            for i in 0..p.len() {
                let e = acc.entry(self.nu_of(grid, i)).or_insert((0.0, 0.0));
                let m = p.data[i].norm();
                e.0 += m * m * cell;
                e.1 = e.1.max(m);
            }
            for (nu, (l2sq, sup)) in acc {
                if sup > tol {
                    rows.push(PacketRow { cap: self.caps[ci].index.clone(), nu, l2: l2sq.sqrt(), sup });
                }
            }
        }
        rows
    }
}

pub fn initial_packets(f: &Field, part: &RealPartition) -> Result<InitialPackets> {
    check_spatial(&f.grid, part.d)?;
    let side = 1.0 / part.delta;
    let counts: Vec<f64> = f.grid.extents.iter().map(|l| l / side).collect();
    if counts.iter().any(|c| (c - c.round()).abs() > 1e-9 || *c < 1.0) {
        return Err(Error::InvalidParameter("grid extent must be a multiple of 1/delta".into()));
    }
    let caps = part.caps();
    let projections = caps
        .iter()
        .map(|c| project_spatial(f, part, &c.index))
        .collect::<Result<Vec<_>>>()?;
    Ok(InitialPackets { part: *part, caps, projections, nu_per_axis: counts[0].round() as usize })
}

/// A translate of the dual slab: width `1/delta` around the axis
/// `nu + 2 c (t - t0)` (periodic in space), for `t` in `[t0, t0 + height)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tube {
    pub cap: Cap,
    pub nu: Vec<f64>,
    pub t0: f64,
    pub width: f64,
    pub height: f64,
    pub period: f64,
}

impl Tube {
    pub fn axis(&self, t: f64) -> Vec<f64> {
        self.nu.iter().zip(self.cap.slope()).map(|(n, s)| n + s * (t - self.t0)).collect()
    }

    pub fn slope(&self) -> Vec<f64> {
        self.cap.slope()
    }

    /// Membership in the tube dilated by `dilation` in the short directions.
    pub fn contains(&self, x: &[f64], t: f64, dilation: f64) -> bool {
        if t < self.t0 || t >= self.t0 + self.height {
            return false;
        }
        let half = dilation * self.width / 2.0;
        self.axis(t).iter().zip(x).all(|(a, &xi)| {
            let d = (xi - a).rem_euclid(self.period);
            d.min(self.period - d) <= half
        })
    }
}

/// Tube `T_{theta, nu}` at scale `delta = R^{-1/2}`: width `R^{1/2}`, height `R`.
pub fn tube_of(cap: &Cap, nu: &[f64], r: f64, period: f64) -> Result<Tube> {
    if ((cap.delta * r.sqrt()) - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidParameter("cap scale must be R^{-1/2}".into()));
    }
    Ok(Tube { cap: cap.clone(), nu: nu.to_vec(), t0: 0.0, width: r.sqrt(), height: r, period })
}

/// Fraction of `int |u|^2` over the slab `[t0, t0+height)` lying in the dilated tube.
pub fn tube_mass_fraction(u: &SpacetimeField, tube: &Tube, dilation: f64) -> f64 {
    let mut inside = 0.0;
    let mut total = 0.0;
    for (ti, slice) in u.slices.iter().enumerate() {
        let t = u.time(ti);
        if t < tube.t0 || t >= tube.t0 + tube.height {
            continue;
        }
        for (i, z) in slice.iter().enumerate() {
            let m = z.norm_sqr();
            total += m;
            if tube.contains(&u.space.point(&u.space.unravel(i)), t, dilation) {
                inside += m;
            }
        }
    }
    if total == 0.0 {
        0.0
    } else {
        inside / total
    }
}

/// Wave packet decomposition of a spacetime field at scale `delta`.
#[derive(Debug, Clone)]
pub struct RealDecomposition {
    pub part: RealPartition,
    pub caps: Vec<Cap>,
    pub projections: Vec<SpacetimeField>,
    pub residual: SpacetimeField,
}

/// Tube of cap `cap` containing `(x, t)`: time block and spatial cell after
/// shearing back along the cap velocity.
pub fn real_tube_label(cap: &Cap, x: &[f64], t: f64, period: f64) -> (usize, Vec<usize>) {
    let width = 1.0 / cap.delta;
    let height = width * width;
    let block = (t / height).floor().max(0.0) as usize;
    let t0 = block as f64 * height;
    let count = (period / width).round() as usize;
    let cells = x
        .iter()
        .zip(cap.slope())
        .map(|(&xi, s)| nu_index(xi - s * (t - t0), cap.delta, count))
        .collect();
    (block, cells)
}

impl RealDecomposition {
    pub fn reconstruct(&self) -> SpacetimeField {
        let mut out = self.residual.clone();
        for p in &self.projections {
            out.add_assign(p);
        }
        out
    }

    /// `1_T P_tau F` for the tube with the given label.
    pub fn packet(&self, cap: usize, label: &(usize, Vec<usize>)) -> SpacetimeField {
        let src = &self.projections[cap];
        let mut out = src.zeros_like();
        let period = src.space.extents[0];
        for (ti, slice) in src.slices.iter().enumerate() {
            let t = src.time(ti);
            for (i, z) in slice.iter().enumerate() {
                let x = src.space.point(&src.space.unravel(i));
                if &real_tube_label(&self.caps[cap], &x, t, period) == label {
                    out.slices[ti][i] = *z;
                }
            }
        }
        out
    }
}

pub fn decompose_real(u: &SpacetimeField, part: &RealPartition) -> Result<RealDecomposition> {
    check_spatial(&u.space, part.d)?;
    let caps = part.caps();
    let symbols: Vec<Vec<f64>> = caps.iter().map(|c| part.symbol(&u.space, &c.index)).collect();
    let mut projections: Vec<SpacetimeField> = caps.iter().map(|_| u.zeros_like()).collect();
    let mut residual = u.zeros_like();
    for (ti, slice) in u.slices.iter().enumerate() {
        let f = Field { grid: u.space.clone(), data: slice.clone() };
        let coeffs = analyze(&f);
        let mut rest = coeffs.clone();
        for (ci, sym) in symbols.iter().enumerate() {
            let mut c = coeffs.clone();
            for ((z, r), &s) in c.data.iter_mut().zip(rest.data.iter_mut()).zip(sym) {
                *z *= s;
                *r -= *z;
            }
            projections[ci].slices[ti] = synthesize(c).data;
        }
        residual.slices[ti] = synthesize(rest).data;
    }
    Ok(RealDecomposition { part: *part, caps, projections, residual })
}

/// Energy of the part of `u` outside the dilated tube, relative to the total.
pub fn leakage(u: &SpacetimeField, tube: &Tube, dilation: f64) -> f64 {
    1.0 - tube_mass_fraction(u, tube, dilation)
}

/// A Gaussian-enveloped packet `e(c.x) exp(-pi |x - nu|^2 / w^2)`, periodized.
pub fn gaussian_packet(grid: &GridSpec, center_freq: &[f64], nu: &[f64], width: f64) -> Field {
    Field::from_fn(grid, |x| {
        let mut env = 1.0;
        let mut phase = 0.0;
        for a in 0..x.len() {
            let l = grid.extents[a];
            let d = (x[a] - nu[a] + l / 2.0).rem_euclid(l) - l / 2.0;
            env *= (-std::f64::consts::PI * (d / width).powi(2)).exp();
            phase += center_freq[a] * x[a];
        }
        crate::numeric::e(phase) * env
    })
}

pub fn zero_like(f: &Field) -> Field {
    Field { grid: f.grid.clone(), data: vec![Complex64::new(0.0, 0.0); f.len()] }
}
