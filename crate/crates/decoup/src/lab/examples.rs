use super::Lab;
use crate::error::{Error, Result};
use crate::fft::synthesize;
use crate::field::Field;
use crate::wavepacket::real::{band_freq, gaussian_packet};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// One packet `(theta, nu)` at scale `R^{-1/2}` with a complex amplitude.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PacketSpec {
    /// Cap index in `P_{R^{-1/2}}`, per axis.
    pub cap: Vec<usize>,
    /// Lattice point index: the packet is centered at `nu h`.
    pub nu: Vec<usize>,
    pub amp: Complex64,
}

impl PacketSpec {
    pub fn new(cap: Vec<usize>, nu: Vec<usize>, amp: Complex64) -> Self {
        Self { cap, nu, amp }
    }
}

/// Frequency center of cap `i` at scale `R^{-1/2}`.
pub fn cap_center(lab: &Lab, cap: &[usize]) -> Vec<f64> {
    let h = lab.h();
    cap.iter().map(|&i| (i as f64 + 0.5) / h).collect()
}

fn check_packet(lab: &Lab, p: &PacketSpec) -> Result<()> {
    let m = lab.cells_per_axis();
    if p.cap.len() != lab.d || p.nu.len() != lab.d || p.cap.iter().chain(&p.nu).any(|&i| i >= m) {
        return Err(Error::InvalidParameter(format!("packet {:?}/{:?} outside the R = {} lattice", p.cap, p.nu, lab.r)));
    }
    Ok(())
}

/// `sum amp e(c_theta . x) exp(-pi |x - nu h|^2 / R)`, Gaussian packets of
/// width `R^{1/2}`, periodized on the lab torus.
pub fn packet_data(lab: &Lab, packets: &[PacketSpec]) -> Result<Field> {
    let grid = lab.space_grid();
    let h = lab.h();
    let mut f = Field::zeros(&grid);
    for p in packets {
        check_packet(lab, p)?;
        let nu: Vec<f64> = p.nu.iter().map(|&v| v as f64 * h).collect();
        let g = gaussian_packet(&grid, &cap_center(lab, &p.cap), &nu, h);
        for (a, b) in f.data.iter_mut().zip(&g.data) {
            *a += p.amp * b;
        }
    }
    Ok(f)
}

/// `R^{d/2}` packets of equal amplitude in the first cap, one per lattice point.
pub fn parallel_example(lab: &Lab) -> Result<Field> {
    let m = lab.cells_per_axis();
    let packets: Vec<PacketSpec> = (0..lab.cubes_per_slab())
        .map(|flat| {
            let mut nu = vec![0; lab.d];
            let mut rest = flat;
            for a in (0..lab.d).rev() {
                nu[a] = rest % m;
                rest /= m;
            }
            PacketSpec::new(vec![0; lab.d], nu, Complex64::new(1.0, 0.0))
        })
        .collect();
    packet_data(lab, &packets)
}

/// The discretized `f = 1_{[0,1]^d}` hat: every bin in `[0, 1)^d` carries
/// `L^{-d}`, so `||f||_2 = 1` on the torus of extent `L`.
pub fn bush_example(lab: &Lab) -> Result<Field> {
    let grid = lab.space_grid();
    let l = lab.period();
    let w = l.powi(-(lab.d as i32));
    let mut c = Field::zeros(&grid);
    for (i, z) in c.data.iter_mut().enumerate() {
        let k = grid.unravel(i);
        if k.iter().enumerate().all(|(a, &ka)| {
            let xi = band_freq(&grid, a, ka);
            (0.0..1.0).contains(&xi)
        }) {
            *z = Complex64::new(w, 0.0);
        }
    }
    Ok(synthesize(c))
}

/// One packet of width `R^{1/2}` in the first cap, centered at `x0`.
pub fn single_packet(lab: &Lab, x0: &[f64]) -> Result<Field> {
    if x0.len() != lab.d {
        return Err(Error::InvalidParameter("center has the wrong dimension".into()));
    }
    let grid = lab.space_grid();
    Ok(gaussian_packet(&grid, &cap_center(lab, &vec![0; lab.d]), x0, lab.h()))
}
