//! Field serialization: a small binary container and a CSV dump.
//!
//! Layout (little endian): `b"DCPF"`, `u32` version, `u32` dims, `u8` mode
//! (0 real, 1 exact) and `u64` prime, then per axis `u64` samples and `f64`
//! extent, then interleaved `f64` re/im in row-major order.

use crate::error::{Error, Result};
use crate::field::Field;
use crate::grid::{GridSpec, Mode};
use num_complex::Complex64;
use std::io::{Read, Write};

const MAGIC: &[u8; 4] = b"DCPF";
const VERSION: u32 = 1;
pub const CSV_MAX_POINTS: usize = 1 << 16;

pub fn write_field<W: Write>(mut w: W, field: &Field) -> Result<()> {
    let g = &field.grid;
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(g.dims() as u32).to_le_bytes())?;
    let (tag, p) = match g.mode {
        Mode::Real => (0u8, 0u64),
        Mode::Exact { p } => (1u8, p),
    };
    w.write_all(&[tag])?;
    w.write_all(&p.to_le_bytes())?;
    for a in 0..g.dims() {
        w.write_all(&(g.samples[a] as u64).to_le_bytes())?;
        w.write_all(&g.extents[a].to_le_bytes())?;
    }
    let mut buf = Vec::with_capacity(16 * field.len());
    for z in &field.data {
        buf.extend_from_slice(&z.re.to_le_bytes());
        buf.extend_from_slice(&z.im.to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

fn take<const K: usize, R: Read>(r: &mut R) -> Result<[u8; K]> {
    let mut b = [0u8; K];
    r.read_exact(&mut b)?;
    Ok(b)
}

pub fn read_field<R: Read>(mut r: R) -> Result<Field> {
    if &take::<4, _>(&mut r)? != MAGIC {
        return Err(Error::Io("bad magic".into()));
    }
    let version = u32::from_le_bytes(take(&mut r)?);
    if version != VERSION {
        return Err(Error::Io(format!("unsupported version {version}")));
    }
    let dims = u32::from_le_bytes(take(&mut r)?) as usize;
    if dims == 0 || dims > 8 {
        return Err(Error::Io(format!("bad dims {dims}")));
    }
    let [tag] = take::<1, _>(&mut r)?;
    let p = u64::from_le_bytes(take(&mut r)?);
    let mode = match tag {
        0 => Mode::Real,
        1 => Mode::Exact { p },
        t => return Err(Error::Io(format!("bad mode tag {t}"))),
    };
    let mut samples = Vec::with_capacity(dims);
    let mut extents = Vec::with_capacity(dims);
    for _ in 0..dims {
        samples.push(u64::from_le_bytes(take(&mut r)?) as usize);
        extents.push(f64::from_le_bytes(take(&mut r)?));
    }
    let grid = GridSpec::new(extents, samples, mode)?;
    let mut raw = vec![0u8; 16 * grid.len()];
    r.read_exact(&mut raw)?;
    let data = raw
        .chunks_exact(16)
        .map(|c| {
            Complex64::new(
                f64::from_le_bytes(c[..8].try_into().unwrap()),
                f64::from_le_bytes(c[8..].try_into().unwrap()),
            )
        })
        .collect();
    Field::new(grid, data)
}

/// One row per grid point: coordinates, re, im, abs.
pub fn write_field_csv<W: Write>(mut w: W, field: &Field) -> Result<()> {
    let g = &field.grid;
    if g.len() > CSV_MAX_POINTS {
        return Err(Error::Infeasible(format!(
            "CSV export is limited to {CSV_MAX_POINTS} points, grid has {}",
            g.len()
        )));
    }
    let head: Vec<String> = (0..g.dims()).map(|a| format!("x{a}")).collect();
    writeln!(w, "{},re,im,abs", head.join(","))?;
    for (i, z) in field.data.iter().enumerate() {
        let pt = g.point(&g.unravel(i));
        let coords: Vec<String> = pt.iter().map(|c| format!("{c}")).collect();
        writeln!(w, "{},{:e},{:e},{:e}", coords.join(","), z.re, z.im, z.norm())?;
    }
    Ok(())
}
