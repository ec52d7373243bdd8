use super::prune::{cap_index_map, project_cap, NO_CAP};
use crate::error::{Error, Result};
use crate::exp_sum::{check_q_grid, freq_bin, DyadicPartition, ExpSumSpec};
use crate::fft::{analyze, synthesize};
use crate::field::{Field, RealField};
use crate::grid::GridSpec;
use num_complex::Complex64;

/// A level of the pipeline: untouched coefficients, or a pruned field.
#[derive(Debug, Clone)]
pub enum LevelField {
    Sparse(ExpSumSpec),
    Dense(Field),
}

impl LevelField {
    pub fn to_field(&self, grid: &GridSpec) -> Result<Field> {
        match self {
            LevelField::Sparse(spec) => crate::exp_sum::eval_exp_sum(spec, grid),
            LevelField::Dense(f) => {
                if !f.grid.same_shape(grid) {
                    return Err(Error::Shape("level field on a different grid".into()));
                }
                Ok(f.clone())
            }
        }
    }
}

/// `g(x) = sum_I |f_I(x)|^2` over the intervals of `part`.
///
/// Sparse input: the spectrum of each `|f_I|^2` is accumulated from the pairs
/// `(n - m, n^2 - m^2)` and synthesized once. Dense input: each cap is
/// projected and squared; bins outside every cap form one extra term.
pub fn square_function(f: &LevelField, grid: &GridSpec, part: &DyadicPartition) -> Result<RealField> {
    check_q_grid(part.n, grid)?;
    match f {
        LevelField::Sparse(spec) => {
            if spec.n() != part.n {
                return Err(Error::Shape(format!("spec has N = {}, partition N = {}", spec.n(), part.n)));
            }
            Ok(sparse_square(spec, grid, part))
        }
        LevelField::Dense(field) => dense_square(field, part),
    }
}

fn sparse_square(spec: &ExpSumSpec, grid: &GridSpec, part: &DyadicPartition) -> RealField {
    let (a, b) = (grid.samples[0], grid.samples[1]);
    let mut coeffs = Field::zeros(grid);
    for i in 0..part.count() {
        let members: Vec<(usize, usize, Complex64)> = part
            .members(i)
            .into_iter()
            .filter(|&m| spec.a(m) != Complex64::new(0.0, 0.0))
            .map(|m| {
                let [k1, k2] = freq_bin(grid, m);
                (k1, k2, spec.a(m))
            })
            .collect();
        for &(n1, n2, an) in &members {
            for &(m1, m2, am) in &members {
                let d1 = (n1 + a - m1) % a;
                let d2 = (n2 + b - m2) % b;
                coeffs.data[d1 * b + d2] += an * am.conj();
            }
        }
    }
    let g = synthesize(coeffs);
    RealField { grid: grid.clone(), data: g.data.iter().map(|z| z.re.max(0.0)).collect() }
}

fn dense_square(field: &Field, part: &DyadicPartition) -> Result<RealField> {
    let grid = &field.grid;
    let map = cap_index_map(grid, part)?;
    let coeffs = analyze(field);
    let mut out = RealField::zeros(grid);
    let zero = Complex64::new(0.0, 0.0);
    let mut present = vec![false; part.count()];
    let mut residual = false;
    for (i, z) in coeffs.data.iter().enumerate() {
        if *z != zero {
            match map[i] {
                NO_CAP => residual = true,
                c => present[c as usize] = true,
            }
        }
    }
    let indices = present
        .iter()
        .enumerate()
        .filter(|(_, &p)| p)
        .map(|(i, _)| i as u32)
        .chain(residual.then_some(NO_CAP));
    for idx in indices {
        let fi = project_cap(&coeffs, &map, idx);
        for (o, z) in out.data.iter_mut().zip(&fi.data) {
            *o += z.norm_sqr();
        }
    }
    Ok(out)
}
