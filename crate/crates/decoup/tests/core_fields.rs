use decoup::exp_sum::{eval_exp_sum, exact_q_grid, q_grid, ExpSumSpec};
use decoup::fft::{analyze, dft_forward, dft_inverse, synthesize};
use decoup::field::{lp_avg_norm, Field, Normalization, RealField, RegionMask};
use decoup::filter::{check_uncertainty, highpass_part, lowpass_convolve, lowpass_real, subgroup_elements};
use decoup::grid::{GridSpec, Mode};
use decoup::io::{read_field, write_field, write_field_csv};
use decoup::numeric::e;
use decoup::Error;
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_field(grid: &GridSpec, seed: u64) -> Field {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Field::from_fn(grid, |_| Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
}

fn rel_l2(a: &Field, b: &Field) -> f64 {
    a.sub(b).unwrap().l2_samples() / b.l2_samples()
}

#[test]
fn grid_validation() {
    assert!(GridSpec::new(vec![1.0], vec![0], Mode::Real).is_err());
    assert!(GridSpec::new(vec![0.0], vec![4], Mode::Real).is_err());
    assert!(GridSpec::new(vec![1.0, 1.0], vec![4], Mode::Real).is_err());
    assert!(GridSpec::new(vec![8.0], vec![6], Mode::Exact { p: 2 }).is_err());
    assert!(GridSpec::new(vec![8.0], vec![8], Mode::Exact { p: 4 }).is_err());
    let g = GridSpec::cube(16.0, 8, 2, Mode::Real).unwrap();
    assert_eq!(g.len(), 64);
    assert_eq!(g.spacing(0), 2.0);
    assert_eq!(g.cell_volume(), 4.0);
    assert_eq!(g.volume(), 256.0);
    for i in 0..g.len() {
        assert_eq!(g.ravel(&g.unravel(i)), i);
    }
    assert_eq!(g.point(&[3, 1]), vec![6.0, 2.0]);
    assert!(Field::new(g.clone(), vec![Complex64::new(0.0, 0.0); 3]).is_err());
}

/// Direct `O(M^2)` DFT sum as oracle on an 8x8 grid.
#[test]
fn dft_matches_direct_sum_and_roundtrips() {
    let g = GridSpec::cube(8.0, 8, 2, Mode::Real).unwrap();
    let f = random_field(&g, 1);
    let fwd = dft_forward(&f).unwrap();
    for k1 in 0..8 {
        for k2 in 0..8 {
            let mut s = Complex64::new(0.0, 0.0);
            for x1 in 0..8 {
                for x2 in 0..8 {
                    s += f.data[x1 * 8 + x2] * e(-((k1 * x1 + k2 * x2) as f64) / 8.0);
                }
            }
            s /= 8.0;
            assert!((s - fwd.data[k1 * 8 + k2]).norm() < 1e-12);
        }
    }
    let back = dft_inverse(&fwd).unwrap();
    assert!(rel_l2(&back, &f) <= 1e-12);
    assert!((fwd.l2_samples() - f.l2_samples()).abs() <= 1e-12 * f.l2_samples());
    let back = synthesize(analyze(&f));
    assert!(rel_l2(&back, &f) <= 1e-12);
}

#[test]
fn dft_of_constant_and_character() {
    let g = GridSpec::cube(16.0, 16, 2, Mode::exact2()).unwrap();
    let one = Field::from_fn(&g, |_| Complex64::new(1.0, 0.0));
    let c = dft_forward(&one).unwrap();
    assert!((c.data[0].re - 16.0).abs() < 1e-12);
    assert!(c.data[1..].iter().all(|z| z.norm() < 1e-12));

    let chi = Field::from_fn(&g, |x| e((3.0 * x[0] + 5.0 * x[1]) / 16.0));
    let c = dft_forward(&chi).unwrap();
    let hot: Vec<usize> = (0..g.len()).filter(|&i| c.data[i].norm() > 1e-9).collect();
    assert_eq!(hot, vec![g.ravel(&[3, 5])]);
}

#[test]
fn lp_avg_norm_examples() {
    let g = GridSpec::cube(4.0, 8, 2, Mode::Real).unwrap();
    let full = RegionMask::full(&g);
    let c = Field::from_fn(&g, |x| 0.7 * e(x[0] * 0.3));
    assert!((lp_avg_norm(&c, 6.0, &full, Normalization::FullDomain).unwrap() - 0.7).abs() < 1e-14);
    assert!((lp_avg_norm(&c, 2.5, &full, Normalization::FullDomain).unwrap() - 0.7).abs() < 1e-14);

    let grid = q_grid(2, 4, 4, Mode::Real).unwrap();
    let f = eval_exp_sum(&ExpSumSpec::all_ones(2), &grid).unwrap();
    let q = RegionMask::full(&grid);
    assert!((lp_avg_norm(&f, 2.0, &q, Normalization::FullDomain).unwrap() - 2f64.sqrt()).abs() < 1e-12);
    // Oracle: sextuples (n1..n6) in {1,2}^6 with n1+n2+n3 = n4+n5+n6 and the same for squares.
    let mut count = 0;
    for bits in 0u32..64 {
        let n: Vec<u32> = (0..6).map(|i| 1 + ((bits >> i) & 1)).collect();
        if n[0] + n[1] + n[2] == n[3] + n[4] + n[5]
            && n[0] * n[0] + n[1] * n[1] + n[2] * n[2] == n[3] * n[3] + n[4] * n[4] + n[5] * n[5]
        {
            count += 1;
        }
    }
    assert_eq!(count, 20);
    let l6 = lp_avg_norm(&f, 6.0, &q, Normalization::FullDomain).unwrap();
    assert!((l6.powi(6) - count as f64).abs() < 1e-10);
}

#[test]
fn lp_avg_norm_normalizations_and_errors() {
    let g = GridSpec::cube(8.0, 8, 2, Mode::Real).unwrap();
    let f = random_field(&g, 3);
    let bits: Vec<bool> = (0..g.len()).map(|i| i % 3 == 0).collect();
    let part = RegionMask::from_bits(&g, bits).unwrap();
    let full = RegionMask::full(&g);
    let a = lp_avg_norm(&f, 4.0, &part, Normalization::FullDomain).unwrap();
    let b = lp_avg_norm(&f, 4.0, &part, Normalization::Region).unwrap();
    assert!((b.powi(4) * part.fraction() - a.powi(4)).abs() < 1e-12);
    // Monotone in the region under full-domain normalization.
    assert!(a <= lp_avg_norm(&f, 4.0, &full, Normalization::FullDomain).unwrap());
    assert!(matches!(lp_avg_norm(&f, 2.0, &RegionMask::empty(&g), Normalization::FullDomain), Err(Error::EmptyRegion)));
    assert!(lp_avg_norm(&f, 0.5, &full, Normalization::FullDomain).is_err());
}

#[test]
fn region_mask_algebra() {
    let g = GridSpec::cube(4.0, 4, 2, Mode::Real).unwrap();
    let a = RegionMask::from_bits(&g, (0..16).map(|i| i < 5).collect()).unwrap();
    let b = a.complement();
    assert!(a.is_disjoint(&b));
    assert_eq!(a.union(&b).count(), 16);
    assert_eq!(a.intersect(&b).count(), 0);
    assert!(RegionMask::from_bits(&g, vec![true; 3]).is_err());
}

#[test]
fn real_lowpass_examples() {
    let g = GridSpec::cube(32.0, 32, 2, Mode::Real).unwrap();
    // Radial frequencies about 0.044 and 0.25 against the cutoff 0.1.
    let slow = Field::from_fn(&g, |x| e((x[0] + x[1]) / 32.0));
    let fast = Field::from_fn(&g, |x| e(8.0 * x[0] / 32.0));
    let lo = lowpass_convolve(&slow, 0.1).unwrap();
    assert!(lo.max_abs_diff(&slow).unwrap() < 1e-12);
    let killed = lowpass_convolve(&fast, 0.1).unwrap();
    assert!(killed.sup_norm() < 1e-12);
    let hi = highpass_part(&fast, 0.1).unwrap();
    assert!(hi.max_abs_diff(&fast).unwrap() < 1e-12);
    let c = Field::from_fn(&g, |_| Complex64::new(2.0, -1.0));
    assert!(highpass_part(&c, 0.1).unwrap().sup_norm() < 1e-12);

    let f = random_field(&g, 7);
    let mut sum = lowpass_convolve(&f, 0.15).unwrap();
    sum.add_assign(&highpass_part(&f, 0.15).unwrap()).unwrap();
    assert!(sum.max_abs_diff(&f).unwrap() < 1e-12);
    // Real inputs stay real and the symbol is a contraction.
    let r = RealField { grid: g.clone(), data: f.data.iter().map(|z| z.re).collect() };
    let lr = lowpass_real(&r, 0.15).unwrap();
    let e_in: f64 = r.data.iter().map(|v| v * v).sum();
    let e_out: f64 = lr.data.iter().map(|v| v * v).sum();
    assert!(e_out <= e_in);
    assert!(lowpass_convolve(&f, 0.0).is_err());
}

/// In exact mode the lowpass at `p^{-j}` averages over cosets of the dual subgroup.
#[test]
fn exact_lowpass_is_coset_average() {
    let n = 8;
    let grid = exact_q_grid(n, 2).unwrap();
    let m = grid.samples[0];
    let spec = ExpSumSpec::random_phase(n, 4);
    let part = decoup::exp_sum::DyadicPartition::new(n, 2, grid.mode).unwrap();
    let fi = decoup::exp_sum::partial_sum(&spec, &part, 1, &grid).unwrap();
    let g = fi.abs_sq().to_complex();
    let j = 2;
    let low = lowpass_convolve(&g, 0.25).unwrap();
    // The dual of the level-j ball is generated by (m / p^j, 0) and (0, m / p^j).
    let step = m / (1 << j);
    for idx in [0usize, 17, 200, 4000] {
        let x = grid.unravel(idx % grid.len());
        let mut acc = Complex64::new(0.0, 0.0);
        for a in 0..(1 << j) {
            for b in 0..(1 << j) {
                acc += g.data[grid.ravel(&[(x[0] + a * step) % m, (x[1] + b * step) % m])];
            }
        }
        acc /= (1 << (2 * j)) as f64;
        assert!((acc - low.data[grid.ravel(&x)]).norm() < 1e-10);
    }
    assert!(lowpass_convolve(&g, 0.3).is_err());
}

#[test]
fn exact_uncertainty_principle() {
    let g = GridSpec::cube(16.0, 16, 2, Mode::exact2()).unwrap();
    for (gens, offset) in [
        (vec![vec![4, 0], vec![0, 8]], vec![1, 3]),
        (vec![vec![1, 1]], vec![0, 5]),
        (vec![vec![2, 0], vec![0, 2]], vec![0, 0]),
    ] {
        let chk = check_uncertainty(&g, &gens, &offset).unwrap();
        assert!(chk.passes(1e-12), "{chk:?}");
        assert_eq!(chk.subgroup_size * chk.support_size, g.len());
    }
    assert_eq!(subgroup_elements(&g, &[vec![4, 0]]).len(), 4);
    let real = GridSpec::cube(16.0, 16, 2, Mode::Real).unwrap();
    assert!(check_uncertainty(&real, &[vec![1, 0]], &[0, 0]).is_err());
}

#[test]
fn field_io_roundtrip() {
    let g = GridSpec::new(vec![4.0, 16.0], vec![4, 16], Mode::exact2()).unwrap();
    let f = random_field(&g, 9);
    let mut buf = Vec::new();
    write_field(&mut buf, &f).unwrap();
    let back = read_field(buf.as_slice()).unwrap();
    assert_eq!(back, f);
    assert!(read_field(&buf[..buf.len() - 3]).is_err());
    assert!(read_field(&b"nope"[..]).is_err());

    let mut csv = Vec::new();
    write_field_csv(&mut csv, &f).unwrap();
    let text = String::from_utf8(csv).unwrap();
    assert_eq!(text.lines().count(), g.len() + 1);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn parseval_and_linearity(seed in any::<u64>(), m in 1usize..5, re in -2.0f64..2.0, im in -2.0f64..2.0) {
        let g = GridSpec::new(vec![1.0, 1.0], vec![1 << m, 3 << m], Mode::Real).unwrap();
        let f = random_field(&g, seed);
        let h = random_field(&g, seed ^ 0x55);
        let c = Complex64::new(re, im);
        let fwd = dft_forward(&f).unwrap();
        prop_assert!((fwd.l2_samples() - f.l2_samples()).abs() <= 1e-12 * f.l2_samples());
        let mut lin = f.scale(c);
        lin.add_assign(&h).unwrap();
        let mut want = fwd.scale(c);
        want.add_assign(&dft_forward(&h).unwrap()).unwrap();
        prop_assert!(dft_forward(&lin).unwrap().max_abs_diff(&want).unwrap() < 1e-12 * (1.0 + c.norm()) * 10.0);
    }
}
