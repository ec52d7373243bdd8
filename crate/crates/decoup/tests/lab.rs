use decoup::field::Field;
use decoup::lab::incidence::{cube_meets_tube, dyadic_class, tube_cubes};
use decoup::lab::rescale::project_to_beta;
use decoup::lab::select::refined_from_powers;
use decoup::lab::*;
use decoup::numeric::e;
use decoup::wavepacket::real::gaussian_packet;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn one() -> Complex64 {
    Complex64::new(1.0, 0.0)
}

fn random_packets(lab: &Lab, rng: &mut ChaCha8Rng, w: usize) -> Vec<PacketSpec> {
    let m = lab.cells_per_axis();
    let total = m.pow(lab.d as u32);
    let mut all: Vec<(usize, usize)> = (0..total).flat_map(|a| (0..total).map(move |b| (a, b))).collect();
    for i in 0..w {
        let j = rng.gen_range(i..all.len());
        all.swap(i, j);
    }
    let unflat = |mut f: usize| {
        let mut v = vec![0; lab.d];
        for a in (0..lab.d).rev() {
            v[a] = f % m;
            f /= m;
        }
        v
    };
    all[..w]
        .iter()
        .map(|&(c, n)| PacketSpec::new(unflat(c), unflat(n), rng.gen_range(1.0..2.0) * e(rng.gen::<f64>())))
        .collect()
}

#[test]
fn lab_geometry() {
    assert!(Lab::new(1, 32).is_err());
    assert!(Lab::new(1, 4).is_err());
    assert!(Lab::new(3, 64).is_err());
    for (d, r) in [(1, 16), (1, 256), (2, 64)] {
        let lab = Lab::new(d, r).unwrap();
        assert_eq!(lab.cube_count() as f64, (r as f64).powf((d as f64 + 1.0) / 2.0));
        assert_eq!(lab.p(), 2.0 * (d as f64 + 2.0) / d as f64);
        for q in 0..lab.cube_count() {
            let (slab, cells) = lab.cube_coords(q);
            assert_eq!(lab.cube_index(slab, &cells), q);
            assert_eq!(lab.slab_of(q), slab);
        }
    }
    let lab = Lab::new(1, 64).unwrap();
    assert_eq!(lab.cell_of(0.0), Some(0));
    assert_eq!(lab.cell_of(3.99), Some(0));
    assert_eq!(lab.cell_of(4.0), Some(1));
    assert_eq!(lab.cell_of(63.0), Some(0));
    let wide = lab.with_period_factor(4).unwrap();
    assert_eq!(wide.cell_of(59.9), Some(7));
    assert_eq!(wide.cell_of(60.0), None);
    assert_eq!(wide.cell_of(255.0), Some(0));
    assert!(lab.with_period_factor(0).is_err());
}

/// Per-cube integrals against direct spectral sums and an independent cube map.
#[test]
fn cube_powers_match_direct_sums() {
    let lab = Lab::new(1, 16).unwrap();
    let grid = lab.space_grid();
    let l = lab.period();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    // Frequencies n / L in [0, 1).
    let terms: Vec<(f64, Complex64)> =
        (0..l as usize).map(|n| (n as f64 / l, Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))).collect();
    let u = |x: f64, s: f64| -> Complex64 { terms.iter().map(|(xi, a)| a * e(x * xi - s * xi * xi)).sum() };
    let f = Field::from_fn(&grid, |x| u(x[0], 0.0));
    let cp = cube_powers(&lab, &f, 6.0).unwrap();
    let h = 4.0;
    let mut want = vec![0.0; lab.cube_count()];
    for i in 0..32 {
        let s = i as f64 * 0.5;
        for j in 0..32 {
            let x = j as f64 * 0.5;
            let cell = (((x + h / 2.0) / h).floor() as usize) % 4;
            let slab = (s / h).floor() as usize;
            want[slab * 4 + cell] += u(x, s).norm().powi(6) * 0.25;
        }
    }
    for (a, b) in cp.values.iter().zip(&want) {
        assert!((a - b).abs() <= 1e-9 * b.max(1.0), "{a} vs {b}");
    }
}

#[test]
fn constant_and_zero_fields() {
    for (d, r) in [(1, 64), (2, 16)] {
        let lab = Lab::new(d, r).unwrap();
        let grid = lab.space_grid();
        let c = Field::from_fn(&grid, |_| one());
        let cp = cube_powers(&lab, &c, lab.p()).unwrap();
        let sel = select_comparable_cubes(&cp, BandPolicy::MaxCount);
        assert_eq!(sel.count(), lab.cube_count());
        assert_eq!(sel.sigma, lab.cubes_per_slab());
        let vol = lab.h().powi(d as i32 + 1);
        assert!(cp.values.iter().all(|v| (v - vol).abs() < 1e-9 * vol));

        let z = Field::zeros(&grid);
        let rep = refined_strichartz_check(&lab, &z, BandPolicy::MaxCount).unwrap();
        assert!(rep.skip);
        assert_eq!(rep.sigma, 0);
        let sel = select_comparable_cubes(&cube_powers(&lab, &z, lab.p()).unwrap(), BandPolicy::MaxMass);
        assert!(sel.is_empty() && sel.count() == 0);
    }
}

#[test]
fn band_policies_and_slab_filter() {
    let lab = Lab::new(1, 16).unwrap();
    // Slab 0: norms in [1,2) for three cubes; slab 1: one cube; slab 2: three; slab 3: none.
    let mut values = vec![0.0; 16];
    for q in [0, 1, 2, 4, 8, 9, 10] {
        values[q] = 1.5f64.powi(6);
    }
    values[15] = 100f64.powi(6);
    let cp = CubePowers { lab, p: 6.0, values };
    let sel = select_comparable_cubes(&cp, BandPolicy::MaxCount);
    assert_eq!(sel.band, 1.0);
    assert_eq!(sel.sigma, 3);
    // Slab 1 has one cube, below sigma / 2, and is dropped.
    assert_eq!(sel.count(), 6);
    assert_eq!(sel.rho, 2);
    let mass = select_comparable_cubes(&cp, BandPolicy::MaxMass);
    assert_eq!(mass.band, 64.0);
    assert_eq!(mass.count(), 1);
    let fixed = select_comparable_cubes(&cp, BandPolicy::Fixed(1000.0));
    assert!(fixed.is_empty());
}

#[test]
fn single_packet_reduces_to_strichartz() {
    for r in [64usize, 256] {
        let lab = Lab::new(1, r).unwrap();
        let f = single_packet(&lab, &[r as f64 / 2.0]).unwrap();
        let rep = refined_strichartz_check(&lab, &f, BandPolicy::MaxCount).unwrap();
        // A moving packet straddles at most two cells per slab.
        assert!((1..=2).contains(&rep.sigma), "sigma = {}", rep.sigma);
        let want = (rep.sigma as f64).powf(-1.0 / 3.0) * rep.l2;
        assert!((rep.rhs - want).abs() < 1e-12 * rep.l2);
        let full = strichartz_lab_ratio(&lab, &f).unwrap();
        assert!((0.25..=4.0).contains(&rep.ratio), "R = {r}: {}", rep.ratio);
        assert!((0.25..=4.0).contains(&full), "R = {r}: {full}");
    }
}

#[test]
fn parallel_example_is_flat() {
    let lab = Lab::new(1, 64).unwrap();
    let f = parallel_example(&lab).unwrap();
    let rep = refined_strichartz_check(&lab, &f, BandPolicy::MaxCount).unwrap();
    assert_eq!(rep.sigma, 8);
    assert_eq!(rep.cubes, 64);
    // The packets sum to a near plane wave: every cube is comparable and the ratio is about 1.
    assert!((rep.ratio - 1.0).abs() < 0.05, "{}", rep.ratio);
}

#[test]
fn bush_example_concentrates_far_from_origin() {
    let r = 256;
    let lab = Lab::new(1, r).unwrap().with_period_factor(4).unwrap();
    let f = bush_example(&lab).unwrap();
    assert!((lab.l2(&f) - 1.0).abs() < 1e-12);
    let cp = cube_powers(&lab, &f, 6.0).unwrap();
    let sel = select_comparable_cubes(&cp, BandPolicy::MaxCount);
    assert!(sel.sigma * 2 >= lab.cells_per_axis(), "sigma = {}", sel.sigma);
    let first = (0..lab.cube_count()).filter(|&q| sel.selected[q]).map(|q| lab.slab_of(q)).min().unwrap();
    // The focused slabs near the origin carry the large cube norms and fall outside the band.
    assert!(first >= 2, "first selected slab {first}");
    let rep = refined_from_powers(&cp, 1.0, BandPolicy::MaxCount);
    assert!((0.125..=8.0).contains(&rep.ratio));
}

/// Exact incidence oracle for `d = 1` in integers: times scaled by `2(2i+1)`.
fn incidence_oracle(lab: &Lab, tube: &TubeId, q: usize) -> bool {
    let h = lab.h() as i64;
    let m = lab.cells_per_axis() as i64;
    let (slab, cells) = lab.cube_coords(q);
    let (i, nu) = (tube.cap[0] as i64, tube.nu[0] as i64);
    let v = 2 * i + 1;
    let (s0, s1) = (2 * v * slab as i64 * h, 2 * v * (slab as i64 + 1) * h);
    (-m..4 * m).filter(|j| j.rem_euclid(m) == cells[0] as i64).any(|j| {
        let (lo, hi) = ((2 * j - 1 - 2 * nu) * h * h, (2 * j + 1 - 2 * nu) * h * h);
        lo.max(s0) < hi.min(s1)
    })
}

#[test]
fn incidence_single_tube_and_bush() {
    let lab = Lab::new(1, 64).unwrap();
    let t = TubeId { cap: vec![2], nu: vec![3] };
    let table = incidence(&lab, &[t.clone()]).unwrap();
    assert!(table.consistent());
    assert!(table.m_of_cube.iter().all(|&m| m <= 1));
    let cubes = &table.cubes_of_tube[0];
    for b in 0..lab.slabs() {
        assert!(cubes.iter().any(|&q| lab.slab_of(q) == b));
    }
    assert!(cubes.iter().all(|&q| table.m_of_cube[q] == 1));

    for r in [64usize, 256] {
        let lab = Lab::new(1, r).unwrap();
        let m = lab.cells_per_axis();
        let bush: Vec<TubeId> = (0..m).map(|c| TubeId { cap: vec![c], nu: vec![0] }).collect();
        let table = incidence(&lab, &bush).unwrap();
        assert_eq!(table.m_of_cube[lab.cube_index(0, &[0])] as usize, m);
    }
    assert!(incidence(&lab, &[t.clone(), t]).is_err());
    assert!(incidence(&lab.with_period_factor(2).unwrap(), &[]).is_err());
}

#[test]
fn incidence_matches_integer_oracle_and_double_counts() {
    let lab = Lab::new(1, 256).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..5 {
        let w = rng.gen_range(1..60);
        let tubes: Vec<TubeId> = random_packets(&lab, &mut rng, w).iter().map(TubeId::from).collect();
        let table = incidence(&lab, &tubes).unwrap();
        assert!(table.consistent());
        assert_eq!(table.cube_side_total(), table.tube_side_total());
        for q in 0..lab.cube_count() {
            let want = tubes.iter().filter(|t| incidence_oracle(&lab, t, q)).count() as u32;
            assert_eq!(table.m_of_cube[q], want, "cube {q}");
        }
        let masks = table.y_m();
        let mut covered = vec![0; lab.cube_count()];
        for (m, mask) in &masks {
            for (q, &b) in mask.iter().enumerate() {
                if b {
                    covered[q] += 1;
                    assert_eq!(dyadic_class(table.m_of_cube[q] as u64), *m);
                }
            }
        }
        for q in 0..lab.cube_count() {
            assert_eq!(covered[q], (table.m_of_cube[q] > 0) as i32);
        }
    }
    let lab2 = Lab::new(2, 64).unwrap();
    let tubes: Vec<TubeId> = random_packets(&lab2, &mut rng, 40).iter().map(TubeId::from).collect();
    let table = incidence(&lab2, &tubes).unwrap();
    assert!(table.consistent());
    let t = &tubes[0];
    assert!(tube_cubes(&lab2, t).iter().all(|&q| cube_meets_tube(&lab2, q, t)));
}

#[test]
fn refined_decoupling_single_packet_and_bush() {
    let lab = Lab::new(1, 64).unwrap();
    let rd = refined_decoupling_ratio(&lab, &[PacketSpec::new(vec![1], vec![2], one())]).unwrap();
    assert_eq!(rd.rows.len(), 1);
    assert_eq!(rd.rows[0].m, 1);
    assert!(rd.rows[0].ratio <= 1.0 + 1e-12);

    let lab = Lab::new(1, 256).unwrap();
    let bush: Vec<PacketSpec> = (0..16).map(|c| PacketSpec::new(vec![c], vec![0], one())).collect();
    let rd = refined_decoupling_ratio(&lab, &bush).unwrap();
    let top = rd.rows.iter().find(|r| r.m == 16).unwrap();
    assert_eq!(top.cubes, 1);
    assert!((0.125..=8.0).contains(&top.ratio));
    // Regression value from the first verified run.
    assert!((top.ratio - 1.2506717305372357).abs() < 1e-9, "{}", top.ratio);
}

#[test]
fn pigeonhole_examples() {
    let lab = Lab::new(1, 64).unwrap();
    let single = [PacketSpec::new(vec![0], vec![4], one())];
    let rd = refined_decoupling_ratio(&lab, &single).unwrap();
    let ph = pigeonhole_sigma(&lab, &single, &rd.table, rd.powers.as_ref().unwrap(), BandPolicy::MaxCount).unwrap();
    assert_eq!((ph.w, ph.m), (1, 1));
    assert!((1..=2).contains(&ph.sigma));
    assert!(ph.holds && ph.counting_ok && !ph.skip);

    // Parallel packets: each tube stays in one cell per slab, so M = 1 everywhere.
    let m = lab.cells_per_axis();
    let parallel: Vec<PacketSpec> = (0..m).map(|n| PacketSpec::new(vec![0], vec![n], one())).collect();
    let rd = refined_decoupling_ratio(&lab, &parallel).unwrap();
    assert!(rd.table.m_of_cube.iter().all(|&c| c == 1));
    let ph = pigeonhole_sigma(&lab, &parallel, &rd.table, rd.powers.as_ref().unwrap(), BandPolicy::MaxCount).unwrap();
    assert_eq!((ph.sigma, ph.w, ph.m, ph.n), (m, m, 1, lab.cube_count()));
    assert!(ph.holds && ph.counting_ok);
}

#[test]
fn pigeonhole_and_chain_on_random_configurations() {
    let lab = Lab::new(1, 256).unwrap();
    let k = default_k(lab.r);
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for trial in 0..50 {
        let w = rng.gen_range(1..=256);
        let packets = random_packets(&lab, &mut rng, w);
        let tubes: Vec<TubeId> = packets.iter().map(TubeId::from).collect();
        let table = incidence(&lab, &tubes).unwrap();
        let f = packet_data(&lab, &packets).unwrap();
        let cp = cube_powers(&lab, &f, 6.0).unwrap();
        let ph = pigeonhole_sigma(&lab, &packets, &table, &cp, BandPolicy::MaxCount).unwrap();
        assert!(ph.skip || (ph.holds && ph.counting_ok), "trial {trial}: {ph:?}");
        let chain = chain_check(&table, k).unwrap();
        assert!(chain.holds(), "trial {trial}: {chain:?}");
    }
}

#[test]
fn strips_partition_the_cubes() {
    for (d, r) in [(1usize, 256usize), (2, 64)] {
        let lab = Lab::new(d, r).unwrap();
        for k in [1usize, 2, 4] {
            for flat in 0..k.pow(d as u32) {
                let beta: Vec<usize> = if d == 1 { vec![flat] } else { vec![flat / k, flat % k] };
                let part = strips(&lab, &beta, k).unwrap();
                assert!(part.is_partition(&lab));
                assert_eq!(part.strips.len() * k, lab.cube_count());
                assert!(strip_images(&lab, &part).holds());
            }
        }
    }
    let lab = Lab::new(1, 256).unwrap();
    let cubes = strips(&lab, &[0], 1).unwrap();
    assert!(cubes.strips.iter().enumerate().all(|(i, s)| s == &vec![i]));
    let part = strips(&lab, &[0], 4).unwrap();
    let through_origin = &part.strips[part.strip_of_cube[0]];
    let want: Vec<usize> = [(0, 0), (1, 0), (2, 1), (3, 1)].iter().map(|&(b, c)| lab.cube_index(b, &[c])).collect();
    assert_eq!(through_origin, &want);
    assert!(strips(&lab, &[0], 3).is_err());
    assert!(strips(&lab, &[0], 32).is_err());
    assert!(strips(&lab, &[4], 4).is_err());
}

#[test]
fn default_k_values() {
    assert_eq!(default_k(64.0), 2);
    assert_eq!(default_k(256.0), 4);
    assert_eq!(default_k(1024.0), 4);
    assert_eq!(default_k(4096.0), 8);
}

#[test]
fn rescale_identity_and_single_packet() {
    let lab = Lab::new(1, 64).unwrap();
    let f = packet_data(&lab, &[PacketSpec::new(vec![3], vec![2], one())]).unwrap();
    let fb = project_to_beta(&lab, &f, &[0], 1).unwrap();
    let res = parabolic_rescale(&lab, &fb, &[0], 1).unwrap();
    assert!(res.g.max_abs_diff(&fb).unwrap_or(f64::INFINITY) < 1e-12 || {
        // Same samples on a grid of equal extent.
        res.g.data.iter().zip(&fb.data).all(|(a, b)| (a - b).norm() < 1e-12)
    });
    assert_eq!(res.jacobian, 1.0);

    let lab = Lab::new(1, 256).unwrap();
    let k = 4;
    let (i, nu) = (9usize, 5usize);
    let beta = i / (lab.cells_per_axis() / k);
    let f = packet_data(&lab, &[PacketSpec::new(vec![i], vec![nu], one())]).unwrap();
    let fb = project_to_beta(&lab, &f, &[beta], k).unwrap();
    let res = parabolic_rescale(&lab, &fb, &[beta], k).unwrap();
    assert_eq!(res.r1, 16.0);
    assert_eq!(res.jacobian, 64.0);
    // Expected: a packet at scale R_1^{-1/2} with cap i mod 4, center nu h / K, width R_1^{1/2}.
    let h1 = res.r1.sqrt();
    let i1 = i % (lab.cells_per_axis() / k);
    let expect = gaussian_packet(&res.g.grid, &[(i1 as f64 + 0.5) / h1], &[nu as f64 * lab.h() / k as f64], h1);
    let mut c = decoup::fft::analyze(&expect);
    for (n, z) in c.data.iter_mut().enumerate() {
        let eta = decoup::wavepacket::real::band_freq(&res.g.grid, 0, n);
        if !(0.0..1.0).contains(&eta) {
            *z = Complex64::new(0.0, 0.0);
        }
    }
    let expect = decoup::fft::synthesize(c);
    let err = res.g.data.iter().zip(&expect.data).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
    assert!(err < 1e-10, "{err}");
}

#[test]
fn rescale_preserves_moduli_and_norms() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for (d, r, k) in [(1usize, 256usize, 4usize), (1, 64, 2), (2, 64, 2)] {
        let lab = Lab::new(d, r).unwrap();
        let packets = random_packets(&lab, &mut rng, 12);
        let f = packet_data(&lab, &packets).unwrap();
        let beta = vec![k - 1; d];
        let fb = project_to_beta(&lab, &f, &beta, k).unwrap();
        let res = parabolic_rescale(&lab, &fb, &beta, k).unwrap();
        assert_eq!(res.jacobian, (k as f64).powi(d as i32 + 2));
        let chk = verify_rescale(&lab, &fb, &res, 16, 1);
        assert!(chk.pointwise_max_rel < 1e-10, "{chk:?}");
        assert!(chk.lp_max_rel < 1e-10, "{chk:?}");
    }
    let lab = Lab::new(1, 64).unwrap();
    let f = parallel_example(&lab).unwrap();
    assert!(parabolic_rescale(&lab, &f, &[0], 2).is_err());
}
