use decoup::exp_sum::{eval_at, eval_exp_sum, exact_q_grid, q_grid, DyadicPartition, ExpSumSpec};
use decoup::field::RealField;
use decoup::grid::Mode;
use decoup::multiscale::lemmas::{verify_high_lemma, verify_high_lemma_variant, verify_low_lemma, LemmaBackend};
use decoup::multiscale::level_set::{bilinear_profile, dyadic_alphas, level_set};
use decoup::multiscale::prune::{max_cap_l1, prune};
use decoup::multiscale::spectral::{random_cap_filling, SparseSpectrum};
use decoup::multiscale::square::{square_function, LevelField};
use decoup::multiscale::{build_ladder, classify, highlow_pipeline, PipelineParams, PruningParams};
use decoup::Complex64;

const P2: Mode = Mode::Exact { p: 2 };

#[test]
fn ladder_n16_c1() {
    let l = build_ladder(16, 1.0, Mode::Real).unwrap();
    assert_eq!(l.deltas(), vec![1.0, 0.25, 0.125, 0.0625]);
    assert_eq!(l.j_max(), 3);
}

#[test]
fn ladder_rejects_degenerate_input() {
    assert!(build_ladder(16, 0.0, Mode::Real).is_err());
    assert!(build_ladder(16, -1.0, Mode::Real).is_err());
    assert!(build_ladder(8, 1.0, Mode::Real).is_err());
    assert!(build_ladder(48, 1.0, Mode::Real).is_err());
}

#[test]
fn ladder_invariants() {
    for &n in &[16usize, 64, 256, 1024, 4096] {
        for &c in &[0.5, 1.0, 2.0, 3.0] {
            let l = build_ladder(n, c, P2).unwrap();
            let d = l.deltas();
            let ln = (n as f64).ln();
            assert_eq!(d[0], 1.0);
            let last = *d.last().unwrap();
            assert!(last >= 1.0 / n as f64 && last <= 2.0 / n as f64);
            for w in d.windows(2) {
                assert!(w[0] > w[1]);
                assert!(w[0] / w[1] <= 2.0 * ln.powf(c) + 1e-9, "n={n} c={c} {d:?}");
            }
            assert!((1.0 + l.epsilon()).powi(l.j_max() as i32) <= std::f64::consts::E.powi(2));
            for &x in &d {
                assert_eq!(x, 2f64.powi(x.log2().round() as i32));
            }
        }
    }
    let l = build_ladder(256, 1.0, Mode::Real).unwrap();
    assert_eq!(l.levels, vec![0, 3, 5, 8]);
    assert_eq!(l.w(0), 1.0 / 65536.0);
    assert_eq!(l.w(l.j_max()), 1.0 / 256.0);
}

#[test]
fn pruning_params_lambda() {
    let p = PruningParams::new(16, 2.0, 2.0, 16.0, 4.0).unwrap();
    let ln = 16f64.ln();
    assert!((p.lambda - ln * ln * 4.0).abs() < 1e-12);
    assert!((p.epsilon - 1.0 / ln).abs() < 1e-15);
    assert!(PruningParams::new(16, 2.0, 2.0, 16.0, 0.0).is_err());
}

#[test]
fn square_function_peak_all_ones() {
    for &n in &[16usize, 64] {
        let grid = q_grid(n, 1, 1, Mode::Real).unwrap();
        let spec = ExpSumSpec::all_ones(n);
        for &delta in &[0.25, 1.0 / 16.0] {
            let part = DyadicPartition::from_delta(n, delta, Mode::Real).unwrap();
            let g = square_function(&LevelField::Sparse(spec.clone()), &grid, &part).unwrap();
            let peak = (n * n) as f64 * delta;
            assert!((g.data[0] - peak).abs() <= 1e-9 * peak, "n={n} delta={delta} g={}", g.data[0]);
            assert!(g.max() <= peak * (1.0 + 1e-12));
        }
    }
}

#[test]
fn square_function_finest_scale_is_constant() {
    let n = 16;
    let spec = ExpSumSpec::random_gaussian(n, 3);
    let grid = q_grid(n, 2, 2, Mode::Real).unwrap();
    let part = DyadicPartition::new(n, 4, Mode::Real).unwrap();
    let g = square_function(&LevelField::Sparse(spec.clone()), &grid, &part).unwrap();
    let want = spec.l2().powi(2);
    assert!(g.data.iter().all(|v| (v - want).abs() < 1e-10 * want));
}

#[test]
fn square_function_zero_field() {
    let n = 16;
    let spec = ExpSumSpec::new(vec![Complex64::new(0.0, 0.0); n]).unwrap();
    let grid = q_grid(n, 1, 1, Mode::Real).unwrap();
    let part = DyadicPartition::new(n, 2, Mode::Real).unwrap();
    let g = square_function(&LevelField::Sparse(spec), &grid, &part).unwrap();
    assert!(g.data.iter().all(|&v| v == 0.0));
}

#[test]
fn sparse_and_dense_square_functions_agree() {
    let n = 16;
    for mode in [Mode::Real, P2] {
        let grid = q_grid(n, 2, 2, mode).unwrap();
        let spec = ExpSumSpec::random_phase(n, 11);
        let f = eval_exp_sum(&spec, &grid).unwrap();
        for level in 0..=4 {
            let part = DyadicPartition::new(n, level, mode).unwrap();
            let a = square_function(&LevelField::Sparse(spec.clone()), &grid, &part).unwrap();
            let b = square_function(&LevelField::Dense(f.clone()), &grid, &part).unwrap();
            let diff = a.data.iter().zip(&b.data).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
            assert!(diff < 1e-9 * n as f64, "mode {mode:?} level {level}: {diff}");
        }
    }
}

#[test]
fn classify_identical_levels_is_all_low() {
    let grid = q_grid(4, 1, 1, Mode::Real).unwrap();
    let g = RealField::new(grid.clone(), (0..grid.len()).map(|i| i as f64).collect()).unwrap();
    let dec = classify(&[g.clone(), g.clone(), g], 0.1).unwrap();
    assert_eq!(dec.low_mask().count(), grid.len());
}

#[test]
fn classify_partition_and_spike() {
    let n = 16;
    let grid = q_grid(n, 1, 1, Mode::Real).unwrap();
    let spec = ExpSumSpec::all_ones(n);
    let ladder = build_ladder(n, 1.0, Mode::Real).unwrap();
    let stack: Vec<RealField> = ladder
        .levels
        .iter()
        .map(|&l| {
            let part = DyadicPartition::new(n, l, Mode::Real).unwrap();
            square_function(&LevelField::Sparse(spec.clone()), &grid, &part).unwrap()
        })
        .collect();
    let eps = ladder.epsilon();
    let dec = classify(&stack, eps).unwrap();
    let masks = dec.omega_masks();
    let mut union = dec.low_mask();
    for m in &masks {
        assert!(m.is_disjoint(&union));
        union = union.union(m);
    }
    assert_eq!(union.count(), grid.len());
    // The spike at the origin: the first level from the top where the
    // inequality holds, evaluated directly.
    let j_max = ladder.j_max();
    let expected = (0..j_max).rev().find(|&j| stack[j].data[0] >= (1.0 + eps) * stack[j + 1].data[0]);
    let got = match dec.id_at(0) {
        decoup::multiscale::classify::RegionId::Omega(j) => Some(j),
        decoup::multiscale::classify::RegionId::Low => None,
    };
    assert_eq!(got, expected);
    assert!(got.unwrap() >= 1);
    for i in 0..grid.len() {
        if dec.region[i] as usize == j_max {
            assert!(stack[0].data[i] <= (1.0 + eps).powi(j_max as i32) * stack[j_max].data[i] * (1.0 + 1e-12) + 1e-12);
        }
    }
    let all_low = classify(&stack, 1e300).unwrap();
    assert_eq!(all_low.low_mask().count(), grid.len());
}

#[test]
fn level_set_basics() {
    let n = 16;
    let grid = q_grid(n, 1, 1, Mode::Real).unwrap();
    let spec = ExpSumSpec::all_ones(n);
    let part = DyadicPartition::new(n, 2, Mode::Real).unwrap();
    let prof = bilinear_profile(&spec, &part, &grid).unwrap();
    let sup = eval_exp_sum(&spec, &grid).unwrap().sup_norm();
    assert_eq!(level_set(&prof, n, sup * 1.01, 2.0).count(), 0);

    // At the origin every |f_I| equals N delta_1 = 4.
    let alpha = 4.0;
    let mask = level_set(&prof, n, alpha, 2.0);
    assert!(mask.bits[0]);
    // Pointwise oracle from direct evaluation of each interval's sum.
    let cap = 16f64.ln().powi(2) * alpha;
    for &i in &[0usize, 1, 2, grid.len() - 1, 17, 300] {
        let m = grid.unravel(i);
        let x = grid.point(&m);
        let vals: Vec<f64> = (0..part.count())
            .map(|k| eval_at(&decoup::exp_sum::partial_spec(&spec, &part, k), [x[0], x[1]]).norm())
            .collect();
        let mut s = vals.clone();
        s.sort_by(|a, b| b.partial_cmp(a).unwrap());
        let b = (s[0] * s[1]).sqrt();
        let six: f64 = vals.iter().map(|v| v.powi(6)).sum::<f64>().powf(1.0 / 6.0);
        let want = b >= alpha && b < 2.0 * alpha && six <= cap;
        let near_edge = (b - alpha).abs() < 1e-9 || (b - 2.0 * alpha).abs() < 1e-9;
        if !near_edge {
            assert_eq!(mask.bits[i], want, "point {i}");
        }
    }
    let one = ExpSumSpec::all_ones(1);
    let g1 = q_grid(1, 1, 1, Mode::Real).unwrap();
    let p1 = DyadicPartition::new(1, 0, Mode::Real).unwrap();
    let prof1 = bilinear_profile(&one, &p1, &g1).unwrap();
    assert_eq!(level_set(&prof1, 1, 0.5, 2.0).count(), 0);
}

#[test]
fn dyadic_alpha_sweep() {
    assert_eq!(dyadic_alphas(1.0, 16.0), vec![1.0, 2.0, 4.0, 8.0, 16.0]);
    assert_eq!(dyadic_alphas(0.3, 1.0), vec![0.25, 0.5, 1.0]);
    assert!(dyadic_alphas(0.0, 1.0).is_empty());
}

#[test]
fn prune_trivial_cases() {
    let n = 16;
    for mode in [P2, Mode::Real] {
        let grid = q_grid(n, 2, 2, mode).unwrap();
        let spec = ExpSumSpec::random_gaussian(n, 5);
        let f = eval_exp_sum(&spec, &grid).unwrap();
        let part = DyadicPartition::new(n, 2, mode).unwrap();
        let id = prune(&f, &part, f64::INFINITY).unwrap();
        assert!(id.field.max_abs_diff(&f).unwrap() < 1e-12);
        assert_eq!(id.removed, 0);
        let z = prune(&f, &part, 0.0).unwrap();
        assert!(z.field.sup_norm() < 1e-9);
        if mode.is_exact() {
            let mass = f.l2_samples().powi(2) / f.len() as f64;
            assert!((z.removed_mass - mass).abs() < 1e-9 * mass, "{} vs {mass}", z.removed_mass);
        }
    }
}

#[test]
fn prune_single_packet_above_threshold() {
    let n = 16;
    let grid = exact_q_grid(n, 2).unwrap();
    let mut coeffs = vec![Complex64::new(0.0, 0.0); n];
    coeffs[4] = Complex64::new(2.0, 0.0);
    let spec = ExpSumSpec::new(coeffs).unwrap();
    let f = eval_exp_sum(&spec, &grid).unwrap();
    let part = DyadicPartition::new(n, 4, P2).unwrap();
    let r = prune(&f, &part, 1.0).unwrap();
    assert!(r.field.sup_norm() < 1e-12);
    assert!(r.removed > 0);
}

#[test]
fn pruned_packets_respect_lambda() {
    let n = 16;
    let grid = exact_q_grid(n, 2).unwrap();
    let spec = ExpSumSpec::random_gaussian(n, 8);
    let f = eval_exp_sum(&spec, &grid).unwrap();
    for level in [1, 2, 3] {
        let part = DyadicPartition::new(n, level, P2).unwrap();
        let lam = 0.5 * max_cap_l1(&spec, &part);
        let r = prune(&f, &part, lam).unwrap();
        assert!(r.max_kept_sup <= lam);
        assert!(r.removed > 0 && r.kept > 0);
        assert!(r.field.l2_samples() <= f.l2_samples() * (1.0 + 1e-12));
    }
}

#[test]
fn low_lemma_exact_and_real() {
    let n = 16;
    let exact = q_grid(n, 2, 2, P2).unwrap();
    let real = q_grid(n, 2, 2, Mode::Real).unwrap();
    for seed in 0..5 {
        let spec = ExpSumSpec::random_phase(n, seed);
        for level in 1..=3 {
            let part = DyadicPartition::new(n, level, P2).unwrap();
            let c = verify_low_lemma(&spec, &part, &exact).unwrap();
            assert!(c.relative() <= 1e-10, "seed {seed} level {level}: {}", c.relative());
            let part = DyadicPartition::new(n, level, Mode::Real).unwrap();
            let c = verify_low_lemma(&spec, &part, &real).unwrap();
            assert!(c.relative() <= 1.0, "real seed {seed}: {}", c.relative());
        }
    }
    let single = DyadicPartition::new(n, 0, P2).unwrap();
    let c = verify_low_lemma(&ExpSumSpec::random_phase(n, 1), &single, &exact).unwrap();
    assert!(c.max_discrepancy < 1e-10 * c.sup_f_sq);
}

#[test]
fn high_lemma_cases() {
    let n = 16;
    let grid = q_grid(n, 2, 2, P2).unwrap();
    let zero = ExpSumSpec::new(vec![Complex64::new(0.0, 0.0); n]).unwrap();
    let coarse = DyadicPartition::new(n, 1, P2).unwrap();
    let z = verify_high_lemma(&zero, &coarse, 0.125, &grid, LemmaBackend::Spectral).unwrap();
    assert_eq!((z.lhs, z.rhs, z.holds), (0.0, 0.0, true));

    let spec = ExpSumSpec::random_gaussian(n, 2);
    let one = DyadicPartition::new(n, 0, P2).unwrap();
    let s = verify_high_lemma(&spec, &one, 0.25, &grid, LemmaBackend::Spectral).unwrap();
    assert!((s.lhs - s.rhs / s.ratio).abs() <= 1e-12 * s.lhs.max(1.0));
    assert!(s.holds);

    for seed in 0..4 {
        let spec = ExpSumSpec::random_phase(n, seed);
        for (coarse, cut) in [(0u32, 0.25), (1, 0.125), (2, 0.0625)] {
            let part = DyadicPartition::new(n, coarse, P2).unwrap();
            let a = verify_high_lemma(&spec, &part, cut, &grid, LemmaBackend::Spectral).unwrap();
            let b = verify_high_lemma(&spec, &part, cut, &grid, LemmaBackend::Grid).unwrap();
            assert!(a.holds && b.holds);
            assert!((a.lhs - b.lhs).abs() <= 1e-9 * a.lhs.max(1.0));
            assert!((a.rhs - b.rhs).abs() <= 1e-9 * a.rhs.max(1.0));
        }
    }
    assert!(verify_high_lemma(&spec, &coarse, 0.5, &grid, LemmaBackend::Spectral).is_err());
}

#[test]
fn high_lemma_variant_cases() {
    let n = 16;
    let grid = exact_q_grid(n, 2).unwrap();
    let zero = SparseSpectrum::empty(&grid);
    let z = verify_high_lemma_variant(&zero, n, 1, LemmaBackend::Spectral).unwrap();
    assert!(z.holds && z.lhs == 0.0);

    let field = random_cap_filling(&grid, 4, 21).unwrap();
    assert_eq!(field.len(), n * n);
    // One block: both sides are the same sum.
    let one = verify_high_lemma_variant(&field, n, 0, LemmaBackend::Spectral).unwrap();
    assert!(one.rel_gap < 1e-12);
    for coarse in 1..=3 {
        let a = verify_high_lemma_variant(&field, n, coarse, LemmaBackend::Spectral).unwrap();
        let b = verify_high_lemma_variant(&field, n, coarse, LemmaBackend::Grid).unwrap();
        assert!(a.holds, "spectral coarse {coarse}: {a:?}");
        assert!(b.holds, "grid coarse {coarse}: {b:?}");
        assert!(a.lhs > 0.0);
        assert!((a.lhs - b.lhs).abs() <= 1e-9 * a.lhs);
    }
    let spec = ExpSumSpec::random_phase(n, 4);
    let sp = SparseSpectrum::from_exp_sum(&spec, &grid).unwrap();
    let t = verify_high_lemma_variant(&sp, n, 2, LemmaBackend::Spectral).unwrap();
    assert!(t.holds);
    let real = q_grid(n, 2, 2, Mode::Real).unwrap();
    assert!(verify_high_lemma_variant(&SparseSpectrum::empty(&real), n, 1, LemmaBackend::Spectral).is_err());
}

#[test]
fn pipeline_trivial_n1() {
    let grid = q_grid(1, 1, 1, Mode::Real).unwrap();
    let r = highlow_pipeline(&ExpSumSpec::all_ones(1), &grid, &PipelineParams::new(3.0)).unwrap();
    assert!(r.rows.iter().all(|row| row.measured_mass <= 1.0));
    assert!(r.all_pass());
}

#[test]
fn pipeline_small_real_and_exact() {
    let n = 16;
    for mode in [Mode::Real, P2] {
        let grid = q_grid(n, 2, 2, mode).unwrap();
        for spec in [ExpSumSpec::all_ones(n), ExpSumSpec::random_phase(n, 0)] {
            let r = highlow_pipeline(&spec, &grid, &PipelineParams::new(1.0)).unwrap();
            assert!(!r.rows.is_empty());
            assert!(r.all_pass(), "{mode:?}: {:?}", r.alphas);
            assert!(r.alphas.iter().all(|a| a.vacuous_pruning));
        }
    }
}

#[test]
fn pipeline_with_active_pruning() {
    let n = 16;
    let grid = exact_q_grid(n, 2).unwrap();
    let spec = ExpSumSpec::random_gaussian(n, 9);
    let params = PipelineParams { ladder_c: 1.0, bound_c: 3.0, tilde_c: -1.0, c_prime: 2.0 };
    let r = highlow_pipeline(&spec, &grid, &params).unwrap();
    assert!(r.alphas.iter().any(|a| !a.vacuous_pruning));
    assert!(r.alphas.iter().any(|a| a.removed_mass.iter().any(|&m| m > 0.0)));
    for a in &r.alphas {
        assert!(a.sup_bound_ok && a.partition_ok && a.chain_pointwise_ok && a.monotone_ok, "{a:?}");
    }
}

#[test]
fn profile_at_finest_scale_is_constant() {
    let n = 8;
    let grid = q_grid(n, 2, 2, Mode::Real).unwrap();
    let spec = ExpSumSpec::random_gaussian(n, 4);
    let part = DyadicPartition::new(n, 3, Mode::Real).unwrap();
    let prof = bilinear_profile(&spec, &part, &grid).unwrap();
    let mut mods: Vec<f64> = spec.coeffs.iter().map(|z| z.norm()).collect();
    mods.sort_by(|a, b| b.total_cmp(a));
    let six: f64 = mods.iter().map(|m| m.powi(6)).sum();
    // Direct evaluation of each one-term sum at a few points.
    for &i in &[0usize, 5, grid.len() - 1] {
        let x = grid.point(&grid.unravel(i));
        let mut vals: Vec<f64> = (0..part.count())
            .map(|k| eval_at(&decoup::exp_sum::partial_spec(&spec, &part, k), [x[0], x[1]]).norm())
            .collect();
        vals.sort_by(|a, b| b.total_cmp(a));
        assert!((prof.top1[i] - vals[0]).abs() < 1e-12 && (prof.top2[i] - vals[1]).abs() < 1e-12);
        assert!((prof.top1[i] - mods[0]).abs() < 1e-15);
        assert!((prof.s6[i] - six).abs() < 1e-12 * six);
    }
}
