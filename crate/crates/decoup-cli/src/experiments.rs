use crate::config::{Example, ExperimentConfig, Kind, ModeArg};
use crate::report::{row, Report, Row};
use anyhow::{anyhow, bail, Result};
use decoup::counting::{l2m_count_all_ones, l2m_norm_by_counting, strichartz_ratio_all_ones};
use decoup::exp_sum::{default_q_grid, eval_exp_sum, exact_q_grid, q_grid, strichartz_ratio, CoeffSource, ExpSumSpec};
use decoup::field::{lp_avg_power, Normalization, RegionMask};
use decoup::grid::{GridSpec, Mode};
use decoup::growth::fit_growth;
use decoup::lab::select::fitted_exponent;
use decoup::lab::*;
use decoup::multiscale::{highlow_pipeline, PipelineParams};
use decoup::numeric::e;
use decoup::wavepacket::exact::decompose_exact;
use decoup::wavepacket::real::{gaussian_packet, leakage, tube_mass_fraction, tube_of};
use decoup::wavepacket::{build_caps, extension_spacetime};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::{json, Value};

/// Sizes above these would not fit in memory on a desk machine.
const MAX_QUADRATURE_N: usize = 64;
const MAX_PIPELINE_N: usize = 256;
const MAX_EXACT_PACKET_N: usize = 128;

pub fn run(kind: Kind, cfg: &ExperimentConfig) -> Result<Report> {
    cfg.validate(kind)?;
    let mut report = Report::new(kind, cfg.clone());
    match kind {
        Kind::OracleVerify => oracle_verify(cfg, &mut report)?,
        Kind::StrichartzGrowth => strichartz_growth(cfg, &mut report)?,
        Kind::HighlowPipeline => highlow(cfg, &mut report)?,
        Kind::WavepacketChecks => wavepackets(cfg, &mut report)?,
        Kind::RefinedLab => refined_lab(cfg, &mut report)?,
    }
    Ok(report)
}

pub fn source_label(src: &CoeffSource) -> String {
    match src {
        CoeffSource::AllOnes => "all-ones".into(),
        CoeffSource::RandomPhase { seed } => format!("seed-{seed}"),
        CoeffSource::File { path } => format!("file:{}", path.display()),
    }
}

/// Runs `f` over `jobs` on the pool; results come back in job order.
fn sweep<J: Sync, F>(jobs: &[J], f: F) -> Result<Vec<Row>>
where
    F: Fn(&J) -> Result<Vec<Row>> + Sync,
{
    let parts: Vec<Result<Vec<Row>>> = jobs.par_iter().map(&f).collect();
    let mut out = Vec::new();
    for p in parts {
        out.extend(p?);
    }
    Ok(out)
}

fn spec_jobs(cfg: &ExperimentConfig, kind: Kind) -> Vec<(usize, CoeffSource)> {
    let sources = cfg.sources();
    cfg.n_list(kind).into_iter().flat_map(|n| sources.iter().map(move |s| (n, s.clone()))).collect()
}

fn build(src: &CoeffSource, n: usize) -> Result<ExpSumSpec> {
    src.build(n).map_err(|e| anyhow!("{}: {e}", source_label(src)))
}

fn lib<T>(r: decoup::Result<T>) -> Result<T> {
    r.map_err(|e| anyhow!(e))
}

fn oracle_verify(cfg: &ExperimentConfig, report: &mut Report) -> Result<()> {
    let m = (cfg.p / 2.0) as usize;
    let mode = cfg.mode.mode();
    let jobs = spec_jobs(cfg, Kind::OracleVerify);
    report.rows = sweep(&jobs, |(n, src)| {
        let n = *n;
        if n > MAX_QUADRATURE_N {
            bail!("N = {n} is infeasible for oracle-verify (limit {MAX_QUADRATURE_N})");
        }
        let spec = build(src, n)?;
        let grid = lib(q_grid(n, 4, 4, mode))?;
        let f = lib(eval_exp_sum(&spec, &grid))?;
        let quad = lib(lp_avg_power(&f, cfg.p, &RegionMask::full(&grid), Normalization::FullDomain))?;
        let oracle = lib(l2m_norm_by_counting(&spec.coeffs, m))?;
        let rel = (quad - oracle).abs() / oracle.max(f64::MIN_POSITIVE);
        let mut pass = rel <= 1e-8;
        let count = if matches!(src, CoeffSource::AllOnes) {
            let c = lib(l2m_count_all_ones(n, m))?;
            pass &= c as f64 == oracle;
            Value::from(c as u64)
        } else {
            Value::Null
        };
        Ok(vec![row(json!({
            "n": n, "source": source_label(src), "p": cfg.p,
            "quadrature": quad, "oracle": oracle, "integer_count": count,
            "rel_gap": rel, "pass": pass,
        }))])
    })?;
    Ok(())
}

fn strichartz_growth(cfg: &ExperimentConfig, report: &mut Report) -> Result<()> {
    let jobs = spec_jobs(cfg, Kind::StrichartzGrowth);
    report.rows = sweep(&jobs, |(n, src)| {
        let n = *n;
        let (value, method) = if matches!(src, CoeffSource::AllOnes) && cfg.p == 6.0 {
            (lib(strichartz_ratio_all_ones(n))?, "counting")
        } else {
            if n > MAX_QUADRATURE_N {
                bail!("N = {n} is infeasible by quadrature (limit {MAX_QUADRATURE_N}); all-ones at p = 6 uses counting");
            }
            let spec = build(src, n)?;
            (lib(strichartz_ratio(&spec, cfg.p, &lib(default_q_grid(n))?))?, "quadrature")
        };
        let bound = 4.0 * (n as f64).ln().powi(3);
        Ok(vec![row(json!({
            "n": n, "source": source_label(src), "method": method,
            "ratio": value, "polylog_bound": bound, "pass": n == 1 || value <= bound,
        }))])
    })?;
    let mut fits = serde_json::Map::new();
    for src in cfg.sources() {
        let label = source_label(&src);
        let mut samples: Vec<(f64, f64)> = report
            .rows
            .iter()
            .filter(|r| r["source"] == label.as_str())
            .map(|r| (r["n"].as_f64().unwrap(), r["ratio"].as_f64().unwrap()))
            .collect();
        samples.sort_by(|a, b| a.0.total_cmp(&b.0));
        samples.dedup_by(|a, b| a.0 == b.0);
        if matches!(src, CoeffSource::AllOnes) {
            report.check("all-ones ratio nondecreasing in N", samples.windows(2).all(|w| w[1].1 >= w[0].1 * (1.0 - 1e-12)));
        }
        if samples.len() >= 4 {
            if let Ok(fit) = fit_growth(&samples) {
                fits.insert(
                    label,
                    json!({
                        "power_exponent": fit.power_exponent(), "power_residual": fit.power.residual,
                        "polylog_degree": fit.polylog_degree(), "polylog_residual": fit.polylog.residual,
                        "polylog_better": fit.polylog_better,
                    }),
                );
            }
        }
    }
    report.summary.insert("fits".into(), Value::Object(fits));
    Ok(())
}

fn pipeline_grid(n: usize, mode: Mode) -> Result<GridSpec> {
    match n {
        _ if n <= 64 => lib(q_grid(n, 2, 2, mode)),
        _ if n <= MAX_PIPELINE_N => lib(q_grid(n, 1, 1, mode)),
        _ => bail!("N = {n} is infeasible for the pipeline (limit {MAX_PIPELINE_N})"),
    }
}

fn highlow(cfg: &ExperimentConfig, report: &mut Report) -> Result<()> {
    let base = PipelineParams::new(cfg.c);
    let params = PipelineParams {
        ladder_c: cfg.ladder_c.unwrap_or(base.ladder_c),
        bound_c: cfg.c,
        tilde_c: cfg.tilde_c.unwrap_or(base.tilde_c),
        c_prime: cfg.c_prime.unwrap_or(base.c_prime),
    };
    let mode = cfg.mode.mode();
    let jobs = spec_jobs(cfg, Kind::HighlowPipeline);
    report.rows = sweep(&jobs, |(n, src)| {
        let n = *n;
        let grid = pipeline_grid(n, mode)?;
        let spec = build(src, n)?;
        let r = lib(highlow_pipeline(&spec, &grid, &params))?;
        let mut rows = Vec::new();
        for a in &r.alphas {
            let structural = a.partition_ok && a.chain_pointwise_ok && a.sup_bound_ok && a.monotone_ok;
            for rr in r.rows.iter().filter(|rr| rr.alpha == a.alpha) {
                rows.push(row(json!({
                    "n": n, "source": source_label(src), "alpha": rr.alpha, "region": rr.region_id,
                    "measured_mass": rr.measured_mass, "bound": rr.bound, "lambda": a.lambda,
                    "vacuous_pruning": a.vacuous_pruning, "structure_ok": structural,
                    "pass": rr.pass && structural,
                })));
            }
        }
        Ok(rows)
    })?;
    Ok(())
}

fn wavepackets(cfg: &ExperimentConfig, report: &mut Report) -> Result<()> {
    match cfg.mode {
        ModeArg::Exact => {
            let jobs = spec_jobs(cfg, Kind::WavepacketChecks);
            report.rows = sweep(&jobs, |(n, src)| {
                let n = *n;
                if n > MAX_EXACT_PACKET_N || !n.is_power_of_two() || n < 2 {
                    bail!("N = {n} must be a power of 2 in [2, {MAX_EXACT_PACKET_N}]");
                }
                let grid = lib(exact_q_grid(n, 2))?;
                let spec = build(src, n)?;
                let f = lib(eval_exp_sum(&spec, &grid))?;
                let sup = f.sup_norm();
                let avg: f64 = f.data.iter().map(|z| z.norm_sqr()).sum::<f64>() / f.len() as f64;
                let mut rows = Vec::new();
                for level in 1..=n.trailing_zeros() {
                    let dec = lib(decompose_exact(&f, level))?;
                    let err = lib(dec.reconstruct().max_abs_diff(&f))? / sup;
                    let spread = dec.max_modulus_spread();
                    let energy_gap = (dec.packet_energy() - avg).abs() / avg;
                    rows.push(row(json!({
                        "n": n, "source": source_label(src), "level": level,
                        "packets": dec.nonzero_packets(1e-12 * sup),
                        "reconstruction_error": err, "modulus_spread": spread, "energy_gap": energy_gap,
                        "pass": err <= 1e-12 && spread <= 1e-12 && energy_gap <= 1e-12,
                    })));
                }
                Ok(rows)
            })?;
        }
        ModeArg::Real => {
            let jobs: Vec<(usize, u64)> =
                cfg.r_list(Kind::WavepacketChecks).into_iter().flat_map(|r| cfg.seed_list().into_iter().map(move |s| (r, s))).collect();
            report.rows = sweep(&jobs, |&(r, seed)| {
                let rf = r as f64;
                let h = rf.sqrt();
                if !(h.fract() == 0.0 && r >= 16 && r <= 4096) {
                    bail!("R = {r} must be a perfect square in [16, 4096]");
                }
                let period = 4.0 * rf;
                let grid = lib(GridSpec::cube(period, (4.0 * period) as usize, 1, Mode::Real))?;
                let caps = lib(build_caps(1.0 / h, 1))?;
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let cap = &caps[rng.gen_range(0..caps.len())];
                let nu = rng.gen_range(0..(period / h) as usize) as f64 * h;
                let f = gaussian_packet(&grid, &cap.center, &[nu], h);
                let u = lib(extension_spacetime(&f, rf, 64))?;
                let tube = lib(tube_of(cap, &[nu], rf, period))?;
                let frac = tube_mass_fraction(&u, &tube, 3.0);
                let leak = leakage(&u, &tube, 3.0);
                Ok(vec![row(json!({
                    "r": r, "seed": seed, "cap": cap.index[0], "nu": nu,
                    "mass_fraction": frac, "leakage": leak, "pass": frac >= 0.9 && leak <= 0.05,
                }))])
            })?;
        }
    }
    Ok(())
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

fn refined_lab(cfg: &ExperimentConfig, report: &mut Report) -> Result<()> {
    let policy = cfg.policy.band();
    let seeds: Vec<Option<u64>> = match cfg.example {
        Example::Random => cfg.seed_list().into_iter().map(Some).collect(),
        _ => vec![None],
    };
    let jobs: Vec<(usize, Option<u64>)> =
        cfg.r_list(Kind::RefinedLab).into_iter().flat_map(|r| seeds.iter().map(move |&s| (r, s))).collect();
    let example = serde_json::to_value(cfg.example)?;
    report.rows = sweep(&jobs, |&(r, seed)| {
        let factor = if cfg.example == Example::Bush { 4 } else { 1 };
        let lab = lib(Lab::new(cfg.d, r).and_then(|l| l.with_period_factor(factor)))?;
        let (f, packets) = match cfg.example {
            Example::Parallel => (lib(parallel_example(&lab))?, None),
            Example::Bush => (lib(bush_example(&lab))?, None),
            Example::Random => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed.unwrap());
                let slots = lab.cells_per_axis().pow(2 * lab.d as u32);
                let w = match cfg.w {
                    Some(w) if w == 0 || w > slots => bail!("W = {w} not in [1, {slots}]"),
                    Some(w) => w,
                    None => rng.gen_range(1..=slots),
                };
                let packets = random_packets(&lab, &mut rng, w);
                (lib(packet_data(&lab, &packets))?, Some(packets))
            }
        };
        let rep = lib(refined_strichartz_check(&lab, &f, policy))?;
        let mut out = json!({
            "r": r, "d": cfg.d, "example": example, "seed": seed, "w": Value::Null,
            "sigma": rep.sigma, "cubes": rep.cubes, "slabs": rep.slabs,
            "lhs": rep.lhs, "rhs": rep.rhs, "ratio": rep.ratio, "skip": rep.skip,
            "decoupling_ratio": Value::Null, "pigeonhole_sigma": Value::Null, "sigma_bound": Value::Null,
            "chain_ok": Value::Null,
        });
        let mut pass = rep.skip || (0.125..=8.0).contains(&rep.ratio);
        if let Some(packets) = packets {
            let k = cfg.k.unwrap_or_else(|| default_k(lab.r));
            let rd = lib(refined_decoupling_ratio(&lab, &packets))?;
            let cp = rd.powers.as_ref().ok_or_else(|| anyhow!("cube powers missing"))?;
            let ph = lib(pigeonhole_sigma(&lab, &packets, &rd.table, cp, policy))?;
            let chain = lib(chain_check(&rd.table, k))?;
            pass &= rd.max_ratio <= 8.0 && (ph.skip || (ph.holds && ph.counting_ok)) && chain.holds();
            out["w"] = packets.len().into();
            out["decoupling_ratio"] = rd.max_ratio.into();
            out["pigeonhole_sigma"] = ph.sigma.into();
            out["sigma_bound"] = ph.sigma_bound.into();
            out["chain_ok"] = chain.holds().into();
        }
        out["pass"] = pass.into();
        Ok(vec![row(out)])
    })?;
    if cfg.example != Example::Random && report.rows.len() >= 2 {
        let samples: Vec<(f64, f64)> = report
            .rows
            .iter()
            .filter(|r| r["ratio"].as_f64().is_some_and(|v| v > 0.0))
            .map(|r| (r["r"].as_f64().unwrap(), r["ratio"].as_f64().unwrap()))
            .collect();
        if let Ok(slope) = fitted_exponent(&samples) {
            report.summary.insert("fitted_exponent".into(), slope.into());
        }
    }
    Ok(())
}
