use super::classify::{OmegaDecomposition, RegionId};
use super::ladder::{build_ladder, PruningParams, ScaleLadder};
use super::level_set::{bilinear_profile, dyadic_alphas, level_set, BilinearProfile};
use super::prune::{max_cap_l1, prune};
use super::square::{square_function, LevelField};
use crate::error::{Error, Result};
use crate::exp_sum::{check_q_grid, eval_exp_sum, DyadicPartition, ExpSumSpec};
use crate::field::RealField;
use crate::grid::{GridSpec, Mode};
use crate::numeric::{log_p_exact, KahanSum};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PipelineParams {
    /// Exponent of the scale ladder.
    pub ladder_c: f64,
    /// Exponent `c` in the bound `[(ln N)^c ||a||_2]^6`.
    pub bound_c: f64,
    pub tilde_c: f64,
    pub c_prime: f64,
}

impl PipelineParams {
    /// `tilde_c = 2c + 2`, `c' = c + 1`.
    pub fn new(c: f64) -> Self {
        Self { ladder_c: c, bound_c: c, tilde_c: 2.0 * c + 2.0, c_prime: c + 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub alpha: f64,
    pub region_id: String,
    pub measured_mass: f64,
    pub bound: f64,
    pub pass: bool,
}

/// Pruning and classification details for one `alpha`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaSummary {
    pub alpha: f64,
    pub lambda: f64,
    /// Whether `lambda` exceeds every cap's coefficient sum, so no packet can
    /// be removed and the unpruned stack applies.
    pub vacuous_pruning: bool,
    /// Per level `J, J-1, ..., 1`: removed packet mass and largest kept sup.
    pub removed_mass: Vec<f64>,
    pub max_kept_sup: Vec<f64>,
    pub sup_bound_ok: bool,
    pub monotone_ok: bool,
    /// Points per region, in the order `Omega_{J-1}, ..., Omega_0, L`.
    pub region_counts: Vec<usize>,
    pub partition_ok: bool,
    /// `g_0 <= (1 + eps)^J g_J` at every point of the low set.
    pub chain_pointwise_ok: bool,
    /// `(avg_L max |f_I f_I'|^3)^{1/6}` and `(1 + eps)^{J/2} (avg g_J^3)^{1/6}`.
    pub low_chain_measured: f64,
    pub low_chain_bound: f64,
    /// The chain inequality is asserted only when pruning is vacuous.
    pub low_chain_pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineReport {
    pub n: usize,
    pub mode: Mode,
    pub deltas: Vec<f64>,
    pub j_max: usize,
    pub epsilon: f64,
    pub params: PipelineParams,
    pub a_l2: f64,
    pub sup_f: f64,
    pub g_j_sup: f64,
    pub rows: Vec<ReportRow>,
    pub alphas: Vec<AlphaSummary>,
}

impl PipelineReport {
    pub fn all_pass(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
            && self.alphas.iter().all(|a| {
                a.sup_bound_ok && a.monotone_ok && a.partition_ok && a.chain_pointwise_ok && a.low_chain_pass
            })
    }
}

/// Ladder used by the pipeline. Below `N = 16` the ladder is just `{1, 1/N}`.
fn pipeline_ladder(n: usize, c: f64, mode: Mode) -> Result<ScaleLadder> {
    if n >= 16 {
        return build_ladder(n, c, mode);
    }
    let p = mode.radix();
    let k = log_p_exact(n as u64, p)
        .ok_or_else(|| Error::InvalidParameter(format!("N = {n} is not a power of {p}")))?;
    let levels = if k == 0 { vec![0] } else { vec![0, k] };
    Ok(ScaleLadder { n, c, p, levels })
}

struct Stack {
    dec: OmegaDecomposition,
    g0: RealField,
    removed_mass: Vec<f64>,
    max_kept_sup: Vec<f64>,
    sup_bound_ok: bool,
    monotone_ok: bool,
}

fn build_stack(
    spec: &ExpSumSpec,
    grid: &GridSpec,
    parts: &[DyadicPartition],
    g_j: &RealField,
    epsilon: f64,
    lambda: Option<f64>,
) -> Result<Stack> {
    let j_max = parts.len() - 1;
    let mut dec = OmegaDecomposition::new(grid, j_max)?;
    let mut removed_mass = Vec::new();
    let mut max_kept_sup = Vec::new();
    let (mut sup_bound_ok, mut monotone_ok) = (true, true);
    let mut level = match lambda {
        None => LevelField::Sparse(spec.clone()),
        Some(_) => LevelField::Dense(eval_exp_sum(spec, grid)?),
    };
    let mut prev_norm = f64::INFINITY;
    let mut prune_level = |level: LevelField, j: usize| -> Result<LevelField> {
        let (Some(lambda), LevelField::Dense(f)) = (lambda, &level) else {
            return Ok(level);
        };
        let rep = prune(f, &parts[j], lambda)?;
        removed_mass.push(rep.removed_mass);
        max_kept_sup.push(rep.max_kept_sup);
        sup_bound_ok &= rep.max_kept_sup <= lambda;
        let norm = rep.field.l2_samples();
        monotone_ok &= norm <= prev_norm * (1.0 + 1e-6) + 1e-12;
        prev_norm = norm;
        Ok(LevelField::Dense(rep.field))
    };
    level = prune_level(level, j_max)?;
    let mut g_next = g_j.clone();
    for j in (0..j_max).rev() {
        let g = square_function(&level, grid, &parts[j])?;
        dec.step(j, &g, &g_next, epsilon)?;
        g_next = g;
        if j > 0 {
            level = prune_level(level, j)?;
        }
    }
    drop(prune_level);
    Ok(Stack { dec, g0: g_next, removed_mass, max_kept_sup, sup_bound_ok, monotone_ok })
}

fn summarize(
    alpha: f64,
    lambda: f64,
    vacuous: bool,
    stack: &Stack,
    g_j: &RealField,
    profile: &BilinearProfile,
    epsilon: f64,
) -> AlphaSummary {
    let dec = &stack.dec;
    let j_max = dec.j_max;
    let ids = dec.ids();
    let region_counts: Vec<usize> = ids.iter().map(|&id| dec.count(id)).collect();
    let partition_ok = region_counts.iter().sum::<usize>() == dec.region.len();
    let chain = (1.0 + epsilon).powi(j_max as i32);
    let low = j_max as u16;
    let mut chain_pointwise_ok = true;
    let mut low_sum = KahanSum::new();
    let mut g3 = KahanSum::new();
    for i in 0..dec.region.len() {
        g3.add(g_j.data[i].powi(3));
        if dec.region[i] == low {
            let bound = chain * g_j.data[i];
            chain_pointwise_ok &= stack.g0.data[i] <= bound * (1.0 + 1e-9) + 1e-9;
            low_sum.add((profile.top1[i] * profile.top2[i]).powi(3));
        }
    }
    let len = dec.region.len() as f64;
    let low_chain_measured = (low_sum.value() / len).powf(1.0 / 6.0);
    let low_chain_bound = chain.sqrt() * (g3.value() / len).powf(1.0 / 6.0);
    let low_chain_pass = !vacuous || low_chain_measured <= low_chain_bound * (1.0 + 1e-9);
    AlphaSummary {
        alpha,
        lambda,
        vacuous_pruning: vacuous,
        removed_mass: stack.removed_mass.clone(),
        max_kept_sup: stack.max_kept_sup.clone(),
        sup_bound_ok: stack.sup_bound_ok,
        monotone_ok: stack.monotone_ok,
        region_counts,
        partition_ok,
        chain_pointwise_ok,
        low_chain_measured,
        low_chain_bound,
        low_chain_pass,
    }
}

/// Runs ladder, pruning, square functions and classification, then measures
/// `alpha^6 |U_alpha cap region| / |Q|` per dyadic `alpha` and region.
pub fn highlow_pipeline(spec: &ExpSumSpec, grid: &GridSpec, params: &PipelineParams) -> Result<PipelineReport> {
    let n = spec.n();
    check_q_grid(n, grid)?;
    let mode = grid.mode;
    let ladder = pipeline_ladder(n, params.ladder_c, mode)?;
    let parts: Vec<DyadicPartition> =
        ladder.levels.iter().map(|&l| DyadicPartition::new(n, l, mode)).collect::<Result<_>>()?;
    let j_max = ladder.j_max();
    let epsilon = if n > 1 { ladder.epsilon() } else { 0.0 };
    let a_l2 = spec.l2();
    let sup_f = eval_exp_sum(spec, grid)?.sup_norm();
    let g_j = square_function(&LevelField::Sparse(spec.clone()), grid, &parts[j_max])?;
    let g_j_sup = g_j.max();
    let profile = bilinear_profile(spec, &parts[j_max.min(1)], grid)?;
    let ln_n = (n as f64).ln();
    let bound = (ln_n.powf(params.bound_c) * a_l2).powi(6);
    let cap_l1 = parts.iter().map(|p| max_cap_l1(spec, p)).fold(0.0, f64::max);

    let mut unpruned: Option<Stack> = None;
    let mut rows = Vec::new();
    let mut alphas = Vec::new();
    for alpha in dyadic_alphas(sup_f / n as f64, sup_f) {
        let pp = PruningParams::new(n, params.tilde_c, params.c_prime, g_j_sup, alpha)?;
        let vacuous = pp.lambda >= cap_l1;
        let pruned;
        let stack = if vacuous {
            if unpruned.is_none() {
                unpruned = Some(build_stack(spec, grid, &parts, &g_j, epsilon, None)?);
            }
            unpruned.as_ref().unwrap()
        } else {
            pruned = build_stack(spec, grid, &parts, &g_j, epsilon, Some(pp.lambda))?;
            &pruned
        };
        let u = level_set(&profile, n, alpha, params.c_prime);
        let mut counts = vec![0usize; j_max + 1];
        for (i, &b) in u.bits.iter().enumerate() {
            if b {
                counts[stack.dec.region[i] as usize] += 1;
            }
        }
        for id in stack.dec.ids() {
            let c = match id {
                RegionId::Omega(j) => counts[j],
                RegionId::Low => counts[j_max],
            };
            let measured_mass = alpha.powi(6) * c as f64 / grid.len() as f64;
            rows.push(ReportRow {
                alpha,
                region_id: id.to_string(),
                measured_mass,
                bound,
                pass: measured_mass <= bound,
            });
        }
        alphas.push(summarize(alpha, pp.lambda, vacuous, stack, &g_j, &profile, epsilon));
    }
    Ok(PipelineReport {
        n,
        mode,
        deltas: ladder.deltas(),
        j_max,
        epsilon,
        params: *params,
        a_l2,
        sup_f,
        g_j_sup,
        rows,
        alphas,
    })
}
