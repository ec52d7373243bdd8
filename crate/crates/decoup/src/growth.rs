//! Growth-class fits: `value ~ scale^a` against `value ~ (log scale)^b`.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    /// Euclidean norm of the residual vector.
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthFit {
    pub samples: Vec<(f64, f64)>,
    /// `log value = a log scale + c`.
    pub power: LineFit,
    /// `log value = b log log scale + c`.
    pub polylog: LineFit,
    pub polylog_better: bool,
}

impl GrowthFit {
    pub fn power_exponent(&self) -> f64 {
        self.power.slope
    }

    pub fn polylog_degree(&self) -> f64 {
        self.polylog.slope
    }
}

pub fn least_squares(xs: &[f64], ys: &[f64]) -> Result<LineFit> {
    let n = xs.len();
    if n < 2 || ys.len() != n {
        return Err(Error::InvalidParameter("need at least two paired samples".into()));
    }
    let mx = xs.iter().sum::<f64>() / n as f64;
    let my = ys.iter().sum::<f64>() / n as f64;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidParameter("abscissae are all equal".into()));
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - slope * x - intercept).powi(2))
        .sum::<f64>()
        .sqrt();
    Ok(LineFit { slope, intercept, residual })
}

/// Needs at least 4 samples with strictly increasing scales above e (so that
/// `log log scale` is defined) and positive values.
pub fn fit_growth(samples: &[(f64, f64)]) -> Result<GrowthFit> {
    if samples.len() < 4 {
        return Err(Error::InvalidParameter(format!("{} samples, need at least 4", samples.len())));
    }
    if samples.windows(2).any(|w| w[1].0 <= w[0].0) {
        return Err(Error::InvalidParameter("scales must be strictly increasing".into()));
    }
    if samples.iter().any(|&(s, v)| s <= std::f64::consts::E || v <= 0.0) {
        return Err(Error::InvalidParameter("scales must exceed e and values must be positive".into()));
    }
    let ly: Vec<f64> = samples.iter().map(|s| s.1.ln()).collect();
    let lx: Vec<f64> = samples.iter().map(|s| s.0.ln()).collect();
    let llx: Vec<f64> = lx.iter().map(|x| x.ln()).collect();
    let power = least_squares(&lx, &ly)?;
    let polylog = least_squares(&llx, &ly)?;
    let polylog_better = polylog.residual < power.residual;
    Ok(GrowthFit { samples: samples.to_vec(), power, polylog, polylog_better })
}
