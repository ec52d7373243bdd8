use anyhow::{bail, Context, Result};
use clap::ValueEnum;
use decoup::exp_sum::CoeffSource;
use decoup::grid::Mode;
use decoup::lab::BandPolicy;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    StrichartzGrowth,
    HighlowPipeline,
    WavepacketChecks,
    RefinedLab,
    OracleVerify,
}

impl Kind {
    pub fn name(self) -> &'static str {
        match self {
            Kind::StrichartzGrowth => "strichartz-growth",
            Kind::HighlowPipeline => "highlow-pipeline",
            Kind::WavepacketChecks => "wavepacket-checks",
            Kind::RefinedLab => "refined-lab",
            Kind::OracleVerify => "oracle-verify",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ModeArg {
    #[default]
    Real,
    /// Cyclic 2-adic model.
    Exact,
}

impl ModeArg {
    pub fn mode(self) -> Mode {
        match self {
            ModeArg::Real => Mode::Real,
            ModeArg::Exact => Mode::Exact { p: 2 },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Example {
    #[default]
    Parallel,
    Bush,
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Policy {
    #[default]
    MaxCount,
    MaxMass,
}

impl Policy {
    pub fn band(self) -> BandPolicy {
        match self {
            Policy::MaxCount => BandPolicy::MaxCount,
            Policy::MaxMass => BandPolicy::MaxMass,
        }
    }
}

/// On-disk experiment description. Absent sweeps take the experiment's
/// defaults; a sweep given as an empty list is rejected.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub experiment: Option<Kind>,
    #[serde(default)]
    pub mode: ModeArg,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<Vec<usize>>,
    #[serde(default = "yes")]
    pub all_ones: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seeds: Option<Vec<u64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coeff_file: Option<PathBuf>,
    /// Lebesgue exponent for exponential-sum norms.
    #[serde(default = "six")]
    pub p: f64,
    #[serde(default = "three")]
    pub c: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ladder_c: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tilde_c: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_prime: Option<f64>,
    #[serde(default = "one")]
    pub d: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(default)]
    pub example: Example,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub w: Option<usize>,
    #[serde(default)]
    pub policy: Policy,
    #[serde(default)]
    pub plot: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

fn yes() -> bool {
    true
}
fn one() -> usize {
    1
}
fn three() -> f64 {
    3.0
}
fn six() -> f64 {
    6.0
}

impl ExperimentConfig {
    pub fn new() -> Self {
        serde_json::from_str("{}").expect("empty config parses")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }

    pub fn n_list(&self, kind: Kind) -> Vec<usize> {
        self.n.clone().unwrap_or_else(|| match kind {
            Kind::OracleVerify => vec![2, 4, 8, 16],
            Kind::StrichartzGrowth => (4..=10).map(|k| 1 << k).collect(),
            Kind::HighlowPipeline => vec![64],
            Kind::WavepacketChecks => vec![16, 64],
            Kind::RefinedLab => vec![],
        })
    }

    pub fn r_list(&self, kind: Kind) -> Vec<usize> {
        self.r.clone().unwrap_or_else(|| match kind {
            Kind::RefinedLab => vec![64, 256, 1024],
            Kind::WavepacketChecks => vec![64, 256],
            _ => vec![],
        })
    }

    pub fn seed_list(&self) -> Vec<u64> {
        self.seeds.clone().unwrap_or_default()
    }

    /// Coefficient sources in report order: all-ones, seeds, file.
    pub fn sources(&self) -> Vec<CoeffSource> {
        let mut out = Vec::new();
        if self.all_ones {
            out.push(CoeffSource::AllOnes);
        }
        out.extend(self.seed_list().into_iter().map(|seed| CoeffSource::RandomPhase { seed }));
        if let Some(path) = &self.coeff_file {
            out.push(CoeffSource::File { path: path.clone() });
        }
        out
    }

    pub fn validate(&self, kind: Kind) -> Result<()> {
        if let Some(k) = self.experiment {
            if k != kind {
                bail!("config is for {} but {} was requested", k.name(), kind.name());
            }
        }
        for (name, list) in [("n", &self.n), ("r", &self.r)] {
            if matches!(list, Some(v) if v.is_empty()) {
                bail!("sweep `{name}` is empty");
            }
        }
        if matches!(&self.seeds, Some(v) if v.is_empty()) {
            bail!("sweep `seeds` is empty");
        }
        let uses_sources = matches!(
            kind,
            Kind::OracleVerify | Kind::StrichartzGrowth | Kind::HighlowPipeline
        ) || (kind == Kind::WavepacketChecks && self.mode == ModeArg::Exact);
        if uses_sources {
            let ns = self.n_list(kind);
            if ns.is_empty() {
                bail!("sweep `n` is empty");
            }
            if ns.contains(&0) {
                bail!("N must be positive");
            }
            if self.sources().is_empty() {
                bail!("no coefficient sources: set all_ones, seeds or coeff_file");
            }
        } else {
            if self.r_list(kind).is_empty() {
                bail!("sweep `r` is empty");
            }
            let needs_seeds = kind == Kind::WavepacketChecks || self.example == Example::Random;
            if needs_seeds && self.seed_list().is_empty() {
                bail!("this experiment draws random data: give explicit seeds");
            }
        }
        if !(self.p >= 2.0 && self.p.is_finite()) {
            bail!("p = {} must be at least 2", self.p);
        }
        if kind == Kind::OracleVerify && !matches!(self.p, 2.0 | 4.0 | 6.0) {
            bail!("oracle-verify needs p in {{2, 4, 6}}");
        }
        if !(self.c > 0.0) {
            bail!("c = {} must be positive", self.c);
        }
        Ok(())
    }
}
