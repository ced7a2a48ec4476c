//! Run configuration: the file schema, flag overrides, and validation into
//! solver inputs.
//!
//! The same [`Config`] type is read from disk and echoed into every emitted
//! document, so an output's `config` block can be fed back with `--config`.

use std::path::{Path, PathBuf};

use bulkq_core::{
    AdmissionPolicy, CostParams, PostingDistribution, SimConfig, SystemParams, Tolerances,
    DEFAULT_EPSILON,
};
use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const DEFAULT_SEED: u64 = 1;
pub const DEFAULT_POSTINGS: u64 = 1_000_000;
pub const DEFAULT_WARMUP: f64 = 0.1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum DistName {
    Exponential,
    Deterministic,
    Erlang,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum PolicyName {
    Clip,
    Reject,
    /// Run both policies (compare only).
    Both,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub w: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PostingSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dist: Option<DistName>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean: Option<f64>,
    /// Erlang shape.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shape: Option<u32>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub holding: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reserve: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub posting: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub holding_table: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reserve_table: Option<Vec<f64>>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub postings: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub warmup_fraction: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub policy: Option<PolicyName>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v_min: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v_max: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub w_min: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub w_max: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub enforce_capability: Option<bool>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompareSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tv: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cost_rel: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub format: Option<Format>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    /// Accuracy target for the embedded solves.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
}

/// Configuration file schema. Every section and key is optional; unknown keys
/// are rejected.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(default)]
    pub system: SystemSection,
    #[serde(default)]
    pub posting: PostingSection,
    #[serde(default)]
    pub cost: CostSection,
    #[serde(default)]
    pub sim: SimSection,
    #[serde(default)]
    pub search: SearchSection,
    #[serde(default)]
    pub compare: CompareSection,
    #[serde(default)]
    pub output: OutputSection,
}

/// Flags shared by every subcommand. Each overrides the matching file key.
#[derive(Args, Clone, Debug, Default)]
pub struct Flags {
    /// Configuration file (.json or .toml).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Batch size.
    #[arg(long)]
    pub v: Option<u32>,
    /// Pool capacity.
    #[arg(long)]
    pub w: Option<u32>,
    /// Consumption rate.
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Mean time between postings.
    #[arg(long)]
    pub mean: Option<f64>,
    #[arg(long, value_enum)]
    pub dist: Option<DistName>,
    /// Erlang shape.
    #[arg(long)]
    pub shape: Option<u32>,
    /// Holding cost per pooled contractor.
    #[arg(long)]
    pub ch: Option<f64>,
    /// Cost per company-reserved contractor.
    #[arg(long)]
    pub cr: Option<f64>,
    /// Posting cost coefficient.
    #[arg(long)]
    pub cd: Option<f64>,
    /// Smallest batch size in a sweep.
    #[arg(long)]
    pub vmin: Option<u32>,
    /// Largest batch size searched.
    #[arg(long)]
    pub vmax: Option<u32>,
    /// Smallest capacity in a sweep.
    #[arg(long)]
    pub wmin: Option<u32>,
    /// Largest capacity in a sweep.
    #[arg(long)]
    pub wmax: Option<u32>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Simulation horizon in posting epochs.
    #[arg(long)]
    pub postings: Option<u64>,
    /// Fraction of postings discarded as warm-up.
    #[arg(long)]
    pub warmup: Option<f64>,
    #[arg(long, value_enum)]
    pub policy: Option<PolicyName>,
    /// Total-variation tolerance for compare.
    #[arg(long)]
    pub tv: Option<f64>,
    /// Relative cost-rate tolerance for compare.
    #[arg(long)]
    pub cost_rel: Option<f64>,
    /// Accuracy target for the embedded solves.
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Output file; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Exclude batch sizes with a positive capability factor.
    #[arg(long)]
    pub enforce_capability: bool,
}

impl Config {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config(format!("cannot read {}: {e}", path.display())))?;
        match path.extension().and_then(|e| e.to_str()) {
            Some("json") => serde_json::from_str(&text)
                .map_err(|e| CliError::config(format!("{}: {e}", path.display()))),
            Some("toml") => toml::from_str(&text)
                .map_err(|e| CliError::config(format!("{}: {e}", path.display()))),
            _ => Err(CliError::config(format!(
                "{}: configuration files must end in .json or .toml",
                path.display()
            ))),
        }
    }

    /// File values (if any) with flags applied on top.
    pub fn resolve(flags: &Flags) -> Result<Self, CliError> {
        let mut c = match &flags.config {
            Some(p) => Self::load(p)?,
            None => Self::default(),
        };
        c.apply(flags);
        Ok(c)
    }

    pub fn apply(&mut self, f: &Flags) {
        fn set<T: Clone>(slot: &mut Option<T>, flag: &Option<T>) {
            if let Some(x) = flag {
                *slot = Some(x.clone());
            }
        }
        set(&mut self.system.v, &f.v);
        set(&mut self.system.w, &f.w);
        set(&mut self.system.lambda, &f.lambda);
        set(&mut self.posting.dist, &f.dist);
        set(&mut self.posting.mean, &f.mean);
        set(&mut self.posting.shape, &f.shape);
        set(&mut self.cost.holding, &f.ch);
        set(&mut self.cost.reserve, &f.cr);
        set(&mut self.cost.posting, &f.cd);
        set(&mut self.search.v_min, &f.vmin);
        set(&mut self.search.v_max, &f.vmax);
        set(&mut self.search.w_min, &f.wmin);
        set(&mut self.search.w_max, &f.wmax);
        if f.enforce_capability {
            self.search.enforce_capability = Some(true);
        }
        set(&mut self.sim.seed, &f.seed);
        set(&mut self.sim.postings, &f.postings);
        set(&mut self.sim.warmup_fraction, &f.warmup);
        set(&mut self.sim.policy, &f.policy);
        set(&mut self.compare.tv, &f.tv);
        set(&mut self.compare.cost_rel, &f.cost_rel);
        set(&mut self.output.eps, &f.eps);
        set(&mut self.output.format, &f.format);
        set(&mut self.output.path, &f.out);
    }

    pub fn format(&self) -> Format {
        self.output.format.unwrap_or_default()
    }

    pub fn eps(&self) -> Result<f64, CliError> {
        let eps = self.output.eps.unwrap_or(DEFAULT_EPSILON);
        if eps > 0.0 && eps < 1.0 {
            Ok(eps)
        } else {
            Err(CliError::config(format!(
                "output.eps must lie in (0, 1) (got {eps})"
            )))
        }
    }

    pub fn posting(&self) -> Result<PostingDistribution, CliError> {
        let mean = require(self.posting.mean, "posting.mean", "--mean")?;
        let d = match self.posting.dist.unwrap_or(DistName::Exponential) {
            DistName::Exponential => PostingDistribution::exponential(mean),
            DistName::Deterministic => PostingDistribution::deterministic(mean),
            DistName::Erlang => {
                let m = require(self.posting.shape, "posting.shape", "--shape")?;
                PostingDistribution::erlang(m, mean)
            }
        };
        Ok(d?)
    }

    pub fn lambda(&self) -> Result<f64, CliError> {
        require(self.system.lambda, "system.lambda", "--lambda")
    }

    pub fn w(&self) -> Result<u32, CliError> {
        require(self.system.w, "system.w", "--w")
    }

    pub fn system(&self) -> Result<SystemParams, CliError> {
        let v = require(self.system.v, "system.v", "--v")?;
        Ok(SystemParams::new(
            v,
            self.w()?,
            self.lambda()?,
            self.posting()?,
        )?)
    }

    pub fn cost(&self) -> Result<CostParams, CliError> {
        let c = &self.cost;
        let mut cost = CostParams::linear(
            c.holding.unwrap_or(0.0),
            c.reserve.unwrap_or(0.0),
            c.posting.unwrap_or(0.0),
        )?;
        cost.holding_table = c.holding_table.clone();
        cost.reserve_table = c.reserve_table.clone();
        for (name, table) in [
            ("cost.holding_table", &cost.holding_table),
            ("cost.reserve_table", &cost.reserve_table),
        ] {
            if let Some(t) = table {
                if t.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
                    return Err(CliError::config(format!(
                        "{name} entries must be non-negative"
                    )));
                }
            }
        }
        Ok(cost)
    }

    /// Checks that the per-state cost tables cover `0..=w` and `0..=w−v`.
    pub fn check_tables(&self, w: u32, v_min: u32) -> Result<(), CliError> {
        if let Some(t) = &self.cost.holding_table {
            if t.len() < w as usize + 1 {
                return Err(CliError::config(format!(
                    "cost.holding_table has {} entries but w + 1 = {} are needed",
                    t.len(),
                    w + 1
                )));
            }
        }
        if let Some(t) = &self.cost.reserve_table {
            let need = (w - v_min.min(w)) as usize + 1;
            if t.len() < need {
                return Err(CliError::config(format!(
                    "cost.reserve_table has {} entries but w − v + 1 = {need} are needed",
                    t.len()
                )));
            }
        }
        Ok(())
    }

    pub fn enforce_capability(&self) -> bool {
        self.search.enforce_capability.unwrap_or(false)
    }

    /// Simulation settings for one policy.
    pub fn sim(&self, policy: AdmissionPolicy) -> Result<SimConfig, CliError> {
        let cfg = SimConfig {
            seed: self.sim.seed.unwrap_or(DEFAULT_SEED),
            num_postings: self.sim.postings.unwrap_or(DEFAULT_POSTINGS),
            warmup_fraction: self.sim.warmup_fraction.unwrap_or(DEFAULT_WARMUP),
            policy,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Policies to run; `default` applies when none is configured.
    pub fn policies(&self, default: PolicyName) -> Vec<AdmissionPolicy> {
        match self.sim.policy.unwrap_or(default) {
            PolicyName::Clip => vec![AdmissionPolicy::Clip],
            PolicyName::Reject => vec![AdmissionPolicy::RejectIfNoFullRoom],
            PolicyName::Both => vec![AdmissionPolicy::Clip, AdmissionPolicy::RejectIfNoFullRoom],
        }
    }

    pub fn tolerances(&self) -> Result<Tolerances, CliError> {
        let d = Tolerances::default();
        let t = Tolerances {
            tv: self.compare.tv.unwrap_or(d.tv),
            cost_rel: self.compare.cost_rel.unwrap_or(d.cost_rel),
        };
        if !(t.tv > 0.0 && t.cost_rel > 0.0) {
            return Err(CliError::config("compare tolerances must be positive"));
        }
        Ok(t)
    }

    /// Fills every defaulted key so the echoed document is self-contained.
    pub fn with_defaults(&self, simulated: bool) -> Self {
        let mut c = self.clone();
        c.output.eps.get_or_insert(DEFAULT_EPSILON);
        c.output.format.get_or_insert(Format::Json);
        if c.posting.mean.is_some() {
            c.posting.dist.get_or_insert(DistName::Exponential);
        }
        c.cost.holding.get_or_insert(0.0);
        c.cost.reserve.get_or_insert(0.0);
        c.cost.posting.get_or_insert(0.0);
        if simulated {
            c.sim.seed.get_or_insert(DEFAULT_SEED);
            c.sim.postings.get_or_insert(DEFAULT_POSTINGS);
            c.sim.warmup_fraction.get_or_insert(DEFAULT_WARMUP);
        }
        c
    }
}

fn require<T>(x: Option<T>, key: &str, flag: &str) -> Result<T, CliError> {
    x.ok_or_else(|| CliError::config(format!("missing required setting {key} (flag {flag})")))
}
