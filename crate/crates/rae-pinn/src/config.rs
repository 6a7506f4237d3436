//! Declarative experiment configuration.
//!
//! Experiments are described by TOML files. A file may name one of the
//! built-in presets (`preset = "ac1d_i1"`) and override any subset of
//! fields, or spell out every section from scratch. Loading resolves the
//! preset, applies overrides (recording which keys came from the file),
//! validates every field, and fixes the SHA-256 hash that output artifacts
//! embed.
//!
//! Grammar (all sections shown; any may be omitted when a preset is named):
//!
//! ```toml
//! preset = "ac1d_i1"          # optional: ac1d_i1 | ac1d_i2 | ac2d | ch1d | ch2d
//! seed = 0
//! output_dir = "runs/ac1d"
//! problem = "ch1d"            # named problem, or an inline [problem] table
//!
//! [counts]
//! n_int = 10000
//! n_sb = 256
//! n_tb = 512
//!
//! [network]
//! hidden = [128, 128]
//!
//! [weighting]
//! mode = "rae"                # rae | vanilla
//! k_int = 50
//! beta = 0.1
//! stride = 1
//!
//! [gammas]
//! gamma_int = 1.0
//! gamma_tb = 100.0
//! gamma_sb = 1.0
//!
//! [optimizer]
//! adam_iters = 30000
//! lbfgs_iters = 1000
//! base_lr = 1e-3
//! lr_decay_rate = 1.0         # 1.0 disables the schedule
//! lr_decay_every = 5000
//! early_stop_delta = 1e-7
//! log_every = 100
//! checkpoint_every = 0        # 0 = phase boundaries only
//!
//! [reference]
//! n_modes = 512               # power of two
//! dt = 1e-4
//! n_snapshots = 101           # uniform on [0, T]
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::loss::Gammas;
use crate::net::NetworkArch;
use crate::pde::{InitialCondition, ProblemKind, ProblemSpec};
use crate::sampling::Counts;
use crate::train::{TrainOptions, WeightingMode};

pub const PRESET_NAMES: [&str; 5] = ["ac1d_i1", "ac1d_i2", "ac2d", "ch1d", "ch2d"];

/// Named problems accepted for `problem = "<name>"`.
pub const PROBLEM_NAMES: [&str; 7] = [
    "ac1d_i1",
    "ac1d_i2",
    "ac2d",
    "ch1d",
    "ch2d",
    "ch1d_decoupled",
    "ch2d_decoupled",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WeightingModeName {
    Rae,
    Vanilla,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkConfig {
    pub hidden: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightingConfig {
    pub mode: WeightingModeName,
    pub k_int: usize,
    pub beta: f64,
    /// Recompute the adaptive weights every this many Adam iterations.
    pub stride: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizerConfig {
    pub adam_iters: u64,
    pub lbfgs_iters: usize,
    pub base_lr: f64,
    pub lr_decay_rate: f64,
    pub lr_decay_every: u64,
    pub early_stop_delta: f64,
    pub log_every: u64,
    pub checkpoint_every: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceConfig {
    pub n_modes: usize,
    pub dt: f64,
    /// Snapshots stored uniformly over [0, T], endpoints included.
    pub n_snapshots: usize,
}

/// Fully resolved experiment description. Field order keeps scalars ahead
/// of tables so the struct serializes directly to valid TOML.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub output_dir: String,
    pub problem: ProblemSpec,
    pub counts: Counts,
    pub network: NetworkConfig,
    pub weighting: WeightingConfig,
    pub gammas: Gammas,
    pub optimizer: OptimizerConfig,
    pub reference: ReferenceConfig,
}

/// A validated config plus where its values came from.
#[derive(Debug, Clone)]
pub struct ResolvedConfig {
    pub config: ExperimentConfig,
    /// Preset the file started from, if any.
    pub preset: Option<String>,
    /// Dotted paths of keys the file supplied on top of the preset.
    pub overridden: Vec<String>,
    pub hash: [u8; 32],
}

fn cfg_err(path: &str, message: impl Into<String>) -> Error {
    Error::Config {
        path: path.into(),
        message: message.into(),
    }
}

pub fn named_problem(name: &str) -> Result<ProblemSpec> {
    let spec = match name {
        "ac1d_i1" => ProblemSpec::ac1d(InitialCondition::AcI1),
        "ac1d_i2" => ProblemSpec::ac1d(InitialCondition::AcI2),
        "ac2d" => ProblemSpec::ac2d(),
        "ch1d" => ProblemSpec::ch1d(),
        "ch2d" => ProblemSpec::ch2d(),
        "ch1d_decoupled" => {
            let mut s = ProblemSpec::ch1d();
            s.kind = ProblemKind::ChDecoupled;
            s
        }
        "ch2d_decoupled" => {
            let mut s = ProblemSpec::ch2d();
            s.kind = ProblemKind::ChDecoupled;
            s
        }
        _ => {
            return Err(cfg_err(
                "problem",
                format!("unknown problem `{name}`; expected one of {PROBLEM_NAMES:?}"),
            ))
        }
    };
    Ok(spec)
}

pub fn preset(name: &str) -> Result<ExperimentConfig> {
    let base_weighting = WeightingConfig {
        mode: WeightingModeName::Rae,
        k_int: 50,
        beta: 0.1,
        stride: 1,
    };
    let base_optimizer = OptimizerConfig {
        adam_iters: 30_000,
        lbfgs_iters: 1000,
        base_lr: 1e-3,
        lr_decay_rate: 1.0,
        lr_decay_every: 5000,
        early_stop_delta: 1e-7,
        log_every: 100,
        checkpoint_every: 0,
    };
    let cfg = match name {
        "ac1d_i1" | "ac1d_i2" => ExperimentConfig {
            seed: 0,
            output_dir: format!("runs/{name}"),
            problem: named_problem(name)?,
            counts: Counts {
                n_int: 10_000,
                n_sb: 256,
                n_tb: 512,
            },
            network: NetworkConfig {
                hidden: vec![128, 128],
            },
            weighting: base_weighting,
            gammas: Gammas {
                gamma_int: 1.0,
                gamma_tb: 100.0,
                gamma_sb: 1.0,
            },
            optimizer: base_optimizer,
            reference: ReferenceConfig {
                n_modes: 512,
                dt: 1e-4,
                n_snapshots: 101,
            },
        },
        "ac2d" => ExperimentConfig {
            seed: 0,
            output_dir: "runs/ac2d".into(),
            problem: named_problem(name)?,
            counts: Counts {
                n_int: 25_600,
                n_sb: 512,
                n_tb: 1024,
            },
            network: NetworkConfig {
                hidden: vec![128, 128],
            },
            weighting: base_weighting,
            gammas: Gammas {
                gamma_int: 1.0,
                gamma_tb: 100.0,
                gamma_sb: 1.0,
            },
            optimizer: OptimizerConfig {
                adam_iters: 100_000,
                lbfgs_iters: 0,
                lr_decay_rate: 0.9,
                ..base_optimizer
            },
            reference: ReferenceConfig {
                n_modes: 128,
                dt: 1e-3,
                n_snapshots: 51,
            },
        },
        "ch1d" => ExperimentConfig {
            seed: 0,
            output_dir: "runs/ch1d".into(),
            problem: named_problem(name)?,
            counts: Counts {
                n_int: 10_000,
                n_sb: 256,
                n_tb: 512,
            },
            network: NetworkConfig {
                hidden: vec![256, 256],
            },
            weighting: base_weighting,
            gammas: Gammas {
                gamma_int: 1.0,
                gamma_tb: 100.0,
                gamma_sb: 1.0,
            },
            optimizer: OptimizerConfig {
                adam_iters: 5000,
                lbfgs_iters: 1000,
                ..base_optimizer
            },
            reference: ReferenceConfig {
                n_modes: 512,
                dt: 1e-5,
                n_snapshots: 51,
            },
        },
        "ch2d" => ExperimentConfig {
            seed: 0,
            output_dir: "runs/ch2d".into(),
            problem: named_problem(name)?,
            counts: Counts {
                n_int: 10_000,
                n_sb: 256,
                n_tb: 512,
            },
            network: NetworkConfig {
                hidden: vec![128, 128],
            },
            weighting: base_weighting,
            gammas: Gammas {
                gamma_int: 1.0,
                gamma_tb: 100.0,
                gamma_sb: 100.0,
            },
            optimizer: OptimizerConfig {
                adam_iters: 50_000,
                lbfgs_iters: 10_000,
                lr_decay_rate: 0.95,
                ..base_optimizer
            },
            reference: ReferenceConfig {
                n_modes: 128,
                dt: 1e-6,
                n_snapshots: 31,
            },
        },
        _ => {
            return Err(cfg_err(
                "preset",
                format!("unknown preset `{name}`; expected one of {PRESET_NAMES:?}"),
            ))
        }
    };
    Ok(cfg)
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        self.problem
            .validate()
            .map_err(|e| cfg_err("problem", e.to_string()))?;
        if self.counts.n_int == 0 || self.counts.n_sb == 0 || self.counts.n_tb == 0 {
            return Err(cfg_err("counts", "all point counts must be positive"));
        }
        if self.network.hidden.is_empty() || self.network.hidden.contains(&0) {
            return Err(cfg_err(
                "network.hidden",
                "need at least one hidden layer of positive width",
            ));
        }
        if self.weighting.k_int == 0 || self.weighting.k_int >= self.counts.n_int {
            return Err(cfg_err(
                "weighting.k_int",
                format!(
                    "k_int {} must be in [1, n_int) = [1, {})",
                    self.weighting.k_int, self.counts.n_int
                ),
            ));
        }
        if !(self.weighting.beta > 0.0 && self.weighting.beta <= 1.0) {
            return Err(cfg_err(
                "weighting.beta",
                format!("beta {} not in (0, 1]", self.weighting.beta),
            ));
        }
        if self.weighting.stride == 0 {
            return Err(cfg_err("weighting.stride", "stride must be at least 1"));
        }
        for (v, path) in [
            (self.gammas.gamma_int, "gammas.gamma_int"),
            (self.gammas.gamma_tb, "gammas.gamma_tb"),
            (self.gammas.gamma_sb, "gammas.gamma_sb"),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(cfg_err(path, format!("must be positive and finite, got {v}")));
            }
        }
        let o = &self.optimizer;
        if !(o.base_lr > 0.0 && o.base_lr.is_finite()) {
            return Err(cfg_err("optimizer.base_lr", "must be positive and finite"));
        }
        if !(o.lr_decay_rate > 0.0 && o.lr_decay_rate <= 1.0) {
            return Err(cfg_err("optimizer.lr_decay_rate", "must be in (0, 1]"));
        }
        if o.lr_decay_every == 0 {
            return Err(cfg_err("optimizer.lr_decay_every", "must be at least 1"));
        }
        if !(o.early_stop_delta >= 0.0) {
            return Err(cfg_err("optimizer.early_stop_delta", "must be non-negative"));
        }
        if o.log_every == 0 {
            return Err(cfg_err("optimizer.log_every", "must be at least 1"));
        }
        if o.adam_iters == 0 && o.lbfgs_iters == 0 {
            return Err(cfg_err("optimizer", "need a positive iteration budget"));
        }
        let r = &self.reference;
        if !r.n_modes.is_power_of_two() || r.n_modes < 8 {
            return Err(cfg_err(
                "reference.n_modes",
                format!("{} must be a power of two (at least 8)", r.n_modes),
            ));
        }
        if !(r.dt > 0.0 && r.dt <= self.problem.horizon) {
            return Err(cfg_err(
                "reference.dt",
                format!("dt {} not in (0, horizon]", r.dt),
            ));
        }
        if r.n_snapshots < 2 {
            return Err(cfg_err(
                "reference.n_snapshots",
                "need at least the initial and final snapshots",
            ));
        }
        if self.output_dir.is_empty() {
            return Err(cfg_err("output_dir", "must not be empty"));
        }
        Ok(())
    }

    /// Stable identifier of the physics being solved; artifacts produced
    /// from configs that disagree on it refuse to combine.
    pub fn problem_id(&self) -> String {
        problem_id(&self.problem)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self)
            .map_err(|e| cfg_err("<serialize>", e.to_string()))
    }

    /// SHA-256 of the canonical TOML form.
    pub fn hash(&self) -> Result<[u8; 32]> {
        let text = self.to_toml_string()?;
        Ok(Sha256::digest(text.as_bytes()).into())
    }

    pub fn arch(&self) -> Result<NetworkArch> {
        let output_dim = match self.problem.kind {
            ProblemKind::ChDecoupled => 2,
            _ => 1,
        };
        NetworkArch::new(
            self.problem.input_dim(),
            self.network.hidden.clone(),
            output_dim,
        )
    }

    pub fn weighting_mode(&self) -> WeightingMode {
        match self.weighting.mode {
            WeightingModeName::Rae => WeightingMode::Rae {
                k_int: self.weighting.k_int,
                beta: self.weighting.beta,
                stride: self.weighting.stride,
            },
            WeightingModeName::Vanilla => WeightingMode::Vanilla,
        }
    }

    pub fn train_options(&self) -> Result<TrainOptions> {
        Ok(TrainOptions {
            adam_iters: self.optimizer.adam_iters,
            lbfgs_iters: self.optimizer.lbfgs_iters,
            base_lr: self.optimizer.base_lr,
            lr_decay_rate: self.optimizer.lr_decay_rate,
            lr_decay_every: self.optimizer.lr_decay_every,
            weighting: self.weighting_mode(),
            log_every: self.optimizer.log_every,
            checkpoint_every: self.optimizer.checkpoint_every,
            early_stop_delta: self.optimizer.early_stop_delta,
            seed: self.seed,
            problem_id: self.problem_id(),
            config_hash: self.hash()?,
        })
    }

    /// Uniform snapshot times over [0, T], endpoints included.
    pub fn snapshot_times(&self) -> Vec<f64> {
        let n = self.reference.n_snapshots;
        let t = self.problem.horizon;
        (0..n).map(|i| t * i as f64 / (n - 1) as f64).collect()
    }
}

pub fn problem_id(spec: &ProblemSpec) -> String {
    let kind = match spec.kind {
        ProblemKind::Ac => "ac",
        ProblemKind::ChCoupled => "ch",
        ProblemKind::ChDecoupled => "chdec",
    };
    format!("{kind}{}d:{}", spec.space_dim, spec.ic.name())
}

const REQUIRED_FIELDS: [&str; 9] = [
    "seed",
    "output_dir",
    "problem",
    "counts",
    "network",
    "weighting",
    "gammas",
    "optimizer",
    "reference",
];

/// Overlay `over` onto `base`, recording the dotted path of every
/// leaf the overlay supplies.
fn merge_tables(
    base: &mut toml::Table,
    over: toml::Table,
    prefix: &str,
    overridden: &mut Vec<String>,
) {
    for (key, value) in over {
        let path = if prefix.is_empty() {
            key.clone()
        } else {
            format!("{prefix}.{key}")
        };
        match (base.get_mut(&key), value) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) => {
                merge_tables(b, o, &path, overridden);
            }
            (_, v) => {
                base.insert(key, v);
                overridden.push(path);
            }
        }
    }
}

pub fn from_toml_str(text: &str, origin: &str) -> Result<ResolvedConfig> {
    let mut file_table: toml::Table = text
        .parse()
        .map_err(|e: toml::de::Error| cfg_err(origin, e.to_string()))?;

    let preset_name = match file_table.remove("preset") {
        None => None,
        Some(toml::Value::String(s)) => Some(s),
        Some(v) => {
            return Err(cfg_err(
                "preset",
                format!("expected a preset name string, got {}", v.type_str()),
            ))
        }
    };

    // A bare problem name expands to the corresponding inline table.
    if let Some(toml::Value::String(name)) = file_table.get("problem") {
        let spec = named_problem(name)?;
        let inline = toml::Value::try_from(&spec)
            .map_err(|e| cfg_err("problem", e.to_string()))?;
        file_table.insert("problem".into(), inline);
    }

    let mut overridden = Vec::new();
    let merged = match &preset_name {
        Some(name) => {
            let base_cfg = preset(name)?;
            let base_val = toml::Value::try_from(&base_cfg)
                .map_err(|e| cfg_err(origin, e.to_string()))?;
            let mut base = match base_val {
                toml::Value::Table(t) => t,
                _ => unreachable!("config serializes to a table"),
            };
            merge_tables(&mut base, file_table, "", &mut overridden);
            base
        }
        None => {
            let missing: Vec<&str> = REQUIRED_FIELDS
                .iter()
                .copied()
                .filter(|k| !file_table.contains_key(*k))
                .collect();
            if !missing.is_empty() {
                return Err(cfg_err(
                    origin,
                    format!(
                        "no preset named and required fields missing: {}",
                        missing.join(", ")
                    ),
                ));
            }
            file_table
        }
    };

    let config: ExperimentConfig = toml::Value::Table(merged)
        .try_into()
        .map_err(|e: toml::de::Error| cfg_err(origin, e.to_string()))?;
    config.validate()?;
    let hash = config.hash()?;
    Ok(ResolvedConfig {
        config,
        preset: preset_name,
        overridden,
        hash,
    })
}

pub fn load_config(path: &Path) -> Result<ResolvedConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Config {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    from_toml_str(&text, &path.display().to_string())
}
