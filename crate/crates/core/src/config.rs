//! Experiment configuration files (TOML).

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::density::MixtureDensity;
use crate::error::{Error, Result};
use crate::gain::{GainSchedule, ValidationReport};
use crate::harness::{Algorithm, RunSpec};
use crate::kernels::{CrossoverConfig, RwProposal};
use crate::partition::EnergyPartition;
use crate::samc::{CheckpointGrid, SamcConfig};
use crate::state::{DesiredDist, InitBox, DEFAULT_THETA_BOUND};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlgorithmKind {
    Samc,
    PopSamc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Spacing {
    #[default]
    Linear,
    Geometric,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PiSpec {
    Named(String),
    Explicit(Vec<f64>),
}

impl Default for PiSpec {
    fn default() -> Self {
        PiSpec::Named("uniform".into())
    }
}

fn default_kappa() -> usize {
    1
}
fn default_checkpoints() -> usize {
    100
}
fn default_init_box() -> [f64; 2] {
    [0.0, 1.0]
}
fn default_proposal_variance() -> f64 {
    4.0
}
fn default_theta_bound() -> f64 {
    DEFAULT_THETA_BOUND
}
fn default_oracle_samples() -> u64 {
    100_000_000
}

/// Raw contents of a configuration file. Region indices are one-based.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub name: Option<String>,
    /// Mixture CSV, relative to the configuration file.
    pub density: PathBuf,
    #[serde(default)]
    pub cutpoints: Option<Vec<f64>>,
    #[serde(default)]
    pub energy_min: Option<f64>,
    #[serde(default)]
    pub energy_step: Option<f64>,
    #[serde(default)]
    pub energy_max: Option<f64>,
    #[serde(default)]
    pub pi: PiSpec,
    pub t0: f64,
    pub beta: f64,
    pub algorithm: AlgorithmKind,
    #[serde(default = "default_kappa")]
    pub kappa: usize,
    #[serde(default)]
    pub crossover_rate: f64,
    pub iterations: u64,
    pub replications: usize,
    #[serde(default)]
    pub full_scale_iterations: Option<u64>,
    #[serde(default)]
    pub full_scale_replications: Option<usize>,
    #[serde(default = "default_checkpoints")]
    pub checkpoints: usize,
    #[serde(default)]
    pub checkpoint_spacing: Spacing,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub empty_regions: Vec<usize>,
    #[serde(default = "default_init_box")]
    pub init_box: [f64; 2],
    #[serde(default = "default_proposal_variance")]
    pub proposal_variance: f64,
    #[serde(default = "default_theta_bound")]
    pub theta_bound: f64,
    /// Regions entering the MSE; all regions when absent.
    #[serde(default)]
    pub tracked_regions: Option<Vec<usize>>,
    #[serde(default = "default_oracle_samples")]
    pub oracle_samples: u64,
    #[serde(default)]
    pub oracle_seed: u64,
    /// Output directory, relative to the working directory.
    #[serde(default)]
    pub output: Option<PathBuf>,
}

fn field(name: &str, msg: impl fmt::Display) -> Error {
    Error::Config(format!("{name}: {msg}"))
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))
    }

    /// Reads a file and makes `density` relative to the working directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = toml::from_str::<Self>(&text).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            message: e.message().to_string(),
        })?;
        if cfg.density.is_relative() {
            let dir = path.parent().unwrap_or(Path::new(""));
            cfg.density = dir.join(&cfg.density);
        }
        if cfg.name.is_none() {
            cfg.name = path.file_stem().map(|s| s.to_string_lossy().into_owned());
        }
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    /// Switches to the full-scale iteration and replication counts.
    pub fn full_scale(mut self) -> Self {
        if let Some(n) = self.full_scale_iterations {
            self.iterations = n;
        }
        if let Some(r) = self.full_scale_replications {
            self.replications = r;
        }
        self
    }

    pub fn partition(&self) -> Result<EnergyPartition> {
        match (
            &self.cutpoints,
            self.energy_min,
            self.energy_step,
            self.energy_max,
        ) {
            (Some(c), None, None, None) => {
                EnergyPartition::new(c.clone()).map_err(|e| field("cutpoints", e))
            }
            (None, Some(lo), Some(step), Some(hi)) => {
                EnergyPartition::uniform(lo, step, hi).map_err(|e| field("energy_step", e))
            }
            (None, ..) => Err(field(
                "cutpoints",
                "give either `cutpoints` or all of `energy_min`, `energy_step`, `energy_max`",
            )),
            (Some(_), ..) => Err(field(
                "cutpoints",
                "`cutpoints` cannot be combined with `energy_min`/`energy_step`/`energy_max`",
            )),
        }
    }

    pub fn schedule(&self) -> Result<GainSchedule> {
        if !(self.t0 > 0.0 && self.t0.is_finite()) {
            return Err(field("t0", "must be positive"));
        }
        GainSchedule::new(self.t0, self.beta).map_err(|e| field("beta", e))
    }

    /// Checks every field and loads the density.
    pub fn resolve(&self) -> Result<Experiment> {
        let partition = self.partition()?;
        let m = partition.len();
        let pi = match &self.pi {
            PiSpec::Named(s) if s == "uniform" => DesiredDist::uniform(m),
            PiSpec::Named(s) => return Err(field("pi", format!("unknown distribution `{s}`"))),
            PiSpec::Explicit(v) if v.len() != m => {
                return Err(field(
                    "pi",
                    format!("has {} entries but the partition has {m} regions", v.len()),
                ))
            }
            PiSpec::Explicit(v) => DesiredDist::new(v.clone()),
        }
        .map_err(|e| field("pi", e))?;

        let schedule = self.schedule()?;
        let validation = schedule.validate();
        if !validation.passed() {
            return Err(field("beta", &validation));
        }

        let algorithm = match self.algorithm {
            AlgorithmKind::Samc => {
                if self.kappa != 1 {
                    return Err(field("kappa", "must be 1 for algorithm = \"samc\""));
                }
                if self.crossover_rate != 0.0 {
                    return Err(field("crossover_rate", "requires algorithm = \"pop_samc\""));
                }
                Algorithm::Samc
            }
            AlgorithmKind::PopSamc => {
                if self.kappa == 0 {
                    return Err(field("kappa", "must be at least 1"));
                }
                let crossover = if self.crossover_rate > 0.0 {
                    if self.kappa < 2 {
                        return Err(field("crossover_rate", "crossover needs kappa >= 2"));
                    }
                    Some(
                        CrossoverConfig::new(self.crossover_rate)
                            .map_err(|e| field("crossover_rate", e))?,
                    )
                } else if self.crossover_rate < 0.0 {
                    return Err(field("crossover_rate", "must be in [0, 1)"));
                } else {
                    None
                };
                Algorithm::PopSamc {
                    kappa: self.kappa,
                    crossover,
                }
            }
        };

        if self.iterations == 0 {
            return Err(field("iterations", "must be positive"));
        }
        if self.replications < 2 {
            return Err(field("replications", "at least 2 runs are needed"));
        }
        if self.checkpoints == 0 {
            return Err(field("checkpoints", "must be positive"));
        }
        let one_based = |name: &str, v: &[usize]| -> Result<Vec<usize>> {
            v.iter()
                .map(|&i| {
                    if (1..=m).contains(&i) {
                        Ok(i - 1)
                    } else {
                        Err(field(name, format!("region {i} is outside 1..={m}")))
                    }
                })
                .collect()
        };
        let empty_regions = one_based("empty_regions", &self.empty_regions)?;
        let tracked = match &self.tracked_regions {
            Some(v) if v.is_empty() => return Err(field("tracked_regions", "must not be empty")),
            Some(v) => one_based("tracked_regions", v)?,
            None => (0..m).collect(),
        };
        let init_box =
            InitBox::new(self.init_box[0], self.init_box[1]).map_err(|e| field("init_box", e))?;
        let proposal =
            RwProposal::new(self.proposal_variance).map_err(|e| field("proposal_variance", e))?;
        let checkpoints = match self.checkpoint_spacing {
            Spacing::Linear => CheckpointGrid::Linear {
                count: self.checkpoints,
            },
            Spacing::Geometric => CheckpointGrid::Geometric {
                count: self.checkpoints,
                first: 100,
            },
        };
        let config = SamcConfig {
            partition,
            pi,
            schedule,
            proposal,
            iterations: self.iterations,
            checkpoints,
            empty_regions,
            init_box,
            theta_bound: self.theta_bound,
        };
        config.validate().map_err(|e| field("empty_regions", e))?;

        let density = MixtureDensity::load(&self.density).map_err(|e| field("density", e))?;
        let name = self.name.clone().unwrap_or_else(|| "experiment".into());
        Ok(Experiment {
            spec: RunSpec {
                label: name.clone(),
                algorithm,
                config,
            },
            name,
            density,
            replications: self.replications,
            seed: self.seed,
            tracked,
            oracle_samples: self.oracle_samples,
            oracle_seed: self.oracle_seed,
            validation,
        })
    }
}

/// A validated configuration ready to run.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub name: String,
    pub density: MixtureDensity,
    pub spec: RunSpec,
    pub replications: usize,
    pub seed: u64,
    /// Zero-based regions entering the MSE.
    pub tracked: Vec<usize>,
    pub oracle_samples: u64,
    pub oracle_seed: u64,
    pub validation: ValidationReport,
}
