//! Experiment configuration files.
//!
//! One TOML file drives single runs and whole suites:
//!
//! ```toml
//! [run]
//! algorithm = "qgp"
//! size = 6
//! obstacles = true
//! budget = 167
//! replicates = 10
//!
//! [sim]
//! ticks = 120
//!
//! [qgp]
//! population = 30
//!
//! [suite]
//! sizes = [3, 6, 12]
//! ```

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::erl::ErlConfig;
use crate::error::ConfigError;
use crate::psa::PsaConfig;
use crate::qgp::QgpConfig;
use crate::sim::{SimConfig, Weights};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Psa,
    Qgp,
    Erl,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Psa => "psa",
            Algorithm::Qgp => "qgp",
            Algorithm::Erl => "erl",
        }
    }
}

impl std::str::FromStr for Algorithm {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "psa" => Ok(Algorithm::Psa),
            "qgp" => Ok(Algorithm::Qgp),
            "erl" => Ok(Algorithm::Erl),
            _ => Err(ConfigError(format!("unknown algorithm {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    #[default]
    Sim,
    Rcon,
}

/// Instance to solve: a generated benchmark or a matrix file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ProblemSpec {
    Instance {
        size: usize,
        obstacles: bool,
        /// Seed for the obstacle layout.
        seed: u64,
    },
    File(PathBuf),
}

impl ProblemSpec {
    /// Short label used in trace files.
    pub fn id(&self) -> String {
        match self {
            ProblemSpec::Instance {
                size,
                obstacles: false,
                ..
            } => format!("{size}x{size}-empty"),
            ProblemSpec::Instance {
                size,
                obstacles: true,
                seed,
            } => format!("{size}x{size}-obst-s{seed}"),
            ProblemSpec::File(p) => p
                .file_stem()
                .map_or_else(|| "file".to_string(), |s| s.to_string_lossy().into_owned()),
        }
    }
}

/// Everything one `run` needs.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub algorithm: Algorithm,
    pub problem: ProblemSpec,
    /// Iterations (psa) or generations (qgp, erl).
    pub budget: u32,
    pub replicates: u32,
    /// Replicate `r` runs with seed `seed + r`.
    pub seed: u64,
    pub backend: BackendKind,
    pub weights: Weights,
    pub sim: SimConfig,
    pub psa: PsaConfig,
    pub qgp: QgpConfig,
    pub erl: ErlConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            algorithm: Algorithm::Psa,
            problem: ProblemSpec::Instance {
                size: 3,
                obstacles: false,
                seed: 0,
            },
            budget: 167,
            replicates: 1,
            seed: 0,
            backend: BackendKind::Sim,
            weights: Weights::default(),
            sim: SimConfig::default(),
            psa: PsaConfig::default(),
            qgp: QgpConfig::default(),
            erl: ErlConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.budget == 0 {
            return Err(ConfigError("budget must be at least 1".into()));
        }
        if self.replicates == 0 {
            return Err(ConfigError("replicates must be at least 1".into()));
        }
        self.sim.validate()?;
        match (&self.algorithm, &self.problem) {
            (Algorithm::Erl, ProblemSpec::File(_)) => Err(ConfigError(
                "erl trains on generated problems; give a size instead of a file".into(),
            )),
            (Algorithm::Erl, ProblemSpec::Instance { size, .. }) if !matches!(size, 3 | 6) => Err(
                ConfigError(format!("erl runs on sizes 3 and 6, not {size}")),
            ),
            (_, ProblemSpec::Instance { size: 0, .. }) => {
                Err(ConfigError("size must be at least 1".into()))
            }
            _ => Ok(()),
        }
    }

    /// Solver settings for replicate `r`, with budget and seed applied.
    pub fn psa_for(&self, r: u32) -> PsaConfig {
        PsaConfig {
            seed: self.seed + r as u64,
            ..self.psa
        }
        .with_budget(self.budget)
    }

    pub fn qgp_for(&self, r: u32) -> QgpConfig {
        QgpConfig {
            seed: self.seed + r as u64,
            generations: self.budget,
            ..self.qgp
        }
    }

    pub fn erl_for(&self, r: u32) -> ErlConfig {
        let (size, obstacles) = match self.problem {
            ProblemSpec::Instance { size, obstacles, .. } => (size, obstacles),
            ProblemSpec::File(_) => (self.erl.size, self.erl.obstacles),
        };
        ErlConfig {
            seed: self.seed + r as u64,
            generations: self.budget,
            size,
            obstacles,
            ..self.erl
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    pub algorithm: Algorithm,
    pub size: usize,
    pub obstacles: bool,
    /// Obstacle layout seed.
    pub instance_seed: u64,
    pub problem_file: Option<PathBuf>,
    pub budget: u32,
    pub replicates: u32,
    pub seed: u64,
    pub backend: BackendKind,
}

impl Default for RunSection {
    fn default() -> Self {
        RunSection {
            algorithm: Algorithm::Psa,
            size: 3,
            obstacles: false,
            instance_seed: 0,
            problem_file: None,
            budget: 167,
            replicates: 1,
            seed: 0,
            backend: BackendKind::Sim,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SuiteSection {
    pub algorithms: Vec<Algorithm>,
    pub sizes: Vec<usize>,
    pub erl_sizes: Vec<usize>,
    pub replicates: u32,
    pub budget: u32,
    /// Concurrent suite cells; 0 uses every core.
    pub workers: usize,
}

impl Default for SuiteSection {
    fn default() -> Self {
        SuiteSection {
            algorithms: vec![Algorithm::Psa, Algorithm::Qgp, Algorithm::Erl],
            sizes: vec![3, 6, 12],
            erl_sizes: vec![3],
            replicates: 10,
            budget: 167,
            workers: 0,
        }
    }
}

/// Parsed configuration file.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConfigFile {
    pub run: RunSection,
    pub sim: SimConfig,
    pub weights: Weights,
    pub psa: PsaConfig,
    pub qgp: QgpConfig,
    pub erl: ErlConfig,
    pub suite: SuiteSection,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<ConfigFile, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError(e.to_string()))
    }

    pub fn load(path: &std::path::Path) -> Result<ConfigFile, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
        ConfigFile::parse(&text)
    }

    pub fn run_config(&self) -> RunConfig {
        let r = &self.run;
        let problem = match &r.problem_file {
            Some(p) => ProblemSpec::File(p.clone()),
            None => ProblemSpec::Instance {
                size: r.size,
                obstacles: r.obstacles,
                seed: r.instance_seed,
            },
        };
        RunConfig {
            algorithm: r.algorithm,
            problem,
            budget: r.budget,
            replicates: r.replicates,
            seed: r.seed,
            backend: r.backend,
            weights: self.weights,
            sim: self.sim,
            psa: self.psa,
            qgp: self.qgp,
            erl: self.erl,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let c = ConfigFile::parse("").unwrap();
        assert_eq!(c, ConfigFile::default());
        assert_eq!(c.run_config(), RunConfig::default());
    }

    #[test]
    fn sections_override() {
        let c = ConfigFile::parse(
            r#"
            [run]
            algorithm = "qgp"
            size = 6
            obstacles = true
            replicates = 4

            [weights]
            w1 = 0.3
            w2 = 0.7

            [qgp]
            population = 12
            exec = "sequential"

            [suite]
            sizes = [3]
            "#,
        )
        .unwrap();
        let rc = c.run_config();
        assert_eq!(rc.algorithm, Algorithm::Qgp);
        assert_eq!(rc.problem.id(), "6x6-obst-s0");
        assert_eq!(rc.replicates, 4);
        assert_eq!(rc.weights.output(), 0.3);
        assert_eq!(rc.qgp.population, 12);
        assert_eq!(rc.qgp_for(2).seed, 2);
        assert_eq!(rc.qgp_for(2).generations, 167);
        assert_eq!(c.suite.sizes, vec![3]);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(ConfigFile::parse("[run]\nalgo = \"psa\"\n").is_err());
        assert!(ConfigFile::parse("[weights]\nw1 = 0.9\nw2 = 0.9\n").is_err());
        let rc = RunConfig {
            algorithm: Algorithm::Erl,
            problem: ProblemSpec::Instance {
                size: 12,
                obstacles: false,
                seed: 0,
            },
            ..RunConfig::default()
        };
        assert!(rc.validate().is_err());
        assert!(RunConfig {
            budget: 0,
            ..RunConfig::default()
        }
        .validate()
        .is_err());
    }

    #[test]
    fn psa_budget_is_exact() {
        let rc = RunConfig {
            budget: 50,
            ..RunConfig::default()
        };
        assert_eq!(rc.psa_for(0).iterations(), 50);
    }
}
