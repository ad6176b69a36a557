use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use twostage_core::algorithms::{AlgoConfig, AlgoKind};
use twostage_core::benchmark::HindsightOptions;
use twostage_core::scenarios::ScenarioSpec;

use crate::error::CliError;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BenchmarkMode {
    Hindsight,
    #[default]
    Fluid,
    /// Fluid in `summary.csv`, hindsight in `summary_hindsight.csv`.
    Both,
}

/// One experiment, read from a single JSON document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub scenario: ScenarioSpec,
    pub algorithms: Vec<AlgoKind>,
    pub reps: usize,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub benchmark: BenchmarkMode,
    /// Worker threads; `0` uses every core.
    pub parallelism: usize,
    pub dump_trajectories: bool,
    pub algo: AlgoConfig,
    /// SAA draws per segment for the fluid benchmark.
    pub fluid_samples: usize,
    pub hindsight: HindsightOptions,
    /// Off by default so that repeated runs write identical files.
    pub record_wall_ms: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            scenario: ScenarioSpec::default(),
            algorithms: vec![AlgoKind::Dal, AlgoKind::Ial],
            reps: 1,
            seed: 0,
            out: None,
            benchmark: BenchmarkMode::Fluid,
            parallelism: 1,
            dump_trajectories: false,
            algo: AlgoConfig::default(),
            fluid_samples: 1024,
            hindsight: HindsightOptions::default(),
            record_wall_ms: false,
        }
    }
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub reps: Option<usize>,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config(format!("config: {e}")))
    }

    pub fn load(path: &Path, overrides: &Overrides) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::parse(&text)?;
        cfg.apply(overrides);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(out) = &o.out {
            self.out = Some(out.clone());
        }
        if let Some(seed) = o.seed {
            self.seed = seed;
        }
        if let Some(reps) = o.reps {
            self.reps = reps;
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.reps == 0 {
            return Err(CliError::Config("reps must be at least 1".into()));
        }
        if self.algorithms.is_empty() {
            return Err(CliError::Config("no algorithms listed".into()));
        }
        if self.fluid_samples == 0 {
            return Err(CliError::Config("fluid_samples must be positive".into()));
        }
        let out = self.out_dir()?;
        if out.exists() && !out.is_dir() {
            return Err(CliError::Config(format!(
                "{} is not a directory",
                out.display()
            )));
        }
        Ok(())
    }

    pub fn out_dir(&self) -> Result<&Path, CliError> {
        self.out
            .as_deref()
            .ok_or_else(|| CliError::Config("no output directory (set `out` or pass --out)".into()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_fill_missing_fields() {
        let cfg =
            RunConfig::parse(r#"{"scenario": {"case": "d", "horizon": 500}, "reps": 3}"#).unwrap();
        assert_eq!(cfg.scenario.horizon, 500);
        assert_eq!(cfg.reps, 3);
        assert_eq!(cfg.algorithms, vec![AlgoKind::Dal, AlgoKind::Ial]);
        assert_eq!(cfg.benchmark, BenchmarkMode::Fluid);
    }

    #[test]
    fn unknown_fields_are_rejected() {
        assert!(RunConfig::parse(r#"{"repetitions": 3}"#).is_err());
    }

    #[test]
    fn overrides_win() {
        let mut cfg = RunConfig {
            out: Some("a".into()),
            ..RunConfig::default()
        };
        cfg.apply(&Overrides {
            out: Some("b".into()),
            seed: Some(9),
            reps: Some(4),
        });
        assert_eq!(
            (cfg.out.unwrap(), cfg.seed, cfg.reps),
            (PathBuf::from("b"), 9, 4)
        );
    }

    #[test]
    fn zero_reps_is_a_config_error() {
        let cfg = RunConfig {
            reps: 0,
            out: Some("x".into()),
            ..RunConfig::default()
        };
        assert_eq!(cfg.validate().unwrap_err().exit_code(), 1);
    }
}
