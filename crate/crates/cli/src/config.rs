//! Run configuration file.
//!
//! One TOML file names every input of a run. All blocks are optional and fall
//! back to the library defaults; `crates/cli/examples/run.toml` documents each
//! field.

use std::path::{Path, PathBuf};

use ankle_wfm::optimizer::DEFAULT_SEED;
use ankle_wfm::pipeline::{MuscleConfig, SearchMode};
use ankle_wfm::synthetic::SyntheticCohort;
use ankle_wfm::{ActivationCurve, AttachmentGeometry, ModelSetup, MusclePair, PsoConfig, SimulationConfig};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const DEFAULT_OUTPUT_DIR: &str = "ankle-wfm-out";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Relative paths resolve against the config file's directory.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub data: DataConfig,
    #[serde(default)]
    pub activation: ActivationConfig,
    #[serde(default)]
    pub search: SearchConfig,
    #[serde(default)]
    pub pso: PsoConfig,
    #[serde(default)]
    pub simulation: SimulationConfig,
    #[serde(default)]
    pub synthetic: SyntheticConfig,
    #[serde(default = "default_muscles")]
    pub muscles: MusclePair<MuscleConfig>,
    #[serde(default = "default_geometry")]
    pub geometry: MusclePair<AttachmentGeometry>,
}

fn default_muscles() -> MusclePair<MuscleConfig> {
    ModelSetup::default().muscles
}

fn default_geometry() -> MusclePair<AttachmentGeometry> {
    ModelSetup::default().geometry
}

/// Trial CSV files. Relative paths resolve against the config file's
/// directory.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    pub train: Vec<PathBuf>,
    pub test: Vec<PathBuf>,
}

/// Peak amplitudes used by `simulate` and `evaluate`, and optional custom
/// activation templates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ActivationConfig {
    pub anterior: f64,
    pub posterior: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub templates: Option<MusclePair<ActivationCurve>>,
}

impl Default for ActivationConfig {
    fn default() -> Self {
        Self {
            anterior: 0.05,
            posterior: 0.1,
            templates: None,
        }
    }
}

impl ActivationConfig {
    pub fn templates(&self) -> Result<MusclePair<ActivationCurve>, ankle_wfm::Error> {
        match &self.templates {
            Some(t) => Ok(t.clone()),
            None => MusclePair::<ActivationCurve>::templates(0.0, 0.0),
        }
    }

    pub fn curves(&self) -> Result<MusclePair<ActivationCurve>, ankle_wfm::Error> {
        self.templates()?.with_amplitudes(self.anterior, self.posterior)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchConfig {
    pub mode: SearchMode,
}

/// Inputs of `gen-synthetic`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticConfig {
    pub anterior: f64,
    pub posterior: f64,
    pub noise_sd: f64,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cohort: Option<SyntheticCohort>,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            anterior: 0.05,
            posterior: 0.1,
            noise_sd: 0.0,
            seed: DEFAULT_SEED,
            cohort: None,
        }
    }
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            output_dir: None,
            data: DataConfig::default(),
            activation: ActivationConfig::default(),
            search: SearchConfig::default(),
            pso: PsoConfig::default(),
            simulation: SimulationConfig::default(),
            synthetic: SyntheticConfig::default(),
            muscles: default_muscles(),
            geometry: default_geometry(),
        }
    }
}

fn field<T>(block: &str, r: Result<T, ankle_wfm::Error>) -> Result<T, CliError> {
    r.map_err(|e| CliError::config(format!("{block}: {e}")))
}

impl RunConfig {
    /// Parse, resolve relative paths against the file's directory, and
    /// validate.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let mut cfg: RunConfig =
            toml::from_str(&text).map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.resolve_paths(base);
        cfg.validate()?;
        Ok(cfg)
    }

    fn resolve_paths(&mut self, base: &Path) {
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        self.data.train.iter_mut().for_each(resolve);
        self.data.test.iter_mut().for_each(resolve);
        if let Some(out) = self.output_dir.as_mut() {
            resolve(out);
        }
    }

    pub fn setup(&self) -> ModelSetup {
        ModelSetup {
            muscles: self.muscles,
            geometry: self.geometry,
        }
    }

    /// Swarm settings with the search mode's bounds filled in when unset.
    pub fn pso_config(&self) -> PsoConfig {
        let mut pso = self.pso.clone();
        if pso.bounds.is_empty() {
            pso.bounds = self.search.mode.default_bounds();
        }
        pso
    }

    pub fn validate(&self) -> Result<(), CliError> {
        for (split, paths) in [("data.train", &self.data.train), ("data.test", &self.data.test)] {
            for (i, p) in paths.iter().enumerate() {
                if !p.is_file() {
                    return Err(CliError::config(format!("{split}[{i}]: no such file {}", p.display())));
                }
            }
        }
        field("activation", self.activation.curves())?;
        field("simulation", self.simulation.validate())?;
        field("muscles.anterior", self.muscles.anterior.validate())?;
        field("muscles.posterior", self.muscles.posterior.validate())?;
        field("geometry.anterior", self.geometry.anterior.validate())?;
        field("geometry.posterior", self.geometry.posterior.validate())?;
        field("geometry", self.setup().validate())?;
        let pso = self.pso_config();
        field("pso", pso.validate())?;
        if pso.dim() != self.search.mode.dims() {
            return Err(CliError::config(format!(
                "pso.bounds: {:?} search needs {} bounds, got {}",
                self.search.mode,
                self.search.mode.dims(),
                pso.dim()
            )));
        }
        let s = &self.synthetic;
        field(
            "synthetic",
            self.activation.templates()?.with_amplitudes(s.anterior, s.posterior),
        )?;
        if !(s.noise_sd >= 0.0 && s.noise_sd.is_finite()) {
            return Err(CliError::config(format!(
                "synthetic.noise_sd must be >= 0, got {}",
                s.noise_sd
            )));
        }
        Ok(())
    }

    pub fn to_toml(&self) -> Result<String, CliError> {
        toml::to_string(self).map_err(|e| CliError::config(format!("cannot serialize config: {e}")))
    }
}
