//! Pipeline configuration: defaults, optional TOML file, command-line
//! overrides, in that order of precedence.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::errors::CliError;

#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub gamma: f64,
    pub tau: f64,
    pub frame_rate: f64,
    pub vad_threshold_db: f64,
    pub voicing_threshold: f64,
    pub clamp: bool,
    pub paths: ConfigPaths,
}

#[derive(Debug, Clone, Default, Deserialize)]
pub struct ConfigPaths {
    pub features_dir: Option<PathBuf>,
    pub wav_dir: Option<PathBuf>,
    pub segments_dir: Option<PathBuf>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            gamma: 2.0,
            tau: urmx_core::units::DEFAULT_TEMPERATURE,
            frame_rate: urmx_core::units::DEFAULT_FRAME_RATE,
            vad_threshold_db: urmx_core::signal::DEFAULT_VAD_THRESHOLD_DB,
            voicing_threshold: urmx_core::signal::DEFAULT_VOICING_THRESHOLD,
            clamp: false,
            paths: ConfigPaths::default(),
        }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    gamma: Option<f64>,
    tau: Option<f64>,
    frame_rate: Option<f64>,
    vad_threshold_db: Option<f64>,
    voicing_threshold: Option<f64>,
    clamp: Option<bool>,
    #[serde(default)]
    paths: ConfigPaths,
}

impl PipelineConfig {
    /// Layered assembly: defaults, then the file, then explicit flags.
    pub fn resolve(
        config_path: Option<&Path>,
        gamma: Option<f64>,
        tau: Option<f64>,
        frame_rate: Option<f64>,
    ) -> Result<Self, CliError> {
        let mut config = PipelineConfig::default();
        if let Some(path) = config_path {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::input(&path.display().to_string(), e))?;
            let file: ConfigFile = toml::from_str(&text)
                .map_err(|e| CliError::input(&path.display().to_string(), e))?;
            if let Some(v) = file.gamma {
                config.gamma = v;
            }
            if let Some(v) = file.tau {
                config.tau = v;
            }
            if let Some(v) = file.frame_rate {
                config.frame_rate = v;
            }
            if let Some(v) = file.vad_threshold_db {
                config.vad_threshold_db = v;
            }
            if let Some(v) = file.voicing_threshold {
                config.voicing_threshold = v;
            }
            if let Some(v) = file.clamp {
                config.clamp = v;
            }
            config.paths = file.paths;
        }
        if let Some(v) = gamma {
            config.gamma = v;
        }
        if let Some(v) = tau {
            config.tau = v;
        }
        if let Some(v) = frame_rate {
            config.frame_rate = v;
        }
        config.validate()?;
        Ok(config)
    }

    fn validate(&self) -> Result<(), CliError> {
        let checks = [
            (self.gamma >= 0.0 && self.gamma.is_finite(), "gamma must be >= 0"),
            (self.tau > 0.0 && self.tau.is_finite(), "tau must be > 0"),
            (
                self.frame_rate > 0.0 && self.frame_rate.is_finite(),
                "frame_rate must be > 0",
            ),
            (
                self.vad_threshold_db > 0.0 && self.vad_threshold_db.is_finite(),
                "vad_threshold_db must be > 0",
            ),
            (
                self.voicing_threshold > 0.0 && self.voicing_threshold < 1.0,
                "voicing_threshold must be in (0, 1)",
            ),
        ];
        for (ok, msg) in checks {
            if !ok {
                return Err(CliError::Input(msg.to_string()));
            }
        }
        Ok(())
    }

    pub fn provenance(&self) -> urmx_core::rhythm::Provenance {
        urmx_core::rhythm::Provenance {
            gamma: self.gamma,
            tau: self.tau,
            linkage: "ward".to_string(),
            vad_threshold_db: self.vad_threshold_db,
            voicing_threshold: self.voicing_threshold,
        }
    }
}
