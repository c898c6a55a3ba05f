pub mod cluster_units;
pub mod convert;
pub mod eval_lengths;
pub mod eval_wasserstein;
pub mod fit;
pub mod gen_synthetic;
pub mod label_clusters;
pub mod rate;
pub mod segment;

use std::path::Path;

use urmx_core::signal::{frame_flags, read_wav, FlagConfig, FrameFlags};
use urmx_core::units::{read_matrix_with_rate, Codebook};

use crate::config::PipelineConfig;
use crate::errors::CliError;

/// Loads a codebook matrix and applies the configured temperature.
pub fn load_codebook(path: &Path, config: &PipelineConfig) -> Result<Codebook, CliError> {
    let matrix = read_matrix_with_rate(path, config.frame_rate)
        .map_err(|e| CliError::input(&path.display().to_string(), e))?;
    Codebook::from_matrix(&matrix, config.tau)
        .map_err(|e| CliError::input(&path.display().to_string(), e))
}

/// Silence/voicing flags for one wav, reconciled to the feature frame
/// count. A drift of more than one frame between audio and features is an
/// input error; a single boundary frame is trimmed or replicated.
pub fn flags_for_wav(
    path: &Path,
    frames: usize,
    config: &PipelineConfig,
) -> Result<FrameFlags, CliError> {
    let wav = read_wav(path).map_err(|e| CliError::input(&path.display().to_string(), e))?;
    let flag_config = FlagConfig {
        vad_threshold_db: config.vad_threshold_db,
        voicing_threshold: config.voicing_threshold,
        ..FlagConfig::for_frame_rate(wav.sample_rate(), config.frame_rate)
    };
    let mut flags = frame_flags(&wav, &flag_config)
        .map_err(|e| CliError::input(&path.display().to_string(), e))?;
    let have = flags.silent.len();
    if have.abs_diff(frames) > 1 {
        return Err(CliError::Input(format!(
            "{}: {} flag frames for {} feature frames",
            path.display(),
            have,
            frames
        )));
    }
    let last_silent = flags.silent.last().copied().unwrap_or(true);
    flags.silent.resize(frames, last_silent);
    flags.voiced.resize(frames, false);
    Ok(flags)
}
