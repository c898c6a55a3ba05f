//! `urmx fit`: full rhythm-model estimation for one speaker corpus -
//! cluster labeling, speaking rate, and per-class gamma fits, written as a
//! model JSON with provenance.

use std::path::PathBuf;

use clap::Args as ClapArgs;
use urmx_core::rhythm::{
    class_durations, estimate_speaking_rate, fit_gamma, save_model, ClassModel, ClassModels,
    RhythmModel, MODEL_FORMAT_VERSION,
};
use urmx_core::SoundClass;

use crate::config::PipelineConfig;
use crate::errors::{classify_rhythm, CliError};
use crate::io_util::atomic_write;

use super::label_clusters::{build_merged_corpus, label_corpus, load_assignment, resolve_dir};

#[derive(ClapArgs)]
pub struct Args {
    #[arg(long)]
    pub segments_dir: Option<PathBuf>,

    #[arg(long)]
    pub clusters: PathBuf,

    #[arg(long)]
    pub wav_dir: Option<PathBuf>,

    /// Rhythm model JSON
    #[arg(long)]
    pub out: PathBuf,

    /// Fewest duration samples a class may be fitted from
    #[arg(long, default_value_t = urmx_core::rhythm::DEFAULT_MIN_SAMPLES)]
    pub min_samples: usize,

    /// Drop silence-class frames from the speaking-rate denominator
    #[arg(long)]
    pub exclude_silence: bool,
}

pub fn run(config: &PipelineConfig, args: Args) -> Result<(), CliError> {
    let segments_dir =
        resolve_dir(args.segments_dir, config.paths.segments_dir.as_deref(), "segments-dir")?;
    let wav_dir = resolve_dir(args.wav_dir, config.paths.wav_dir.as_deref(), "wav-dir")?;
    let assignment = load_assignment(&args.clusters)?;
    let mut corpus = build_merged_corpus(&segments_dir, &wav_dir, &assignment, config)?;
    let map = label_corpus(&corpus)?;
    for (name, seg) in corpus.names.iter().zip(corpus.merged.iter_mut()) {
        map.label_segmentation(seg)
            .map_err(|e| CliError::input(name, e))?;
    }

    let speaking_rate =
        estimate_speaking_rate(&corpus.merged, config.frame_rate, args.exclude_silence)
            .map_err(|e| classify_rhythm("speaking rate", e))?;
    let durations = class_durations(&corpus.merged, config.frame_rate)
        .map_err(|e| classify_rhythm("durations", e))?;

    let mut fitted = Vec::new();
    for class in SoundClass::ALL {
        let samples = &durations[&class];
        let params = fit_gamma(samples, args.min_samples).map_err(|e| {
            classify_rhythm(
                &format!("{class} ({} samples over {} utterances)", samples.len(), corpus.merged.len()),
                e,
            )
        })?;
        fitted.push(ClassModel {
            shape: params.shape,
            rate: params.rate,
            n_samples: samples.len(),
        });
    }
    let model = RhythmModel {
        format_version: MODEL_FORMAT_VERSION,
        frame_rate: config.frame_rate,
        speaking_rate,
        classes: ClassModels {
            sonorant: fitted[0],
            obstruent: fitted[1],
            silence: fitted[2],
        },
        sound_class_map: map.classes.clone(),
        provenance: config.provenance(),
    };
    atomic_write(&args.out, |tmp| {
        save_model(tmp, &model).map_err(|e| classify_rhythm("saving model", e))
    })?;

    eprintln!("fit: speaking rate {speaking_rate:.4} sonorant segments/s");
    for class in SoundClass::ALL {
        let m = model.classes.get(class);
        eprintln!(
            "fit: {class}: shape {:.4}, rate {:.4} (mean {:.1} ms, n = {})",
            m.shape,
            m.rate,
            1000.0 * m.shape / m.rate,
            m.n_samples
        );
    }
    Ok(())
}
