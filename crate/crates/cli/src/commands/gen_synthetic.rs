//! Fabricates a synthetic speaker: a codebook of three well-separated unit
//! groups, per-utterance soft-unit features, and waveform stand-ins whose
//! acoustics match the intended classes (periodic for sonorants, noise for
//! obstruents, digital silence for pauses). Durations come from the
//! per-class gamma distributions given on the command line, so a fitted
//! model can be checked against the generator.

use std::path::PathBuf;

use clap::Args as ClapArgs;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};
use serde::Serialize;
use urmx_core::cluster::cluster_codebook;
use urmx_core::signal::{write_wav, Waveform};
use urmx_core::units::{read_matrix_with_rate, write_matrix, Codebook, FeatureMatrix};
use urmx_core::SoundClass;

use crate::config::PipelineConfig;
use crate::errors::CliError;
use crate::io_util::{atomic_write, ensure_dir};

#[derive(ClapArgs)]
pub struct Args {
    /// Output directory (codebook.urmx, features/, wavs/, truth.json)
    #[arg(long)]
    pub out_dir: PathBuf,

    /// Reuse an existing codebook instead of generating one; required when
    /// two speakers must share a unit space
    #[arg(long)]
    pub codebook: Option<PathBuf>,

    #[arg(long, default_value_t = 42)]
    pub seed: u64,

    #[arg(long, default_value_t = 20)]
    pub utterances: usize,

    /// Embedding dimension of a generated codebook
    #[arg(long, default_value_t = 8)]
    pub dim: usize,

    /// Units per sound-class group in a generated codebook
    #[arg(long, default_value_t = 4)]
    pub units_per_class: usize,

    #[arg(long, default_value_t = 16_000)]
    pub sample_rate: u32,

    /// Sonorant/obstruent alternations per utterance, sampled uniformly
    #[arg(long, default_value_t = 4)]
    pub pairs_min: usize,
    #[arg(long, default_value_t = 8)]
    pub pairs_max: usize,

    /// Probability of a pause after each sonorant/obstruent pair
    #[arg(long, default_value_t = 0.25)]
    pub pause_prob: f64,

    #[arg(long, default_value_t = 4.0)]
    pub son_shape: f64,
    #[arg(long, default_value_t = 20.0)]
    pub son_rate: f64,
    #[arg(long, default_value_t = 3.0)]
    pub obs_shape: f64,
    #[arg(long, default_value_t = 30.0)]
    pub obs_rate: f64,
    #[arg(long, default_value_t = 2.0)]
    pub sil_shape: f64,
    #[arg(long, default_value_t = 8.0)]
    pub sil_rate: f64,
}

#[derive(Serialize)]
struct Truth {
    seed: u64,
    utterances: usize,
    frame_rate: f64,
    sample_rate: u32,
    classes: std::collections::BTreeMap<String, (f64, f64)>,
}

pub fn run(config: &PipelineConfig, args: Args) -> Result<(), CliError> {
    if args.pairs_min == 0 || args.pairs_min > args.pairs_max {
        return Err(CliError::Input("pairs_min must be in [1, pairs_max]".into()));
    }
    if !(0.0..=1.0).contains(&args.pause_prob) {
        return Err(CliError::Input("pause_prob must be in [0, 1]".into()));
    }
    ensure_dir(&args.out_dir)?;
    let features_dir = args.out_dir.join("features");
    let wav_dir = args.out_dir.join("wavs");
    ensure_dir(&features_dir)?;
    ensure_dir(&wav_dir)?;

    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);

    let codebook_matrix = match &args.codebook {
        Some(path) => read_matrix_with_rate(path, config.frame_rate)
            .map_err(|e| CliError::input(&path.display().to_string(), e))?,
        None => {
            let m = generate_codebook(&mut rng, args.dim, args.units_per_class, config)?;
            let out = args.out_dir.join("codebook.urmx");
            atomic_write(&out, |tmp| {
                write_matrix(tmp, &m).map_err(|e| CliError::input("codebook", e))
            })?;
            m
        }
    };
    let codebook = Codebook::from_matrix(&codebook_matrix, config.tau)
        .map_err(|e| CliError::input("codebook", e))?;

    // class c draws its units from cluster c of the codebook's own
    // dendrogram, so features and acoustics stay consistent across
    // speakers sharing a codebook
    let assignment = cluster_codebook(&codebook, 3)
        .map_err(|e| CliError::input("clustering generated codebook", e))?;
    let mut units_by_class: [Vec<usize>; 3] = [Vec::new(), Vec::new(), Vec::new()];
    for (unit, &cluster) in assignment.labels.iter().enumerate() {
        units_by_class[cluster].push(unit);
    }
    if units_by_class.iter().any(Vec::is_empty) {
        return Err(CliError::Data("codebook clusters are unbalanced".into()));
    }

    let dists = [
        gamma_dist("sonorant", args.son_shape, args.son_rate)?,
        gamma_dist("obstruent", args.obs_shape, args.obs_rate)?,
        gamma_dist("silence", args.sil_shape, args.sil_rate)?,
    ];
    let hop = (args.sample_rate as f64 / config.frame_rate).round() as usize;
    if hop == 0 {
        return Err(CliError::Input("frame_rate exceeds sample_rate".into()));
    }

    for i in 0..args.utterances {
        let name = format!("utt_{i:04}");
        let (features, classes_per_segment, lens) =
            generate_utterance(&mut rng, &codebook, &units_by_class, &dists, config, &args);
        let wav = synthesize_wav(&mut rng, &classes_per_segment, &lens, hop, args.sample_rate);
        let fpath = features_dir.join(format!("{name}.urmx"));
        atomic_write(&fpath, |tmp| {
            write_matrix(tmp, &features).map_err(|e| CliError::input(&name, e))
        })?;
        let wpath = wav_dir.join(format!("{name}.wav"));
        atomic_write(&wpath, |tmp| {
            write_wav(tmp, &wav).map_err(|e| CliError::input(&name, e))
        })?;
    }

    let mut classes = std::collections::BTreeMap::new();
    classes.insert("sonorant".to_string(), (args.son_shape, args.son_rate));
    classes.insert("obstruent".to_string(), (args.obs_shape, args.obs_rate));
    classes.insert("silence".to_string(), (args.sil_shape, args.sil_rate));
    let truth = Truth {
        seed: args.seed,
        utterances: args.utterances,
        frame_rate: config.frame_rate,
        sample_rate: args.sample_rate,
        classes,
    };
    atomic_write(&args.out_dir.join("truth.json"), |tmp| {
        let text = serde_json::to_string_pretty(&truth)
            .map_err(|e| CliError::Internal(e.to_string()))?;
        std::fs::write(tmp, text + "\n").map_err(CliError::from)
    })?;
    eprintln!(
        "gen-synthetic: wrote {} utterances to {}",
        args.utterances,
        args.out_dir.display()
    );
    Ok(())
}

fn gamma_dist(class: &str, shape: f64, rate: f64) -> Result<Gamma<f64>, CliError> {
    if !(shape > 0.0) || !(rate > 0.0) {
        return Err(CliError::Input(format!("{class}: gamma parameters must be positive")));
    }
    Gamma::new(shape, 1.0 / rate)
        .map_err(|e| CliError::Input(format!("{class}: {e}")))
}

/// Three groups of unit embeddings around orthogonal anchors.
fn generate_codebook(
    rng: &mut ChaCha8Rng,
    dim: usize,
    units_per_class: usize,
    config: &PipelineConfig,
) -> Result<FeatureMatrix, CliError> {
    if dim < 3 {
        return Err(CliError::Input("codebook dim must be at least 3".into()));
    }
    if units_per_class == 0 {
        return Err(CliError::Input("units_per_class must be positive".into()));
    }
    let mut data = Vec::with_capacity(3 * units_per_class * dim);
    for class in 0..3 {
        let anchor = class * dim / 3;
        for _ in 0..units_per_class {
            for d in 0..dim {
                let base = if d == anchor { 1.0 } else { 0.0 };
                data.push(base + rng.random_range(-0.05..0.05));
            }
        }
    }
    FeatureMatrix::new(3 * units_per_class, dim, data, config.frame_rate)
        .map_err(|e| CliError::Internal(e.to_string()))
}

type UtteranceParts = (FeatureMatrix, Vec<SoundClass>, Vec<usize>);

/// Class sequence SIL (SON OBS)*p SON SIL with gamma-sampled durations;
/// each segment's frames sit near one embedding of its class group.
fn generate_utterance(
    rng: &mut ChaCha8Rng,
    codebook: &Codebook,
    units_by_class: &[Vec<usize>; 3],
    dists: &[Gamma<f64>; 3],
    config: &PipelineConfig,
    args: &Args,
) -> UtteranceParts {
    let pairs = rng.random_range(args.pairs_min..=args.pairs_max);
    let mut classes = vec![SoundClass::Silence];
    for _ in 0..pairs {
        classes.push(SoundClass::Sonorant);
        classes.push(SoundClass::Obstruent);
        if rng.random_bool(args.pause_prob) {
            classes.push(SoundClass::Silence);
        }
    }
    classes.push(SoundClass::Sonorant);
    classes.push(SoundClass::Silence);

    let mut data = Vec::new();
    let mut lens = Vec::new();
    let mut prev_unit = usize::MAX;
    for &class in &classes {
        let class_idx = match class {
            SoundClass::Sonorant => 0,
            SoundClass::Obstruent => 1,
            SoundClass::Silence => 2,
        };
        let seconds = dists[class_idx].sample(rng);
        let frames = (seconds * config.frame_rate).round().max(1.0) as usize;
        let group = &units_by_class[class_idx];
        let mut unit = group[rng.random_range(0..group.len())];
        if unit == prev_unit && group.len() > 1 {
            // avoid gluing two generated segments into one DP segment
            unit = group[(group.iter().position(|&u| u == unit).unwrap() + 1) % group.len()];
        }
        prev_unit = unit;
        let embedding = codebook.embedding(unit);
        for _ in 0..frames {
            data.extend(embedding.iter().map(|v| v + rng.random_range(-0.02..0.02)));
        }
        lens.push(frames);
    }
    let rows = lens.iter().sum();
    let features = FeatureMatrix::new(rows, codebook.dim(), data, config.frame_rate)
        .expect("generated features are finite");
    (features, classes, lens)
}

/// Per-class acoustics: sawtooth for sonorants, uniform noise for
/// obstruents, digital silence for pauses.
fn synthesize_wav(
    rng: &mut ChaCha8Rng,
    classes: &[SoundClass],
    lens: &[usize],
    hop: usize,
    sample_rate: u32,
) -> Waveform {
    let f0 = rng.random_range(100.0..160.0);
    let total: usize = lens.iter().map(|l| l * hop).sum();
    let mut samples = Vec::with_capacity(total);
    for (&class, &frames) in classes.iter().zip(lens) {
        let n = frames * hop;
        match class {
            SoundClass::Sonorant => {
                for i in 0..n {
                    let phase = (i as f64 * f0 / sample_rate as f64).fract();
                    samples.push(0.5 * (2.0 * phase - 1.0));
                }
            }
            SoundClass::Obstruent => {
                for _ in 0..n {
                    samples.push(rng.random_range(-0.15..0.15));
                }
            }
            SoundClass::Silence => {
                samples.extend(std::iter::repeat(0.0).take(n));
            }
        }
    }
    Waveform::new(samples, sample_rate).expect("synthesized samples in range")
}
