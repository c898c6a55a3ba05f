//! `urmx label-clusters`: merges per-utterance segmentations by cluster,
//! accumulates silence/voicing overlap against the wavs, and names the
//! clusters. Optionally writes the merged, labeled segmentations.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::Args as ClapArgs;
use rayon::prelude::*;
use urmx_core::cluster::{label_clusters, merge_segments, ClusterAssignment, SoundClassMap};
use urmx_core::segment::{read_segmentation, write_segmentation_to, Segmentation};

use crate::config::PipelineConfig;
use crate::errors::{classify_cluster, CliError};
use crate::io_util::{atomic_write, ensure_dir, list_files, stem};

#[derive(ClapArgs)]
pub struct Args {
    /// Directory of segmentation TSVs from `segment`
    #[arg(long)]
    pub segments_dir: Option<PathBuf>,

    /// Cluster assignment JSON from `cluster-units`
    #[arg(long)]
    pub clusters: PathBuf,

    /// Directory of wavs matching the segmentations by basename
    #[arg(long)]
    pub wav_dir: Option<PathBuf>,

    /// Sound-class map JSON with the overlap report
    #[arg(long)]
    pub out: PathBuf,

    /// Also write merged + labeled segmentation TSVs here
    #[arg(long)]
    pub labeled_dir: Option<PathBuf>,
}

pub fn load_assignment(path: &Path) -> Result<ClusterAssignment, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::input(&path.display().to_string(), e))?;
    serde_json::from_str(&text).map_err(|e| CliError::input(&path.display().to_string(), e))
}

/// Shared by `label-clusters` and `fit`: merged segmentations plus their
/// silence/voicing flags, in sorted file order.
pub struct MergedCorpus {
    pub names: Vec<String>,
    pub merged: Vec<Segmentation>,
    pub silent: Vec<Vec<bool>>,
    pub voiced: Vec<Vec<bool>>,
}

pub fn build_merged_corpus(
    segments_dir: &Path,
    wav_dir: &Path,
    assignment: &ClusterAssignment,
    config: &PipelineConfig,
) -> Result<MergedCorpus, CliError> {
    let files = list_files(segments_dir, "tsv")?;
    if files.is_empty() {
        return Err(CliError::Input(format!(
            "{}: found 0 segmentation files",
            segments_dir.display()
        )));
    }
    let per_utterance: Vec<(String, Segmentation, Vec<bool>, Vec<bool>)> = files
        .par_iter()
        .map(|path| -> Result<_, CliError> {
            let name = stem(path);
            let context = path.display().to_string();
            let seg =
                read_segmentation(path).map_err(|e| CliError::input(&context, e))?;
            let merged = merge_segments(&seg, assignment)
                .map_err(|e| classify_cluster(&context, e))?;
            let wav = wav_dir.join(format!("{name}.wav"));
            let flags = super::flags_for_wav(&wav, merged.total_frames(), config)?;
            Ok((name, merged, flags.silent, flags.voiced))
        })
        .collect::<Result<_, _>>()?;
    let mut corpus = MergedCorpus {
        names: Vec::new(),
        merged: Vec::new(),
        silent: Vec::new(),
        voiced: Vec::new(),
    };
    for (name, merged, silent, voiced) in per_utterance {
        corpus.names.push(name);
        corpus.merged.push(merged);
        corpus.silent.push(silent);
        corpus.voiced.push(voiced);
    }
    Ok(corpus)
}

pub fn label_corpus(corpus: &MergedCorpus) -> Result<SoundClassMap, CliError> {
    label_clusters(&corpus.merged, &corpus.silent, &corpus.voiced)
        .map_err(|e| classify_cluster("labeling", e))
}

/// Flag value, else the config file's `[paths]` entry.
pub fn resolve_dir(
    flag: Option<PathBuf>,
    fallback: Option<&Path>,
    name: &str,
) -> Result<PathBuf, CliError> {
    flag.or_else(|| fallback.map(Path::to_path_buf))
        .ok_or_else(|| CliError::Input(format!("--{name} is required")))
}

pub fn run(config: &PipelineConfig, args: Args) -> Result<(), CliError> {
    let segments_dir =
        resolve_dir(args.segments_dir, config.paths.segments_dir.as_deref(), "segments-dir")?;
    let wav_dir = resolve_dir(args.wav_dir, config.paths.wav_dir.as_deref(), "wav-dir")?;
    let assignment = load_assignment(&args.clusters)?;
    let mut corpus = build_merged_corpus(&segments_dir, &wav_dir, &assignment, config)?;
    let map = label_corpus(&corpus)?;
    atomic_write(&args.out, |tmp| {
        let text = serde_json::to_string_pretty(&map)
            .map_err(|e| CliError::Internal(e.to_string()))?;
        std::fs::write(tmp, text + "\n").map_err(CliError::from)
    })?;
    for o in &map.overlap {
        eprintln!(
            "label-clusters: cluster {} -> {} (silent {:.3}, voiced {:.3}, {} frames)",
            o.cluster,
            map.class_of(o.cluster).expect("labeled cluster"),
            o.silent_fraction,
            o.voiced_fraction,
            o.frames
        );
    }
    if let Some(labeled_dir) = &args.labeled_dir {
        ensure_dir(labeled_dir)?;
        for (name, seg) in corpus.names.iter().zip(corpus.merged.iter_mut()) {
            map.label_segmentation(seg).map_err(|e| classify_cluster(name, e))?;
            let out = labeled_dir.join(format!("{name}.tsv"));
            atomic_write(&out, |tmp| {
                let file = std::fs::File::create(tmp)?;
                let mut w = std::io::BufWriter::new(file);
                writeln!(w, "# command: label-clusters")?;
                write_segmentation_to(&mut w, seg).map_err(|e| CliError::input(name, e))?;
                w.flush()?;
                Ok(())
            })?;
        }
    }
    Ok(())
}
