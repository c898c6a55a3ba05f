//! `urmx convert`: retimes one utterance toward a target speaker with a
//! strategy chosen by name from the converter registry.

use std::path::PathBuf;

use clap::Args as ClapArgs;
use serde::Serialize;
use urmx_core::rhythm::load_model;
use urmx_core::segment::read_segmentation;
use urmx_core::stretch::{write_plan, CLAMP_RANGE};
use urmx_core::units::{read_matrix_with_rate, write_matrix};
use urmx_core::{ConversionRequest, ConverterRegistry};

use crate::config::PipelineConfig;
use crate::errors::CliError;
use crate::io_util::atomic_write;

#[derive(ClapArgs)]
pub struct Args {
    /// Source utterance features (.urmx)
    #[arg(long)]
    pub features: PathBuf,

    /// Labeled segmentation TSV; required for --mode fine
    #[arg(long)]
    pub segmentation: Option<PathBuf>,

    #[arg(long)]
    pub src_model: PathBuf,

    #[arg(long)]
    pub tgt_model: PathBuf,

    /// Conversion strategy (see the registry: global, fine)
    #[arg(long, default_value = "fine")]
    pub mode: String,

    /// Converted features (.urmx)
    #[arg(long)]
    pub out: PathBuf,

    /// Stretch-plan TSV (fine mode only)
    #[arg(long)]
    pub plan: Option<PathBuf>,

    /// Clamp per-segment stretch factors to [1/4, 4]
    #[arg(long)]
    pub clamp: bool,
}

#[derive(Serialize)]
struct ConvertMeta<'a> {
    command: &'a str,
    mode: &'a str,
    features: String,
    segmentation: Option<String>,
    src_model: String,
    tgt_model: String,
    frame_rate: f64,
    clamp: bool,
    source_frames: usize,
    output_frames: usize,
}

pub fn run(config: &PipelineConfig, args: Args) -> Result<(), CliError> {
    let registry = ConverterRegistry::builtin();
    let Some(converter) = registry.get(&args.mode) else {
        return Err(CliError::Input(format!(
            "unknown mode {:?}; available: {}",
            args.mode,
            registry.names().join(", ")
        )));
    };
    let features = read_matrix_with_rate(&args.features, config.frame_rate)
        .map_err(|e| CliError::input(&args.features.display().to_string(), e))?;
    let source = load_model(&args.src_model)
        .map_err(|e| CliError::input(&args.src_model.display().to_string(), e))?;
    let target = load_model(&args.tgt_model)
        .map_err(|e| CliError::input(&args.tgt_model.display().to_string(), e))?;

    let segmentation = match &args.segmentation {
        Some(path) => {
            let mut seg = read_segmentation(path)
                .map_err(|e| CliError::input(&path.display().to_string(), e))?;
            // unlabeled rows with cluster ids fall back to the source
            // model's cluster-to-class map
            for s in seg.segments_mut() {
                if s.class.is_none() {
                    if let Some(cluster) = s.cluster {
                        s.class = source.sound_class_map.get(&cluster).copied();
                    }
                }
            }
            Some(seg)
        }
        None => None,
    };

    let clamp = if args.clamp || config.clamp { Some(CLAMP_RANGE) } else { None };
    let conversion = converter
        .convert(&ConversionRequest {
            features: &features,
            segmentation: segmentation.as_ref(),
            source: &source,
            target: &target,
            clamp,
        })
        .map_err(|e| CliError::input(&args.mode, e))?;

    atomic_write(&args.out, |tmp| {
        write_matrix(tmp, &conversion.features)
            .map_err(|e| CliError::input(&args.out.display().to_string(), e))
    })?;
    let meta = ConvertMeta {
        command: "convert",
        mode: converter.name(),
        features: args.features.display().to_string(),
        segmentation: args.segmentation.as_ref().map(|p| p.display().to_string()),
        src_model: args.src_model.display().to_string(),
        tgt_model: args.tgt_model.display().to_string(),
        frame_rate: config.frame_rate,
        clamp: clamp.is_some(),
        source_frames: features.num_frames(),
        output_frames: conversion.features.num_frames(),
    };
    let meta_path = args.out.with_extension("meta.json");
    atomic_write(&meta_path, |tmp| {
        let text =
            serde_json::to_string_pretty(&meta).map_err(|e| CliError::Internal(e.to_string()))?;
        std::fs::write(tmp, text + "\n").map_err(CliError::from)
    })?;
    if let Some(plan_path) = &args.plan {
        match &conversion.plan {
            Some(plan) => atomic_write(plan_path, |tmp| {
                write_plan(tmp, plan).map_err(|e| CliError::input("plan", e))
            })?,
            None => {
                return Err(CliError::Input(format!(
                    "mode {:?} does not produce a stretch plan",
                    args.mode
                )))
            }
        }
    }
    eprintln!(
        "convert: {} frames -> {} frames ({})",
        features.num_frames(),
        conversion.features.num_frames(),
        converter.name()
    );
    Ok(())
}
