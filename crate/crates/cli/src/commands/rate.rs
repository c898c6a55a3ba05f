//! `urmx rate`: speaking rate from already-labeled segmentation TSVs.

use std::path::PathBuf;

use clap::Args as ClapArgs;
use urmx_core::rhythm::estimate_speaking_rate;
use urmx_core::segment::read_segmentation;

use crate::config::PipelineConfig;
use crate::errors::{classify_rhythm, CliError};
use crate::io_util::list_files;

#[derive(ClapArgs)]
pub struct Args {
    /// Directory of labeled segmentation TSVs (class column set)
    #[arg(long)]
    pub segments_dir: PathBuf,

    #[arg(long)]
    pub exclude_silence: bool,
}

pub fn run(config: &PipelineConfig, args: Args) -> Result<(), CliError> {
    let files = list_files(&args.segments_dir, "tsv")?;
    if files.is_empty() {
        return Err(CliError::Input(format!(
            "{}: found 0 segmentation files",
            args.segments_dir.display()
        )));
    }
    let mut corpus = Vec::with_capacity(files.len());
    for path in &files {
        corpus.push(
            read_segmentation(path)
                .map_err(|e| CliError::input(&path.display().to_string(), e))?,
        );
    }
    let rate = estimate_speaking_rate(&corpus, config.frame_rate, args.exclude_silence)
        .map_err(|e| classify_rhythm("speaking rate", e))?;
    println!("{rate}");
    Ok(())
}
