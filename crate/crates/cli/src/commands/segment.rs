//! `urmx segment`: one segmentation TSV per feature file.

use std::io::Write;
use std::path::PathBuf;

use clap::Args as ClapArgs;
use rayon::prelude::*;
use urmx_core::segment::{best_segmentation_capped, write_segmentation_to};
use urmx_core::units::{read_matrix_with_rate, unit_log_probs};

use crate::config::PipelineConfig;
use crate::errors::CliError;
use crate::io_util::{atomic_write, ensure_dir, list_files, stem};

#[derive(ClapArgs)]
pub struct Args {
    /// Directory of .urmx feature matrices
    #[arg(long)]
    pub features_dir: Option<PathBuf>,

    /// Codebook matrix (.urmx, rows = units)
    #[arg(long)]
    pub codebook: PathBuf,

    #[arg(long)]
    pub out_dir: PathBuf,

    /// Optional cap on segment length in frames
    #[arg(long)]
    pub max_seg_len: Option<usize>,
}

pub fn run(config: &PipelineConfig, args: Args) -> Result<(), CliError> {
    let features_dir = args
        .features_dir
        .or_else(|| config.paths.features_dir.clone())
        .ok_or_else(|| CliError::Input("--features-dir is required".into()))?;
    let files = list_files(&features_dir, "urmx")?;
    if files.is_empty() {
        return Err(CliError::Input(format!(
            "{}: found 0 feature files",
            features_dir.display()
        )));
    }
    let codebook = super::load_codebook(&args.codebook, config)?;
    ensure_dir(&args.out_dir)?;

    files.par_iter().try_for_each(|path| -> Result<(), CliError> {
        let context = path.display().to_string();
        let features = read_matrix_with_rate(path, config.frame_rate)
            .map_err(|e| CliError::input(&context, e))?;
        let logprobs = unit_log_probs(&features, &codebook)
            .map_err(|e| CliError::input(&context, e))?;
        let seg = best_segmentation_capped(&logprobs, config.gamma, args.max_seg_len)
            .map_err(|e| CliError::input(&context, e))?;
        let out = args.out_dir.join(format!("{}.tsv", stem(path)));
        atomic_write(&out, |tmp| {
            let file = std::fs::File::create(tmp)?;
            let mut w = std::io::BufWriter::new(file);
            writeln!(w, "# command: segment")?;
            writeln!(w, "# tau: {}", config.tau)?;
            writeln!(w, "# frame_rate: {}", config.frame_rate)?;
            writeln!(w, "# codebook: {}", args.codebook.display())?;
            write_segmentation_to(&mut w, &seg)
                .map_err(|e| CliError::input(&context, e))?;
            w.flush()?;
            Ok(())
        })
    })?;
    eprintln!("segment: wrote {} segmentations to {}", files.len(), args.out_dir.display());
    Ok(())
}
