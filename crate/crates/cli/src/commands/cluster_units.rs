//! `urmx cluster-units`: Ward clustering of the codebook, saved as JSON,
//! with an optional dendrogram TSV for plotting.

use std::path::PathBuf;

use clap::Args as ClapArgs;
use urmx_core::cluster::cluster_codebook;

use crate::config::PipelineConfig;
use crate::errors::CliError;
use crate::io_util::atomic_write;

#[derive(ClapArgs)]
pub struct Args {
    #[arg(long)]
    pub codebook: PathBuf,

    /// Cluster assignment JSON
    #[arg(long)]
    pub out: PathBuf,

    #[arg(long, default_value_t = 3)]
    pub clusters: usize,

    /// Merge history TSV (step, left, right, distance, size)
    #[arg(long)]
    pub dendrogram: Option<PathBuf>,
}

pub fn run(config: &PipelineConfig, args: Args) -> Result<(), CliError> {
    let codebook = super::load_codebook(&args.codebook, config)?;
    let assignment = cluster_codebook(&codebook, args.clusters)
        .map_err(|e| CliError::input(&args.codebook.display().to_string(), e))?;
    atomic_write(&args.out, |tmp| {
        let text = serde_json::to_string_pretty(&assignment)
            .map_err(|e| CliError::Internal(e.to_string()))?;
        std::fs::write(tmp, text + "\n").map_err(CliError::from)
    })?;
    if let Some(dendrogram) = &args.dendrogram {
        atomic_write(dendrogram, |tmp| {
            assignment
                .write_dendrogram(tmp)
                .map_err(|e| CliError::input("dendrogram", e))
        })?;
    }
    eprintln!(
        "cluster-units: {} units into {} clusters ({} merges)",
        assignment.labels.len(),
        args.clusters,
        assignment.merge_history.len()
    );
    Ok(())
}
