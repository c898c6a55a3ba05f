//! `urmx eval-wasserstein`: per-sound-type Wasserstein-1 distances between
//! pooled duration distributions. Needs no parallel pairing; the converted
//! and target corpora are compared as distributions.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::Args as ClapArgs;
use urmx_core::metrics::{
    durations_by_sound_type, read_alignment, wasserstein1, SoundType, SoundTypeTable,
};

use crate::config::PipelineConfig;
use crate::errors::CliError;
use crate::io_util::{atomic_write, list_files};

#[derive(ClapArgs)]
pub struct Args {
    #[arg(long)]
    pub converted_dir: PathBuf,

    #[arg(long)]
    pub target_dir: PathBuf,

    /// Report TSV (distances in milliseconds)
    #[arg(long)]
    pub out: PathBuf,

    /// Custom phone table (label<TAB>sound_type); default is the built-in
    /// English inventory
    #[arg(long)]
    pub table: Option<PathBuf>,
}

fn pooled_durations(
    dir: &Path,
    table: &SoundTypeTable,
) -> Result<std::collections::BTreeMap<SoundType, Vec<f64>>, CliError> {
    let files = list_files(dir, "tsv")?;
    if files.is_empty() {
        return Err(CliError::Input(format!("{}: found 0 alignment files", dir.display())));
    }
    let mut pooled: std::collections::BTreeMap<SoundType, Vec<f64>> =
        SoundType::ALL.iter().map(|&t| (t, Vec::new())).collect();
    for path in &files {
        let aln = read_alignment(path)
            .map_err(|e| CliError::input(&path.display().to_string(), e))?;
        let buckets = durations_by_sound_type(&aln, table)
            .map_err(|e| CliError::input(&path.display().to_string(), e))?;
        for (t, mut durations) in buckets {
            pooled.get_mut(&t).expect("all types present").append(&mut durations);
        }
    }
    Ok(pooled)
}

pub fn run(_config: &PipelineConfig, args: Args) -> Result<(), CliError> {
    let table = match &args.table {
        Some(path) => SoundTypeTable::from_tsv(path)
            .map_err(|e| CliError::input(&path.display().to_string(), e))?,
        None => SoundTypeTable::builtin_english(),
    };
    let converted = pooled_durations(&args.converted_dir, &table)?;
    let target = pooled_durations(&args.target_dir, &table)?;

    let mut report = Vec::new();
    for t in SoundType::ALL {
        let a = &converted[&t];
        let b = &target[&t];
        if a.is_empty() || b.is_empty() {
            report.push((t, None, a.len(), b.len()));
            continue;
        }
        let w1_ms = 1000.0
            * wasserstein1(a, b).map_err(|e| CliError::data(&t.to_string(), e))?;
        report.push((t, Some(w1_ms), a.len(), b.len()));
    }

    atomic_write(&args.out, |tmp| {
        let file = std::fs::File::create(tmp)?;
        let mut w = std::io::BufWriter::new(file);
        writeln!(w, "# command: eval-wasserstein")?;
        writeln!(w, "# columns: sound_type\tw1_ms\tn_converted\tn_target")?;
        for (t, w1, n_a, n_b) in &report {
            match w1 {
                Some(v) => writeln!(w, "{t}\t{v}\t{n_a}\t{n_b}")?,
                None => writeln!(w, "{t}\tNA\t{n_a}\t{n_b}")?,
            }
        }
        w.flush()?;
        Ok(())
    })?;
    for (t, w1, n_a, n_b) in &report {
        match w1 {
            Some(v) => eprintln!("eval-wasserstein: {t}: {v:.2} ms ({n_a} vs {n_b} samples)"),
            None => eprintln!("eval-wasserstein: {t}: no samples ({n_a} vs {n_b})"),
        }
    }
    Ok(())
}
