//! `urmx eval-lengths`: TLE/WLE/PLE over parallel alignment pairs matched
//! by basename. Pairs whose label sequences do not match are skipped and
//! counted, not fatal.

use std::io::Write;
use std::path::PathBuf;

use clap::Args as ClapArgs;
use urmx_core::metrics::{length_errors, read_alignment, MetricsError};

use crate::config::PipelineConfig;
use crate::errors::CliError;
use crate::io_util::{atomic_write, list_files, pair_by_stem, stem};

#[derive(ClapArgs)]
pub struct Args {
    /// Directory of converted-utterance alignments (.tsv)
    #[arg(long)]
    pub converted_dir: PathBuf,

    /// Directory of target-speaker alignments (.tsv)
    #[arg(long)]
    pub target_dir: PathBuf,

    /// Report TSV
    #[arg(long)]
    pub out: PathBuf,
}

pub fn run(_config: &PipelineConfig, args: Args) -> Result<(), CliError> {
    let converted = list_files(&args.converted_dir, "tsv")?;
    let pairs = pair_by_stem(&converted, &args.target_dir, "tsv");
    if pairs.is_empty() {
        return Err(CliError::Input(format!(
            "no alignment pairs between {} and {}",
            args.converted_dir.display(),
            args.target_dir.display()
        )));
    }
    let mut rows = Vec::new();
    let mut skipped = 0usize;
    for (conv_path, tgt_path) in &pairs {
        let conv = read_alignment(conv_path)
            .map_err(|e| CliError::input(&conv_path.display().to_string(), e))?;
        let tgt = read_alignment(tgt_path)
            .map_err(|e| CliError::input(&tgt_path.display().to_string(), e))?;
        match length_errors(&conv, &tgt) {
            Ok(e) => rows.push((stem(conv_path), e)),
            Err(MetricsError::LabelSequenceMismatch { tier, detail }) => {
                eprintln!(
                    "eval-lengths: skipping {} (mismatched {tier} labels: {detail})",
                    stem(conv_path)
                );
                skipped += 1;
            }
            Err(e) => return Err(CliError::input(&stem(conv_path), e)),
        }
    }
    if rows.is_empty() {
        return Err(CliError::Data(format!("all {skipped} pairs were mismatched")));
    }
    let n = rows.len() as f64;
    let mean_tle: f64 = rows.iter().map(|(_, e)| e.tle).sum::<f64>() / n;
    let mean_wle: f64 = rows.iter().map(|(_, e)| e.wle).sum::<f64>() / n;
    let mean_ple: f64 = rows.iter().map(|(_, e)| e.ple).sum::<f64>() / n;

    atomic_write(&args.out, |tmp| {
        let file = std::fs::File::create(tmp)?;
        let mut w = std::io::BufWriter::new(file);
        writeln!(w, "# command: eval-lengths")?;
        writeln!(w, "# pairs: {} evaluated, {} skipped", rows.len(), skipped)?;
        writeln!(w, "# columns: utterance\ttle_sec\twle_sec\tple_sec")?;
        for (name, e) in &rows {
            writeln!(w, "{name}\t{}\t{}\t{}", e.tle, e.wle, e.ple)?;
        }
        writeln!(w, "MEAN\t{mean_tle}\t{mean_wle}\t{mean_ple}")?;
        w.flush()?;
        Ok(())
    })?;
    eprintln!(
        "eval-lengths: {} pairs (skipped {skipped}): TLE {mean_tle:.4} s, WLE {mean_wle:.4} s, PLE {mean_ple:.4} s",
        rows.len()
    );
    Ok(())
}
