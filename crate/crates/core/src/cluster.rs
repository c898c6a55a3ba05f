//! Groups the discrete-unit dictionary into three clusters, merges adjacent
//! same-cluster segments, and names the clusters sonorant / obstruent /
//! silence from acoustic overlap statistics.
//!
//! Clustering is agglomerative with Ward linkage on Euclidean distances,
//! implemented through the Lance-Williams update on squared distances.
//! Merge heights follow the usual convention of sqrt(squared-distance), so
//! dendrograms are directly comparable with common toolkits.

use std::collections::BTreeMap;
use std::fmt;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::segment::{Segment, Segmentation};
use crate::units::Codebook;

#[derive(Debug, Error)]
pub enum ClusterError {
    #[error("{units} units cannot form {clusters} clusters")]
    TooFewUnits { units: usize, clusters: usize },
    #[error("segment unit {unit} has no cluster assignment (codebook has {units} units)")]
    UnassignedUnit { unit: usize, units: usize },
    #[error("labeling needs a non-empty corpus")]
    EmptyCorpus,
    #[error("overlap fractions tie exactly; cluster labeling is ambiguous ({0})")]
    AmbiguousLabeling(String),
    #[error("utterance {utterance}: {flags} flags for {frames} frames")]
    FlagLengthMismatch { utterance: usize, flags: usize, frames: usize },
    #[error("labeling expects exactly 3 clusters, corpus uses cluster ids {0:?}")]
    WrongClusterCount(Vec<usize>),
    #[error("segment at frame {0} carries no cluster id")]
    MissingClusterId(usize),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// The three rhythm classes a cluster can be labeled with.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(rename_all = "lowercase")]
pub enum SoundClass {
    Sonorant,
    Obstruent,
    Silence,
}

impl SoundClass {
    pub const ALL: [SoundClass; 3] =
        [SoundClass::Sonorant, SoundClass::Obstruent, SoundClass::Silence];

    /// Three-letter code used in segmentation TSV files.
    pub fn code(self) -> &'static str {
        match self {
            SoundClass::Sonorant => "SON",
            SoundClass::Obstruent => "OBS",
            SoundClass::Silence => "SIL",
        }
    }
}

impl fmt::Display for SoundClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SoundClass::Sonorant => "sonorant",
            SoundClass::Obstruent => "obstruent",
            SoundClass::Silence => "silence",
        })
    }
}

impl FromStr for SoundClass {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "SON" | "sonorant" => Ok(SoundClass::Sonorant),
            "OBS" | "obstruent" => Ok(SoundClass::Obstruent),
            "SIL" | "silence" => Ok(SoundClass::Silence),
            other => Err(format!("unknown sound class {other:?}")),
        }
    }
}

/// One agglomeration step; `left` and `right` are node ids where ids below
/// K are original units and id K + i names the cluster formed at step i.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MergeStep {
    pub left: usize,
    pub right: usize,
    pub distance: f64,
    pub size: usize,
}

/// Result of cutting the dendrogram at a fixed number of clusters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterAssignment {
    /// `labels[unit] = cluster id`, ids in `0..n_clusters`.
    pub labels: Vec<usize>,
    pub n_clusters: usize,
    pub merge_history: Vec<MergeStep>,
}

impl ClusterAssignment {
    pub fn cluster_of(&self, unit: usize) -> Option<usize> {
        self.labels.get(unit).copied()
    }

    /// Dendrogram dump, one merge per row.
    pub fn write_dendrogram(&self, path: impl AsRef<Path>) -> Result<(), ClusterError> {
        let file = File::create(path)?;
        let mut w = BufWriter::new(file);
        writeln!(w, "# columns: step\tleft\tright\tdistance\tsize")?;
        for (i, m) in self.merge_history.iter().enumerate() {
            writeln!(w, "{}\t{}\t{}\t{}\t{}", i, m.left, m.right, m.distance, m.size)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Ward agglomerative clustering of the codebook embeddings, cut at
/// `n_clusters`.
///
/// Final cluster ids are assigned by sorting the surviving clusters by
/// centroid (lexicographically over coordinates), which makes the numbering
/// a function of the embedding geometry rather than of row order.
pub fn cluster_codebook(
    codebook: &Codebook,
    n_clusters: usize,
) -> Result<ClusterAssignment, ClusterError> {
    let k = codebook.len();
    if n_clusters == 0 || k < n_clusters {
        return Err(ClusterError::TooFewUnits { units: k, clusters: n_clusters });
    }

    struct Group {
        node_id: usize,
        members: Vec<usize>,
        centroid_sum: Vec<f64>,
    }
    let mut groups: Vec<Group> = (0..k)
        .map(|i| Group {
            node_id: i,
            members: vec![i],
            centroid_sum: codebook.embedding(i).to_vec(),
        })
        .collect();

    // squared-distance matrix between active groups, dense and symmetric
    let mut dist2 = vec![0.0f64; k * k];
    for i in 0..k {
        for j in (i + 1)..k {
            let d2: f64 = codebook
                .embedding(i)
                .iter()
                .zip(codebook.embedding(j))
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            dist2[i * k + j] = d2;
            dist2[j * k + i] = d2;
        }
    }

    let mut active: Vec<usize> = (0..k).collect(); // indices into the matrix
    let mut history = Vec::with_capacity(k - n_clusters);
    let mut next_node = k;
    while active.len() > n_clusters {
        // smallest squared distance; ties resolve to the smallest index pair
        let mut best = (usize::MAX, usize::MAX);
        let mut best_d2 = f64::INFINITY;
        for (ai, &i) in active.iter().enumerate() {
            for &j in &active[ai + 1..] {
                let d2 = dist2[i * k + j];
                if d2 < best_d2 {
                    best_d2 = d2;
                    best = (i, j);
                }
            }
        }
        let (i, j) = best;
        let (ni, nj) = (groups[i].members.len() as f64, groups[j].members.len() as f64);
        let (left, right) = {
            let (a, b) = (groups[i].node_id, groups[j].node_id);
            (a.min(b), a.max(b))
        };
        history.push(MergeStep {
            left,
            right,
            distance: best_d2.sqrt(),
            size: groups[i].members.len() + groups[j].members.len(),
        });

        // Lance-Williams update for Ward linkage on squared distances
        for &m in &active {
            if m == i || m == j {
                continue;
            }
            let nm = groups[m].members.len() as f64;
            let total = ni + nj + nm;
            let updated = ((ni + nm) * dist2[i * k + m] + (nj + nm) * dist2[j * k + m]
                - nm * best_d2)
                / total;
            dist2[i * k + m] = updated;
            dist2[m * k + i] = updated;
        }

        let absorbed = std::mem::take(&mut groups[j].members);
        let absorbed_sum = std::mem::take(&mut groups[j].centroid_sum);
        groups[i].members.extend(absorbed);
        for (a, b) in groups[i].centroid_sum.iter_mut().zip(&absorbed_sum) {
            *a += b;
        }
        groups[i].node_id = next_node;
        next_node += 1;
        active.retain(|&m| m != j);
    }

    // order surviving clusters by centroid for a geometry-determined id
    let mut survivors: Vec<(Vec<f64>, Vec<usize>)> = active
        .iter()
        .map(|&i| {
            let n = groups[i].members.len() as f64;
            let centroid: Vec<f64> =
                groups[i].centroid_sum.iter().map(|s| s / n).collect();
            (centroid, groups[i].members.clone())
        })
        .collect();
    survivors.sort_by(|a, b| {
        a.0.iter()
            .zip(&b.0)
            .map(|(x, y)| x.partial_cmp(y).expect("finite centroids"))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let mut labels = vec![usize::MAX; k];
    for (cluster_id, (_, members)) in survivors.iter().enumerate() {
        for &unit in members {
            labels[unit] = cluster_id;
        }
    }
    debug_assert!(labels.iter().all(|&l| l < n_clusters));
    Ok(ClusterAssignment { labels, n_clusters, merge_history: history })
}

/// Fuses adjacent segments whose units fall in the same cluster.
///
/// The merged segment keeps the unit of its longest constituent (earliest
/// wins on ties) and records the shared cluster id. Already-merged input
/// passes through unchanged.
pub fn merge_segments(
    seg: &Segmentation,
    assignment: &ClusterAssignment,
) -> Result<Segmentation, ClusterError> {
    let units = assignment.labels.len();
    for s in seg.segments() {
        if s.unit >= units {
            return Err(ClusterError::UnassignedUnit { unit: s.unit, units });
        }
    }
    let mut merged: Vec<Segment> = Vec::new();
    let mut longest: Vec<(usize, usize)> = Vec::new(); // (len, unit) of best constituent
    for s in seg.segments() {
        let cluster = assignment.labels[s.unit];
        match merged.last_mut() {
            Some(last) if last.cluster == Some(cluster) => {
                last.end = s.end;
                let lead = longest.last_mut().expect("tracked constituent");
                if s.len() > lead.0 {
                    *lead = (s.len(), s.unit);
                }
            }
            _ => {
                merged.push(Segment {
                    start: s.start,
                    end: s.end,
                    unit: s.unit,
                    cluster: Some(cluster),
                    class: None,
                });
                longest.push((s.len(), s.unit));
            }
        }
    }
    for (seg, &(_, unit)) in merged.iter_mut().zip(&longest) {
        seg.unit = unit;
    }
    Ok(Segmentation::new(merged, seg.gamma()).expect("merge preserves coverage"))
}

/// Per-cluster acoustic overlap, the evidence behind a labeling decision.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterOverlap {
    pub cluster: usize,
    pub frames: u64,
    pub silent_fraction: f64,
    pub voiced_fraction: f64,
}

/// Bijective map from cluster ids to sound classes plus the overlap report
/// that justified it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SoundClassMap {
    pub classes: BTreeMap<usize, SoundClass>,
    pub overlap: Vec<ClusterOverlap>,
}

impl SoundClassMap {
    pub fn class_of(&self, cluster: usize) -> Option<SoundClass> {
        self.classes.get(&cluster).copied()
    }

    /// Applies the map to a merged segmentation, filling in `class`.
    pub fn label_segmentation(&self, seg: &mut Segmentation) -> Result<(), ClusterError> {
        for s in seg.segments_mut() {
            let cluster = s.cluster.ok_or(ClusterError::MissingClusterId(s.start))?;
            s.class = self.classes.get(&cluster).copied();
        }
        Ok(())
    }
}

/// Decides which of the three clusters is silence, sonorant, and obstruent.
///
/// Overlap fractions are accumulated frame-wise over the whole corpus so
/// long utterances weigh proportionally. The cluster with the highest
/// silent-frame fraction is silence; of the remaining two, the higher
/// voiced-frame fraction is sonorant. Exact ties are an error: a wrong
/// labeling silently corrupts every downstream rhythm model.
pub fn label_clusters(
    merged: &[Segmentation],
    silent_flags: &[Vec<bool>],
    voiced_flags: &[Vec<bool>],
) -> Result<SoundClassMap, ClusterError> {
    if merged.is_empty() || merged.len() != silent_flags.len() || merged.len() != voiced_flags.len()
    {
        return Err(ClusterError::EmptyCorpus);
    }
    let mut frames: BTreeMap<usize, u64> = BTreeMap::new();
    let mut silent: BTreeMap<usize, u64> = BTreeMap::new();
    let mut voiced: BTreeMap<usize, u64> = BTreeMap::new();
    for (u, seg) in merged.iter().enumerate() {
        let t = seg.total_frames();
        if silent_flags[u].len() != t {
            return Err(ClusterError::FlagLengthMismatch {
                utterance: u,
                flags: silent_flags[u].len(),
                frames: t,
            });
        }
        if voiced_flags[u].len() != t {
            return Err(ClusterError::FlagLengthMismatch {
                utterance: u,
                flags: voiced_flags[u].len(),
                frames: t,
            });
        }
        for s in seg.segments() {
            let cluster = s.cluster.ok_or(ClusterError::MissingClusterId(s.start))?;
            let f = frames.entry(cluster).or_insert(0);
            *f += s.len() as u64;
            let sil = silent.entry(cluster).or_insert(0);
            let voi = voiced.entry(cluster).or_insert(0);
            for t in s.start..s.end {
                if silent_flags[u][t] {
                    *sil += 1;
                }
                if voiced_flags[u][t] {
                    *voi += 1;
                }
            }
        }
    }
    let ids: Vec<usize> = frames.keys().copied().collect();
    if ids != [0, 1, 2] {
        return Err(ClusterError::WrongClusterCount(ids));
    }
    let fraction = |counts: &BTreeMap<usize, u64>, c: usize| -> f64 {
        let n = frames[&c];
        if n == 0 { 0.0 } else { counts[&c] as f64 / n as f64 }
    };
    let overlap: Vec<ClusterOverlap> = ids
        .iter()
        .map(|&c| ClusterOverlap {
            cluster: c,
            frames: frames[&c],
            silent_fraction: fraction(&silent, c),
            voiced_fraction: fraction(&voiced, c),
        })
        .collect();

    let silence = argmax_strict(ids.iter().map(|&c| (c, fraction(&silent, c))))
        .ok_or_else(|| ClusterError::AmbiguousLabeling("silent overlap".into()))?;
    let rest: Vec<usize> = ids.iter().copied().filter(|&c| c != silence).collect();
    let sonorant = argmax_strict(rest.iter().map(|&c| (c, fraction(&voiced, c))))
        .ok_or_else(|| ClusterError::AmbiguousLabeling("voiced overlap".into()))?;
    let obstruent = rest.into_iter().find(|&c| c != sonorant).expect("two non-silence clusters");

    let mut classes = BTreeMap::new();
    classes.insert(silence, SoundClass::Silence);
    classes.insert(sonorant, SoundClass::Sonorant);
    classes.insert(obstruent, SoundClass::Obstruent);
    Ok(SoundClassMap { classes, overlap })
}

/// Index of the strict maximum, or None when the best value is tied.
fn argmax_strict(values: impl Iterator<Item = (usize, f64)>) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    let mut tied = false;
    for (id, v) in values {
        match best {
            None => best = Some((id, v)),
            Some((_, bv)) => {
                if v > bv {
                    best = Some((id, v));
                    tied = false;
                } else if v == bv {
                    tied = true;
                }
            }
        }
    }
    match (best, tied) {
        (Some((id, _)), false) => Some(id),
        _ => None,
    }
}
