//! Objective rhythm-conversion evaluation: speaking-rate correlation,
//! length errors at three scales, and per-sound-type Wasserstein distances
//! between duration distributions.
//!
//! Length errors compare parallel utterances through their forced
//! alignments: TLE is the absolute difference of total durations (silences
//! included), WLE and PLE are mean absolute duration differences over
//! matched words and non-silence phones. The Wasserstein distance needs no
//! parallel data; it compares pooled empirical duration distributions.

use std::collections::BTreeMap;
use std::fmt;
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use thiserror::Error;

/// 97.5th percentile of the standard normal, for 95% Fisher intervals.
const Z_95: f64 = 1.959963984540054;

/// Labels treated as silence when matching alignments and excluding
/// pauses from WLE/PLE.
const SILENCE_LABELS: [&str; 7] = ["", "sil", "sp", "spn", "<sil>", "<eps>", "pau"];

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("inputs have different lengths: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("need at least 3 points, got {0}")]
    TooFewPoints(usize),
    #[error("an input has zero variance; correlation is undefined")]
    ZeroVariance,
    #[error("{tier} label sequences differ: {detail}")]
    LabelSequenceMismatch { tier: Tier, detail: String },
    #[error("a sample multiset is empty")]
    EmptySample,
    #[error("phone label {0:?} is not in the sound-type table")]
    UnknownPhoneLabel(String),
    #[error("interval [{start}, {end}) is empty, reversed, or out of range")]
    BadInterval { start: f64, end: f64 },
    #[error("{tier} intervals overlap near {at} s")]
    OverlappingIntervals { tier: Tier, at: f64 },
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Tier {
    Phone,
    Word,
}

impl fmt::Display for Tier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Tier::Phone => "phone",
            Tier::Word => "word",
        })
    }
}

impl FromStr for Tier {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "phone" => Ok(Tier::Phone),
            "word" => Ok(Tier::Word),
            other => Err(format!("unknown tier {other:?}")),
        }
    }
}

/// One labeled time interval on a tier.
#[derive(Debug, Clone, PartialEq)]
pub struct Interval {
    pub tier: Tier,
    pub start: f64,
    pub end: f64,
    pub label: String,
}

impl Interval {
    pub fn duration(&self) -> f64 {
        self.end - self.start
    }
}

/// Tiered (phone/word) alignment of one utterance. Consumed, never
/// produced: forced alignment itself is out of scope.
#[derive(Debug, Clone, PartialEq)]
pub struct Alignment {
    intervals: Vec<Interval>,
    duration: f64,
}

impl Alignment {
    pub fn new(intervals: Vec<Interval>, duration: f64) -> Result<Self, MetricsError> {
        for tier in [Tier::Phone, Tier::Word] {
            let mut last_end = f64::NEG_INFINITY;
            for iv in intervals.iter().filter(|iv| iv.tier == tier) {
                if !(iv.start < iv.end) || iv.start < 0.0 || iv.end > duration + 1e-9 {
                    return Err(MetricsError::BadInterval { start: iv.start, end: iv.end });
                }
                if iv.start < last_end - 1e-9 {
                    return Err(MetricsError::OverlappingIntervals { tier, at: iv.start });
                }
                last_end = iv.end;
            }
        }
        Ok(Self { intervals, duration })
    }

    pub fn intervals(&self) -> &[Interval] {
        &self.intervals
    }

    pub fn tier(&self, tier: Tier) -> impl Iterator<Item = &Interval> {
        self.intervals.iter().filter(move |iv| iv.tier == tier)
    }

    pub fn duration(&self) -> f64 {
        self.duration
    }
}

pub fn is_silence_label(label: &str) -> bool {
    let lower = label.trim().to_ascii_lowercase();
    SILENCE_LABELS.contains(&lower.as_str())
}

// --- alignment TSV: tier, start_sec, end_sec, label ---

pub fn read_alignment(path: impl AsRef<Path>) -> Result<Alignment, MetricsError> {
    let file = File::open(path)?;
    read_alignment_from(BufReader::new(file))
}

pub fn read_alignment_from(reader: impl BufRead) -> Result<Alignment, MetricsError> {
    let mut intervals = Vec::new();
    let mut declared_duration: Option<f64> = None;
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        if let Some(comment) = line.trim_start().strip_prefix('#') {
            if let Some(v) = comment.trim().strip_prefix("duration:") {
                declared_duration =
                    Some(v.trim().parse().map_err(|_| MetricsError::Parse {
                        line: lineno,
                        msg: format!("bad duration {v:?}"),
                    })?);
            }
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 4 {
            return Err(MetricsError::Parse {
                line: lineno,
                msg: format!("expected 4 tab-separated fields, got {}", fields.len()),
            });
        }
        let tier = Tier::from_str(fields[0])
            .map_err(|msg| MetricsError::Parse { line: lineno, msg })?;
        let parse_sec = |f: &str| {
            f.parse::<f64>().map_err(|_| MetricsError::Parse {
                line: lineno,
                msg: format!("bad time {f:?}"),
            })
        };
        intervals.push(Interval {
            tier,
            start: parse_sec(fields[1])?,
            end: parse_sec(fields[2])?,
            label: fields[3].to_string(),
        });
    }
    let max_end = intervals.iter().map(|iv| iv.end).fold(0.0, f64::max);
    Alignment::new(intervals, declared_duration.unwrap_or(max_end))
}

pub fn write_alignment(path: impl AsRef<Path>, aln: &Alignment) -> Result<(), MetricsError> {
    let file = File::create(path)?;
    let mut w = BufWriter::new(file);
    writeln!(w, "# duration: {}", aln.duration())?;
    writeln!(w, "# columns: tier\tstart_sec\tend_sec\tlabel")?;
    for iv in aln.intervals() {
        writeln!(w, "{}\t{}\t{}\t{}", iv.tier, iv.start, iv.end, iv.label)?;
    }
    w.flush()?;
    Ok(())
}

/// Pearson correlation with its 95% confidence interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PearsonR {
    pub r: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

/// Sample Pearson correlation; the interval comes from the Fisher
/// z-transform.
pub fn pearson_r(xs: &[f64], ys: &[f64]) -> Result<PearsonR, MetricsError> {
    if xs.len() != ys.len() {
        return Err(MetricsError::LengthMismatch(xs.len(), ys.len()));
    }
    let n = xs.len();
    if n < 3 {
        return Err(MetricsError::TooFewPoints(n));
    }
    let nf = n as f64;
    let mean_x = xs.iter().sum::<f64>() / nf;
    let mean_y = ys.iter().sum::<f64>() / nf;
    let mut cov = 0.0;
    let mut var_x = 0.0;
    let mut var_y = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        let dx = x - mean_x;
        let dy = y - mean_y;
        cov += dx * dy;
        var_x += dx * dx;
        var_y += dy * dy;
    }
    if var_x == 0.0 || var_y == 0.0 {
        return Err(MetricsError::ZeroVariance);
    }
    let r = (cov / (var_x.sqrt() * var_y.sqrt())).clamp(-1.0, 1.0);
    let z = r.atanh();
    let half_width = Z_95 / ((nf - 3.0).sqrt());
    Ok(PearsonR {
        r,
        ci_low: (z - half_width).tanh(),
        ci_high: (z + half_width).tanh(),
    })
}

/// Duration differences at the three scales.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LengthErrors {
    /// Total length error in seconds, silences included.
    pub tle: f64,
    /// Mean absolute word-duration difference, silences excluded.
    pub wle: f64,
    /// Mean absolute phone-duration difference, silences excluded.
    pub ple: f64,
}

/// Compares a converted utterance against the parallel target utterance.
///
/// Both alignments must carry identical word and phone label sequences
/// once silence labels are dropped.
pub fn length_errors(
    converted: &Alignment,
    target: &Alignment,
) -> Result<LengthErrors, MetricsError> {
    let tle = (converted.duration() - target.duration()).abs();
    let wle = tier_mean_abs_diff(converted, target, Tier::Word)?;
    let ple = tier_mean_abs_diff(converted, target, Tier::Phone)?;
    Ok(LengthErrors { tle, wle, ple })
}

fn tier_mean_abs_diff(
    converted: &Alignment,
    target: &Alignment,
    tier: Tier,
) -> Result<f64, MetricsError> {
    let a: Vec<&Interval> =
        converted.tier(tier).filter(|iv| !is_silence_label(&iv.label)).collect();
    let b: Vec<&Interval> =
        target.tier(tier).filter(|iv| !is_silence_label(&iv.label)).collect();
    if a.len() != b.len() {
        return Err(MetricsError::LabelSequenceMismatch {
            tier,
            detail: format!("{} vs {} non-silence intervals", a.len(), b.len()),
        });
    }
    for (x, y) in a.iter().zip(&b) {
        if x.label != y.label {
            return Err(MetricsError::LabelSequenceMismatch {
                tier,
                detail: format!("{:?} vs {:?}", x.label, y.label),
            });
        }
    }
    if a.is_empty() {
        return Ok(0.0);
    }
    let total: f64 =
        a.iter().zip(&b).map(|(x, y)| (x.duration() - y.duration()).abs()).sum();
    Ok(total / a.len() as f64)
}

/// Exact 1-Wasserstein distance between two empirical distributions,
/// computed as the integral over u in (0,1) of |Q_a(u) - Q_b(u)| from the
/// piecewise-constant quantile functions. Handles unequal sample sizes.
pub fn wasserstein1(a: &[f64], b: &[f64]) -> Result<f64, MetricsError> {
    if a.is_empty() || b.is_empty() {
        return Err(MetricsError::EmptySample);
    }
    let mut xs = a.to_vec();
    let mut ys = b.to_vec();
    xs.sort_by(|p, q| p.partial_cmp(q).expect("finite samples"));
    ys.sort_by(|p, q| p.partial_cmp(q).expect("finite samples"));
    let n = xs.len() as f64;
    let m = ys.len() as f64;
    let mut distance = 0.0;
    let mut u = 0.0f64;
    let (mut i, mut j) = (0usize, 0usize);
    while i < xs.len() && j < ys.len() {
        let next_i = (i + 1) as f64 / n;
        let next_j = (j + 1) as f64 / m;
        let next = next_i.min(next_j);
        distance += (next - u) * (xs[i] - ys[j]).abs();
        u = next;
        if next_i <= next {
            i += 1;
        }
        if next_j <= next {
            j += 1;
        }
    }
    Ok(distance)
}

/// Sound types used to break down duration distributions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum SoundType {
    Vowel,
    Approximant,
    Nasal,
    Fricative,
    Stop,
    Silence,
}

impl SoundType {
    pub const ALL: [SoundType; 6] = [
        SoundType::Vowel,
        SoundType::Approximant,
        SoundType::Nasal,
        SoundType::Fricative,
        SoundType::Stop,
        SoundType::Silence,
    ];
}

impl fmt::Display for SoundType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SoundType::Vowel => "vowel",
            SoundType::Approximant => "approximant",
            SoundType::Nasal => "nasal",
            SoundType::Fricative => "fricative",
            SoundType::Stop => "stop",
            SoundType::Silence => "silence",
        })
    }
}

impl FromStr for SoundType {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "vowel" => Ok(SoundType::Vowel),
            "approximant" => Ok(SoundType::Approximant),
            "nasal" => Ok(SoundType::Nasal),
            "fricative" => Ok(SoundType::Fricative),
            "stop" => Ok(SoundType::Stop),
            "silence" => Ok(SoundType::Silence),
            other => Err(format!("unknown sound type {other:?}")),
        }
    }
}

/// Phone-label to sound-type lookup. Unknown labels are an explicit error;
/// a silently dropped phone would bias the distributions.
#[derive(Debug, Clone)]
pub struct SoundTypeTable {
    map: BTreeMap<String, SoundType>,
}

impl SoundTypeTable {
    /// Standard English (ARPAbet) inventory. Stress digits are stripped
    /// before lookup; affricates fold into stops.
    pub fn builtin_english() -> Self {
        let mut map = BTreeMap::new();
        let mut add = |labels: &[&str], t: SoundType| {
            for l in labels {
                map.insert((*l).to_string(), t);
            }
        };
        add(
            &[
                "AA", "AE", "AH", "AO", "AW", "AY", "EH", "ER", "EY", "IH", "IY", "OW",
                "OY", "UH", "UW",
            ],
            SoundType::Vowel,
        );
        add(&["L", "R", "W", "Y"], SoundType::Approximant);
        add(&["M", "N", "NG"], SoundType::Nasal);
        add(
            &["F", "V", "TH", "DH", "S", "Z", "SH", "ZH", "HH"],
            SoundType::Fricative,
        );
        add(&["P", "B", "T", "D", "K", "G", "CH", "JH"], SoundType::Stop);
        Self { map }
    }

    /// Custom table from TSV rows of `label<TAB>sound_type`.
    pub fn from_tsv(path: impl AsRef<Path>) -> Result<Self, MetricsError> {
        let file = File::open(path)?;
        let mut map = BTreeMap::new();
        for (idx, line) in BufReader::new(file).lines().enumerate() {
            let line = line?;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let (label, kind) = trimmed.split_once('\t').ok_or(MetricsError::Parse {
                line: idx + 1,
                msg: "expected label<TAB>sound_type".into(),
            })?;
            let t = SoundType::from_str(kind.trim())
                .map_err(|msg| MetricsError::Parse { line: idx + 1, msg })?;
            map.insert(label.trim().to_string(), t);
        }
        Ok(Self { map })
    }

    pub fn lookup(&self, label: &str) -> Result<SoundType, MetricsError> {
        if is_silence_label(label) {
            return Ok(SoundType::Silence);
        }
        let normalized: String = label
            .trim()
            .trim_end_matches(|c: char| c.is_ascii_digit())
            .to_ascii_uppercase();
        self.map
            .get(&normalized)
            .copied()
            .ok_or_else(|| MetricsError::UnknownPhoneLabel(label.to_string()))
    }
}

/// Buckets the phone-tier durations of an alignment by sound type.
/// All six buckets are present in the result, empty or not.
pub fn durations_by_sound_type(
    alignment: &Alignment,
    table: &SoundTypeTable,
) -> Result<BTreeMap<SoundType, Vec<f64>>, MetricsError> {
    let mut out: BTreeMap<SoundType, Vec<f64>> =
        SoundType::ALL.iter().map(|&t| (t, Vec::new())).collect();
    for iv in alignment.tier(Tier::Phone) {
        let t = table.lookup(&iv.label)?;
        out.get_mut(&t).expect("all types present").push(iv.duration());
    }
    Ok(out)
}
