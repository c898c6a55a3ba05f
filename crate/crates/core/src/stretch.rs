//! Time-stretching of unit sequences, globally by speaking-rate ratio or
//! per segment by inverse-transform duration mapping.
//!
//! Interpolation is linear on an endpoint-preserving grid: output row j
//! samples input coordinate `j * (T_in - 1) / (T_out - 1)`, so segment
//! boundary frames survive stretching and concatenation has no seams.
//! Target frame counts round half away from zero and never drop below one
//! frame; eliding a short obstruent entirely would destroy intelligibility.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use thiserror::Error;

use crate::cluster::SoundClass;
use crate::rhythm::{gamma_cdf, gamma_quantile, RhythmError, RhythmModel};
use crate::segment::Segmentation;
use crate::units::FeatureMatrix;

/// Stretch factors outside this window are suspicious; applied only when a
/// caller opts into clamping.
pub const CLAMP_RANGE: (f64, f64) = (0.25, 4.0);

#[derive(Debug, Error)]
pub enum StretchError {
    #[error("speaking rates must be positive, got src {src} tgt {tgt}")]
    NonPositiveRate { src: f64, tgt: f64 },
    #[error("segment at frame {0} has no sound class; run labeling first")]
    MissingClassModel(usize),
    #[error("fine-grained conversion needs a labeled segmentation")]
    MissingSegmentation,
    #[error("plan covers {plan} frames but features have {features}")]
    PlanCoverageMismatch { plan: usize, features: usize },
    #[error("plan spans must be contiguous, entry {0} is not")]
    PlanNotContiguous(usize),
    #[error("frame rates differ: features {features}, source model {src}, target model {tgt}")]
    FrameRateMismatch { features: f64, src: f64, tgt: f64 },
    #[error(transparent)]
    Rhythm(#[from] RhythmError),
    #[error(transparent)]
    Io(#[from] io::Error),
}

fn round_half_away(x: f64) -> usize {
    debug_assert!(x >= 0.0);
    (x + 0.5).floor() as usize
}

/// Linearly resamples `frames` to `target_len` rows.
pub fn interpolate(frames: &FeatureMatrix, target_len: usize) -> FeatureMatrix {
    let target_len = target_len.max(1);
    let data = interpolate_rows(frames.data(), frames.num_frames(), frames.dim(), target_len);
    FeatureMatrix::from_parts_unchecked(target_len, frames.dim(), data, frames.frame_rate())
}

fn interpolate_rows(data: &[f64], rows: usize, cols: usize, target: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(target * cols);
    if rows == 1 {
        for _ in 0..target {
            out.extend_from_slice(&data[..cols]);
        }
        return out;
    }
    for j in 0..target {
        let coord = if target == 1 {
            (rows - 1) as f64 / 2.0
        } else {
            j as f64 * (rows - 1) as f64 / (target - 1) as f64
        };
        let lower = coord.floor() as usize;
        let upper = (lower + 1).min(rows - 1);
        let frac = coord - lower as f64;
        let a = &data[lower * cols..(lower + 1) * cols];
        let b = &data[upper * cols..(upper + 1) * cols];
        out.extend(a.iter().zip(b).map(|(x, y)| x + frac * (y - x)));
    }
    out
}

/// Stretches a whole utterance by the ratio of speaking rates: a faster
/// target shortens the output.
pub fn global_stretch(
    features: &FeatureMatrix,
    src_rate: f64,
    tgt_rate: f64,
) -> Result<FeatureMatrix, StretchError> {
    if !(src_rate > 0.0) || !(tgt_rate > 0.0) {
        return Err(StretchError::NonPositiveRate { src: src_rate, tgt: tgt_rate });
    }
    let factor = src_rate / tgt_rate;
    let target = round_half_away(features.num_frames() as f64 * factor).max(1);
    Ok(interpolate(features, target))
}

/// One segment's retiming decision.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanEntry {
    pub start: usize,
    pub end: usize,
    pub class: SoundClass,
    pub factor: f64,
    pub target_frames: usize,
}

/// Per-segment stretch factors and target lengths for one utterance.
#[derive(Debug, Clone, PartialEq)]
pub struct StretchPlan {
    pub entries: Vec<PlanEntry>,
    pub source_frames: usize,
    pub target_frames: usize,
}

/// Maps each segment duration through the source CDF and the target
/// quantile function: `u = F_src(x)`, `y = Q_tgt(u)`, factor `y / x`.
pub fn build_fine_plan(
    seg: &Segmentation,
    src: &RhythmModel,
    tgt: &RhythmModel,
    frame_rate: f64,
    clamp: Option<(f64, f64)>,
) -> Result<StretchPlan, StretchError> {
    let mut entries = Vec::with_capacity(seg.len());
    let mut total = 0usize;
    for s in seg.segments() {
        let class = s.class.ok_or(StretchError::MissingClassModel(s.start))?;
        let src_params = src.class_params(class);
        let tgt_params = tgt.class_params(class);
        let x = s.len() as f64 / frame_rate;
        // keep u strictly inside (0, 1): the far tails would otherwise
        // collapse a segment to zero frames or an unbounded quantile
        let u = gamma_cdf(&src_params, x).clamp(f64::MIN_POSITIVE, 1.0 - 1e-12);
        let y = gamma_quantile(&tgt_params, u)?;
        let mut factor = y / x;
        if let Some((lo, hi)) = clamp {
            factor = factor.clamp(lo, hi);
        }
        let target_frames = round_half_away(s.len() as f64 * factor).max(1);
        total += target_frames;
        entries.push(PlanEntry { start: s.start, end: s.end, class, factor, target_frames });
    }
    Ok(StretchPlan {
        entries,
        source_frames: seg.total_frames(),
        target_frames: total,
    })
}

/// Stretches each planned span to its target length and concatenates.
pub fn apply_plan(
    features: &FeatureMatrix,
    plan: &StretchPlan,
) -> Result<FeatureMatrix, StretchError> {
    if plan.source_frames != features.num_frames() {
        return Err(StretchError::PlanCoverageMismatch {
            plan: plan.source_frames,
            features: features.num_frames(),
        });
    }
    let mut cursor = 0usize;
    for (i, e) in plan.entries.iter().enumerate() {
        if e.start != cursor || e.end <= e.start {
            return Err(StretchError::PlanNotContiguous(i));
        }
        cursor = e.end;
    }
    if cursor != features.num_frames() {
        return Err(StretchError::PlanCoverageMismatch {
            plan: cursor,
            features: features.num_frames(),
        });
    }
    let cols = features.dim();
    let mut data = Vec::with_capacity(plan.target_frames * cols);
    for e in &plan.entries {
        let span = &features.data()[e.start * cols..e.end * cols];
        data.extend(interpolate_rows(span, e.end - e.start, cols, e.target_frames));
    }
    debug_assert_eq!(data.len(), plan.target_frames * cols);
    Ok(FeatureMatrix::from_parts_unchecked(
        plan.target_frames,
        cols,
        data,
        features.frame_rate(),
    ))
}

/// Audit dump: start, end, class, factor, target_frames per row.
pub fn write_plan(path: impl AsRef<Path>, plan: &StretchPlan) -> Result<(), StretchError> {
    let file = File::create(path)?;
    let mut w = BufWriter::new(file);
    writeln!(w, "# urmx stretch plan")?;
    writeln!(w, "# source_frames: {}", plan.source_frames)?;
    writeln!(w, "# target_frames: {}", plan.target_frames)?;
    writeln!(w, "# columns: start\tend\tclass\tfactor\ttarget_frames")?;
    for e in &plan.entries {
        writeln!(
            w,
            "{}\t{}\t{}\t{}\t{}",
            e.start,
            e.end,
            e.class.code(),
            e.factor,
            e.target_frames
        )?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rhythm::{ClassModel, ClassModels, Provenance, MODEL_FORMAT_VERSION};
    use crate::segment::Segment;
    use approx::assert_abs_diff_eq;
    use std::collections::BTreeMap;

    fn matrix(rows: Vec<Vec<f64>>) -> FeatureMatrix {
        FeatureMatrix::from_rows(rows, 50.0).unwrap()
    }

    #[test]
    fn identity_when_lengths_match() {
        let m = matrix(vec![vec![1.0, 2.0], vec![3.0, 4.0], vec![5.0, 6.0]]);
        let out = interpolate(&m, 3);
        assert_eq!(out, m);
    }

    #[test]
    fn midpoint_insertion() {
        let m = matrix(vec![vec![0.0], vec![2.0]]);
        let out = interpolate(&m, 3);
        assert_eq!(out.data(), &[0.0, 1.0, 2.0]);
    }

    #[test]
    fn single_frame_repeats() {
        let m = matrix(vec![vec![7.0, -1.0]]);
        let out = interpolate(&m, 5);
        assert_eq!(out.num_frames(), 5);
        for t in 0..5 {
            assert_eq!(out.row(t), &[7.0, -1.0]);
        }
    }

    #[test]
    fn target_one_takes_temporal_midpoint() {
        let m = matrix(vec![vec![0.0], vec![10.0], vec![4.0]]);
        let out = interpolate(&m, 1);
        // midpoint coordinate 1.0 falls exactly on the middle row
        assert_eq!(out.data(), &[10.0]);
    }

    #[test]
    fn global_stretch_equal_rates_is_identity() {
        let m = matrix((0..10).map(|i| vec![i as f64]).collect());
        let out = global_stretch(&m, 4.26, 4.26).unwrap();
        assert_eq!(out, m);
    }

    #[test]
    fn global_stretch_halves_length() {
        let m = matrix((0..100).map(|i| vec![i as f64]).collect());
        let out = global_stretch(&m, 4.26, 8.52).unwrap();
        assert_eq!(out.num_frames(), 50);
    }

    #[test]
    fn global_stretch_duration_accounting() {
        // 100 frames at 50 Hz = 2.0 s; rates 4 -> 5 give factor 0.8 -> 1.6 s
        let m = matrix((0..100).map(|i| vec![(i as f64).sin()]).collect());
        let out = global_stretch(&m, 4.0, 5.0).unwrap();
        assert_eq!(out.num_frames(), 80);
        assert_abs_diff_eq!(out.num_frames() as f64 / 50.0, 1.6, epsilon = 1e-12);
    }

    #[test]
    fn global_stretch_rejects_bad_rates() {
        let m = matrix(vec![vec![0.0]]);
        assert!(matches!(
            global_stretch(&m, 0.0, 1.0),
            Err(StretchError::NonPositiveRate { .. })
        ));
    }

    fn model(son: (f64, f64), obs: (f64, f64), sil: (f64, f64)) -> RhythmModel {
        let mut map = BTreeMap::new();
        map.insert(0usize, SoundClass::Sonorant);
        map.insert(1, SoundClass::Obstruent);
        map.insert(2, SoundClass::Silence);
        RhythmModel {
            format_version: MODEL_FORMAT_VERSION,
            frame_rate: 50.0,
            speaking_rate: 4.0,
            classes: ClassModels {
                sonorant: ClassModel { shape: son.0, rate: son.1, n_samples: 100 },
                obstruent: ClassModel { shape: obs.0, rate: obs.1, n_samples: 100 },
                silence: ClassModel { shape: sil.0, rate: sil.1, n_samples: 100 },
            },
            sound_class_map: map,
            provenance: Provenance {
                gamma: 2.0,
                tau: 0.1,
                linkage: "ward".into(),
                vad_threshold_db: 40.0,
                voicing_threshold: 0.45,
            },
        }
    }

    fn labeled_seg(spans: Vec<(usize, usize, SoundClass)>) -> Segmentation {
        let segments = spans
            .into_iter()
            .map(|(start, end, class)| {
                let mut s = Segment::new(start, end, 0);
                s.class = Some(class);
                s
            })
            .collect();
        Segmentation::new(segments, 2.0).unwrap()
    }

    #[test]
    fn identical_models_give_unit_factors() {
        let m = model((4.0, 20.0), (3.0, 30.0), (2.0, 8.0));
        let seg = labeled_seg(vec![
            (0, 10, SoundClass::Silence),
            (10, 18, SoundClass::Sonorant),
            (18, 23, SoundClass::Obstruent),
            (23, 30, SoundClass::Sonorant),
        ]);
        let plan = build_fine_plan(&seg, &m, &m, 50.0, None).unwrap();
        for e in &plan.entries {
            assert_abs_diff_eq!(e.factor, 1.0, epsilon = 1e-7);
            assert_eq!(e.target_frames, e.end - e.start);
        }
        assert_eq!(plan.target_frames, 30);
    }

    #[test]
    fn equal_shapes_scale_linearly() {
        // same shape, rates 40 vs 20: the quantile map is x -> 2x
        let src = model((4.0, 40.0), (3.0, 30.0), (2.0, 8.0));
        let tgt = model((4.0, 20.0), (3.0, 30.0), (2.0, 8.0));
        let seg = labeled_seg(vec![
            (0, 4, SoundClass::Sonorant),
            (4, 12, SoundClass::Sonorant),
            (12, 17, SoundClass::Sonorant),
        ]);
        let plan = build_fine_plan(&seg, &src, &tgt, 50.0, None).unwrap();
        for e in &plan.entries {
            assert_abs_diff_eq!(e.factor, 2.0, epsilon = 1e-8);
        }
        assert_eq!(plan.entries[0].target_frames, 8);
        assert_eq!(plan.entries[1].target_frames, 16);
    }

    #[test]
    fn mixed_classes_match_scalar_evaluation() {
        let src = model((4.0, 22.0), (2.5, 35.0), (1.8, 6.0));
        let tgt = model((5.0, 18.0), (3.5, 28.0), (2.2, 10.0));
        let seg = labeled_seg(vec![
            (0, 12, SoundClass::Silence),
            (12, 20, SoundClass::Sonorant),
            (20, 26, SoundClass::Obstruent),
        ]);
        let plan = build_fine_plan(&seg, &src, &tgt, 50.0, None).unwrap();
        for (e, s) in plan.entries.iter().zip(seg.segments()) {
            let class = s.class.unwrap();
            let x = s.len() as f64 / 50.0;
            let u = gamma_cdf(&src.class_params(class), x);
            let y = gamma_quantile(&tgt.class_params(class), u).unwrap();
            assert_abs_diff_eq!(e.factor, y / x, epsilon = 1e-8);
        }
    }

    #[test]
    fn unlabeled_segment_is_rejected() {
        let m = model((4.0, 20.0), (3.0, 30.0), (2.0, 8.0));
        let seg = Segmentation::new(vec![Segment::new(0, 5, 0)], 2.0).unwrap();
        assert!(matches!(
            build_fine_plan(&seg, &m, &m, 50.0, None),
            Err(StretchError::MissingClassModel(0))
        ));
    }

    #[test]
    fn clamp_limits_factors() {
        // silence mean differs 8x; clamp caps the factor at 4
        let src = model((4.0, 20.0), (3.0, 30.0), (2.0, 32.0));
        let tgt = model((4.0, 20.0), (3.0, 30.0), (2.0, 4.0));
        let seg = labeled_seg(vec![(0, 10, SoundClass::Silence)]);
        let unclamped = build_fine_plan(&seg, &src, &tgt, 50.0, None).unwrap();
        assert!(unclamped.entries[0].factor > 4.0);
        let clamped = build_fine_plan(&seg, &src, &tgt, 50.0, Some(CLAMP_RANGE)).unwrap();
        assert_eq!(clamped.entries[0].factor, 4.0);
    }

    #[test]
    fn apply_plan_factors_and_lengths() {
        let m = matrix((0..20).map(|i| vec![i as f64]).collect());
        let plan = StretchPlan {
            entries: vec![
                PlanEntry {
                    start: 0,
                    end: 10,
                    class: SoundClass::Sonorant,
                    factor: 2.0,
                    target_frames: 20,
                },
                PlanEntry {
                    start: 10,
                    end: 20,
                    class: SoundClass::Obstruent,
                    factor: 0.5,
                    target_frames: 5,
                },
            ],
            source_frames: 20,
            target_frames: 25,
        };
        let out = apply_plan(&m, &plan).unwrap();
        assert_eq!(out.num_frames(), 25);
        // endpoints of each span survive
        assert_eq!(out.row(0), &[0.0]);
        assert_eq!(out.row(19), &[9.0]);
        assert_eq!(out.row(20), &[10.0]);
        assert_eq!(out.row(24), &[19.0]);
    }

    #[test]
    fn apply_plan_all_unit_factors_is_identity() {
        let m = matrix((0..8).map(|i| vec![i as f64, -(i as f64)]).collect());
        let plan = StretchPlan {
            entries: vec![
                PlanEntry {
                    start: 0,
                    end: 5,
                    class: SoundClass::Sonorant,
                    factor: 1.0,
                    target_frames: 5,
                },
                PlanEntry {
                    start: 5,
                    end: 8,
                    class: SoundClass::Silence,
                    factor: 1.0,
                    target_frames: 3,
                },
            ],
            source_frames: 8,
            target_frames: 8,
        };
        let out = apply_plan(&m, &plan).unwrap();
        assert_eq!(out, m);
    }

    #[test]
    fn half_coverage_plan_is_rejected() {
        let m = matrix((0..20).map(|i| vec![i as f64]).collect());
        let plan = StretchPlan {
            entries: vec![PlanEntry {
                start: 0,
                end: 10,
                class: SoundClass::Sonorant,
                factor: 1.0,
                target_frames: 10,
            }],
            source_frames: 20,
            target_frames: 10,
        };
        match apply_plan(&m, &plan) {
            Err(StretchError::PlanCoverageMismatch { plan: 10, features: 20 }) => {}
            other => panic!("expected coverage mismatch, got {other:?}"),
        }
    }

    #[test]
    fn round_trip_restores_length_within_two_frames() {
        for t in [20usize, 33, 57, 100] {
            let m = matrix((0..t).map(|i| vec![(i as f64 * 0.37).sin()]).collect());
            for f in [0.5, 0.8, 1.25, 2.0] {
                let out = global_stretch(&m, 1.0, 1.0 / f).unwrap();
                let back = global_stretch(&out, 1.0, f).unwrap();
                let diff = back.num_frames() as i64 - t as i64;
                assert!(diff.abs() <= 2, "T={t} f={f} diff={diff}");
            }
        }
    }

    #[test]
    fn interpolation_stays_in_segment_bounds() {
        let m = matrix((0..30).map(|i| vec![(i as f64 * 1.7).cos(), i as f64]).collect());
        let out = interpolate(&m, 47);
        for d in 0..2 {
            let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
            for t in 0..30 {
                lo = lo.min(m.row(t)[d]);
                hi = hi.max(m.row(t)[d]);
            }
            for t in 0..47 {
                let v = out.row(t)[d];
                assert!(v >= lo - 1e-12 && v <= hi + 1e-12);
            }
        }
    }
}
