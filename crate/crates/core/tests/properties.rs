//! Property tests for the spec-level invariants that hold over all inputs,
//! not just the worked examples.

use proptest::prelude::*;
use urmx_core::cluster::{merge_segments, ClusterAssignment};
use urmx_core::segment::{Segment, Segmentation};
use urmx_core::units::{unit_log_probs, Codebook, FeatureMatrix};

fn finite_row(dim: usize) -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(-10.0f64..10.0, dim).prop_filter("nonzero norm", |row| {
        row.iter().map(|v| v * v).sum::<f64>().sqrt() > 1e-6
    })
}

fn features_and_codebook() -> impl Strategy<Value = (FeatureMatrix, Codebook)> {
    (2usize..6, 1usize..8, 2usize..6, 0.05f64..2.0).prop_flat_map(|(d, t, k, tau)| {
        let features = proptest::collection::vec(finite_row(d), t);
        let codebook = proptest::collection::vec(finite_row(d), k);
        (features, codebook).prop_map(move |(f, c)| {
            let fm = FeatureMatrix::from_rows(f, 50.0).unwrap();
            let flat: Vec<f64> = c.iter().flatten().copied().collect();
            let cb = Codebook::new(c.len(), d, flat, tau).unwrap();
            (fm, cb)
        })
    })
}

proptest! {
    #[test]
    fn log_prob_rows_normalize((features, codebook) in features_and_codebook()) {
        let lp = unit_log_probs(&features, &codebook).unwrap();
        for t in 0..lp.num_frames() {
            let sum: f64 = lp.row(t).iter().map(|v| v.exp()).sum();
            prop_assert!((sum - 1.0).abs() < 1e-6, "row {t} sums to {sum}");
            for &v in lp.row(t) {
                prop_assert!(v <= 1e-9);
            }
        }
    }

    #[test]
    fn log_probs_are_scale_invariant(
        (features, codebook) in features_and_codebook(),
        scale in 0.1f64..50.0,
    ) {
        let lp = unit_log_probs(&features, &codebook).unwrap();
        let scaled_rows: Vec<Vec<f64>> = (0..features.num_frames())
            .map(|t| features.row(t).iter().map(|v| v * scale).collect())
            .collect();
        let scaled = FeatureMatrix::from_rows(scaled_rows, 50.0).unwrap();
        let lp2 = unit_log_probs(&scaled, &codebook).unwrap();
        for t in 0..lp.num_frames() {
            for i in 0..lp.num_units() {
                prop_assert!((lp.value(t, i) - lp2.value(t, i)).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn lower_temperature_sharpens_rows((features, codebook) in features_and_codebook()) {
        let lp_warm = unit_log_probs(&features, &codebook).unwrap();
        let cb_cold = Codebook::new(
            codebook.len(),
            codebook.dim(),
            (0..codebook.len()).flat_map(|i| codebook.embedding(i).to_vec()).collect(),
            codebook.temperature() / 2.0,
        )
        .unwrap();
        let lp_cold = unit_log_probs(&features, &cb_cold).unwrap();
        for t in 0..lp_warm.num_frames() {
            let max_warm = lp_warm.row(t).iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let max_cold = lp_cold.row(t).iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let min_warm = lp_warm.row(t).iter().copied().fold(f64::INFINITY, f64::min);
            prop_assert!(max_cold >= max_warm - 1e-12);
            if max_warm - min_warm > 1e-3 {
                // similarities genuinely differ: the peak sharpens strictly
                prop_assert!(max_cold > max_warm);
            }
        }
    }
}

fn arbitrary_segmentation() -> impl Strategy<Value = (Segmentation, ClusterAssignment)> {
    (2usize..8, 1usize..12).prop_flat_map(|(units, nsegs)| {
        let lens = proptest::collection::vec(1usize..6, nsegs);
        let segs = proptest::collection::vec(0..units, nsegs);
        let labels = proptest::collection::vec(0usize..3, units);
        (lens, segs, labels).prop_map(|(lens, units_per_seg, labels)| {
            let mut start = 0;
            let mut segments = Vec::new();
            for (len, unit) in lens.into_iter().zip(units_per_seg) {
                segments.push(Segment::new(start, start + len, unit));
                start += len;
            }
            let seg = Segmentation::new(segments, 2.0).unwrap();
            let assignment =
                ClusterAssignment { n_clusters: 3, labels, merge_history: vec![] };
            (seg, assignment)
        })
    })
}

proptest! {
    #[test]
    fn merged_neighbors_differ_and_coverage_holds(
        (seg, assignment) in arbitrary_segmentation()
    ) {
        let merged = merge_segments(&seg, &assignment).unwrap();
        prop_assert_eq!(merged.total_frames(), seg.total_frames());
        let total: usize = merged.segments().iter().map(Segment::len).sum();
        prop_assert_eq!(total, seg.total_frames());
        for pair in merged.segments().windows(2) {
            prop_assert_ne!(pair[0].cluster, pair[1].cluster);
        }
        // idempotence
        let again = merge_segments(&merged, &assignment).unwrap();
        let spans_before: Vec<(usize, usize)> =
            merged.segments().iter().map(|s| (s.start, s.end)).collect();
        let spans_after: Vec<(usize, usize)> =
            again.segments().iter().map(|s| (s.start, s.end)).collect();
        prop_assert_eq!(spans_before, spans_after);
    }
}
