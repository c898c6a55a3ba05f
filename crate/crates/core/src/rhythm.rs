//! Speaker rhythm models: global speaking rate plus per-class gamma
//! duration distributions, with JSON persistence.
//!
//! Speaking rate counts sonorant-class segments per second of speech, a
//! transcription-free stand-in for the syllable rate. Per-class durations
//! are modeled as independent gamma distributions fitted by maximum
//! likelihood: the shape solves `ln a - psi(a) = ln(mean) - mean(ln x)` by
//! Newton iteration from the closed-form initializer, and the rate follows
//! as `a / mean`.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cluster::SoundClass;
use crate::segment::Segmentation;
use crate::special::{digamma, ln_gamma, reg_lower_gamma, trigamma};

/// Durations with a fitted mean outside this band (seconds) indicate a unit
/// mix-up rather than speech, so they are rejected.
pub const MEAN_DURATION_BAND: (f64, f64) = (1e-3, 60.0);

/// Fewest duration samples accepted by a gamma fit.
pub const DEFAULT_MIN_SAMPLES: usize = 10;

#[derive(Debug, Error)]
pub enum RhythmError {
    #[error("need at least {need} duration samples, got {got}")]
    TooFewSamples { got: usize, need: usize },
    #[error("durations are degenerate (all equal); a gamma fit is undefined")]
    DegenerateData,
    #[error("duration sample {index} is not a positive finite number")]
    NonPositiveDuration { index: usize },
    #[error("gamma MLE did not converge within {0} iterations")]
    ConvergenceFailure(usize),
    #[error("gamma parameters out of range: shape {shape}, rate {rate}")]
    BadParameters { shape: f64, rate: f64 },
    #[error("fitted mean {0} s outside the plausible duration band")]
    ImplausibleMean(f64),
    #[error("speaking-rate estimation needs a non-empty corpus with positive duration")]
    EmptyCorpus,
    #[error("segment at frame {0} carries no sound class")]
    UnlabeledSegment(usize),
    #[error("frame rate must be positive, got {0}")]
    BadFrameRate(f64),
    #[error("quantile at u = 1 is unbounded")]
    UAtOne,
    #[error("quantile argument {0} is not a probability in [0, 1)")]
    InvalidProbability(f64),
    #[error("model file does not match the expected schema: {0}")]
    SchemaMismatch(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Shape/rate parameterization of a gamma distribution over seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaParams {
    pub shape: f64,
    pub rate: f64,
}

impl GammaParams {
    pub fn new(shape: f64, rate: f64) -> Result<Self, RhythmError> {
        if !(shape > 0.0) || !(rate > 0.0) || !shape.is_finite() || !rate.is_finite() {
            return Err(RhythmError::BadParameters { shape, rate });
        }
        let mean = shape / rate;
        if !(MEAN_DURATION_BAND.0..=MEAN_DURATION_BAND.1).contains(&mean) {
            return Err(RhythmError::ImplausibleMean(mean));
        }
        Ok(Self { shape, rate })
    }

    pub fn mean(&self) -> f64 {
        self.shape / self.rate
    }
}

/// Cumulative distribution function: regularized lower incomplete gamma
/// P(shape, rate * x). Zero for x <= 0.
pub fn gamma_cdf(p: &GammaParams, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    reg_lower_gamma(p.shape, p.rate * x)
}

/// Density, used by the quantile Newton steps and likelihood checks.
pub fn gamma_pdf(p: &GammaParams, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    ((p.shape - 1.0) * x.ln() + p.shape * p.rate.ln() - p.rate * x - ln_gamma(p.shape)).exp()
}

/// Inverse CDF by bracketing plus Newton refinement: returns x with
/// `|gamma_cdf(p, x) - u| < 1e-10`. `u = 0` maps to 0.
pub fn gamma_quantile(p: &GammaParams, u: f64) -> Result<f64, RhythmError> {
    if u.is_nan() || u < 0.0 {
        return Err(RhythmError::InvalidProbability(u));
    }
    if u >= 1.0 {
        return Err(RhythmError::UAtOne);
    }
    if u == 0.0 {
        return Ok(0.0);
    }
    let mut lo = 0.0f64;
    let mut hi = p.mean().max(1e-12);
    let mut guard = 0;
    while gamma_cdf(p, hi) < u {
        hi *= 2.0;
        guard += 1;
        if guard > 300 {
            return Err(RhythmError::InvalidProbability(u));
        }
    }
    let mut x = 0.5 * (lo + hi);
    for _ in 0..500 {
        let f = gamma_cdf(p, x) - u;
        if f.abs() < 1e-10 {
            return Ok(x);
        }
        if f > 0.0 {
            hi = x;
        } else {
            lo = x;
        }
        let slope = gamma_pdf(p, x);
        let newton = x - f / slope;
        x = if slope > 0.0 && newton.is_finite() && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
    }
    Ok(x)
}

/// Maximum-likelihood gamma fit over positive duration samples.
pub fn fit_gamma(durations: &[f64], min_samples: usize) -> Result<GammaParams, RhythmError> {
    if durations.len() < min_samples.max(2) {
        return Err(RhythmError::TooFewSamples {
            got: durations.len(),
            need: min_samples.max(2),
        });
    }
    for (index, &d) in durations.iter().enumerate() {
        if !(d > 0.0) || !d.is_finite() {
            return Err(RhythmError::NonPositiveDuration { index });
        }
    }
    let first = durations[0];
    if durations.iter().all(|&d| d == first) {
        return Err(RhythmError::DegenerateData);
    }
    let n = durations.len() as f64;
    let mean = durations.iter().sum::<f64>() / n;
    let mean_ln = durations.iter().map(|d| d.ln()).sum::<f64>() / n;
    let s = mean.ln() - mean_ln;
    if !(s > 0.0) {
        // mathematically s > 0 unless all samples coincide
        return Err(RhythmError::DegenerateData);
    }
    let mut shape = (3.0 - s + ((s - 3.0).powi(2) + 24.0 * s).sqrt()) / (12.0 * s);
    let mut converged = false;
    for _ in 0..100 {
        let f = shape.ln() - digamma(shape) - s;
        let fprime = 1.0 / shape - trigamma(shape);
        let step = f / fprime;
        let mut next = shape - step;
        if next <= 0.0 {
            next = shape / 2.0;
        }
        let delta = (next - shape).abs();
        shape = next;
        if delta < 1e-10 * shape {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(RhythmError::ConvergenceFailure(100));
    }
    GammaParams::new(shape, shape / mean)
}

/// Sonorant segments per second over a labeled corpus.
///
/// The denominator is the total utterance duration; `exclude_silence` drops
/// silence-class frames from it instead, matching rate measurements made on
/// silence-filtered alignments.
pub fn estimate_speaking_rate(
    corpus: &[Segmentation],
    frame_rate: f64,
    exclude_silence: bool,
) -> Result<f64, RhythmError> {
    if !(frame_rate > 0.0) || !frame_rate.is_finite() {
        return Err(RhythmError::BadFrameRate(frame_rate));
    }
    if corpus.is_empty() {
        return Err(RhythmError::EmptyCorpus);
    }
    let mut sonorants = 0u64;
    let mut frames = 0u64;
    for seg in corpus {
        for s in seg.segments() {
            let class = s.class.ok_or(RhythmError::UnlabeledSegment(s.start))?;
            if class == SoundClass::Sonorant {
                sonorants += 1;
            }
            if !(exclude_silence && class == SoundClass::Silence) {
                frames += s.len() as u64;
            }
        }
    }
    if frames == 0 {
        return Err(RhythmError::EmptyCorpus);
    }
    let seconds = frames as f64 / frame_rate;
    Ok(sonorants as f64 / seconds)
}

/// Gathers per-class segment durations (seconds) across a labeled corpus.
pub fn class_durations(
    corpus: &[Segmentation],
    frame_rate: f64,
) -> Result<BTreeMap<SoundClass, Vec<f64>>, RhythmError> {
    if !(frame_rate > 0.0) || !frame_rate.is_finite() {
        return Err(RhythmError::BadFrameRate(frame_rate));
    }
    let mut out: BTreeMap<SoundClass, Vec<f64>> =
        SoundClass::ALL.iter().map(|&c| (c, Vec::new())).collect();
    for seg in corpus {
        for s in seg.segments() {
            let class = s.class.ok_or(RhythmError::UnlabeledSegment(s.start))?;
            out.get_mut(&class).expect("all classes present").push(s.len() as f64 / frame_rate);
        }
    }
    Ok(out)
}

/// Fitted gamma parameters for one sound class plus the sample count
/// behind them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassModel {
    pub shape: f64,
    pub rate: f64,
    pub n_samples: usize,
}

impl ClassModel {
    pub fn params(&self) -> GammaParams {
        GammaParams { shape: self.shape, rate: self.rate }
    }
}

/// Duration models for the three sound classes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassModels {
    pub sonorant: ClassModel,
    pub obstruent: ClassModel,
    pub silence: ClassModel,
}

impl ClassModels {
    pub fn get(&self, class: SoundClass) -> &ClassModel {
        match class {
            SoundClass::Sonorant => &self.sonorant,
            SoundClass::Obstruent => &self.obstruent,
            SoundClass::Silence => &self.silence,
        }
    }
}

/// Settings a model was fitted under, stored so saved models remain
/// comparable when defaults change.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub gamma: f64,
    pub tau: f64,
    pub linkage: String,
    pub vad_threshold_db: f64,
    pub voicing_threshold: f64,
}

/// A speaker's rhythm: global speaking rate, per-class gamma durations,
/// the cluster-to-class map, and fitting provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RhythmModel {
    pub format_version: u32,
    pub frame_rate: f64,
    pub speaking_rate: f64,
    pub classes: ClassModels,
    pub sound_class_map: BTreeMap<usize, SoundClass>,
    pub provenance: Provenance,
}

pub const MODEL_FORMAT_VERSION: u32 = 1;

impl RhythmModel {
    pub fn class_params(&self, class: SoundClass) -> GammaParams {
        self.classes.get(class).params()
    }

    fn validate(&self) -> Result<(), RhythmError> {
        if self.format_version != MODEL_FORMAT_VERSION {
            return Err(RhythmError::SchemaMismatch(format!(
                "format_version {} (expected {})",
                self.format_version, MODEL_FORMAT_VERSION
            )));
        }
        if !(self.frame_rate > 0.0) || !self.frame_rate.is_finite() {
            return Err(RhythmError::SchemaMismatch(format!(
                "frame_rate {} is not positive",
                self.frame_rate
            )));
        }
        if !(self.speaking_rate > 0.0) || !self.speaking_rate.is_finite() {
            return Err(RhythmError::SchemaMismatch(format!(
                "speaking_rate {} is not positive",
                self.speaking_rate
            )));
        }
        for class in SoundClass::ALL {
            let m = self.classes.get(class);
            GammaParams::new(m.shape, m.rate).map_err(|e| {
                RhythmError::SchemaMismatch(format!("{class} parameters: {e}"))
            })?;
        }
        let mut seen: Vec<SoundClass> = self.sound_class_map.values().copied().collect();
        seen.sort_unstable();
        if seen != SoundClass::ALL.to_vec() {
            return Err(RhythmError::SchemaMismatch(
                "sound_class_map must assign each class to exactly one cluster".into(),
            ));
        }
        Ok(())
    }
}

pub fn save_model(path: impl AsRef<Path>, model: &RhythmModel) -> Result<(), RhythmError> {
    model.validate()?;
    let file = File::create(path)?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, model)
        .map_err(|e| RhythmError::SchemaMismatch(e.to_string()))?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

pub fn load_model(path: impl AsRef<Path>) -> Result<RhythmModel, RhythmError> {
    let file = File::open(path)?;
    let model: RhythmModel = serde_json::from_reader(BufReader::new(file))
        .map_err(|e| RhythmError::SchemaMismatch(e.to_string()))?;
    model.validate()?;
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::segment::Segment;
    use approx::assert_abs_diff_eq;

    fn params(shape: f64, rate: f64) -> GammaParams {
        GammaParams::new(shape, rate).unwrap()
    }

    #[test]
    fn cdf_limits() {
        let p = params(2.0, 3.0);
        assert_eq!(gamma_cdf(&p, 0.0), 0.0);
        assert_eq!(gamma_cdf(&p, -1.0), 0.0);
        assert_abs_diff_eq!(gamma_cdf(&p, 1e4), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn cdf_exponential_closed_form() {
        let p = params(1.0, 1.0);
        assert_abs_diff_eq!(gamma_cdf(&p, 1.0), 1.0 - (-1.0f64).exp(), epsilon = 1e-12);
        let p2 = params(1.0, 2.5);
        for i in 1..50 {
            let x = i as f64 * 0.1;
            assert_abs_diff_eq!(gamma_cdf(&p2, x), 1.0 - (-2.5 * x).exp(), epsilon = 1e-12);
        }
    }

    #[test]
    fn cdf_reference_value() {
        let p = params(2.5, 1.3);
        assert_abs_diff_eq!(gamma_cdf(&p, 2.0), 0.6080371084003661, epsilon = 1e-11);
    }

    #[test]
    fn cdf_scale_family() {
        let a = params(3.2, 7.0);
        let unit = params(3.2, 1.0);
        for i in 1..40 {
            let x = i as f64 * 0.05;
            assert_abs_diff_eq!(gamma_cdf(&a, x), gamma_cdf(&unit, 7.0 * x), epsilon = 1e-12);
        }
    }

    #[test]
    fn quantile_of_exponential_median() {
        let p = params(1.0, 1.0);
        assert_abs_diff_eq!(
            gamma_quantile(&p, 0.5).unwrap(),
            std::f64::consts::LN_2,
            epsilon = 1e-9
        );
    }

    #[test]
    fn quantile_edges() {
        let p = params(2.0, 2.0);
        assert_eq!(gamma_quantile(&p, 0.0).unwrap(), 0.0);
        assert!(matches!(gamma_quantile(&p, 1.0), Err(RhythmError::UAtOne)));
        assert!(matches!(
            gamma_quantile(&p, -0.1),
            Err(RhythmError::InvalidProbability(_))
        ));
    }

    #[test]
    fn quantile_round_trip() {
        for &(shape, rate) in &[(0.5, 1.0), (2.0, 3.0), (7.5, 0.4), (1.0, 10.0)] {
            let p = params(shape, rate);
            for i in 1..100 {
                let u = i as f64 / 100.0;
                let x = gamma_quantile(&p, u).unwrap();
                assert!(
                    (gamma_cdf(&p, x) - u).abs() < 1e-8,
                    "round trip failed for a={shape} b={rate} u={u}"
                );
            }
        }
    }

    #[test]
    fn fit_recovers_known_parameters() {
        use rand::SeedableRng;
        use rand_distr::{Distribution, Gamma};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let gen = Gamma::new(2.0, 1.0 / 3.0).unwrap(); // shape 2, rate 3
        let samples: Vec<f64> = (0..10_000).map(|_| gen.sample(&mut rng)).collect();
        let fitted = fit_gamma(&samples, DEFAULT_MIN_SAMPLES).unwrap();
        assert!((fitted.shape - 2.0).abs() < 0.1, "shape {}", fitted.shape);
        assert!((fitted.rate - 3.0).abs() < 0.15, "rate {}", fitted.rate);
    }

    #[test]
    fn fit_recovers_exponential() {
        use rand::SeedableRng;
        use rand_distr::{Distribution, Gamma};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let gen = Gamma::new(1.0, 0.5).unwrap(); // shape 1, mean 0.5
        let samples: Vec<f64> = (0..10_000).map(|_| gen.sample(&mut rng)).collect();
        let fitted = fit_gamma(&samples, DEFAULT_MIN_SAMPLES).unwrap();
        assert!((fitted.shape - 1.0).abs() < 0.05, "shape {}", fitted.shape);
        assert!((fitted.rate - 2.0).abs() < 0.1, "rate {}", fitted.rate);
    }

    #[test]
    fn fit_rejects_degenerate_and_bad_input() {
        let equal = vec![0.1; 20];
        assert!(matches!(
            fit_gamma(&equal, DEFAULT_MIN_SAMPLES),
            Err(RhythmError::DegenerateData)
        ));
        let few = vec![0.1, 0.2];
        assert!(matches!(
            fit_gamma(&few, DEFAULT_MIN_SAMPLES),
            Err(RhythmError::TooFewSamples { .. })
        ));
        let mut with_zero = vec![0.1; 20];
        with_zero[3] = 0.0;
        assert!(matches!(
            fit_gamma(&with_zero, DEFAULT_MIN_SAMPLES),
            Err(RhythmError::NonPositiveDuration { index: 3 })
        ));
    }

    #[test]
    fn mle_gradient_vanishes_at_fit() {
        use rand::SeedableRng;
        use rand_distr::{Distribution, Gamma};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let gen = Gamma::new(3.0, 0.2).unwrap();
        let samples: Vec<f64> = (0..2_000).map(|_| gen.sample(&mut rng)).collect();
        let fitted = fit_gamma(&samples, DEFAULT_MIN_SAMPLES).unwrap();
        let n = samples.len() as f64;
        let sum_ln: f64 = samples.iter().map(|x| x.ln()).sum();
        let sum: f64 = samples.iter().sum();
        // per-sample gradient of the log likelihood
        let d_shape =
            (fitted.rate.ln() - digamma(fitted.shape)) + sum_ln / n;
        let d_rate = fitted.shape / fitted.rate - sum / n;
        assert!(d_shape.abs() < 1e-6, "d/dshape {d_shape}");
        assert!(d_rate.abs() < 1e-6, "d/drate {d_rate}");
        // central finite differences agree
        let loglik = |shape: f64, rate: f64| -> f64 {
            n * (shape * rate.ln() - ln_gamma(shape)) + (shape - 1.0) * sum_ln - rate * sum
        };
        let h = 1e-5;
        let fd_shape = (loglik(fitted.shape + h, fitted.rate)
            - loglik(fitted.shape - h, fitted.rate))
            / (2.0 * h * n);
        let fd_rate = (loglik(fitted.shape, fitted.rate + h)
            - loglik(fitted.shape, fitted.rate - h))
            / (2.0 * h * n);
        assert!((fd_shape - d_shape).abs() < 1e-4);
        assert!((fd_rate - d_rate).abs() < 1e-4);
    }

    fn labeled(segs: Vec<(usize, usize, SoundClass)>) -> Segmentation {
        let segments = segs
            .into_iter()
            .map(|(start, end, class)| {
                let mut s = Segment::new(start, end, 0);
                s.class = Some(class);
                s.cluster = Some(0);
                s
            })
            .collect();
        Segmentation::new(segments, 2.0).unwrap()
    }

    #[test]
    fn speaking_rate_matches_worked_example() {
        // 47 frames at 50 Hz = 0.94 s, four sonorant segments
        let seg = labeled(vec![
            (0, 5, SoundClass::Silence),
            (5, 12, SoundClass::Sonorant),
            (12, 16, SoundClass::Obstruent),
            (16, 25, SoundClass::Sonorant),
            (25, 29, SoundClass::Obstruent),
            (29, 36, SoundClass::Sonorant),
            (36, 40, SoundClass::Obstruent),
            (40, 45, SoundClass::Sonorant),
            (45, 47, SoundClass::Silence),
        ]);
        let rate = estimate_speaking_rate(&[seg], 50.0, false).unwrap();
        assert_abs_diff_eq!(rate, 4.0 / 0.94, epsilon = 1e-12);
        assert!((rate - 4.26).abs() < 0.005);
    }

    #[test]
    fn speaking_rate_zero_without_sonorants() {
        let seg = labeled(vec![(0, 10, SoundClass::Silence), (10, 20, SoundClass::Obstruent)]);
        let rate = estimate_speaking_rate(&[seg], 50.0, false).unwrap();
        assert_eq!(rate, 0.0);
    }

    #[test]
    fn speaking_rate_simple_division() {
        // 10 sonorant segments over 2.5 s (125 frames at 50 Hz)
        let mut spans = Vec::new();
        let mut t = 0;
        for _ in 0..10 {
            spans.push((t, t + 10, SoundClass::Sonorant));
            t += 10;
        }
        spans.push((t, 125, SoundClass::Silence));
        let rate = estimate_speaking_rate(&[labeled(spans)], 50.0, false).unwrap();
        assert_abs_diff_eq!(rate, 4.0, epsilon = 1e-12);
    }

    #[test]
    fn speaking_rate_order_invariant() {
        let a = labeled(vec![(0, 20, SoundClass::Sonorant), (20, 50, SoundClass::Silence)]);
        let b = labeled(vec![
            (0, 10, SoundClass::Obstruent),
            (10, 30, SoundClass::Sonorant),
            (30, 40, SoundClass::Sonorant),
        ]);
        let r1 = estimate_speaking_rate(&[a.clone(), b.clone()], 50.0, false).unwrap();
        let r2 = estimate_speaking_rate(&[b, a], 50.0, false).unwrap();
        assert_eq!(r1, r2);
    }

    #[test]
    fn exclude_silence_shrinks_denominator() {
        let seg = labeled(vec![
            (0, 25, SoundClass::Silence),
            (25, 50, SoundClass::Sonorant),
        ]);
        let with = estimate_speaking_rate(&[seg.clone()], 50.0, false).unwrap();
        let without = estimate_speaking_rate(&[seg], 50.0, true).unwrap();
        assert_abs_diff_eq!(with, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(without, 2.0, epsilon = 1e-12);
    }

    fn sample_model() -> RhythmModel {
        let mut map = BTreeMap::new();
        map.insert(0, SoundClass::Sonorant);
        map.insert(1, SoundClass::Obstruent);
        map.insert(2, SoundClass::Silence);
        RhythmModel {
            format_version: MODEL_FORMAT_VERSION,
            frame_rate: 50.0,
            speaking_rate: 4.26,
            classes: ClassModels {
                sonorant: ClassModel { shape: 4.0, rate: 20.0, n_samples: 120 },
                obstruent: ClassModel { shape: 3.0, rate: 30.0, n_samples: 110 },
                silence: ClassModel { shape: 2.0, rate: 8.0, n_samples: 60 },
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

    #[test]
    fn model_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        let model = sample_model();
        save_model(&path, &model).unwrap();
        let back = load_model(&path).unwrap();
        assert_eq!(model, back);
    }

    #[test]
    fn model_missing_class_is_schema_mismatch() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        save_model(&path, &sample_model()).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let mut v: serde_json::Value = serde_json::from_str(&text).unwrap();
        v.as_object_mut()
            .unwrap()
            .get_mut("classes")
            .unwrap()
            .as_object_mut()
            .unwrap()
            .remove("silence");
        std::fs::write(&path, serde_json::to_string(&v).unwrap()).unwrap();
        assert!(matches!(load_model(&path), Err(RhythmError::SchemaMismatch(_))));
    }

    #[test]
    fn hand_written_model_loads() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        let text = r#"{
            "format_version": 1,
            "frame_rate": 50.0,
            "speaking_rate": 5.0,
            "classes": {
                "sonorant": {"shape": 4.0, "rate": 20.0, "n_samples": 10},
                "obstruent": {"shape": 3.0, "rate": 30.0, "n_samples": 10},
                "silence": {"shape": 2.0, "rate": 8.0, "n_samples": 10}
            },
            "sound_class_map": {"0": "sonorant", "1": "obstruent", "2": "silence"},
            "provenance": {
                "gamma": 2.0, "tau": 0.1, "linkage": "ward",
                "vad_threshold_db": 40.0, "voicing_threshold": 0.45
            }
        }"#;
        std::fs::write(&path, text).unwrap();
        let model = load_model(&path).unwrap();
        assert_eq!(model.speaking_rate, 5.0);
        assert_eq!(model.class_params(SoundClass::Silence).shape, 2.0);
    }
}
