//! Rhythm conversion strategies behind a common trait.
//!
//! Two interchangeable methods retime an utterance toward a target
//! speaker: `global` stretches the whole sequence by the speaking-rate
//! ratio, `fine` stretches each labeled segment through inverse-transform
//! sampling between the per-class duration distributions. Strategies are
//! registered by name and selected at runtime (`--mode` on the CLI).

use std::collections::BTreeMap;

use crate::rhythm::RhythmModel;
use crate::segment::Segmentation;
use crate::stretch::{apply_plan, build_fine_plan, global_stretch, StretchError, StretchPlan};
use crate::units::FeatureMatrix;

/// Everything a converter may need; `segmentation` is only consulted by
/// segment-level strategies.
pub struct ConversionRequest<'a> {
    pub features: &'a FeatureMatrix,
    pub segmentation: Option<&'a Segmentation>,
    pub source: &'a RhythmModel,
    pub target: &'a RhythmModel,
    pub clamp: Option<(f64, f64)>,
}

/// Converted features plus, for plan-based strategies, the audit plan.
pub struct Conversion {
    pub features: FeatureMatrix,
    pub plan: Option<StretchPlan>,
}

pub trait RhythmConverter: Send + Sync {
    fn name(&self) -> &'static str;
    fn convert(&self, request: &ConversionRequest) -> Result<Conversion, StretchError>;
}

fn check_frame_rates(request: &ConversionRequest) -> Result<f64, StretchError> {
    let features = request.features.frame_rate();
    let src = request.source.frame_rate;
    let tgt = request.target.frame_rate;
    if features != src || features != tgt {
        return Err(StretchError::FrameRateMismatch { features, src, tgt });
    }
    Ok(features)
}

/// Whole-utterance stretch by the ratio of speaking rates.
pub struct GlobalRateConverter;

impl RhythmConverter for GlobalRateConverter {
    fn name(&self) -> &'static str {
        "global"
    }

    fn convert(&self, request: &ConversionRequest) -> Result<Conversion, StretchError> {
        check_frame_rates(request)?;
        let features = global_stretch(
            request.features,
            request.source.speaking_rate,
            request.target.speaking_rate,
        )?;
        Ok(Conversion { features, plan: None })
    }
}

/// Per-segment inverse-transform retiming; needs a labeled segmentation.
pub struct FineGrainedConverter;

impl RhythmConverter for FineGrainedConverter {
    fn name(&self) -> &'static str {
        "fine"
    }

    fn convert(&self, request: &ConversionRequest) -> Result<Conversion, StretchError> {
        let frame_rate = check_frame_rates(request)?;
        let seg = request.segmentation.ok_or(StretchError::MissingSegmentation)?;
        if seg.total_frames() != request.features.num_frames() {
            return Err(StretchError::PlanCoverageMismatch {
                plan: seg.total_frames(),
                features: request.features.num_frames(),
            });
        }
        let plan =
            build_fine_plan(seg, request.source, request.target, frame_rate, request.clamp)?;
        let features = apply_plan(request.features, &plan)?;
        Ok(Conversion { features, plan: Some(plan) })
    }
}

/// Name-keyed registry of the available conversion strategies.
pub struct ConverterRegistry {
    converters: BTreeMap<&'static str, Box<dyn RhythmConverter>>,
}

impl ConverterRegistry {
    pub fn new() -> Self {
        Self { converters: BTreeMap::new() }
    }

    pub fn register(&mut self, converter: Box<dyn RhythmConverter>) {
        self.converters.insert(converter.name(), converter);
    }

    /// Registry with the built-in strategies.
    pub fn builtin() -> Self {
        let mut registry = Self::new();
        registry.register(Box::new(GlobalRateConverter));
        registry.register(Box::new(FineGrainedConverter));
        registry
    }

    pub fn get(&self, name: &str) -> Option<&dyn RhythmConverter> {
        self.converters.get(name).map(|c| c.as_ref())
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.converters.keys().copied().collect()
    }
}

impl Default for ConverterRegistry {
    fn default() -> Self {
        Self::builtin()
    }
}
