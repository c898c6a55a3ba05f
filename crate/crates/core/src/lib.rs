//! Rhythm modeling and conversion for soft speech units.
//!
//! The pipeline implemented here starts from frame-level soft-unit features
//! produced by a pretrained content encoder and a dictionary of discrete
//! unit embeddings:
//!
//! 1. [`units`] scores each frame against the dictionary and owns the
//!    binary matrix file format used to exchange features.
//! 2. [`segment`] partitions an utterance into contiguous segments with a
//!    dynamic program over the per-unit log probabilities.
//! 3. [`cluster`] groups the dictionary into three clusters, merges
//!    adjacent same-cluster segments, and names the clusters
//!    sonorant / obstruent / silence using acoustic flags.
//! 4. [`signal`] produces those flags (energy VAD and autocorrelation
//!    voicing) from raw waveforms.
//! 5. [`rhythm`] estimates speaking rate and fits per-class gamma duration
//!    distributions; models round-trip through a JSON file.
//! 6. [`stretch`] and [`convert`] retime unit sequences to a target
//!    speaker's rhythm, either globally or segment by segment.
//! 7. [`metrics`] evaluates conversion quality against forced alignments.

pub mod cluster;
pub mod convert;
pub mod metrics;
pub mod rhythm;
pub mod segment;
pub mod signal;
pub mod special;
pub mod stretch;
pub mod units;

pub use cluster::{ClusterAssignment, ClusterError, SoundClass, SoundClassMap};
pub use convert::{Conversion, ConversionRequest, ConverterRegistry, RhythmConverter};
pub use metrics::{Alignment, LengthErrors, MetricsError, SoundType, SoundTypeTable};
pub use rhythm::{GammaParams, RhythmError, RhythmModel};
pub use segment::{Segment, SegmentError, Segmentation};
pub use signal::{FrameFlags, SignalError, Waveform};
pub use stretch::{StretchError, StretchPlan};
pub use units::{Codebook, FeatureMatrix, LogProbMatrix, MatrixIoError, UnitsError};
