//! Soft-unit feature matrices, the discrete-unit codebook, and the
//! log-probability computation connecting the two.
//!
//! Features and codebooks travel in a small binary format (magic `URMX`):
//!
//! ```text
//! offset  size  field
//! 0       4     magic "URMX"
//! 4       4     format version, u32 LE, currently 1
//! 8       4     dtype, u32 LE, 1 = f32
//! 12      8     rows, u64 LE
//! 20      8     cols, u64 LE
//! 28      ...   rows*cols f32 LE, row major
//! ```
//!
//! Payloads are stored as f32; all in-memory arithmetic is f64.

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::Path;

use thiserror::Error;

/// Frames per second assumed when no configuration says otherwise
/// (20 ms hop, the usual rate of self-supervised content encoders).
pub const DEFAULT_FRAME_RATE: f64 = 50.0;

/// Default softmax temperature for scoring frames against the codebook.
pub const DEFAULT_TEMPERATURE: f64 = 0.1;

#[derive(Debug, Error)]
pub enum UnitsError {
    #[error("feature dimension {features} does not match codebook dimension {codebook}")]
    DimensionMismatch { features: usize, codebook: usize },
    #[error("feature frame {frame} has zero norm")]
    ZeroNormRow { frame: usize },
    #[error("matrix must be at least 1x1, got {rows}x{cols}")]
    EmptyMatrix { rows: usize, cols: usize },
    #[error("matrix data length {len} does not match {rows}x{cols}")]
    DataLength { len: usize, rows: usize, cols: usize },
    #[error("matrix entry in row {row} is not finite")]
    NonFinite { row: usize },
    #[error("frame rate must be positive, got {0}")]
    BadFrameRate(f64),
    #[error("codebook needs at least 2 units, got {0}")]
    TooFewUnits(usize),
    #[error("codebook row {0} has zero norm")]
    ZeroNormUnit(usize),
    #[error("temperature must be positive, got {0}")]
    BadTemperature(f64),
    #[error("log-prob row {row} sums to {sum:e} in probability, expected 1")]
    NotNormalized { row: usize, sum: f64 },
    #[error("log-prob entry in row {row} is positive")]
    PositiveLogProb { row: usize },
}

/// A time-by-dimension matrix of frame-level features at a fixed frame rate.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
    frame_rate: f64,
}

impl FeatureMatrix {
    pub fn new(
        rows: usize,
        cols: usize,
        data: Vec<f64>,
        frame_rate: f64,
    ) -> Result<Self, UnitsError> {
        if rows == 0 || cols == 0 {
            return Err(UnitsError::EmptyMatrix { rows, cols });
        }
        if data.len() != rows * cols {
            return Err(UnitsError::DataLength { len: data.len(), rows, cols });
        }
        if !(frame_rate > 0.0) || !frame_rate.is_finite() {
            return Err(UnitsError::BadFrameRate(frame_rate));
        }
        if let Some(bad) = data.iter().position(|v| !v.is_finite()) {
            return Err(UnitsError::NonFinite { row: bad / cols });
        }
        Ok(Self { rows, cols, data, frame_rate })
    }

    pub fn from_rows(rows: Vec<Vec<f64>>, frame_rate: f64) -> Result<Self, UnitsError> {
        let n = rows.len();
        let d = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(n * d);
        for (t, row) in rows.into_iter().enumerate() {
            if row.len() != d {
                return Err(UnitsError::DataLength { len: row.len(), rows: t, cols: d });
            }
            data.extend(row);
        }
        Self::new(n, d, data, frame_rate)
    }

    pub(crate) fn from_parts_unchecked(
        rows: usize,
        cols: usize,
        data: Vec<f64>,
        frame_rate: f64,
    ) -> Self {
        debug_assert_eq!(data.len(), rows * cols);
        Self { rows, cols, data, frame_rate }
    }

    /// Number of time frames T.
    pub fn num_frames(&self) -> usize {
        self.rows
    }

    /// Feature dimension D.
    pub fn dim(&self) -> usize {
        self.cols
    }

    pub fn frame_rate(&self) -> f64 {
        self.frame_rate
    }

    pub fn duration_seconds(&self) -> f64 {
        self.rows as f64 / self.frame_rate
    }

    pub fn row(&self, t: usize) -> &[f64] {
        &self.data[t * self.cols..(t + 1) * self.cols]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// Same payload, different frame rate tag.
    pub fn with_frame_rate(mut self, frame_rate: f64) -> Result<Self, UnitsError> {
        if !(frame_rate > 0.0) || !frame_rate.is_finite() {
            return Err(UnitsError::BadFrameRate(frame_rate));
        }
        self.frame_rate = frame_rate;
        Ok(self)
    }
}

/// The dictionary of K discrete-unit embeddings plus the softmax temperature.
#[derive(Debug, Clone)]
pub struct Codebook {
    units: usize,
    dim: usize,
    data: Vec<f64>,
    norms: Vec<f64>,
    temperature: f64,
}

impl Codebook {
    pub fn new(
        units: usize,
        dim: usize,
        data: Vec<f64>,
        temperature: f64,
    ) -> Result<Self, UnitsError> {
        if units < 2 {
            return Err(UnitsError::TooFewUnits(units));
        }
        if dim == 0 {
            return Err(UnitsError::EmptyMatrix { rows: units, cols: dim });
        }
        if data.len() != units * dim {
            return Err(UnitsError::DataLength { len: data.len(), rows: units, cols: dim });
        }
        if !(temperature > 0.0) || !temperature.is_finite() {
            return Err(UnitsError::BadTemperature(temperature));
        }
        if let Some(bad) = data.iter().position(|v| !v.is_finite()) {
            return Err(UnitsError::NonFinite { row: bad / dim });
        }
        let norms: Vec<f64> = (0..units)
            .map(|i| l2_norm(&data[i * dim..(i + 1) * dim]))
            .collect();
        if let Some(zero) = norms.iter().position(|&n| n == 0.0) {
            return Err(UnitsError::ZeroNormUnit(zero));
        }
        Ok(Self { units, dim, data, norms, temperature })
    }

    /// Builds a codebook from a matrix loaded off disk (rows = units).
    pub fn from_matrix(matrix: &FeatureMatrix, temperature: f64) -> Result<Self, UnitsError> {
        Self::new(
            matrix.num_frames(),
            matrix.dim(),
            matrix.data().to_vec(),
            temperature,
        )
    }

    pub fn len(&self) -> usize {
        self.units
    }

    pub fn is_empty(&self) -> bool {
        self.units == 0
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn temperature(&self) -> f64 {
        self.temperature
    }

    pub fn embedding(&self, unit: usize) -> &[f64] {
        &self.data[unit * self.dim..(unit + 1) * self.dim]
    }
}

/// T x K matrix of per-frame log probabilities over the discrete units.
///
/// Every row is a normalized log distribution: `exp(row)` sums to one.
#[derive(Debug, Clone, PartialEq)]
pub struct LogProbMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl LogProbMatrix {
    /// Row-normalization tolerance (probabilities must sum to 1 within this).
    pub const NORMALIZATION_TOL: f64 = 1e-6;

    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self, UnitsError> {
        if rows == 0 || cols == 0 {
            return Err(UnitsError::EmptyMatrix { rows, cols });
        }
        if data.len() != rows * cols {
            return Err(UnitsError::DataLength { len: data.len(), rows, cols });
        }
        for t in 0..rows {
            let row = &data[t * cols..(t + 1) * cols];
            if row.iter().any(|v| !v.is_finite()) {
                return Err(UnitsError::NonFinite { row: t });
            }
            if row.iter().any(|&v| v > 1e-9) {
                return Err(UnitsError::PositiveLogProb { row: t });
            }
            let sum: f64 = row.iter().map(|v| v.exp()).sum();
            if (sum - 1.0).abs() > Self::NORMALIZATION_TOL {
                return Err(UnitsError::NotNormalized { row: t, sum });
            }
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix without checking normalization. The caller asserts
    /// the rows are normalized log distributions.
    pub fn new_unchecked(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), rows * cols);
        Self { rows, cols, data }
    }

    fn from_parts_unchecked(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        Self::new_unchecked(rows, cols, data)
    }

    /// Number of frames T.
    pub fn num_frames(&self) -> usize {
        self.rows
    }

    /// Number of units K.
    pub fn num_units(&self) -> usize {
        self.cols
    }

    pub fn row(&self, t: usize) -> &[f64] {
        &self.data[t * self.cols..(t + 1) * self.cols]
    }

    pub fn value(&self, t: usize, unit: usize) -> f64 {
        self.data[t * self.cols + unit]
    }
}

/// Scores every frame against the codebook: softmax over units of
/// `cos(s_t, e_i) / temperature`, returned as log probabilities.
///
/// Zero-norm feature frames are rejected; a degenerate frame silently
/// mapped to some distribution would corrupt every downstream model.
pub fn unit_log_probs(
    features: &FeatureMatrix,
    codebook: &Codebook,
) -> Result<LogProbMatrix, UnitsError> {
    if features.dim() != codebook.dim() {
        return Err(UnitsError::DimensionMismatch {
            features: features.dim(),
            codebook: codebook.dim(),
        });
    }
    let t_frames = features.num_frames();
    let k = codebook.len();
    let tau = codebook.temperature();
    let mut data = Vec::with_capacity(t_frames * k);
    let mut logits = vec![0.0f64; k];
    for t in 0..t_frames {
        let frame = features.row(t);
        let norm = l2_norm(frame);
        if norm == 0.0 {
            return Err(UnitsError::ZeroNormRow { frame: t });
        }
        for (i, logit) in logits.iter_mut().enumerate() {
            let cos = dot(frame, codebook.embedding(i)) / (norm * codebook.norms[i]);
            *logit = cos / tau;
        }
        let lse = log_sum_exp(&logits);
        data.extend(logits.iter().map(|&x| x - lse));
    }
    Ok(LogProbMatrix::from_parts_unchecked(t_frames, k, data))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn l2_norm(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

fn log_sum_exp(v: &[f64]) -> f64 {
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    max + v.iter().map(|&x| (x - max).exp()).sum::<f64>().ln()
}

// --- matrix file format ---

const MAGIC: &[u8; 4] = b"URMX";
const FORMAT_VERSION: u32 = 1;
const DTYPE_F32: u32 = 1;
/// Refuse to allocate for absurd headers (2^28 values = 1 GiB of f32).
const MAX_VALUES: u64 = 1 << 28;

#[derive(Debug, Error)]
pub enum MatrixIoError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("bad magic bytes, expected \"URMX\"")]
    BadMagic,
    #[error("unsupported format version {0}")]
    UnsupportedVersion(u32),
    #[error("unsupported dtype {0}")]
    UnsupportedDtype(u32),
    #[error("header declares {rows}x{cols}, an empty or oversized matrix")]
    BadShape { rows: u64, cols: u64 },
    #[error("header declares {expected} values but payload holds {actual}")]
    TruncatedPayload { expected: u64, actual: u64 },
    #[error("trailing bytes after payload")]
    TrailingData,
    #[error("payload value {index} is not finite")]
    NonFinitePayload { index: usize },
    #[error(transparent)]
    Units(#[from] UnitsError),
}

/// Reads a matrix file, tagging it with [`DEFAULT_FRAME_RATE`].
pub fn read_matrix(path: impl AsRef<Path>) -> Result<FeatureMatrix, MatrixIoError> {
    read_matrix_with_rate(path, DEFAULT_FRAME_RATE)
}

pub fn read_matrix_with_rate(
    path: impl AsRef<Path>,
    frame_rate: f64,
) -> Result<FeatureMatrix, MatrixIoError> {
    let file = File::open(path)?;
    read_matrix_from(BufReader::new(file), frame_rate)
}

pub fn read_matrix_from(
    mut reader: impl Read,
    frame_rate: f64,
) -> Result<FeatureMatrix, MatrixIoError> {
    let mut magic = [0u8; 4];
    reader.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(MatrixIoError::BadMagic);
    }
    let version = read_u32(&mut reader)?;
    if version != FORMAT_VERSION {
        return Err(MatrixIoError::UnsupportedVersion(version));
    }
    let dtype = read_u32(&mut reader)?;
    if dtype != DTYPE_F32 {
        return Err(MatrixIoError::UnsupportedDtype(dtype));
    }
    let rows = read_u64(&mut reader)?;
    let cols = read_u64(&mut reader)?;
    let values = rows.checked_mul(cols).filter(|&n| n > 0 && n <= MAX_VALUES);
    let Some(expected) = values else {
        return Err(MatrixIoError::BadShape { rows, cols });
    };
    let mut data = Vec::with_capacity(expected as usize);
    let mut buf = [0u8; 4];
    for i in 0..expected {
        if let Err(e) = reader.read_exact(&mut buf) {
            if e.kind() == io::ErrorKind::UnexpectedEof {
                return Err(MatrixIoError::TruncatedPayload { expected, actual: i });
            }
            return Err(e.into());
        }
        let v = f32::from_le_bytes(buf) as f64;
        if !v.is_finite() {
            return Err(MatrixIoError::NonFinitePayload { index: i as usize });
        }
        data.push(v);
    }
    let mut probe = [0u8; 1];
    if reader.read(&mut probe)? != 0 {
        return Err(MatrixIoError::TrailingData);
    }
    Ok(FeatureMatrix::new(rows as usize, cols as usize, data, frame_rate)?)
}

pub fn write_matrix(
    path: impl AsRef<Path>,
    matrix: &FeatureMatrix,
) -> Result<(), MatrixIoError> {
    let file = File::create(path)?;
    let mut writer = BufWriter::new(file);
    write_matrix_to(&mut writer, matrix)?;
    writer.flush()?;
    Ok(())
}

pub fn write_matrix_to(
    writer: &mut impl Write,
    matrix: &FeatureMatrix,
) -> Result<(), MatrixIoError> {
    writer.write_all(MAGIC)?;
    writer.write_all(&FORMAT_VERSION.to_le_bytes())?;
    writer.write_all(&DTYPE_F32.to_le_bytes())?;
    writer.write_all(&(matrix.num_frames() as u64).to_le_bytes())?;
    writer.write_all(&(matrix.dim() as u64).to_le_bytes())?;
    for &v in matrix.data() {
        writer.write_all(&(v as f32).to_le_bytes())?;
    }
    Ok(())
}

fn read_u32(reader: &mut impl Read) -> Result<u32, io::Error> {
    let mut buf = [0u8; 4];
    reader.read_exact(&mut buf)?;
    Ok(u32::from_le_bytes(buf))
}

fn read_u64(reader: &mut impl Read) -> Result<u64, io::Error> {
    let mut buf = [0u8; 8];
    reader.read_exact(&mut buf)?;
    Ok(u64::from_le_bytes(buf))
}
