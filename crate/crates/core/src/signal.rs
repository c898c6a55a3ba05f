//! Per-frame silence and voicing flags from raw waveforms.
//!
//! Silence comes from a relative-threshold energy detector: a frame is
//! silent when its RMS in dB falls more than `threshold_db` below the 95th
//! percentile of frame energies, so the decision is invariant to recording
//! gain. Voicing comes from the peak of the mean-removed normalized
//! autocorrelation over the 60-400 Hz lag range.

use std::path::Path;

use thiserror::Error;

/// Analysis window in seconds (framing is not tied to the feature hop).
pub const DEFAULT_WINDOW_SECONDS: f64 = 0.025;
/// Default level, in dB below the 95th-percentile frame energy, under
/// which a frame counts as silent.
pub const DEFAULT_VAD_THRESHOLD_DB: f64 = 40.0;
/// Default normalized-autocorrelation peak for a voiced decision.
pub const DEFAULT_VOICING_THRESHOLD: f64 = 0.45;
/// Pitch search range in Hz.
pub const PITCH_RANGE_HZ: (f64, f64) = (60.0, 400.0);

#[derive(Debug, Error)]
pub enum SignalError {
    #[error("waveform has no samples")]
    EmptyWaveform,
    #[error("sample rate must be positive")]
    BadSampleRate,
    #[error("window must be at least as long as the hop, got window {window} hop {hop}")]
    BadFraming { window: usize, hop: usize },
    #[error("window of {window} samples cannot hold a {min_hz} Hz period at {rate} Hz")]
    WindowTooShort { window: usize, min_hz: f64, rate: u32 },
    #[error("sample {0} is outside [-1, 1] or not finite")]
    OutOfRange(usize),
    #[error("wav: only mono input is supported, file has {0} channels")]
    UnsupportedChannels(u16),
    #[error("wav: only 16-bit integer PCM is supported, file has {0}")]
    UnsupportedFormat(String),
    #[error("wav: {0}")]
    Wav(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Mono waveform with samples in [-1, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct Waveform {
    samples: Vec<f64>,
    sample_rate: u32,
}

impl Waveform {
    pub fn new(samples: Vec<f64>, sample_rate: u32) -> Result<Self, SignalError> {
        if sample_rate == 0 {
            return Err(SignalError::BadSampleRate);
        }
        if samples.is_empty() {
            return Err(SignalError::EmptyWaveform);
        }
        if let Some(bad) =
            samples.iter().position(|s| !s.is_finite() || s.abs() > 1.0 + 1e-9)
        {
            return Err(SignalError::OutOfRange(bad));
        }
        Ok(Self { samples, sample_rate })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn duration_seconds(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }
}

/// Reads a RIFF/WAVE file; PCM16 mono only. Stereo is rejected outright
/// because a silent downmix policy would skew the energy statistics.
pub fn read_wav(path: impl AsRef<Path>) -> Result<Waveform, SignalError> {
    let reader = hound::WavReader::open(path).map_err(|e| SignalError::Wav(e.to_string()))?;
    let spec = reader.spec();
    if spec.channels != 1 {
        return Err(SignalError::UnsupportedChannels(spec.channels));
    }
    if spec.sample_format != hound::SampleFormat::Int || spec.bits_per_sample != 16 {
        return Err(SignalError::UnsupportedFormat(format!(
            "{:?} {} bit",
            spec.sample_format, spec.bits_per_sample
        )));
    }
    let samples: Result<Vec<i16>, _> = reader.into_samples::<i16>().collect();
    let samples = samples.map_err(|e| SignalError::Wav(e.to_string()))?;
    Waveform::new(
        samples.into_iter().map(|s| s as f64 / 32768.0).collect(),
        spec.sample_rate,
    )
}

/// Writes PCM16 mono. Samples are clamped to [-1, 1] before quantizing.
pub fn write_wav(path: impl AsRef<Path>, waveform: &Waveform) -> Result<(), SignalError> {
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate: waveform.sample_rate,
        bits_per_sample: 16,
        sample_format: hound::SampleFormat::Int,
    };
    let mut writer =
        hound::WavWriter::create(path, spec).map_err(|e| SignalError::Wav(e.to_string()))?;
    for &s in waveform.samples() {
        let q = (s.clamp(-1.0, 1.0) * 32767.0).round() as i16;
        writer.write_sample(q).map_err(|e| SignalError::Wav(e.to_string()))?;
    }
    writer.finalize().map_err(|e| SignalError::Wav(e.to_string()))?;
    Ok(())
}

/// Per-frame silence and voicing decisions for one utterance.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameFlags {
    pub silent: Vec<bool>,
    pub voiced: Vec<bool>,
    pub window: usize,
    pub hop: usize,
}

/// Framing and detector thresholds bundled for [`frame_flags`].
#[derive(Debug, Clone, Copy)]
pub struct FlagConfig {
    pub window: usize,
    pub hop: usize,
    pub vad_threshold_db: f64,
    pub voicing_threshold: f64,
}

impl FlagConfig {
    /// Window of 25 ms and a hop matching the feature frame rate, so flags
    /// align one-to-one with unit frames.
    pub fn for_frame_rate(sample_rate: u32, frame_rate: f64) -> Self {
        let hop = (sample_rate as f64 / frame_rate).round().max(1.0) as usize;
        let window = (sample_rate as f64 * DEFAULT_WINDOW_SECONDS).round().max(1.0) as usize;
        Self {
            window: window.max(hop),
            hop,
            vad_threshold_db: DEFAULT_VAD_THRESHOLD_DB,
            voicing_threshold: DEFAULT_VOICING_THRESHOLD,
        }
    }
}

/// RMS per frame. Frame `t` covers samples `[t*hop, t*hop + window)`,
/// zero-padded past the end; there are `ceil(len / hop)` frames.
pub fn frame_energy(
    waveform: &Waveform,
    window: usize,
    hop: usize,
) -> Result<Vec<f64>, SignalError> {
    if hop == 0 || window < hop {
        return Err(SignalError::BadFraming { window, hop });
    }
    let samples = waveform.samples();
    let n_frames = samples.len().div_ceil(hop);
    let mut energies = Vec::with_capacity(n_frames);
    for t in 0..n_frames {
        let start = t * hop;
        let end = (start + window).min(samples.len());
        let sum_sq: f64 = samples[start..end].iter().map(|s| s * s).sum();
        energies.push((sum_sq / window as f64).sqrt());
    }
    Ok(energies)
}

/// Relative-threshold VAD over frame RMS values, followed by a 3-frame
/// majority smoothing pass.
pub fn detect_silence(energies: &[f64], threshold_db: f64) -> Vec<bool> {
    if energies.is_empty() {
        return Vec::new();
    }
    let mut sorted = energies.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite energies"));
    let p95 = percentile_nearest_rank(&sorted, 0.95);
    if p95 == 0.0 {
        // digital silence end to end
        return vec![true; energies.len()];
    }
    let floor_db = 20.0 * p95.log10() - threshold_db;
    let raw: Vec<bool> = energies.iter().map(|&e| 20.0 * e.log10() < floor_db).collect();
    majority3(&raw)
}

fn percentile_nearest_rank(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    let rank = (q * n as f64).ceil() as usize;
    sorted[rank.clamp(1, n) - 1]
}

fn majority3(flags: &[bool]) -> Vec<bool> {
    let n = flags.len();
    (0..n)
        .map(|t| {
            let prev = flags[t.saturating_sub(1)];
            let next = flags[(t + 1).min(n - 1)];
            let votes = prev as u8 + flags[t] as u8 + next as u8;
            votes >= 2
        })
        .collect()
}

/// Voicing flags: a frame is voiced when it is not silent and the peak of
/// its mean-removed normalized autocorrelation over the pitch lag range
/// exceeds the threshold.
pub fn detect_voicing(
    waveform: &Waveform,
    window: usize,
    hop: usize,
    voicing_threshold: f64,
    vad_threshold_db: f64,
) -> Result<Vec<bool>, SignalError> {
    if hop == 0 || window < hop {
        return Err(SignalError::BadFraming { window, hop });
    }
    let rate = waveform.sample_rate();
    let max_lag = (rate as f64 / PITCH_RANGE_HZ.0).floor() as usize;
    let min_lag = ((rate as f64 / PITCH_RANGE_HZ.1).floor() as usize).max(2);
    if window <= max_lag {
        return Err(SignalError::WindowTooShort {
            window,
            min_hz: PITCH_RANGE_HZ.0,
            rate,
        });
    }
    let energies = frame_energy(waveform, window, hop)?;
    let silent = detect_silence(&energies, vad_threshold_db);
    let samples = waveform.samples();
    let n_frames = silent.len();
    let mut voiced = vec![false; n_frames];
    for t in 0..n_frames {
        if silent[t] {
            continue;
        }
        let start = t * hop;
        let end = (start + window).min(samples.len());
        let frame = &samples[start..end];
        if frame.len() <= max_lag {
            continue; // tail too short to test the full lag range
        }
        let mean = frame.iter().sum::<f64>() / frame.len() as f64;
        let centered: Vec<f64> = frame.iter().map(|s| s - mean).collect();
        let peak = autocorrelation_peak(&centered, min_lag, max_lag);
        if peak > voicing_threshold {
            voiced[t] = true;
        }
    }
    Ok(voiced)
}

/// Max over lags of the normalized cross-correlation between the frame and
/// its lag-shifted self, each normalized over the overlapping span.
fn autocorrelation_peak(frame: &[f64], min_lag: usize, max_lag: usize) -> f64 {
    let n = frame.len();
    let mut peak = 0.0f64;
    for lag in min_lag..=max_lag.min(n - 1) {
        let overlap = n - lag;
        if overlap < 2 {
            break;
        }
        let mut cross = 0.0;
        let mut e0 = 0.0;
        let mut e1 = 0.0;
        for i in 0..overlap {
            cross += frame[i] * frame[i + lag];
            e0 += frame[i] * frame[i];
            e1 += frame[i + lag] * frame[i + lag];
        }
        let denom = (e0 * e1).sqrt();
        if denom > 0.0 {
            peak = peak.max(cross / denom);
        }
    }
    peak
}

/// Both flag sequences for one waveform; voiced never overlaps silent.
pub fn frame_flags(waveform: &Waveform, config: &FlagConfig) -> Result<FrameFlags, SignalError> {
    let energies = frame_energy(waveform, config.window, config.hop)?;
    let silent = detect_silence(&energies, config.vad_threshold_db);
    let voiced = detect_voicing(
        waveform,
        config.window,
        config.hop,
        config.voicing_threshold,
        config.vad_threshold_db,
    )?;
    Ok(FrameFlags { silent, voiced, window: config.window, hop: config.hop })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    const RATE: u32 = 16_000;
    const HOP: usize = 320; // 20 ms at 16 kHz
    const WINDOW: usize = 400; // 25 ms

    fn wave(samples: Vec<f64>) -> Waveform {
        Waveform::new(samples, RATE).unwrap()
    }

    fn sawtooth(freq: f64, amplitude: f64, seconds: f64) -> Vec<f64> {
        let n = (seconds * RATE as f64) as usize;
        (0..n)
            .map(|i| {
                let phase = (i as f64 * freq / RATE as f64).fract();
                amplitude * (2.0 * phase - 1.0)
            })
            .collect()
    }

    /// xorshift noise, deterministic without pulling an rng into the crate
    fn noise(amplitude: f64, n: usize, mut state: u64) -> Vec<f64> {
        (0..n)
            .map(|_| {
                state ^= state << 13;
                state ^= state >> 7;
                state ^= state << 17;
                let unit = (state >> 11) as f64 / (1u64 << 53) as f64;
                amplitude * (2.0 * unit - 1.0)
            })
            .collect()
    }

    #[test]
    fn zero_signal_has_zero_energy_and_is_silent() {
        let w = wave(vec![0.0; RATE as usize]);
        let e = frame_energy(&w, WINDOW, HOP).unwrap();
        assert!(e.iter().all(|&x| x == 0.0));
        assert_eq!(e.len(), (RATE as usize).div_ceil(HOP));
        let silent = detect_silence(&e, DEFAULT_VAD_THRESHOLD_DB);
        assert!(silent.iter().all(|&s| s));
    }

    #[test]
    fn constant_amplitude_rms() {
        let w = wave(vec![0.25; 4 * HOP + WINDOW]);
        let e = frame_energy(&w, WINDOW, HOP).unwrap();
        for &rms in &e[..4] {
            assert_abs_diff_eq!(rms, 0.25, epsilon = 1e-12);
        }
        // and no frame of a constant signal is silent
        let silent = detect_silence(&e, DEFAULT_VAD_THRESHOLD_DB);
        assert!(silent.iter().all(|&s| !s));
    }

    #[test]
    fn sine_rms_is_amplitude_over_sqrt2() {
        // whole periods per window: 200 Hz at 16 kHz -> 80 samples/period
        let n = WINDOW * 8;
        let samples: Vec<f64> = (0..n)
            .map(|i| (2.0 * std::f64::consts::PI * 200.0 * i as f64 / RATE as f64).sin())
            .collect();
        let w = wave(samples);
        let e = frame_energy(&w, WINDOW, HOP).unwrap();
        assert_abs_diff_eq!(e[0], std::f64::consts::FRAC_1_SQRT_2, epsilon = 1e-3);
    }

    #[test]
    fn burst_in_silence_is_detected() {
        let mut samples = vec![0.0; 40 * HOP];
        for s in &mut samples[16 * HOP..24 * HOP] {
            *s = 0.5;
        }
        let w = wave(samples);
        let e = frame_energy(&w, WINDOW, HOP).unwrap();
        let silent = detect_silence(&e, DEFAULT_VAD_THRESHOLD_DB);
        // interior of the burst is speech, flanks are silent
        for t in 17..23 {
            assert!(!silent[t], "frame {t} inside burst");
        }
        for t in 0..14 {
            assert!(silent[t], "frame {t} before burst");
        }
        for t in 26..40 {
            assert!(silent[t], "frame {t} after burst");
        }
    }

    #[test]
    fn silence_flags_are_gain_invariant() {
        let mut samples = noise(0.4, 30 * HOP, 99);
        for s in &mut samples[..10 * HOP] {
            *s *= 1e-4;
        }
        let flags_a = {
            let w = wave(samples.clone());
            detect_silence(&frame_energy(&w, WINDOW, HOP).unwrap(), 40.0)
        };
        let flags_b = {
            let scaled: Vec<f64> = samples.iter().map(|s| s * 0.125).collect();
            let w = wave(scaled);
            detect_silence(&frame_energy(&w, WINDOW, HOP).unwrap(), 40.0)
        };
        assert_eq!(flags_a, flags_b);
    }

    #[test]
    fn sawtooth_is_voiced() {
        let w = wave(sawtooth(120.0, 0.5, 1.0));
        let voiced = detect_voicing(&w, WINDOW, HOP, 0.45, 40.0).unwrap();
        let interior = &voiced[1..voiced.len() - 2];
        let frac = interior.iter().filter(|&&v| v).count() as f64 / interior.len() as f64;
        assert!(frac >= 0.95, "only {frac:.3} of interior frames voiced");
    }

    #[test]
    fn noise_is_unvoiced() {
        let w = wave(noise(0.3, RATE as usize, 12345));
        let voiced = detect_voicing(&w, WINDOW, HOP, 0.45, 40.0).unwrap();
        let frac = voiced.iter().filter(|&&v| v).count() as f64 / voiced.len() as f64;
        assert!(frac <= 0.10, "{frac:.3} of noise frames voiced");
    }

    #[test]
    fn zeros_are_unvoiced() {
        let w = wave(vec![0.0; RATE as usize]);
        let voiced = detect_voicing(&w, WINDOW, HOP, 0.45, 40.0).unwrap();
        assert!(voiced.iter().all(|&v| !v));
    }

    #[test]
    fn silent_and_voiced_are_exclusive() {
        let mut samples = sawtooth(150.0, 0.5, 0.5);
        samples.extend(vec![0.0; 8 * HOP]);
        samples.extend(noise(0.2, 8 * HOP, 5));
        let w = wave(samples);
        let config = FlagConfig {
            window: WINDOW,
            hop: HOP,
            vad_threshold_db: 40.0,
            voicing_threshold: 0.45,
        };
        let flags = frame_flags(&w, &config).unwrap();
        assert_eq!(flags.silent.len(), flags.voiced.len());
        for t in 0..flags.silent.len() {
            assert!(!(flags.silent[t] && flags.voiced[t]), "frame {t}");
        }
    }

    #[test]
    fn window_too_short_for_pitch_range() {
        let w = wave(vec![0.1; RATE as usize]);
        assert!(matches!(
            detect_voicing(&w, 200, 160, 0.45, 40.0),
            Err(SignalError::WindowTooShort { .. })
        ));
    }

    #[test]
    fn flag_count_matches_hop_arithmetic() {
        for n in [HOP, HOP + 1, 7 * HOP - 1, 7 * HOP, 7 * HOP + 1] {
            let w = wave(vec![0.1; n]);
            let e = frame_energy(&w, WINDOW, HOP).unwrap();
            assert_eq!(e.len(), n.div_ceil(HOP), "n = {n}");
        }
    }

    #[test]
    fn wav_round_trip_and_stereo_rejection() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("mono.wav");
        let w = wave(sawtooth(100.0, 0.4, 0.1));
        write_wav(&path, &w).unwrap();
        let back = read_wav(&path).unwrap();
        assert_eq!(back.sample_rate(), RATE);
        assert_eq!(back.samples().len(), w.samples().len());
        for (a, b) in w.samples().iter().zip(back.samples()) {
            assert!((a - b).abs() < 1.0 / 32000.0);
        }

        let stereo = dir.path().join("stereo.wav");
        let spec = hound::WavSpec {
            channels: 2,
            sample_rate: RATE,
            bits_per_sample: 16,
            sample_format: hound::SampleFormat::Int,
        };
        let mut writer = hound::WavWriter::create(&stereo, spec).unwrap();
        for _ in 0..100 {
            writer.write_sample(0i16).unwrap();
            writer.write_sample(0i16).unwrap();
        }
        writer.finalize().unwrap();
        assert!(matches!(read_wav(&stereo), Err(SignalError::UnsupportedChannels(2))));
    }
}
