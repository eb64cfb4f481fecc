//! Waveform I/O, speed perturbation, log-Mel filterbank features and
//! SpecAugment.

use std::f64::consts::PI;
use std::path::Path;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::{num_complex::Complex, FftPlanner};

use crate::{Error, Result};

/// Floor applied to filterbank energies before the log.
pub const ENERGY_FLOOR: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct Waveform {
    pub samples: Vec<f64>,
    pub sample_rate: u32,
}

impl Waveform {
    pub fn new(samples: Vec<f64>, sample_rate: u32) -> Result<Self> {
        if sample_rate == 0 {
            return Err(Error::invalid("sample rate must be > 0"));
        }
        Ok(Waveform {
            samples,
            sample_rate,
        })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_secs(&self) -> f64 {
        self.samples.len() as f64 / f64::from(self.sample_rate)
    }
}

/// Reads 16-bit PCM mono WAV; samples are scaled by `1/32768`.
pub fn read_wav(path: impl AsRef<Path>) -> Result<Waveform> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_wav_from(std::io::BufReader::new(file))
        .map_err(|e| Error::Wav(format!("{}: {e}", path.display())))
}

pub fn read_wav_from<R: std::io::Read>(r: R) -> std::result::Result<Waveform, String> {
    let reader = hound::WavReader::new(r).map_err(|e| format!("malformed header: {e}"))?;
    let spec = reader.spec();
    if spec.channels != 1 {
        return Err(format!("mono required, got {} channels", spec.channels));
    }
    if spec.sample_format != hound::SampleFormat::Int || spec.bits_per_sample != 16 {
        return Err(format!(
            "16-bit PCM required, got {} bits {:?}",
            spec.bits_per_sample, spec.sample_format
        ));
    }
    if spec.sample_rate == 0 {
        return Err("sample rate must be > 0".into());
    }
    let samples = reader
        .into_samples::<i16>()
        .map(|s| s.map(|v| f64::from(v) / 32768.0))
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|e| format!("bad sample data: {e}"))?;
    Ok(Waveform {
        samples,
        sample_rate: spec.sample_rate,
    })
}

fn quantize(s: f64) -> i16 {
    (s * 32768.0).round().clamp(-32768.0, 32767.0) as i16
}

/// Writes 16-bit PCM mono WAV. Samples are rounded to the nearest 1/32768
/// step and clipped.
pub fn write_wav(path: impl AsRef<Path>, w: &Waveform) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_wav_to(std::io::BufWriter::new(file), w)
        .map_err(|e| Error::Wav(format!("{}: {e}", path.display())))
}

pub fn write_wav_to<W: std::io::Write + std::io::Seek>(
    out: W,
    w: &Waveform,
) -> std::result::Result<(), hound::Error> {
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate: w.sample_rate,
        bits_per_sample: 16,
        sample_format: hound::SampleFormat::Int,
    };
    let mut writer = hound::WavWriter::new(out, spec)?;
    for &s in &w.samples {
        writer.write_sample(quantize(s))?;
    }
    writer.finalize()
}

/// Output length of [`speed_perturb`]: `floor((n - 1) / factor) + 1`.
///
/// A tolerance of 1e-9 absorbs binary rounding of decimal factors, so a
/// quotient that is mathematically an integer is not floored one short.
pub fn perturbed_len(n: usize, factor: f64) -> usize {
    if n == 0 {
        return 0;
    }
    ((n - 1) as f64 / factor + 1e-9).floor() as usize + 1
}

/// Resamples by linear interpolation at the original nominal rate, so both
/// tempo and pitch change: `out[k] = lerp(in, k * factor)`.
pub fn speed_perturb(w: &Waveform, factor: f64) -> Result<Waveform> {
    if !(factor.is_finite() && factor > 0.0) {
        return Err(Error::invalid(format!(
            "speed factor must be > 0, got {factor}"
        )));
    }
    if w.is_empty() {
        return Err(Error::invalid("empty waveform"));
    }
    let input = &w.samples;
    let last = input.len() - 1;
    let out_len = perturbed_len(input.len(), factor);
    let samples = (0..out_len)
        .map(|k| {
            let pos = (k as f64 * factor).min(last as f64);
            let i = pos.floor() as usize;
            let frac = pos - i as f64;
            if i >= last || frac == 0.0 {
                input[i.min(last)]
            } else {
                input[i] * (1.0 - frac) + input[i + 1] * frac
            }
        })
        .collect();
    Ok(Waveform {
        samples,
        sample_rate: w.sample_rate,
    })
}

/// Frames x dims matrix of `f32`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    frames: usize,
    dims: usize,
    values: Vec<f32>,
}

impl FeatureMatrix {
    pub fn new(frames: usize, dims: usize, values: Vec<f32>) -> Result<Self> {
        if values.len() != frames * dims {
            return Err(Error::invalid(format!(
                "matrix data has {} values, expected {frames}x{dims}",
                values.len()
            )));
        }
        Ok(FeatureMatrix {
            frames,
            dims,
            values,
        })
    }

    pub fn zeros(frames: usize, dims: usize) -> Self {
        FeatureMatrix {
            frames,
            dims,
            values: vec![0.0; frames * dims],
        }
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn get(&self, t: usize, f: usize) -> f32 {
        self.values[t * self.dims + f]
    }

    pub fn set(&mut self, t: usize, f: usize, v: f32) {
        self.values[t * self.dims + f] = v;
    }

    pub fn row(&self, t: usize) -> &[f32] {
        &self.values[t * self.dims..(t + 1) * self.dims]
    }

    pub fn mean(&self) -> f32 {
        if self.values.is_empty() {
            return 0.0;
        }
        (self.values.iter().map(|&v| f64::from(v)).sum::<f64>() / self.values.len() as f64) as f32
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FbankConfig {
    pub frame_len_ms: f64,
    pub frame_shift_ms: f64,
    pub n_mels: usize,
}

impl Default for FbankConfig {
    fn default() -> Self {
        FbankConfig {
            frame_len_ms: 25.0,
            frame_shift_ms: 10.0,
            n_mels: 80,
        }
    }
}

impl FbankConfig {
    /// `(window, shift)` in samples.
    pub fn frame_samples(&self, sample_rate: u32) -> (usize, usize) {
        let sr = f64::from(sample_rate);
        (
            (self.frame_len_ms * sr / 1000.0).round() as usize,
            (self.frame_shift_ms * sr / 1000.0).round() as usize,
        )
    }
}

/// Number of frames for `n` samples: 0 when `n < window`, else
/// `(n - window) / shift + 1`.
pub fn num_frames(n: usize, window: usize, shift: usize) -> usize {
    if n < window {
        0
    } else {
        (n - window) / shift + 1
    }
}

pub fn hz_to_mel(f: f64) -> f64 {
    2595.0 * (1.0 + f / 700.0).log10()
}

pub fn mel_to_hz(m: f64) -> f64 {
    700.0 * (10f64.powf(m / 2595.0) - 1.0)
}

/// Triangular filters, `n_mels x (n_fft/2 + 1)`, centres equally spaced on
/// the HTK mel scale between 0 Hz and Nyquist.
pub fn mel_filterbank(n_mels: usize, n_fft: usize, sample_rate: u32) -> Vec<Vec<f64>> {
    let n_bins = n_fft / 2 + 1;
    let nyquist = f64::from(sample_rate) / 2.0;
    let top = hz_to_mel(nyquist);
    let edges: Vec<f64> = (0..n_mels + 2)
        .map(|i| mel_to_hz(top * i as f64 / (n_mels + 1) as f64))
        .collect();
    (0..n_mels)
        .map(|m| {
            let (lo, mid, hi) = (edges[m], edges[m + 1], edges[m + 2]);
            (0..n_bins)
                .map(|k| {
                    let f = k as f64 * f64::from(sample_rate) / n_fft as f64;
                    let up = (f - lo) / (mid - lo);
                    let down = (hi - f) / (hi - mid);
                    up.min(down).max(0.0)
                })
                .collect()
        })
        .collect()
}

/// Log-Mel filterbank features.
///
/// Per frame: mean removal, symmetric Hann window, power spectrum with an
/// FFT of the next power of two at or above the window length, mel
/// filtering, natural log with a floor of [`ENERGY_FLOOR`].
pub fn fbank(w: &Waveform, cfg: &FbankConfig) -> Result<FeatureMatrix> {
    if w.is_empty() {
        return Err(Error::invalid("empty waveform"));
    }
    if cfg.n_mels == 0 {
        return Err(Error::invalid("n_mels must be >= 1"));
    }
    if !(cfg.frame_shift_ms > 0.0 && cfg.frame_len_ms >= cfg.frame_shift_ms) {
        return Err(Error::invalid(format!(
            "need frame length >= frame shift > 0, got {} / {} ms",
            cfg.frame_len_ms, cfg.frame_shift_ms
        )));
    }
    let (window, shift) = cfg.frame_samples(w.sample_rate);
    if shift == 0 || window == 0 {
        return Err(Error::invalid("frame shorter than one sample"));
    }
    let n_fft = window.next_power_of_two();
    let frames = num_frames(w.len(), window, shift);
    let filters = mel_filterbank(cfg.n_mels, n_fft, w.sample_rate);
    let hann: Vec<f64> = if window == 1 {
        vec![1.0]
    } else {
        (0..window)
            .map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / (window - 1) as f64).cos())
            .collect()
    };
    let fft = FftPlanner::<f64>::new().plan_fft_forward(n_fft);
    let mut buf = vec![Complex::new(0.0, 0.0); n_fft];
    let mut power = vec![0.0f64; n_fft / 2 + 1];
    let mut values = Vec::with_capacity(frames * cfg.n_mels);

    for t in 0..frames {
        let frame = &w.samples[t * shift..t * shift + window];
        let mean = frame.iter().sum::<f64>() / window as f64;
        for (i, c) in buf.iter_mut().enumerate() {
            *c = if i < window {
                Complex::new((frame[i] - mean) * hann[i], 0.0)
            } else {
                Complex::new(0.0, 0.0)
            };
        }
        fft.process(&mut buf);
        for (p, c) in power.iter_mut().zip(&buf) {
            *p = c.norm_sqr();
        }
        for f in &filters {
            let e: f64 = f.iter().zip(&power).map(|(a, b)| a * b).sum();
            let v = e.max(ENERGY_FLOOR).ln();
            values.push(if v.is_finite() {
                v as f32
            } else {
                ENERGY_FLOOR.ln() as f32
            });
        }
    }
    FeatureMatrix::new(frames, cfg.n_mels, values)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MaskFill {
    #[default]
    Zero,
    /// Mean of the input matrix.
    Mean,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SpecAugConfig {
    pub n_freq_masks: usize,
    pub max_freq_width: usize,
    pub n_time_masks: usize,
    pub max_time_width: usize,
    /// Time warp is applied only when `frames > 2 * warp_window`; 0 disables it.
    pub warp_window: usize,
    pub seed: u64,
    pub fill: MaskFill,
}

impl Default for SpecAugConfig {
    fn default() -> Self {
        SpecAugConfig {
            n_freq_masks: 2,
            max_freq_width: 10,
            n_time_masks: 2,
            max_time_width: 50,
            warp_window: 80,
            seed: 0,
            fill: MaskFill::Zero,
        }
    }
}

/// What [`spec_augment_traced`] actually applied.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct AugmentTrace {
    /// `(centre, warped centre)` in frames.
    pub warp: Option<(usize, usize)>,
    pub freq_masks: Vec<std::ops::Range<usize>>,
    pub time_masks: Vec<std::ops::Range<usize>>,
}

pub fn spec_augment(m: &FeatureMatrix, cfg: &SpecAugConfig) -> Result<FeatureMatrix> {
    spec_augment_traced(m, cfg).map(|(out, _)| out)
}

/// Time warp, then frequency masks, then time masks, all drawn from a
/// generator seeded with `cfg.seed`.
///
/// Time mask widths are capped at the number of frames; a frequency width
/// above the feature dimension is a configuration error.
pub fn spec_augment_traced(
    m: &FeatureMatrix,
    cfg: &SpecAugConfig,
) -> Result<(FeatureMatrix, AugmentTrace)> {
    if cfg.max_freq_width > m.dims {
        return Err(Error::invalid(format!(
            "max frequency mask width {} exceeds feature dimension {}",
            cfg.max_freq_width, m.dims
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut trace = AugmentTrace::default();
    let fill = match cfg.fill {
        MaskFill::Zero => 0.0,
        MaskFill::Mean => m.mean(),
    };

    let mut out = m.clone();
    let (t_len, w) = (m.frames, cfg.warp_window);
    if w > 0 && t_len > 2 * w {
        let centre = rng.random_range(w..t_len - w);
        let shift = rng.random_range(-(w as i64)..=w as i64);
        let warped = (centre as i64 + shift).clamp(1, t_len as i64 - 2) as usize;
        time_warp(m, &mut out, centre, warped);
        trace.warp = Some((centre, warped));
    }

    if m.dims > 0 {
        for _ in 0..cfg.n_freq_masks {
            let width = rng.random_range(0..=cfg.max_freq_width);
            let start = rng.random_range(0..=m.dims - width);
            for t in 0..out.frames {
                for f in start..start + width {
                    out.set(t, f, fill);
                }
            }
            trace.freq_masks.push(start..start + width);
        }
    }

    if t_len > 0 {
        let max_w = cfg.max_time_width.min(t_len);
        for _ in 0..cfg.n_time_masks {
            let width = rng.random_range(0..=max_w);
            let start = rng.random_range(0..=t_len - width);
            for t in start..start + width {
                for f in 0..out.dims {
                    out.set(t, f, fill);
                }
            }
            trace.time_masks.push(start..start + width);
        }
    }
    Ok((out, trace))
}

/// Piecewise-linear remap of the time axis moving frame `centre` to
/// `warped`; endpoints stay fixed. Each output frame interpolates linearly
/// between its two nearest source frames.
fn time_warp(src: &FeatureMatrix, out: &mut FeatureMatrix, centre: usize, warped: usize) {
    let last = (src.frames - 1) as f64;
    let (c, wc) = (centre as f64, warped as f64);
    for t in 0..src.frames {
        let tf = t as f64;
        let pos = if tf <= wc {
            tf * c / wc
        } else {
            c + (tf - wc) * (last - c) / (last - wc)
        };
        let pos = pos.clamp(0.0, last);
        let i = pos.floor() as usize;
        let frac = (pos - i as f64) as f32;
        for f in 0..src.dims {
            let v = if frac == 0.0 || i + 1 >= src.frames {
                src.get(i, f)
            } else {
                src.get(i, f) * (1.0 - frac) + src.get(i + 1, f) * frac
            };
            out.set(t, f, v);
        }
    }
}
