//! Short-time Fourier analysis and weighted overlap-add synthesis.
//!
//! Spectrograms are stored frequency-major as `[K_half × T × J]` so that the
//! J-vector at each `(k, t)` cell is contiguous. Only the non-negative
//! frequencies `0..=frame_len/2` are kept. The forward transform is an
//! unnormalized DFT of the windowed frame; synthesis windows each inverse
//! frame again and divides by the summed squared window.

use std::f64::consts::PI;
use std::sync::Arc;

use ndarray::{s, Array2, Array3, ArrayView1, Axis};
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use super::waveform::{MultichannelWaveform, DEFAULT_SAMPLE_RATE_HZ};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Window {
    /// Periodic Hann, `0.5 - 0.5 cos(2πn/N)`.
    Hann,
}

impl Window {
    pub fn coefficients(self, len: usize) -> Vec<f64> {
        match self {
            Window::Hann => (0..len)
                .map(|n| 0.5 - 0.5 * (2.0 * PI * n as f64 / len as f64).cos())
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StftConfig {
    pub frame_len: usize,
    pub hop: usize,
    pub window: Window,
    pub sample_rate_hz: u32,
}

impl Default for StftConfig {
    fn default() -> Self {
        Self {
            frame_len: 256,
            hop: 128,
            window: Window::Hann,
            sample_rate_hz: DEFAULT_SAMPLE_RATE_HZ,
        }
    }
}

impl StftConfig {
    pub fn num_bins(&self) -> usize {
        self.frame_len / 2 + 1
    }

    pub fn bin_frequency_hz(&self, k: usize) -> f64 {
        k as f64 * f64::from(self.sample_rate_hz) / self.frame_len as f64
    }

    /// Number of full frames in a signal of `len` samples.
    pub fn num_frames(&self, len: usize) -> usize {
        if len < self.frame_len {
            0
        } else {
            (len - self.frame_len) / self.hop + 1
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.frame_len < 2 || !self.frame_len.is_multiple_of(2) {
            return Err(Error::InvalidConfig(format!(
                "frame_len must be even and >= 2, got {}",
                self.frame_len
            )));
        }
        if self.hop * 2 != self.frame_len {
            return Err(Error::InvalidConfig(format!(
                "hop must be frame_len/2 (50% overlap), got hop {} for frame {}",
                self.hop, self.frame_len
            )));
        }
        if self.sample_rate_hz == 0 {
            return Err(Error::InvalidConfig("sample rate must be positive".into()));
        }
        // Constant overlap-add of the analysis window at this hop.
        let w = self.window.coefficients(self.frame_len);
        let sums: Vec<f64> = (0..self.hop)
            .map(|n| (n..self.frame_len).step_by(self.hop).map(|i| w[i]).sum())
            .collect();
        let (lo, hi) = sums
            .iter()
            .fold((f64::MAX, f64::MIN), |(lo, hi), &v| (lo.min(v), hi.max(v)));
        if hi - lo > 1e-9 * hi.abs().max(1.0) {
            return Err(Error::InvalidConfig(format!(
                "window is not COLA at hop {} (overlap sum varies by {:.3e})",
                self.hop,
                hi - lo
            )));
        }
        Ok(())
    }
}

/// Complex STFT tensor `[K_half × T × J]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrogram {
    bins: Array3<Complex64>,
    config: StftConfig,
}

impl Spectrogram {
    pub fn new(bins: Array3<Complex64>, config: StftConfig) -> Result<Self> {
        config.validate()?;
        let (k, t, j) = bins.dim();
        if k != config.num_bins() {
            return Err(Error::InvalidSpectrogram(format!(
                "{k} bins but frame_len {} implies {}",
                config.frame_len,
                config.num_bins()
            )));
        }
        if t == 0 || j == 0 {
            return Err(Error::InvalidSpectrogram(format!(
                "need at least one frame and channel, got T={t}, J={j}"
            )));
        }
        if bins.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::InvalidSpectrogram("non-finite entry".into()));
        }
        Ok(Self { bins, config })
    }

    pub fn zeros(config: StftConfig, frames: usize, channels: usize) -> Self {
        Self {
            bins: Array3::zeros((config.num_bins(), frames, channels)),
            config,
        }
    }

    pub fn bins(&self) -> &Array3<Complex64> {
        &self.bins
    }

    pub fn into_bins(self) -> Array3<Complex64> {
        self.bins
    }

    pub fn config(&self) -> &StftConfig {
        &self.config
    }

    pub fn num_bins(&self) -> usize {
        self.bins.dim().0
    }

    pub fn frames(&self) -> usize {
        self.bins.dim().1
    }

    pub fn channels(&self) -> usize {
        self.bins.dim().2
    }

    pub fn frame_len(&self) -> usize {
        self.config.frame_len
    }

    pub fn hop(&self) -> usize {
        self.config.hop
    }

    pub fn sample_rate_hz(&self) -> u32 {
        self.config.sample_rate_hz
    }

    /// The J-vector observed at bin `k`, frame `t`.
    pub fn vector(&self, k: usize, t: usize) -> ArrayView1<'_, Complex64> {
        self.bins.slice(s![k, t, ..])
    }

    /// All frames of bin `k` as a `[T × J]` view.
    pub fn bin_frames(&self, k: usize) -> ndarray::ArrayView2<'_, Complex64> {
        self.bins.index_axis(Axis(0), k)
    }

    pub fn select_channel(&self, j: usize) -> Self {
        Self {
            bins: self.bins.select(Axis(2), &[j]),
            config: self.config,
        }
    }

    /// Frames `[start, end)` as a new spectrogram.
    pub fn frame_range(&self, start: usize, end: usize) -> Result<Self> {
        if start >= end || end > self.frames() {
            return Err(Error::InvalidSpectrogram(format!(
                "frame range {start}..{end} outside 0..{}",
                self.frames()
            )));
        }
        Ok(Self {
            bins: self.bins.slice(s![.., start..end, ..]).to_owned(),
            config: self.config,
        })
    }
}

struct FftPair {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl FftPair {
    fn new(len: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            forward: planner.plan_fft_forward(len),
            inverse: planner.plan_fft_inverse(len),
        }
    }
}

pub fn stft(x: &MultichannelWaveform, cfg: &StftConfig) -> Result<Spectrogram> {
    cfg.validate()?;
    if x.sample_rate_hz() != cfg.sample_rate_hz {
        return Err(Error::InvalidConfig(format!(
            "waveform at {} Hz analysed with a {} Hz configuration",
            x.sample_rate_hz(),
            cfg.sample_rate_hz
        )));
    }
    let n = x.len();
    if n < cfg.frame_len {
        return Err(Error::SignalTooShort {
            len: n,
            frame_len: cfg.frame_len,
        });
    }
    let frames = cfg.num_frames(n);
    let half = cfg.num_bins();
    let window = cfg.window.coefficients(cfg.frame_len);
    let fft = FftPair::new(cfg.frame_len);
    let mut scratch = vec![Complex64::default(); fft.forward.get_inplace_scratch_len()];
    let mut buf = vec![Complex64::default(); cfg.frame_len];
    let mut bins = Array3::zeros((half, frames, x.channels()));
    for j in 0..x.channels() {
        let ch = x.channel(j);
        for t in 0..frames {
            let start = t * cfg.hop;
            for (i, slot) in buf.iter_mut().enumerate() {
                *slot = Complex64::new(ch[start + i] * window[i], 0.0);
            }
            fft.forward.process_with_scratch(&mut buf, &mut scratch);
            for k in 0..half {
                bins[[k, t, j]] = buf[k];
            }
        }
    }
    Ok(Spectrogram { bins, config: *cfg })
}

/// Weighted overlap-add inverse. Output length is `(T - 1)·hop + frame_len`.
pub fn istft(spec: &Spectrogram) -> Result<MultichannelWaveform> {
    let cfg = spec.config;
    cfg.validate()?;
    let (half, frames, channels) = spec.bins.dim();
    if half != cfg.num_bins() || frames == 0 || channels == 0 {
        return Err(Error::InvalidSpectrogram(format!(
            "shape [{half} x {frames} x {channels}] inconsistent with frame_len {}",
            cfg.frame_len
        )));
    }
    let len = (frames - 1) * cfg.hop + cfg.frame_len;
    let window = cfg.window.coefficients(cfg.frame_len);
    let mut norm = vec![0.0; len];
    for t in 0..frames {
        for (i, w) in window.iter().enumerate() {
            norm[t * cfg.hop + i] += w * w;
        }
    }
    let fft = FftPair::new(cfg.frame_len);
    let mut scratch = vec![Complex64::default(); fft.inverse.get_inplace_scratch_len()];
    let mut buf = vec![Complex64::default(); cfg.frame_len];
    let scale = 1.0 / cfg.frame_len as f64;
    let mut out = Array2::zeros((channels, len));
    for j in 0..channels {
        let mut row = out.row_mut(j);
        for t in 0..frames {
            buf[0] = Complex64::new(spec.bins[[0, t, j]].re, 0.0);
            for k in 1..half - 1 {
                let v = spec.bins[[k, t, j]];
                buf[k] = v;
                buf[cfg.frame_len - k] = v.conj();
            }
            buf[half - 1] = Complex64::new(spec.bins[[half - 1, t, j]].re, 0.0);
            fft.inverse.process_with_scratch(&mut buf, &mut scratch);
            let start = t * cfg.hop;
            for (i, w) in window.iter().enumerate() {
                row[start + i] += w * buf[i].re * scale;
            }
        }
        for (v, nrm) in row.iter_mut().zip(&norm) {
            *v = if *nrm > 1e-10 { *v / nrm } else { 0.0 };
        }
    }
    MultichannelWaveform::new(out, cfg.sample_rate_hz)
        .map_err(|e| Error::InvalidSpectrogram(format!("synthesis produced {e}")))
}

/// Analysis with `hop` leading zeros and enough trailing zeros that every
/// original sample is covered by two frames. Pair with [`synthesize_centered`].
pub fn analyze_centered(x: &MultichannelWaveform, cfg: &StftConfig) -> Result<Spectrogram> {
    cfg.validate()?;
    let n = x.len();
    let padded_len = n.div_ceil(cfg.hop) * cfg.hop + cfg.frame_len;
    let mut padded = Array2::zeros((x.channels(), padded_len));
    padded
        .slice_mut(s![.., cfg.hop..cfg.hop + n])
        .assign(x.samples());
    let padded = MultichannelWaveform::from_parts_unchecked(padded, x.sample_rate_hz());
    stft(&padded, cfg)
}

/// Inverse of [`analyze_centered`], trimmed back to `len` samples.
pub fn synthesize_centered(spec: &Spectrogram, len: usize) -> Result<MultichannelWaveform> {
    let y = istft(spec)?;
    let hop = spec.hop();
    Ok(y.slice(hop, len))
}
