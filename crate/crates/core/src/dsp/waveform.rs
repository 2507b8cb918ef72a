use ndarray::{Array2, ArrayView1, Axis};

use crate::error::{Error, Result};

pub const DEFAULT_SAMPLE_RATE_HZ: u32 = 8000;

/// A J-channel time-domain signal, stored channel-major as `[J × N]`.
#[derive(Debug, Clone, PartialEq)]
pub struct MultichannelWaveform {
    samples: Array2<f64>,
    sample_rate_hz: u32,
}

impl MultichannelWaveform {
    pub fn new(samples: Array2<f64>, sample_rate_hz: u32) -> Result<Self> {
        let (channels, len) = samples.dim();
        if channels == 0 || len == 0 {
            return Err(Error::InvalidWaveform(format!(
                "need at least one channel and one sample, got {channels}x{len}"
            )));
        }
        if sample_rate_hz == 0 {
            return Err(Error::InvalidWaveform(
                "sample rate must be positive".into(),
            ));
        }
        if let Some(pos) = samples.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidWaveform(format!(
                "non-finite sample at flat index {pos}"
            )));
        }
        Ok(Self {
            samples,
            sample_rate_hz,
        })
    }

    pub fn mono(samples: Vec<f64>, sample_rate_hz: u32) -> Result<Self> {
        let len = samples.len();
        let arr = Array2::from_shape_vec((1, len), samples)
            .map_err(|e| Error::InvalidWaveform(e.to_string()))?;
        Self::new(arr, sample_rate_hz)
    }

    pub fn from_channels(channels: &[Vec<f64>], sample_rate_hz: u32) -> Result<Self> {
        let len = channels.first().map_or(0, Vec::len);
        if channels.iter().any(|c| c.len() != len) {
            return Err(Error::InvalidWaveform("channels differ in length".into()));
        }
        let flat: Vec<f64> = channels.iter().flatten().copied().collect();
        let arr = Array2::from_shape_vec((channels.len(), len), flat)
            .map_err(|e| Error::InvalidWaveform(e.to_string()))?;
        Self::new(arr, sample_rate_hz)
    }

    pub fn zeros(channels: usize, len: usize, sample_rate_hz: u32) -> Self {
        Self {
            samples: Array2::zeros((channels, len)),
            sample_rate_hz,
        }
    }

    pub fn channels(&self) -> usize {
        self.samples.nrows()
    }

    pub fn len(&self) -> usize {
        self.samples.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn sample_rate_hz(&self) -> u32 {
        self.sample_rate_hz
    }

    pub fn samples(&self) -> &Array2<f64> {
        &self.samples
    }

    pub fn into_samples(self) -> Array2<f64> {
        self.samples
    }

    pub fn channel(&self, j: usize) -> ArrayView1<'_, f64> {
        self.samples.index_axis(Axis(0), j)
    }

    /// Single-channel waveform holding a copy of channel `j`.
    pub fn select_channel(&self, j: usize) -> Self {
        Self {
            samples: self.samples.select(Axis(0), &[j]),
            sample_rate_hz: self.sample_rate_hz,
        }
    }

    pub fn duration_s(&self) -> f64 {
        self.len() as f64 / f64::from(self.sample_rate_hz)
    }

    /// Mean power of channel `j`.
    pub fn power(&self, j: usize) -> f64 {
        let ch = self.channel(j);
        ch.iter().map(|v| v * v).sum::<f64>() / ch.len() as f64
    }

    /// Copy of samples `[start, start + len)`, zero-filled past the end.
    pub fn slice(&self, start: usize, len: usize) -> Self {
        let mut out = Array2::zeros((self.channels(), len));
        let avail = self.len().saturating_sub(start).min(len);
        if avail > 0 {
            out.slice_mut(ndarray::s![.., ..avail])
                .assign(&self.samples.slice(ndarray::s![.., start..start + avail]));
        }
        Self {
            samples: out,
            sample_rate_hz: self.sample_rate_hz,
        }
    }

    /// Zero-pads or truncates every channel to `len` samples.
    pub fn with_len(&self, len: usize) -> Self {
        self.slice(0, len)
    }

    pub(crate) fn from_parts_unchecked(samples: Array2<f64>, sample_rate_hz: u32) -> Self {
        debug_assert!(samples.iter().all(|v| v.is_finite()));
        Self {
            samples,
            sample_rate_hz,
        }
    }
}
