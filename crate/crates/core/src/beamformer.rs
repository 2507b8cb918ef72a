//! MVDR beamforming toward an RTF steering vector.
//!
//! Weights per frequency are `g = Q⁻¹r / (rᴴQ⁻¹r)`, which keeps the target
//! at unit gain (`gᴴr = 1`) while minimizing `gᴴQg`. The output is the
//! target as heard at the reference microphone; no dereverberation.

use log::warn;
use nalgebra::{Cholesky, DVector};
use ndarray::{Array2, Array3, Axis};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dsp::{
    analyze_centered, synthesize_centered, MultichannelWaveform, Spectrogram, StftConfig,
};
use crate::error::{Error, Result};
use crate::linalg::{add_diagonal, sample_covariance, trace_re, CMatrix};
use crate::rtf::{
    average_rtf, covariance_whitening_rtf, instantaneous_rtf, RtfEstimate, Weighting,
    DEFAULT_FLOOR_DB, DEFAULT_WHITENING_LOADING,
};

pub const DEFAULT_MVDR_LOADING: f64 = 1e-6;

/// Per-frequency spatial covariance `[K × J × J]`.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseCovariance {
    pub matrices: Array3<Complex64>,
    pub frame_count: usize,
}

impl NoiseCovariance {
    /// `Q(k) = I` for every bin.
    pub fn identity(bins: usize, channels: usize) -> Self {
        let matrices = Array3::from_shape_fn((bins, channels, channels), |(_, a, b)| {
            if a == b {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::default()
            }
        });
        Self {
            matrices,
            frame_count: 0,
        }
    }

    pub fn from_matrices(matrices: &[CMatrix], frame_count: usize) -> Result<Self> {
        let j = matrices.first().map_or(0, |m| m.nrows());
        if matrices.iter().any(|m| m.nrows() != j || m.ncols() != j) {
            return Err(Error::ShapeMismatch("covariances differ in size".into()));
        }
        let arr = Array3::from_shape_fn((matrices.len(), j, j), |(k, a, b)| matrices[k][(a, b)]);
        Ok(Self {
            matrices: arr,
            frame_count,
        })
    }

    pub fn num_bins(&self) -> usize {
        self.matrices.dim().0
    }

    pub fn channels(&self) -> usize {
        self.matrices.dim().1
    }

    pub fn matrix(&self, k: usize) -> CMatrix {
        let j = self.channels();
        CMatrix::from_fn(j, j, |a, b| self.matrices[[k, a, b]])
    }

    /// Bins whose unloaded covariance is not positive definite.
    pub fn singular_bins(&self) -> Vec<usize> {
        (0..self.num_bins())
            .filter(|&k| {
                let m = self.matrix(k);
                trace_re(&m) <= 0.0 || Cholesky::new(m).is_none()
            })
            .collect()
    }
}

/// `Q̂(k) = (1/T) Σ_t a(k,t) aᴴ(k,t)` over every frame of `segment`.
pub fn estimate_covariance(segment: &Spectrogram) -> Result<NoiseCovariance> {
    let (bins, frames, channels) = segment.bins().dim();
    if frames < channels {
        return Err(Error::InsufficientFrames { frames, channels });
    }
    let mats: Vec<CMatrix> = (0..bins)
        .map(|k| sample_covariance(segment.bins().index_axis(Axis(0), k)))
        .collect();
    NoiseCovariance::from_matrices(&mats, frames)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BeamformerWeights {
    /// `[K × J]`; the output is `gᴴx`.
    pub weights: Array2<Complex64>,
    pub target_rtf: RtfEstimate,
    /// Bins with no valid RTF, which pass the reference microphone through.
    pub passthrough_bins: Vec<usize>,
}

impl BeamformerWeights {
    /// Weights that output the reference microphone unchanged.
    pub fn reference_selector(bins: usize, channels: usize, ref_mic: usize) -> Self {
        let weights = Array2::from_shape_fn((bins, channels), |(_, j)| {
            if j == ref_mic {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::default()
            }
        });
        let values = weights.clone();
        Self {
            weights,
            target_rtf: RtfEstimate {
                values,
                valid: ndarray::Array1::from_elem(bins, true),
                reference_mic: ref_mic,
            },
            passthrough_bins: (0..bins).collect(),
        }
    }

    pub fn num_bins(&self) -> usize {
        self.weights.nrows()
    }

    pub fn channels(&self) -> usize {
        self.weights.ncols()
    }
}

pub fn mvdr_weights(
    r: &RtfEstimate,
    q: &NoiseCovariance,
    loading: f64,
) -> Result<BeamformerWeights> {
    let (bins, channels) = r.values.dim();
    if q.num_bins() != bins || q.channels() != channels {
        return Err(Error::ShapeMismatch(format!(
            "RTF is [{bins} x {channels}], covariance is [{} x {} x {}]",
            q.num_bins(),
            q.channels(),
            q.channels()
        )));
    }
    let m = r.reference_mic;
    let mut weights = Array2::zeros((bins, channels));
    let mut passthrough_bins = Vec::new();
    for k in 0..bins {
        if !r.valid[k] {
            weights[[k, m]] = Complex64::new(1.0, 0.0);
            passthrough_bins.push(k);
            continue;
        }
        let qk = q.matrix(k);
        let scale = trace_re(&qk) / channels as f64;
        let chol = [1.0, 10.0, 100.0]
            .iter()
            .find_map(|f| Cholesky::new(add_diagonal(&qk, loading * f * scale)))
            .ok_or(Error::SingularNoiseCovariance { bin: k })?;
        let rk = DVector::from_iterator(channels, r.values.row(k).iter().copied());
        let z = chol.solve(&rk);
        let denom = rk.dotc(&z);
        for j in 0..channels {
            weights[[k, j]] = z[j] / denom;
        }
    }
    if !passthrough_bins.is_empty() {
        warn!(
            "{} bins without a valid RTF pass the reference microphone through",
            passthrough_bins.len()
        );
    }
    Ok(BeamformerWeights {
        weights,
        target_rtf: r.clone(),
        passthrough_bins,
    })
}

/// `ŝ(k,t) = gᴴ(k) x(t,k)`; returns a single-channel spectrogram.
pub fn apply_beamformer(s: &Spectrogram, w: &BeamformerWeights) -> Result<Spectrogram> {
    let (bins, frames, channels) = s.bins().dim();
    if w.num_bins() != bins || w.channels() != channels {
        return Err(Error::ShapeMismatch(format!(
            "spectrogram is [{bins} x {frames} x {channels}], weights are [{} x {}]",
            w.num_bins(),
            w.channels()
        )));
    }
    let x = s.bins();
    let out = Array3::from_shape_fn((bins, frames, 1), |(k, t, _)| {
        (0..channels)
            .map(|j| w.weights[[k, j]].conj() * x[[k, t, j]])
            .sum()
    });
    Spectrogram::new(out, *s.config())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MvdrOptions {
    pub stft: StftConfig,
    pub ref_mic: usize,
    pub floor_db: f64,
    pub whitening_loading: f64,
    pub mvdr_loading: f64,
}

impl Default for MvdrOptions {
    fn default() -> Self {
        Self {
            stft: StftConfig::default(),
            ref_mic: 0,
            floor_db: DEFAULT_FLOOR_DB,
            whitening_loading: DEFAULT_WHITENING_LOADING,
            mvdr_loading: DEFAULT_MVDR_LOADING,
        }
    }
}

fn beamform_waveform(
    mixture: &MultichannelWaveform,
    weights: &BeamformerWeights,
    cfg: &StftConfig,
) -> Result<MultichannelWaveform> {
    let spec = analyze_centered(mixture, cfg)?;
    let out = apply_beamformer(&spec, weights)?;
    synthesize_centered(&out, mixture.len())
}

/// RTF from the noiseless enrollment, identity noise covariance.
pub fn oracle_mvdr(
    mixture: &MultichannelWaveform,
    enrollment: &MultichannelWaveform,
    opts: &MvdrOptions,
) -> Result<MultichannelWaveform> {
    let enr = crate::dsp::stft(enrollment, &opts.stft)?;
    let inst = instantaneous_rtf(&enr, opts.ref_mic, opts.floor_db)?;
    let rtf = average_rtf(&inst, Weighting::RefEnergy);
    let q = NoiseCovariance::identity(rtf.num_bins(), rtf.channels());
    let w = mvdr_weights(&rtf, &q, opts.mvdr_loading)?;
    beamform_waveform(mixture, &w, &opts.stft)
}

/// Recordings that the estimated variant is allowed to see besides the mixture.
#[derive(Debug, Clone, PartialEq)]
pub struct AuxSegments {
    /// Target speaker plus noise, interference inactive.
    pub desired_plus_noise: MultichannelWaveform,
    /// Directional and sensor noise only.
    pub noise_only: MultichannelWaveform,
    /// Interference plus noises.
    pub interference_plus_noise: MultichannelWaveform,
}

/// RTF by covariance whitening, covariance from the interference-plus-noise segment.
pub fn estimated_mvdr(
    mixture: &MultichannelWaveform,
    aux: &AuxSegments,
    opts: &MvdrOptions,
) -> Result<MultichannelWaveform> {
    let x = crate::dsp::stft(&aux.desired_plus_noise, &opts.stft)?;
    let n = crate::dsp::stft(&aux.noise_only, &opts.stft)?;
    let rtf = covariance_whitening_rtf(&x, &n, opts.ref_mic, opts.whitening_loading)?;
    let a = crate::dsp::stft(&aux.interference_plus_noise, &opts.stft)?;
    let q = estimate_covariance(&a)?;
    let w = mvdr_weights(&rtf, &q, opts.mvdr_loading)?;
    beamform_waveform(mixture, &w, &opts.stft)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array1;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn outer_product_by_hand() {
        let bins =
            Array3::from_shape_fn(
                (129, 1, 2),
                |(_, _, j)| if j == 0 { c(1.0, 0.0) } else { c(0.0, 1.0) },
            );
        // One frame, J = 2: not enough frames for a full-rank estimate.
        let s = Spectrogram::new(bins.clone(), StftConfig::default()).unwrap();
        assert!(matches!(
            estimate_covariance(&s),
            Err(Error::InsufficientFrames {
                frames: 1,
                channels: 2
            })
        ));
        let two = ndarray::concatenate(Axis(1), &[bins.view(), bins.view()]).unwrap();
        let q =
            estimate_covariance(&Spectrogram::new(two, StftConfig::default()).unwrap()).unwrap();
        let m = q.matrix(3);
        assert_eq!(m[(0, 0)], c(1.0, 0.0));
        assert_eq!(m[(0, 1)], c(0.0, -1.0));
        assert_eq!(m[(1, 0)], c(0.0, 1.0));
        assert_eq!(m[(1, 1)], c(1.0, 0.0));
    }

    #[test]
    fn zero_segment_is_flagged_singular() {
        let s = Spectrogram::zeros(StftConfig::default(), 8, 3);
        let q = estimate_covariance(&s).unwrap();
        assert!(q.matrices.iter().all(|v| *v == Complex64::default()));
        assert_eq!(q.singular_bins().len(), 129);
        let r = RtfEstimate {
            values: Array2::from_elem((129, 3), c(1.0, 0.0)),
            valid: Array1::from_elem(129, true),
            reference_mic: 0,
        };
        assert!(matches!(
            mvdr_weights(&r, &q, DEFAULT_MVDR_LOADING),
            Err(Error::SingularNoiseCovariance { bin: 0 })
        ));
    }

    #[test]
    fn scalar_case_is_identity() {
        let r = RtfEstimate {
            values: Array2::from_elem((129, 1), c(1.0, 0.0)),
            valid: Array1::from_elem(129, true),
            reference_mic: 0,
        };
        let mut q = NoiseCovariance::identity(129, 1);
        q.matrices.mapv_inplace(|v| v * 3.5);
        let w = mvdr_weights(&r, &q, DEFAULT_MVDR_LOADING).unwrap();
        for v in w.weights.iter() {
            assert!((v - c(1.0, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn identity_covariance_gives_matched_filter() {
        let rv = [c(1.0, 0.0), c(0.5, -0.3), c(-0.2, 0.9)];
        let r = RtfEstimate {
            values: Array2::from_shape_fn((129, 3), |(_, j)| rv[j]),
            valid: Array1::from_elem(129, true),
            reference_mic: 0,
        };
        let w = mvdr_weights(&r, &NoiseCovariance::identity(129, 3), 0.0).unwrap();
        let energy: f64 = rv.iter().map(|v| v.norm_sqr()).sum();
        for (j, v) in rv.iter().enumerate() {
            assert!((w.weights[[7, j]] - v / energy).norm() < 1e-14);
        }
    }

    #[test]
    fn invalid_bins_pass_reference_through() {
        let mut valid = Array1::from_elem(129, true);
        valid[4] = false;
        let r = RtfEstimate {
            values: Array2::from_elem((129, 2), c(1.0, 0.0)),
            valid,
            reference_mic: 1,
        };
        let w = mvdr_weights(&r, &NoiseCovariance::identity(129, 2), 1e-6).unwrap();
        assert_eq!(w.passthrough_bins, vec![4]);
        assert_eq!(w.weights[[4, 0]], c(0.0, 0.0));
        assert_eq!(w.weights[[4, 1]], c(1.0, 0.0));
    }

    #[test]
    fn shape_mismatch_is_reported() {
        let s = Spectrogram::zeros(StftConfig::default(), 4, 3);
        let w = BeamformerWeights::reference_selector(129, 2, 0);
        assert!(matches!(
            apply_beamformer(&s, &w),
            Err(Error::ShapeMismatch(_))
        ));
    }
}
