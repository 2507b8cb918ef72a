//! Relative transfer function (RTF) estimators.
//!
//! An RTF is the acoustic transfer vector of a source normalized by its
//! entry at the reference microphone. Two estimators live here:
//!
//! * [`instantaneous_rtf`]: per-cell ratio of a noiseless multichannel
//!   enrollment spectrogram to its reference channel, optionally reduced to
//!   one vector per frequency by [`average_rtf`];
//! * [`covariance_whitening_rtf`]: whitens the speech-plus-noise covariance
//!   with the noise covariance, takes the principal eigenvector and maps it
//!   back.

use nalgebra::{Cholesky, SymmetricEigen};
use ndarray::{Array1, Array2, Array3, Axis};
use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::dsp::Spectrogram;
use crate::error::{Error, Result};
use crate::linalg::{add_diagonal, sample_covariance, trace_re, CMatrix};
use crate::rir::RirSet;

/// Cells whose reference magnitude falls this far below the per-frequency
/// median are masked.
pub const DEFAULT_FLOOR_DB: f64 = 40.0;
/// Diagonal loading of the noise covariance, relative to `tr(Φn)/J`.
pub const DEFAULT_WHITENING_LOADING: f64 = 1e-4;
/// Median relative eigengap below which whitening finds no target.
pub const NO_SPEECH_EIGENGAP: f64 = 0.05;

const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Per-frame RTF `[K × T × J]` with its validity mask `[K × T]`.
#[derive(Debug, Clone, PartialEq)]
pub struct InstantaneousRtf {
    pub values: Array3<Complex64>,
    pub mask: Array2<bool>,
    /// `|S(t,k,m)|²` of the reference channel, used for energy weighting.
    pub reference_power: Array2<f64>,
    pub reference_mic: usize,
}

impl InstantaneousRtf {
    pub fn num_bins(&self) -> usize {
        self.values.dim().0
    }

    pub fn frames(&self) -> usize {
        self.values.dim().1
    }

    pub fn channels(&self) -> usize {
        self.values.dim().2
    }

    pub fn valid_cells(&self) -> usize {
        self.mask.iter().filter(|v| **v).count()
    }
}

/// One steering vector per frequency, `[K × J]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RtfEstimate {
    pub values: Array2<Complex64>,
    pub valid: Array1<bool>,
    pub reference_mic: usize,
}

impl RtfEstimate {
    pub fn num_bins(&self) -> usize {
        self.values.nrows()
    }

    pub fn channels(&self) -> usize {
        self.values.ncols()
    }

    pub fn vector(&self, k: usize) -> Vec<Complex64> {
        self.values.row(k).to_vec()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Weighting {
    /// Weight each frame by the reference-channel power `|S(t,k,m)|²`.
    RefEnergy,
    Uniform,
}

fn check_ref(ref_mic: usize, channels: usize) -> Result<()> {
    if ref_mic >= channels {
        return Err(Error::RefMicOutOfRange {
            index: ref_mic,
            channels,
        });
    }
    Ok(())
}

fn median(values: &mut [f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

pub fn instantaneous_rtf(
    enrollment: &Spectrogram,
    ref_mic: usize,
    floor_db: f64,
) -> Result<InstantaneousRtf> {
    let (bins, frames, channels) = enrollment.bins().dim();
    check_ref(ref_mic, channels)?;
    let floor = 10f64.powf(-floor_db / 20.0);
    let spec = enrollment.bins();
    let mut values = Array3::zeros((bins, frames, channels));
    let mut mask = Array2::from_elem((bins, frames), false);
    let mut reference_power = Array2::zeros((bins, frames));
    for k in 0..bins {
        let mut mags: Vec<f64> = (0..frames).map(|t| spec[[k, t, ref_mic]].norm()).collect();
        let threshold = median(&mut mags) * floor;
        for t in 0..frames {
            let denom = spec[[k, t, ref_mic]];
            let mag = denom.norm();
            reference_power[[k, t]] = mag * mag;
            if mag.is_nan() || mag <= 0.0 || mag < threshold {
                continue;
            }
            let ratios: Vec<Complex64> = (0..channels).map(|j| spec[[k, t, j]] / denom).collect();
            if ratios
                .iter()
                .any(|r| !r.re.is_finite() || !r.im.is_finite())
            {
                continue;
            }
            for (j, r) in ratios.into_iter().enumerate() {
                values[[k, t, j]] = if j == ref_mic { ONE } else { r };
            }
            mask[[k, t]] = true;
        }
    }
    if !mask.iter().any(|v| *v) {
        return Err(Error::SilentEnrollment);
    }
    Ok(InstantaneousRtf {
        values,
        mask,
        reference_power,
        reference_mic: ref_mic,
    })
}

pub fn average_rtf(inst: &InstantaneousRtf, weighting: Weighting) -> RtfEstimate {
    let (bins, frames, channels) = inst.values.dim();
    let m = inst.reference_mic;
    let mut values = Array2::zeros((bins, channels));
    let mut valid = Array1::from_elem(bins, false);
    for k in 0..bins {
        let mut acc = vec![Complex64::default(); channels];
        let mut total = 0.0;
        for t in 0..frames {
            if !inst.mask[[k, t]] {
                continue;
            }
            let w = match weighting {
                Weighting::RefEnergy => inst.reference_power[[k, t]],
                Weighting::Uniform => 1.0,
            };
            for (j, a) in acc.iter_mut().enumerate() {
                *a += inst.values[[k, t, j]] * w;
            }
            total += w;
        }
        if total > 0.0 && acc[m].norm() > 0.0 {
            let norm = acc[m];
            for (j, a) in acc.iter().enumerate() {
                values[[k, j]] = if j == m { ONE } else { a / norm };
            }
            valid[k] = true;
        }
    }
    RtfEstimate {
        values,
        valid,
        reference_mic: m,
    }
}

/// Covariance-whitening RTF estimate from a speech-plus-noise segment and a
/// noise-only segment.
///
/// Per frequency: `Φn += loading·tr(Φn)/J·I`, `Φn = B Bᴴ`,
/// `C = B⁻¹ Φx B⁻ᴴ`, `h = B·u_max(C)`, `r = h / h[m]`.
pub fn covariance_whitening_rtf(
    speech_plus_noise: &Spectrogram,
    noise_only: &Spectrogram,
    ref_mic: usize,
    loading: f64,
) -> Result<RtfEstimate> {
    let (bins, tx, channels) = speech_plus_noise.bins().dim();
    let (bins_n, tn, channels_n) = noise_only.bins().dim();
    if bins != bins_n || channels != channels_n {
        return Err(Error::ShapeMismatch(format!(
            "speech+noise is [{bins} x {tx} x {channels}], noise is [{bins_n} x {tn} x {channels_n}]"
        )));
    }
    check_ref(ref_mic, channels)?;
    for frames in [tx, tn] {
        if frames < channels {
            return Err(Error::InsufficientFrames { frames, channels });
        }
    }
    let mut values = Array2::zeros((bins, channels));
    let mut valid = Array1::from_elem(bins, false);
    let mut gaps = Vec::with_capacity(bins);
    for k in 0..bins {
        let phi_x = sample_covariance(speech_plus_noise.bins().index_axis(Axis(0), k));
        let phi_n = sample_covariance(noise_only.bins().index_axis(Axis(0), k));
        let load = loading * trace_re(&phi_n) / channels as f64;
        let phi_n = add_diagonal(&phi_n, load);
        let chol = Cholesky::new(phi_n).ok_or(Error::SingularNoiseCovariance { bin: k })?;
        let b = chol.l();
        let (h, gap) = whitened_principal_vector(&b, &phi_x)
            .ok_or(Error::SingularNoiseCovariance { bin: k })?;
        gaps.push(gap);
        let href = h[ref_mic];
        if href.norm() > 0.0 && h.iter().all(|v| v.re.is_finite() && v.im.is_finite()) {
            for j in 0..channels {
                values[[k, j]] = if j == ref_mic { ONE } else { h[j] / href };
            }
            valid[k] = true;
        }
    }
    let gap = median(&mut gaps);
    if gap.is_nan() || gap < NO_SPEECH_EIGENGAP {
        return Err(Error::NoSpeechDetected { gap });
    }
    Ok(RtfEstimate {
        values,
        valid,
        reference_mic: ref_mic,
    })
}

/// De-whitened principal eigenvector of `B⁻¹ Φx B⁻ᴴ` and its relative
/// eigengap `(λ1 - λ2)/λ1`.
fn whitened_principal_vector(b: &CMatrix, phi_x: &CMatrix) -> Option<(Vec<Complex64>, f64)> {
    let y = b.solve_lower_triangular(phi_x)?;
    let c = b.solve_lower_triangular(&y.adjoint())?.adjoint();
    let c = crate::linalg::hermitian_part(&c);
    let eig = SymmetricEigen::new(c);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let l1 = eig.eigenvalues[order[0]];
    let l2 = order.get(1).map_or(0.0, |&i| eig.eigenvalues[i]);
    let gap = if l1 > 0.0 { (l1 - l2) / l1 } else { 0.0 };
    let u = eig.eigenvectors.column(order[0]);
    let h = b * u;
    Some((h.iter().copied().collect(), gap))
}

/// RTF of a simulated source from its impulse responses: the ratio of the
/// RIR spectra `H_j(k)/H_m(k)` evaluated at the STFT bin centres
/// `2πk/frame_len`.
pub fn rtf_from_rirs(rirs: &RirSet, frame_len: usize, ref_mic: usize) -> Result<RtfEstimate> {
    let channels = rirs.num_mics();
    check_ref(ref_mic, channels)?;
    let bins = frame_len / 2 + 1;
    let fft = FftPlanner::<f64>::new().plan_fft_forward(frame_len);
    let mut spectra = Array2::<Complex64>::zeros((channels, bins));
    for j in 0..channels {
        // Sampling the DTFT at 2πk/K equals a K-point FFT of the folded response.
        let mut folded = vec![Complex64::default(); frame_len];
        for (n, v) in rirs.rirs.row(j).iter().enumerate() {
            folded[n % frame_len].re += v;
        }
        fft.process(&mut folded);
        for k in 0..bins {
            spectra[[j, k]] = folded[k];
        }
    }
    let mut values = Array2::zeros((bins, channels));
    let mut valid = Array1::from_elem(bins, false);
    for k in 0..bins {
        let href = spectra[[ref_mic, k]];
        if href.norm() > 0.0 {
            for j in 0..channels {
                values[[k, j]] = if j == ref_mic {
                    ONE
                } else {
                    spectra[[j, k]] / href
                };
            }
            valid[k] = true;
        }
    }
    Ok(RtfEstimate {
        values,
        valid,
        reference_mic: ref_mic,
    })
}

/// Magnitude of the reference-channel RIR spectrum at each bin centre.
pub fn reference_rir_magnitude(rirs: &RirSet, frame_len: usize, ref_mic: usize) -> Vec<f64> {
    let fft = FftPlanner::<f64>::new().plan_fft_forward(frame_len);
    let mut folded = vec![Complex64::default(); frame_len];
    for (n, v) in rirs.rirs.row(ref_mic).iter().enumerate() {
        folded[n % frame_len].re += v;
    }
    fft.process(&mut folded);
    folded[..frame_len / 2 + 1]
        .iter()
        .map(|c| c.norm())
        .collect()
}
