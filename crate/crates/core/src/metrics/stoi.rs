//! Short-time objective intelligibility (STOI).
//!
//! Both signals are resampled to 10 kHz, frames more than 40 dB below the
//! loudest clean frame are dropped, and 512-point spectra of 256-sample
//! Hann frames (50% overlap) are grouped into 15 one-third-octave bands from
//! 150 Hz. Band envelopes over 30-frame (384 ms) segments are normalized,
//! clipped at a -15 dB signal-to-distortion floor and correlated; the score
//! is the mean correlation over bands and segments.

use std::f64::consts::PI;

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use crate::dsp::resample;
use crate::error::{Error, Result};

const FS: u32 = 10_000;
const FRAME_LEN: usize = 256;
const HOP: usize = FRAME_LEN / 2;
const NFFT: usize = 512;
const NUM_BANDS: usize = 15;
const MIN_FREQ_HZ: f64 = 150.0;
const SEGMENT_FRAMES: usize = 30;
const BETA_DB: f64 = -15.0;
const DYN_RANGE_DB: f64 = 40.0;
const EPS: f64 = f64::EPSILON;

/// Symmetric Hann without its zero end points.
fn hann_inner(len: usize) -> Vec<f64> {
    (1..=len)
        .map(|n| 0.5 - 0.5 * (2.0 * PI * n as f64 / (len + 1) as f64).cos())
        .collect()
}

/// Frame start offsets: every `HOP` samples while a full frame fits with
/// at least one sample to spare.
fn frame_starts(len: usize) -> impl Iterator<Item = usize> {
    (0..len.saturating_sub(FRAME_LEN)).step_by(HOP)
}

fn remove_silent_frames(x: &[f64], y: &[f64], window: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let frame = |s: &[f64], i: usize| -> Vec<f64> {
        s[i..i + FRAME_LEN]
            .iter()
            .zip(window)
            .map(|(v, w)| v * w)
            .collect()
    };
    let starts: Vec<usize> = frame_starts(x.len()).collect();
    let energies: Vec<f64> = starts
        .iter()
        .map(|&i| {
            let e: f64 = frame(x, i).iter().map(|v| v * v).sum();
            20.0 * (e.sqrt() + EPS).log10()
        })
        .collect();
    let max = energies.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let kept: Vec<usize> = starts
        .iter()
        .zip(&energies)
        .filter(|(_, e)| (max - DYN_RANGE_DB - **e) < 0.0)
        .map(|(i, _)| *i)
        .collect();
    let out_len = if kept.is_empty() {
        0
    } else {
        (kept.len() - 1) * HOP + FRAME_LEN
    };
    let mut xs = vec![0.0; out_len];
    let mut ys = vec![0.0; out_len];
    for (slot, &i) in kept.iter().enumerate() {
        let off = slot * HOP;
        for (n, (a, b)) in frame(x, i).into_iter().zip(frame(y, i)).enumerate() {
            xs[off + n] += a;
            ys[off + n] += b;
        }
    }
    (xs, ys)
}

/// Power spectra `[frames][NFFT/2 + 1]`.
fn power_spectra(x: &[f64], window: &[f64]) -> Vec<Vec<f64>> {
    let fft = FftPlanner::<f64>::new().plan_fft_forward(NFFT);
    frame_starts(x.len())
        .map(|i| {
            let mut buf = vec![Complex64::default(); NFFT];
            for n in 0..FRAME_LEN {
                buf[n].re = x[i + n] * window[n];
            }
            fft.process(&mut buf);
            buf[..=NFFT / 2].iter().map(|c| c.norm_sqr()).collect()
        })
        .collect()
}

/// One-third-octave band edges as `[lo, hi)` FFT-bin ranges.
fn third_octave_bands() -> Vec<(usize, usize)> {
    let freqs: Vec<f64> = (0..=NFFT / 2)
        .map(|i| i as f64 * f64::from(FS) / NFFT as f64)
        .collect();
    let nearest = |target: f64| -> usize {
        let mut best = 0;
        for (i, f) in freqs.iter().enumerate() {
            if (f - target).powi(2) < (freqs[best] - target).powi(2) {
                best = i;
            }
        }
        best
    };
    (0..NUM_BANDS)
        .map(|k| {
            let k = k as f64;
            let lo = MIN_FREQ_HZ * 2f64.powf((2.0 * k - 1.0) / 6.0);
            let hi = MIN_FREQ_HZ * 2f64.powf((2.0 * k + 1.0) / 6.0);
            (nearest(lo), nearest(hi))
        })
        .collect()
}

fn band_envelopes(spectra: &[Vec<f64>], bands: &[(usize, usize)]) -> Vec<Vec<f64>> {
    bands
        .iter()
        .map(|&(lo, hi)| {
            spectra
                .iter()
                .map(|frame| frame[lo..hi].iter().sum::<f64>().sqrt())
                .collect()
        })
        .collect()
}

fn l2(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

fn center_and_normalize(v: &mut [f64]) {
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    for a in v.iter_mut() {
        *a -= mean;
    }
    let n = l2(v) + EPS;
    for a in v.iter_mut() {
        *a /= n;
    }
}

/// STOI of `estimate` against the clean `reference`, both at `fs` Hz.
pub fn stoi(reference: &[f64], estimate: &[f64], fs: u32) -> Result<f64> {
    if reference.len() != estimate.len() {
        return Err(Error::ShapeMismatch(format!(
            "reference has {} samples, estimate has {}",
            reference.len(),
            estimate.len()
        )));
    }
    let (x, y) = if fs == FS {
        (reference.to_vec(), estimate.to_vec())
    } else {
        (resample(reference, fs, FS), resample(estimate, fs, FS))
    };
    let window = hann_inner(FRAME_LEN);
    let (x, y) = remove_silent_frames(&x, &y, &window);
    let xs = power_spectra(&x, &window);
    let ys = power_spectra(&y, &window);
    if xs.len() < SEGMENT_FRAMES {
        return Err(Error::InsufficientSpeech {
            frames: xs.len(),
            needed: SEGMENT_FRAMES,
        });
    }
    let bands = third_octave_bands();
    let x_env = band_envelopes(&xs, &bands);
    let y_env = band_envelopes(&ys, &bands);
    let clip = 1.0 + 10f64.powf(-BETA_DB / 20.0);
    let mut total = 0.0;
    let mut count = 0usize;
    for end in SEGMENT_FRAMES..=xs.len() {
        for (xb, yb) in x_env.iter().zip(&y_env) {
            let mut xseg = xb[end - SEGMENT_FRAMES..end].to_vec();
            let yseg = &yb[end - SEGMENT_FRAMES..end];
            let scale = l2(&xseg) / (l2(yseg) + EPS);
            let mut yprime: Vec<f64> = yseg
                .iter()
                .zip(&xseg)
                .map(|(yv, xv)| (yv * scale).min(xv * clip))
                .collect();
            center_and_normalize(&mut yprime);
            center_and_normalize(&mut xseg);
            total += yprime.iter().zip(&xseg).map(|(a, b)| a * b).sum::<f64>();
            count += 1;
        }
    }
    Ok(total / count as f64)
}
