use ndarray::Array2;
use rayon::prelude::*;

use super::noise::pink_noise;
use super::sampler::{scene_rng, stream, MeasuredSnr, SceneManifest, SourcePlacement, SourceRole};
use crate::beamformer::AuxSegments;
use crate::dsp::{fft_convolve, MultichannelWaveform};
use crate::error::{Error, Result};
use crate::rir::{simulate_rir, RirOptions, RirSet};

/// Mono dry material for one scene, at the manifest sample rate.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DrySignals {
    pub desired: Vec<f64>,
    /// A different utterance of the desired speaker.
    pub enrollment: Vec<f64>,
    pub interference: Option<Vec<f64>>,
    /// Looped when shorter than needed.
    pub directional_noise: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RenderOptions {
    pub sensor_noise: bool,
    /// Length of the auxiliary desired-plus-noise and noise-only segments.
    pub aux_segment_s: f64,
}

impl Default for RenderOptions {
    fn default() -> Self {
        Self {
            sensor_noise: true,
            aux_segment_s: 2.0,
        }
    }
}

/// Everything rendered for one scene. All multichannel signals have the
/// mixture's length except `enrollment`.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneAudio {
    pub mixture: MultichannelWaveform,
    pub reverberant_desired: MultichannelWaveform,
    pub reverberant_interference: MultichannelWaveform,
    pub enrollment: MultichannelWaveform,
    /// Reverberant directional noise after SNR scaling.
    pub directional_noise: MultichannelWaveform,
    pub sensor_noise: MultichannelWaveform,
    pub aux: AuxSegments,
}

fn power(x: &[f64]) -> f64 {
    if x.is_empty() {
        0.0
    } else {
        x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64
    }
}

/// `10·log10(P_signal / P_noise)` over the given channel.
pub fn snr_db(signal: &MultichannelWaveform, noise: &MultichannelWaveform, channel: usize) -> f64 {
    let ps = power(signal.channel(channel).as_slice().unwrap_or(&[]));
    let pn = power(noise.channel(channel).as_slice().unwrap_or(&[]));
    10.0 * (ps / pn).log10()
}

impl SceneAudio {
    pub fn measured_snr(&self, ref_mic: usize) -> MeasuredSnr {
        MeasuredSnr {
            directional_db: snr_db(&self.reverberant_desired, &self.directional_noise, ref_mic),
            sensor_db: snr_db(&self.reverberant_desired, &self.sensor_noise, ref_mic),
        }
    }
}

fn check_energy(x: &[f64], role: &str) -> Result<()> {
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidWaveform(format!(
            "{role} contains non-finite samples"
        )));
    }
    if x.iter().all(|v| *v == 0.0) {
        return Err(Error::DegenerateSource(role.into()));
    }
    Ok(())
}

fn placement(manifest: &SceneManifest, role: SourceRole) -> Result<&SourcePlacement> {
    manifest
        .placement(role)
        .ok_or_else(|| Error::InvalidGeometry(format!("manifest has no {role:?} placement")))
}

fn rirs_for(manifest: &SceneManifest, role: SourceRole) -> Result<RirSet> {
    let p = placement(manifest, role)?;
    let opts = RirOptions {
        sample_rate_hz: manifest.sample_rate_hz,
        ..RirOptions::default()
    };
    simulate_rir(&manifest.room, &manifest.array, &p.position_m, &opts)
}

/// Convolves `dry` with every channel of `rirs`, keeping the first `len` samples.
fn spatialize(dry: &[f64], rirs: &RirSet, len: usize) -> Array2<f64> {
    let rows: Vec<Vec<f64>> = (0..rirs.num_mics())
        .into_par_iter()
        .map(|j| {
            let h = rirs.rirs.row(j).to_vec();
            let mut y = fft_convolve(dry, &h);
            y.resize(len, 0.0);
            y
        })
        .collect();
    let mut out = Array2::zeros((rows.len(), len));
    for (j, row) in rows.iter().enumerate() {
        out.row_mut(j)
            .assign(&ndarray::ArrayView1::from(row.as_slice()));
    }
    out
}

fn fit_len(x: &[f64], len: usize, looped: bool) -> Vec<f64> {
    if looped && !x.is_empty() {
        x.iter().copied().cycle().take(len).collect()
    } else {
        let mut y: Vec<f64> = x.iter().copied().take(len).collect();
        y.resize(len, 0.0);
        y
    }
}

/// Start of the `window`-sample stretch with the most energy in `x`,
/// searched on a `step` grid.
fn loudest_window(x: &[f64], window: usize, step: usize) -> usize {
    if x.len() <= window {
        return 0;
    }
    let mut cum = Vec::with_capacity(x.len() + 1);
    cum.push(0.0);
    for v in x {
        cum.push(cum.last().copied().unwrap_or(0.0) + v * v);
    }
    let mut best = (0, f64::NEG_INFINITY);
    for start in (0..=x.len() - window).step_by(step.max(1)) {
        let e = cum[start + window] - cum[start];
        if e > best.1 {
            best = (start, e);
        }
    }
    best.0
}

fn wave(samples: Array2<f64>, fs: u32) -> MultichannelWaveform {
    MultichannelWaveform::from_parts_unchecked(samples, fs)
}

/// Mixes the observed multichannel signal of one scene.
///
/// The directional noise is scaled so that its power at the reference mic is
/// `snr_directional_db` below the reverberant desired speaker there; sensor
/// noise (independent pink noise per channel, equal gains) likewise at
/// `snr_sensor_db`. Both noises are rendered `aux_segment_s` longer than the
/// mixture; that tail becomes the noise-only auxiliary segment.
pub fn render_scene(
    manifest: &SceneManifest,
    dry: &DrySignals,
    opts: &RenderOptions,
) -> Result<SceneAudio> {
    let fs = manifest.sample_rate_hz;
    let j = manifest.array.num_mics();
    let m = manifest.snr_reference_mic;
    if m >= j {
        return Err(Error::RefMicOutOfRange {
            index: m,
            channels: j,
        });
    }
    check_energy(&dry.desired, "desired")?;
    check_energy(&dry.enrollment, "enrollment")?;
    if let Some(x) = &dry.interference {
        check_energy(x, "interference")?;
    }
    if let Some(x) = &dry.directional_noise {
        check_energy(x, "directional noise")?;
    }
    let n = dry.desired.len();
    let seg = ((opts.aux_segment_s * f64::from(fs)).round() as usize).max(1);
    let n_ext = n + seg;

    let h_d = rirs_for(manifest, SourceRole::Desired)?;
    let desired = spatialize(&dry.desired, &h_d, n);
    let enrollment = spatialize(&dry.enrollment, &h_d, dry.enrollment.len());
    let p_d = power(desired.row(m).as_slice().unwrap_or(&[]));
    if p_d.is_nan() || p_d <= 0.0 {
        return Err(Error::DegenerateSource("reverberant desired".into()));
    }

    let interference = match &dry.interference {
        Some(x) => {
            let h = rirs_for(manifest, SourceRole::Interference)?;
            spatialize(&fit_len(x, n, false), &h, n)
        }
        None => Array2::zeros((j, n)),
    };

    let dir_noise = match &dry.directional_noise {
        Some(x) => {
            let h = rirs_for(manifest, SourceRole::DirectionalNoise)?;
            let mut y = spatialize(&fit_len(x, n_ext, true), &h, n_ext);
            let p = power(&y.row(m).to_vec()[..n]);
            if p.is_nan() || p <= 0.0 {
                return Err(Error::DegenerateSource(
                    "reverberant directional noise".into(),
                ));
            }
            let g = (p_d / p / 10f64.powf(manifest.snr_directional_db / 10.0)).sqrt();
            y.mapv_inplace(|v| v * g);
            y
        }
        None => Array2::zeros((j, n_ext)),
    };

    let mut sensor = Array2::zeros((j, n_ext));
    if opts.sensor_noise {
        let mut rng = scene_rng(manifest.seed, stream::NOISE);
        for ch in 0..j {
            let v = pink_noise(n_ext, &mut rng);
            sensor
                .row_mut(ch)
                .assign(&ndarray::ArrayView1::from(v.as_slice()));
        }
        let p = power(&sensor.row(m).to_vec()[..n]);
        let g = (p_d / p / 10f64.powf(manifest.snr_sensor_db / 10.0)).sqrt();
        sensor.mapv_inplace(|v| v * g);
    }

    let noises_ext = &dir_noise + &sensor;
    let noises = noises_ext.slice(ndarray::s![.., ..n]).to_owned();
    let mixture = &desired + &interference + &noises;

    let w = seg.min(n);
    let start = loudest_window(
        desired.row(m).as_slice().unwrap_or(&[]),
        w,
        (f64::from(fs) * 0.01) as usize,
    );
    let win = ndarray::s![.., start..start + w];
    let desired_plus_noise = &desired.slice(win) + &noises.slice(win);
    let noise_only = noises_ext.slice(ndarray::s![.., n..]).to_owned();
    let interference_plus_noise = &interference + &noises;

    let dir_noise_mix = dir_noise.slice(ndarray::s![.., ..n]).to_owned();
    let sensor_mix = sensor.slice(ndarray::s![.., ..n]).to_owned();

    Ok(SceneAudio {
        mixture: wave(mixture, fs),
        reverberant_desired: wave(desired, fs),
        reverberant_interference: wave(interference, fs),
        enrollment: wave(enrollment, fs),
        directional_noise: wave(dir_noise_mix, fs),
        sensor_noise: wave(sensor_mix, fs),
        aux: AuxSegments {
            desired_plus_noise: wave(desired_plus_noise, fs),
            noise_only: wave(noise_only, fs),
            interference_plus_noise: wave(interference_plus_noise, fs),
        },
    })
}
