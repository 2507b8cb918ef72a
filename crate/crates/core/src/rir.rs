//! Shoebox room impulse responses by the image-source method.
//!
//! Walls share one reflection coefficient derived from the target T60 with
//! Sabine's formula. Each image contributes a Hann-tapered sinc pulse
//! (±4 ms) at its fractional delay, scaled by `β^reflections / (4π·d)`.
//! Images are accumulated in a fixed lexicographic order so output is
//! bit-reproducible.

use std::f64::consts::PI;
use std::path::Path;

use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dsp::{write_wav, MultichannelWaveform, WavEncoding};
use crate::error::{Error, IoContext, Result};

pub type Point3 = [f64; 3];

pub const DEFAULT_SPEED_OF_SOUND_MPS: f64 = 343.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoomSpec {
    pub dims_m: Point3,
    pub t60_s: f64,
    #[serde(default = "default_speed_of_sound")]
    pub speed_of_sound_mps: f64,
}

fn default_speed_of_sound() -> f64 {
    DEFAULT_SPEED_OF_SOUND_MPS
}

impl RoomSpec {
    pub fn new(dims_m: Point3, t60_s: f64) -> Self {
        Self {
            dims_m,
            t60_s,
            speed_of_sound_mps: DEFAULT_SPEED_OF_SOUND_MPS,
        }
    }

    pub fn volume(&self) -> f64 {
        self.dims_m.iter().product()
    }

    pub fn surface_area(&self) -> f64 {
        let [x, y, z] = self.dims_m;
        2.0 * (x * y + x * z + y * z)
    }

    /// Uniform wall absorption giving this T60 under Sabine's formula,
    /// `T60 = 24 ln(10) V / (c S α)`.
    pub fn sabine_absorption(&self) -> Result<f64> {
        if self.t60_s.is_nan() || self.t60_s <= 0.0 {
            return Err(Error::InfeasibleReverb {
                t60_s: self.t60_s,
                absorption: f64::INFINITY,
            });
        }
        let alpha = 24.0 * 10f64.ln() * self.volume()
            / (self.speed_of_sound_mps * self.surface_area() * self.t60_s);
        if alpha > 1.0 {
            return Err(Error::InfeasibleReverb {
                t60_s: self.t60_s,
                absorption: alpha,
            });
        }
        Ok(alpha)
    }

    /// Distance from `p` to the nearest wall, negative when outside.
    pub fn wall_clearance(&self, p: &Point3) -> f64 {
        (0..3)
            .map(|i| p[i].min(self.dims_m[i] - p[i]))
            .fold(f64::INFINITY, f64::min)
    }

    fn validate(&self) -> Result<()> {
        let positive = |v: f64| v > 0.0;
        if !self.dims_m.iter().copied().all(positive) || !positive(self.speed_of_sound_mps) {
            return Err(Error::InvalidGeometry(format!(
                "room {:?} with c = {}",
                self.dims_m, self.speed_of_sound_mps
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArrayGeometry {
    pub mic_positions_m: Vec<Point3>,
    pub reference_mic_index: usize,
}

impl ArrayGeometry {
    /// Horizontal uniform linear array centred on `center`, its axis at
    /// `azimuth_rad` from the room x-axis. Mic 0 is the reference.
    pub fn uniform_linear(center: Point3, count: usize, spacing_m: f64, azimuth_rad: f64) -> Self {
        let axis = [azimuth_rad.cos(), azimuth_rad.sin(), 0.0];
        let mid = (count as f64 - 1.0) / 2.0;
        let mic_positions_m = (0..count)
            .map(|j| {
                let off = (j as f64 - mid) * spacing_m;
                [
                    center[0] + off * axis[0],
                    center[1] + off * axis[1],
                    center[2] + off * axis[2],
                ]
            })
            .collect();
        Self {
            mic_positions_m,
            reference_mic_index: 0,
        }
    }

    pub fn num_mics(&self) -> usize {
        self.mic_positions_m.len()
    }

    pub fn centroid(&self) -> Point3 {
        let n = self.mic_positions_m.len() as f64;
        let mut c = [0.0; 3];
        for p in &self.mic_positions_m {
            for i in 0..3 {
                c[i] += p[i] / n;
            }
        }
        c
    }

    /// Unit vector from the first to the last microphone (endfire direction).
    pub fn axis(&self) -> Point3 {
        let a = self.mic_positions_m.first().copied().unwrap_or_default();
        let b = self.mic_positions_m.last().copied().unwrap_or_default();
        let d = [b[0] - a[0], b[1] - a[1], b[2] - a[2]];
        let n = norm(&d);
        if n == 0.0 {
            [1.0, 0.0, 0.0]
        } else {
            [d[0] / n, d[1] / n, d[2] / n]
        }
    }

    pub fn validate(&self, room: &RoomSpec, min_clearance_m: f64) -> Result<()> {
        if self.mic_positions_m.is_empty() {
            return Err(Error::InvalidGeometry("array has no microphones".into()));
        }
        if self.reference_mic_index >= self.num_mics() {
            return Err(Error::RefMicOutOfRange {
                index: self.reference_mic_index,
                channels: self.num_mics(),
            });
        }
        for (j, p) in self.mic_positions_m.iter().enumerate() {
            let c = room.wall_clearance(p);
            if c < min_clearance_m || (min_clearance_m <= 0.0 && c <= 0.0) {
                return Err(Error::InvalidGeometry(format!(
                    "mic {j} at {p:?} has wall clearance {c:.3} m (need {min_clearance_m} m)"
                )));
            }
        }
        Ok(())
    }
}

pub(crate) fn norm(v: &Point3) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

pub(crate) fn distance(a: &Point3, b: &Point3) -> f64 {
    norm(&[a[0] - b[0], a[1] - b[1], a[2] - b[2]])
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RirOptions {
    pub sample_rate_hz: u32,
    /// Forces absorption to 1 so only the direct path survives.
    pub anechoic: bool,
    /// Maximum reflection order; `None` keeps every image inside the RIR length.
    pub max_order: Option<u32>,
}

impl Default for RirOptions {
    fn default() -> Self {
        Self {
            sample_rate_hz: 8000,
            anechoic: false,
            max_order: None,
        }
    }
}

/// Per-microphone impulse responses `[J × L]` for one source position.
#[derive(Debug, Clone, PartialEq)]
pub struct RirSet {
    pub rirs: Array2<f64>,
    pub sample_rate_hz: u32,
    pub source_position_m: Point3,
}

impl RirSet {
    pub fn num_mics(&self) -> usize {
        self.rirs.nrows()
    }

    pub fn len(&self) -> usize {
        self.rirs.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.rirs.is_empty()
    }

    pub fn as_waveform(&self) -> MultichannelWaveform {
        MultichannelWaveform::from_parts_unchecked(self.rirs.clone(), self.sample_rate_hz)
    }
}

/// One image source as seen from one microphone.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImageContribution {
    pub delay_samples: f64,
    pub gain: f64,
    pub order: u32,
}

/// Half-width of the fractional-delay pulse: 4 ms.
fn pulse_width(sample_rate_hz: u32) -> usize {
    2 * (0.004 * f64::from(sample_rate_hz)).round() as usize
}

/// Calls `visit` for every image whose pulse starts before `max_delay`
/// samples, in lexicographic `(mx, my, mz, qx, qy, qz)` order.
#[allow(clippy::too_many_arguments)]
fn visit_images(
    room: &RoomSpec,
    beta: f64,
    src: &Point3,
    mic: &Point3,
    sample_rate_hz: u32,
    max_delay: f64,
    max_order: Option<u32>,
    mut visit: impl FnMut(ImageContribution),
) {
    let samples_per_m = f64::from(sample_rate_hz) / room.speed_of_sound_mps;
    let max_dist = max_delay / samples_per_m;
    let max_dist_sq = max_dist * max_dist;
    let reach: Vec<i64> = room
        .dims_m
        .iter()
        .map(|d| (max_dist / (2.0 * d)).ceil() as i64 + 1)
        .collect();
    let [lx, ly, lz] = room.dims_m;
    for mx in -reach[0]..=reach[0] {
        for my in -reach[1]..=reach[1] {
            for mz in -reach[2]..=reach[2] {
                for qx in 0..=1i64 {
                    let dx = (1 - 2 * qx) as f64 * src[0] + 2.0 * mx as f64 * lx - mic[0];
                    if dx * dx > max_dist_sq {
                        continue;
                    }
                    for qy in 0..=1i64 {
                        let dy = (1 - 2 * qy) as f64 * src[1] + 2.0 * my as f64 * ly - mic[1];
                        if dx * dx + dy * dy > max_dist_sq {
                            continue;
                        }
                        for qz in 0..=1i64 {
                            let order =
                                ((2 * mx - qx).abs() + (2 * my - qy).abs() + (2 * mz - qz).abs())
                                    as u32;
                            if max_order.is_some_and(|m| order > m) {
                                continue;
                            }
                            let dz = (1 - 2 * qz) as f64 * src[2] + 2.0 * mz as f64 * lz - mic[2];
                            let dist_sq = dx * dx + dy * dy + dz * dz;
                            if dist_sq > max_dist_sq {
                                continue;
                            }
                            let reflections = (mx - qx).abs()
                                + mx.abs()
                                + (my - qy).abs()
                                + my.abs()
                                + (mz - qz).abs()
                                + mz.abs();
                            let refl_gain = beta.powi(reflections as i32);
                            if refl_gain == 0.0 {
                                continue;
                            }
                            let dist = dist_sq.sqrt();
                            visit(ImageContribution {
                                delay_samples: dist * samples_per_m,
                                gain: refl_gain / (4.0 * PI * dist),
                                order,
                            });
                        }
                    }
                }
            }
        }
    }
}

/// Images contributing to the response at `mic`, in accumulation order.
pub fn image_contributions(
    room: &RoomSpec,
    src: &Point3,
    mic: &Point3,
    opts: &RirOptions,
) -> Result<Vec<ImageContribution>> {
    let beta = reflection_coefficient(room, opts)?;
    let len = rir_length(room, opts, std::slice::from_ref(mic), src);
    let mut out = Vec::new();
    visit_images(
        room,
        beta,
        src,
        mic,
        opts.sample_rate_hz,
        (len + pulse_width(opts.sample_rate_hz) / 2) as f64,
        opts.max_order,
        |c| out.push(c),
    );
    Ok(out)
}

fn reflection_coefficient(room: &RoomSpec, opts: &RirOptions) -> Result<f64> {
    room.validate()?;
    let alpha = room.sabine_absorption()?;
    Ok(if opts.anechoic {
        0.0
    } else {
        (1.0 - alpha).sqrt()
    })
}

/// `ceil(1.1·T60·fs)` taps, extended if needed to hold every direct path.
fn rir_length(room: &RoomSpec, opts: &RirOptions, mics: &[Point3], src: &Point3) -> usize {
    let fs = f64::from(opts.sample_rate_hz);
    let nominal = (1.1 * room.t60_s * fs).ceil() as usize;
    let direct = mics
        .iter()
        .map(|m| distance(m, src) / room.speed_of_sound_mps * fs)
        .fold(0.0, f64::max);
    nominal.max(direct.ceil() as usize + pulse_width(opts.sample_rate_hz))
}

/// Adds a Hann-tapered sinc centred at `delay` (samples) into `out`.
fn add_pulse(out: &mut [f64], delay: f64, gain: f64, width: usize) {
    let floor = delay.floor();
    let start = floor as i64 - (width / 2) as i64 + 1;
    let sin_pi_delay = (PI * delay).sin();
    // t = i - delay for output index i; the taper phase advances by 2π/width per tap.
    let t0 = start as f64 - delay;
    let step = 2.0 * PI / width as f64;
    let (mut s, mut c) = (step * t0).sin_cos();
    let (ds, dc) = step.sin_cos();
    for n in 0..width {
        let i = start + n as i64;
        let t = t0 + n as f64;
        if i >= 0 && (i as usize) < out.len() {
            let sinc = if t.abs() < 1e-12 {
                1.0
            } else {
                // sin(π(i - delay)) = -(-1)^i sin(π·delay)
                let sign = if i.rem_euclid(2) == 0 { -1.0 } else { 1.0 };
                sign * sin_pi_delay / (PI * t)
            };
            out[i as usize] += gain * 0.5 * (1.0 + c) * sinc;
        }
        let next_c = c * dc - s * ds;
        s = s * dc + c * ds;
        c = next_c;
    }
}

pub fn simulate_rir(
    room: &RoomSpec,
    array: &ArrayGeometry,
    src_pos: &Point3,
    opts: &RirOptions,
) -> Result<RirSet> {
    let beta = reflection_coefficient(room, opts)?;
    array.validate(room, 0.0)?;
    if room.wall_clearance(src_pos) <= 0.0 {
        return Err(Error::InvalidGeometry(format!(
            "source {src_pos:?} is not strictly inside the room"
        )));
    }
    let len = rir_length(room, opts, &array.mic_positions_m, src_pos);
    let width = pulse_width(opts.sample_rate_hz);
    let max_delay = (len + width / 2) as f64;
    let rows: Vec<Vec<f64>> = array
        .mic_positions_m
        .par_iter()
        .map(|mic| {
            let mut h = vec![0.0; len];
            visit_images(
                room,
                beta,
                src_pos,
                mic,
                opts.sample_rate_hz,
                max_delay,
                opts.max_order,
                |img| add_pulse(&mut h, img.delay_samples, img.gain, width),
            );
            h
        })
        .collect();
    let mut rirs = Array2::zeros((rows.len(), len));
    for (j, row) in rows.iter().enumerate() {
        rirs.row_mut(j)
            .assign(&ndarray::ArrayView1::from(row.as_slice()));
    }
    Ok(RirSet {
        rirs,
        sample_rate_hz: opts.sample_rate_hz,
        source_position_m: *src_pos,
    })
}

#[derive(Debug, Serialize)]
struct RirSidecar<'a> {
    schema: &'a str,
    room: RoomSpec,
    array: &'a ArrayGeometry,
    source_position_m: Point3,
    sample_rate_hz: u32,
    taps: usize,
    seed: Option<u64>,
}

/// Writes `<stem>.wav` (float32, one channel per mic) and a `<stem>.json` sidecar.
pub fn export_rir(
    stem: &Path,
    rirs: &RirSet,
    room: &RoomSpec,
    array: &ArrayGeometry,
    seed: Option<u64>,
) -> Result<()> {
    let wav_path = stem.with_extension("wav");
    write_wav(&wav_path, &rirs.as_waveform(), WavEncoding::Float32)?;
    let sidecar = RirSidecar {
        schema: "beamlab.rir/1",
        room: *room,
        array,
        source_position_m: rirs.source_position_m,
        sample_rate_hz: rirs.sample_rate_hz,
        taps: rirs.len(),
        seed,
    };
    let json_path = stem.with_extension("json");
    let text = serde_json::to_string_pretty(&sidecar).at(&json_path)?;
    std::fs::write(&json_path, text).at(&json_path)
}

/// Schroeder backward-integrated energy decay curve in dB, 0 dB at `t = 0`.
pub fn energy_decay_db(h: &[f64]) -> Vec<f64> {
    let mut edc = vec![0.0; h.len()];
    let mut acc = 0.0;
    for (i, v) in h.iter().enumerate().rev() {
        acc += v * v;
        edc[i] = acc;
    }
    let total = edc.first().copied().unwrap_or(0.0);
    edc.iter()
        .map(|e| {
            if total > 0.0 {
                10.0 * (e / total).log10()
            } else {
                f64::NEG_INFINITY
            }
        })
        .collect()
}

/// T60 from a least-squares line through the decay curve between
/// `upper_db` and `lower_db` (e.g. -5 and -25), extrapolated to -60 dB.
/// `None` when the curve never reaches `lower_db` or does not decay.
pub fn schroeder_t60(h: &[f64], sample_rate_hz: u32, upper_db: f64, lower_db: f64) -> Option<f64> {
    let edc = energy_decay_db(h);
    let pts: Vec<(f64, f64)> = edc
        .iter()
        .enumerate()
        .filter(|(_, e)| **e <= upper_db && **e >= lower_db)
        .map(|(i, e)| (i as f64 / f64::from(sample_rate_hz), *e))
        .collect();
    if pts.len() < 2 || edc.iter().all(|e| *e > lower_db) {
        return None;
    }
    let n = pts.len() as f64;
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let me = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|(t, e)| (t - mt) * (e - me)).sum();
    let sxx: f64 = pts.iter().map(|(t, _)| (t - mt).powi(2)).sum();
    let slope = sxy / sxx;
    (slope < 0.0).then(|| -60.0 / slope)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn room() -> RoomSpec {
        RoomSpec::new([6.0, 5.0, 3.0], 0.5)
    }

    fn array() -> ArrayGeometry {
        ArrayGeometry::uniform_linear([3.0, 2.5, 1.5], 4, 0.08, 0.0)
    }

    #[test]
    fn sabine_rejects_infeasible_t60() {
        let tiny = RoomSpec::new([3.0, 3.0, 3.0], 0.05);
        assert!(matches!(
            tiny.sabine_absorption(),
            Err(Error::InfeasibleReverb { .. })
        ));
        let alpha = room().sabine_absorption().unwrap();
        assert!(alpha > 0.0 && alpha < 1.0);
    }

    #[test]
    fn first_order_has_seven_images() {
        let opts = RirOptions {
            max_order: Some(1),
            ..Default::default()
        };
        let imgs = image_contributions(&room(), &[4.0, 3.0, 1.2], &[3.0, 2.5, 1.5], &opts).unwrap();
        assert_eq!(imgs.len(), 7);
        assert_eq!(imgs.iter().filter(|c| c.order == 0).count(), 1);
    }

    #[test]
    fn anechoic_is_a_single_pulse() {
        let opts = RirOptions {
            anechoic: true,
            ..Default::default()
        };
        let src = [4.5, 3.7, 1.5];
        let set = simulate_rir(&room(), &array(), &src, &opts).unwrap();
        let width = pulse_width(8000) as f64;
        for (j, mic) in array().mic_positions_m.iter().enumerate() {
            let delay = distance(mic, &src) / 343.0 * 8000.0;
            for (i, v) in set.rirs.row(j).iter().enumerate() {
                if (i as f64 - delay).abs() > width / 2.0 {
                    assert_eq!(*v, 0.0, "tap {i} of mic {j} outside the pulse");
                }
            }
        }
    }

    #[test]
    fn source_outside_room_is_rejected() {
        let err = simulate_rir(&room(), &array(), &[7.0, 1.0, 1.0], &RirOptions::default());
        assert!(matches!(err, Err(Error::InvalidGeometry(_))));
    }

    #[test]
    fn pulse_matches_direct_formula() {
        let mut fast = vec![0.0; 64];
        add_pulse(&mut fast, 20.37, 1.0, 64);
        for (i, v) in fast.iter().enumerate() {
            let t = i as f64 - 20.37;
            let expected = if t.abs() < 32.0 {
                0.5 * (1.0 + (2.0 * PI * t / 64.0).cos()) * (PI * t).sin() / (PI * t)
            } else {
                0.0
            };
            assert!((v - expected).abs() < 1e-12, "tap {i}: {v} vs {expected}");
        }
    }

    #[test]
    fn schroeder_recovers_an_exponential_decay() {
        // Energy falls 60 dB in 0.4 s.
        let fs = 8000;
        let h: Vec<f64> = (0..4000)
            .map(|i| 10f64.powf(-3.0 * i as f64 / (0.4 * fs as f64)))
            .collect();
        let t60 = schroeder_t60(&h, fs, -5.0, -25.0).unwrap();
        assert!((t60 - 0.4).abs() < 0.01, "{t60}");
        assert_eq!(energy_decay_db(&h)[0], 0.0);
        assert!(schroeder_t60(&[1.0, 0.0, 0.0], fs, -5.0, -25.0).is_none());
    }

    #[test]
    fn length_covers_t60() {
        let set =
            simulate_rir(&room(), &array(), &[4.0, 3.0, 1.2], &RirOptions::default()).unwrap();
        assert_eq!(set.len(), (1.1f64 * 0.5 * 8000.0).ceil() as usize);
        assert!(set.rirs.iter().all(|v| v.is_finite()));
    }
}
