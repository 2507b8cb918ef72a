//! Rational-factor polyphase resampling with a Kaiser-windowed sinc.

use std::f64::consts::PI;

fn gcd(a: u32, b: u32) -> u32 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Zeroth-order modified Bessel function of the first kind.
fn bessel_i0(x: f64) -> f64 {
    let half = x / 2.0;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..200 {
        term *= (half / k as f64) * (half / k as f64);
        sum += term;
        if term < sum * 1e-17 {
            break;
        }
    }
    sum
}

fn kaiser(len: usize, beta: f64) -> Vec<f64> {
    let denom = bessel_i0(beta);
    let m = (len - 1) as f64;
    (0..len)
        .map(|n| {
            let r = 2.0 * n as f64 / m - 1.0;
            bessel_i0(beta * (1.0 - r * r).max(0.0).sqrt()) / denom
        })
        .collect()
}

fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        (PI * x).sin() / (PI * x)
    }
}

/// Anti-aliasing low-pass for `up/down` resampling: 60 dB stopband, cutoff
/// at `1/(2·max(up, down))` cycles/sample of the upsampled rate, transition
/// band a tenth of the cutoff. Normalized to unit DC gain.
fn design_filter(up: u32, down: u32) -> Vec<f64> {
    let rejection_db = 60.0;
    let cutoff = 1.0 / (2.0 * f64::from(up.max(down)));
    let roll_off = cutoff / 10.0;
    let half_len = ((rejection_db - 8.0) / (28.714 * roll_off)).ceil() as i64;
    let beta = 0.1102 * (rejection_db - 8.7);
    let window = kaiser((2 * half_len + 1) as usize, beta);
    let mut h: Vec<f64> = (-half_len..=half_len)
        .zip(&window)
        .map(|(t, w)| w * 2.0 * cutoff * sinc(2.0 * cutoff * t as f64))
        .collect();
    let sum: f64 = h.iter().sum();
    for v in &mut h {
        *v /= sum;
    }
    h
}

/// Resamples `x` from `from_hz` to `to_hz`. The output has
/// `ceil(len·up/down)` samples and is time-aligned with the input.
pub fn resample(x: &[f64], from_hz: u32, to_hz: u32) -> Vec<f64> {
    assert!(from_hz > 0 && to_hz > 0, "sample rates must be positive");
    let g = gcd(from_hz, to_hz);
    let (up, down) = (to_hz / g, from_hz / g);
    if up == down {
        return x.to_vec();
    }
    let h = design_filter(up, down);
    let half = (h.len() / 2) as i64;
    let (up_i, down_i) = (i64::from(up), i64::from(down));
    let out_len = (x.len() as u64 * u64::from(up)).div_ceil(u64::from(down)) as usize;
    let gain = f64::from(up);
    let n_in = x.len() as i64;
    (0..out_len as i64)
        .map(|m| {
            // Output m sits at upsampled position m·down; the filter is
            // centred there. Input n contributes tap (m·down - n·up + half).
            let pos = m * down_i;
            let n_lo = (pos - half).div_euclid(up_i).max(0);
            let n_hi = ((pos + half).div_euclid(up_i)).min(n_in - 1);
            let mut acc = 0.0;
            let mut n = n_lo;
            while n <= n_hi {
                let tap = pos - n * up_i + half;
                if (0..h.len() as i64).contains(&tap) {
                    acc += x[n as usize] * h[tap as usize];
                }
                n += 1;
            }
            acc * gain
        })
        .collect()
}
