use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

/// Spectral tilt of a synthetic stationary noise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseColor {
    White,
    /// −3 dB per octave.
    Pink,
    /// −6 dB per octave.
    Brown,
}

impl NoiseColor {
    fn exponent(self) -> f64 {
        match self {
            NoiseColor::White => 0.0,
            NoiseColor::Pink => 0.5,
            NoiseColor::Brown => 1.0,
        }
    }
}

/// Unit-power Gaussian noise with a `1/f^γ` amplitude tilt, shaped in the
/// frequency domain over the full signal (DC removed).
pub fn colored_noise<R: Rng + ?Sized>(len: usize, color: NoiseColor, rng: &mut R) -> Vec<f64> {
    if len == 0 {
        return Vec::new();
    }
    let mut buf: Vec<Complex64> = (0..len)
        .map(|_| Complex64::new(rng.sample(StandardNormal), 0.0))
        .collect();
    let mut planner = FftPlanner::<f64>::new();
    planner.plan_fft_forward(len).process(&mut buf);
    let gamma = color.exponent();
    buf[0] = Complex64::default();
    for (k, b) in buf.iter_mut().enumerate().skip(1) {
        // Bins above Nyquist mirror the lower half.
        let f = k.min(len - k) as f64;
        *b *= f.powf(-gamma);
    }
    planner.plan_fft_inverse(len).process(&mut buf);
    let mut out: Vec<f64> = buf.iter().map(|c| c.re).collect();
    let power = out.iter().map(|v| v * v).sum::<f64>() / len as f64;
    if power > 0.0 {
        let g = power.sqrt().recip();
        out.iter_mut().for_each(|v| *v *= g);
    }
    out
}

pub fn pink_noise<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Vec<f64> {
    colored_noise(len, NoiseColor::Pink, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsp::{stft, MultichannelWaveform, StftConfig};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Welch PSD (Hann 256, 50%) of a mono signal.
    fn welch(x: &[f64]) -> Vec<f64> {
        let cfg = StftConfig::default();
        let s = stft(&MultichannelWaveform::mono(x.to_vec(), 8000).unwrap(), &cfg).unwrap();
        (0..s.num_bins())
            .map(|k| s.bin_frames(k).iter().map(|c| c.norm_sqr()).sum::<f64>() / s.frames() as f64)
            .collect()
    }

    fn slope_db_per_octave(x: &[f64]) -> f64 {
        let psd = welch(x);
        let cfg = StftConfig::default();
        let pts: Vec<(f64, f64)> = (0..psd.len())
            .map(|k| (cfg.bin_frequency_hz(k), psd[k]))
            .filter(|(f, _)| (100.0..=3000.0).contains(f))
            .map(|(f, p)| (f.log2(), 10.0 * p.log10()))
            .collect();
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        sxy / sxx
    }

    #[test]
    fn pink_slope_is_minus_three_db_per_octave() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let x = pink_noise(8000 * 20, &mut rng);
        let slope = slope_db_per_octave(&x);
        assert!((slope + 3.0).abs() < 0.5, "slope {slope}");
    }

    #[test]
    fn colors_are_unit_power_and_ordered() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let white = colored_noise(8000 * 10, NoiseColor::White, &mut rng);
        let brown = colored_noise(8000 * 10, NoiseColor::Brown, &mut rng);
        for x in [&white, &brown] {
            let p = x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64;
            assert!((p - 1.0).abs() < 1e-9);
        }
        assert!(slope_db_per_octave(&white).abs() < 0.5);
        assert!((slope_db_per_octave(&brown) + 6.0).abs() < 0.7);
    }

    #[test]
    fn deterministic_for_a_seed() {
        let a = pink_noise(1000, &mut ChaCha8Rng::seed_from_u64(1));
        let b = pink_noise(1000, &mut ChaCha8Rng::seed_from_u64(1));
        assert_eq!(a, b);
    }
}
