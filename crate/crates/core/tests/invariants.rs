use approx::assert_abs_diff_eq;
use beamlab::beamformer::{mvdr_weights, NoiseCovariance};
use beamlab::dsp::{
    analyze_centered, stft, synthesize_centered, MultichannelWaveform, Spectrogram, StftConfig,
};
use beamlab::linalg::inner;
use beamlab::metrics::si_sdr;
use beamlab::rtf::{
    average_rtf, covariance_whitening_rtf, instantaneous_rtf, RtfEstimate, Weighting,
};
use nalgebra::DMatrix;
use ndarray::{Array1, Array2};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn noise(rng: &mut ChaCha8Rng, channels: usize, len: usize) -> MultichannelWaveform {
    let x = Array2::from_shape_fn((channels, len), |_| rng.sample::<f64, _>(StandardNormal));
    MultichannelWaveform::new(x, 8000).unwrap()
}

fn cnoise(rng: &mut ChaCha8Rng) -> Complex64 {
    Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

fn config() -> ProptestConfig {
    ProptestConfig::with_cases(32)
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn centered_stft_inverts_any_length(seed in any::<u64>(), channels in 1usize..5, len in 1usize..3000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = noise(&mut rng, channels, len);
        let cfg = StftConfig::default();
        let y = synthesize_centered(&analyze_centered(&x, &cfg).unwrap(), len).unwrap();
        let err = (x.samples() - y.samples()).iter().fold(0.0f64, |a, v| a.max(v.abs()));
        prop_assert!(err < 1e-10, "max error {err}");
    }

    #[test]
    fn stft_is_linear(seed in any::<u64>(), a in -10.0f64..10.0, len in 256usize..2000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = noise(&mut rng, 2, len);
        let y = noise(&mut rng, 2, len);
        let mix = MultichannelWaveform::new(x.samples() * a + y.samples(), 8000).unwrap();
        let cfg = StftConfig::default();
        let lhs = stft(&mix, &cfg).unwrap();
        let rhs = stft(&x, &cfg).unwrap().bins() * Complex64::new(a, 0.0) + stft(&y, &cfg).unwrap().bins();
        let err = (lhs.bins() - &rhs).iter().fold(0.0f64, |m, v| m.max(v.norm()));
        prop_assert!(err < 1e-9 * (1.0 + a.abs()), "max error {err}");
    }

    #[test]
    fn si_sdr_ignores_estimate_scale(seed in any::<u64>(), c in prop_oneof![-100.0f64..-0.01, 0.01f64..100.0]) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s: Vec<f64> = (0..800).map(|_| rng.sample(StandardNormal)).collect();
        let e: Vec<f64> = s.iter().map(|v| v + 0.5 * rng.sample::<f64, _>(StandardNormal)).collect();
        let scaled: Vec<f64> = e.iter().map(|v| c * v).collect();
        let a = si_sdr(&s, &e).unwrap();
        let b = si_sdr(&s, &scaled).unwrap();
        prop_assert!((a - b).abs() < 1e-9, "{a} vs {b}");
    }

    #[test]
    fn rtf_ignores_common_complex_gain(seed in any::<u64>(), re in 0.1f64..5.0, im in -5.0f64..5.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = noise(&mut rng, 3, 4000);
        let spec = stft(&x, &StftConfig::default()).unwrap();
        let g = Complex64::new(re, im);
        let scaled = Spectrogram::new(spec.bins() * g, *spec.config()).unwrap();
        let a = average_rtf(&instantaneous_rtf(&spec, 1, 40.0).unwrap(), Weighting::RefEnergy);
        let b = average_rtf(&instantaneous_rtf(&scaled, 1, 40.0).unwrap(), Weighting::RefEnergy);
        let err = (&a.values - &b.values).iter().fold(0.0f64, |m, v| m.max(v.norm()));
        prop_assert!(err < 1e-9, "max difference {err}");
        prop_assert!(a.values.column(1).iter().all(|v| (v - Complex64::new(1.0, 0.0)).norm() < 1e-12));
    }

    #[test]
    fn whitening_rtf_ignores_joint_scale(seed in any::<u64>(), c in 0.01f64..100.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cfg = StftConfig::default();
        let x = stft(&noise(&mut rng, 3, 4000), &cfg).unwrap();
        let n = stft(&noise(&mut rng, 3, 4000), &cfg).unwrap();
        let a = covariance_whitening_rtf(&x, &n, 0, 1e-4).unwrap();
        let xs = Spectrogram::new(x.bins() * Complex64::new(c, 0.0), cfg).unwrap();
        let ns = Spectrogram::new(n.bins() * Complex64::new(c, 0.0), cfg).unwrap();
        let b = covariance_whitening_rtf(&xs, &ns, 0, 1e-4).unwrap();
        for k in 0..a.num_bins() {
            if a.valid[k] && b.valid[k] {
                let d = a.vector(k).iter().zip(b.vector(k)).fold(0.0f64, |m, (p, q)| m.max((p - q).norm()));
                let size = a.vector(k).iter().fold(1.0f64, |m, p| m.max(p.norm()));
                prop_assert!(d < 1e-6 * size, "bin {k}: {d}");
            }
        }
    }

    #[test]
    fn mvdr_is_distortionless_and_minimum_power(seed in any::<u64>(), channels in 2usize..7) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let bins = 4;
        let mut values = Array2::from_shape_fn((bins, channels), |_| cnoise(&mut rng));
        for k in 0..bins {
            let r0 = values[[k, 0]];
            values.row_mut(k).mapv_inplace(|v| v / r0);
        }
        let r = RtfEstimate { values, valid: Array1::from_elem(bins, true), reference_mic: 0 };
        let mats: Vec<DMatrix<Complex64>> = (0..bins)
            .map(|_| {
                let a = DMatrix::from_fn(channels, 2 * channels, |_, _| cnoise(&mut rng));
                (&a * a.adjoint()).unscale((2 * channels) as f64)
            })
            .collect();
        let q = NoiseCovariance::from_matrices(&mats, 2 * channels).unwrap();
        let w = mvdr_weights(&r, &q, 0.0).unwrap();
        for (k, qk) in mats.iter().enumerate() {
            let g = w.weights.row(k).to_vec();
            let rk = r.vector(k);
            let resp = inner(&g, &rk);
            assert_abs_diff_eq!(resp.re, 1.0, epsilon = 1e-9);
            assert_abs_diff_eq!(resp.im, 0.0, epsilon = 1e-9);
            let power = |v: &[Complex64]| {
                let v = nalgebra::DVector::from_column_slice(v);
                (v.adjoint() * qk * &v)[(0, 0)].re
            };
            // Any other distortionless filter g + p with pᴴr = 0 has more output power.
            let raw: Vec<Complex64> = (0..channels).map(|_| cnoise(&mut rng)).collect();
            let proj = inner(&rk, &raw) / inner(&rk, &rk);
            let p: Vec<Complex64> = raw.iter().zip(&rk).map(|(a, b)| a - proj * b).collect();
            let other: Vec<Complex64> = g.iter().zip(&p).map(|(a, b)| a + 0.1 * b).collect();
            prop_assert!(power(&other) >= power(&g) * (1.0 - 1e-9));
        }
    }
}

#[test]
fn mvdr_identity_covariance_is_matched_filter() {
    let r = RtfEstimate {
        values: Array2::from_shape_vec(
            (1, 2),
            vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 1.0)],
        )
        .unwrap(),
        valid: Array1::from_elem(1, true),
        reference_mic: 0,
    };
    let w = mvdr_weights(&r, &NoiseCovariance::identity(1, 2), 0.0).unwrap();
    assert_abs_diff_eq!(w.weights[[0, 0]].re, 0.5, epsilon = 1e-12);
    assert_abs_diff_eq!(w.weights[[0, 1]].im, 0.5, epsilon = 1e-12);
}
