//! Acceptance run: one PASS/FAIL line per criterion.
//!
//! Failing criteria are reported, not hidden; the process exits 0 so the
//! rest of the test suite keeps running. `BEAMLAB_ACCEPTANCE_STRICT=1`
//! turns any failure into exit code 1.

mod common;

use std::path::Path;
use std::time::{Duration, Instant};

use beamlab::beamformer::{mvdr_weights, MvdrOptions, NoiseCovariance};
use beamlab::dsp::{analyze_centered, stft, synthesize_centered, MultichannelWaveform, StftConfig};
use beamlab::linalg::hermitian_angle_deg;
use beamlab::metrics::{
    evaluate_dataset, si_sdr, stoi, write_report, MethodOutputs, ScoreReport, UNPROCESSED,
};
use beamlab::pipeline::{beamform_dataset, Method};
use beamlab::rir::{schroeder_t60, simulate_rir, ArrayGeometry, RirOptions, RoomSpec};
use beamlab::rtf::{
    average_rtf, covariance_whitening_rtf, instantaneous_rtf, rtf_from_rirs, RtfEstimate,
    Weighting, DEFAULT_FLOOR_DB, DEFAULT_WHITENING_LOADING,
};
use beamlab::scene::{
    generate_dataset, pink_noise, render_scene, synth_utterance, Dataset, DatasetOptions,
    DrySignals, Preset, RenderOptions, ScenarioConfig, SceneManifest, SourceRole, Voice,
};
use ndarray::{Array1, Array2, Array3};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

const FS: u32 = 8000;
const BASELINE_SEED: u64 = 1;
const SAME_DOA_SEED: u64 = 1;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn cgauss(rng: &mut ChaCha8Rng) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) / 2f64.sqrt()
}

fn quad(g: &[Complex64], q: &Array3<Complex64>, k: usize) -> f64 {
    let j = g.len();
    let mut acc = Complex64::default();
    for a in 0..j {
        for b in 0..j {
            acc += g[a].conj() * q[[k, a, b]] * g[b];
        }
    }
    acc.re
}

fn mvdr_correctness() -> Outcome {
    let (bins, j, competitors) = (100, 4, 1000);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut r = Array2::<Complex64>::zeros((bins, j));
    let mut q = Array3::<Complex64>::zeros((bins, j, j));
    for k in 0..bins {
        for c in 0..j {
            r[[k, c]] = if c == 0 {
                Complex64::new(1.0, 0.0)
            } else {
                cgauss(&mut rng)
            };
        }
        // A Aᴴ with a random spread of eigenvalues.
        let cols = j + rng.random_range(0..6);
        let a: Vec<Complex64> = (0..j * cols)
            .map(|_| cgauss(&mut rng) * 10f64.powf(rng.random_range(-1.5..1.5)))
            .collect();
        for x in 0..j {
            for y in 0..j {
                let mut s = Complex64::default();
                for c in 0..cols {
                    s += a[x * cols + c] * a[y * cols + c].conj();
                }
                q[[k, x, y]] = s / cols as f64;
            }
        }
    }
    let rtf = RtfEstimate {
        values: r.clone(),
        valid: Array1::from_elem(bins, true),
        reference_mic: 0,
    };
    let cov = NoiseCovariance {
        matrices: q.clone(),
        frame_count: 0,
    };
    let w = match mvdr_weights(&rtf, &cov, 0.0) {
        Ok(w) => w,
        Err(e) => return outcome(false, format!("weights failed: {e}")),
    };
    let mut worst_gain = 0.0f64;
    let mut violations = 0usize;
    for k in 0..bins {
        let g: Vec<Complex64> = w.weights.row(k).to_vec();
        let rk: Vec<Complex64> = r.row(k).to_vec();
        let resp: Complex64 = g.iter().zip(&rk).map(|(a, b)| a.conj() * b).sum();
        worst_gain = worst_gain.max((resp - 1.0).norm());
        let best = quad(&g, &q, k);
        let rr: f64 = rk.iter().map(|v| v.norm_sqr()).sum();
        let gnorm = g.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        for _ in 0..competitors {
            // g + z with rᴴz = 0 keeps the response at one.
            let v: Vec<Complex64> = (0..j).map(|_| cgauss(&mut rng)).collect();
            let proj: Complex64 = rk
                .iter()
                .zip(&v)
                .map(|(a, b)| a.conj() * b)
                .sum::<Complex64>()
                / rr;
            let scale = gnorm * 10f64.powf(rng.random_range(-4.0..1.0));
            let z: Vec<Complex64> = v
                .iter()
                .zip(&rk)
                .map(|(vi, ri)| (vi - ri * proj) * scale)
                .collect();
            let alt: Vec<Complex64> = g.iter().zip(&z).map(|(a, b)| a + b).collect();
            if quad(&alt, &q, k) < best * (1.0 - 1e-12) {
                violations += 1;
            }
        }
    }
    outcome(
        worst_gain < 1e-9 && violations == 0,
        format!(
            "max |g^H r - 1| = {worst_gain:.1e}, {violations} of {} competitors beat the MVDR cost",
            bins * competitors
        ),
    )
}

fn stft_round_trip() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let cfg = StftConfig::default();
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let j = rng.random_range(1..=6);
        let n = rng.random_range(300..20_000);
        let chans: Vec<Vec<f64>> = (0..j)
            .map(|_| {
                (0..n)
                    .map(|_| rng.sample::<f64, _>(StandardNormal))
                    .collect()
            })
            .collect();
        let x = MultichannelWaveform::from_channels(&chans, FS).unwrap();
        let y = synthesize_centered(&analyze_centered(&x, &cfg).unwrap(), n).unwrap();
        let err = (x.samples() - y.samples()).mapv(|v| v * v).sum().sqrt();
        let norm = x.samples().mapv(|v| v * v).sum().sqrt();
        worst = worst.max(err / norm);
    }
    outcome(worst < 1e-10, format!("max relative error {worst:.1e}"))
}

/// Sub-sample peak of a band-limited pulse by sinc interpolation.
fn pulse_delay(h: &[f64]) -> f64 {
    let peak = h
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
        .map_or(0, |(i, _)| i);
    let interp = |tau: f64| -> f64 {
        h.iter()
            .enumerate()
            .map(|(n, v)| {
                let x = std::f64::consts::PI * (tau - n as f64);
                if x.abs() < 1e-12 {
                    *v
                } else {
                    v * x.sin() / x
                }
            })
            .sum()
    };
    (-1000..=1000)
        .map(|i| peak as f64 + i as f64 * 1e-3)
        .max_by(|a, b| interp(*a).abs().total_cmp(&interp(*b).abs()))
        .unwrap_or(peak as f64)
}

fn scenario_scene(seed: u64) -> SceneManifest {
    ScenarioConfig::default()
        .sample(seed, None)
        .expect("scene geometry")
}

fn rir_validity() -> Outcome {
    let mut worst_delay = 0.0f64;
    let mut stray = 0.0f64;
    let mut t60_errors = Vec::new();
    for s in 0..10u64 {
        let m = scenario_scene(300 + s);
        let src = m.placement(SourceRole::Desired).unwrap().position_m;
        let anechoic = RirOptions {
            sample_rate_hz: FS,
            anechoic: true,
            max_order: None,
        };
        let set = simulate_rir(&m.room, &m.array, &src, &anechoic).unwrap();
        for (j, mic) in m.array.mic_positions_m.iter().enumerate() {
            let h = set.rirs.row(j).to_vec();
            let d: f64 = mic
                .iter()
                .zip(&src)
                .map(|(a, b)| (a - b).powi(2))
                .sum::<f64>()
                .sqrt();
            let expected = d / m.room.speed_of_sound_mps * f64::from(FS);
            worst_delay = worst_delay.max((pulse_delay(&h) - expected).abs());
            // Everything beyond the 8 ms pulse support must be silent.
            let outside: f64 = h
                .iter()
                .enumerate()
                .filter(|(i, _)| (*i as f64 - expected).abs() > 32.0)
                .map(|(_, v)| v * v)
                .sum();
            stray = stray.max(outside);
        }
        let reverb = RirOptions {
            sample_rate_hz: FS,
            ..RirOptions::default()
        };
        let set = simulate_rir(&m.room, &m.array, &src, &reverb).unwrap();
        let est = schroeder_t60(&set.rirs.row(0).to_vec(), FS, -5.0, -25.0).unwrap_or(f64::NAN);
        t60_errors.push((est - m.room.t60_s) / m.room.t60_s);
    }
    let room = RoomSpec::new([6.0, 5.0, 3.0], 0.5);
    let array = ArrayGeometry::uniform_linear([3.0, 2.5, 1.5], 4, 0.08, 0.0);
    let set = simulate_rir(&room, &array, &[1.5, 1.0, 1.4], &RirOptions::default()).unwrap();
    let reference = schroeder_t60(&set.rirs.row(0).to_vec(), FS, -5.0, -25.0).unwrap_or(f64::NAN);
    let worst_t60 = t60_errors.iter().fold(0.0f64, |a, e| a.max(e.abs()));
    let pass = worst_delay <= 0.5
        && stray == 0.0
        && t60_errors.iter().all(|e| e.abs() <= 0.2)
        && (reference - 0.5).abs() <= 0.1;
    let errs: Vec<String> = t60_errors
        .iter()
        .map(|e| format!("{:+.0}%", 100.0 * e))
        .collect();
    outcome(
        pass,
        format!(
            "anechoic delay error {worst_delay:.3} samples, energy off the pulse {stray:.1e}; \
             T60 errors [{}] (worst {:.0}%); 6x5x3 m room at 0.5 s measures {reference:.3} s",
            errs.join(" "),
            100.0 * worst_t60
        ),
    )
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        return f64::NAN;
    }
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn band_angles(est: &RtfEstimate, truth: &RtfEstimate, cfg: &StftConfig) -> Vec<f64> {
    (0..est.num_bins())
        .filter(|&k| {
            let f = cfg.bin_frequency_hz(k);
            (300.0..=3500.0).contains(&f) && est.valid[k] && truth.valid[k]
        })
        .map(|k| hermitian_angle_deg(&est.vector(k), &truth.vector(k)))
        .collect()
}

fn rtf_estimators() -> Outcome {
    let cfg = StftConfig::default();
    let mut inst_angles = Vec::new();
    let mut cw_angles = Vec::new();
    for s in 0..20u64 {
        let mut m = scenario_scene(500 + s);
        let mut rng = ChaCha8Rng::seed_from_u64(500 + s);
        let voice = Voice::random(&mut rng);
        let speech = synth_utterance(&voice, 4.0, FS, &mut rng);
        let enrollment = synth_utterance(&voice, 4.0, FS, &mut rng);
        let src = m.placement(SourceRole::Desired).unwrap().position_m;
        let rirs = simulate_rir(
            &m.room,
            &m.array,
            &src,
            &RirOptions {
                sample_rate_hz: FS,
                ..RirOptions::default()
            },
        )
        .unwrap();
        let truth = rtf_from_rirs(&rirs, cfg.frame_len, 0).unwrap();

        // Noiseless enrollment, averaged instantaneous RTF.
        let clean = DrySignals {
            desired: speech.clone(),
            enrollment,
            interference: None,
            directional_noise: None,
        };
        let quiet = RenderOptions {
            sensor_noise: false,
            aux_segment_s: 2.0,
        };
        let audio = render_scene(&m, &clean, &quiet).unwrap();
        let inst = instantaneous_rtf(&stft(&audio.enrollment, &cfg).unwrap(), 0, DEFAULT_FLOOR_DB)
            .unwrap();
        inst_angles.extend(band_angles(
            &average_rtf(&inst, Weighting::RefEnergy),
            &truth,
            &cfg,
        ));

        // 20 dB SNR: directional and sensor noise 23 dB each.
        m.snr_directional_db = 23.0;
        m.snr_sensor_db = 23.0;
        let noisy = DrySignals {
            directional_noise: Some(pink_noise(speech.len() + 2 * FS as usize, &mut rng)),
            ..clean
        };
        let audio = render_scene(
            &m,
            &noisy,
            &RenderOptions {
                sensor_noise: true,
                aux_segment_s: 2.0,
            },
        )
        .unwrap();
        let x = stft(&audio.aux.desired_plus_noise, &cfg).unwrap();
        let n = stft(&audio.aux.noise_only, &cfg).unwrap();
        match covariance_whitening_rtf(&x, &n, 0, DEFAULT_WHITENING_LOADING) {
            Ok(est) => cw_angles.extend(band_angles(&est, &truth, &cfg)),
            Err(e) => {
                return outcome(
                    false,
                    format!("scene {s}: covariance whitening failed: {e}"),
                )
            }
        }
    }
    let inst = median(inst_angles);
    let cw = median(cw_angles);
    outcome(
        inst < 2.0 && cw < 5.0,
        format!("median angle to RIR ground truth: averaged instantaneous {inst:.2} deg (< 2), covariance whitening {cw:.2} deg (< 5)"),
    )
}

fn si_sdr_anchors() -> Outcome {
    let two = si_sdr(&[1.0, 0.0], &[1.0, 1.0]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let mut worst_scale = 0.0f64;
    let mut worst_orth = 0.0f64;
    for _ in 0..20 {
        let n = rng.random_range(100..5000);
        let s: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let e: Vec<f64> = s
            .iter()
            .map(|v| v + 0.3 * rng.sample::<f64, _>(StandardNormal))
            .collect();
        let base = si_sdr(&s, &e).unwrap();
        for c in [1e-3, 0.5, -2.0, 1e3] {
            let scaled: Vec<f64> = e.iter().map(|v| c * v).collect();
            worst_scale = worst_scale.max((si_sdr(&s, &scaled).unwrap() - base).abs());
        }
        let mut noise: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let ss: f64 = s.iter().map(|v| v * v).sum();
        let proj = noise.iter().zip(&s).map(|(a, b)| a * b).sum::<f64>() / ss;
        noise.iter_mut().zip(&s).for_each(|(a, b)| *a -= proj * b);
        let nn: f64 = noise.iter().map(|v| v * v).sum();
        let est: Vec<f64> = s.iter().zip(&noise).map(|(a, b)| a + b).collect();
        let closed = 10.0 * (ss / nn).log10();
        worst_orth = worst_orth.max((si_sdr(&s, &est).unwrap() - closed).abs());
    }
    outcome(
        two == 0.0 && worst_scale < 1e-9 && worst_orth < 1e-9,
        format!("two-sample {two} dB, scale deviation {worst_scale:.1e} dB, orthogonal-noise deviation {worst_orth:.1e} dB"),
    )
}

fn stoi_cross_check() -> Outcome {
    let worst = (0..20)
        .map(|i| {
            let (x, y, fs) = common::stoi_pair(i);
            (stoi(&x, &y, fs).unwrap() - common::STOI_EXPECTED[i]).abs()
        })
        .fold(0.0f64, f64::max);
    outcome(
        worst <= 0.01,
        format!("max deviation from reference {worst:.1e} over 20 pairs"),
    )
}

/// Corpus, dataset, both beamformers and the report under `root`.
fn pipeline(root: &Path, n_scenes: usize, seed: u64, preset: Preset) -> ScoreReport {
    let corpus = common::corpus(root, 8, seed);
    let opts = DatasetOptions {
        n_scenes,
        seed,
        preset,
        ..DatasetOptions::default()
    };
    let data = root.join("dataset");
    let index = generate_dataset(&opts, &corpus, None, &data).unwrap();
    assert!(
        index.failed.is_empty(),
        "scene failures: {:?}",
        index.failed
    );
    let dataset = Dataset::open(&data).unwrap();
    let out = root.join("enhanced");
    let mut methods = Vec::new();
    for m in [Method::OracleMvdr, Method::EstimatedMvdr] {
        let batch = beamform_dataset(&dataset, m, &MvdrOptions::default(), &out).unwrap();
        assert!(batch.failed.is_empty(), "{:?}", batch.failed);
        methods.push(MethodOutputs::from_dir(&out.join(m.label())));
    }
    let report = evaluate_dataset(&dataset, &methods).unwrap();
    write_report(&report, &root.join("report")).unwrap();
    report
}

fn mean_sdr(report: &ScoreReport, method: &str) -> f64 {
    report
        .summary(method)
        .map_or(f64::NAN, |s| s.si_sdr_db.mean)
}

fn baseline_ordering() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let report = pipeline(dir.path(), 50, BASELINE_SEED, Preset::Random);
    let u = mean_sdr(&report, UNPROCESSED);
    let o = mean_sdr(&report, Method::OracleMvdr.label());
    let e = mean_sdr(&report, Method::EstimatedMvdr.label());
    let checks = [
        ("oracle > estimated", o > e),
        ("estimated > unprocessed", e > u),
        ("unprocessed within 3 dB of -2.6", (u + 2.6).abs() <= 3.0),
        ("oracle >= unprocessed + 4", o - u >= 4.0),
    ];
    let failed: Vec<&str> = checks.iter().filter(|c| !c.1).map(|c| c.0).collect();
    outcome(
        failed.is_empty(),
        format!(
            "mean SI-SDR unprocessed {u:.2}, oracle {o:.2}, estimated {e:.2} dB; failed: [{}]",
            failed.join(", ")
        ),
    )
}

fn same_doa() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let report = pipeline(dir.path(), 20, SAME_DOA_SEED, Preset::SameDoa);
    let u = mean_sdr(&report, UNPROCESSED);
    let o = mean_sdr(&report, Method::OracleMvdr.label());
    let e = mean_sdr(&report, Method::EstimatedMvdr.label());
    outcome(
        o - u >= 4.0,
        format!("oracle - unprocessed = {:.2} dB (needs 4; unprocessed {u:.2}, oracle {o:.2}, estimated {e:.2})", o - u),
    )
}

fn determinism() -> Outcome {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    pipeline(a.path(), 4, 77, Preset::Random);
    pipeline(b.path(), 4, 77, Preset::Random);
    let csv_a = std::fs::read(a.path().join("report/scores.csv")).unwrap();
    let csv_b = std::fs::read(b.path().join("report/scores.csv")).unwrap();
    outcome(
        csv_a == csv_b && !csv_a.is_empty(),
        format!(
            "scores.csv {} bytes, identical: {}",
            csv_a.len(),
            csv_a == csv_b
        ),
    )
}

type Criterion = (&'static str, Duration, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 9] = [
        (
            "mvdr-correctness",
            Duration::from_secs(10),
            mvdr_correctness,
        ),
        ("stft-round-trip", Duration::from_secs(5), stft_round_trip),
        ("rir-validity", Duration::from_secs(60), rir_validity),
        ("rtf-estimators", Duration::from_secs(120), rtf_estimators),
        ("si-sdr-anchors", Duration::from_secs(5), si_sdr_anchors),
        (
            "stoi-cross-check",
            Duration::from_secs(30),
            stoi_cross_check,
        ),
        (
            "baseline-ordering",
            Duration::from_secs(600),
            baseline_ordering,
        ),
        ("same-doa-oracle-gain", Duration::from_secs(600), same_doa),
        ("determinism", Duration::from_secs(300), determinism),
    ];
    let mut passed = 0;
    for (name, budget, check) in criteria {
        let start = Instant::now();
        let out = check();
        let took = start.elapsed();
        let ok = out.pass && took <= budget;
        passed += usize::from(ok);
        println!(
            "{} {name}: {} [{:.1} s, budget {} s]",
            if ok { "PASS" } else { "FAIL" },
            out.detail,
            took.as_secs_f64(),
            budget.as_secs()
        );
    }
    println!("acceptance: {passed}/{} criteria passed", criteria.len());
    let strict = std::env::var("BEAMLAB_ACCEPTANCE_STRICT").is_ok_and(|v| v == "1");
    if strict && passed < criteria.len() {
        std::process::exit(1);
    }
}
