//! Helpers shared by the integration tests and the acceptance run.
#![allow(dead_code)]

use std::f64::consts::PI;
use std::path::Path;

use beamlab::scene::{make_corpus, SynthCorpusOptions};

/// STOI of [`stoi_pair`] `i` from the reference Python implementation
/// (pystoi 0.4).
pub const STOI_EXPECTED: [f64; 20] = [
    0.1785330193,
    0.2426650524,
    0.2674273217,
    0.2876481316,
    0.3696881404,
    0.3406641418,
    0.3745982205,
    0.4007866913,
    0.4481688452,
    0.4340107762,
    0.4651360581,
    0.4474267314,
    0.4501278879,
    0.5388729669,
    0.5062119959,
    0.4489917858,
    0.5472793051,
    0.4844150964,
    0.4640006450,
    0.5581735687,
];

pub fn lcg(seed: u64, n: usize) -> Vec<f64> {
    let mut s = seed;
    (0..n)
        .map(|_| {
            s = s
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            (s >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
        })
        .collect()
}

pub fn stoi_pair(i: usize) -> (Vec<f64>, Vec<f64>, u32) {
    let fs = [8000u32, 10000, 16000][i % 3];
    let n = 3 * fs as usize;
    let fi = i as f64;
    let mut x: Vec<f64> = (0..n)
        .map(|s| {
            let t = s as f64 / f64::from(fs);
            (0..3)
                .map(|h| {
                    let hf = h as f64;
                    let f = 300.0 + 450.0 * hf + 37.0 * fi;
                    let fm = 2.0 + 1.3 * hf + 0.2 * fi;
                    (1.0 / (hf + 1.0))
                        * (2.0 * PI * fm * t).sin().abs()
                        * (2.0 * PI * f * t + 0.5 * hf).sin()
                })
                .sum()
        })
        .collect();
    let gap0 = (1.2 * f64::from(fs)) as usize;
    let gap1 = (1.7 * f64::from(fs)) as usize;
    x[gap0..gap1].iter_mut().for_each(|v| *v = 0.0);
    let noise = lcg(1000 + i as u64, n);
    let snr_db = -10.0 + 50.0 * fi / 19.0;
    let p = x.iter().map(|v| v * v).sum::<f64>() / n as f64;
    let sigma = (p / 10f64.powf(snr_db / 10.0) * 3.0).sqrt();
    let mut y: Vec<f64> = x.iter().zip(&noise).map(|(a, b)| a + sigma * b).collect();
    if i % 4 == 1 {
        let taps = [0.5, 0.3, 0.2];
        y = (0..n)
            .map(|s| {
                taps.iter()
                    .enumerate()
                    .filter(|(d, _)| s >= *d)
                    .map(|(d, w)| w * y[s - d])
                    .sum()
            })
            .collect();
    }
    (x, y, fs)
}

/// Writes a small synthetic corpus under `dir` and returns its path.
pub fn corpus(dir: &Path, speakers: usize, seed: u64) -> std::path::PathBuf {
    let root = dir.join("corpus");
    let opts = SynthCorpusOptions {
        speakers,
        utterances_per_speaker: 3,
        seed,
        ..SynthCorpusOptions::default()
    };
    make_corpus(&root, &opts).unwrap();
    root
}
