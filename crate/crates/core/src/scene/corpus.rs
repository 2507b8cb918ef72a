//! Dry speech and noise material.
//!
//! A corpus is a directory of speaker subdirectories, each holding mono WAV
//! utterances (searched recursively). Speakers with fewer than two
//! utterances cannot supply both a mixed and an enrollment signal and are
//! skipped.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use log::warn;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::noise::{colored_noise, NoiseColor};
use crate::dsp::{read_wav, resample, write_wav, MultichannelWaveform, WavEncoding};
use crate::error::{Error, IoContext, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Speaker {
    pub id: String,
    /// Sorted utterance paths.
    pub utterances: Vec<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Corpus {
    pub root: PathBuf,
    /// Eligible speakers sorted by id.
    pub speakers: Vec<Speaker>,
}

fn is_wav(p: &Path) -> bool {
    p.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("wav"))
}

fn sorted_entries(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for entry in std::fs::read_dir(dir).at(dir)? {
        out.push(entry.at(dir)?.path());
    }
    out.sort();
    Ok(out)
}

fn collect_wavs(dir: &Path, out: &mut Vec<PathBuf>) -> Result<()> {
    for p in sorted_entries(dir)? {
        if p.is_dir() {
            collect_wavs(&p, out)?;
        } else if is_wav(&p) {
            out.push(p);
        }
    }
    Ok(())
}

/// Reads channel 0 of a WAV file, resampling to `sample_rate_hz` if needed.
pub fn load_mono(path: &Path, sample_rate_hz: u32) -> Result<Vec<f64>> {
    let wav = read_wav(path, None)?;
    let x: Vec<f64> = wav.channel(0).to_vec();
    if wav.sample_rate_hz() == sample_rate_hz {
        Ok(x)
    } else {
        Ok(resample(&x, wav.sample_rate_hz(), sample_rate_hz))
    }
}

impl Corpus {
    pub fn load(root: &Path) -> Result<Self> {
        if !root.is_dir() {
            return Err(Error::EmptyCorpus(root.to_path_buf()));
        }
        let mut speakers = Vec::new();
        let mut seen = 0;
        for dir in sorted_entries(root)?.into_iter().filter(|p| p.is_dir()) {
            let mut utterances = Vec::new();
            collect_wavs(&dir, &mut utterances)?;
            let id = dir
                .file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_default();
            if utterances.is_empty() {
                continue;
            }
            seen += 1;
            if utterances.len() < 2 {
                warn!("skipping speaker {id}: only one utterance");
                continue;
            }
            speakers.push(Speaker { id, utterances });
        }
        if seen == 0 {
            return Err(Error::EmptyCorpus(root.to_path_buf()));
        }
        if speakers.len() < 2 {
            return Err(Error::NotEnoughSpeakers(speakers.len()));
        }
        Ok(Self {
            root: root.to_path_buf(),
            speakers,
        })
    }

    /// Path relative to the corpus root, for manifests.
    pub fn relative(&self, path: &Path) -> String {
        path.strip_prefix(&self.root)
            .unwrap_or(path)
            .to_string_lossy()
            .replace('\\', "/")
    }
}

/// Stationary noise recordings, or synthetic pink noise when none are given.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct NoiseBank {
    pub root: Option<PathBuf>,
    pub files: Vec<PathBuf>,
}

impl NoiseBank {
    pub fn load(dir: Option<&Path>) -> Result<Self> {
        let Some(dir) = dir else {
            return Ok(Self::default());
        };
        let mut files = Vec::new();
        collect_wavs(dir, &mut files)?;
        if files.is_empty() {
            warn!(
                "no WAV files in {}, using synthetic pink noise",
                dir.display()
            );
        }
        Ok(Self {
            root: Some(dir.to_path_buf()),
            files,
        })
    }

    pub fn is_synthetic(&self) -> bool {
        self.files.is_empty()
    }
}

/// Parameters of one synthetic talker.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Voice {
    pub f0_hz: f64,
    /// Vocal-tract scaling of the formant frequencies.
    pub formant_scale: f64,
    pub breathiness: f64,
}

impl Voice {
    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        Self {
            f0_hz: rng.random_range(85.0..230.0),
            formant_scale: rng.random_range(0.85..1.2),
            breathiness: rng.random_range(0.01..0.06),
        }
    }
}

/// F1, F2, F3 of a few vowels.
const VOWELS: [[f64; 3]; 6] = [
    [730.0, 1090.0, 2440.0],
    [270.0, 2290.0, 3010.0],
    [530.0, 1840.0, 2480.0],
    [570.0, 840.0, 2410.0],
    [300.0, 870.0, 2240.0],
    [660.0, 1720.0, 2410.0],
];

/// Two-pole resonator with unit gain at its centre frequency.
struct Resonator {
    a1: f64,
    a2: f64,
    g: f64,
    y1: f64,
    y2: f64,
}

impl Resonator {
    fn new(freq: f64, bw: f64, fs: f64) -> Self {
        let r = (-PI * bw / fs).exp();
        let th = 2.0 * PI * freq / fs;
        Self {
            a1: 2.0 * r * th.cos(),
            a2: -r * r,
            g: (1.0 - r) * (1.0 - 2.0 * r * (2.0 * th).cos() + r * r).sqrt(),
            y1: 0.0,
            y2: 0.0,
        }
    }

    fn tick(&mut self, x: f64) -> f64 {
        let y = self.g * x + self.a1 * self.y1 + self.a2 * self.y2;
        self.y2 = self.y1;
        self.y1 = y;
        y
    }
}

fn envelope(n: usize, len: usize) -> f64 {
    let ramp = (len / 5).max(1);
    let a = |i: usize| 0.5 - 0.5 * (PI * i as f64 / ramp as f64).cos();
    if n < ramp {
        a(n)
    } else if n + ramp > len {
        a(len - n)
    } else {
        1.0
    }
}

/// First-order DC blocker with a 40 Hz corner.
fn dc_block(x: &mut [f64], fs: f64) {
    let r = (-2.0 * PI * 40.0 / fs).exp();
    let (mut x1, mut y1) = (0.0, 0.0);
    for v in x.iter_mut() {
        let y = *v - x1 + r * y1;
        x1 = *v;
        y1 = y;
        *v = y;
    }
}

/// Speech-like signal: voiced syllables (glottal pulse train through three
/// formant resonators), fricative bursts and pauses, DC-blocked and
/// peak-normalized to 0.5.
pub fn synth_utterance<R: Rng + ?Sized>(
    voice: &Voice,
    duration_s: f64,
    sample_rate_hz: u32,
    rng: &mut R,
) -> Vec<f64> {
    let fs = f64::from(sample_rate_hz);
    let total = (duration_s * fs).round() as usize;
    let mut out = Vec::with_capacity(total);
    let nyq = 0.45 * fs;
    while out.len() < total {
        let kind: f64 = rng.random();
        let len = ((rng.random_range(0.1..0.32)) * fs) as usize;
        if kind < 0.12 {
            let gap = ((rng.random_range(0.05..0.3)) * fs) as usize;
            out.extend(std::iter::repeat_n(0.0, gap));
            continue;
        }
        if kind < 0.3 {
            let centre = rng.random_range(2500.0..3800.0f64).min(nyq);
            let mut res = Resonator::new(centre, 900.0, fs);
            let amp = rng.random_range(0.05..0.2);
            for n in 0..len {
                let w: f64 = rng.sample(StandardNormal);
                out.push(amp * envelope(n, len) * res.tick(w));
            }
            continue;
        }
        let vowel = VOWELS[rng.random_range(0..VOWELS.len())];
        let mut formants: Vec<Resonator> = vowel
            .iter()
            .zip([80.0, 100.0, 140.0])
            .map(|(f, bw)| Resonator::new((f * voice.formant_scale).min(nyq), bw, fs))
            .collect();
        let amp = rng.random_range(0.4..1.0);
        let glide = rng.random_range(-0.15..0.15);
        let mut phase = 0.0;
        let mut tilt = 0.0;
        for n in 0..len {
            let t = n as f64 / len as f64;
            let f0 = voice.f0_hz * (1.0 + glide * t) * (1.0 + 0.01 * rng.random_range(-1.0..1.0));
            phase += f0 / fs;
            let mut src = 0.0;
            if phase >= 1.0 {
                phase -= 1.0;
                src = 1.0;
            }
            let w: f64 = rng.sample(StandardNormal);
            src += voice.breathiness * w;
            // Glottal spectral tilt.
            tilt = 0.9 * tilt + src;
            let y: f64 = formants.iter_mut().map(|r| r.tick(tilt)).sum();
            out.push(amp * envelope(n, len) * y);
        }
    }
    out.truncate(total);
    dc_block(&mut out, fs);
    let peak = out.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if peak > 0.0 {
        out.iter_mut().for_each(|v| *v *= 0.5 / peak);
    }
    out
}

/// Options for [`make_corpus`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthCorpusOptions {
    pub speakers: usize,
    pub utterances_per_speaker: usize,
    pub duration_range_s: [f64; 2],
    pub sample_rate_hz: u32,
    pub seed: u64,
}

impl Default for SynthCorpusOptions {
    fn default() -> Self {
        Self {
            speakers: 8,
            utterances_per_speaker: 4,
            duration_range_s: [3.0, 6.0],
            sample_rate_hz: 16_000,
            seed: 0,
        }
    }
}

/// Writes a synthetic corpus `<dir>/spkNN/uttNN.wav` (float32).
pub fn make_corpus(dir: &Path, opts: &SynthCorpusOptions) -> Result<Vec<PathBuf>> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut written = Vec::new();
    for s in 0..opts.speakers {
        let voice = Voice::random(&mut rng);
        let spk_dir = dir.join(format!("spk{s:02}"));
        std::fs::create_dir_all(&spk_dir).at(&spk_dir)?;
        for u in 0..opts.utterances_per_speaker {
            let [lo, hi] = opts.duration_range_s;
            let dur = if hi > lo {
                rng.random_range(lo..hi)
            } else {
                lo
            };
            let x = synth_utterance(&voice, dur, opts.sample_rate_hz, &mut rng);
            let path = spk_dir.join(format!("utt{u:02}.wav"));
            write_wav(
                &path,
                &MultichannelWaveform::mono(x, opts.sample_rate_hz)?,
                WavEncoding::Float32,
            )?;
            written.push(path);
        }
    }
    Ok(written)
}

/// Writes stationary white, pink and brown noise recordings to `dir`.
pub fn make_noise_dir(
    dir: &Path,
    duration_s: f64,
    sample_rate_hz: u32,
    seed: u64,
) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).at(dir)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let len = (duration_s * f64::from(sample_rate_hz)).round() as usize;
    let mut written = Vec::new();
    for (name, color) in [
        ("white", NoiseColor::White),
        ("pink", NoiseColor::Pink),
        ("brown", NoiseColor::Brown),
    ] {
        let x: Vec<f64> = colored_noise(len, color, &mut rng)
            .into_iter()
            .map(|v| 0.1 * v)
            .collect();
        let path = dir.join(format!("{name}.wav"));
        write_wav(
            &path,
            &MultichannelWaveform::mono(x, sample_rate_hz)?,
            WavEncoding::Float32,
        )?;
        written.push(path);
    }
    Ok(written)
}
