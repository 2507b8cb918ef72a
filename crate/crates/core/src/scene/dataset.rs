use std::path::{Path, PathBuf};

use log::{info, warn};
use rand::seq::index::sample;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::corpus::{load_mono, Corpus, NoiseBank};
use super::noise::pink_noise;
use super::render::{render_scene, DrySignals, RenderOptions, SceneAudio};
use super::sampler::{
    scene_rng, stream, AuxFiles, Preset, SamePlacementConstraint, ScenarioConfig, SceneFiles,
    SceneManifest, SourceMaterial, SCENE_SCHEMA,
};
use crate::dsp::{write_wav, MultichannelWaveform, WavEncoding};
use crate::error::{Error, IoContext, Result};

pub const DATASET_SCHEMA: &str = "beamlab.dataset/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DatasetOptions {
    pub n_scenes: usize,
    pub seed: u64,
    pub preset: Preset,
    pub scenario: ScenarioConfig,
    pub same_doa: SamePlacementConstraint,
    /// Mixture length is drawn uniformly from this range (capped by the
    /// desired utterance).
    pub duration_range_s: [f64; 2],
    pub aux_segment_s: f64,
    pub sensor_noise: bool,
}

impl Default for DatasetOptions {
    fn default() -> Self {
        Self {
            n_scenes: 10,
            seed: 0,
            preset: Preset::Random,
            scenario: ScenarioConfig::default(),
            same_doa: SamePlacementConstraint::default(),
            duration_range_s: [3.0, 6.0],
            aux_segment_s: 2.0,
            sensor_noise: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SceneEntry {
    pub scene_id: String,
    /// Manifest path relative to the dataset root.
    pub manifest: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetIndex {
    pub schema: String,
    pub seed: u64,
    pub preset: Preset,
    pub sample_rate_hz: u32,
    pub reference_mic: usize,
    pub options: DatasetOptions,
    pub scenes: Vec<SceneEntry>,
    /// Scenes that failed to generate, with the reason.
    #[serde(default)]
    pub failed: Vec<(String, String)>,
}

pub const INDEX_FILE: &str = "index.json";

pub(crate) fn check_schema(path: &Path, found: &str, expected: &str) -> Result<()> {
    if found != expected {
        return Err(Error::SchemaMismatch {
            path: path.to_path_buf(),
            expected: expected.into(),
            found: found.into(),
        });
    }
    Ok(())
}

pub(crate) fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).at(path)?;
    serde_json::from_str(&text).at(path)
}

pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).at(path)?;
    text.push('\n');
    std::fs::write(path, text).at(path)
}

/// A dataset on disk: its index and root directory.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub root: PathBuf,
    pub index: DatasetIndex,
}

impl Dataset {
    /// Opens `path`, either the dataset directory or its index file.
    pub fn open(path: &Path) -> Result<Self> {
        let (root, index_path) = if path.is_dir() {
            (path.to_path_buf(), path.join(INDEX_FILE))
        } else {
            (
                path.parent().map(Path::to_path_buf).unwrap_or_default(),
                path.to_path_buf(),
            )
        };
        let raw: serde_json::Value = read_json(&index_path)?;
        let schema = raw.get("schema").and_then(|v| v.as_str()).unwrap_or("");
        check_schema(&index_path, schema, DATASET_SCHEMA)?;
        let index = serde_json::from_value(raw).at(&index_path)?;
        Ok(Self { root, index })
    }

    pub fn manifest(&self, entry: &SceneEntry) -> Result<SceneManifest> {
        let path = self.root.join(&entry.manifest);
        let raw: serde_json::Value = read_json(&path)?;
        let schema = raw.get("schema").and_then(|v| v.as_str()).unwrap_or("");
        check_schema(&path, schema, SCENE_SCHEMA)?;
        serde_json::from_value(raw).at(&path)
    }

    pub fn path(&self, relative: &str) -> PathBuf {
        self.root.join(relative)
    }
}

/// Draws the geometry and dry material of scene `index` and renders it.
pub fn build_scene(
    opts: &DatasetOptions,
    corpus: &Corpus,
    noise: &NoiseBank,
    index: usize,
) -> Result<(SceneManifest, SceneAudio)> {
    let seed = opts.seed.wrapping_add(index as u64);
    let constraint = (opts.preset == Preset::SameDoa).then_some(&opts.same_doa);
    let mut manifest = opts.scenario.sample(seed, constraint)?;
    manifest.scene_id = scene_id(index);
    let fs = manifest.sample_rate_hz;

    let mut rng = scene_rng(seed, stream::SIGNALS);
    let pair = sample(&mut rng, corpus.speakers.len(), 2);
    let (spk_d, spk_i) = (
        &corpus.speakers[pair.index(0)],
        &corpus.speakers[pair.index(1)],
    );
    let utts = sample(&mut rng, spk_d.utterances.len(), 2);
    let utt_d = &spk_d.utterances[utts.index(0)];
    let utt_e = &spk_d.utterances[utts.index(1)];
    let utt_i = &spk_i.utterances[rng.random_range(0..spk_i.utterances.len())];
    let [lo, hi] = opts.duration_range_s;
    let target_s = if hi > lo {
        rng.random_range(lo..hi)
    } else {
        lo
    };
    let noise_pick = (!noise.is_synthetic()).then(|| rng.random_range(0..noise.files.len()));

    let mut desired = load_mono(utt_d, fs)?;
    desired.truncate((target_s * f64::from(fs)).round() as usize);
    let len = desired.len();
    let mut enrollment = load_mono(utt_e, fs)?;
    enrollment.truncate((hi.max(lo) * f64::from(fs)).round() as usize);
    let interference = load_mono(utt_i, fs)?;
    let (noise_name, dir_noise) = match noise_pick {
        Some(k) => {
            let p = &noise.files[k];
            let name = noise
                .root
                .as_deref()
                .and_then(|r| p.strip_prefix(r).ok())
                .unwrap_or(p)
                .to_string_lossy()
                .replace('\\', "/");
            (name, load_mono(p, fs)?)
        }
        None => {
            let extra = (opts.aux_segment_s * f64::from(fs)).round() as usize;
            let mut r = scene_rng(seed, stream::DRY_NOISE);
            (
                "synthetic:pink".to_string(),
                pink_noise(len + extra, &mut r),
            )
        }
    };

    manifest.sources = Some(SourceMaterial {
        desired_speaker: spk_d.id.clone(),
        desired_utterance: corpus.relative(utt_d),
        enrollment_utterance: corpus.relative(utt_e),
        interference_speaker: spk_i.id.clone(),
        interference_utterance: corpus.relative(utt_i),
        noise: noise_name,
        duration_s: len as f64 / f64::from(fs),
    });
    let dry = DrySignals {
        desired,
        enrollment,
        interference: Some(interference),
        directional_noise: Some(dir_noise),
    };
    let render = RenderOptions {
        sensor_noise: opts.sensor_noise,
        aux_segment_s: opts.aux_segment_s,
    };
    let audio = render_scene(&manifest, &dry, &render)?;
    manifest.measured_snr = Some(audio.measured_snr(manifest.snr_reference_mic));
    Ok((manifest, audio))
}

pub fn scene_id(index: usize) -> String {
    format!("scene_{index:04}")
}

fn write_scene(
    root: &Path,
    manifest: &mut SceneManifest,
    audio: &SceneAudio,
) -> Result<SceneEntry> {
    let rel_dir = format!("scenes/{}", manifest.scene_id);
    let dir = root.join(&rel_dir);
    std::fs::create_dir_all(dir.join("aux")).at(&dir)?;
    let put = |name: &str, wav: &MultichannelWaveform| -> Result<String> {
        let rel = format!("{rel_dir}/{name}.wav");
        write_wav(&root.join(&rel), wav, WavEncoding::Float32)?;
        Ok(rel)
    };
    let files = SceneFiles {
        mixture: put("mixture", &audio.mixture)?,
        desired: put("desired", &audio.reverberant_desired)?,
        interference: put("interference", &audio.reverberant_interference)?,
        enrollment: put("enrollment", &audio.enrollment)?,
        aux: Some(AuxFiles {
            desired_plus_noise: put("aux/desired_plus_noise", &audio.aux.desired_plus_noise)?,
            noise_only: put("aux/noise_only", &audio.aux.noise_only)?,
            interference_plus_noise: put(
                "aux/interference_plus_noise",
                &audio.aux.interference_plus_noise,
            )?,
            directional_noise: put("aux/directional_noise", &audio.directional_noise)?,
            sensor_noise: put("aux/sensor_noise", &audio.sensor_noise)?,
        }),
    };
    manifest.files = Some(files);
    let rel = format!("{rel_dir}/manifest.json");
    write_json(&root.join(&rel), manifest)?;
    Ok(SceneEntry {
        scene_id: manifest.scene_id.clone(),
        manifest: rel,
    })
}

/// Renders `opts.n_scenes` scenes into `out_dir` and writes its index.
///
/// Scene `i` uses seed `opts.seed + i`, so results do not depend on the
/// number of worker threads. Scenes that fail are listed in the index.
pub fn generate_dataset(
    opts: &DatasetOptions,
    corpus_dir: &Path,
    noise_dir: Option<&Path>,
    out_dir: &Path,
) -> Result<DatasetIndex> {
    let corpus = Corpus::load(corpus_dir)?;
    let noise = NoiseBank::load(noise_dir)?;
    std::fs::create_dir_all(out_dir).at(out_dir)?;
    let results: Vec<Result<SceneEntry>> = (0..opts.n_scenes)
        .into_par_iter()
        .map(|i| {
            let (mut manifest, audio) = build_scene(opts, &corpus, &noise, i)?;
            let entry = write_scene(out_dir, &mut manifest, &audio)?;
            info!("wrote {}", entry.scene_id);
            Ok(entry)
        })
        .collect();
    let mut scenes = Vec::new();
    let mut failed = Vec::new();
    for (i, r) in results.into_iter().enumerate() {
        match r {
            Ok(e) => scenes.push(e),
            Err(e) => {
                warn!("{} failed: {e}", scene_id(i));
                failed.push((scene_id(i), e.to_string()));
            }
        }
    }
    let index = DatasetIndex {
        schema: DATASET_SCHEMA.into(),
        seed: opts.seed,
        preset: opts.preset,
        sample_rate_hz: crate::dsp::DEFAULT_SAMPLE_RATE_HZ,
        reference_mic: opts.scenario.reference_mic,
        options: opts.clone(),
        scenes,
        failed,
    };
    write_json(&out_dir.join(INDEX_FILE), &index)?;
    Ok(index)
}
