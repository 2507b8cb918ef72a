//! Dataset-level drivers: beamforming and feature export over a dataset.

use std::path::{Path, PathBuf};

use log::{info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::beamformer::{estimated_mvdr, oracle_mvdr, AuxSegments, MvdrOptions};
use crate::dsp::{read_wav, stft, write_wav, MultichannelWaveform, StftConfig, WavEncoding};
use crate::dump::{
    write_complex, write_ints, write_mask, DumpHeader, COMPLEX_LAYOUT, DOA_SCHEMA, INT_LAYOUT,
    MASK_LAYOUT, RTF_MASK_SCHEMA, RTF_SCHEMA, STFT_SCHEMA,
};
use crate::error::{Error, IoContext, Result};
use crate::rtf::instantaneous_rtf;
use crate::scene::{Dataset, SceneEntry, SceneManifest};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Method {
    OracleMvdr,
    EstimatedMvdr,
}

impl Method {
    /// Directory and report label of the method.
    pub fn label(self) -> &'static str {
        match self {
            Method::OracleMvdr => "OracleMvdr",
            Method::EstimatedMvdr => "EstimatedMvdr",
        }
    }
}

fn scene_files(manifest: &SceneManifest) -> Result<&crate::scene::SceneFiles> {
    manifest.files.as_ref().ok_or_else(|| {
        Error::InvalidConfig(format!("manifest of {} lists no files", manifest.scene_id))
    })
}

fn load(dataset: &Dataset, rel: &str, fs: u32) -> Result<MultichannelWaveform> {
    read_wav(&dataset.path(rel), Some(fs))
}

/// Runs one beamformer on one scene of a dataset.
pub fn enhance_scene(
    dataset: &Dataset,
    manifest: &SceneManifest,
    method: Method,
    opts: &MvdrOptions,
) -> Result<MultichannelWaveform> {
    let files = scene_files(manifest)?;
    let fs = manifest.sample_rate_hz;
    let mixture = load(dataset, &files.mixture, fs)?;
    match method {
        Method::OracleMvdr => {
            let enrollment = load(dataset, &files.enrollment, fs)?;
            oracle_mvdr(&mixture, &enrollment, opts)
        }
        Method::EstimatedMvdr => {
            let aux_files = files.aux.as_ref().ok_or_else(|| {
                Error::InvalidConfig(format!(
                    "{} has no auxiliary segments for the estimated beamformer",
                    manifest.scene_id
                ))
            })?;
            let aux = AuxSegments {
                desired_plus_noise: load(dataset, &aux_files.desired_plus_noise, fs)?,
                noise_only: load(dataset, &aux_files.noise_only, fs)?,
                interference_plus_noise: load(dataset, &aux_files.interference_plus_noise, fs)?,
            };
            estimated_mvdr(&mixture, &aux, opts)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct BatchReport {
    pub written: Vec<PathBuf>,
    /// `(scene_id, reason)` of scenes that failed.
    pub failed: Vec<(String, String)>,
}

/// Writes `<out_dir>/<label>/<scene_id>.wav` for every scene of the dataset.
/// Failing scenes are logged and listed; the rest are still processed.
pub fn beamform_dataset(
    dataset: &Dataset,
    method: Method,
    opts: &MvdrOptions,
    out_dir: &Path,
) -> Result<BatchReport> {
    let dir = out_dir.join(method.label());
    std::fs::create_dir_all(&dir).at(&dir)?;
    let results: Vec<(String, Result<PathBuf>)> = dataset
        .index
        .scenes
        .par_iter()
        .map(|entry: &SceneEntry| {
            let run = || -> Result<PathBuf> {
                let manifest = dataset.manifest(entry)?;
                let mut scene_opts = *opts;
                scene_opts.ref_mic = manifest.array.reference_mic_index;
                let out = enhance_scene(dataset, &manifest, method, &scene_opts)?;
                let path = dir.join(format!("{}.wav", entry.scene_id));
                write_wav(&path, &out, WavEncoding::Float32)?;
                Ok(path)
            };
            (entry.scene_id.clone(), run())
        })
        .collect();
    let mut report = BatchReport::default();
    for (id, r) in results {
        match r {
            Ok(p) => {
                info!("{} {id}: wrote {}", method.label(), p.display());
                report.written.push(p);
            }
            Err(e) => {
                warn!("{} {id}: {e}", method.label());
                report.failed.push((id, e.to_string()));
            }
        }
    }
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Feature {
    /// Instantaneous RTF of the enrollment `[K × T × J]` plus its mask.
    Rtf,
    /// Desired-speaker DOA in whole degrees.
    Doa,
    /// Mixture STFT `[K × T × J]`.
    Stft,
}

impl Feature {
    pub fn label(self) -> &'static str {
        match self {
            Feature::Rtf => "rtf",
            Feature::Doa => "doa",
            Feature::Stft => "stft",
        }
    }
}

fn stft_header(
    schema: &str,
    shape: &[usize],
    ref_mic: usize,
    layout: &str,
    cfg: &StftConfig,
    id: &str,
) -> DumpHeader {
    let mut h = DumpHeader::new(schema, shape, ref_mic, layout);
    h.sample_rate_hz = Some(cfg.sample_rate_hz);
    h.frame_len = Some(cfg.frame_len);
    h.hop = Some(cfg.hop);
    h.scene_id = Some(id.to_string());
    h
}

/// Writes the dumps of one feature for one scene under `dir`; returns the
/// header paths.
pub fn export_scene_features(
    dataset: &Dataset,
    manifest: &SceneManifest,
    feature: Feature,
    opts: &MvdrOptions,
    dir: &Path,
) -> Result<Vec<PathBuf>> {
    let files = scene_files(manifest)?;
    let fs = manifest.sample_rate_hz;
    let id = &manifest.scene_id;
    let m = manifest.array.reference_mic_index;
    let cfg = &opts.stft;
    let stem = dir.join(id);
    match feature {
        Feature::Rtf => {
            let enr = stft(&load(dataset, &files.enrollment, fs)?, cfg)?;
            let inst = instantaneous_rtf(&enr, m, opts.floor_db)?;
            let values = inst.values.into_dyn();
            let h = stft_header(RTF_SCHEMA, values.shape(), m, COMPLEX_LAYOUT, cfg, id);
            write_complex(&stem, h, values.view())?;
            let mask = inst.mask.into_dyn();
            let mask_stem = dir.join(format!("{id}_mask"));
            let h = stft_header(RTF_MASK_SCHEMA, mask.shape(), m, MASK_LAYOUT, cfg, id);
            write_mask(&mask_stem, h, mask.view())?;
            Ok(vec![
                stem.with_extension("json"),
                mask_stem.with_extension("json"),
            ])
        }
        Feature::Stft => {
            let spec = stft(&load(dataset, &files.mixture, fs)?, cfg)?;
            let bins = spec.into_bins().into_dyn();
            let h = stft_header(STFT_SCHEMA, bins.shape(), m, COMPLEX_LAYOUT, cfg, id);
            write_complex(&stem, h, bins.view())?;
            Ok(vec![stem.with_extension("json")])
        }
        Feature::Doa => {
            let doa = manifest
                .desired_doa_index()
                .ok_or_else(|| Error::InvalidConfig(format!("{id} has no desired placement")))?;
            let mut h = DumpHeader::new(DOA_SCHEMA, &[1], m, INT_LAYOUT);
            h.scene_id = Some(id.clone());
            write_ints(&stem, h, &[doa])?;
            Ok(vec![stem.with_extension("json")])
        }
    }
}

/// Exports one feature for every scene into `<out_dir>/<feature>/`.
pub fn export_features(
    dataset: &Dataset,
    feature: Feature,
    opts: &MvdrOptions,
    out_dir: &Path,
) -> Result<BatchReport> {
    let dir = out_dir.join(feature.label());
    std::fs::create_dir_all(&dir).at(&dir)?;
    let results: Vec<(String, Result<Vec<PathBuf>>)> = dataset
        .index
        .scenes
        .par_iter()
        .map(|entry| {
            let run = || {
                let manifest = dataset.manifest(entry)?;
                export_scene_features(dataset, &manifest, feature, opts, &dir)
            };
            (entry.scene_id.clone(), run())
        })
        .collect();
    let mut report = BatchReport::default();
    for (id, r) in results {
        match r {
            Ok(paths) => report.written.extend(paths),
            Err(e) => {
                warn!("{} {id}: {e}", feature.label());
                report.failed.push((id, e.to_string()));
            }
        }
    }
    Ok(report)
}
