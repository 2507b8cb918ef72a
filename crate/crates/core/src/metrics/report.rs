use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{si_sdr, stoi};
use crate::dsp::read_wav;
use crate::error::{Error, IoContext, Result};
use crate::scene::{write_json, Dataset, SceneManifest};

pub const REPORT_SCHEMA: &str = "beamlab.report/1";
pub const UNPROCESSED: &str = "Unprocessed";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneScore {
    pub scene_id: String,
    pub method: String,
    pub si_sdr_db: f64,
    /// `None` when the reference has too little active speech.
    pub stoi: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub count: usize,
    pub mean: f64,
    pub median: f64,
    pub std: f64,
}

impl Summary {
    /// Statistics over the finite values (population standard deviation).
    pub fn of(values: impl IntoIterator<Item = f64>) -> Self {
        let mut v: Vec<f64> = values.into_iter().filter(|x| x.is_finite()).collect();
        if v.is_empty() {
            return Self {
                count: 0,
                mean: f64::NAN,
                median: f64::NAN,
                std: f64::NAN,
            };
        }
        v.sort_by(f64::total_cmp);
        let n = v.len();
        let mean = v.iter().sum::<f64>() / n as f64;
        let median = if n % 2 == 1 {
            v[n / 2]
        } else {
            0.5 * (v[n / 2 - 1] + v[n / 2])
        };
        let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64;
        Self {
            count: n,
            mean,
            median,
            std: var.sqrt(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub method: String,
    pub scenes: usize,
    pub si_sdr_db: Summary,
    pub stoi: Summary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Skipped {
    pub scene_id: String,
    pub method: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    pub schema: String,
    pub per_scene: Vec<SceneScore>,
    pub aggregate: Vec<MethodSummary>,
    pub skipped: Vec<Skipped>,
}

impl ScoreReport {
    pub fn summary(&self, method: &str) -> Option<&MethodSummary> {
        self.aggregate.iter().find(|m| m.method == method)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("scene_id,method,si_sdr_db,stoi\n");
        for s in &self.per_scene {
            let stoi = s
                .stoi
                .map_or_else(|| "nan".to_string(), |v| format!("{v:.6}"));
            let _ = writeln!(
                out,
                "{},{},{:.6},{}",
                s.scene_id, s.method, s.si_sdr_db, stoi
            );
        }
        out
    }
}

/// Enhanced outputs of one method: `<dir>/<scene_id>.wav`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MethodOutputs {
    pub label: String,
    pub dir: PathBuf,
}

impl MethodOutputs {
    /// Labels the directory by its final component.
    pub fn from_dir(dir: &Path) -> Self {
        let label = dir
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| dir.display().to_string());
        Self {
            label,
            dir: dir.to_path_buf(),
        }
    }
}

fn score(reference: &[f64], estimate: &[f64], fs: u32) -> Result<(f64, Option<f64>)> {
    if reference.len() != estimate.len() {
        return Err(Error::ShapeMismatch(format!(
            "reference has {} samples, estimate has {}",
            reference.len(),
            estimate.len()
        )));
    }
    let sdr = si_sdr(reference, estimate)?;
    let d = match stoi(reference, estimate, fs) {
        Ok(d) => Some(d),
        Err(Error::InsufficientSpeech { .. }) => None,
        Err(e) => return Err(e),
    };
    Ok((sdr, d))
}

type SceneRows = (Vec<SceneScore>, Vec<Skipped>);

fn evaluate_scene(
    dataset: &Dataset,
    manifest: &SceneManifest,
    methods: &[MethodOutputs],
) -> Result<SceneRows> {
    let files = manifest.files.as_ref().ok_or_else(|| {
        Error::InvalidConfig(format!("manifest of {} lists no files", manifest.scene_id))
    })?;
    let fs = manifest.sample_rate_hz;
    let m = manifest.snr_reference_mic;
    let reference = read_wav(&dataset.path(&files.desired), Some(fs))?;
    let reference = reference.channel(m).to_vec();
    let mixture = read_wav(&dataset.path(&files.mixture), Some(fs))?;
    let mut rows = Vec::new();
    let mut skipped = Vec::new();
    let id = &manifest.scene_id;
    let (sdr, d) = score(&reference, &mixture.channel(m).to_vec(), fs)?;
    rows.push(SceneScore {
        scene_id: id.clone(),
        method: UNPROCESSED.into(),
        si_sdr_db: sdr,
        stoi: d,
    });
    for method in methods {
        let path = method.dir.join(format!("{id}.wav"));
        let result = if path.is_file() {
            read_wav(&path, Some(fs)).and_then(|w| score(&reference, &w.channel(0).to_vec(), fs))
        } else {
            Err(Error::Io {
                path: path.clone(),
                source: std::io::ErrorKind::NotFound.into(),
            })
        };
        match result {
            Ok((sdr, d)) => rows.push(SceneScore {
                scene_id: id.clone(),
                method: method.label.clone(),
                si_sdr_db: sdr,
                stoi: d,
            }),
            Err(e) => {
                warn!("skipping {id} for {}: {e}", method.label);
                skipped.push(Skipped {
                    scene_id: id.clone(),
                    method: method.label.clone(),
                    reason: e.to_string(),
                });
            }
        }
    }
    Ok((rows, skipped))
}

/// Scores the reference-mic mixture ("Unprocessed") and every method's
/// outputs against the reverberant desired signal at the reference mic.
pub fn evaluate_dataset(dataset: &Dataset, methods: &[MethodOutputs]) -> Result<ScoreReport> {
    let per: Vec<Result<SceneRows>> = dataset
        .index
        .scenes
        .par_iter()
        .map(|entry| {
            let manifest = dataset.manifest(entry)?;
            evaluate_scene(dataset, &manifest, methods)
        })
        .collect();
    let mut per_scene = Vec::new();
    let mut skipped = Vec::new();
    for (entry, r) in dataset.index.scenes.iter().zip(per) {
        match r {
            Ok((rows, skip)) => {
                per_scene.extend(rows);
                skipped.extend(skip);
            }
            Err(e @ Error::SchemaMismatch { .. }) => return Err(e),
            Err(e) => {
                warn!("skipping {}: {e}", entry.scene_id);
                skipped.push(Skipped {
                    scene_id: entry.scene_id.clone(),
                    method: UNPROCESSED.into(),
                    reason: e.to_string(),
                });
            }
        }
    }
    let labels =
        std::iter::once(UNPROCESSED.to_string()).chain(methods.iter().map(|m| m.label.clone()));
    let aggregate = labels
        .map(|label| {
            let rows: Vec<&SceneScore> = per_scene.iter().filter(|s| s.method == label).collect();
            MethodSummary {
                scenes: rows.len(),
                si_sdr_db: Summary::of(rows.iter().map(|s| s.si_sdr_db)),
                stoi: Summary::of(rows.iter().filter_map(|s| s.stoi)),
                method: label,
            }
        })
        .collect();
    Ok(ScoreReport {
        schema: REPORT_SCHEMA.into(),
        per_scene,
        aggregate,
        skipped,
    })
}

/// Writes `scores.csv` and `report.json` into `out_dir`.
pub fn write_report(report: &ScoreReport, out_dir: &Path) -> Result<(PathBuf, PathBuf)> {
    std::fs::create_dir_all(out_dir).at(out_dir)?;
    let csv = out_dir.join("scores.csv");
    std::fs::write(&csv, report.to_csv()).at(&csv)?;
    let json = out_dir.join("report.json");
    write_json(&json, report)?;
    Ok((csv, json))
}
