//! Python module `beamlab`.
//!
//! Waveforms are `[channels][samples]` sequences of floats (numpy arrays
//! work), spectra come back as nested lists of complex numbers indexed
//! `[bin][frame][channel]`. Manifests, indices and reports cross the
//! boundary as JSON strings.

use std::path::{Path, PathBuf};

use beamlab::beamformer::{
    apply_beamformer, estimate_covariance, estimated_mvdr, mvdr_weights, oracle_mvdr, AuxSegments,
    BeamformerWeights, MvdrOptions, NoiseCovariance, DEFAULT_MVDR_LOADING,
};
use beamlab::dsp::{istft, stft, MultichannelWaveform, Spectrogram, StftConfig};
use beamlab::dump::{read_complex, write_weights};
use beamlab::metrics::{evaluate_dataset, MethodOutputs};
use beamlab::pipeline::{beamform_dataset, Method};
use beamlab::rir::{simulate_rir, ArrayGeometry, RirOptions, RoomSpec};
use beamlab::rtf::{
    average_rtf, covariance_whitening_rtf, instantaneous_rtf, RtfEstimate, Weighting,
    DEFAULT_FLOOR_DB, DEFAULT_WHITENING_LOADING,
};
use beamlab::scene::{
    generate_dataset, make_corpus, sample_scene, Dataset, DatasetOptions, Preset,
    SamePlacementConstraint, SceneManifest, SourceRole, SynthCorpusOptions,
};
use ndarray::{Array1, Array2, Array3};
use num_complex::Complex64;
use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyOSError, PyValueError};
use pyo3::prelude::*;

create_exception!(beamlab, BeamlabError, PyException);

fn to_py(e: beamlab::Error) -> PyErr {
    match e {
        beamlab::Error::Io { .. } => PyOSError::new_err(e.to_string()),
        _ => BeamlabError::new_err(e.to_string()),
    }
}

type Nested2<T> = Vec<Vec<T>>;
type Nested3<T> = Vec<Vec<Vec<T>>>;

pub fn waveform(channels: Nested2<f64>, sample_rate_hz: u32) -> PyResult<MultichannelWaveform> {
    MultichannelWaveform::from_channels(&channels, sample_rate_hz).map_err(to_py)
}

pub fn channels(w: &MultichannelWaveform) -> Nested2<f64> {
    (0..w.channels()).map(|j| w.channel(j).to_vec()).collect()
}

fn nest2<T: Clone>(a: &Array2<T>) -> Nested2<T> {
    a.outer_iter().map(|r| r.to_vec()).collect()
}

fn nest3<T: Clone>(a: &Array3<T>) -> Nested3<T> {
    a.outer_iter().map(|m| nest2(&m.to_owned())).collect()
}

fn flat2<T: Clone>(rows: &Nested2<T>, what: &str) -> PyResult<Array2<T>> {
    let cols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != cols) {
        return Err(PyValueError::new_err(format!(
            "{what}: rows differ in length"
        )));
    }
    let data: Vec<T> = rows.iter().flatten().cloned().collect();
    Array2::from_shape_vec((rows.len(), cols), data)
        .map_err(|e| PyValueError::new_err(format!("{what}: {e}")))
}

fn flat3<T: Clone>(blocks: &Nested3<T>, what: &str) -> PyResult<Array3<T>> {
    let mats: Vec<Array2<T>> = blocks
        .iter()
        .map(|b| flat2(b, what))
        .collect::<PyResult<_>>()?;
    let (r, c) = mats.first().map_or((0, 0), Array2::dim);
    if mats.iter().any(|m| m.dim() != (r, c)) {
        return Err(PyValueError::new_err(format!(
            "{what}: blocks differ in shape"
        )));
    }
    let data: Vec<T> = mats.iter().flat_map(|m| m.iter().cloned()).collect();
    Array3::from_shape_vec((mats.len(), r, c), data)
        .map_err(|e| PyValueError::new_err(format!("{what}: {e}")))
}

fn point(v: Vec<f64>, what: &str) -> PyResult<[f64; 3]> {
    <[f64; 3]>::try_from(v).map_err(|v| {
        PyValueError::new_err(format!("{what}: expected 3 coordinates, got {}", v.len()))
    })
}

fn stft_config(sample_rate_hz: u32, frame_len: usize, hop: usize) -> StftConfig {
    StftConfig {
        frame_len,
        hop,
        sample_rate_hz,
        ..StftConfig::default()
    }
}

/// Multichannel STFT `[bins × frames × channels]`.
#[pyclass(name = "Spectrogram", frozen, skip_from_py_object)]
#[derive(Clone)]
pub struct PySpectrogram {
    pub inner: Spectrogram,
}

#[pymethods]
impl PySpectrogram {
    /// `(bins, frames, channels)`.
    #[getter]
    fn shape(&self) -> (usize, usize, usize) {
        self.inner.bins().dim()
    }

    #[getter]
    fn frame_len(&self) -> usize {
        self.inner.frame_len()
    }

    #[getter]
    fn hop(&self) -> usize {
        self.inner.hop()
    }

    #[getter]
    fn sample_rate_hz(&self) -> u32 {
        self.inner.sample_rate_hz()
    }

    /// Channel vector of bin `k`, frame `t`.
    fn vector(&self, k: usize, t: usize) -> PyResult<Vec<Complex64>> {
        let (bins, frames, _) = self.inner.bins().dim();
        if k >= bins || t >= frames {
            return Err(PyValueError::new_err(format!(
                "({k}, {t}) outside {bins} x {frames}"
            )));
        }
        Ok(self.inner.vector(k, t).to_vec())
    }

    /// Nested `[bin][frame][channel]` complex values.
    fn to_list(&self) -> Nested3<Complex64> {
        nest3(self.inner.bins())
    }

    fn __repr__(&self) -> String {
        let (k, t, j) = self.inner.bins().dim();
        format!("Spectrogram(bins={k}, frames={t}, channels={j})")
    }
}

/// Per-bin RTF `[bins × channels]` relative to `reference_mic`.
#[pyclass(name = "RtfEstimate", frozen, skip_from_py_object)]
#[derive(Clone)]
pub struct PyRtfEstimate {
    pub inner: RtfEstimate,
}

#[pymethods]
impl PyRtfEstimate {
    #[new]
    #[pyo3(signature = (values, reference_mic = 0, valid = None))]
    fn new(
        values: Nested2<Complex64>,
        reference_mic: usize,
        valid: Option<Vec<bool>>,
    ) -> PyResult<Self> {
        let values = flat2(&values, "values")?;
        let bins = values.nrows();
        let valid = valid.unwrap_or_else(|| vec![true; bins]);
        if valid.len() != bins {
            return Err(PyValueError::new_err("valid needs one entry per bin"));
        }
        if reference_mic >= values.ncols() {
            return Err(to_py(beamlab::Error::RefMicOutOfRange {
                index: reference_mic,
                channels: values.ncols(),
            }));
        }
        Ok(Self {
            inner: RtfEstimate {
                values,
                valid: Array1::from(valid),
                reference_mic,
            },
        })
    }

    fn values(&self) -> Nested2<Complex64> {
        nest2(&self.inner.values)
    }

    fn valid(&self) -> Vec<bool> {
        self.inner.valid.to_vec()
    }

    #[getter]
    fn reference_mic(&self) -> usize {
        self.inner.reference_mic
    }

    fn vector(&self, k: usize) -> PyResult<Vec<Complex64>> {
        if k >= self.inner.num_bins() {
            return Err(PyValueError::new_err(format!("bin {k} out of range")));
        }
        Ok(self.inner.vector(k))
    }
}

/// MVDR weights `[bins × channels]`; the output is `gᴴx`.
#[pyclass(name = "BeamformerWeights", frozen)]
pub struct PyBeamformerWeights {
    pub inner: BeamformerWeights,
}

#[pymethods]
impl PyBeamformerWeights {
    fn weights(&self) -> Nested2<Complex64> {
        nest2(&self.inner.weights)
    }

    #[getter]
    fn passthrough_bins(&self) -> Vec<usize> {
        self.inner.passthrough_bins.clone()
    }

    /// Single-channel output spectrogram.
    fn apply(&self, spec: &PySpectrogram) -> PyResult<PySpectrogram> {
        let inner = apply_beamformer(&spec.inner, &self.inner).map_err(to_py)?;
        Ok(PySpectrogram { inner })
    }

    /// Writes `<stem>.json` and `<stem>.bin` in the weights dump format.
    #[pyo3(signature = (stem, sample_rate_hz = 8000, frame_len = 256, hop = 128, scene_id = None))]
    fn save(
        &self,
        stem: PathBuf,
        sample_rate_hz: u32,
        frame_len: usize,
        hop: usize,
        scene_id: Option<&str>,
    ) -> PyResult<()> {
        let cfg = stft_config(sample_rate_hz, frame_len, hop);
        write_weights(&stem, &self.inner, &cfg, scene_id).map_err(to_py)
    }
}

/// Sampled geometry of one scene.
#[pyclass(name = "SceneManifest", frozen)]
pub struct PySceneManifest {
    pub inner: SceneManifest,
}

#[pymethods]
impl PySceneManifest {
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let inner = serde_json::from_str(text).map_err(|e| PyValueError::new_err(e.to_string()))?;
        Ok(Self { inner })
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string_pretty(&self.inner).map_err(|e| PyValueError::new_err(e.to_string()))
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.inner.seed
    }

    #[getter]
    fn room_dims_m(&self) -> [f64; 3] {
        self.inner.room.dims_m
    }

    #[getter]
    fn t60_s(&self) -> f64 {
        self.inner.room.t60_s
    }

    #[getter]
    fn mic_positions_m(&self) -> Vec<[f64; 3]> {
        self.inner.array.mic_positions_m.clone()
    }

    /// `(position, doa_deg, distance_m)` of the desired speaker.
    #[getter]
    fn desired(&self) -> Option<([f64; 3], f64, f64)> {
        self.inner
            .placement(SourceRole::Desired)
            .map(|p| (p.position_m, p.doa_deg, p.distance_m))
    }

    fn __repr__(&self) -> String {
        format!(
            "SceneManifest(seed={}, room={:?})",
            self.inner.seed, self.inner.room.dims_m
        )
    }
}

fn preset(name: &str) -> PyResult<Preset> {
    match name {
        "random" => Ok(Preset::Random),
        "same-doa" | "same_doa" => Ok(Preset::SameDoa),
        other => Err(PyValueError::new_err(format!("unknown preset {other:?}"))),
    }
}

#[pyfunction(name = "stft")]
#[pyo3(signature = (x, sample_rate_hz = 8000, frame_len = 256, hop = 128))]
fn py_stft(
    x: Nested2<f64>,
    sample_rate_hz: u32,
    frame_len: usize,
    hop: usize,
) -> PyResult<PySpectrogram> {
    let w = waveform(x, sample_rate_hz)?;
    let inner = stft(&w, &stft_config(sample_rate_hz, frame_len, hop)).map_err(to_py)?;
    Ok(PySpectrogram { inner })
}

#[pyfunction(name = "istft")]
fn py_istft(spec: &PySpectrogram) -> PyResult<Nested2<f64>> {
    istft(&spec.inner).map(|w| channels(&w)).map_err(to_py)
}

/// Image-method impulse responses `[mics][taps]`.
#[pyfunction(name = "simulate_rir")]
#[pyo3(signature = (room_dims_m, t60_s, mic_positions_m, source_m, sample_rate_hz = 8000, anechoic = false))]
fn py_simulate_rir(
    py: Python<'_>,
    room_dims_m: Vec<f64>,
    t60_s: f64,
    mic_positions_m: Vec<Vec<f64>>,
    source_m: Vec<f64>,
    sample_rate_hz: u32,
    anechoic: bool,
) -> PyResult<Nested2<f64>> {
    let room = RoomSpec::new(point(room_dims_m, "room_dims_m")?, t60_s);
    let array = ArrayGeometry {
        mic_positions_m: mic_positions_m
            .into_iter()
            .map(|p| point(p, "mic_positions_m"))
            .collect::<PyResult<_>>()?,
        reference_mic_index: 0,
    };
    let src = point(source_m, "source_m")?;
    let opts = RirOptions {
        sample_rate_hz,
        anechoic,
        max_order: None,
    };
    let set = py
        .detach(|| simulate_rir(&room, &array, &src, &opts))
        .map_err(to_py)?;
    Ok(nest2(&set.rirs))
}

/// Per-cell RTF `[bins][frames][channels]` and its validity mask `[bins][frames]`.
#[pyfunction(name = "instantaneous_rtf")]
#[pyo3(signature = (enrollment, ref_mic = 0, floor_db = DEFAULT_FLOOR_DB))]
fn py_instantaneous_rtf(
    enrollment: &PySpectrogram,
    ref_mic: usize,
    floor_db: f64,
) -> PyResult<(Nested3<Complex64>, Nested2<bool>)> {
    let inst = instantaneous_rtf(&enrollment.inner, ref_mic, floor_db).map_err(to_py)?;
    Ok((nest3(&inst.values), nest2(&inst.mask)))
}

/// Time-averaged instantaneous RTF; `weighting` is "ref-energy" or "uniform".
#[pyfunction(name = "average_rtf")]
#[pyo3(signature = (enrollment, ref_mic = 0, floor_db = DEFAULT_FLOOR_DB, weighting = "ref-energy"))]
fn py_average_rtf(
    enrollment: &PySpectrogram,
    ref_mic: usize,
    floor_db: f64,
    weighting: &str,
) -> PyResult<PyRtfEstimate> {
    let weighting = match weighting {
        "ref-energy" => Weighting::RefEnergy,
        "uniform" => Weighting::Uniform,
        other => {
            return Err(PyValueError::new_err(format!(
                "unknown weighting {other:?}"
            )))
        }
    };
    let inst = instantaneous_rtf(&enrollment.inner, ref_mic, floor_db).map_err(to_py)?;
    Ok(PyRtfEstimate {
        inner: average_rtf(&inst, weighting),
    })
}

#[pyfunction(name = "covariance_whitening_rtf")]
#[pyo3(signature = (speech_plus_noise, noise_only, ref_mic = 0, loading = DEFAULT_WHITENING_LOADING))]
fn py_covariance_whitening_rtf(
    speech_plus_noise: &PySpectrogram,
    noise_only: &PySpectrogram,
    ref_mic: usize,
    loading: f64,
) -> PyResult<PyRtfEstimate> {
    let inner = covariance_whitening_rtf(
        &speech_plus_noise.inner,
        &noise_only.inner,
        ref_mic,
        loading,
    )
    .map_err(to_py)?;
    Ok(PyRtfEstimate { inner })
}

/// Sample covariance `[bins][channels][channels]` of a segment.
#[pyfunction(name = "estimate_covariance")]
fn py_estimate_covariance(segment: &PySpectrogram) -> PyResult<Nested3<Complex64>> {
    let q = estimate_covariance(&segment.inner).map_err(to_py)?;
    Ok(nest3(&q.matrices))
}

/// MVDR weights; identity noise covariance when `noise_cov` is None.
#[pyfunction(name = "mvdr_weights")]
#[pyo3(signature = (rtf, noise_cov = None, loading = DEFAULT_MVDR_LOADING))]
fn py_mvdr_weights(
    rtf: &PyRtfEstimate,
    noise_cov: Option<Nested3<Complex64>>,
    loading: f64,
) -> PyResult<PyBeamformerWeights> {
    let r = &rtf.inner;
    let q = match noise_cov {
        Some(m) => NoiseCovariance {
            matrices: flat3(&m, "noise_cov")?,
            frame_count: 0,
        },
        None => NoiseCovariance::identity(r.num_bins(), r.channels()),
    };
    let inner = mvdr_weights(r, &q, loading).map_err(to_py)?;
    Ok(PyBeamformerWeights { inner })
}

fn mvdr_options(ref_mic: usize, sample_rate_hz: u32) -> MvdrOptions {
    MvdrOptions {
        ref_mic,
        stft: StftConfig {
            sample_rate_hz,
            ..StftConfig::default()
        },
        ..MvdrOptions::default()
    }
}

/// Oracle MVDR: RTF from the clean enrollment, identity noise covariance.
#[pyfunction(name = "oracle_mvdr")]
#[pyo3(signature = (mixture, enrollment, ref_mic = 0, sample_rate_hz = 8000))]
fn py_oracle_mvdr(
    py: Python<'_>,
    mixture: Nested2<f64>,
    enrollment: Nested2<f64>,
    ref_mic: usize,
    sample_rate_hz: u32,
) -> PyResult<Vec<f64>> {
    let x = waveform(mixture, sample_rate_hz)?;
    let e = waveform(enrollment, sample_rate_hz)?;
    let opts = mvdr_options(ref_mic, sample_rate_hz);
    let out = py.detach(|| oracle_mvdr(&x, &e, &opts)).map_err(to_py)?;
    Ok(out.channel(0).to_vec())
}

/// Estimated MVDR: covariance-whitening RTF, covariance from the
/// interference-plus-noise segment.
#[pyfunction(name = "estimated_mvdr")]
#[pyo3(signature = (mixture, desired_plus_noise, noise_only, interference_plus_noise, ref_mic = 0, sample_rate_hz = 8000))]
fn py_estimated_mvdr(
    py: Python<'_>,
    mixture: Nested2<f64>,
    desired_plus_noise: Nested2<f64>,
    noise_only: Nested2<f64>,
    interference_plus_noise: Nested2<f64>,
    ref_mic: usize,
    sample_rate_hz: u32,
) -> PyResult<Vec<f64>> {
    let x = waveform(mixture, sample_rate_hz)?;
    let aux = AuxSegments {
        desired_plus_noise: waveform(desired_plus_noise, sample_rate_hz)?,
        noise_only: waveform(noise_only, sample_rate_hz)?,
        interference_plus_noise: waveform(interference_plus_noise, sample_rate_hz)?,
    };
    let opts = mvdr_options(ref_mic, sample_rate_hz);
    let out = py
        .detach(|| estimated_mvdr(&x, &aux, &opts))
        .map_err(to_py)?;
    Ok(out.channel(0).to_vec())
}

/// SI-SDR in dB.
#[pyfunction(name = "si_sdr")]
fn py_si_sdr(reference: Vec<f64>, estimate: Vec<f64>) -> PyResult<f64> {
    beamlab::metrics::si_sdr(&reference, &estimate).map_err(to_py)
}

#[pyfunction(name = "stoi")]
#[pyo3(signature = (reference, estimate, sample_rate_hz = 8000))]
fn py_stoi(
    py: Python<'_>,
    reference: Vec<f64>,
    estimate: Vec<f64>,
    sample_rate_hz: u32,
) -> PyResult<f64> {
    py.detach(|| beamlab::metrics::stoi(&reference, &estimate, sample_rate_hz))
        .map_err(to_py)
}

#[pyfunction(name = "sample_scene")]
#[pyo3(signature = (seed, preset = "random"))]
fn py_sample_scene(seed: u64, preset: &str) -> PyResult<PySceneManifest> {
    let same = SamePlacementConstraint::default();
    let constraint = match self::preset(preset)? {
        Preset::SameDoa => Some(&same),
        Preset::Random => None,
    };
    let inner = sample_scene(seed, constraint).map_err(to_py)?;
    Ok(PySceneManifest { inner })
}

/// Writes a synthetic corpus; returns the utterance paths.
#[pyfunction(name = "make_corpus")]
#[pyo3(signature = (dir, speakers = 8, utterances = 4, seed = 0))]
fn py_make_corpus(
    dir: PathBuf,
    speakers: usize,
    utterances: usize,
    seed: u64,
) -> PyResult<Vec<PathBuf>> {
    let opts = SynthCorpusOptions {
        speakers,
        utterances_per_speaker: utterances,
        seed,
        ..SynthCorpusOptions::default()
    };
    make_corpus(&dir, &opts).map_err(to_py)
}

/// Simulates a dataset; returns its index as JSON.
#[pyfunction(name = "generate_dataset")]
#[pyo3(signature = (corpus_dir, out_dir, n_scenes = 10, seed = 0, preset = "random", noise_dir = None))]
fn py_generate_dataset(
    py: Python<'_>,
    corpus_dir: PathBuf,
    out_dir: PathBuf,
    n_scenes: usize,
    seed: u64,
    preset: &str,
    noise_dir: Option<PathBuf>,
) -> PyResult<String> {
    let opts = DatasetOptions {
        n_scenes,
        seed,
        preset: self::preset(preset)?,
        ..DatasetOptions::default()
    };
    let index = py
        .detach(|| generate_dataset(&opts, &corpus_dir, noise_dir.as_deref(), &out_dir))
        .map_err(to_py)?;
    serde_json::to_string_pretty(&index).map_err(|e| PyValueError::new_err(e.to_string()))
}

fn open(dataset: &Path) -> PyResult<Dataset> {
    Dataset::open(dataset).map_err(to_py)
}

/// Beamforms every scene; returns `(written paths, [(scene_id, reason)])`.
/// `(scene_id, reason)` pairs.
type Failures = Vec<(String, String)>;

#[pyfunction(name = "beamform_dataset")]
fn py_beamform_dataset(
    py: Python<'_>,
    dataset: PathBuf,
    method: &str,
    out_dir: PathBuf,
) -> PyResult<(Vec<PathBuf>, Failures)> {
    let method = match method {
        "oracle-mvdr" | "OracleMvdr" => Method::OracleMvdr,
        "estimated-mvdr" | "EstimatedMvdr" => Method::EstimatedMvdr,
        other => return Err(PyValueError::new_err(format!("unknown method {other:?}"))),
    };
    let ds = open(&dataset)?;
    let report = py
        .detach(|| beamform_dataset(&ds, method, &MvdrOptions::default(), &out_dir))
        .map_err(to_py)?;
    Ok((report.written, report.failed))
}

/// Scores a dataset; returns the report as JSON.
#[pyfunction(name = "evaluate_dataset")]
#[pyo3(signature = (dataset, method_dirs = Vec::new()))]
fn py_evaluate_dataset(
    py: Python<'_>,
    dataset: PathBuf,
    method_dirs: Vec<PathBuf>,
) -> PyResult<String> {
    let ds = open(&dataset)?;
    let methods: Vec<MethodOutputs> = method_dirs
        .iter()
        .map(|d| MethodOutputs::from_dir(d))
        .collect();
    let report = py
        .detach(|| evaluate_dataset(&ds, &methods))
        .map_err(to_py)?;
    serde_json::to_string_pretty(&report).map_err(|e| PyValueError::new_err(e.to_string()))
}

/// Reads a complex dump; returns `(header JSON, shape, flat row-major values)`.
#[pyfunction(name = "read_complex_dump")]
fn py_read_complex_dump(
    stem: PathBuf,
    schema: &str,
) -> PyResult<(String, Vec<usize>, Vec<Complex64>)> {
    let (h, data) = read_complex(&stem, schema).map_err(to_py)?;
    let header = serde_json::to_string(&h).map_err(|e| PyValueError::new_err(e.to_string()))?;
    let values = data
        .iter()
        .map(|c| Complex64::new(f64::from(c.re), f64::from(c.im)))
        .collect();
    Ok((header, h.shape, values))
}

#[pymodule]
#[pyo3(name = "beamlab")]
pub fn beamlab_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("BeamlabError", m.py().get_type::<BeamlabError>())?;
    m.add_class::<PySpectrogram>()?;
    m.add_class::<PyRtfEstimate>()?;
    m.add_class::<PyBeamformerWeights>()?;
    m.add_class::<PySceneManifest>()?;
    m.add_function(wrap_pyfunction!(py_stft, m)?)?;
    m.add_function(wrap_pyfunction!(py_istft, m)?)?;
    m.add_function(wrap_pyfunction!(py_simulate_rir, m)?)?;
    m.add_function(wrap_pyfunction!(py_instantaneous_rtf, m)?)?;
    m.add_function(wrap_pyfunction!(py_average_rtf, m)?)?;
    m.add_function(wrap_pyfunction!(py_covariance_whitening_rtf, m)?)?;
    m.add_function(wrap_pyfunction!(py_estimate_covariance, m)?)?;
    m.add_function(wrap_pyfunction!(py_mvdr_weights, m)?)?;
    m.add_function(wrap_pyfunction!(py_oracle_mvdr, m)?)?;
    m.add_function(wrap_pyfunction!(py_estimated_mvdr, m)?)?;
    m.add_function(wrap_pyfunction!(py_si_sdr, m)?)?;
    m.add_function(wrap_pyfunction!(py_stoi, m)?)?;
    m.add_function(wrap_pyfunction!(py_sample_scene, m)?)?;
    m.add_function(wrap_pyfunction!(py_make_corpus, m)?)?;
    m.add_function(wrap_pyfunction!(py_generate_dataset, m)?)?;
    m.add_function(wrap_pyfunction!(py_beamform_dataset, m)?)?;
    m.add_function(wrap_pyfunction!(py_evaluate_dataset, m)?)?;
    m.add_function(wrap_pyfunction!(py_read_complex_dump, m)?)?;
    Ok(())
}
