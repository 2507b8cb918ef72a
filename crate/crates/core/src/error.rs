use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("signal of {len} samples is shorter than one frame ({frame_len} samples)")]
    SignalTooShort { len: usize, frame_len: usize },
    #[error("invalid STFT configuration: {0}")]
    InvalidConfig(String),
    #[error("invalid spectrogram: {0}")]
    InvalidSpectrogram(String),
    #[error("invalid waveform: {0}")]
    InvalidWaveform(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error(
        "T60 of {t60_s} s is infeasible for this room (Sabine absorption {absorption:.3} > 1)"
    )]
    InfeasibleReverb { t60_s: f64, absorption: f64 },
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),
    #[error("no valid placement found after {attempts} attempts: {reason}")]
    PlacementFailed { attempts: usize, reason: String },
    #[error("dry signal for {0} has zero energy")]
    DegenerateSource(String),
    #[error("corpus at {0} has no usable speakers")]
    EmptyCorpus(PathBuf),
    #[error("corpus needs at least two speakers with two utterances each, found {0}")]
    NotEnoughSpeakers(usize),

    #[error("reference microphone {index} out of range for {channels} channels")]
    RefMicOutOfRange { index: usize, channels: usize },
    #[error("enrollment is silent: every time-frequency cell was masked")]
    SilentEnrollment,
    #[error("noise covariance is not positive definite at bin {bin}")]
    SingularNoiseCovariance { bin: usize },
    #[error("no speech detected: median relative eigengap {gap:.3e} below threshold")]
    NoSpeechDetected { gap: f64 },
    #[error("{frames} frames are not enough to estimate a {channels}x{channels} covariance")]
    InsufficientFrames { frames: usize, channels: usize },

    #[error("SI-SDR reference signal has zero energy")]
    ZeroReference,
    #[error(
        "not enough active speech for STOI: {frames} frames after silence removal, need {needed}"
    )]
    InsufficientSpeech { frames: usize, needed: usize },

    #[error("{path}: sample rate {found} Hz does not match the expected {expected} Hz (resampling is not performed)")]
    SampleRateMismatch {
        path: PathBuf,
        found: u32,
        expected: u32,
    },
    #[error("unsupported WAV format in {path}: {reason}")]
    UnsupportedWav { path: PathBuf, reason: String },
    #[error("schema mismatch in {path}: expected {expected}, found {found}")]
    SchemaMismatch {
        path: PathBuf,
        expected: String,
        found: String,
    },
    #[error("invalid dump: {0}")]
    InvalidDump(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("WAV error in {path}: {source}")]
    Wav {
        path: PathBuf,
        #[source]
        source: hound::Error,
    },
    #[error("JSON error in {path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) trait IoContext<T> {
    fn at(self, path: impl Into<PathBuf>) -> Result<T>;
}

impl<T> IoContext<T> for std::result::Result<T, std::io::Error> {
    fn at(self, path: impl Into<PathBuf>) -> Result<T> {
        self.map_err(|source| Error::Io {
            path: path.into(),
            source,
        })
    }
}

impl<T> IoContext<T> for std::result::Result<T, serde_json::Error> {
    fn at(self, path: impl Into<PathBuf>) -> Result<T> {
        self.map_err(|source| Error::Json {
            path: path.into(),
            source,
        })
    }
}

impl<T> IoContext<T> for std::result::Result<T, hound::Error> {
    fn at(self, path: impl Into<PathBuf>) -> Result<T> {
        self.map_err(|source| Error::Wav {
            path: path.into(),
            source,
        })
    }
}
