use std::path::Path;

use hound::{SampleFormat, WavReader, WavSpec, WavWriter};
use ndarray::Array2;

use super::waveform::MultichannelWaveform;
use crate::error::{Error, IoContext, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WavEncoding {
    Float32,
    Int16,
}

/// Reads a PCM WAV file. When `expected_rate` is given, a file at any other
/// rate is rejected instead of being resampled.
pub fn read_wav(path: &Path, expected_rate: Option<u32>) -> Result<MultichannelWaveform> {
    let mut reader = WavReader::open(path).at(path)?;
    let spec = reader.spec();
    if let Some(expected) = expected_rate {
        if spec.sample_rate != expected {
            return Err(Error::SampleRateMismatch {
                path: path.to_owned(),
                found: spec.sample_rate,
                expected,
            });
        }
    }
    let channels = usize::from(spec.channels);
    let interleaved: Vec<f64> = match (spec.sample_format, spec.bits_per_sample) {
        (SampleFormat::Float, 32) => reader
            .samples::<f32>()
            .map(|s| s.map(f64::from))
            .collect::<Result<_, _>>()
            .at(path)?,
        (SampleFormat::Int, 16) => reader
            .samples::<i16>()
            .map(|s| s.map(|v| f64::from(v) / 32768.0))
            .collect::<Result<_, _>>()
            .at(path)?,
        (fmt, bits) => {
            return Err(Error::UnsupportedWav {
                path: path.to_owned(),
                reason: format!("{bits}-bit {fmt:?} (only float32 and int16 are supported)"),
            })
        }
    };
    if channels == 0 || !interleaved.len().is_multiple_of(channels) {
        return Err(Error::UnsupportedWav {
            path: path.to_owned(),
            reason: "sample count is not a multiple of the channel count".into(),
        });
    }
    let frames = interleaved.len() / channels;
    let samples = Array2::from_shape_fn((channels, frames), |(j, n)| interleaved[n * channels + j]);
    MultichannelWaveform::new(samples, spec.sample_rate)
}

pub fn write_wav(path: &Path, wav: &MultichannelWaveform, encoding: WavEncoding) -> Result<()> {
    let spec = WavSpec {
        channels: u16::try_from(wav.channels())
            .map_err(|_| Error::InvalidWaveform("too many channels for WAV".into()))?,
        sample_rate: wav.sample_rate_hz(),
        bits_per_sample: match encoding {
            WavEncoding::Float32 => 32,
            WavEncoding::Int16 => 16,
        },
        sample_format: match encoding {
            WavEncoding::Float32 => SampleFormat::Float,
            WavEncoding::Int16 => SampleFormat::Int,
        },
    };
    let mut writer = WavWriter::create(path, spec).at(path)?;
    let samples = wav.samples();
    for n in 0..wav.len() {
        for j in 0..wav.channels() {
            let v = samples[[j, n]];
            match encoding {
                WavEncoding::Float32 => writer.write_sample(v as f32).at(path)?,
                WavEncoding::Int16 => {
                    let q = (v * 32768.0).round().clamp(-32768.0, 32767.0) as i16;
                    writer.write_sample(q).at(path)?
                }
            }
        }
    }
    writer.finalize().at(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> MultichannelWaveform {
        MultichannelWaveform::from_channels(
            &[
                vec![0.0, 0.25, -0.5, 0.125],
                vec![1.0 / 3.0, -0.75, 0.5, 0.0],
            ],
            8000,
        )
        .unwrap()
    }

    #[test]
    fn float32_round_trip_is_f32_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.wav");
        let w = sample();
        write_wav(&path, &w, WavEncoding::Float32).unwrap();
        let r = read_wav(&path, Some(8000)).unwrap();
        assert_eq!(r.channels(), 2);
        for (a, b) in r.samples().iter().zip(w.samples().iter()) {
            assert_eq!(*a, f64::from(*b as f32));
        }
    }

    #[test]
    fn int16_round_trip_within_quantization() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("b.wav");
        let w = sample();
        write_wav(&path, &w, WavEncoding::Int16).unwrap();
        let r = read_wav(&path, None).unwrap();
        for (a, b) in r.samples().iter().zip(w.samples().iter()) {
            assert!((a - b).abs() <= 0.5 / 32768.0 + 1e-12);
        }
    }

    #[test]
    fn refuses_to_resample() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.wav");
        write_wav(&path, &sample(), WavEncoding::Float32).unwrap();
        let err = read_wav(&path, Some(16000)).unwrap_err();
        assert!(matches!(
            err,
            Error::SampleRateMismatch {
                found: 8000,
                expected: 16000,
                ..
            }
        ));
    }
}
