//! Tensor dumps shared with external consumers: a JSON header next to a raw
//! little-endian payload (`<stem>.json` + `<stem>.bin`).
//!
//! Complex tensors are stored in row-major order of their shape, whose
//! first axis is frequency, with real and imaginary parts interleaved as
//! float32.

use std::path::{Path, PathBuf};

use ndarray::{ArrayD, ArrayViewD, IxDyn};
use num_complex::{Complex32, Complex64};
use serde::{Deserialize, Serialize};

use crate::beamformer::BeamformerWeights;
use crate::dsp::StftConfig;
use crate::error::{Error, IoContext, Result};
use crate::scene::{check_schema, read_json, write_json};

pub const RTF_SCHEMA: &str = "beamlab.rtf/1";
pub const RTF_MASK_SCHEMA: &str = "beamlab.rtf-mask/1";
pub const BFW_SCHEMA: &str = "beamlab.bfw/1";
pub const STFT_SCHEMA: &str = "beamlab.stft/1";
pub const DOA_SCHEMA: &str = "beamlab.doa/1";

pub const COMPLEX_LAYOUT: &str = "k-major complex interleaved float32";
pub const MASK_LAYOUT: &str = "k-major uint8";
pub const INT_LAYOUT: &str = "int32";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DumpHeader {
    pub schema: String,
    pub shape: Vec<usize>,
    pub ref_mic: usize,
    pub layout: String,
    pub endianness: String,
    /// File name of the payload, relative to the header.
    pub payload: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sample_rate_hz: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frame_len: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hop: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scene_id: Option<String>,
}

impl DumpHeader {
    pub fn new(schema: &str, shape: &[usize], ref_mic: usize, layout: &str) -> Self {
        Self {
            schema: schema.into(),
            shape: shape.to_vec(),
            ref_mic,
            layout: layout.into(),
            endianness: "little".into(),
            payload: String::new(),
            sample_rate_hz: None,
            frame_len: None,
            hop: None,
            scene_id: None,
        }
    }

    fn elements(&self) -> usize {
        self.shape.iter().product()
    }
}

fn paths(stem: &Path) -> (PathBuf, PathBuf) {
    (stem.with_extension("json"), stem.with_extension("bin"))
}

fn write_dump(stem: &Path, mut header: DumpHeader, payload: &[u8]) -> Result<()> {
    let (json, bin) = paths(stem);
    if let Some(dir) = json.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).at(dir)?;
    }
    header.payload = bin
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    std::fs::write(&bin, payload).at(&bin)?;
    write_json(&json, &header)
}

fn read_dump(
    stem: &Path,
    schema: &str,
    layout: &str,
    width: usize,
) -> Result<(DumpHeader, Vec<u8>)> {
    let (json, _) = paths(stem);
    let header: DumpHeader = read_json(&json)?;
    check_schema(&json, &header.schema, schema)?;
    if header.layout != layout || header.endianness != "little" {
        return Err(Error::InvalidDump(format!(
            "{}: layout {:?} ({}-endian), expected {layout:?}",
            json.display(),
            header.layout,
            header.endianness
        )));
    }
    let bin = json.with_file_name(&header.payload);
    let bytes = std::fs::read(&bin).at(&bin)?;
    let expected = header.elements() * width;
    if bytes.len() != expected {
        return Err(Error::InvalidDump(format!(
            "{}: {} bytes, header shape {:?} needs {expected}",
            bin.display(),
            bytes.len(),
            header.shape
        )));
    }
    Ok((header, bytes))
}

/// Writes a complex tensor; values are rounded to float32.
pub fn write_complex(
    stem: &Path,
    header: DumpHeader,
    data: ArrayViewD<'_, Complex64>,
) -> Result<()> {
    if header.shape != data.shape() || header.layout != COMPLEX_LAYOUT {
        return Err(Error::InvalidDump(format!(
            "header shape {:?} / layout {:?} for a {:?} complex tensor",
            header.shape,
            header.layout,
            data.shape()
        )));
    }
    let mut bytes = Vec::with_capacity(data.len() * 8);
    for c in data.iter() {
        bytes.extend_from_slice(&(c.re as f32).to_le_bytes());
        bytes.extend_from_slice(&(c.im as f32).to_le_bytes());
    }
    write_dump(stem, header, &bytes)
}

pub fn read_complex(stem: &Path, schema: &str) -> Result<(DumpHeader, ArrayD<Complex32>)> {
    let (header, bytes) = read_dump(stem, schema, COMPLEX_LAYOUT, 8)?;
    let values: Vec<Complex32> = bytes
        .chunks_exact(8)
        .map(|b| {
            Complex32::new(
                f32::from_le_bytes([b[0], b[1], b[2], b[3]]),
                f32::from_le_bytes([b[4], b[5], b[6], b[7]]),
            )
        })
        .collect();
    let arr = ArrayD::from_shape_vec(IxDyn(&header.shape), values)
        .map_err(|e| Error::InvalidDump(e.to_string()))?;
    Ok((header, arr))
}

pub fn write_mask(stem: &Path, header: DumpHeader, data: ArrayViewD<'_, bool>) -> Result<()> {
    if header.shape != data.shape() || header.layout != MASK_LAYOUT {
        return Err(Error::InvalidDump(format!(
            "header shape {:?} / layout {:?} for a {:?} mask",
            header.shape,
            header.layout,
            data.shape()
        )));
    }
    let bytes: Vec<u8> = data.iter().map(|v| u8::from(*v)).collect();
    write_dump(stem, header, &bytes)
}

pub fn read_mask(stem: &Path, schema: &str) -> Result<(DumpHeader, ArrayD<bool>)> {
    let (header, bytes) = read_dump(stem, schema, MASK_LAYOUT, 1)?;
    let arr = ArrayD::from_shape_vec(
        IxDyn(&header.shape),
        bytes.iter().map(|b| *b != 0).collect(),
    )
    .map_err(|e| Error::InvalidDump(e.to_string()))?;
    Ok((header, arr))
}

pub fn write_ints(stem: &Path, header: DumpHeader, data: &[i32]) -> Result<()> {
    if header.elements() != data.len() || header.layout != INT_LAYOUT {
        return Err(Error::InvalidDump(format!(
            "header shape {:?} / layout {:?} for {} integers",
            header.shape,
            header.layout,
            data.len()
        )));
    }
    let bytes: Vec<u8> = data.iter().flat_map(|v| v.to_le_bytes()).collect();
    write_dump(stem, header, &bytes)
}

pub fn read_ints(stem: &Path, schema: &str) -> Result<(DumpHeader, Vec<i32>)> {
    let (header, bytes) = read_dump(stem, schema, INT_LAYOUT, 4)?;
    let v = bytes
        .chunks_exact(4)
        .map(|b| i32::from_le_bytes([b[0], b[1], b[2], b[3]]))
        .collect();
    Ok((header, v))
}

/// Writes beamformer weights `[K × J]` under [`BFW_SCHEMA`].
pub fn write_weights(
    stem: &Path,
    weights: &BeamformerWeights,
    stft: &StftConfig,
    scene_id: Option<&str>,
) -> Result<()> {
    let data = weights.weights.view().into_dyn();
    let mut h = DumpHeader::new(
        BFW_SCHEMA,
        data.shape(),
        weights.target_rtf.reference_mic,
        COMPLEX_LAYOUT,
    );
    h.sample_rate_hz = Some(stft.sample_rate_hz);
    h.frame_len = Some(stft.frame_len);
    h.hop = Some(stft.hop);
    h.scene_id = scene_id.map(str::to_string);
    write_complex(stem, h, data)
}
