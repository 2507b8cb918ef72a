use crate::error::{Error, Result};

/// Residual energy below this fraction of the projected target counts as a
/// perfect reconstruction (+∞), i.e. anything above 240 dB.
const PERFECT_RATIO: f64 = 1e-24;

/// Scale-invariant signal-to-distortion ratio in dB.
///
/// Projects `estimate` onto `reference` (`α = ⟨ŝ,s⟩/‖s‖²`) and compares the
/// projection with the residual. Returns `+∞` for an exact (scaled) match and
/// `-∞` for an all-zero estimate.
pub fn si_sdr(reference: &[f64], estimate: &[f64]) -> Result<f64> {
    if reference.len() != estimate.len() {
        return Err(Error::ShapeMismatch(format!(
            "reference has {} samples, estimate has {}",
            reference.len(),
            estimate.len()
        )));
    }
    let ref_energy: f64 = reference.iter().map(|v| v * v).sum();
    if ref_energy.is_nan() || ref_energy <= 0.0 {
        return Err(Error::ZeroReference);
    }
    if estimate.iter().all(|v| *v == 0.0) {
        return Ok(f64::NEG_INFINITY);
    }
    let dot: f64 = reference.iter().zip(estimate).map(|(s, e)| s * e).sum();
    let alpha = dot / ref_energy;
    let (target, residual) = reference
        .iter()
        .zip(estimate)
        .fold((0.0, 0.0), |(t, r), (s, e)| {
            let proj = alpha * s;
            (t + proj * proj, r + (e - proj) * (e - proj))
        });
    if target == 0.0 {
        return Ok(f64::NEG_INFINITY);
    }
    if residual <= PERFECT_RATIO * target {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (target / residual).log10())
}
