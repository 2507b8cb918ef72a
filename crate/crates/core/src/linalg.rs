//! Small dense complex helpers over nalgebra for per-bin J×J problems.

use nalgebra::DMatrix;
use ndarray::ArrayView2;
use num_complex::Complex64;

pub type CMatrix = DMatrix<Complex64>;

/// Sample covariance `(1/T) Σ_t a_t a_tᴴ` of the rows of a `[T × J]` view,
/// symmetrized to remove round-off skew.
pub fn sample_covariance(frames: ArrayView2<'_, Complex64>) -> CMatrix {
    let (t, j) = frames.dim();
    let mut q = CMatrix::zeros(j, j);
    for row in frames.rows() {
        for a in 0..j {
            let xa = row[a];
            for b in 0..j {
                q[(a, b)] += xa * row[b].conj();
            }
        }
    }
    if t > 0 {
        q /= Complex64::new(t as f64, 0.0);
    }
    hermitian_part(&q)
}

pub fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()) * Complex64::new(0.5, 0.0)
}

pub fn trace_re(m: &CMatrix) -> f64 {
    (0..m.nrows()).map(|i| m[(i, i)].re).sum()
}

/// `m + load·I`.
pub fn add_diagonal(m: &CMatrix, load: f64) -> CMatrix {
    let mut out = m.clone();
    for i in 0..out.nrows() {
        out[(i, i)] += Complex64::new(load, 0.0);
    }
    out
}

pub fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm_sq(a: &[Complex64]) -> f64 {
    a.iter().map(Complex64::norm_sqr).sum()
}

/// Principal angle in radians between the complex lines spanned by `a` and
/// `b`; invariant to any nonzero complex gain on either vector.
///
/// Evaluated as `atan2(|b⊥|, |aᴴb|/|a|)` to stay accurate near zero.
pub fn hermitian_angle(a: &[Complex64], b: &[Complex64]) -> f64 {
    let na = norm_sq(a);
    let nb = norm_sq(b);
    if na == 0.0 || nb == 0.0 {
        return std::f64::consts::FRAC_PI_2;
    }
    let c = inner(a, b);
    // b⊥ = b - a (aᴴb)/|a|²
    let coef = c / na;
    let perp_sq: f64 = a
        .iter()
        .zip(b)
        .map(|(x, y)| (y - x * coef).norm_sqr())
        .sum();
    perp_sq.sqrt().atan2(c.norm() / na.sqrt())
}

pub fn hermitian_angle_deg(a: &[Complex64], b: &[Complex64]) -> f64 {
    hermitian_angle(a, b).to_degrees()
}
