use num_complex::Complex64;
use rustfft::FftPlanner;

/// Full linear convolution (`signal.len() + kernel.len() - 1` samples) via FFT.
pub fn fft_convolve(signal: &[f64], kernel: &[f64]) -> Vec<f64> {
    if signal.is_empty() || kernel.is_empty() {
        return Vec::new();
    }
    let out_len = signal.len() + kernel.len() - 1;
    let n = out_len.next_power_of_two();
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(n);
    let inv = planner.plan_fft_inverse(n);
    let lift = |x: &[f64]| {
        let mut v = vec![Complex64::default(); n];
        for (slot, &s) in v.iter_mut().zip(x) {
            slot.re = s;
        }
        v
    };
    let mut a = lift(signal);
    let mut b = lift(kernel);
    fwd.process(&mut a);
    fwd.process(&mut b);
    for (x, y) in a.iter_mut().zip(&b) {
        *x *= y;
    }
    inv.process(&mut a);
    let scale = 1.0 / n as f64;
    a[..out_len].iter().map(|c| c.re * scale).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn direct(x: &[f64], h: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; x.len() + h.len() - 1];
        for (i, a) in x.iter().enumerate() {
            for (j, b) in h.iter().enumerate() {
                y[i + j] += a * b;
            }
        }
        y
    }

    #[test]
    fn matches_direct_convolution() {
        let x: Vec<f64> = (0..37).map(|i| ((i * 7919) % 13) as f64 - 6.0).collect();
        let h: Vec<f64> = (0..11).map(|i| 1.0 / (1.0 + i as f64)).collect();
        let fast = fft_convolve(&x, &h);
        for (a, b) in fast.iter().zip(direct(&x, &h)) {
            assert!((a - b).abs() < 1e-10);
        }
    }
}
