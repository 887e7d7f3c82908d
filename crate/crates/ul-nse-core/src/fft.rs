//! Cached 2D FFT plans on top of rustfft.
//!
//! Convention: the forward transform is unnormalized, the inverse carries the
//! 1/n^2 factor. Index k maps to the signed wavenumber k - n for k > n/2.

use ndarray::Array2;
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

type PlanKey = (usize, bool);

fn plan(n: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    static PLANS: OnceLock<Mutex<HashMap<PlanKey, Arc<dyn Fft<f64>>>>> = OnceLock::new();
    let plans = PLANS.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = plans.lock().unwrap();
    guard
        .entry((n, inverse))
        .or_insert_with(|| {
            let mut planner = FftPlanner::new();
            if inverse {
                planner.plan_fft_inverse(n)
            } else {
                planner.plan_fft_forward(n)
            }
        })
        .clone()
}

fn transform_rows(data: &mut Array2<Complex64>, inverse: bool) {
    let n = data.ncols();
    let fft = plan(n, inverse);
    for mut row in data.rows_mut() {
        let slice = row.as_slice_mut().expect("row not contiguous");
        fft.process(slice);
    }
}

/// In-place 2D transform, rows then columns. Unnormalized in both directions;
/// callers divide by n^2 after the inverse.
fn fft2_inplace(data: &mut Array2<Complex64>, inverse: bool) {
    transform_rows(data, inverse);
    let mut t = data.t().as_standard_layout().into_owned();
    transform_rows(&mut t, inverse);
    *data = t.t().as_standard_layout().into_owned();
}

/// Forward 2D DFT of a real array (unnormalized).
pub fn forward(values: &Array2<f64>) -> Array2<Complex64> {
    let mut data = values.mapv(|v| Complex64::new(v, 0.0));
    fft2_inplace(&mut data, false);
    data
}

/// Inverse 2D DFT, returning the real part scaled by 1/n^2.
pub fn inverse(coeffs: &Array2<Complex64>) -> Array2<f64> {
    let n = coeffs.nrows();
    let mut data = coeffs.clone();
    fft2_inplace(&mut data, true);
    let norm = 1.0 / (n * n) as f64;
    data.mapv(|c| c.re * norm)
}

/// Signed wavenumber index: k for k <= n/2, k - n beyond.
#[inline]
pub fn signed_index(k: usize, n: usize) -> i64 {
    if k <= n / 2 {
        k as i64
    } else {
        k as i64 - n as i64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_identity() {
        let n = 16;
        let values = Array2::from_shape_fn((n, n), |(i, j)| (i * 7 + j * 3) as f64 * 0.01 - 0.5);
        let back = inverse(&forward(&values));
        for (a, b) in values.iter().zip(back.iter()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn constant_concentrates_at_zero_mode() {
        let n = 8;
        let values = Array2::from_elem((n, n), 2.5);
        let coeffs = forward(&values);
        assert!((coeffs[[0, 0]].re - 2.5 * (n * n) as f64).abs() < 1e-9);
        assert!(coeffs[[3, 5]].norm() < 1e-9);
    }
}
