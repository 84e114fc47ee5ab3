use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Savitzky-Golay smoothing: each point is replaced by the value at that
/// point of a least-squares polynomial of degree `order` fitted over a
/// window of `window` samples.
///
/// An even window reaches one sample further right than left. Near the ends
/// the window shrinks symmetrically around the point, and the degree drops
/// to `window_len − 1` when fewer than `order + 1` samples remain, so
/// polynomials of degree ≤ `order` pass through unchanged everywhere.
pub fn smooth_curve(series: &[f64], window: usize, order: usize) -> Result<Vec<f64>> {
    if window < 2 || order >= window {
        return Err(Error::Config(format!(
            "savitzky-golay needs window >= 2 and order < window, got window {window}, order {order}"
        )));
    }
    if series.len() < window {
        return Err(Error::Config(format!(
            "series of length {} is shorter than the smoothing window {window}",
            series.len()
        )));
    }
    let n = series.len();
    let left = (window - 1) / 2;
    let right = window - 1 - left;
    (0..n)
        .map(|i| {
            let edge = i.min(n - 1 - i);
            let (lo, hi) = (i - left.min(edge), i + right.min(edge));
            fit_at(&series[lo..=hi], i - lo, order)
        })
        .collect()
}

/// Least-squares polynomial through `ys` (abscissae `0..len` shifted so that
/// `center` is 0), evaluated at 0.
fn fit_at(ys: &[f64], center: usize, order: usize) -> Result<f64> {
    let k = ys.len();
    if k == 1 {
        return Ok(ys[0]);
    }
    let degree = order.min(k - 1);
    let a = DMatrix::from_fn(k, degree + 1, |r, c| (r as f64 - center as f64).powi(c as i32));
    let b = DVector::from_column_slice(ys);
    let coef = a
        .svd(true, true)
        .solve(&b, 1e-12)
        .map_err(|e| Error::NonFinite(format!("savitzky-golay fit: {e}")))?;
    Ok(coef[0])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_is_unchanged() {
        let s = vec![3.25; 30];
        for v in smooth_curve(&s, 10, 5).unwrap() {
            assert!((v - 3.25).abs() < 1e-12);
        }
    }

    #[test]
    fn quintic_is_unchanged() {
        let s: Vec<f64> = (0..40)
            .map(|i| {
                let x = i as f64 / 10.0;
                1.0 - 2.0 * x + 0.5 * x.powi(3) - 0.1 * x.powi(5)
            })
            .collect();
        for (a, b) in smooth_curve(&s, 10, 5).unwrap().iter().zip(&s) {
            assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
    }

    #[test]
    fn degenerate_windows_are_errors() {
        assert!(smooth_curve(&[1.0; 20], 5, 5).is_err());
        assert!(smooth_curve(&[1.0; 20], 1, 0).is_err());
        assert!(smooth_curve(&[1.0; 4], 10, 5).is_err());
    }
}
