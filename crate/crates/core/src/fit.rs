use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Ordinary least-squares line `y = slope x + intercept`; `residual` is the
/// root-mean-square deviation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub slope: f64,
    pub intercept: f64,
    pub residual: f64,
    pub n: usize,
}

pub fn least_squares(x: &[f64], y: &[f64]) -> Result<FitResult> {
    let n = x.len();
    if n != y.len() {
        return Err(Error::DegenerateFit("x and y differ in length".into()));
    }
    if n < 3 {
        return Err(Error::DegenerateFit(format!("need at least 3 points, got {n}")));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::DegenerateFit("non-finite value (underflow?)".into()));
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::DegenerateFit("all x values coincide".into()));
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss: f64 = x.iter().zip(y).map(|(a, b)| (b - slope * a - intercept).powi(2)).sum();
    Ok(FitResult { slope, intercept, residual: (ss / nf).sqrt(), n })
}

/// Fit of `log2 y` against `x`; rejects nonpositive `y`.
pub fn log2_fit(x: &[f64], y: &[f64]) -> Result<FitResult> {
    if y.iter().any(|&v| !(v > 0.0)) {
        return Err(Error::DegenerateFit("nonpositive value cannot be logged".into()));
    }
    let ly: Vec<f64> = y.iter().map(|v| v.log2()).collect();
    least_squares(x, &ly)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_line() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y = [1.0, -1.0, -3.0, -5.0];
        let f = least_squares(&x, &y).unwrap();
        assert!((f.slope + 2.0).abs() < 1e-15 && (f.intercept - 3.0).abs() < 1e-14);
        assert!(f.residual < 1e-14);
        assert_eq!(f.n, 4);
    }

    #[test]
    fn residual_of_noisy_points() {
        let f = least_squares(&[0.0, 1.0, 2.0], &[0.0, 1.0, 0.0]).unwrap();
        assert_eq!(f.slope, 0.0);
        assert!((f.intercept - 1.0 / 3.0).abs() < 1e-15);
        assert!((f.residual - (2.0f64 / 9.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn degenerate_inputs() {
        assert!(least_squares(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]).is_err());
        assert!(least_squares(&[1.0, 2.0], &[1.0, 2.0]).is_err());
        assert!(log2_fit(&[1.0, 2.0, 3.0], &[1.0, 0.0, 2.0]).is_err());
    }

    #[test]
    fn json_shape() {
        let f = FitResult { slope: -1.0, intercept: 0.5, residual: 0.0, n: 3 };
        let v: serde_json::Value = serde_json::to_value(f).unwrap();
        for key in ["slope", "intercept", "residual", "n"] {
            assert!(v.get(key).is_some());
        }
    }
}
