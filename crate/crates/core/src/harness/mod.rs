//! Numerical checks of the linear estimates: localized Strichartz bounds,
//! bilinear transversality gains, resonance-curve geometry and the sector
//! decompositions used to split quadrilinear terms.

pub mod bilinear;
pub mod resonance;
pub mod sectors;
pub mod strichartz;

/// `max / min` of a list of positive values; infinite if any value is not positive.
pub fn band(values: &[f64]) -> f64 {
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
    if values.is_empty() || !(min > 0.0) {
        return f64::INFINITY;
    }
    max / min
}

/// Uniform time nodes on `[-t_final, t_final]` with trapezoid weights.
pub fn symmetric_times(t_final: f64, dt: f64) -> (Vec<f64>, Vec<f64>) {
    let steps = (t_final / dt).round().max(1.0) as usize;
    let h = t_final / steps as f64;
    let times: Vec<f64> = (0..=2 * steps).map(|i| -t_final + i as f64 * h).collect();
    let weights = crate::field::trapezoid_weights(&times, 2.0 * t_final);
    (times, weights)
}
