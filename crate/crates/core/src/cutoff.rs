//! The smooth even cutoff used by every dyadic projector.
//!
//! `chi(r) = 1` for `|r| <= 1/2`, `chi(r) = 0` for `|r| >= 3/4`, built from the
//! classical `exp(-1/x)` gluing function so that it is infinitely differentiable.

fn sigma(x: f64) -> f64 {
    if x > 0.0 {
        (-1.0 / x).exp()
    } else {
        0.0
    }
}

/// Smooth step: 0 for `x <= 0`, 1 for `x >= 1`.
pub fn smooth_step(x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let a = sigma(x);
    a / (a + sigma(1.0 - x))
}

/// The plateau cutoff `chi`.
pub fn chi(r: f64) -> f64 {
    smooth_step(4.0 * (0.75 - r.abs()))
}
