//! Brownian increments, Brownian bridges and their extremes.

use crate::error::{Error, Result};
use crate::geometry::Point;

use super::rng::RngStream;

/// `x + sqrt(dt) * z` with `z` standard normal in every coordinate.
pub fn gaussian_step(x: &[f64], dt: f64, rng: &mut RngStream) -> Point {
    let mut out = Point::zeros(x.len());
    gaussian_step_into(x, dt, rng, &mut out);
    out
}

/// In-place form of [`gaussian_step`]; `out` must have the dimension of `x`.
#[inline]
pub fn gaussian_step_into(x: &[f64], dt: f64, rng: &mut RngStream, out: &mut [f64]) {
    debug_assert!(dt >= 0.0);
    let s = dt.sqrt();
    for (o, xi) in out.iter_mut().zip(x) {
        *o = xi + s * rng.normal();
    }
}

/// One point of the Brownian bridge from `x_a` (time 0) to `x_b` (time `span`)
/// at time `t`.
pub fn bridge_point_sample(
    x_a: &[f64],
    x_b: &[f64],
    span: f64,
    t: f64,
    rng: &mut RngStream,
) -> Result<Point> {
    if !(span > 0.0) || !(0.0..=span).contains(&t) {
        return Err(Error::InvalidTime { t, span });
    }
    let w = t / span;
    let sd = (t * (span - t) / span).max(0.0).sqrt();
    let mut out = Point::lerp(x_a, x_b, w);
    if sd > 0.0 {
        for v in out.iter_mut() {
            *v += sd * rng.normal();
        }
    }
    Ok(out)
}

/// Maximum of the bridge from 0 to `x` over `[0, dt]`, given the exponential
/// variate `e` that drives it.
#[inline]
pub fn bridge_max_from_exp(x: f64, dt: f64, e: f64) -> f64 {
    0.5 * (x + (x * x + 2.0 * dt * e).sqrt())
}

/// Samples the maximum of the bridge from 0 to `x` over `[0, dt]`.
pub fn bridge_max_sample(x: f64, dt: f64, rng: &mut RngStream) -> f64 {
    bridge_max_from_exp(x, dt, rng.exp1())
}

/// `P(M > m)` for the maximum `M` of the bridge from 0 to `x` over `[0, dt]`.
pub fn bridge_max_tail(x: f64, dt: f64, m: f64) -> Result<f64> {
    let floor = x.max(0.0);
    if m < floor {
        return Err(Error::InvalidThreshold { m, floor });
    }
    if !(dt > 0.0) {
        return Err(Error::InvalidParameter(format!("dt = {dt}")));
    }
    Ok((-2.0 * m * (m - x) / dt).exp())
}

/// CDF of the first passage time of standard Brownian motion from 0 to level `a`.
pub fn levy_fpt_cdf(a: f64, t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    if t.is_infinite() {
        return 1.0;
    }
    libm::erfc(a.abs() / (2.0 * t).sqrt())
}

/// First time a Brownian motion travels distance `d` in one direction:
/// `d^2 / Z^2` with `Z` standard normal.
pub fn levy_hitting_time_sample(d: f64, rng: &mut RngStream) -> f64 {
    let z = rng.normal();
    d * d / (z * z)
}
