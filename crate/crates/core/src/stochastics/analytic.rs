//! Closed-form laws of Brownian exit times and bridge local times.

use std::f64::consts::SQRT_2;

use crate::error::{Error, Result};

const SQRT_2PI: f64 = 2.506_628_274_631_000_7;

/// `exp(c^2 / 2) * P(Z > c)` for standard normal `Z`, without overflow for
/// large `c`.
pub fn scaled_normal_tail(c: f64) -> f64 {
    if c < 5.0 {
        return (0.5 * c * c).exp() * 0.5 * libm::erfc(c / SQRT_2);
    }
    // Mills ratio by its continued fraction R(c) = 1 / (c + 1 / (c + 2 / (c + ...)))
    let mut v = c;
    for k in (1..=200).rev() {
        v = c + k as f64 / v;
    }
    1.0 / (v * SQRT_2PI)
}

/// Density of the first exit time `t` in `(0, dt)` of a Brownian bridge over `[0, dt]`
/// whose signed distance to a planar boundary moves from `rho_old` to `rho_new`.
pub fn exit_time_density(rho_old: f64, rho_new: f64, dt: f64, t: f64) -> Result<f64> {
    if rho_old >= 0.0 {
        return Err(Error::InvalidState("exit-time density needs rho_old < 0"));
    }
    if !(t > 0.0 && t < dt) {
        return Err(Error::InvalidTime { t, span: dt });
    }
    let d = rho_new - rho_old;
    let log_pref = rho_old.abs().ln() - (SQRT_2PI * t.powf(1.5) * (1.0 - t / dt).sqrt()).ln();
    let expo =
        d * d / (2.0 * dt) - rho_new * rho_new / (2.0 * (dt - t)) - rho_old * rho_old / (2.0 * t);
    Ok((log_pref + expo).exp())
}

/// Expected first passage time across level `a` of the bridge from 0 to `x` over `[0, dt]`.
pub fn expected_exit_time(a: f64, x: f64, dt: f64) -> Result<f64> {
    if !(0.0 < a && a < x) {
        return Err(Error::InvalidBarrier { a, x });
    }
    if !(dt > 0.0) {
        return Err(Error::InvalidParameter(format!("dt = {dt}")));
    }
    let c = x / dt.sqrt();
    Ok(a / x * dt * SQRT_2PI * c * scaled_normal_tail(c))
}

/// Bounds on `E[T_a] / ((a / x) dt)`: `[1 / (1 + dt / x^2), 1]`.
pub fn mills_ratio_bounds(x: f64, dt: f64) -> (f64, f64) {
    (1.0 / (1.0 + dt / (x * x)), 1.0)
}

/// `P(L_a > y)` for the local time at `a` of the bridge from 0 to `x` over `[0, dt]`.
pub fn local_time_tail(a: f64, x: f64, dt: f64, y: f64) -> f64 {
    let s = a.abs() + (x - a).abs() + y;
    (-(s * s - x * x) / (2.0 * dt)).exp()
}

/// Mean of the limiting overshoot `|rho| / sqrt(dt)` at naive exit, `|zeta(1/2)| / sqrt(2 pi)`.
pub const OVERSHOOT_CONSTANT: f64 = 0.582_597_157_939_010_6;
