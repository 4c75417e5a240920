//! Unit conversions at the library boundary.
//!
//! Everything inside the crate is SI: angular frequencies in rad/s, times in
//! seconds. Two frequency conventions are in use, and they are not the same:
//!
//! * The drive parameters Ω and δ are quoted as cyclic frequencies written
//!   "5(2π) MHz", so `omega_mhz = 5` becomes `2π · 5e6` rad/s.
//! * The blockade shift Δ_rr and the noise magnitudes (δ, Ω and Doppler
//!   standard deviations) are quoted without the 2π factor and are taken as
//!   angular values: `delta_rr_ghz = 8` is `8e9` rad/s and a 100 kHz Doppler
//!   spread is `1e5` rad/s.
//!
//! The second convention is the one under which the published blockade and
//! Doppler fidelities are reproduced; with an extra 2π on the noise the
//! Doppler-limited fidelities drop by several percent.

use std::f64::consts::TAU;

/// Cyclic MHz ("x(2π) MHz") to rad/s.
pub fn mhz(x: f64) -> f64 {
    TAU * x * 1e6
}

/// rad/s to cyclic MHz.
pub fn to_mhz(w: f64) -> f64 {
    w / (TAU * 1e6)
}

/// Angular GHz to rad/s.
pub fn ghz_angular(x: f64) -> f64 {
    x * 1e9
}

pub fn to_ghz_angular(w: f64) -> f64 {
    w * 1e-9
}

/// Angular kHz to rad/s.
pub fn khz_angular(x: f64) -> f64 {
    x * 1e3
}

pub fn to_khz_angular(w: f64) -> f64 {
    w * 1e-3
}

pub fn ns(x: f64) -> f64 {
    x * 1e-9
}

pub fn us(x: f64) -> f64 {
    x * 1e-6
}

pub fn to_ns(t: f64) -> f64 {
    t * 1e9
}

pub fn to_us(t: f64) -> f64 {
    t * 1e6
}
