//! Hamiltonians for one and two three-level atoms under a common drive.
//!
//! Each atom has levels `|0>`, `|1>` and a Rydberg level `|r>`; only `|1>` is
//! coupled to `|r>`. Frequencies are rad/s and ħ = 1.
//!
//! # Frames
//!
//! [`h_full`] uses the natural frame: both ground levels at zero energy and
//! `|r>` at `δ + d_i` for atom `i`, plus the blockade shift `Δ_rr` on `|rr>`.
//! The reduced forms [`h_single`] and [`h_symmetric_pair`] are written in a
//! frame shifted by a constant `-δ/2`:
//!
//! ```text
//! P01^† h_full P01 = h_single         + (δ/2)·1    on {|01>, |0r>}
//! P11^† h_full P11 = h_symmetric_pair + (δ/2)·1    on {|11>, (|1r>+|r1>)/√2, |rr>}
//! ```
//!
//! The `|rr>` entry of the pair form, `(2Δ_rr + 3δ)/2`, splits as the
//! non-interacting two-atom energy `2δ`, the blockade shift `Δ_rr` and the
//! common `-δ/2` offset. The offset is undone at gate extraction by the
//! `e^{iδt/2}` factor (see [`crate::gateanalysis::extract_gate`]).

use std::f64::consts::SQRT_2;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numkernel::{self, ComplexMatrix};

/// Single-atom levels in basis order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Level {
    Zero = 0,
    One = 1,
    Rydberg = 2,
}

/// Index of `|a1 a2>` in the nine-state basis
/// `|00>,|01>,|0r>,|10>,|11>,|1r>,|r0>,|r1>,|rr>`.
pub const fn basis_index(a1: Level, a2: Level) -> usize {
    3 * a1 as usize + a2 as usize
}

/// `|00>, |01>, |10>, |11>` in the nine-state basis.
pub const COMPUTATIONAL: [usize; 4] = [
    basis_index(Level::Zero, Level::Zero),
    basis_index(Level::Zero, Level::One),
    basis_index(Level::One, Level::Zero),
    basis_index(Level::One, Level::One),
];

pub const FULL_DIM: usize = 9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PulseShape {
    Square,
    /// Error-function switching edges with width `delta_t` seconds.
    ErfEdges {
        delta_t: f64,
    },
}

/// Drive parameters, all in rad/s and seconds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulseParams {
    pub omega: Complex64,
    pub delta: f64,
    pub delta_rr: f64,
    pub shape: PulseShape,
    pub duration: f64,
}

impl PulseParams {
    pub fn square(omega: f64, delta: f64, delta_rr: f64, duration: f64) -> Self {
        PulseParams { omega: Complex64::new(omega, 0.0), delta, delta_rr, shape: PulseShape::Square, duration }
    }

    pub fn with_shape(mut self, shape: PulseShape) -> Self {
        self.shape = shape;
        self
    }

    pub fn with_duration(mut self, duration: f64) -> Self {
        self.duration = duration;
        self
    }

    pub fn with_omega(mut self, omega: Complex64) -> Self {
        self.omega = omega;
        self
    }

    /// `ξ = |Ω| / |δ|`.
    pub fn xi(&self) -> f64 {
        self.omega.norm() / self.delta.abs()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.duration >= 0.0) {
            return Err(Error::invalid(format!("duration must be >= 0, got {}", self.duration)));
        }
        if let PulseShape::ErfEdges { delta_t } = self.shape {
            if !(delta_t > 0.0) {
                return Err(Error::invalid(format!("erf edge width must be > 0, got {delta_t}")));
            }
        }
        if !self.omega.re.is_finite() || !self.omega.im.is_finite() || !self.delta.is_finite() || !self.delta_rr.is_finite() {
            return Err(Error::invalid("non-finite drive parameter"));
        }
        Ok(())
    }
}

/// Quasi-static per-atom shifts of the Rydberg level (Doppler), rad/s.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct AtomDetunings {
    pub d1: f64,
    pub d2: f64,
}

impl AtomDetunings {
    pub const ZERO: AtomDetunings = AtomDetunings { d1: 0.0, d2: 0.0 };

    pub fn new(d1: f64, d2: f64) -> Self {
        AtomDetunings { d1, d2 }
    }
}

fn re(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// Effective Rabi frequency `sqrt(N|Ω|² + δ²)` for `N` blockaded atoms.
pub fn effective_rabi(n_atoms: u32, omega: Complex64, delta: f64) -> f64 {
    (n_atoms as f64 * omega.norm_sqr() + delta * delta).sqrt()
}

/// Closed-form ground and singly-excited amplitudes after a square pulse of
/// length `t`, starting from the ground state, for `N` blockaded atoms.
pub fn excitation_amplitudes(n_atoms: u32, omega: Complex64, delta: f64, t: f64) -> (Complex64, Complex64) {
    let rabi = effective_rabi(n_atoms, omega, delta);
    if rabi == 0.0 {
        return (re(1.0), Complex64::ZERO);
    }
    let (s, c) = (0.5 * rabi * t).sin_cos();
    let ground = Complex64::new(c, delta / rabi * s);
    let excited = Complex64::new(0.0, -1.0) * omega.conj() * (n_atoms as f64).sqrt() / rabi * s;
    (ground, excited)
}

/// Single atom in `{|1>, |r>}`: `½[[-δ, Ω], [Ω*, δ]]`.
pub fn h_single(p: &PulseParams) -> ComplexMatrix {
    let o = p.omega * 0.5;
    ComplexMatrix::from_row_slice(2, 2, &[re(-0.5 * p.delta), o, o.conj(), re(0.5 * p.delta)])
}

/// Two atoms with a perfect blockade, in `{|11>, (|1r>+|r1>)/√2}`.
pub fn h_blockaded_pair(p: &PulseParams) -> ComplexMatrix {
    let o = p.omega * (0.5 * SQRT_2);
    ComplexMatrix::from_row_slice(2, 2, &[re(-0.5 * p.delta), o, o.conj(), re(0.5 * p.delta)])
}

/// Symmetric two-atom sector `{|11>, (|1r>+|r1>)/√2, |rr>}`.
pub fn h_symmetric_pair(p: &PulseParams) -> ComplexMatrix {
    let o = p.omega * (0.5 * SQRT_2);
    let z = Complex64::ZERO;
    ComplexMatrix::from_row_slice(
        3,
        3,
        &[re(-0.5 * p.delta), o, z, o.conj(), re(0.5 * p.delta), o, z, o.conj(), re(p.delta_rr + 1.5 * p.delta)],
    )
}

fn single_atom_3level(omega: Complex64, rydberg_energy: f64) -> ComplexMatrix {
    let mut h = ComplexMatrix::zeros(3, 3);
    let one = Level::One as usize;
    let r = Level::Rydberg as usize;
    h[(r, r)] = re(rydberg_energy);
    h[(one, r)] = omega * 0.5;
    h[(r, one)] = omega.conj() * 0.5;
    h
}

/// Nine-state two-atom Hamiltonian with coupling `omega` in place of `p.omega`.
pub fn h_full_with_omega(omega: Complex64, p: &PulseParams, d: &AtomDetunings) -> ComplexMatrix {
    let id = ComplexMatrix::identity(3, 3);
    let h1 = single_atom_3level(omega, p.delta + d.d1);
    let h2 = single_atom_3level(omega, p.delta + d.d2);
    let mut h = h1.kronecker(&id) + id.kronecker(&h2);
    let rr = basis_index(Level::Rydberg, Level::Rydberg);
    h[(rr, rr)] += p.delta_rr;
    h
}

/// Nine-state two-atom Hamiltonian in the natural frame.
pub fn h_full(p: &PulseParams, d: &AtomDetunings) -> ComplexMatrix {
    h_full_with_omega(p.omega, p, d)
}

/// Normalized erf switching profile `Ω(t)/Ω` for a pulse of length
/// `duration` with edge width `delta_t`.
pub fn erf_envelope(t: f64, duration: f64, delta_t: f64) -> f64 {
    let edge = if t < 0.5 * duration { t } else { duration - t };
    0.5 * (1.0 + libm::erf(edge / (SQRT_2 * delta_t) - 3.0))
}

/// Time-dependent coupling of an erf-edged pulse.
pub fn shaped_omega(t: f64, p: &PulseParams) -> Result<Complex64> {
    match p.shape {
        PulseShape::ErfEdges { delta_t } => Ok(p.omega * erf_envelope(t, p.duration, delta_t)),
        PulseShape::Square => Err(Error::invalid("shaped_omega requires an erf-edged pulse")),
    }
}

/// Coupling at time `t` for any pulse shape (square pulses are constant on
/// `[0, duration]`).
pub fn omega_at(t: f64, p: &PulseParams) -> Complex64 {
    match p.shape {
        PulseShape::Square => p.omega,
        PulseShape::ErfEdges { delta_t } => p.omega * erf_envelope(t, p.duration, delta_t),
    }
}

/// Length of each erf edge after which the envelope equals 1 to double
/// precision (`erfc(6) ≈ 2e-17`).
pub fn erf_edge_length(delta_t: f64) -> f64 {
    9.0 * SQRT_2 * delta_t
}

/// Propagator of the full two-atom model over `[t0, t1]` for `p.shape`.
///
/// Square pulses use the spectral propagator. Erf pulses integrate the two
/// edges with steps no larger than `min(dt_max, Δ_T/20)` and use the
/// spectral propagator on the plateau, where the envelope is exactly 1.
pub fn full_propagator_between(p: &PulseParams, d: &AtomDetunings, t0: f64, t1: f64, dt_max: f64) -> Result<ComplexMatrix> {
    p.validate()?;
    if !(t0 >= 0.0 && t1 >= t0) {
        return Err(Error::invalid(format!("invalid propagation interval [{t0}, {t1}]")));
    }
    match p.shape {
        PulseShape::Square => numkernel::propagator(&h_full(p, d), t1 - t0),
        PulseShape::ErfEdges { delta_t } => {
            let h_of_t = |s: f64| h_full_with_omega(omega_at(s, p), p, d);
            let edge_dt = dt_max.min(delta_t / 20.0);
            let edge = erf_edge_length(delta_t);
            let total = p.duration;
            if 2.0 * edge >= total {
                return numkernel::evolve_interval(h_of_t, t0, t1, edge_dt);
            }
            let mut u = ComplexMatrix::identity(FULL_DIM, FULL_DIM);
            // rising edge, plateau, falling edge, each clipped to [t0, t1]
            let (a, b) = (t0.max(0.0), t1.min(edge));
            if b > a {
                u = numkernel::evolve_interval(h_of_t, a, b, edge_dt)? * u;
            }
            let (a, b) = (t0.max(edge), t1.min(total - edge));
            if b > a {
                u = numkernel::propagator(&h_full(p, d), b - a)? * u;
            }
            let (a, b) = (t0.max(total - edge), t1);
            if b > a {
                u = numkernel::evolve_interval(h_of_t, a, b, edge_dt)? * u;
            }
            Ok(u)
        }
    }
}

/// Propagator over `[0, t]`.
pub fn full_propagator_until(p: &PulseParams, d: &AtomDetunings, t: f64, dt_max: f64) -> Result<ComplexMatrix> {
    full_propagator_between(p, d, 0.0, t, dt_max)
}

/// Propagator of the full two-atom model over the whole pulse.
pub fn full_propagator(p: &PulseParams, d: &AtomDetunings, dt_max: f64) -> Result<ComplexMatrix> {
    full_propagator_until(p, d, p.duration, dt_max)
}
