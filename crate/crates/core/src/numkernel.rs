//! Small dense complex linear algebra: Hermitian propagators and a
//! time-ordered integrator for driven Hamiltonians.
//!
//! All Hamiltonians here are at most 9x9 and are given in angular-frequency
//! units (ħ = 1), so `propagator(h, t)` is `exp(-i h t)`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type ComplexMatrix = DMatrix<Complex64>;

/// Relative Hermiticity tolerance, scaled by the largest entry magnitude.
pub const HERMITIAN_TOL: f64 = 1e-12;

/// Default integrator step, 0.1 ns.
pub const DEFAULT_DT_MAX: f64 = 1e-10;

/// Half-step disagreement above which time-dependent propagation is rejected.
pub const CONVERGENCE_TOL: f64 = 1e-6;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// A normalized pure state.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector(DVector<Complex64>);

impl StateVector {
    pub const NORM_TOL: f64 = 1e-10;

    /// Wraps amplitudes that are already normalized.
    pub fn new(amplitudes: DVector<Complex64>) -> Result<Self> {
        let norm_sq = amplitudes.norm_squared();
        if (norm_sq - 1.0).abs() > Self::NORM_TOL {
            return Err(Error::NotNormalized { norm_sq });
        }
        Ok(StateVector(amplitudes))
    }

    /// Normalizes arbitrary nonzero amplitudes.
    pub fn normalized(amplitudes: DVector<Complex64>) -> Result<Self> {
        let norm = amplitudes.norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::NotNormalized { norm_sq: norm * norm });
        }
        Ok(StateVector(amplitudes / Complex64::from(norm)))
    }

    pub fn from_slice(amplitudes: &[Complex64]) -> Result<Self> {
        Self::new(DVector::from_column_slice(amplitudes))
    }

    /// `|k>` in a `dim`-dimensional space.
    pub fn basis(dim: usize, k: usize) -> Self {
        let mut v = DVector::zeros(dim);
        v[k] = Complex64::new(1.0, 0.0);
        StateVector(v)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn amplitudes(&self) -> &DVector<Complex64> {
        &self.0
    }

    pub fn populations(&self) -> Vec<f64> {
        self.0.iter().map(|a| a.norm_sqr()).collect()
    }

    /// Applies `u` without renormalizing; a non-unitary `u` shows up as a
    /// norm different from one.
    pub fn evolve(&self, u: &ComplexMatrix) -> DVector<Complex64> {
        u * &self.0
    }
}

/// Largest entry of `|h - h^dagger|`.
pub fn hermitian_asymmetry(h: &ComplexMatrix) -> f64 {
    let n = h.nrows();
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((h[(i, j)] - h[(j, i)].conj()).norm());
        }
    }
    worst
}

fn max_entry(h: &ComplexMatrix) -> f64 {
    h.iter().fold(0.0_f64, |m, z| m.max(z.norm()))
}

fn check_hermitian(h: &ComplexMatrix) -> Result<()> {
    if h.nrows() != h.ncols() {
        return Err(Error::NotSquare { rows: h.nrows(), cols: h.ncols() });
    }
    let asym = hermitian_asymmetry(h);
    if asym > HERMITIAN_TOL * max_entry(h).max(1.0) {
        return Err(Error::NotHermitian { max_asymmetry: asym });
    }
    Ok(())
}

/// Connected components of the off-diagonal sparsity pattern. Each component
/// is an invariant subspace and is exponentiated on its own.
fn invariant_blocks(h: &ComplexMatrix) -> Vec<Vec<usize>> {
    let n = h.nrows();
    let mut label = vec![usize::MAX; n];
    let mut blocks = Vec::new();
    for start in 0..n {
        if label[start] != usize::MAX {
            continue;
        }
        let id = blocks.len();
        let mut members = vec![start];
        label[start] = id;
        let mut cursor = 0;
        while cursor < members.len() {
            let i = members[cursor];
            cursor += 1;
            for j in 0..n {
                if label[j] == usize::MAX && (h[(i, j)] != Complex64::ZERO || h[(j, i)] != Complex64::ZERO) {
                    label[j] = id;
                    members.push(j);
                }
            }
        }
        members.sort_unstable();
        blocks.push(members);
    }
    blocks
}

fn expm_hermitian_unchecked(h: &ComplexMatrix, t: f64) -> ComplexMatrix {
    let n = h.nrows();
    let mut u = ComplexMatrix::zeros(n, n);
    for block in invariant_blocks(h) {
        if block.len() == 1 {
            let k = block[0];
            u[(k, k)] = (-I * h[(k, k)].re * t).exp();
            continue;
        }
        let sub = ComplexMatrix::from_fn(block.len(), block.len(), |a, b| h[(block[a], block[b])]);
        let eig = SymmetricEigen::new(sub);
        let phases = DVector::from_iterator(block.len(), eig.eigenvalues.iter().map(|&l| (-I * l * t).exp()));
        let v = &eig.eigenvectors;
        let ub = v * ComplexMatrix::from_diagonal(&phases) * v.adjoint();
        for (a, &ia) in block.iter().enumerate() {
            for (b, &ib) in block.iter().enumerate() {
                u[(ia, ib)] = ub[(a, b)];
            }
        }
    }
    u
}

/// `exp(-i h t)` by spectral decomposition of the Hermitian `h`.
pub fn propagator(h: &ComplexMatrix, t: f64) -> Result<ComplexMatrix> {
    check_hermitian(h)?;
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::invalid(format!("propagation time must be >= 0, got {t}")));
    }
    if t == 0.0 {
        return Ok(ComplexMatrix::identity(h.nrows(), h.nrows()));
    }
    Ok(expm_hermitian_unchecked(h, t))
}

/// `max |u^dagger u - 1|`.
pub fn unitarity_error(u: &ComplexMatrix) -> f64 {
    let n = u.nrows();
    let g = u.adjoint() * u;
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in 0..n {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((g[(i, j)] - target).norm());
        }
    }
    worst
}

pub fn max_abs_diff(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    a.iter().zip(b.iter()).fold(0.0_f64, |m, (x, y)| m.max((x - y).norm()))
}

// Fourth-order commutator-free Magnus scheme with two exponentials per step:
// U(t+h) = exp(-i h (A1 H(c1) + A2 H(c2))) exp(-i h (A2 H(c1) + A1 H(c2))) U(t)
// at the Gauss-Legendre nodes c1, c2.
const SQRT3: f64 = 1.732_050_807_568_877_2;
const CF4_A1: f64 = (3.0 - 2.0 * SQRT3) / 12.0;
const CF4_A2: f64 = (3.0 + 2.0 * SQRT3) / 12.0;
const CF4_C1: f64 = 0.5 - SQRT3 / 6.0;
const CF4_C2: f64 = 0.5 + SQRT3 / 6.0;

fn cf4_steps<F>(h_of_t: &F, t0: f64, t1: f64, steps: usize) -> Result<ComplexMatrix>
where
    F: Fn(f64) -> ComplexMatrix,
{
    let probe = h_of_t(t0);
    check_hermitian(&probe)?;
    let n = probe.nrows();
    let mut u = ComplexMatrix::identity(n, n);
    if steps == 0 || t1 <= t0 {
        return Ok(u);
    }
    let h = (t1 - t0) / steps as f64;
    for k in 0..steps {
        let t = t0 + k as f64 * h;
        let h1 = h_of_t(t + CF4_C1 * h);
        let h2 = h_of_t(t + CF4_C2 * h);
        check_hermitian(&h1)?;
        check_hermitian(&h2)?;
        let first = &h1 * Complex64::from(CF4_A2) + &h2 * Complex64::from(CF4_A1);
        let second = &h1 * Complex64::from(CF4_A1) + &h2 * Complex64::from(CF4_A2);
        u = expm_hermitian_unchecked(&first, h) * u;
        u = expm_hermitian_unchecked(&second, h) * u;
    }
    Ok(u)
}

fn step_count(span: f64, dt_max: f64) -> usize {
    (span / dt_max).ceil().max(1.0) as usize
}

fn check_interval(t0: f64, t1: f64, dt_max: f64) -> Result<()> {
    if !(dt_max > 0.0) || !dt_max.is_finite() {
        return Err(Error::invalid(format!("dt_max must be > 0, got {dt_max}")));
    }
    if !(t1 >= t0) || !t0.is_finite() || !t1.is_finite() {
        return Err(Error::invalid(format!("invalid time interval [{t0}, {t1}]")));
    }
    Ok(())
}

/// Time-ordered propagator over `[t0, t1]` without the half-step check.
pub fn evolve_interval_unchecked<F>(h_of_t: F, t0: f64, t1: f64, dt_max: f64) -> Result<ComplexMatrix>
where
    F: Fn(f64) -> ComplexMatrix,
{
    check_interval(t0, t1, dt_max)?;
    if t1 == t0 {
        let n = h_of_t(t0).nrows();
        return Ok(ComplexMatrix::identity(n, n));
    }
    cf4_steps(&h_of_t, t0, t1, step_count(t1 - t0, dt_max))
}

/// Time-ordered propagator over `[t0, t1]`.
///
/// Integrates with steps no larger than `dt_max`, then repeats at half the
/// step and rejects the result if the two disagree by more than
/// [`CONVERGENCE_TOL`] in any entry. The half-step result is returned.
pub fn evolve_interval<F>(h_of_t: F, t0: f64, t1: f64, dt_max: f64) -> Result<ComplexMatrix>
where
    F: Fn(f64) -> ComplexMatrix,
{
    check_interval(t0, t1, dt_max)?;
    if t1 == t0 {
        let n = h_of_t(t0).nrows();
        return Ok(ComplexMatrix::identity(n, n));
    }
    let steps = step_count(t1 - t0, dt_max);
    let coarse = cf4_steps(&h_of_t, t0, t1, steps)?;
    let fine = cf4_steps(&h_of_t, t0, t1, 2 * steps)?;
    let max_diff = max_abs_diff(&coarse, &fine);
    if max_diff > CONVERGENCE_TOL {
        let dt = (t1 - t0) / steps as f64;
        return Err(Error::NotConverged { max_diff, dt, half_dt: dt / 2.0, coarse: Box::new(coarse), fine: Box::new(fine) });
    }
    Ok(fine)
}

/// Time-ordered propagator over `[0, t_end]`.
pub fn evolve_time_dependent<F>(h_of_t: F, t_end: f64, dt_max: f64) -> Result<ComplexMatrix>
where
    F: Fn(f64) -> ComplexMatrix,
{
    evolve_interval(h_of_t, 0.0, t_end, dt_max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn two_level(omega: f64, delta: f64) -> ComplexMatrix {
        ComplexMatrix::from_row_slice(2, 2, &[c(-delta / 2.0, 0.0), c(omega / 2.0, 0.0), c(omega / 2.0, 0.0), c(delta / 2.0, 0.0)])
    }

    #[test]
    fn zero_time_is_identity() {
        let h = two_level(3.0, 1.0);
        let u = propagator(&h, 0.0).unwrap();
        assert_eq!(u, ComplexMatrix::identity(2, 2));
    }

    #[test]
    fn rejects_non_hermitian_with_diagnostic() {
        let mut h = two_level(1.0, 0.5);
        h[(0, 1)] = c(0.5, 0.25);
        match propagator(&h, 1.0) {
            Err(Error::NotHermitian { max_asymmetry }) => assert!((max_asymmetry - 0.25).abs() < 1e-15),
            other => panic!("expected NotHermitian, got {other:?}"),
        }
    }

    #[test]
    fn rejects_negative_time() {
        assert!(propagator(&two_level(1.0, 1.0), -1.0).is_err());
    }

    #[test]
    fn full_rabi_cycle_returns_ground_amplitude_to_unit_modulus() {
        let omega = 2.0 * PI * 5e6;
        let delta = 2.0 * PI * 3.5e6;
        let rabi = (omega * omega + delta * delta).sqrt();
        let u = propagator(&two_level(omega, delta), 2.0 * PI / rabi).unwrap();
        assert!((u[(0, 0)].norm() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn block_diagonal_input_matches_dense_reference() {
        // Two uncoupled 2x2 blocks interleaved in a 4x4 matrix.
        let mut h = ComplexMatrix::zeros(4, 4);
        h[(0, 0)] = c(1.0, 0.0);
        h[(2, 2)] = c(-0.5, 0.0);
        h[(0, 2)] = c(0.3, 0.4);
        h[(2, 0)] = c(0.3, -0.4);
        h[(1, 1)] = c(2.0, 0.0);
        h[(3, 3)] = c(0.1, 0.0);
        h[(1, 3)] = c(0.7, 0.0);
        h[(3, 1)] = c(0.7, 0.0);
        let u = propagator(&h, 1.7).unwrap();
        // dense Taylor reference
        let mut term = ComplexMatrix::identity(4, 4);
        let mut sum = term.clone();
        let a = &h * c(0.0, -1.7);
        for k in 1..60 {
            term = &term * &a / Complex64::from(k as f64);
            sum += &term;
        }
        assert!(max_abs_diff(&u, &sum) < 1e-12);
        assert!(unitarity_error(&u) < 1e-12);
    }

    #[test]
    fn state_vector_normalization() {
        let v = DVector::from_vec(vec![c(3.0, 0.0), c(0.0, 4.0)]);
        assert!(StateVector::new(v.clone()).is_err());
        let s = StateVector::normalized(v).unwrap();
        assert!((s.amplitudes().norm() - 1.0).abs() < 1e-15);
        assert!(StateVector::normalized(DVector::zeros(3)).is_err());
    }

    #[test]
    fn unitary_evolution_preserves_norm() {
        let s = StateVector::normalized(DVector::from_vec(vec![c(0.3, 0.1), c(-0.2, 0.9)])).unwrap();
        let u = propagator(&two_level(2.0, -0.7), 3.3).unwrap();
        assert!((s.evolve(&u).norm() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn time_dependent_constant_matches_spectral() {
        let h0 = two_level(2.0 * PI * 5e6, 2.0 * PI * 3.5e6);
        let t_end = 1.2e-6;
        let u = evolve_time_dependent(|_| h0.clone(), t_end, DEFAULT_DT_MAX).unwrap();
        let exact = propagator(&h0, t_end).unwrap();
        assert!(max_abs_diff(&u, &exact) < 1e-8);
        assert!(unitarity_error(&u) < 1e-8);
    }

    #[test]
    fn time_dependent_zero_duration_is_identity() {
        let u = evolve_time_dependent(|t| two_level(1e6 * (1.0 + t), 2e5), 0.0, 1e-10).unwrap();
        assert_eq!(u, ComplexMatrix::identity(2, 2));
    }

    #[test]
    fn time_dependent_rejects_bad_step() {
        assert!(evolve_time_dependent(|_| two_level(1.0, 1.0), 1.0, 0.0).is_err());
    }

    #[test]
    fn time_dependent_reports_non_convergence() {
        // A fast chirp sampled far too coarsely.
        let h = |t: f64| two_level(1e3 * (1e3 * t).sin(), 1e3 * (7e2 * t).cos());
        match evolve_time_dependent(h, 1.0, 0.5) {
            Err(Error::NotConverged { max_diff, coarse, fine, .. }) => {
                assert!(max_diff > CONVERGENCE_TOL);
                assert_eq!(coarse.nrows(), 2);
                assert_eq!(fine.nrows(), 2);
            }
            other => panic!("expected NotConverged, got {other:?}"),
        }
    }

    #[test]
    fn integrator_is_fourth_order() {
        // Linearly chirped two-level system; halving the step should cut the
        // error by ~16x against a very fine reference.
        let h = |t: f64| two_level(2.0 + 3.0 * t, -1.0 + 4.0 * t * t);
        let reference = evolve_interval_unchecked(h, 0.0, 2.0, 1e-4).unwrap();
        let e1 = max_abs_diff(&evolve_interval_unchecked(h, 0.0, 2.0, 0.1).unwrap(), &reference);
        let e2 = max_abs_diff(&evolve_interval_unchecked(h, 0.0, 2.0, 0.05).unwrap(), &reference);
        let ratio = e1 / e2;
        assert!(ratio > 12.0 && ratio < 20.0, "error ratio {ratio}");
    }
}
