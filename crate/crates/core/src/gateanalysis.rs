//! Gates on the four computational states and their fidelities.
//!
//! The fidelity of an implemented gate `G` with respect to a target `T` on a
//! pure input `ψ` is the unnormalized overlap `|<ψ|T^† G|ψ>|²`. Population
//! left in Rydberg levels makes the columns of `G` sub-normalized and so
//! costs fidelity. No global phase is optimized away; since the overlap is
//! taken in modulus, a common phase on `G` never matters.

use std::f64::consts::PI;

use nalgebra::{DVector, Matrix4};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonians::{COMPUTATIONAL, FULL_DIM};
use crate::numkernel::{ComplexMatrix, StateVector};
use crate::report::Histogram;
use crate::simplex::{self, SimplexOptions};

/// Off-diagonal magnitude above which a gate is not treated as diagonal.
pub const DIAGONAL_TOL: f64 = 1e-9;

pub const DEFAULT_HISTOGRAM_BINS: usize = 50;

/// A 4x4 operator on `{|00>, |01>, |10>, |11>}` plus the population each
/// basis state loses to states outside that subspace.
#[derive(Debug, Clone, PartialEq)]
pub struct GateMatrix {
    pub entries: Matrix4<Complex64>,
    pub leakage: [f64; 4],
}

impl GateMatrix {
    /// A diagonal gate; leakage is whatever norm the entries are missing.
    pub fn from_diagonal(diag: [Complex64; 4]) -> Self {
        let mut entries = Matrix4::zeros();
        let mut leakage = [0.0; 4];
        for k in 0..4 {
            entries[(k, k)] = diag[k];
            leakage[k] = (1.0 - diag[k].norm_sqr()).max(0.0);
        }
        GateMatrix { entries, leakage }
    }

    pub fn diagonal(&self) -> [Complex64; 4] {
        [self.entries[(0, 0)], self.entries[(1, 1)], self.entries[(2, 2)], self.entries[(3, 3)]]
    }

    pub fn max_off_diagonal(&self) -> f64 {
        let mut worst = 0.0_f64;
        for i in 0..4 {
            for j in 0..4 {
                if i != j {
                    worst = worst.max(self.entries[(i, j)].norm());
                }
            }
        }
        worst
    }

    pub fn is_diagonal(&self) -> bool {
        self.max_off_diagonal() < DIAGONAL_TOL
    }

    /// Multiplies every entry by `e^{iθ}`.
    pub fn rotated(&self, theta: f64) -> Self {
        GateMatrix { entries: self.entries * Complex64::from_polar(1.0, theta), leakage: self.leakage }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Convention {
    /// `diag{e^{iφ}, 1, 1, 1}`.
    FlipOn00,
    /// `diag{1, 1, 1, e^{iφ}}`.
    FlipOn11,
}

/// A controlled-phase target. CZ is `phi = π`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TargetGate {
    pub phi: f64,
    pub convention: Convention,
}

impl TargetGate {
    pub fn cphase(phi: f64) -> Self {
        TargetGate { phi, convention: Convention::FlipOn00 }
    }

    pub fn cz(convention: Convention) -> Self {
        TargetGate { phi: PI, convention }
    }

    pub fn diagonal(&self) -> [Complex64; 4] {
        let one = Complex64::new(1.0, 0.0);
        let flip = Complex64::from_polar(1.0, self.phi);
        match self.convention {
            Convention::FlipOn00 => [flip, one, one, one],
            Convention::FlipOn11 => [one, one, one, flip],
        }
    }

    /// Multiplies the target by `e^{iθ}`, as a full phase on every entry.
    pub fn rotated_diagonal(&self, theta: f64) -> [Complex64; 4] {
        let r = Complex64::from_polar(1.0, theta);
        self.diagonal().map(|z| z * r)
    }
}

/// Computational block of a nine-state propagator, with the `e^{iδt/2}`
/// frame factor applied so that `|00>` carries `e^{iδt/2}`.
pub fn extract_gate(u: &ComplexMatrix, t: f64, delta: f64) -> Result<GateMatrix> {
    if u.nrows() != FULL_DIM || u.ncols() != FULL_DIM {
        return Err(Error::Dimension { expected: FULL_DIM, actual: u.nrows().max(u.ncols()) });
    }
    let frame = Complex64::from_polar(1.0, 0.5 * delta * t);
    let mut entries = Matrix4::zeros();
    let mut leakage = [0.0; 4];
    for (b, &col) in COMPUTATIONAL.iter().enumerate() {
        let mut kept = 0.0;
        for (a, &row) in COMPUTATIONAL.iter().enumerate() {
            entries[(a, b)] = frame * u[(row, col)];
            kept += u[(row, col)].norm_sqr();
        }
        leakage[b] = (1.0 - kept).max(0.0);
    }
    Ok(GateMatrix { entries, leakage })
}

/// The perfect-blockade gate for gate time `T = 2(mπ + φ)/|δ|` at drive
/// ratio `ξ`. Only the products `Ω⁽ᴺ⁾T` enter, so no absolute frequency is
/// needed.
pub fn ideal_gate(m: u32, xi: f64, phi: f64, sign_delta: f64) -> GateMatrix {
    let s = sign_delta.signum();
    let half_phase = m as f64 * PI + phi;
    let amp = |n_atoms: f64| {
        let ratio = (n_atoms * xi * xi + 1.0).sqrt();
        let (sn, cs) = (half_phase * ratio).sin_cos();
        Complex64::new(cs, s * sn / ratio)
    };
    let a1 = amp(1.0);
    let a2 = amp(2.0);
    GateMatrix::from_diagonal([Complex64::from_polar(1.0, s * half_phase), a1, a1, a2])
}

/// Phase `θ` such that `e^{iθ}·T` matches `G` on its largest-magnitude
/// diagonal entry. Reported alongside comparisons; fidelities do not use it.
pub fn reference_phase(g: &GateMatrix, target: &TargetGate) -> f64 {
    let d = g.diagonal();
    let t = target.diagonal();
    let k = (0..4).max_by(|&a, &b| d[a].norm().total_cmp(&d[b].norm())).unwrap_or(0);
    (d[k] * t[k].conj()).arg()
}

fn check_state(psi: &StateVector) -> Result<()> {
    if psi.dim() != 4 {
        return Err(Error::Dimension { expected: 4, actual: psi.dim() });
    }
    let norm_sq = psi.amplitudes().norm_squared();
    if (norm_sq - 1.0).abs() > 1e-8 {
        return Err(Error::NotNormalized { norm_sq });
    }
    Ok(())
}

fn overlap_operator(g: &GateMatrix, target: &TargetGate) -> Matrix4<Complex64> {
    let t = target.diagonal();
    let mut m = g.entries;
    for i in 0..4 {
        for j in 0..4 {
            m[(i, j)] *= t[i].conj();
        }
    }
    m
}

fn overlap_sq(m: &Matrix4<Complex64>, psi: &[Complex64]) -> f64 {
    let mut acc = Complex64::ZERO;
    for i in 0..4 {
        let mut row = Complex64::ZERO;
        for j in 0..4 {
            row += m[(i, j)] * psi[j];
        }
        acc += psi[i].conj() * row;
    }
    acc.norm_sqr()
}

/// `|<ψ|T^† G|ψ>|²`.
pub fn state_fidelity(g: &GateMatrix, target: &TargetGate, psi: &StateVector) -> Result<f64> {
    check_state(psi)?;
    let m = overlap_operator(g, target);
    Ok(overlap_sq(&m, psi.amplitudes().as_slice()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MinMethod {
    ConvexHull,
    Multistart,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MinFidelity {
    pub value: f64,
    pub method: MinMethod,
}

fn cross(a: Complex64, b: Complex64) -> f64 {
    a.re * b.im - a.im * b.re
}

/// Squared distance from the origin to the convex hull of `points`, checked
/// over every vertex, every edge and every triangle.
pub fn hull_distance_sq(points: &[Complex64]) -> f64 {
    let mut best = points.iter().map(|p| p.norm_sqr()).fold(f64::INFINITY, f64::min);
    let n = points.len();
    for i in 0..n {
        for j in i + 1..n {
            let (a, d) = (points[i], points[j] - points[i]);
            let len_sq = d.norm_sqr();
            if len_sq == 0.0 {
                continue;
            }
            let s = -(a.conj() * d).re / len_sq;
            if s > 0.0 && s < 1.0 {
                best = best.min((a + d * s).norm_sqr());
            }
        }
    }
    for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                let (a, b, c) = (points[i], points[j], points[k]);
                let s1 = cross(b - a, -a);
                let s2 = cross(c - b, -b);
                let s3 = cross(a - c, -c);
                let inside = (s1 >= 0.0 && s2 >= 0.0 && s3 >= 0.0) || (s1 <= 0.0 && s2 <= 0.0 && s3 <= 0.0);
                if inside && (s1 != 0.0 || s2 != 0.0 || s3 != 0.0) {
                    return 0.0;
                }
            }
        }
    }
    best
}

/// Minimum fidelity by direct minimization over normalized `ψ ∈ C⁴` from
/// `starts` random starting points.
pub fn min_fidelity_multistart(g: &GateMatrix, target: &TargetGate, starts: usize, seed: u64) -> f64 {
    let m = overlap_operator(g, target);
    let objective = |z: &[f64]| {
        let psi: Vec<Complex64> = (0..4).map(|k| Complex64::new(z[2 * k], z[2 * k + 1])).collect();
        let norm_sq: f64 = psi.iter().map(|a| a.norm_sqr()).sum();
        if norm_sq < 1e-300 {
            return f64::INFINITY;
        }
        overlap_sq(&m, &psi) / (norm_sq * norm_sq)
    };
    let opts = SimplexOptions { initial_step: vec![0.25; 8], x_tol: vec![1e-9; 8], f_tol: 1e-14, max_evals: 40_000 };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best = f64::INFINITY;
    for _ in 0..starts {
        let z0: Vec<f64> = (0..8).map(|_| rng.random_range(-1.0..1.0)).collect();
        let mut r = simplex::minimize(objective, &z0, &opts);
        // one restart from the converged point shakes off premature collapse
        let r2 = simplex::minimize(objective, &r.x, &opts);
        if r2.fx < r.fx {
            r = r2;
        }
        best = best.min(r.fx);
    }
    best
}

pub const MULTISTART_STARTS: usize = 32;

/// Exact minimum of [`state_fidelity`] over all pure inputs.
///
/// For a diagonal gate, `<ψ|T^†G|ψ> = Σ p_k u_k` with `u_k = T_kk^* G_kk` and
/// `p` on the probability simplex, so the minimum is the squared distance
/// from the origin to the convex hull of the `u_k`. Gates with off-diagonal
/// entries fall back to [`min_fidelity_multistart`].
pub fn min_fidelity(g: &GateMatrix, target: &TargetGate) -> MinFidelity {
    if g.is_diagonal() {
        let t = target.diagonal();
        let d = g.diagonal();
        let u: Vec<Complex64> = (0..4).map(|k| t[k].conj() * d[k]).collect();
        MinFidelity { value: hull_distance_sq(&u), method: MinMethod::ConvexHull }
    } else {
        MinFidelity { value: min_fidelity_multistart(g, target, MULTISTART_STARTS, 0x5eed), method: MinMethod::Multistart }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Sampler {
    /// Real and imaginary parts uniform on `[-1, 1]`, then normalized.
    BoxUniform,
    /// Normalized complex Gaussian amplitudes.
    Haar,
}

fn draw_state(rng: &mut ChaCha8Rng, sampler: Sampler) -> StateVector {
    loop {
        let amps: Vec<Complex64> = (0..4)
            .map(|_| match sampler {
                Sampler::BoxUniform => Complex64::new(rng.random_range(-1.0..=1.0), rng.random_range(-1.0..=1.0)),
                Sampler::Haar => Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)),
            })
            .collect();
        if let Ok(s) = StateVector::normalized(DVector::from_vec(amps)) {
            return s;
        }
    }
}

/// `n` random two-qubit states, deterministic in `seed`.
pub fn sample_states(n: usize, sampler: Sampler, seed: u64) -> Vec<StateVector> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| draw_state(&mut rng, sampler)).collect()
}

/// Per-state fidelities; evaluated in parallel, returned in input order.
pub fn state_fidelities(g: &GateMatrix, target: &TargetGate, states: &[StateVector]) -> Vec<f64> {
    let m = overlap_operator(g, target);
    states.par_iter().map(|s| overlap_sq(&m, s.amplitudes().as_slice())).collect()
}

/// Mean fidelity over `states`, summed in index order.
pub fn average_fidelity(g: &GateMatrix, target: &TargetGate, states: &[StateVector]) -> f64 {
    let f = state_fidelities(g, target, states);
    f.iter().sum::<f64>() / f.len() as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FidelityReport {
    pub f_avg: f64,
    pub f_min: f64,
    pub min_method: MinMethod,
    /// Smallest fidelity among the sampled states (never below `f_min`).
    pub sampled_min: f64,
    pub n_samples: usize,
    pub sampler: Sampler,
    pub seed: u64,
    pub reference_phase: f64,
    pub histogram: Histogram,
}

/// Average over `n` sampled states, exact minimum, and a histogram of the
/// sampled fidelities.
pub fn fidelity_report(g: &GateMatrix, target: &TargetGate, n: usize, sampler: Sampler, seed: u64) -> FidelityReport {
    let states = sample_states(n, sampler, seed);
    let f = state_fidelities(g, target, &states);
    let f_avg = f.iter().sum::<f64>() / f.len().max(1) as f64;
    let min = min_fidelity(g, target);
    FidelityReport {
        f_avg,
        f_min: min.value,
        min_method: min.method,
        sampled_min: f.iter().copied().fold(f64::INFINITY, f64::min),
        n_samples: n,
        sampler,
        seed,
        reference_phase: reference_phase(g, target),
        histogram: Histogram::new(&f, DEFAULT_HISTOGRAM_BINS, 1.0),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn diag(d: [Complex64; 4]) -> GateMatrix {
        GateMatrix::from_diagonal(d)
    }

    #[test]
    fn target_fidelity_is_one() {
        let t = TargetGate::cz(Convention::FlipOn00);
        let g = diag(t.diagonal());
        for s in sample_states(200, Sampler::Haar, 3) {
            assert!((state_fidelity(&g, &t, &s).unwrap() - 1.0).abs() < 1e-12);
        }
        assert!((min_fidelity(&g, &t).value - 1.0).abs() < 1e-15);
    }

    #[test]
    fn opposite_cz_conventions() {
        let g = diag(TargetGate::cz(Convention::FlipOn11).diagonal());
        let t = TargetGate::cz(Convention::FlipOn00);
        let basis01 = StateVector::basis(4, 1);
        assert!((state_fidelity(&g, &t, &basis01).unwrap() - 1.0).abs() < 1e-15);
        let plus = StateVector::normalized(DVector::from_vec(vec![c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)])).unwrap();
        assert!(state_fidelity(&g, &t, &plus).unwrap().abs() < 1e-15);
    }

    #[test]
    fn rejects_unnormalized_state() {
        let g = diag([c(1.0, 0.0); 4]);
        let t = TargetGate::cphase(0.0);
        let bad = StateVector::basis(4, 0);
        let mut amps = bad.amplitudes().clone();
        amps[0] = c(1.1, 0.0);
        // StateVector::new would refuse; build through normalized and scale
        let s = StateVector::normalized(amps).unwrap();
        assert!(state_fidelity(&g, &t, &s).is_ok());
        assert!(state_fidelity(&g, &t, &StateVector::basis(2, 0)).is_err());
    }

    #[test]
    fn hull_containing_origin_gives_zero() {
        let g = diag([c(1.0, 0.0), c(0.0, 1.0), c(-1.0, 0.0), c(0.0, -1.0)]);
        assert_eq!(min_fidelity(&g, &TargetGate::cphase(0.0)).value, 0.0);
    }

    #[test]
    fn hull_edge_minimum() {
        // segment from 1+i to 1-i: closest point is 1
        let pts = [c(1.0, 1.0), c(1.0, -1.0)];
        assert!((hull_distance_sq(&pts) - 1.0).abs() < 1e-15);
        let pts = [c(2.0, 0.0), c(3.0, 0.0), c(2.5, 1.0)];
        assert!((hull_distance_sq(&pts) - 4.0).abs() < 1e-15);
    }

    #[test]
    fn ideal_gate_without_drive_is_phase_only() {
        for m in 1..6 {
            let g = ideal_gate(m, 0.0, 0.0, 1.0);
            for z in g.diagonal() {
                assert!((z.norm() - 1.0).abs() < 1e-12);
            }
            assert!((g.diagonal()[0] - c((-1.0f64).powi(m as i32), 0.0)).norm() < 1e-12);
            assert!(g.leakage.iter().all(|&l| l < 1e-12));
        }
    }

    #[test]
    fn extract_gate_rejects_wrong_dimension() {
        assert!(matches!(extract_gate(&ComplexMatrix::identity(4, 4), 1.0, 1.0), Err(Error::Dimension { expected: 9, .. })));
    }

    #[test]
    fn sampler_determinism_and_normalization() {
        let a = sample_states(2000, Sampler::BoxUniform, 11);
        let b = sample_states(2000, Sampler::BoxUniform, 11);
        assert_eq!(a, b);
        assert!(a.iter().all(|s| (s.amplitudes().norm_squared() - 1.0).abs() < 1e-12));
        assert_ne!(a, sample_states(2000, Sampler::BoxUniform, 12));
    }

    #[test]
    fn haar_populations_are_uniform_on_average() {
        let states = sample_states(100_000, Sampler::Haar, 5);
        for k in 0..4 {
            let mean: f64 = states.iter().map(|s| s.amplitudes()[k].norm_sqr()).sum::<f64>() / states.len() as f64;
            assert!((mean - 0.25).abs() < 0.005, "basis {k}: {mean}");
        }
    }

    #[test]
    fn global_phase_invariance() {
        let g = ideal_gate(4, 1.428, 0.0, 1.0);
        let t = TargetGate::cz(Convention::FlipOn00);
        let states = sample_states(500, Sampler::BoxUniform, 2);
        let base_avg = average_fidelity(&g, &t, &states);
        let base_min = min_fidelity(&g, &t).value;
        let gr = g.rotated(0.83);
        assert!((average_fidelity(&gr, &t, &states) - base_avg).abs() < 1e-12);
        assert!((min_fidelity(&gr, &t).value - base_min).abs() < 1e-12);
        // rotating the target alongside also leaves everything unchanged
        let tr = t.rotated_diagonal(0.83);
        let u: Vec<Complex64> = (0..4).map(|k| tr[k].conj() * gr.diagonal()[k]).collect();
        assert!((hull_distance_sq(&u) - base_min).abs() < 1e-12);
    }

    #[test]
    fn reference_phase_of_negated_target() {
        let t = TargetGate::cz(Convention::FlipOn00);
        let g = diag(t.diagonal()).rotated(PI);
        assert!((reference_phase(&g, &t).abs() - PI).abs() < 1e-12);
    }

    #[test]
    fn report_orders_min_and_avg() {
        let g = ideal_gate(3, 1.743, 0.0, 1.0);
        let t = TargetGate::cz(Convention::FlipOn11);
        let r = fidelity_report(&g, &t, 2000, Sampler::BoxUniform, 1);
        assert!(0.0 <= r.f_min && r.f_min <= r.sampled_min && r.sampled_min <= r.f_avg && r.f_avg <= 1.0);
        assert_eq!(r.histogram.total(), 2000);
        assert_eq!(r.min_method, MinMethod::ConvexHull);
    }

    #[test]
    fn non_diagonal_gate_uses_multistart() {
        let mut g = ideal_gate(4, 1.428, 0.0, 1.0);
        g.entries[(1, 2)] = c(0.05, 0.0);
        g.entries[(2, 1)] = c(-0.05, 0.0);
        let r = min_fidelity(&g, &TargetGate::cz(Convention::FlipOn00));
        assert_eq!(r.method, MinMethod::Multistart);
        assert!(r.value > 0.9 && r.value <= 1.0);
    }
}
