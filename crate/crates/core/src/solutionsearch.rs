//! Approximate single-pulse gate solutions.
//!
//! A pulse of length `T = 2(mπ + φ)/|δ|` returns `|00>` to `±e^{iφ}`. The
//! singly and doubly excited manifolds oscillate at `|δ|√(ξ²+1)` and
//! `|δ|√(2ξ²+1)`, so a good gate needs both to complete (nearly) whole
//! cycles. The condition functions below measure how close a given `(m, ξ)`
//! gets, and [`scan`] hunts for their extrema.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gateanalysis::{self, Convention, TargetGate};
use crate::hamiltonians::{self, AtomDetunings, PulseParams, PulseShape};
use crate::numkernel::DEFAULT_DT_MAX;
use crate::report::fmt_sig;
use crate::simplex::{self, SimplexOptions};

fn ratio(n_atoms: f64, xi: f64) -> f64 {
    (n_atoms * xi * xi + 1.0).sqrt()
}

/// CZ condition `|cos(mπ√(ξ²+1))|·cos(mπ√(2ξ²+1))`, which approaches
/// `(-1)^{m+1}` at a solution.
///
/// The modulus on the first factor keeps the sign of the doubly excited
/// factor visible, so either CZ convention (flip on `|00>` or on `|11>`)
/// counts as a solution.
pub fn f_value(m: u32, xi: f64) -> f64 {
    let mpi = m as f64 * PI;
    (mpi * ratio(1.0, xi)).cos().abs() * (mpi * ratio(2.0, xi)).cos()
}

/// The squared variant `cos²(mπ√(ξ²+1))·cos(mπ√(2ξ²+1))`.
pub fn f_value_squared(m: u32, xi: f64) -> f64 {
    let mpi = m as f64 * PI;
    (mpi * ratio(1.0, xi)).cos().powi(2) * (mpi * ratio(2.0, xi)).cos()
}

/// Controlled-phase condition
/// `cos[(mπ+φ)√(ξ²+1)] + cos[(mπ+φ)√(2ξ²+1)]`, target `2(-1)^m`.
pub fn g_value(m: u32, xi: f64, phi: f64) -> f64 {
    let arg = m as f64 * PI + phi;
    (arg * ratio(1.0, xi)).cos() + (arg * ratio(2.0, xi)).cos()
}

/// Which CZ a near-solution of the f condition implements.
pub fn cz_convention_for(m: u32, xi: f64) -> Convention {
    let c1 = (m as f64 * PI * ratio(1.0, xi)).cos();
    let parity = if m.is_multiple_of(2) { 1.0 } else { -1.0 };
    if c1 * parity < 0.0 {
        Convention::FlipOn00
    } else {
        Convention::FlipOn11
    }
}

/// `(T/τ₁, T/τ₂)` with `τ_N = 2π/Ω⁽ᴺ⁾`.
pub fn tau_ratios(m: u32, xi: f64, phi: f64) -> (f64, f64) {
    let m_eff = m as f64 + phi / PI;
    (m_eff * ratio(1.0, xi), m_eff * ratio(2.0, xi))
}

/// `T = 2(mπ + φ)/|δ|`.
pub fn gate_time(m: u32, phi: f64, delta: f64) -> Result<f64> {
    if delta == 0.0 || !delta.is_finite() {
        return Err(Error::invalid(format!("gate time needs a finite nonzero detuning, got {delta}")));
    }
    Ok(2.0 * (m as f64 * PI + phi) / delta.abs())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "kebab-case")]
pub enum Condition {
    /// CZ through [`f_value`].
    Cz,
    /// Controlled phase `φ` through [`g_value`].
    Phase { phi: f64 },
}

impl Condition {
    /// `φ = 0` selects the CZ condition.
    pub fn from_phi(phi: f64) -> Self {
        if phi == 0.0 {
            Condition::Cz
        } else {
            Condition::Phase { phi }
        }
    }

    pub fn phi(&self) -> f64 {
        match *self {
            Condition::Cz => 0.0,
            Condition::Phase { phi } => phi,
        }
    }

    pub fn value(&self, m: u32, xi: f64) -> f64 {
        match *self {
            Condition::Cz => f_value(m, xi),
            Condition::Phase { phi } => g_value(m, xi, phi),
        }
    }

    pub fn target(&self, m: u32) -> f64 {
        let parity = if m.is_multiple_of(2) { 1.0 } else { -1.0 };
        match self {
            Condition::Cz => -parity,
            Condition::Phase { .. } => 2.0 * parity,
        }
    }

    pub fn target_gate(&self, m: u32, xi: f64) -> TargetGate {
        match *self {
            Condition::Cz => TargetGate::cz(cz_convention_for(m, xi)),
            Condition::Phase { phi } => TargetGate::cphase(phi),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionCandidate {
    pub m: u32,
    pub xi: f64,
    pub phi: f64,
    pub convention: Convention,
    pub condition_value: f64,
    pub target_value: f64,
    /// `T·|δ|`.
    pub gate_time_scaled: f64,
    pub tg_over_tau1: f64,
    pub tg_over_tau2: f64,
    /// Minimum fidelity of the perfect-blockade gate.
    pub predicted_fmin: f64,
}

impl SolutionCandidate {
    pub fn new(m: u32, xi: f64, condition: &Condition) -> Self {
        let phi = condition.phi();
        let target = condition.target_gate(m, xi);
        let (tg_over_tau1, tg_over_tau2) = tau_ratios(m, xi, phi);
        SolutionCandidate {
            m,
            xi,
            phi,
            convention: target.convention,
            condition_value: condition.value(m, xi),
            target_value: condition.target(m),
            gate_time_scaled: 2.0 * (m as f64 * PI + phi),
            tg_over_tau1,
            tg_over_tau2,
            predicted_fmin: gateanalysis::min_fidelity(&gateanalysis::ideal_gate(m, xi, phi, 1.0), &target).value,
        }
    }

    pub fn target(&self) -> TargetGate {
        TargetGate { phi: if self.phi == 0.0 { PI } else { self.phi }, convention: self.convention }
    }

    /// Square pulse realizing this candidate for drive `omega` (δ > 0).
    pub fn pulse(&self, omega: f64, delta_rr: f64) -> PulseParams {
        let delta = omega / self.xi;
        PulseParams::square(omega, delta, delta_rr, self.gate_time_scaled / delta)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanOptions {
    pub m_min: u32,
    pub m_max: u32,
    pub xi_min: f64,
    pub xi_max: f64,
    pub grid_step: f64,
    pub keep: usize,
    pub condition: Condition,
}

impl Default for ScanOptions {
    fn default() -> Self {
        ScanOptions { m_min: 2, m_max: 7, xi_min: 0.0, xi_max: 4.0, grid_step: 1e-4, keep: 20, condition: Condition::Cz }
    }
}

pub const MAX_M: u32 = 20;
pub const MAX_XI: f64 = 10.0;
pub const XI_TOL: f64 = 1e-6;
/// Extrema farther than this from the target are discarded.
pub const MAX_CONDITION_GAP: f64 = 0.5;

impl ScanOptions {
    pub fn validate(&self) -> Result<()> {
        if self.m_min < 1 || self.m_min > self.m_max || self.m_max > MAX_M {
            return Err(Error::invalid(format!(
                "m range must satisfy 1 <= m_min <= m_max <= {MAX_M}, got [{}, {}]",
                self.m_min, self.m_max
            )));
        }
        if !(self.xi_min >= 0.0 && self.xi_min < self.xi_max && self.xi_max <= MAX_XI) {
            return Err(Error::invalid(format!(
                "xi range must satisfy 0 <= xi_min < xi_max <= {MAX_XI}, got [{}, {}]",
                self.xi_min, self.xi_max
            )));
        }
        if !(self.grid_step > 0.0 && self.grid_step <= 1e-3) {
            return Err(Error::invalid(format!("grid step must be in (0, 1e-3], got {}", self.grid_step)));
        }
        Ok(())
    }
}

/// Minimizes `f` on `[a, b]` to width `tol`.
fn golden_section<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// Extrema of the condition for a single `m` heading toward its target,
/// polished to [`XI_TOL`], in increasing ξ.
fn extrema_for_m(m: u32, xi_min: f64, xi_max: f64, step: f64, condition: &Condition) -> Vec<f64> {
    let target = condition.target(m);
    // minimize this to move the condition toward the target
    let cost = |xi: f64| -target.signum() * condition.value(m, xi);
    let n = ((xi_max - xi_min) / step).round() as usize;
    let grid: Vec<f64> = (0..=n).map(|k| xi_min + k as f64 * step).collect();
    let vals: Vec<f64> = grid.iter().map(|&x| cost(x)).collect();
    let slope: Vec<f64> = (1..n).map(|k| vals[k + 1] - vals[k - 1]).collect();
    let mut out = Vec::new();
    for j in 0..slope.len().saturating_sub(1) {
        // slope[j] is centred on grid point j + 1
        if slope[j] < 0.0 && slope[j + 1] >= 0.0 {
            let lo = grid[j];
            let hi = grid[(j + 3).min(n)];
            let xi = golden_section(cost, lo, hi, XI_TOL);
            if (condition.value(m, xi) - target).abs() < MAX_CONDITION_GAP {
                out.push(xi);
            }
        }
    }
    out
}

fn rank(candidates: &mut [SolutionCandidate]) {
    candidates.sort_by(|a, b| {
        b.predicted_fmin
            .total_cmp(&a.predicted_fmin)
            .then(a.tg_over_tau1.total_cmp(&b.tg_over_tau1))
            .then(a.m.cmp(&b.m))
            .then(a.xi.total_cmp(&b.xi))
    });
}

/// Near-solutions over the requested `(m, ξ)` box, best first.
pub fn scan(opts: &ScanOptions) -> Result<Vec<SolutionCandidate>> {
    opts.validate()?;
    let mut all: Vec<SolutionCandidate> = (opts.m_min..=opts.m_max)
        .into_par_iter()
        .flat_map_iter(|m| {
            extrema_for_m(m, opts.xi_min, opts.xi_max, opts.grid_step, &opts.condition)
                .into_iter()
                .map(move |xi| SolutionCandidate::new(m, xi, &opts.condition))
        })
        .collect();
    rank(&mut all);
    all.truncate(opts.keep);
    Ok(all)
}

/// The extremum for `m` closest to `xi_seed`, searched within `±radius`.
pub fn polish_near(m: u32, xi_seed: f64, radius: f64, condition: &Condition) -> Option<SolutionCandidate> {
    let lo = (xi_seed - radius).max(0.0);
    extrema_for_m(m, lo, xi_seed + radius, 1e-4, condition)
        .into_iter()
        .min_by(|a, b| (a - xi_seed).abs().total_cmp(&(b - xi_seed).abs()))
        .map(|xi| SolutionCandidate::new(m, xi, condition))
}

pub fn candidates_csv(candidates: &[SolutionCandidate]) -> String {
    let mut out = String::from("m,xi,phi,condition_value,tg_over_tau1,tg_over_tau2,predicted_fmin,convention\n");
    for c in candidates {
        let conv = match c.convention {
            Convention::FlipOn00 => "flip-on-00",
            Convention::FlipOn11 => "flip-on-11",
        };
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            c.m,
            fmt_sig(c.xi),
            fmt_sig(c.phi),
            fmt_sig(c.condition_value),
            fmt_sig(c.tg_over_tau1),
            fmt_sig(c.tg_over_tau2),
            fmt_sig(c.predicted_fmin),
            conv
        ));
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapedOptions {
    pub max_evals: usize,
    pub xi_tol: f64,
    pub time_tol: f64,
    pub xi_step: f64,
    pub time_step: f64,
    pub dt_max: f64,
}

impl Default for ShapedOptions {
    fn default() -> Self {
        ShapedOptions { max_evals: 400, xi_tol: 1e-4, time_tol: 1e-10, xi_step: 5e-3, time_step: 5e-9, dt_max: DEFAULT_DT_MAX }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapedResult {
    pub xi: f64,
    pub gate_time: f64,
    pub fmin: f64,
    pub start_fmin: f64,
    pub evals: usize,
    pub converged: bool,
    pub unimproved: bool,
}

/// Pulse with the drive of `base` and detuning `|Ω|/ξ` (sign kept), run for `t`.
pub fn pulse_at(base: &PulseParams, xi: f64, t: f64) -> PulseParams {
    let delta = base.delta.signum() * base.omega.norm() / xi;
    PulseParams { delta, duration: t, ..*base }
}

/// Finite-blockade minimum fidelity of `base` re-tuned to `(ξ, t)`.
pub fn pulse_fmin(base: &PulseParams, xi: f64, t: f64, target: &TargetGate, dt_max: f64) -> Result<f64> {
    if !(xi > 0.0 && t > 0.0) {
        return Err(Error::invalid(format!("need xi > 0 and t > 0, got ({xi}, {t})")));
    }
    let p = pulse_at(base, xi, t);
    let u = hamiltonians::full_propagator(&p, &AtomDetunings::ZERO, dt_max)?;
    let g = gateanalysis::extract_gate(&u, t, p.delta)?;
    Ok(gateanalysis::min_fidelity(&g, target).value)
}

/// Square-pulse gate time for `(m, ξ)` lengthened by the area lost in two
/// erf edges of width `delta_t`.
pub fn shaped_start_time(m: u32, phi: f64, xi: f64, omega: f64, delta_t: f64) -> Result<f64> {
    Ok(gate_time(m, phi, omega / xi)? + 2.0 * 3.0 * std::f64::consts::SQRT_2 * delta_t)
}

/// Maximizes the finite-blockade minimum fidelity over `(ξ, T)` by
/// Nelder-Mead, starting from `(xi0, t0)`. Works for any pulse shape.
pub fn optimize_pulse(base: &PulseParams, xi0: f64, t0: f64, target: &TargetGate, opts: &ShapedOptions) -> Result<ShapedResult> {
    base.validate()?;
    let start_fmin = pulse_fmin(base, xi0, t0, target, opts.dt_max)?;
    // time in units of time_step keeps the simplex well scaled
    let t_unit = opts.time_step;
    let objective = |x: &[f64]| match pulse_fmin(base, x[0], x[1] * t_unit, target, opts.dt_max) {
        Ok(f) => -f,
        Err(_) => f64::INFINITY,
    };
    let simplex_opts = SimplexOptions {
        initial_step: vec![opts.xi_step, 1.0],
        x_tol: vec![opts.xi_tol, opts.time_tol / t_unit],
        f_tol: 1e-9,
        max_evals: opts.max_evals,
    };
    let r = simplex::minimize(objective, &[xi0, t0 / t_unit], &simplex_opts);
    let fmin = -r.fx;
    if fmin < start_fmin {
        return Ok(ShapedResult {
            xi: xi0,
            gate_time: t0,
            fmin: start_fmin,
            start_fmin,
            evals: r.evals,
            converged: r.converged,
            unimproved: true,
        });
    }
    Ok(ShapedResult { xi: r.x[0], gate_time: r.x[1] * t_unit, fmin, start_fmin, evals: r.evals, converged: r.converged, unimproved: false })
}

/// [`optimize_pulse`] restricted to erf-edged pulses.
pub fn optimize_shaped(base: &PulseParams, xi0: f64, t0: f64, target: &TargetGate, opts: &ShapedOptions) -> Result<ShapedResult> {
    match base.shape {
        PulseShape::ErfEdges { .. } => optimize_pulse(base, xi0, t0, target, opts),
        PulseShape::Square => Err(Error::invalid("shaped optimization needs an erf-edged pulse")),
    }
}

/// `(m, ξ)` seeds of the five reference solutions.
pub const TABLE_SEEDS: [(u32, f64); 5] = [(2, 3.840), (3, 1.743), (4, 1.428), (4, 2.558), (7, 1.894)];

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn no_drive_values() {
        for m in 1..10u32 {
            let parity = if m.is_multiple_of(2) { 1.0 } else { -1.0 };
            assert!((f_value(m, 0.0) - parity).abs() < 1e-12);
            assert!((f_value_squared(m, 0.0) - parity).abs() < 1e-12);
            assert!((g_value(m, 0.0, 0.0) - 2.0 * parity).abs() < 1e-12);
        }
    }

    #[test]
    fn squared_form_relation() {
        for k in 0..400 {
            let xi = k as f64 * 0.01;
            for m in 1..8 {
                let c1 = (m as f64 * PI * (xi * xi + 1.0).sqrt()).cos().abs();
                assert!((f_value_squared(m, xi) - c1 * f_value(m, xi)).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn ranges() {
        for k in 0..1000 {
            let xi = k as f64 * 0.01;
            assert!(f_value(5, xi).abs() <= 1.0);
            assert!(g_value(3, xi, 1.0).abs() <= 2.0);
        }
    }

    #[test]
    fn g_at_cphase_example() {
        assert!((g_value(2, 2.0, 2.0 * PI / 3.0) - 1.993).abs() < 3e-3);
    }

    #[test]
    fn g_with_pi_is_f_condition_one_step_up() {
        // g(m, ξ, π) hits 2(-1)^m exactly when both cosines at m+1 equal (-1)^m
        for k in 0..4000 {
            let xi = k as f64 * 1e-3;
            for m in 1..6 {
                let mp = (m + 1) as f64 * PI;
                let c1 = (mp * (xi * xi + 1.0).sqrt()).cos();
                let c2 = (mp * (2.0 * xi * xi + 1.0).sqrt()).cos();
                assert!((g_value(m, xi, PI) - (c1 + c2)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn functions_of_xi_only() {
        // build the ratios from Ω⁽ᴺ⁾/|δ| with either sign of δ
        let omega = 2.0 * PI * 5e6;
        for delta in [2.0 * PI * 3.5e6, -2.0 * PI * 3.5e6] {
            let xi = omega / f64::abs(delta);
            let r1 = hamiltonians::effective_rabi(1, omega.into(), delta) / delta.abs();
            let r2 = hamiltonians::effective_rabi(2, omega.into(), delta) / delta.abs();
            let f = (4.0 * PI * r1).cos().abs() * (4.0 * PI * r2).cos();
            assert!((f - f_value(4, xi)).abs() < 1e-12);
            assert_eq!(f_value(4, xi), f_value(4, -xi));
        }
    }

    #[test]
    fn gate_time_examples() {
        let t = gate_time(4, 0.0, 2.0 * PI * 3.5e6).unwrap();
        assert!((t - 1.142857e-6).abs() < 1e-12);
        assert!((gate_time(8, 0.0, 3.0).unwrap() - 2.0 * gate_time(4, 0.0, 3.0).unwrap()).abs() < 1e-15);
        assert!(gate_time(4, 0.0, 0.0).is_err());
        let t = gate_time(2, 2.0 * PI / 3.0, 2.0 * PI * 2.5e6).unwrap();
        assert!((t - 1.0667e-6).abs() < 1e-9);
    }

    #[test]
    fn tau_ratio_consistency() {
        let c = SolutionCandidate::new(4, 1.428, &Condition::Cz);
        let (a, b) = tau_ratios(c.m, c.xi, c.phi);
        assert!((a - c.tg_over_tau1).abs() < 1e-9 && (b - c.tg_over_tau2).abs() < 1e-9);
        // T/τ₁ = T·Ω⁽¹⁾/2π with T = 2mπ/δ
        let delta = 1.7;
        let omega1 = hamiltonians::effective_rabi(1, (1.428 * delta).into(), delta);
        assert!((gate_time(4, 0.0, delta).unwrap() * omega1 / (2.0 * PI) - a).abs() < 1e-9);
    }

    #[test]
    fn conventions() {
        assert_eq!(cz_convention_for(4, 1.428), Convention::FlipOn00);
        assert_eq!(cz_convention_for(3, 1.743), Convention::FlipOn00);
        // the ideal gate matches its assigned target better than the other one
        for (m, xi) in TABLE_SEEDS {
            let g = gateanalysis::ideal_gate(m, xi, 0.0, 1.0);
            let own = cz_convention_for(m, xi);
            let other = if own == Convention::FlipOn00 { Convention::FlipOn11 } else { Convention::FlipOn00 };
            let f_own = gateanalysis::min_fidelity(&g, &TargetGate::cz(own)).value;
            let f_other = gateanalysis::min_fidelity(&g, &TargetGate::cz(other)).value;
            assert!(f_own > 0.9 && f_other < 0.1, "m={m} xi={xi}: {f_own} {f_other}");
        }
    }

    #[test]
    fn golden_section_quadratic() {
        let x = golden_section(|x| (x - 0.3).powi(2), 0.0, 1.0, 1e-9);
        assert!((x - 0.3).abs() < 1e-8);
    }

    #[test]
    fn negligible_drive_gives_nothing() {
        let opts = ScanOptions { m_min: 1, m_max: 7, xi_max: 0.01, ..ScanOptions::default() };
        assert!(scan(&opts).unwrap().is_empty());
    }

    #[test]
    fn scan_validation() {
        let bad = [
            ScanOptions { m_min: 0, ..ScanOptions::default() },
            ScanOptions { m_max: 21, ..ScanOptions::default() },
            ScanOptions { xi_max: 11.0, ..ScanOptions::default() },
            ScanOptions { grid_step: 1e-2, ..ScanOptions::default() },
            ScanOptions { m_min: 5, m_max: 3, ..ScanOptions::default() },
        ];
        for opts in bad {
            assert!(scan(&opts).is_err(), "{opts:?}");
        }
    }

    #[test]
    fn ranking_order() {
        let cands = scan(&ScanOptions { keep: 100, ..ScanOptions::default() }).unwrap();
        assert!(cands.windows(2).all(|w| w[0].predicted_fmin >= w[1].predicted_fmin));
        assert!(cands.iter().all(|c| (c.condition_value - c.target_value).abs() < MAX_CONDITION_GAP));
    }

    #[test]
    fn csv_header_and_rows() {
        let c = vec![SolutionCandidate::new(4, 1.4284, &Condition::Cz)];
        let csv = candidates_csv(&c);
        assert!(csv.starts_with("m,xi,phi,condition_value,tg_over_tau1,tg_over_tau2,predicted_fmin"));
        assert_eq!(csv.lines().count(), 2);
        assert!(!csv.contains('\r'));
    }
}
