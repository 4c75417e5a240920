//! Quasi-static noise: Monte Carlo over laser and Doppler perturbations,
//! and deterministic parameter sweeps.
//!
//! Laser detuning and coupling errors are common to both atoms; Doppler
//! shifts are drawn separately for each atom. Every trial propagates for
//! the nominal gate time and extracts the gate in the nominal laser frame.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gateanalysis::{self, GateMatrix, Sampler, TargetGate};
use crate::hamiltonians::{self, AtomDetunings, PulseParams};
use crate::numkernel::{StateVector, DEFAULT_DT_MAX};
use crate::report::{fmt_sig, Histogram};

pub const PANEL_SIZE: usize = 256;
/// Number of sampled states for deterministic average fidelities.
pub const FULL_PANEL_SIZE: usize = 2000;
const PANEL_SALT: u64 = 0x9e37_79b9_7f4a_7c15;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseConfig {
    /// Common-mode detuning noise, rad/s.
    pub sigma_delta: f64,
    /// Common-mode coupling noise, rad/s.
    pub sigma_omega: f64,
    /// Per-atom Doppler shift, rad/s.
    pub sigma_doppler: f64,
    pub trials: usize,
    pub seed: u64,
}

impl NoiseConfig {
    pub fn doppler(sigma: f64, trials: usize, seed: u64) -> Self {
        NoiseConfig { sigma_delta: 0.0, sigma_omega: 0.0, sigma_doppler: sigma, trials, seed }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, s) in [("sigma_delta", self.sigma_delta), ("sigma_omega", self.sigma_omega), ("sigma_doppler", self.sigma_doppler)] {
            if !(s >= 0.0 && s.is_finite()) {
                return Err(Error::invalid(format!("{name} must be finite and >= 0, got {s}")));
            }
        }
        if self.trials == 0 {
            return Err(Error::invalid("trials must be >= 1"));
        }
        Ok(())
    }

    /// Perturbations for trial `k`, drawn from its own ChaCha stream.
    pub fn draw(&self, k: u64) -> NoiseDraw {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(k);
        let mut z = || -> f64 { StandardNormal.sample(&mut rng) };
        NoiseDraw {
            d_delta: self.sigma_delta * z(),
            d_omega: self.sigma_omega * z(),
            doppler1: self.sigma_doppler * z(),
            doppler2: self.sigma_doppler * z(),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct NoiseDraw {
    pub d_delta: f64,
    pub d_omega: f64,
    pub doppler1: f64,
    pub doppler2: f64,
}

impl NoiseDraw {
    pub const ZERO: NoiseDraw = NoiseDraw { d_delta: 0.0, d_omega: 0.0, doppler1: 0.0, doppler2: 0.0 };

    /// `p` with the common-mode shifts applied; `dΩ` changes `|Ω|` and
    /// keeps its phase.
    pub fn perturb(&self, p: &PulseParams) -> PulseParams {
        let mag = p.omega.norm();
        let omega = if mag > 0.0 { p.omega * (1.0 + self.d_omega / mag) } else { Complex64::new(self.d_omega, 0.0) };
        PulseParams { omega, delta: p.delta + self.d_delta, ..*p }
    }

    pub fn detunings(&self) -> AtomDetunings {
        AtomDetunings::new(self.doppler1, self.doppler2)
    }
}

/// Box-uniform panel used for per-trial average fidelities.
pub fn trial_panel(seed: u64) -> Vec<StateVector> {
    gateanalysis::sample_states(PANEL_SIZE, Sampler::BoxUniform, seed ^ PANEL_SALT)
}

/// Gate produced by `p` under `draw`.
pub fn noisy_gate(p: &PulseParams, draw: &NoiseDraw, dt_max: f64) -> Result<GateMatrix> {
    let u = hamiltonians::full_propagator(&draw.perturb(p), &draw.detunings(), dt_max)?;
    gateanalysis::extract_gate(&u, p.duration, p.delta)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub min_fidelity: f64,
    pub avg_fidelity: f64,
    pub max_off_diagonal: f64,
}

pub fn run_trial(p: &PulseParams, draw: &NoiseDraw, target: &TargetGate, panel: &[StateVector]) -> Result<TrialResult> {
    let g = noisy_gate(p, draw, DEFAULT_DT_MAX)?;
    Ok(TrialResult {
        min_fidelity: gateanalysis::min_fidelity(&g, target).value,
        avg_fidelity: gateanalysis::average_fidelity(&g, target, panel),
        max_off_diagonal: g.max_off_diagonal(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MCReport {
    /// Mean over trials of each trial's minimum fidelity.
    pub mean_min_fidelity: f64,
    /// Mean over trials of each trial's panel-averaged fidelity.
    pub mean_avg_fidelity: f64,
    pub std_min_fidelity: f64,
    pub worst_min_fidelity: f64,
    pub max_off_diagonal: f64,
    pub trials: usize,
    pub seed: u64,
    pub noise: NoiseConfig,
    pub histogram: Histogram,
    #[serde(skip)]
    pub per_trial: Vec<TrialResult>,
}

impl MCReport {
    pub fn summary_json(&self) -> String {
        let h = &self.histogram;
        let mut out = String::from("{\n");
        let mut field = |k: &str, v: String, last: bool| {
            out.push_str(&format!("  \"{k}\": {v}{}\n", if last { "" } else { "," }));
        };
        field("mean_min_fidelity", fmt_sig(self.mean_min_fidelity), false);
        field("mean_avg_fidelity", fmt_sig(self.mean_avg_fidelity), false);
        field("std_min_fidelity", fmt_sig(self.std_min_fidelity), false);
        field("worst_min_fidelity", fmt_sig(self.worst_min_fidelity), false);
        field("max_off_diagonal", fmt_sig(self.max_off_diagonal), false);
        field("trials", self.trials.to_string(), false);
        field("seed", self.seed.to_string(), false);
        field("sigma_delta", fmt_sig(self.noise.sigma_delta), false);
        field("sigma_omega", fmt_sig(self.noise.sigma_omega), false);
        field("sigma_doppler", fmt_sig(self.noise.sigma_doppler), false);
        field("histogram_bins", h.counts.len().to_string(), true);
        out.push_str("}\n");
        out
    }
}

pub fn monte_carlo(p: &PulseParams, noise: &NoiseConfig, target: &TargetGate) -> Result<MCReport> {
    noise.validate()?;
    p.validate()?;
    let panel = trial_panel(noise.seed);
    let per_trial: Vec<TrialResult> =
        (0..noise.trials as u64).into_par_iter().map(|k| run_trial(p, &noise.draw(k), target, &panel)).collect::<Result<_>>()?;

    let n = per_trial.len() as f64;
    let mut sum_min = 0.0;
    let mut sum_avg = 0.0;
    for t in &per_trial {
        sum_min += t.min_fidelity;
        sum_avg += t.avg_fidelity;
    }
    let mean_min = sum_min / n;
    let mut var = 0.0;
    for t in &per_trial {
        var += (t.min_fidelity - mean_min).powi(2);
    }
    let mins: Vec<f64> = per_trial.iter().map(|t| t.min_fidelity).collect();
    Ok(MCReport {
        mean_min_fidelity: mean_min,
        mean_avg_fidelity: sum_avg / n,
        std_min_fidelity: if per_trial.len() > 1 { (var / (n - 1.0)).sqrt() } else { 0.0 },
        worst_min_fidelity: mins.iter().copied().fold(f64::INFINITY, f64::min),
        max_off_diagonal: per_trial.iter().map(|t| t.max_off_diagonal).fold(0.0, f64::max),
        trials: noise.trials,
        seed: noise.seed,
        noise: *noise,
        histogram: Histogram::new(&mins, gateanalysis::DEFAULT_HISTOGRAM_BINS, 1.0),
        per_trial,
    })
}

/// Standard error of the mean estimated from `batches` contiguous batches.
pub fn batch_means_standard_error(values: &[f64], batches: usize) -> f64 {
    let size = values.len() / batches;
    if batches < 2 || size == 0 {
        return f64::NAN;
    }
    let means: Vec<f64> = (0..batches).map(|b| values[b * size..(b + 1) * size].iter().sum::<f64>() / size as f64).collect();
    let grand = means.iter().sum::<f64>() / batches as f64;
    let var = means.iter().map(|m| (m - grand).powi(2)).sum::<f64>() / (batches - 1) as f64;
    (var / batches as f64).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub axis_value: f64,
    pub f_min: f64,
    pub f_avg: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sweep {
    pub axis: SweepAxis,
    pub points: Vec<SweepPoint>,
    /// Largest drop of `f_min` against the expected trend; zero when the
    /// sweep is monotone.
    pub max_nonmonotonic_excursion: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    DeltaRr,
    SigmaDoppler,
    DeltaOmega,
}

impl SweepAxis {
    pub const ALL: [SweepAxis; 3] = [SweepAxis::DeltaRr, SweepAxis::SigmaDoppler, SweepAxis::DeltaOmega];

    pub fn name(&self) -> &'static str {
        match self {
            SweepAxis::DeltaRr => "delta_rr",
            SweepAxis::SigmaDoppler => "sigma_doppler",
            SweepAxis::DeltaOmega => "delta_omega",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        SweepAxis::ALL.into_iter().find(|a| a.name() == s).ok_or_else(|| {
            let names: Vec<&str> = SweepAxis::ALL.iter().map(|a| a.name()).collect();
            Error::invalid(format!("unknown sweep axis '{s}'; valid axes: {}", names.join(", ")))
        })
    }

    /// Fidelity is expected to rise along the blockade axis and fall along
    /// the noise axes.
    fn increasing(&self) -> bool {
        matches!(self, SweepAxis::DeltaRr)
    }
}

fn excursion(points: &[SweepPoint], increasing: bool) -> f64 {
    let mut worst = 0.0_f64;
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            let drop = if increasing { points[i].f_min - points[j].f_min } else { points[j].f_min - points[i].f_min };
            worst = worst.max(drop);
        }
    }
    worst
}

pub fn sweep_csv(sweep: &Sweep) -> String {
    let (a, b) = if sweep.axis == SweepAxis::DeltaRr { ("f_min", "f_avg") } else { ("mean_min", "mean_avg") };
    let mut out = format!("axis_value,{a},{b}\n");
    for p in &sweep.points {
        out.push_str(&format!("{},{},{}\n", fmt_sig(p.axis_value), fmt_sig(p.f_min), fmt_sig(p.f_avg)));
    }
    out
}

/// Deterministic fidelities at each blockade shift, with average fidelity
/// over [`FULL_PANEL_SIZE`] box-uniform states drawn from `seed`.
pub fn blockade_sweep(p: &PulseParams, delta_rr_values: &[f64], target: &TargetGate, seed: u64) -> Result<Sweep> {
    if let Some(bad) = delta_rr_values.iter().find(|&&v| !(v > 0.0 && v.is_finite())) {
        return Err(Error::invalid(format!("blockade shifts must be > 0, got {bad}")));
    }
    let states = gateanalysis::sample_states(FULL_PANEL_SIZE, Sampler::BoxUniform, seed);
    let points = delta_rr_values
        .iter()
        .map(|&v| {
            let q = PulseParams { delta_rr: v, ..*p };
            let g = noisy_gate(&q, &NoiseDraw::ZERO, DEFAULT_DT_MAX)?;
            Ok(SweepPoint {
                axis_value: v,
                f_min: gateanalysis::min_fidelity(&g, target).value,
                f_avg: gateanalysis::average_fidelity(&g, target, &states),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Sweep { axis: SweepAxis::DeltaRr, max_nonmonotonic_excursion: excursion(&points, true), points })
}

/// Monte Carlo at each value of one noise sigma, other sigmas taken from
/// `base`. Each point gets its own seed derived from `base.seed`.
pub fn noise_sweep(p: &PulseParams, axis: SweepAxis, sigmas: &[f64], base: &NoiseConfig, target: &TargetGate) -> Result<Sweep> {
    if axis == SweepAxis::DeltaRr {
        return Err(Error::invalid("delta_rr is not a noise axis"));
    }
    let points = sigmas
        .iter()
        .enumerate()
        .map(|(i, &s)| {
            let mut noise = NoiseConfig { seed: base.seed.wrapping_add(i as u64), ..*base };
            match axis {
                SweepAxis::SigmaDoppler => noise.sigma_doppler = s,
                _ => noise.sigma_omega = s,
            }
            let r = monte_carlo(p, &noise, target)?;
            Ok(SweepPoint { axis_value: s, f_min: r.mean_min_fidelity, f_avg: r.mean_avg_fidelity })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Sweep { axis, max_nonmonotonic_excursion: excursion(&points, axis.increasing()), points })
}

pub fn doppler_sweep(p: &PulseParams, sigmas: &[f64], trials: usize, seed: u64, target: &TargetGate) -> Result<Sweep> {
    noise_sweep(p, SweepAxis::SigmaDoppler, sigmas, &NoiseConfig::doppler(0.0, trials, seed), target)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gateanalysis::Convention;
    use crate::units::{khz_angular, mhz};

    fn row3() -> PulseParams {
        let omega = mhz(5.0);
        let delta = omega / 1.428;
        PulseParams::square(omega, delta, 8e9, 8.0 * std::f64::consts::PI / delta)
    }

    fn cz() -> TargetGate {
        TargetGate::cz(Convention::FlipOn00)
    }

    #[test]
    fn config_validation() {
        assert!(NoiseConfig::doppler(-1.0, 10, 0).validate().is_err());
        assert!(NoiseConfig::doppler(1.0, 0, 0).validate().is_err());
        assert!(NoiseConfig::doppler(f64::NAN, 1, 0).validate().is_err());
        assert!(NoiseConfig::doppler(0.0, 1, 0).validate().is_ok());
    }

    #[test]
    fn draws_are_per_trial_deterministic() {
        let n = NoiseConfig { sigma_delta: 1.0, sigma_omega: 2.0, sigma_doppler: 3.0, trials: 10, seed: 42 };
        assert_eq!(n.draw(7), n.draw(7));
        assert_ne!(n.draw(7), n.draw(8));
        assert_ne!(n.draw(7), NoiseConfig { seed: 43, ..n }.draw(7));
    }

    #[test]
    fn zero_draw_matches_deterministic_path_bitwise() {
        let p = row3();
        let u = hamiltonians::full_propagator(&p, &AtomDetunings::ZERO, DEFAULT_DT_MAX).unwrap();
        let g = gateanalysis::extract_gate(&u, p.duration, p.delta).unwrap();
        let z = NoiseConfig::doppler(0.0, 1, 3).draw(0);
        assert_eq!(noisy_gate(&p, &z, DEFAULT_DT_MAX).unwrap(), g);
        assert_eq!(noisy_gate(&p, &NoiseDraw::ZERO, DEFAULT_DT_MAX).unwrap(), g);
    }

    #[test]
    fn antisymmetric_doppler_splits_single_excitations() {
        let draw = NoiseDraw { doppler1: khz_angular(300.0), doppler2: -khz_angular(300.0), ..NoiseDraw::ZERO };
        let g = noisy_gate(&row3(), &draw, DEFAULT_DT_MAX).unwrap();
        assert!(g.max_off_diagonal() < 1e-9);
        let d = g.diagonal();
        assert!((d[1] - d[2]).norm() > 1e-4);
    }

    #[test]
    fn coupling_noise_keeps_phase() {
        let p = row3().with_omega(Complex64::from_polar(mhz(5.0), 0.4));
        let q = NoiseDraw { d_omega: 1000.0, ..NoiseDraw::ZERO }.perturb(&p);
        assert!((q.omega.arg() - 0.4).abs() < 1e-12);
        assert!((q.omega.norm() - mhz(5.0) - 1000.0).abs() < 1e-6);
    }

    #[test]
    fn zero_noise_monte_carlo_is_degenerate() {
        let p = row3();
        let r = monte_carlo(&p, &NoiseConfig::doppler(0.0, 5, 1), &cz()).unwrap();
        let u = hamiltonians::full_propagator(&p, &AtomDetunings::ZERO, DEFAULT_DT_MAX).unwrap();
        let g = gateanalysis::extract_gate(&u, p.duration, p.delta).unwrap();
        assert!((r.mean_min_fidelity - gateanalysis::min_fidelity(&g, &cz()).value).abs() < 1e-12);
        assert_eq!(r.histogram.counts, vec![5]);
        assert_eq!(r.std_min_fidelity, 0.0);
    }

    #[test]
    fn histogram_counts_trials() {
        let r = monte_carlo(&row3(), &NoiseConfig::doppler(khz_angular(100.0), 64, 9), &cz()).unwrap();
        assert_eq!(r.histogram.total(), 64);
        assert!(r.max_off_diagonal < 1e-9);
        assert!(r.worst_min_fidelity <= r.mean_min_fidelity);
    }

    #[test]
    fn sweep_axis_names() {
        for a in SweepAxis::ALL {
            assert_eq!(SweepAxis::parse(a.name()).unwrap(), a);
        }
        let e = SweepAxis::parse("temperature").unwrap_err().to_string();
        assert!(e.contains("delta_rr") && e.contains("sigma_doppler") && e.contains("delta_omega"));
    }

    #[test]
    fn blockade_sweep_rejects_nonpositive() {
        assert!(blockade_sweep(&row3(), &[1e9, 0.0], &cz(), 0).is_err());
    }

    #[test]
    fn excursion_detects_dip() {
        let pts: Vec<SweepPoint> =
            [0.9, 0.95, 0.94, 0.97].iter().enumerate().map(|(i, &f)| SweepPoint { axis_value: i as f64, f_min: f, f_avg: f }).collect();
        assert!((excursion(&pts, true) - 0.01).abs() < 1e-12);
        assert!((excursion(&pts, false) - 0.07).abs() < 1e-12);
    }

    #[test]
    fn batch_means_of_constant_is_zero() {
        assert_eq!(batch_means_standard_error(&[0.5; 100], 10), 0.0);
        assert!(batch_means_standard_error(&[0.5; 3], 10).is_nan());
    }

    #[test]
    fn summary_is_stable_text() {
        let r = monte_carlo(&row3(), &NoiseConfig::doppler(khz_angular(50.0), 8, 2), &cz()).unwrap();
        let s = r.summary_json();
        assert_eq!(s, monte_carlo(&row3(), &NoiseConfig::doppler(khz_angular(50.0), 8, 2), &cz()).unwrap().summary_json());
        let v: serde_json::Value = serde_json::from_str(&s).unwrap();
        assert_eq!(v["trials"], 8);
    }
}
