//! Python bindings for `rydgate`.
//!
//! Frequencies are rad/s and times seconds, as in the Rust crate. The
//! `mhz`, `ghz_angular` and `khz_angular` helpers convert lab units.

#[pyo3::pymodule]
mod pyrydgate {
    use num_complex::Complex64;
    use pyo3::exceptions::{PyRuntimeError, PyValueError};
    use pyo3::prelude::*;
    use pyo3::types::PyDict;
    use rydgate::gateanalysis::{self, Convention, GateMatrix, Sampler, TargetGate};
    use rydgate::hamiltonians::{self, AtomDetunings, PulseParams, PulseShape};
    use rydgate::noisemc::{self, NoiseConfig};
    use rydgate::numkernel::{StateVector, DEFAULT_DT_MAX};
    use rydgate::solutionsearch::{self, Condition, ScanOptions, ShapedOptions};
    use rydgate::units;

    fn err(e: rydgate::Error) -> PyErr {
        if e.is_numerical() {
            PyRuntimeError::new_err(e.to_string())
        } else {
            PyValueError::new_err(e.to_string())
        }
    }

    fn convention_name(c: Convention) -> &'static str {
        match c {
            Convention::FlipOn00 => "flip-on-00",
            Convention::FlipOn11 => "flip-on-11",
        }
    }

    fn parse_convention(s: &str) -> PyResult<Convention> {
        match s {
            "flip-on-00" => Ok(Convention::FlipOn00),
            "flip-on-11" => Ok(Convention::FlipOn11),
            _ => Err(PyValueError::new_err(format!("convention must be 'flip-on-00' or 'flip-on-11', got '{s}'"))),
        }
    }

    fn parse_sampler(s: &str) -> PyResult<Sampler> {
        match s {
            "box-uniform" => Ok(Sampler::BoxUniform),
            "haar" => Ok(Sampler::Haar),
            _ => Err(PyValueError::new_err(format!("sampler must be 'box-uniform' or 'haar', got '{s}'"))),
        }
    }

    #[pyfunction]
    fn mhz(x: f64) -> f64 {
        units::mhz(x)
    }

    #[pyfunction]
    fn ghz_angular(x: f64) -> f64 {
        units::ghz_angular(x)
    }

    #[pyfunction]
    fn khz_angular(x: f64) -> f64 {
        units::khz_angular(x)
    }

    #[pyfunction]
    fn f_value(m: u32, xi: f64) -> f64 {
        solutionsearch::f_value(m, xi)
    }

    #[pyfunction]
    #[pyo3(signature = (m, xi, phi))]
    fn g_value(m: u32, xi: f64, phi: f64) -> f64 {
        solutionsearch::g_value(m, xi, phi)
    }

    /// `(T/τ₁, T/τ₂)`.
    #[pyfunction]
    #[pyo3(signature = (m, xi, phi = 0.0))]
    fn tau_ratios(m: u32, xi: f64, phi: f64) -> (f64, f64) {
        solutionsearch::tau_ratios(m, xi, phi)
    }

    #[pyfunction]
    #[pyo3(signature = (m, delta, phi = 0.0))]
    fn gate_time(m: u32, delta: f64, phi: f64) -> PyResult<f64> {
        solutionsearch::gate_time(m, phi, delta).map_err(err)
    }

    /// Controlled-phase target. `Target.cz()` is φ = π.
    #[pyclass(frozen, module = "pyrydgate")]
    pub struct Target {
        inner: TargetGate,
    }

    #[pymethods]
    impl Target {
        #[staticmethod]
        #[pyo3(signature = (convention = "flip-on-00"))]
        fn cz(convention: &str) -> PyResult<Self> {
            Ok(Target { inner: TargetGate::cz(parse_convention(convention)?) })
        }

        #[staticmethod]
        #[pyo3(signature = (phi, convention = "flip-on-00"))]
        fn cphase(phi: f64, convention: &str) -> PyResult<Self> {
            Ok(Target { inner: TargetGate { phi, convention: parse_convention(convention)? } })
        }

        /// The target a CZ solution at `(m, ξ)` naturally implements.
        #[staticmethod]
        fn for_solution(m: u32, xi: f64) -> Self {
            Target { inner: TargetGate::cz(solutionsearch::cz_convention_for(m, xi)) }
        }

        #[getter]
        fn phi(&self) -> f64 {
            self.inner.phi
        }

        #[getter]
        fn convention(&self) -> &'static str {
            convention_name(self.inner.convention)
        }

        fn diagonal(&self) -> Vec<Complex64> {
            self.inner.diagonal().to_vec()
        }

        fn __repr__(&self) -> String {
            format!("Target(phi={}, convention='{}')", self.inner.phi, convention_name(self.inner.convention))
        }
    }

    /// A drive pulse. Square unless `delta_t` (erf edge width, seconds) is given.
    #[pyclass(frozen, module = "pyrydgate")]
    pub struct Pulse {
        inner: PulseParams,
    }

    #[pymethods]
    impl Pulse {
        #[new]
        #[pyo3(signature = (omega, delta, delta_rr, duration, delta_t = None))]
        fn new(omega: f64, delta: f64, delta_rr: f64, duration: f64, delta_t: Option<f64>) -> PyResult<Self> {
            let mut p = PulseParams::square(omega, delta, delta_rr, duration);
            if let Some(dt) = delta_t {
                p = p.with_shape(PulseShape::ErfEdges { delta_t: dt });
            }
            p.validate().map_err(err)?;
            Ok(Pulse { inner: p })
        }

        /// Pulse of length `2(mπ + φ)/|δ|` from lab units: Ω and δ in MHz
        /// (cyclic), Δ_rr in GHz (angular). Give exactly one of `xi` and
        /// `delta_mhz`.
        #[staticmethod]
        #[pyo3(signature = (omega_mhz, m, delta_rr_ghz = 8.0, xi = None, delta_mhz = None, phi = 0.0, delta_t_ns = None))]
        fn lab(
            omega_mhz: f64,
            m: u32,
            delta_rr_ghz: f64,
            xi: Option<f64>,
            delta_mhz: Option<f64>,
            phi: f64,
            delta_t_ns: Option<f64>,
        ) -> PyResult<Self> {
            let delta_mhz = match (xi, delta_mhz) {
                (Some(x), None) => omega_mhz / x,
                (None, Some(d)) => d,
                _ => return Err(PyValueError::new_err("give exactly one of xi and delta_mhz")),
            };
            let delta = units::mhz(delta_mhz);
            let t = solutionsearch::gate_time(m, phi, delta).map_err(err)?;
            Pulse::new(units::mhz(omega_mhz), delta, units::ghz_angular(delta_rr_ghz), t, delta_t_ns.map(units::ns))
        }

        #[getter]
        fn omega(&self) -> Complex64 {
            self.inner.omega
        }

        #[getter]
        fn delta(&self) -> f64 {
            self.inner.delta
        }

        #[getter]
        fn delta_rr(&self) -> f64 {
            self.inner.delta_rr
        }

        #[getter]
        fn duration(&self) -> f64 {
            self.inner.duration
        }

        #[getter]
        fn delta_t(&self) -> Option<f64> {
            match self.inner.shape {
                PulseShape::Square => None,
                PulseShape::ErfEdges { delta_t } => Some(delta_t),
            }
        }

        #[getter]
        fn xi(&self) -> f64 {
            self.inner.xi()
        }

        /// Drive amplitude Ω(t).
        fn omega_at(&self, t: f64) -> Complex64 {
            hamiltonians::omega_at(t, &self.inner)
        }

        /// Simulates the nine-level system and returns the computational block.
        #[pyo3(signature = (d1 = 0.0, d2 = 0.0, dt_max = DEFAULT_DT_MAX))]
        fn simulate(&self, py: Python<'_>, d1: f64, d2: f64, dt_max: f64) -> PyResult<Gate> {
            let p = self.inner;
            let g = py
                .detach(|| {
                    let u = hamiltonians::full_propagator(&p, &AtomDetunings::new(d1, d2), dt_max)?;
                    gateanalysis::extract_gate(&u, p.duration, p.delta)
                })
                .map_err(err)?;
            Ok(Gate { inner: g })
        }

        fn __repr__(&self) -> String {
            format!(
                "Pulse(omega={}, delta={}, delta_rr={}, duration={}, delta_t={:?})",
                self.inner.omega.re,
                self.inner.delta,
                self.inner.delta_rr,
                self.inner.duration,
                self.delta_t()
            )
        }
    }

    /// A 4x4 gate on `|00>, |01>, |10>, |11>` with per-column leakage.
    #[pyclass(frozen, module = "pyrydgate")]
    pub struct Gate {
        inner: GateMatrix,
    }

    #[pymethods]
    impl Gate {
        #[staticmethod]
        fn from_diagonal(diag: [Complex64; 4]) -> Self {
            Gate { inner: GateMatrix::from_diagonal(diag) }
        }

        fn entries(&self) -> Vec<Vec<Complex64>> {
            (0..4).map(|i| (0..4).map(|j| self.inner.entries[(i, j)]).collect()).collect()
        }

        fn diagonal(&self) -> Vec<Complex64> {
            self.inner.diagonal().to_vec()
        }

        #[getter]
        fn leakage(&self) -> Vec<f64> {
            self.inner.leakage.to_vec()
        }

        fn max_off_diagonal(&self) -> f64 {
            self.inner.max_off_diagonal()
        }

        fn min_fidelity(&self, target: PyRef<'_, Target>) -> f64 {
            gateanalysis::min_fidelity(&self.inner, &target.inner).value
        }

        fn state_fidelity(&self, target: PyRef<'_, Target>, psi: Vec<Complex64>) -> PyResult<f64> {
            let s = StateVector::from_slice(&psi).map_err(err)?;
            gateanalysis::state_fidelity(&self.inner, &target.inner, &s).map_err(err)
        }

        #[pyo3(signature = (target, n = 2000, seed = 1, sampler = "box-uniform"))]
        fn average_fidelity(&self, py: Python<'_>, target: PyRef<'_, Target>, n: usize, seed: u64, sampler: &str) -> PyResult<f64> {
            let sampler = parse_sampler(sampler)?;
            let (g, t) = (&self.inner, target.inner);
            Ok(py.detach(|| gateanalysis::average_fidelity(g, &t, &gateanalysis::sample_states(n, sampler, seed))))
        }

        fn __repr__(&self) -> String {
            let d = self.inner.diagonal();
            format!("Gate(diagonal=[{}, {}, {}, {}])", d[0], d[1], d[2], d[3])
        }
    }

    /// Perfect-blockade gate for `(m, ξ, φ)`.
    #[pyfunction]
    #[pyo3(signature = (m, xi, phi = 0.0, sign_delta = 1.0))]
    fn ideal_gate(m: u32, xi: f64, phi: f64, sign_delta: f64) -> Gate {
        Gate { inner: gateanalysis::ideal_gate(m, xi, phi, sign_delta) }
    }

    /// Ranked `(m, ξ)` candidates as dicts. `phi = 0` uses the CZ condition.
    #[pyfunction]
    #[pyo3(signature = (m_min = 2, m_max = 7, xi_max = 4.0, phi = 0.0, grid_step = 1e-4, keep = 20))]
    fn scan<'py>(
        py: Python<'py>,
        m_min: u32,
        m_max: u32,
        xi_max: f64,
        phi: f64,
        grid_step: f64,
        keep: usize,
    ) -> PyResult<Vec<Bound<'py, PyDict>>> {
        let opts = ScanOptions { m_min, m_max, xi_min: 0.0, xi_max, grid_step, keep, condition: Condition::from_phi(phi) };
        let cands = py.detach(|| solutionsearch::scan(&opts)).map_err(err)?;
        cands
            .iter()
            .map(|c| {
                let d = PyDict::new(py);
                d.set_item("m", c.m)?;
                d.set_item("xi", c.xi)?;
                d.set_item("phi", c.phi)?;
                d.set_item("convention", convention_name(c.convention))?;
                d.set_item("condition_value", c.condition_value)?;
                d.set_item("target_value", c.target_value)?;
                d.set_item("tg_over_tau1", c.tg_over_tau1)?;
                d.set_item("tg_over_tau2", c.tg_over_tau2)?;
                d.set_item("predicted_fmin", c.predicted_fmin)?;
                Ok(d)
            })
            .collect()
    }

    /// Seeded Monte Carlo over common-mode δ/Ω noise and per-atom Doppler
    /// shifts (all sigmas in rad/s).
    #[pyfunction]
    #[pyo3(signature = (pulse, target, sigma_delta = 0.0, sigma_omega = 0.0, sigma_doppler = 0.0, trials = 2000, seed = 1))]
    #[allow(clippy::too_many_arguments)]
    fn monte_carlo<'py>(
        py: Python<'py>,
        pulse: PyRef<'py, Pulse>,
        target: PyRef<'py, Target>,
        sigma_delta: f64,
        sigma_omega: f64,
        sigma_doppler: f64,
        trials: usize,
        seed: u64,
    ) -> PyResult<Bound<'py, PyDict>> {
        let noise = NoiseConfig { sigma_delta, sigma_omega, sigma_doppler, trials, seed };
        let (p, t) = (pulse.inner, target.inner);
        let r = py.detach(|| noisemc::monte_carlo(&p, &noise, &t)).map_err(err)?;
        let d = PyDict::new(py);
        d.set_item("mean_min_fidelity", r.mean_min_fidelity)?;
        d.set_item("mean_avg_fidelity", r.mean_avg_fidelity)?;
        d.set_item("std_min_fidelity", r.std_min_fidelity)?;
        d.set_item("worst_min_fidelity", r.worst_min_fidelity)?;
        d.set_item("max_off_diagonal", r.max_off_diagonal)?;
        d.set_item("trials", r.trials)?;
        d.set_item("seed", r.seed)?;
        d.set_item("min_fidelities", r.per_trial.iter().map(|x| x.min_fidelity).collect::<Vec<_>>())?;
        Ok(d)
    }

    /// Maximizes the minimum fidelity over `(ξ, T)` starting from `(xi0, t0)`.
    #[pyfunction]
    #[pyo3(signature = (pulse, target, xi0, t0, max_evals = 400))]
    fn optimize_pulse<'py>(
        py: Python<'py>,
        pulse: PyRef<'py, Pulse>,
        target: PyRef<'py, Target>,
        xi0: f64,
        t0: f64,
        max_evals: usize,
    ) -> PyResult<Bound<'py, PyDict>> {
        let opts = ShapedOptions { max_evals, ..ShapedOptions::default() };
        let (p, t) = (pulse.inner, target.inner);
        let r = py.detach(|| solutionsearch::optimize_pulse(&p, xi0, t0, &t, &opts)).map_err(err)?;
        let d = PyDict::new(py);
        d.set_item("xi", r.xi)?;
        d.set_item("gate_time", r.gate_time)?;
        d.set_item("fmin", r.fmin)?;
        d.set_item("start_fmin", r.start_fmin)?;
        d.set_item("evals", r.evals)?;
        d.set_item("converged", r.converged)?;
        d.set_item("unimproved", r.unimproved)?;
        Ok(d)
    }

    #[pymodule_init]
    fn init(m: &Bound<'_, PyModule>) -> PyResult<()> {
        m.add("__version__", env!("CARGO_PKG_VERSION"))?;
        Ok(())
    }
}
