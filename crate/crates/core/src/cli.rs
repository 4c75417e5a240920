//! `rydgate` command-line front end.
//!
//! Every command prints its primary result to stdout (CSV or JSON per
//! `--format`) and, with `--out DIR`, also writes all of its files there.
//! Exit codes: 0 success, 2 invalid input, 3 numerical failure.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde_json::{json, Value};

use crate::config::{Format, RunConfig, ShapeKind};
use crate::error::{Error, Result};
use crate::gateanalysis::{self, GateMatrix, Sampler, TargetGate};
use crate::hamiltonians::{self, AtomDetunings, PulseParams, PulseShape};
use crate::noisemc::{self, NoiseConfig, SweepAxis};
use crate::numkernel::DEFAULT_DT_MAX;
use crate::report::{fmt_sig, round_sig};
use crate::solutionsearch::{self, Condition, ScanOptions, ShapedOptions};
use crate::units;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "rydgate", version, about = "Single-pulse Rydberg-blockade controlled-phase gates")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ShapeArg {
    Square,
    Erf,
}

#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// TOML run configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Directory for output files.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<FormatArg>,
    /// Rabi coupling, MHz (cyclic).
    #[arg(long)]
    pub omega_mhz: Option<f64>,
    /// Detuning, MHz (cyclic). Mutually exclusive with --xi.
    #[arg(long, allow_hyphen_values = true)]
    pub delta_mhz: Option<f64>,
    /// |Ω|/|δ|.
    #[arg(long)]
    pub xi: Option<f64>,
    /// Blockade shift, GHz (angular).
    #[arg(long)]
    pub delta_rr_ghz: Option<f64>,
    #[arg(long)]
    pub m: Option<u32>,
    /// Target phase, radians (0 selects CZ).
    #[arg(long, allow_hyphen_values = true)]
    pub phi: Option<f64>,
    #[arg(long, value_enum)]
    pub shape: Option<ShapeArg>,
    /// Erf edge width, ns.
    #[arg(long)]
    pub delta_t_ns: Option<f64>,
    /// Noise widths, kHz (angular).
    #[arg(long, allow_hyphen_values = true)]
    pub sigma_delta_khz: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub sigma_omega_khz: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub sigma_doppler_khz: Option<f64>,
    #[arg(long)]
    pub trials: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Scan (m, ξ) for approximate gate solutions.
    Search {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        m_min: Option<u32>,
        #[arg(long)]
        m_max: Option<u32>,
        #[arg(long, default_value_t = 4.0)]
        xi_max: f64,
        #[arg(long, default_value_t = 1e-4)]
        grid_step: f64,
        #[arg(long, default_value_t = 20)]
        keep: usize,
    },
    /// Simulate one gate: matrix, leakage, fidelities, population trace.
    Gate {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, default_value_t = 401)]
        trace_points: usize,
    },
    /// Monte Carlo over laser and Doppler noise.
    Noise {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Sweep the blockade shift or a noise width.
    Sweep {
        #[command(flatten)]
        common: CommonArgs,
        /// delta_rr, sigma_doppler or delta_omega.
        #[arg(long)]
        axis: String,
        /// Comma-separated values (GHz for delta_rr, kHz otherwise).
        #[arg(long)]
        values: Option<String>,
    },
    /// Re-optimize (ξ, T) for an erf-edged pulse.
    Shaped {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, default_value_t = 400)]
        max_evals: usize,
    },
    /// Recompute the five reference solutions end to end.
    Table1 {
        #[command(flatten)]
        common: CommonArgs,
        /// Doppler width for the noisy column, kHz (angular).
        #[arg(long, default_value_t = 100.0)]
        doppler_khz: f64,
    },
}

/// Result of one command before it touches the filesystem.
#[derive(Debug, Default)]
pub struct Outputs {
    pub stdout: String,
    pub files: Vec<(String, String)>,
    pub warnings: Vec<String>,
}

pub fn exit_code(e: &Error) -> i32 {
    if e.is_numerical() {
        EXIT_NUMERICAL
    } else {
        EXIT_INVALID
    }
}

/// Caps the global thread pool from `RYDGATE_THREADS`.
pub fn init_threads_from_env() -> Result<()> {
    if let Ok(v) = std::env::var("RYDGATE_THREADS") {
        let n: usize = v
            .trim()
            .parse()
            .ok()
            .filter(|&n| n >= 1)
            .ok_or_else(|| Error::invalid(format!("RYDGATE_THREADS must be a positive integer, got '{v}'")))?;
        // a pool that already exists keeps its size
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

/// Parses `args` (including the program name), runs the command and
/// returns the process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INVALID } else { EXIT_OK };
            let text = e.render().to_string();
            if code == EXIT_OK {
                let _ = write!(stdout, "{text}");
            } else {
                let _ = write!(stderr, "{text}");
            }
            return code;
        }
    };
    match execute(&cli.command) {
        Ok((outputs, out_dir)) => {
            for w in &outputs.warnings {
                let _ = writeln!(stderr, "warning: {w}");
            }
            if let Some(dir) = out_dir {
                if let Err(e) = write_files(&dir, &outputs.files) {
                    let _ = writeln!(stderr, "error: {e}");
                    return EXIT_INVALID;
                }
            }
            let _ = write!(stdout, "{}", outputs.stdout);
            EXIT_OK
        }
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            exit_code(&e)
        }
    }
}

fn write_files(dir: &std::path::Path, files: &[(String, String)]) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    for (name, content) in files {
        std::fs::write(dir.join(name), content)?;
    }
    Ok(())
}

pub fn execute(cmd: &Command) -> Result<(Outputs, Option<PathBuf>)> {
    let common = match cmd {
        Command::Search { common, .. }
        | Command::Gate { common, .. }
        | Command::Noise { common }
        | Command::Sweep { common, .. }
        | Command::Shaped { common, .. }
        | Command::Table1 { common, .. } => common,
    };
    let cfg = resolve_config(common)?;
    let format = common.format.map(|f| match f {
        FormatArg::Csv => Format::Csv,
        FormatArg::Json => Format::Json,
    });
    let out_dir = common.out.clone().or_else(|| cfg.output.directory.as_ref().map(PathBuf::from));
    let outputs = match cmd {
        Command::Search { m_min, m_max, xi_max, grid_step, keep, .. } => {
            cmd_search(&cfg, common.m, *m_min, *m_max, *xi_max, *grid_step, *keep, format)?
        }
        Command::Gate { trace_points, .. } => cmd_gate(&cfg, *trace_points, format)?,
        Command::Noise { .. } => cmd_noise(&cfg, format)?,
        Command::Sweep { axis, values, .. } => cmd_sweep(&cfg, axis, values.as_deref(), format)?,
        Command::Shaped { max_evals, .. } => cmd_shaped(&cfg, *max_evals, format)?,
        Command::Table1 { doppler_khz, .. } => cmd_table1(&cfg, *doppler_khz, format)?,
    };
    Ok((outputs, out_dir))
}

/// Config file (or defaults) overridden by command-line flags.
pub fn resolve_config(c: &CommonArgs) -> Result<RunConfig> {
    let mut cfg = match &c.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if c.xi.is_some() && c.delta_mhz.is_some() {
        return Err(Error::Config("give exactly one of --delta-mhz and --xi".into()));
    }
    let p = &mut cfg.physics;
    if let Some(x) = c.xi {
        p.xi = Some(x);
        p.delta_mhz = None;
    }
    if let Some(d) = c.delta_mhz {
        p.delta_mhz = Some(d);
        p.xi = None;
    }
    if let Some(v) = c.omega_mhz {
        p.omega_mhz = v;
    }
    if let Some(v) = c.delta_rr_ghz {
        p.delta_rr_ghz = v;
    }
    if let Some(v) = c.m {
        p.m = v;
    }
    if let Some(v) = c.phi {
        p.phi = v;
    }
    if let Some(s) = c.shape {
        p.shape = match s {
            ShapeArg::Square => ShapeKind::Square,
            ShapeArg::Erf => ShapeKind::Erf,
        };
    }
    if let Some(v) = c.delta_t_ns {
        p.delta_t_ns = v;
    }
    let n = &mut cfg.noise;
    if let Some(v) = c.sigma_delta_khz {
        n.sigma_delta_khz = v;
    }
    if let Some(v) = c.sigma_omega_khz {
        n.sigma_omega_khz = v;
    }
    if let Some(v) = c.sigma_doppler_khz {
        n.sigma_doppler_khz = v;
    }
    if let Some(v) = c.trials {
        n.trials = v;
    }
    if let Some(v) = c.seed {
        n.seed = v;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn num(x: f64) -> Value {
    if x.is_finite() {
        json!(round_sig(x))
    } else {
        Value::Null
    }
}

fn cnum(z: Complex64) -> Value {
    json!([num(z.re), num(z.im)])
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json value serializes");
    s.push('\n');
    s
}

fn convention_name(c: gateanalysis::Convention) -> &'static str {
    match c {
        gateanalysis::Convention::FlipOn00 => "flip-on-00",
        gateanalysis::Convention::FlipOn11 => "flip-on-11",
    }
}

/// CZ (φ = 0) picks the convention the solution naturally produces.
fn target_for(cfg: &RunConfig) -> TargetGate {
    Condition::from_phi(cfg.physics.phi).target_gate(cfg.physics.m, cfg.xi())
}

fn parameters_json(cfg: &RunConfig, p: &PulseParams) -> Value {
    json!({
        "omega_mhz": num(cfg.physics.omega_mhz),
        "delta_mhz": num(cfg.delta_mhz()),
        "xi": num(cfg.xi()),
        "delta_rr_ghz": num(cfg.physics.delta_rr_ghz),
        "m": cfg.physics.m,
        "phi": num(cfg.physics.phi),
        "shape": match p.shape { PulseShape::Square => "square", PulseShape::ErfEdges { .. } => "erf" },
        "delta_t_ns": match p.shape { PulseShape::Square => Value::Null, PulseShape::ErfEdges { delta_t } => num(units::to_ns(delta_t)) },
        "gate_time_us": num(units::to_us(p.duration)),
    })
}

fn gate_json(g: &GateMatrix) -> Value {
    let rows: Vec<Value> = (0..4).map(|i| Value::Array((0..4).map(|j| cnum(g.entries[(i, j)])).collect())).collect();
    json!({
        "entries": rows,
        "leakage": g.leakage.iter().map(|&l| num(l)).collect::<Vec<_>>(),
    })
}

/// `(t, P(|01>→|01>), P(|11>→|11>))` sampled on `n` points over the pulse.
pub fn population_trace(p: &PulseParams, n: usize) -> Result<Vec<(f64, f64, f64)>> {
    let n = n.max(2);
    let mut u = crate::numkernel::ComplexMatrix::identity(hamiltonians::FULL_DIM, hamiltonians::FULL_DIM);
    let mut out = Vec::with_capacity(n);
    let mut prev = 0.0;
    for k in 0..n {
        let t = p.duration * k as f64 / (n - 1) as f64;
        u = hamiltonians::full_propagator_between(p, &AtomDetunings::ZERO, prev, t, DEFAULT_DT_MAX)? * u;
        prev = t;
        out.push((t, u[(1, 1)].norm_sqr(), u[(4, 4)].norm_sqr()));
    }
    Ok(out)
}

fn trace_csv(trace: &[(f64, f64, f64)]) -> String {
    let mut out = String::from("t_us,pop_1,pop_11\n");
    for &(t, a, b) in trace {
        out.push_str(&format!("{},{},{}\n", fmt_sig(units::to_us(t)), fmt_sig(a), fmt_sig(b)));
    }
    out
}

#[allow(clippy::too_many_arguments)]
fn cmd_search(
    cfg: &RunConfig,
    m: Option<u32>,
    m_min: Option<u32>,
    m_max: Option<u32>,
    xi_max: f64,
    grid_step: f64,
    keep: usize,
    format: Option<Format>,
) -> Result<Outputs> {
    let defaults = ScanOptions::default();
    let (lo, hi) = match (m, m_min, m_max) {
        (Some(m), _, _) => (m, m),
        (None, lo, hi) => {
            let hi = hi.unwrap_or(defaults.m_max);
            (lo.unwrap_or(defaults.m_min.min(hi)), hi)
        }
    };
    let opts = ScanOptions { m_min: lo, m_max: hi, xi_min: 0.0, xi_max, grid_step, keep, condition: Condition::from_phi(cfg.physics.phi) };
    let cands = solutionsearch::scan(&opts)?;
    let csv = solutionsearch::candidates_csv(&cands);
    let mut warnings = vec![];
    if cands.is_empty() {
        warnings.push("no candidate solutions in the requested range".to_string());
    }
    let json_text = pretty(&Value::Array(
        cands
            .iter()
            .map(|c| {
                json!({
                    "m": c.m, "xi": num(c.xi), "phi": num(c.phi),
                    "convention": convention_name(c.convention),
                    "condition_value": num(c.condition_value), "target_value": num(c.target_value),
                    "tg_over_tau1": num(c.tg_over_tau1), "tg_over_tau2": num(c.tg_over_tau2),
                    "predicted_fmin": num(c.predicted_fmin),
                })
            })
            .collect(),
    ));
    Ok(Outputs {
        stdout: if format == Some(Format::Json) { json_text.clone() } else { csv.clone() },
        files: vec![("candidates.csv".into(), csv), ("candidates.json".into(), json_text)],
        warnings,
    })
}

fn cmd_gate(cfg: &RunConfig, trace_points: usize, format: Option<Format>) -> Result<Outputs> {
    let p = cfg.pulse()?;
    let target = target_for(cfg);
    let u = hamiltonians::full_propagator(&p, &AtomDetunings::ZERO, DEFAULT_DT_MAX)?;
    let g = gateanalysis::extract_gate(&u, p.duration, p.delta)?;
    let report = gateanalysis::fidelity_report(&g, &target, noisemc::FULL_PANEL_SIZE, Sampler::BoxUniform, cfg.noise.seed);
    let mut doc = gate_json(&g);
    doc["parameters"] = parameters_json(cfg, &p);
    doc["target"] = json!({ "phi": num(target.phi), "convention": convention_name(target.convention) });
    doc["f_min"] = num(report.f_min);
    doc["min_method"] = json!(report.min_method);
    doc["f_avg"] = num(report.f_avg);
    doc["sampled_min"] = num(report.sampled_min);
    doc["n_samples"] = json!(report.n_samples);
    doc["sampler"] = json!(report.sampler);
    doc["seed"] = json!(report.seed);
    doc["reference_phase"] = num(report.reference_phase);
    let gate_text = pretty(&doc);
    let trace = trace_csv(&population_trace(&p, trace_points)?);
    Ok(Outputs {
        stdout: if format == Some(Format::Csv) { trace.clone() } else { gate_text.clone() },
        files: vec![
            ("gate.json".into(), gate_text),
            ("populations.csv".into(), trace),
            ("fidelity_histogram.csv".into(), report.histogram.to_csv()),
        ],
        warnings: vec![],
    })
}

fn cmd_noise(cfg: &RunConfig, format: Option<Format>) -> Result<Outputs> {
    let p = cfg.pulse()?;
    let r = noisemc::monte_carlo(&p, &cfg.noise_config(), &target_for(cfg))?;
    let summary = r.summary_json();
    let hist = r.histogram.to_csv();
    Ok(Outputs {
        stdout: if format == Some(Format::Csv) { hist.clone() } else { summary.clone() },
        files: vec![("noise.json".into(), summary), ("noise_histogram.csv".into(), hist)],
        warnings: vec![],
    })
}

fn parse_values(s: &str) -> Result<Vec<f64>> {
    s.split(',').map(|v| v.trim().parse::<f64>().map_err(|_| Error::invalid(format!("bad sweep value '{v}'")))).collect()
}

fn cmd_sweep(cfg: &RunConfig, axis: &str, values: Option<&str>, format: Option<Format>) -> Result<Outputs> {
    let axis = SweepAxis::parse(axis)?;
    let raw = match values {
        Some(s) => parse_values(s)?,
        None => match axis {
            SweepAxis::DeltaRr => vec![1.0, 2.0, 4.0, 8.0, 16.0],
            _ => vec![0.0, 25.0, 50.0, 75.0, 100.0],
        },
    };
    if raw.is_empty() {
        return Err(Error::invalid("sweep needs at least one value"));
    }
    let p = cfg.pulse()?;
    let target = target_for(cfg);
    let mut sweep = match axis {
        SweepAxis::DeltaRr => {
            let v: Vec<f64> = raw.iter().map(|&g| units::ghz_angular(g)).collect();
            noisemc::blockade_sweep(&p, &v, &target, cfg.noise.seed)?
        }
        _ => {
            let v: Vec<f64> = raw.iter().map(|&k| units::khz_angular(k)).collect();
            if let Some(bad) = v.iter().find(|&&s| !(s >= 0.0)) {
                return Err(Error::invalid(format!("noise widths must be >= 0, got {bad}")));
            }
            noisemc::noise_sweep(&p, axis, &v, &cfg.noise_config(), &target)?
        }
    };
    // report the axis in the units it was given
    for (pt, &r) in sweep.points.iter_mut().zip(&raw) {
        pt.axis_value = r;
    }
    let csv = noisemc::sweep_csv(&sweep);
    let json_text = pretty(&json!({
        "axis": axis.name(),
        "unit": if axis == SweepAxis::DeltaRr { "GHz" } else { "kHz" },
        "points": sweep.points.iter().map(|p| json!([num(p.axis_value), num(p.f_min), num(p.f_avg)])).collect::<Vec<_>>(),
        "max_nonmonotonic_excursion": num(sweep.max_nonmonotonic_excursion),
    }));
    Ok(Outputs {
        stdout: if format == Some(Format::Json) { json_text.clone() } else { csv.clone() },
        files: vec![("sweep.csv".into(), csv), ("sweep.json".into(), json_text)],
        warnings: vec![],
    })
}

fn cmd_shaped(cfg: &RunConfig, max_evals: usize, format: Option<Format>) -> Result<Outputs> {
    let delta_t = units::ns(cfg.physics.delta_t_ns);
    let xi0 = cfg.xi();
    let omega = cfg.omega();
    let t0 = solutionsearch::shaped_start_time(cfg.physics.m, cfg.physics.phi, xi0, omega, delta_t)?;
    let base = PulseParams::square(omega, cfg.delta(), cfg.delta_rr(), t0).with_shape(PulseShape::ErfEdges { delta_t });
    let target = target_for(cfg);
    let opts = ShapedOptions { max_evals, ..ShapedOptions::default() };
    let r = solutionsearch::optimize_shaped(&base, xi0, t0, &target, &opts)?;
    let best = solutionsearch::pulse_at(&base, r.xi, r.gate_time);
    let doc = json!({
        "xi": num(r.xi),
        "delta_mhz": num(units::to_mhz(best.delta)),
        "gate_time_us": num(units::to_us(r.gate_time)),
        "fmin": num(r.fmin),
        "start_xi": num(xi0),
        "start_gate_time_us": num(units::to_us(t0)),
        "start_fmin": num(r.start_fmin),
        "evals": r.evals,
        "converged": r.converged,
        "unimproved": r.unimproved,
        "delta_t_ns": num(cfg.physics.delta_t_ns),
        "target": { "phi": num(target.phi), "convention": convention_name(target.convention) },
    });
    let report = pretty(&doc);
    let n = 401;
    let mut env = String::from("t_us,envelope\n");
    for k in 0..n {
        let t = r.gate_time * k as f64 / (n - 1) as f64;
        env.push_str(&format!("{},{}\n", fmt_sig(units::to_us(t)), fmt_sig(hamiltonians::erf_envelope(t, r.gate_time, delta_t))));
    }
    let trace = trace_csv(&population_trace(&best, n)?);
    Ok(Outputs {
        stdout: if format == Some(Format::Csv) { env.clone() } else { report.clone() },
        files: vec![("shaped.json".into(), report), ("envelope.csv".into(), env), ("populations.csv".into(), trace)],
        warnings: if r.unimproved { vec!["optimizer did not improve on the starting point".into()] } else { vec![] },
    })
}

/// Published values for the five reference solutions:
/// `(ξ, f, T/τ₁, T/τ₂, F_min, F̃_min, F̃_D,min)`.
pub const REFERENCE_TABLE: [(f64, f64, f64, f64, f64, f64, f64); 5] = [
    (3.840, -0.9707, 7.94, 11.00, 0.9633, 0.9633, 0.9598),
    (1.743, 0.9941, 6.03, 7.98, 0.9938, 0.9938, 0.9920),
    (1.428, -0.9955, 6.98, 9.02, 0.9948, 0.9948, 0.9921),
    (2.558, -0.9983, 10.99, 15.01, 0.9979, 0.9969, 0.9898),
    (1.894, 0.9985, 14.99, 20.01, 0.9990, 0.9973, 0.9853),
];

fn cmd_table1(cfg: &RunConfig, doppler_khz: f64, format: Option<Format>) -> Result<Outputs> {
    let omega = cfg.omega();
    let delta_rr = cfg.delta_rr();
    let noise = NoiseConfig::doppler(units::khz_angular(doppler_khz), cfg.noise.trials, cfg.noise.seed);
    noise.validate()?;
    let cols = ["xi", "f", "tg_over_tau1", "tg_over_tau2", "f_min", "f_min_blockade", "f_min_doppler"];
    let mut csv = String::from("m");
    for c in cols {
        csv.push_str(&format!(",{c},d_{c}"));
    }
    csv.push('\n');
    let mut rows = vec![];
    for (k, &(m, xi_seed)) in solutionsearch::TABLE_SEEDS.iter().enumerate() {
        let c = solutionsearch::polish_near(m, xi_seed, 0.01, &Condition::Cz)
            .ok_or_else(|| Error::invalid(format!("no solution near m = {m}, xi = {xi_seed}")))?;
        let p = c.pulse(omega, delta_rr);
        let target = c.target();
        let u = hamiltonians::full_propagator(&p, &AtomDetunings::ZERO, DEFAULT_DT_MAX)?;
        let g = gateanalysis::extract_gate(&u, p.duration, p.delta)?;
        let f_blockade = gateanalysis::min_fidelity(&g, &target).value;
        let mc = noisemc::monte_carlo(&p, &noise, &target)?;
        let values = [c.xi, c.condition_value, c.tg_over_tau1, c.tg_over_tau2, c.predicted_fmin, f_blockade, mc.mean_min_fidelity];
        let r = REFERENCE_TABLE[k];
        let refs = [r.0, r.1, r.2, r.3, r.4, r.5, r.6];
        csv.push_str(&m.to_string());
        let mut row = serde_json::Map::new();
        row.insert("m".into(), json!(m));
        row.insert("convention".into(), json!(convention_name(c.convention)));
        for (i, name) in cols.iter().enumerate() {
            csv.push_str(&format!(",{},{}", fmt_sig(values[i]), fmt_sig(values[i] - refs[i])));
            row.insert(name.to_string(), num(values[i]));
            row.insert(format!("d_{name}"), num(values[i] - refs[i]));
        }
        csv.push('\n');
        rows.push(Value::Object(row));
    }
    let json_text = pretty(&json!({
        "omega_mhz": num(cfg.physics.omega_mhz),
        "delta_rr_ghz": num(cfg.physics.delta_rr_ghz),
        "doppler_khz": num(doppler_khz),
        "trials": cfg.noise.trials,
        "seed": cfg.noise.seed,
        "rows": rows,
    }));
    Ok(Outputs {
        stdout: if format == Some(Format::Json) { json_text.clone() } else { csv.clone() },
        files: vec![("table1.csv".into(), csv), ("table1.json".into(), json_text)],
        warnings: vec![],
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_capture(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let mut full = vec!["rydgate"];
        full.extend_from_slice(args);
        let code = run(full, &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn xi_and_delta_conflict() {
        let (code, _, err) = run_capture(&["gate", "--xi", "1.4", "--delta-mhz", "3.5"]);
        assert_eq!(code, EXIT_INVALID);
        assert!(err.contains("exactly one"));
    }

    #[test]
    fn unknown_axis_lists_valid_ones() {
        let (code, _, err) = run_capture(&["sweep", "--axis", "temperature"]);
        assert_eq!(code, EXIT_INVALID);
        assert!(err.contains("delta_rr, sigma_doppler, delta_omega"));
    }

    #[test]
    fn negative_sigma_rejected() {
        let (code, _, _) = run_capture(&["noise", "--sigma-doppler-khz", "-5", "--trials", "3"]);
        assert_eq!(code, EXIT_INVALID);
    }

    #[test]
    fn bad_flag_is_invalid_input() {
        assert_eq!(run_capture(&["gate", "--no-such-flag"]).0, EXIT_INVALID);
        assert_eq!(run_capture(&["--help"]).0, EXIT_OK);
    }

    #[test]
    fn empty_search_warns() {
        let (code, out, err) = run_capture(&["search", "--m-max", "1", "--xi-max", "0.01"]);
        assert_eq!(code, EXIT_OK);
        assert_eq!(out.lines().count(), 1);
        assert!(err.contains("warning"));
    }

    #[test]
    fn values_parse() {
        assert_eq!(parse_values("1, 2,4").unwrap(), vec![1.0, 2.0, 4.0]);
        assert!(parse_values("1,x").is_err());
    }
}
