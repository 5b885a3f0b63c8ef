//! Declarative jobs: a JSON config names one operation and its inputs, and
//! `run` turns it into a deterministic report plus optional CSV rows.
//!
//! Every input field accepts either an inline JSON value or a path to a
//! JSON file, resolved against the directory of the job file.

use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::curve::{connection_samples, curve_phase, line_integral, o_null_curve, ParamCurve};
use crate::dynamics::{projective_cycle_amplitude, two_level_phase, TwoLevelKind, TwoLevelParams};
use crate::error::Error;
use crate::hilbert::{angle_distance, Complex, Observable, StateVector, Tolerances};
use crate::json::{fmt_f64, to_report_string, JsonComplex};
use crate::perturbation::{energy_shift, third_order_phase_terms, EigenSystem};
use crate::phase::{generalized_phase_chain, pancharatnam_phase};
use crate::random;
use crate::scattering::{
    born_forward_amplitude, lippmann_schwinger_solve, optical_residual, separable_born_amplitude, separable_tmatrix,
    triple_product_phases, GridModel, SeparableModel,
};

/// Failures outside the numerical domain: unreadable files, malformed JSON.
#[derive(Debug, Error)]
pub enum JobError {
    #[error("{path}: {message}")]
    Io { path: PathBuf, message: String },
    #[error("{0}")]
    Parse(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Input<T> {
    Path(PathBuf),
    Inline(T),
}

impl<T: DeserializeOwned + Clone> Input<T> {
    pub fn load(&self, base: &Path) -> Result<T, JobError> {
        match self {
            Input::Inline(v) => Ok(v.clone()),
            Input::Path(p) => read_json(&base.join(p)),
        }
    }
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, JobError> {
    let text = fs::read_to_string(path).map_err(|e| JobError::Io {
        path: path.to_owned(),
        message: e.to_string(),
    })?;
    serde_json::from_str(&text).map_err(|e| JobError::Parse(format!("{}: {e}", path.display())))
}

type RawMatrix = Vec<Vec<JsonComplex>>;

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceOverrides {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub zero: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub herm: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phase: Option<f64>,
}

impl ToleranceOverrides {
    pub fn apply(&self, mut tol: Tolerances) -> Tolerances {
        tol.zero = self.zero.unwrap_or(tol.zero);
        tol.herm = self.herm.unwrap_or(tol.herm);
        tol.phase = self.phase.unwrap_or(tol.phase);
        tol
    }
}

fn default_tau() -> f64 {
    1.0
}

fn default_samples() -> usize {
    2001
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "kebab-case")]
pub enum ScatterJob {
    Grid {
        grid: Input<GridModel>,
        #[serde(default)]
        incoming: usize,
    },
    Separable {
        beta: f64,
        coupling: f64,
        mass: f64,
        k: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum Command {
    /// Chain phase of a list of states; plain overlaps without an observable.
    Phase {
        states: Input<Vec<StateVector>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        observable: Option<Input<RawMatrix>>,
        #[serde(default)]
        identity: bool,
    },
    Curve {
        curve: Input<ParamCurve>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        observable: Option<Input<RawMatrix>>,
    },
    NullCurve {
        a: Input<StateVector>,
        b: Input<StateVector>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        observable: Option<Input<RawMatrix>>,
        #[serde(default = "default_samples")]
        samples: usize,
        #[serde(default = "default_tau")]
        tau: f64,
    },
    /// Projective cycle on the first three computational basis states; a
    /// seeded random 3-level Hamiltonian stands in when `h` is absent.
    Cycle {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        h: Option<Input<RawMatrix>>,
        epsilon: f64,
    },
    TwoLevel {
        kind: TwoLevelKind,
        theta: f64,
        phi: f64,
    },
    Perturb {
        h0: Input<Vec<f64>>,
        v: Input<RawMatrix>,
        #[serde(default)]
        level: usize,
        lambda: f64,
    },
    Scatter(ScatterJob),
    /// Runs `template` once per value with the dotted `param` replaced.
    Sweep {
        template: Input<Value>,
        param: String,
        values: Vec<f64>,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Phase { .. } => "phase",
            Command::Curve { .. } => "curve",
            Command::NullCurve { .. } => "null-curve",
            Command::Cycle { .. } => "cycle",
            Command::TwoLevel { .. } => "two-level",
            Command::Perturb { .. } => "perturb",
            Command::Scatter(_) => "scatter",
            Command::Sweep { .. } => "sweep",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JobConfig {
    #[serde(flatten)]
    pub command: Command,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub csv: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "is_default")]
    pub tolerances: ToleranceOverrides,
    #[serde(default)]
    pub seed: u64,
}

fn is_default(t: &ToleranceOverrides) -> bool {
    *t == ToleranceOverrides::default()
}

impl JobConfig {
    pub fn new(command: Command) -> Self {
        JobConfig {
            command,
            output: None,
            csv: None,
            tolerances: ToleranceOverrides::default(),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub command: String,
    pub config: Value,
    pub tolerances: Tolerances,
    pub seed: u64,
    pub status: String,
    #[serde(default, skip_serializing_if = "Value::is_null")]
    pub results: Value,
    #[serde(default, skip_serializing_if = "Value::is_null")]
    pub diagnostics: Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<Error>,
}

impl RunReport {
    pub fn is_ok(&self) -> bool {
        self.error.is_none()
    }

    /// 0 on success, 2 on a domain error.
    pub fn exit_code(&self) -> u8 {
        if self.is_ok() {
            0
        } else {
            2
        }
    }

    pub fn to_json(&self) -> String {
        to_report_string(self).expect("report values serialise")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub report: RunReport,
    pub csv: Option<String>,
}

/// Headline numbers of a successful run, used for sweep rows.
struct Success {
    results: Value,
    diagnostics: Value,
    csv: Option<String>,
    headline: Vec<(&'static str, f64)>,
}

enum Failure {
    Domain(Error),
    Job(JobError),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Domain(e)
    }
}

impl From<JobError> for Failure {
    fn from(e: JobError) -> Self {
        Failure::Job(e)
    }
}

type Step = Result<Success, Failure>;

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report values serialise")
}

fn load_observable(input: &Input<RawMatrix>, base: &Path, tol: &Tolerances) -> Result<Observable, Failure> {
    let rows = input.load(base)?;
    let n = rows.len();
    if let Some(bad) = rows.iter().find(|r| r.len() != n) {
        return Err(Error::NotSquare {
            rows: n,
            cols: bad.len(),
        }
        .into());
    }
    let m = DMatrix::from_fn(n, n, |i, j| Complex::from(rows[i][j]));
    Ok(Observable::with_tolerance(m, tol)?)
}

fn optional_observable(
    input: &Option<Input<RawMatrix>>,
    base: &Path,
    dim: usize,
    tol: &Tolerances,
) -> Result<Observable, Failure> {
    match input {
        Some(i) => load_observable(i, base, tol),
        None => Ok(Observable::identity(dim)),
    }
}

/// Runs a job. `base` resolves relative input paths. Domain errors become
/// a report with `status = "error"`; I/O and parse failures are `Err`.
pub fn run(config: &JobConfig, base: &Path) -> Result<Outcome, JobError> {
    let tol = config
        .tolerances
        .apply(Tolerances::from_env().map_err(|e| JobError::Parse(e.to_string()))?);
    let mut report = RunReport {
        command: config.command.name().to_owned(),
        config: to_value(&config.command),
        tolerances: tol,
        seed: config.seed,
        status: "ok".into(),
        results: Value::Null,
        diagnostics: Value::Null,
        error: None,
    };
    if let Err(e) = tol.validate() {
        report.status = "error".into();
        report.error = Some(e);
        return Ok(Outcome { report, csv: None });
    }
    match dispatch(config, base, &tol) {
        Ok(s) => {
            report.results = s.results;
            report.diagnostics = s.diagnostics;
            Ok(Outcome { report, csv: s.csv })
        }
        Err(Failure::Domain(e)) => {
            report.status = "error".into();
            report.error = Some(e);
            Ok(Outcome { report, csv: None })
        }
        Err(Failure::Job(e)) => Err(e),
    }
}

fn dispatch(config: &JobConfig, base: &Path, tol: &Tolerances) -> Step {
    match &config.command {
        Command::Phase {
            states,
            observable,
            identity,
        } => run_phase(states, observable, *identity, base, tol),
        Command::Curve { curve, observable } => run_curve(curve, observable, base, tol),
        Command::NullCurve {
            a,
            b,
            observable,
            samples,
            tau,
        } => run_null_curve(a, b, observable, *samples, *tau, base, tol),
        Command::Cycle { h, epsilon } => run_cycle(h, *epsilon, config.seed, base, tol),
        Command::TwoLevel { kind, theta, phi } => run_two_level(*kind, *theta, *phi, tol),
        Command::Perturb { h0, v, level, lambda } => run_perturb(h0, v, *level, *lambda, base, tol),
        Command::Scatter(job) => run_scatter(job, base, tol),
        Command::Sweep {
            template,
            param,
            values,
        } => run_sweep(config, template, param, values, base),
    }
}

fn run_phase(
    states: &Input<Vec<StateVector>>,
    observable: &Option<Input<RawMatrix>>,
    identity: bool,
    base: &Path,
    tol: &Tolerances,
) -> Step {
    let states = states.load(base)?;
    let r = if identity || observable.is_none() {
        pancharatnam_phase(&states, tol)?
    } else {
        let dim = states.first().map_or(0, StateVector::dim);
        let o = optional_observable(observable, base, dim, tol)?;
        generalized_phase_chain(&states, &o, tol)?
    };
    Ok(Success {
        diagnostics: json!({ "min_link_modulus": r.min_link_modulus }),
        headline: vec![("phase", r.value)],
        results: to_value(&r),
        csv: None,
    })
}

fn run_curve(curve: &Input<ParamCurve>, observable: &Option<Input<RawMatrix>>, base: &Path, tol: &Tolerances) -> Step {
    let curve = curve.load(base)?;
    let o = optional_observable(observable, base, curve.dim(), tol)?;
    let r = curve_phase(&curve, &o, tol)?;
    let conn = connection_samples(&curve, &o, tol)?;
    // Richardson estimate from the curve on every other sample
    let estimate = if curve.len() % 2 == 1 && curve.len() >= 5 {
        let params = curve.params().iter().step_by(2).copied().collect();
        let states = curve.states().iter().step_by(2).cloned().collect();
        let coarse = ParamCurve::new(params, states)?;
        curve_phase(&coarse, &o, tol)
            .ok()
            .map(|c| angle_distance(c.value, r.value) / 3.0)
    } else {
        None
    };
    Ok(Success {
        diagnostics: json!({
            "min_link_modulus": r.min_link_modulus,
            "min_expectation": conn.min_expectation,
            "extrapolated_samples": conn.extrapolated,
            "discretization_error_estimate": estimate,
        }),
        headline: vec![("phase", r.value), ("line_integral", conn.integral())],
        results: json!({ "phase": r, "line_integral": conn.integral() }),
        csv: Some(conn.to_csv()),
    })
}

#[allow(clippy::too_many_arguments)]
fn run_null_curve(
    a: &Input<StateVector>,
    b: &Input<StateVector>,
    observable: &Option<Input<RawMatrix>>,
    samples: usize,
    tau: f64,
    base: &Path,
    tol: &Tolerances,
) -> Step {
    let (a, b) = (a.load(base)?, b.load(base)?);
    let o = optional_observable(observable, base, a.dim(), tol)?;
    let curve = o_null_curve(&a, &b, &o, tau, samples, tol)?;
    let r = curve_phase(&curve, &o, tol)?;
    let conn = connection_samples(&curve, &o, tol)?;
    let integral = line_integral(&curve, &o, tol)?;
    Ok(Success {
        diagnostics: json!({
            "min_link_modulus": r.min_link_modulus,
            "extrapolated_samples": conn.extrapolated,
        }),
        headline: vec![("phase", r.value), ("line_integral", integral)],
        results: json!({ "phase": r, "line_integral": integral, "curve": curve }),
        csv: Some(conn.to_csv()),
    })
}

fn run_cycle(h: &Option<Input<RawMatrix>>, epsilon: f64, seed: u64, base: &Path, tol: &Tolerances) -> Step {
    let h = match h {
        Some(h) => load_observable(h, base, tol)?,
        None => random::hermitian(&mut random::rng(seed), 3),
    };
    if h.dim() < 3 {
        return Err(Error::invalid("h", format!("need at least 3 levels, got {}", h.dim())).into());
    }
    let basis: Vec<StateVector> = (0..3)
        .map(|i| StateVector::basis(h.dim(), i))
        .collect::<crate::Result<_>>()?;
    let r = projective_cycle_amplitude(&h, [&basis[0], &basis[1], &basis[2]], epsilon, tol)?;
    let error = angle_distance(r.extracted_phase, r.limit_phase);
    Ok(Success {
        diagnostics: json!({ "limit_error": error, "amplitude_modulus": r.amplitude.norm() }),
        headline: vec![("extracted_phase", r.extracted_phase), ("limit_error", error)],
        csv: Some(format!(
            "epsilon,extracted_phase,limit_phase,limit_error\n{},{},{},{}\n",
            fmt_f64(epsilon),
            fmt_f64(r.extracted_phase),
            fmt_f64(r.limit_phase),
            fmt_f64(error)
        )),
        results: to_value(&r),
    })
}

fn run_two_level(kind: TwoLevelKind, theta: f64, phi: f64, tol: &Tolerances) -> Step {
    let p = TwoLevelParams::new(theta, phi)?;
    let phase = two_level_phase(kind, p, tol)?;
    let chain = generalized_phase_chain(&p.chain(), &kind.observable(), tol)?;
    let deviation = angle_distance(phase, chain.value);
    Ok(Success {
        diagnostics: json!({ "min_link_modulus": chain.min_link_modulus, "closed_form_vs_chain": deviation }),
        headline: vec![("phase", phase)],
        results: json!({ "kind": kind, "theta": theta, "phi": phi, "phase": phase, "chain_phase": chain.value }),
        csv: Some(format!(
            "theta,phi,phase\n{},{},{}\n",
            fmt_f64(theta),
            fmt_f64(phi),
            fmt_f64(phase)
        )),
    })
}

fn run_perturb(
    h0: &Input<Vec<f64>>,
    v: &Input<RawMatrix>,
    level: usize,
    lambda: f64,
    base: &Path,
    tol: &Tolerances,
) -> Step {
    let sys = EigenSystem::from_diagonal(&h0.load(base)?)?;
    let v = load_observable(v, base, tol)?;
    let shift = energy_shift(&sys, &v, level, lambda)?;
    let table = third_order_phase_terms(&sys, &v, level, tol)?;
    Ok(Success {
        diagnostics: json!({ "imag_residue": shift.imag_residue }),
        headline: vec![("shift", shift.total()), ("order3", shift.order3)],
        results: json!({
            "energies": sys.energies(),
            "shift": shift,
            "total": shift.total(),
            "phase_terms": table,
        }),
        csv: Some(table.to_csv()),
    })
}

fn run_scatter(job: &ScatterJob, base: &Path, tol: &Tolerances) -> Step {
    match job {
        ScatterJob::Grid { grid, incoming } => {
            let model = grid.load(base)?;
            let born = born_forward_amplitude(&model, *incoming)?;
            let table = triple_product_phases(&model, *incoming)?;
            let solution = lippmann_schwinger_solve(&model, *incoming)?;
            Ok(Success {
                diagnostics: json!({
                    "condition": solution.condition,
                    "residual": solution.residual,
                    "spectral_radius": solution.spectral_radius,
                    "born_convergent": solution.spectral_radius < 1.0,
                }),
                headline: vec![
                    ("born_re", born.forward_amplitude.re),
                    ("born_im", born.forward_amplitude.im),
                    ("exact_re", solution.forward_amplitude.re),
                    ("exact_im", solution.forward_amplitude.im),
                ],
                results: json!({ "born": born, "solution": solution, "triple_products": table }),
                csv: Some(table.to_csv()),
            })
        }
        ScatterJob::Separable {
            beta,
            coupling,
            mass,
            k,
        } => {
            let model = SeparableModel::new(*coupling, *beta, *mass)?;
            let exact = separable_tmatrix(&model, *k, tol)?;
            let born2 = separable_born_amplitude(&model, *k, 2)?;
            let loop_integral = model.loop_integral(*k)?;
            let residual = optical_residual(exact, *k);
            Ok(Success {
                diagnostics: json!({
                    "optical_residual": residual,
                    "born2_optical_residual": optical_residual(born2, *k),
                    "coupling_times_loop": (loop_integral * *coupling).norm(),
                }),
                headline: vec![
                    ("exact_re", exact.re),
                    ("exact_im", exact.im),
                    ("born2_re", born2.re),
                    ("born2_im", born2.im),
                ],
                results: json!({
                    "exact": JsonComplex::from(exact),
                    "born2": JsonComplex::from(born2),
                    "loop_integral": JsonComplex::from(loop_integral),
                    "optical_residual": residual,
                }),
                csv: None,
            })
        }
    }
}

/// Replaces the value at a dotted path, creating objects along the way.
fn set_path(root: &mut Value, path: &str, value: Value) -> Result<(), JobError> {
    let mut node = root;
    let mut parts = path.split('.').peekable();
    while let Some(part) = parts.next() {
        let map = node
            .as_object_mut()
            .ok_or_else(|| JobError::Parse(format!("sweep parameter {path:?} does not address an object field")))?;
        if parts.peek().is_none() {
            map.insert(part.to_owned(), value);
            return Ok(());
        }
        node = map.entry(part.to_owned()).or_insert_with(|| json!({}));
    }
    Err(JobError::Parse("empty sweep parameter".into()))
}

fn run_sweep(outer: &JobConfig, template: &Input<Value>, param: &str, values: &[f64], base: &Path) -> Step {
    let template = template.load(base)?;
    let mut rows = Vec::with_capacity(values.len());
    let mut header: Option<Vec<&'static str>> = None;
    let mut csv = String::new();
    for &x in values {
        let mut job = template.clone();
        set_path(&mut job, param, json!(x))?;
        let mut config: JobConfig =
            serde_json::from_value(job).map_err(|e| JobError::Parse(format!("sweep template: {e}")))?;
        if matches!(config.command, Command::Sweep { .. }) {
            return Err(JobError::Parse("sweep templates cannot nest".into()).into());
        }
        if config.tolerances == ToleranceOverrides::default() {
            config.tolerances = outer.tolerances;
        }
        let tol = config
            .tolerances
            .apply(Tolerances::from_env().map_err(|e| JobError::Parse(e.to_string()))?);
        match dispatch(&config, base, &tol) {
            Ok(s) => {
                let names: Vec<&'static str> = s.headline.iter().map(|(n, _)| *n).collect();
                if header.is_none() {
                    csv.push_str(&format!("{param},{}\n", names.join(",")));
                    header = Some(names);
                }
                let cells: Vec<String> = s.headline.iter().map(|(_, v)| fmt_f64(*v)).collect();
                csv.push_str(&format!("{},{}\n", fmt_f64(x), cells.join(",")));
                rows.push(json!({ "value": x, "status": "ok", "results": s.results, "diagnostics": s.diagnostics }));
            }
            Err(Failure::Domain(e)) => rows.push(json!({ "value": x, "status": "error", "error": e })),
            Err(Failure::Job(e)) => return Err(e.into()),
        }
    }
    let failed = rows.iter().filter(|r| r["status"] == "error").count();
    Ok(Success {
        results: json!({ "param": param, "rows": rows }),
        diagnostics: json!({ "points": values.len(), "failed": failed }),
        headline: Vec::new(),
        csv: Some(csv),
    })
}
