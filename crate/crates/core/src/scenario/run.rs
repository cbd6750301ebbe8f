//! Running scenarios: exact traces, closed-form comparison, CSV output and
//! parameter sweeps.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;

use crate::dynamics::{
    evolve, evolve_schedule, first_return_time, probability_trace, uniform_times, QuenchSchedule, StateVector,
    TimeTrace, TraceRequest,
};
use crate::effective::{EffectivePrediction, Provenance, Scenario};
use crate::entanglement::{concurrence, fidelity_to_target, reduce};
use crate::error::{Error, Result};

use super::config::{ScenarioConfig, ScenarioName};
use super::resolve::{measured_gap, resolve, ResolvedScenario};

pub const TRACE_FILE: &str = "trace.csv";
pub const PREDICTION_FILE: &str = "prediction.csv";
pub const COMPARISON_FILE: &str = "comparison.csv";
pub const SPECTRUM_FILE: &str = "spectrum.csv";
pub const SWEEP_FILE: &str = "sweep.csv";

pub fn initial_state(r: &ResolvedScenario) -> Result<StateVector> {
    StateVector::basis_state(r.basis().clone(), &r.initial)
}

pub fn trace_request(r: &ResolvedScenario) -> TraceRequest {
    TraceRequest {
        tracked: r.tracked.clone(),
        targets: r.target.iter().cloned().collect(),
        concurrence_pairs: r.concurrence_pairs.clone(),
        plain_fidelity: false,
        check_closure: true,
    }
}

/// Exact trace over the scenario window, through the quench if one is set.
pub fn compute_trace(r: &ResolvedScenario) -> Result<TimeTrace> {
    let psi0 = initial_state(r)?;
    let times = uniform_times(r.t_max, r.samples);
    let request = trace_request(r);
    match &r.quench {
        None => probability_trace(&r.spectrum, &psi0, &request, &times),
        Some(q) => {
            let schedule = QuenchSchedule::new(vec![(r.chain.clone(), q.at), (q.detuned.clone(), 0.0)])?;
            evolve_schedule(&schedule, &psi0, &request, &times)
        }
    }
}

/// Closed-form probabilities of the tracked configurations, in tracked order
/// (initial configuration first).
pub fn closed_form_probabilities(pred: &EffectivePrediction, t: f64) -> Result<Vec<f64>> {
    Ok(match pred.scenario {
        Scenario::WFourDefects => {
            let (centre, side) = pred.w_probabilities(t)?;
            vec![centre, side, side]
        }
        _ => {
            let (stay, transfer) = pred.two_level_probabilities(t)?;
            vec![stay, transfer]
        }
    })
}

/// Largest `|P_exact − P_closed|` over the samples at or before `until`.
pub fn max_probability_deviation(trace: &TimeTrace, pred: &EffectivePrediction, until: f64) -> Result<f64> {
    let mut worst = 0.0f64;
    for (row, &t) in trace.probabilities.iter().zip(&trace.times) {
        if t > until {
            break;
        }
        for (p, q) in row.iter().zip(closed_form_probabilities(pred, t)?) {
            worst = worst.max((p - q).abs());
        }
    }
    Ok(worst)
}

#[derive(Debug, Clone, Default)]
pub struct Comparison {
    pub predicted_gap: Option<f64>,
    pub measured_gap: Option<f64>,
    pub gap_relative_error: Option<f64>,
    pub max_probability_deviation: Option<f64>,
    pub first_instant: Option<f64>,
    pub fidelity_at_first_instant: Option<f64>,
    pub concurrence_at_first_instant: Option<f64>,
    pub peak_fidelity: Option<f64>,
    pub peak_fidelity_time: Option<f64>,
}

pub fn compare(r: &ResolvedScenario, trace: &TimeTrace) -> Result<Comparison> {
    let measured = measured_gap(&r.spectrum, r.basis(), &r.tracked, r.levels())?;
    let mut out = Comparison {
        measured_gap: measured,
        ..Default::default()
    };
    if !trace.fidelities.is_empty() && !trace.fidelity_labels.is_empty() {
        let (i, f) = trace
            .fidelity_column(0)
            .into_iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .expect("trace has samples");
        out.peak_fidelity = Some(f);
        out.peak_fidelity_time = Some(trace.times[i]);
    }
    if let Some(pred) = &r.prediction {
        out.predicted_gap = Some(pred.gap);
        out.gap_relative_error = measured.map(|m| (m - pred.gap).abs() / pred.gap);
        let until = r.quench.as_ref().map_or(f64::INFINITY, |q| q.at);
        out.max_probability_deviation = Some(max_probability_deviation(trace, pred, until)?);
        if let Some(&t0) = pred.entanglement_times.first() {
            let psi = evolve(&r.spectrum, &initial_state(r)?, t0)?;
            out.first_instant = Some(t0);
            if let Some(target) = &r.target {
                out.fidelity_at_first_instant = Some(fidelity_to_target(&psi, target, true)?);
            }
            if let Some(&(a, b)) = r.concurrence_pairs.first() {
                out.concurrence_at_first_instant = Some(concurrence(&reduce(&psi, &[a, b])?)?);
            }
        }
    }
    Ok(out)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir)?;
        }
    }
    Ok(BufWriter::new(File::create(path)?))
}

fn csv_error(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Numeric(format!("csv output failed: {other:?}")),
    }
}

/// Opens `path` and writes the `#` preamble with the resolved config.
fn csv_with_preamble(path: &Path, title: &str, config: &ScenarioConfig) -> Result<csv::Writer<BufWriter<File>>> {
    let mut file = create(path)?;
    writeln!(file, "# {title}")?;
    writeln!(file, "# times are T = B t; energies in units of B")?;
    for line in config.to_toml_string().lines() {
        writeln!(file, "# {line}")?;
    }
    Ok(csv::WriterBuilder::new().from_writer(file))
}

fn num(x: f64) -> String {
    format!("{x}")
}

pub fn write_trace(path: &Path, r: &ResolvedScenario, trace: &TimeTrace) -> Result<()> {
    let mut w = csv_with_preamble(path, "exact dynamics trace", &r.config)?;
    let header: Vec<&str> = std::iter::once("T")
        .chain(trace.probability_labels.iter().map(String::as_str))
        .chain(trace.fidelity_labels.iter().map(String::as_str))
        .chain(trace.concurrence_labels.iter().map(String::as_str))
        .collect();
    w.write_record(&header).map_err(csv_error)?;
    for (i, &t) in trace.times.iter().enumerate() {
        let row: Vec<String> = std::iter::once(t)
            .chain(trace.probabilities[i].iter().copied())
            .chain(trace.fidelities[i].iter().copied())
            .chain(trace.concurrences[i].iter().copied())
            .map(num)
            .collect();
        w.write_record(&row).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

fn scenario_tag(s: Scenario) -> String {
    match s {
        Scenario::OneExcitationPair { mu } => format!("one-excitation-pair-mu{mu}"),
        Scenario::BoundPairSingleDefect => "bound-pair-single-defect".into(),
        Scenario::FirstOrderEpr => "first-order-epr".into(),
        Scenario::WFourDefects => "w-four-defects".into(),
    }
}

/// `(quantity, value)` rows describing a prediction.
pub fn prediction_rows(pred: &EffectivePrediction) -> Vec<(String, String)> {
    let mut rows = vec![
        ("scenario".to_string(), scenario_tag(pred.scenario)),
        (
            "provenance".to_string(),
            match pred.provenance {
                Provenance::ClosedForm => "closed-form",
                Provenance::FirstOrderConstruction => "first-order-construction",
            }
            .to_string(),
        ),
        ("gap".to_string(), num(pred.gap)),
        ("period".to_string(), num(pred.period)),
    ];
    if let Some(levels) = &pred.effective_energies {
        rows.extend(
            levels
                .iter()
                .enumerate()
                .map(|(i, e)| (format!("energy_{}", i + 1), num(*e))),
        );
    }
    if let Some(m) = &pred.effective_matrix {
        for r in 0..m.nrows() {
            for c in 0..m.ncols() {
                rows.push((format!("matrix_{}_{}", r + 1, c + 1), num(m[(r, c)])));
            }
        }
    }
    rows.extend(
        pred.entanglement_times
            .iter()
            .enumerate()
            .map(|(k, t)| (format!("instant_{k}"), num(*t))),
    );
    rows.extend(pred.warnings.iter().map(|w| ("warning".to_string(), w.clone())));
    rows
}

fn write_rows(path: &Path, title: &str, config: &ScenarioConfig, rows: &[(String, String)]) -> Result<()> {
    let mut w = csv_with_preamble(path, title, config)?;
    w.write_record(["quantity", "value"]).map_err(csv_error)?;
    for (k, v) in rows {
        w.write_record([k, v]).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_prediction(path: &Path, r: &ResolvedScenario, pred: &EffectivePrediction) -> Result<()> {
    write_rows(path, "effective-model prediction", &r.config, &prediction_rows(pred))
}

pub fn comparison_rows(c: &Comparison) -> Vec<(String, String)> {
    [
        ("predicted_gap", c.predicted_gap),
        ("measured_gap", c.measured_gap),
        ("gap_relative_error", c.gap_relative_error),
        ("max_probability_deviation", c.max_probability_deviation),
        ("first_instant", c.first_instant),
        ("fidelity_at_first_instant", c.fidelity_at_first_instant),
        ("concurrence_at_first_instant", c.concurrence_at_first_instant),
        ("peak_fidelity", c.peak_fidelity),
        ("peak_fidelity_time", c.peak_fidelity_time),
    ]
    .into_iter()
    .filter_map(|(k, v)| v.map(|v| (k.to_string(), num(v))))
    .collect()
}

pub fn write_comparison(path: &Path, r: &ResolvedScenario, c: &Comparison) -> Result<()> {
    write_rows(
        path,
        "exact dynamics vs effective model",
        &r.config,
        &comparison_rows(c),
    )
}

/// Eigenvalues with each eigenvector's weight on the tracked configurations.
pub fn write_spectrum(path: &Path, r: &ResolvedScenario) -> Result<()> {
    let ordinals: Vec<usize> = r.tracked.iter().map(|c| r.basis().index_of(c)).collect::<Result<_>>()?;
    let mut w = csv_with_preamble(path, "sector spectrum", &r.config)?;
    w.write_record(["index", "energy", "tracked_weight"])
        .map_err(csv_error)?;
    for m in 0..r.spectrum.dim() {
        let weight = super::resolve::weight_on(&r.spectrum, m, &ordinals);
        w.write_record([m.to_string(), num(r.spectrum.eigenvalues[m]), num(weight)])
            .map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

/// Files produced by a run.
#[derive(Debug, Clone, Default)]
pub struct RunOutput {
    pub trace: Option<PathBuf>,
    pub prediction: Option<PathBuf>,
    pub comparison: Option<PathBuf>,
    pub spectrum: Option<PathBuf>,
}

/// Which artifacts a run should write.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunMode {
    Spectrum,
    Evolve,
    Predict,
    Compare,
}

/// Output directory: the explicit argument, then the config, then `out`.
pub fn output_dir(cfg: &ScenarioConfig, explicit: Option<&Path>) -> PathBuf {
    explicit
        .map(Path::to_path_buf)
        .or_else(|| cfg.output.dir.clone())
        .unwrap_or_else(|| PathBuf::from("out"))
}

/// Resolves `cfg` and writes the artifacts for `mode` into `dir`.
pub fn run_scenario(cfg: &ScenarioConfig, mode: RunMode, dir: &Path) -> Result<RunOutput> {
    let r = resolve(cfg)?;
    let mut out = RunOutput::default();
    if mode == RunMode::Spectrum {
        let p = dir.join(SPECTRUM_FILE);
        write_spectrum(&p, &r)?;
        out.spectrum = Some(p);
        return Ok(out);
    }
    if matches!(mode, RunMode::Predict | RunMode::Compare) {
        if let Some(pred) = &r.prediction {
            let p = dir.join(PREDICTION_FILE);
            write_prediction(&p, &r, pred)?;
            out.prediction = Some(p);
        }
    }
    if matches!(mode, RunMode::Evolve | RunMode::Compare) {
        let trace = compute_trace(&r)?;
        let p = dir.join(TRACE_FILE);
        write_trace(&p, &r, &trace)?;
        out.trace = Some(p);
        if mode == RunMode::Compare {
            let cmp = compare(&r, &trace)?;
            let p = dir.join(COMPARISON_FILE);
            write_comparison(&p, &r, &cmp)?;
            out.comparison = Some(p);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParameter {
    G,
    Delta,
    Mu,
    NSites,
}

impl SweepParameter {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepParameter::G => "g",
            SweepParameter::Delta => "delta",
            SweepParameter::Mu => "mu",
            SweepParameter::NSites => "n",
        }
    }
}

impl FromStr for SweepParameter {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "g" => Ok(SweepParameter::G),
            "delta" | "Δ" => Ok(SweepParameter::Delta),
            "mu" | "μ" => Ok(SweepParameter::Mu),
            "n" | "N" | "n_sites" => Ok(SweepParameter::NSites),
            _ => Err(Error::Config(format!(
                "cannot sweep '{s}' (expected g, delta, mu or n)"
            ))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SweepRow {
    pub value: f64,
    pub predicted_gap: Option<f64>,
    pub measured_gap: Option<f64>,
    pub relative_error: Option<f64>,
    pub predicted_period: Option<f64>,
    /// First return of the initial configuration, from the exact dynamics.
    pub return_time: Option<f64>,
    pub peak_fidelity: Option<f64>,
}

fn whole(value: f64, what: &str) -> Result<usize> {
    if value >= 0.0 && value.fract() == 0.0 {
        Ok(value as usize)
    } else {
        Err(Error::Config(format!(
            "{what} must be a nonnegative integer, got {value}"
        )))
    }
}

fn with_parameter(base: &ScenarioConfig, param: SweepParameter, value: f64) -> Result<ScenarioConfig> {
    let mut cfg = base.clone();
    cfg.quench = None;
    match param {
        SweepParameter::G => cfg.defects.g = Some(value),
        SweepParameter::Delta => cfg.chain.anisotropy = Some(value),
        SweepParameter::Mu => {
            if cfg.scenario != ScenarioName::EprOneExcitation {
                return Err(Error::Config(format!(
                    "mu only applies to {}",
                    ScenarioName::EprOneExcitation
                )));
            }
            cfg.defects.mu = Some(whole(value, "mu")?);
            cfg.defects.m0 = None;
        }
        SweepParameter::NSites => cfg.chain.n_sites = Some(whole(value, "n")?),
    }
    Ok(cfg)
}

fn sweep_point(base: &ScenarioConfig, param: SweepParameter, value: f64) -> Result<SweepRow> {
    let r = resolve(&with_parameter(base, param, value)?)?;
    let measured = measured_gap(&r.spectrum, r.basis(), &r.tracked, r.levels())?;
    let predicted = r.prediction.as_ref().map(|p| p.gap);
    let period = predicted.or(measured).map(|g| 2.0 * std::f64::consts::PI / g);
    let psi0 = initial_state(&r)?;
    let return_time = match period {
        Some(p) => first_return_time(&r.spectrum, &psi0, &r.initial, 1.5 * p, r.samples.max(2000))?,
        None => None,
    };
    let peak_fidelity = match &r.target {
        Some(target) => {
            let request = TraceRequest {
                targets: vec![target.clone()],
                ..Default::default()
            };
            let trace = probability_trace(&r.spectrum, &psi0, &request, &uniform_times(r.t_max, r.samples))?;
            trace.fidelity_column(0).into_iter().reduce(f64::max)
        }
        None => None,
    };
    Ok(SweepRow {
        value,
        predicted_gap: predicted,
        measured_gap: measured,
        relative_error: predicted.zip(measured).map(|(p, m)| (m - p).abs() / p),
        predicted_period: r.prediction.as_ref().map(|p| p.period),
        return_time,
        peak_fidelity,
    })
}

/// One comparison row per parameter value. Points are evaluated in parallel.
pub fn run_compare_sweep(base: &ScenarioConfig, param: SweepParameter, values: &[f64]) -> Result<Vec<SweepRow>> {
    values.par_iter().map(|&v| sweep_point(base, param, v)).collect()
}

pub fn write_sweep(path: &Path, base: &ScenarioConfig, param: SweepParameter, rows: &[SweepRow]) -> Result<()> {
    let mut w = csv_with_preamble(path, &format!("sweep over {}", param.as_str()), base)?;
    w.write_record([
        param.as_str(),
        "predicted_gap",
        "measured_gap",
        "relative_error",
        "predicted_period",
        "return_time",
        "peak_fidelity",
    ])
    .map_err(csv_error)?;
    let opt = |x: Option<f64>| x.map(num).unwrap_or_default();
    for row in rows {
        w.write_record([
            num(row.value),
            opt(row.predicted_gap),
            opt(row.measured_gap),
            opt(row.relative_error),
            opt(row.predicted_period),
            opt(row.return_time),
            opt(row.peak_fidelity),
        ])
        .map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}
