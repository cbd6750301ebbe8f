//! Browser bindings. Each exported function returns a JSON string for the
//! page in `www/` to plot.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use xxz_defects::scenario::{
    closed_form_probabilities, compute_trace, resolve, weight_on, QuenchSection, ResolvedScenario, ScenarioConfig,
    ScenarioName,
};
use xxz_defects::{Error, Result};

/// Exact and closed-form curves on a common time grid.
#[derive(Debug, Serialize)]
pub struct Curves {
    pub times: Vec<f64>,
    /// One label per entry of `series`.
    pub labels: Vec<String>,
    pub series: Vec<Vec<f64>>,
    /// Closed-form probabilities of the tracked configurations, if any.
    pub predicted: Vec<Vec<f64>>,
    pub gap: Option<f64>,
    pub instants: Vec<f64>,
    pub quench_at: Option<f64>,
}

#[derive(Debug, Serialize)]
pub struct Spectrum {
    pub energies: Vec<f64>,
    /// Weight of each eigenvector on the tracked configurations.
    pub weights: Vec<f64>,
    pub tracked: Vec<String>,
}

fn curves(r: &ResolvedScenario) -> Result<Curves> {
    let trace = compute_trace(r)?;
    let n = trace.times.len();
    let mut labels = Vec::new();
    let mut series = Vec::new();
    for (i, l) in trace.probability_labels.iter().enumerate() {
        labels.push(l.clone());
        series.push(trace.probability_column(i));
    }
    for (i, l) in trace.fidelity_labels.iter().enumerate() {
        labels.push(l.clone());
        series.push(trace.fidelity_column(i));
    }
    for (i, l) in trace.concurrence_labels.iter().enumerate() {
        labels.push(l.clone());
        series.push(trace.concurrence_column(i));
    }
    let mut predicted = Vec::new();
    if let Some(pred) = &r.prediction {
        let rows = trace
            .times
            .iter()
            .map(|&t| closed_form_probabilities(pred, t))
            .collect::<Result<Vec<_>>>()?;
        let cols = rows.first().map_or(0, Vec::len);
        predicted = (0..cols).map(|c| (0..n).map(|i| rows[i][c]).collect()).collect();
    }
    Ok(Curves {
        times: trace.times,
        labels,
        series,
        predicted,
        gap: r.prediction.as_ref().map(|p| p.gap),
        instants: r
            .prediction
            .as_ref()
            .map(|p| p.entanglement_times.clone())
            .unwrap_or_default(),
        quench_at: r.quench.as_ref().map(|q| q.at),
    })
}

/// Four equal defects starting at `n0`, initial state on the centre pair.
pub fn w_state(delta: f64, g: f64, n0: usize, n_sites: usize, t_max: f64, samples: usize) -> Result<Curves> {
    let mut cfg = ScenarioConfig::preset(ScenarioName::WFourDefects);
    cfg.chain.anisotropy = Some(delta);
    cfg.chain.n_sites = Some(n_sites);
    cfg.defects.g = Some(g);
    cfg.defects.n0 = Some(n0);
    cfg.time.t_max = Some(t_max);
    cfg.time.samples = Some(samples);
    curves(&resolve(&cfg)?)
}

/// One excitation between two defects `mu` sites apart. A non-negative
/// `quench_at` detunes the second defect by `detuning` from then on.
pub fn epr_pair(mu: usize, g: f64, t_max: f64, samples: usize, quench_at: f64, detuning: f64) -> Result<Curves> {
    let mut cfg = ScenarioConfig::preset(ScenarioName::EprOneExcitation);
    cfg.defects.mu = Some(mu);
    cfg.defects.g = Some(g);
    cfg.chain.n_sites = Some(10 + mu);
    cfg.time.t_max = Some(t_max);
    cfg.time.samples = Some(samples);
    if quench_at >= 0.0 {
        cfg.quench = Some(QuenchSection {
            at: Some(quench_at),
            detuning,
            sites: None,
        });
    }
    curves(&resolve(&cfg)?)
}

/// Sector spectrum of a preset with the given chain length, defect strength
/// and anisotropy.
pub fn spectrum(scenario: &str, n_sites: usize, g: f64, delta: f64) -> Result<Spectrum> {
    let mut cfg = ScenarioConfig::preset(scenario.parse()?);
    cfg.chain.n_sites = Some(n_sites);
    cfg.chain.anisotropy = Some(delta);
    cfg.defects.g = Some(g);
    let r = resolve(&cfg)?;
    let ordinals = r
        .tracked
        .iter()
        .map(|c| r.basis().index_of(c))
        .collect::<Result<Vec<_>>>()?;
    Ok(Spectrum {
        energies: r.spectrum.eigenvalues.iter().copied().collect(),
        weights: (0..r.spectrum.dim())
            .map(|m| weight_on(&r.spectrum, m, &ordinals))
            .collect(),
        tracked: r.tracked.iter().map(ToString::to_string).collect(),
    })
}

fn to_json<T: Serialize>(value: Result<T>) -> std::result::Result<String, JsError> {
    let value = value.map_err(|e: Error| JsError::new(&e.to_string()))?;
    serde_json::to_string(&value).map_err(|e| JsError::new(&e.to_string()))
}

#[wasm_bindgen(js_name = wState)]
pub fn w_state_json(
    delta: f64,
    g: f64,
    n0: usize,
    n_sites: usize,
    t_max: f64,
    samples: usize,
) -> std::result::Result<String, JsError> {
    to_json(w_state(delta, g, n0, n_sites, t_max, samples))
}

#[wasm_bindgen(js_name = eprPair)]
pub fn epr_pair_json(
    mu: usize,
    g: f64,
    t_max: f64,
    samples: usize,
    quench_at: f64,
    detuning: f64,
) -> std::result::Result<String, JsError> {
    to_json(epr_pair(mu, g, t_max, samples, quench_at, detuning))
}

#[wasm_bindgen(js_name = spectrum)]
pub fn spectrum_json(scenario: &str, n_sites: usize, g: f64, delta: f64) -> std::result::Result<String, JsError> {
    to_json(spectrum(scenario, n_sites, g, delta))
}
