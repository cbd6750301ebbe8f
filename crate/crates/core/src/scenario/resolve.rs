//! Preset defaults and placement validation.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::basis::{Config, SectorBasis};
use crate::dynamics::{decompose, SpectralDecomposition, DEFAULT_SAMPLES};
use crate::effective::{self, EffectivePrediction, DEFAULT_TIME_COUNT};
use crate::entanglement::TargetState;
use crate::error::{Error, Result};
use crate::hamiltonian::{build_sector_hamiltonian, ChainSpec, HopNormalization, SectorHamiltonian};

use super::config::{QuenchSection, ScenarioConfig, ScenarioName, TargetKindName, TargetSection};

/// Default level spacing `ε₀`, in units of `B`. It only shifts each sector
/// rigidly.
pub const DEFAULT_BASE_SPACING: f64 = 20.0;

/// Default anisotropy.
pub const DEFAULT_ANISOTROPY: f64 = 10.0;

/// Instantaneous detuning applied during a run.
#[derive(Debug, Clone)]
pub struct Quench {
    pub at: f64,
    pub detuned: ChainSpec,
}

/// A scenario with every default applied and every constraint checked.
#[derive(Debug, Clone)]
pub struct ResolvedScenario {
    /// The config with all preset values written in.
    pub config: ScenarioConfig,
    pub chain: ChainSpec,
    pub hamiltonian: SectorHamiltonian,
    pub spectrum: SpectralDecomposition,
    pub initial: Config,
    /// The initial configuration first, then the configurations it feeds.
    pub tracked: Vec<Config>,
    pub target: Option<TargetState>,
    pub concurrence_pairs: Vec<(usize, usize)>,
    pub prediction: Option<EffectivePrediction>,
    pub quench: Option<Quench>,
    pub t_max: f64,
    pub samples: usize,
}

impl ResolvedScenario {
    pub fn basis(&self) -> &Arc<SectorBasis> {
        &self.hamiltonian.basis
    }

    /// Number of effective levels behind the tracked oscillation.
    pub fn levels(&self) -> usize {
        scenario_levels(self.config.scenario, self.tracked.len())
    }
}

fn scenario_levels(name: ScenarioName, tracked: usize) -> usize {
    match name {
        ScenarioName::WFourDefects | ScenarioName::WTwoDefects => 3,
        ScenarioName::Custom => tracked.clamp(2, 3),
        _ => 2,
    }
}

fn config_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

/// Turns lower-level domain errors into config errors that name the scenario.
fn in_scenario<T>(name: ScenarioName, r: Result<T>) -> Result<T> {
    r.map_err(|e| match e {
        Error::Domain(m) => Error::Config(format!("{name}: {m}")),
        other => other,
    })
}

fn require(cond: bool, name: ScenarioName, msg: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(config_err(format!("{name}: {}", msg())))
    }
}

fn config_of(sites: &[usize], n: usize, name: ScenarioName) -> Result<Config> {
    in_scenario(name, Config::new(sites.to_vec(), n))
}

/// Fraction of an eigenvector's weight on the given basis ordinals.
pub fn weight_on(spectrum: &SpectralDecomposition, column: usize, ordinals: &[usize]) -> f64 {
    ordinals
        .iter()
        .map(|&i| spectrum.eigenvectors[(i, column)].powi(2))
        .sum()
}

/// Span of the `levels` eigenvalues whose eigenvectors lie mostly (weight
/// above 0.9) on `configs`. `None` when fewer such eigenstates exist.
pub fn measured_gap(
    spectrum: &SpectralDecomposition,
    basis: &SectorBasis,
    configs: &[Config],
    levels: usize,
) -> Result<Option<f64>> {
    let ordinals: Vec<usize> = configs.iter().map(|c| basis.index_of(c)).collect::<Result<_>>()?;
    let mut ranked: Vec<(f64, f64)> = (0..spectrum.dim())
        .map(|m| (weight_on(spectrum, m, &ordinals), spectrum.eigenvalues[m]))
        .collect();
    ranked.sort_by(|a, b| b.0.total_cmp(&a.0));
    let chosen = &ranked[..levels.min(ranked.len())];
    if chosen.len() < levels || chosen.iter().any(|(w, _)| *w <= 0.9) {
        return Ok(None);
    }
    let lo = chosen.iter().map(|c| c.1).fold(f64::INFINITY, f64::min);
    let hi = chosen.iter().map(|c| c.1).fold(f64::NEG_INFINITY, f64::max);
    Ok(Some(hi - lo))
}

struct Layout {
    n_sites: usize,
    defects: Vec<(usize, f64)>,
    initial: Vec<usize>,
    tracked: Vec<Vec<usize>>,
    target: Option<TargetSection>,
    concurrence: Vec<(usize, usize)>,
}

fn pair(a: usize, b: usize) -> Vec<usize> {
    vec![a, b]
}

fn layout(cfg: &mut ScenarioConfig, delta: f64) -> Result<Layout> {
    let name = cfg.scenario;
    let d = &mut cfg.defects;
    let n_default = match name {
        ScenarioName::EprOneExcitation | ScenarioName::EprFirstOrder => 10,
        _ => 12,
    };
    let n = *cfg.chain.n_sites.get_or_insert(n_default);
    Ok(match name {
        ScenarioName::EprOneExcitation => {
            let n0 = *d.n0.get_or_insert(4);
            let g = *d.g.get_or_insert(100.0);
            let m0 = match (d.m0, d.mu) {
                (Some(m0), Some(mu)) => {
                    require(m0 == n0 + mu + 1, name, || {
                        format!("m0 = {m0} and mu = {mu} disagree (need m0 = n0 + mu + 1)")
                    })?;
                    m0
                }
                (Some(m0), None) => m0,
                (None, mu) => n0 + mu.unwrap_or(0) + 1,
            };
            require(m0 > n0, name, || format!("need m0 > n0, got n0 = {n0}, m0 = {m0}"))?;
            d.m0 = Some(m0);
            d.mu = Some(m0 - n0 - 1);
            require(n0 >= 1 && m0 <= n, name, || {
                format!("defects {n0} and {m0} must lie in 1..={n}")
            })?;
            Layout {
                n_sites: n,
                defects: vec![(n0, g), (m0, g)],
                initial: vec![n0],
                tracked: vec![vec![n0], vec![m0]],
                target: Some(TargetSection {
                    kind: TargetKindName::EprPlus,
                    components: vec![vec![n0], vec![m0]],
                }),
                concurrence: vec![(n0, m0)],
            }
        }
        ScenarioName::EprBoundPair => {
            let n0 = *d.n0.get_or_insert(6);
            let g = *d.g.get_or_insert(10.0);
            require(n0 >= 2 && n0 < n, name, || {
                format!("defect at {n0} needs a neighbour on both sides in 1..={n}")
            })?;
            Layout {
                n_sites: n,
                defects: vec![(n0, g)],
                initial: pair(n0 - 1, n0),
                tracked: vec![pair(n0 - 1, n0), pair(n0, n0 + 1)],
                target: Some(TargetSection {
                    kind: TargetKindName::EprPlus,
                    components: vec![pair(n0 - 1, n0), pair(n0, n0 + 1)],
                }),
                concurrence: vec![(n0 - 1, n0 + 1)],
            }
        }
        ScenarioName::EprFirstOrder => {
            let n0 = *d.n0.get_or_insert(4);
            let g = *d.g.get_or_insert(20.0);
            require(n0 >= 1 && n0 + 2 <= n, name, || {
                format!("defects {n0}..={} must lie in 1..={n}", n0 + 2)
            })?;
            Layout {
                n_sites: n,
                defects: vec![(n0, g), (n0 + 1, g), (n0 + 2, g + delta)],
                initial: pair(n0, n0 + 1),
                tracked: vec![pair(n0, n0 + 1), pair(n0, n0 + 2)],
                target: Some(TargetSection {
                    kind: TargetKindName::EprPlus,
                    components: vec![pair(n0, n0 + 1), pair(n0, n0 + 2)],
                }),
                concurrence: vec![(n0 + 1, n0 + 2)],
            }
        }
        ScenarioName::WFourDefects => {
            let n0 = *d.n0.get_or_insert(3);
            let g = *d.g.get_or_insert(delta);
            require(n0 >= 1 && n0 + 3 <= n, name, || {
                format!("needs 4 consecutive defects {n0}..={} inside 1..={n}", n0 + 3)
            })?;
            let centre = pair(n0 + 1, n0 + 2);
            let sides = [pair(n0, n0 + 1), pair(n0 + 2, n0 + 3)];
            Layout {
                n_sites: n,
                defects: (n0..n0 + 4).map(|s| (s, g)).collect(),
                initial: centre.clone(),
                tracked: vec![centre.clone(), sides[0].clone(), sides[1].clone()],
                target: Some(TargetSection {
                    kind: TargetKindName::W,
                    components: vec![sides[0].clone(), centre, sides[1].clone()],
                }),
                concurrence: Vec::new(),
            }
        }
        ScenarioName::WTwoDefects => {
            let n0 = *d.n0.get_or_insert(4);
            // Away from the BΔ resonance with dissociated states.
            let g = *d.g.get_or_insert(3.0 * delta);
            require(n0 >= 2 && n0 + 4 <= n, name, || {
                format!("defects {} and {} must lie in 1..={n}", n0 as isize - 1, n0 + 4)
            })?;
            let centre = pair(n0 + 1, n0 + 2);
            let sides = [pair(n0, n0 + 1), pair(n0 + 2, n0 + 3)];
            Layout {
                n_sites: n,
                defects: vec![(n0 - 1, g), (n0 + 4, g)],
                initial: centre.clone(),
                tracked: vec![centre.clone(), sides[0].clone(), sides[1].clone()],
                target: Some(TargetSection {
                    kind: TargetKindName::W,
                    components: vec![sides[0].clone(), centre, sides[1].clone()],
                }),
                concurrence: Vec::new(),
            }
        }
        ScenarioName::Custom => {
            let sites = d.sites.clone().unwrap_or_default();
            let offsets = d.offsets.clone().unwrap_or_default();
            require(sites.len() == offsets.len(), name, || {
                format!("{} defect sites but {} offsets", sites.len(), offsets.len())
            })?;
            let initial = cfg
                .state
                .initial
                .clone()
                .ok_or_else(|| config_err("custom: [state] initial is required"))?;
            let tracked = cfg.state.tracked.clone().unwrap_or_else(|| vec![initial.clone()]);
            require(!tracked.is_empty(), name, || "tracked list is empty".into())?;
            let concurrence = cfg
                .state
                .concurrence
                .clone()
                .unwrap_or_default()
                .into_iter()
                .map(|[a, b]| (a, b))
                .collect();
            Layout {
                n_sites: n,
                defects: sites.into_iter().zip(offsets).collect(),
                initial,
                tracked,
                target: cfg.state.target.clone(),
                concurrence,
            }
        }
    })
}

fn build_target(t: &TargetSection, n: usize, name: ScenarioName) -> Result<TargetState> {
    let comps: Vec<Config> = t
        .components
        .iter()
        .map(|c| config_of(c, n, name))
        .collect::<Result<_>>()?;
    let r = match (t.kind, comps.as_slice()) {
        (TargetKindName::EprPlus, [a, b]) => TargetState::epr_plus(a.clone(), b.clone()),
        (TargetKindName::EprMinus, [a, b]) => TargetState::epr_minus(a.clone(), b.clone()),
        (TargetKindName::W, [a, b, c]) => TargetState::w(a.clone(), b.clone(), c.clone()),
        (kind, _) => {
            return Err(config_err(format!(
                "{name}: target {kind:?} has {} components",
                comps.len()
            )))
        }
    };
    in_scenario(name, r)
}

fn prediction(
    name: ScenarioName,
    chain: &ChainSpec,
    cfg: &ScenarioConfig,
    count: usize,
) -> Result<Option<EffectivePrediction>> {
    let d = &cfg.defects;
    let n0 = d.n0.unwrap_or(0);
    let p = match name {
        ScenarioName::EprOneExcitation => effective::one_excitation_pair(chain, n0, d.m0.expect("resolved"), count),
        ScenarioName::EprBoundPair => effective::bound_pair_single_defect(chain, n0, count),
        ScenarioName::EprFirstOrder => effective::first_order_epr(chain, n0, count),
        ScenarioName::WFourDefects => effective::w_four_defects(chain, n0, count),
        ScenarioName::WTwoDefects | ScenarioName::Custom => return Ok(None),
    };
    in_scenario(name, p).map(Some)
}

/// Applies preset defaults to `cfg` and validates the result.
pub fn resolve(cfg: &ScenarioConfig) -> Result<ResolvedScenario> {
    let mut cfg = cfg.clone();
    let name = cfg.scenario;
    let delta = *cfg.chain.anisotropy.get_or_insert(DEFAULT_ANISOTROPY);
    let eps0 = *cfg.chain.base_spacing.get_or_insert(DEFAULT_BASE_SPACING);
    let hop = *cfg.chain.hop.get_or_insert(HopNormalization::Standard);
    let count = *cfg.time.instants.get_or_insert(DEFAULT_TIME_COUNT);
    let samples = *cfg.time.samples.get_or_insert(DEFAULT_SAMPLES);
    require(samples >= 2, name, || format!("need at least 2 samples, got {samples}"))?;

    let lay = layout(&mut cfg, delta)?;
    let chain = in_scenario(
        name,
        ChainSpec::new(lay.n_sites, 1.0, delta, eps0).and_then(|c| c.with_defects(lay.defects.iter().copied())),
    )?
    .with_hop(hop);

    let initial = config_of(&lay.initial, lay.n_sites, name)?;
    let basis = Arc::new(in_scenario(name, SectorBasis::enumerate(lay.n_sites, initial.len()))?);
    let tracked: Vec<Config> = lay
        .tracked
        .iter()
        .map(|c| config_of(c, lay.n_sites, name))
        .collect::<Result<_>>()?;
    for c in std::iter::once(&initial).chain(&tracked) {
        require(c.len() == initial.len(), name, || {
            format!("configuration {c} has a different excitation number than the initial state")
        })?;
    }
    let target = lay
        .target
        .as_ref()
        .map(|t| build_target(t, lay.n_sites, name))
        .transpose()?;
    if let Some(t) = &target {
        for c in t.components() {
            require(c.len() == initial.len(), name, || {
                format!("target component {c} is in a different sector")
            })?;
        }
    }
    for &(a, b) in &lay.concurrence {
        require(
            a != b && (1..=lay.n_sites).contains(&a) && (1..=lay.n_sites).contains(&b),
            name,
            || format!("concurrence pair ({a}, {b}) is invalid"),
        )?;
    }

    let hamiltonian = in_scenario(name, build_sector_hamiltonian(&chain, basis.clone()))?;
    let spectrum = decompose(&hamiltonian)?;
    let prediction = prediction(name, &chain, &cfg, count)?;

    let levels = scenario_levels(name, tracked.len());
    let t_max = match (cfg.time.t_max, &prediction) {
        (Some(t), _) => t,
        (None, Some(p)) => 2.0 * p.period,
        (None, None) => {
            let gap = measured_gap(&spectrum, &basis, &tracked, levels)?.ok_or_else(|| {
                config_err(format!(
                    "{name}: no time window given and the tracked configurations do not form an isolated block"
                ))
            })?;
            2.0 * 2.0 * PI / gap
        }
    };
    require(t_max.is_finite() && t_max > 0.0, name, || {
        format!("t_max must be positive, got {t_max}")
    })?;
    cfg.time.t_max = Some(t_max);

    let quench = match cfg.quench.clone() {
        None => None,
        Some(q) => {
            let (q, quench) = resolve_quench(q, &chain, &lay.defects, prediction.as_ref(), name)?;
            cfg.quench = Some(q);
            Some(quench)
        }
    };

    Ok(ResolvedScenario {
        config: cfg,
        chain,
        hamiltonian,
        spectrum,
        initial,
        tracked,
        target,
        concurrence_pairs: lay.concurrence,
        prediction,
        quench,
        t_max,
        samples,
    })
}

fn resolve_quench(
    mut q: QuenchSection,
    chain: &ChainSpec,
    defects: &[(usize, f64)],
    prediction: Option<&EffectivePrediction>,
    name: ScenarioName,
) -> Result<(QuenchSection, Quench)> {
    let at = match (q.at, prediction) {
        (Some(at), _) => at,
        (None, Some(p)) => p.entanglement_times[0],
        (None, None) => {
            return Err(config_err(format!(
                "{name}: quench time must be given when there is no prediction"
            )))
        }
    };
    require(at.is_finite() && at >= 0.0, name, || {
        format!("quench time {at} is invalid")
    })?;
    require(q.detuning.is_finite(), name, || "detuning must be finite".into())?;
    let sites = match &q.sites {
        Some(s) => s.clone(),
        None => vec![defects
            .last()
            .map(|d| d.0)
            .ok_or_else(|| config_err(format!("{name}: quench needs target sites")))?],
    };
    let mut detuned = chain.clone();
    for &s in &sites {
        let offset = chain.offset(s) + q.detuning;
        detuned = in_scenario(name, detuned.with_defect(s, offset))?;
    }
    q.at = Some(at);
    q.sites = Some(sites);
    Ok((q, Quench { at, detuned }))
}
