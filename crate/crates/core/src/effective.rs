//! Closed-form effective models for the defect scenarios.
//!
//! Each constructor reads the defect layout from a [`ChainSpec`], checks it,
//! and returns the small effective matrix (when one exists) with its levels,
//! the relevant splitting, the oscillation period and the first few instants
//! at which the target entangled state appears.

use std::f64::consts::PI;

use nalgebra::DMatrix;

use crate::dynamics::decompose_matrix;
use crate::error::{domain, Result};
use crate::hamiltonian::{sector_hamiltonian, ChainSpec};

/// Number of entanglement instants reported unless asked otherwise.
pub const DEFAULT_TIME_COUNT: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    /// One excitation shared by two equal defects with `mu` sites between them.
    OneExcitationPair { mu: usize },
    /// Bound pair straddling a single defect.
    BoundPairSingleDefect,
    /// Bound pair resonant with a separated pair through a `g + BΔ` defect.
    FirstOrderEpr,
    /// Bound pair on four equal defects.
    WFourDefects,
}

impl Scenario {
    /// Number of effective levels the probabilities are built from.
    pub fn levels(self) -> usize {
        match self {
            Scenario::WFourDefects => 3,
            _ => 2,
        }
    }
}

/// Where a prediction's formulas come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    ClosedForm,
    /// First-order degenerate perturbation theory built for this toolkit.
    FirstOrderConstruction,
}

/// Sign of the second-order level shift for adjacent one-excitation defects.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShiftSign {
    Raise,
    Lower,
}

impl ShiftSign {
    fn factor(self) -> f64 {
        match self {
            ShiftSign::Raise => 1.0,
            ShiftSign::Lower => -1.0,
        }
    }
}

/// Selected by [`calibrate_shift_sign`] against exact diagonalization.
pub const SECOND_ORDER_SHIFT: ShiftSign = ShiftSign::Raise;

#[derive(Debug, Clone)]
pub struct EffectivePrediction {
    pub scenario: Scenario,
    /// Absolute levels, ascending. Unset when only the splitting is known.
    pub effective_energies: Option<Vec<f64>>,
    /// Splitting that drives the oscillation (`E₊ − E₋`, or `E₃ − E₁`).
    pub gap: f64,
    pub period: f64,
    pub entanglement_times: Vec<f64>,
    pub effective_matrix: Option<DMatrix<f64>>,
    pub provenance: Provenance,
    /// Validity-range notes; the prediction is still returned.
    pub warnings: Vec<String>,
}

impl EffectivePrediction {
    /// `(p_stay, p_transfer)` for a two-level prediction.
    pub fn two_level_probabilities(&self, t: f64) -> Result<(f64, f64)> {
        if self.scenario.levels() != 2 {
            return domain("two-level probabilities requested for a three-level prediction");
        }
        let c = (self.gap * t).cos();
        Ok(((1.0 + c) / 2.0, (1.0 - c) / 2.0))
    }

    /// `(p_center, p_side)` for the W prediction; `p_side` is the probability
    /// of each of the two outer pairs.
    pub fn w_probabilities(&self, t: f64) -> Result<(f64, f64)> {
        if self.scenario != Scenario::WFourDefects {
            return domain("W probabilities requested for a two-level prediction");
        }
        let c = (self.gap * t).cos();
        Ok(((1.0 + c) / 2.0, (1.0 - c) / 4.0))
    }
}

fn same_offset(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0)
}

fn check_sites(chain: &ChainSpec, sites: &[usize]) -> Result<()> {
    if let Some(&s) = sites.iter().find(|&&s| s == 0 || s > chain.n_sites) {
        return domain(format!("site {s} outside 1..={}", chain.n_sites));
    }
    Ok(())
}

/// `t_k = (π/2 + kπ)/gap`: the equal-population instants of a two-level swap.
fn quarter_period_times(gap: f64, count: usize) -> Vec<f64> {
    (0..count).map(|k| (PI / 2.0 + k as f64 * PI) / gap).collect()
}

/// Solutions of `cos(gap·t) = −1/3`, in increasing order.
pub fn w_times(gap: f64, count: usize) -> Vec<f64> {
    let a = (-1.0f64 / 3.0).acos();
    (0..count)
        .map(|k| {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            (sign * a + 2.0 * PI * (k - k / 2) as f64) / gap
        })
        .collect()
}

fn two_level(
    scenario: Scenario,
    diagonal: f64,
    coupling: f64,
    count: usize,
    provenance: Provenance,
    warnings: Vec<String>,
) -> EffectivePrediction {
    let gap = 2.0 * coupling;
    EffectivePrediction {
        scenario,
        effective_energies: Some(vec![diagonal - coupling, diagonal + coupling]),
        gap,
        period: 2.0 * PI / gap,
        entanglement_times: quarter_period_times(gap, count),
        effective_matrix: Some(DMatrix::from_row_slice(2, 2, &[diagonal, coupling, coupling, diagonal])),
        provenance,
        warnings,
    }
}

/// One excitation on two equal defects at `n0 < m0`, using the calibrated
/// shift sign.
pub fn one_excitation_pair(chain: &ChainSpec, n0: usize, m0: usize, count: usize) -> Result<EffectivePrediction> {
    one_excitation_pair_with_shift(chain, n0, m0, count, SECOND_ORDER_SHIFT)
}

/// As [`one_excitation_pair`], with an explicit sign for the adjacent-defect
/// second-order shift `B²/[4(g + B/2)]`.
///
/// * `μ = 0`: `E± = E₁ + g ± B/2`, both shifted.
/// * `μ = 1`: diagonal `E₁ + g + B²/(2g)`, coupling `B²/(4g)`.
/// * `μ ≥ 2`: only the splitting `B (B/2g)^μ` is known.
pub fn one_excitation_pair_with_shift(
    chain: &ChainSpec,
    n0: usize,
    m0: usize,
    count: usize,
    sign: ShiftSign,
) -> Result<EffectivePrediction> {
    chain.validate()?;
    check_sites(chain, &[n0, m0])?;
    if m0 <= n0 {
        return domain(format!("defect sites must satisfy n0 < m0, got {n0}, {m0}"));
    }
    let g = chain.offset(n0);
    if !same_offset(g, chain.offset(m0)) {
        return domain(format!(
            "defects at {n0} and {m0} have unequal offsets {g} and {}",
            chain.offset(m0)
        ));
    }
    let b = chain.coupling;
    let mu = m0 - n0 - 1;
    let e1 = chain.one_magnon_level();
    let mut warnings = Vec::new();
    if g < 10.0 * b {
        warnings.push(format!("g = {g} is not much larger than B = {b}"));
    }
    let scenario = Scenario::OneExcitationPair { mu };
    Ok(match mu {
        0 => {
            let shift = sign.factor() * b * b / (4.0 * (g + b / 2.0));
            two_level(
                scenario,
                e1 + g + shift,
                b / 2.0,
                count,
                Provenance::ClosedForm,
                warnings,
            )
        }
        1 => two_level(
            scenario,
            e1 + g + b * b / (2.0 * g),
            b * b / (4.0 * g),
            count,
            Provenance::ClosedForm,
            warnings,
        ),
        _ => {
            let gap = b * (b / (2.0 * g)).powi(mu as i32);
            EffectivePrediction {
                scenario,
                effective_energies: None,
                gap,
                period: 2.0 * PI / gap,
                entanglement_times: quarter_period_times(gap, count),
                effective_matrix: None,
                provenance: Provenance::ClosedForm,
                warnings,
            }
        }
    })
}

/// Bound pair on `(n0−1, n0)` / `(n0, n0+1)` around a single defect at `n0`.
pub fn bound_pair_single_defect(chain: &ChainSpec, n0: usize, count: usize) -> Result<EffectivePrediction> {
    chain.validate()?;
    check_sites(chain, &[n0])?;
    let (b, delta) = (chain.coupling, chain.anisotropy);
    let g = chain.offset(n0);
    let mut warnings = Vec::new();
    if n0 < 3 || n0 + 2 > chain.n_sites {
        warnings.push(format!("defect at {n0} is within two sites of a boundary"));
    }
    if n0 < 2 || n0 + 1 > chain.n_sites {
        return domain(format!("defect at {n0} has no neighbour on one side"));
    }
    if g < 10.0 * b / (2.0 * delta) {
        warnings.push(format!(
            "g = {g} is not much larger than B/(2Δ) = {}",
            b / (2.0 * delta)
        ));
    }
    let s = b * b / (4.0 * (chain.ising() + g));
    let centre = 2.0 * chain.one_magnon_level() + g + chain.ising() + b / (4.0 * delta) + s;
    Ok(two_level(
        Scenario::BoundPairSingleDefect,
        centre,
        s,
        count,
        Provenance::ClosedForm,
        warnings,
    ))
}

/// Three defects with offsets `(g, g, g + BΔ)` on `n0..=n0+2`: the bound pair
/// `(n0, n0+1)` is degenerate with `(n0, n0+2)` and the two are coupled by a
/// single hop `B/2`.
pub fn first_order_epr(chain: &ChainSpec, n0: usize, count: usize) -> Result<EffectivePrediction> {
    chain.validate()?;
    check_sites(chain, &[n0, n0 + 2])?;
    let b = chain.coupling;
    let g = chain.offset(n0);
    let third = chain.offset(n0 + 2);
    if !same_offset(g, chain.offset(n0 + 1)) || !same_offset(third, g + chain.ising()) {
        return domain(format!(
            "offsets on {n0}..={} must be (g, g, g + BΔ), got ({g}, {}, {third})",
            n0 + 2,
            chain.offset(n0 + 1)
        ));
    }
    let mut warnings = Vec::new();
    if g < 10.0 * b {
        warnings.push(format!("g = {g} is not much larger than B = {b}"));
    }
    let level = 2.0 * chain.one_magnon_level() + chain.ising() + 2.0 * g;
    Ok(two_level(
        Scenario::FirstOrderEpr,
        level,
        b / 2.0,
        count,
        Provenance::FirstOrderConstruction,
        warnings,
    ))
}

/// The three W-block parameters `(r, s, E⁽⁰⁾)`.
pub fn w_block_parameters(chain: &ChainSpec, g: f64) -> (f64, f64, f64) {
    let (b, delta) = (chain.coupling, chain.anisotropy);
    let r = b / (4.0 * delta);
    let s = b * b / (4.0 * (b * delta + g));
    let e0 = 2.0 * chain.one_magnon_level() + b * delta + 2.0 * g;
    (r, s, e0)
}

/// The tridiagonal W block over `(n0,n0+1)`, `(n0+1,n0+2)`, `(n0+2,n0+3)`.
pub fn w_block_matrix(chain: &ChainSpec, g: f64) -> DMatrix<f64> {
    let (r, s, e0) = w_block_parameters(chain, g);
    DMatrix::from_row_slice(3, 3, &[e0 + r + s, r, 0.0, r, e0 + 2.0 * r, r, 0.0, r, e0 + r + s])
}

/// Closed-form eigenvalues of [`w_block_matrix`], ascending.
pub fn w_block_levels(chain: &ChainSpec, g: f64) -> [f64; 3] {
    let (b, delta) = (chain.coupling, chain.anisotropy);
    let (_, _, e0) = w_block_parameters(chain, g);
    let u = (8.0 * b * b * delta * delta + 16.0 * b * delta * g + 9.0 * g * g).sqrt();
    let denom = 8.0 * delta * (b * delta + g);
    let common = 4.0 * b * b * delta + 3.0 * b * g;
    [
        e0 + (common - b * u) / denom,
        e0 + b * (2.0 * b * delta + g) / (4.0 * delta * (b * delta + g)),
        e0 + (common + b * u) / denom,
    ]
}

/// Four equal defects on `n0..=n0+3`.
pub fn w_four_defects(chain: &ChainSpec, n0: usize, count: usize) -> Result<EffectivePrediction> {
    chain.validate()?;
    check_sites(chain, &[n0, n0 + 3])?;
    let (b, delta) = (chain.coupling, chain.anisotropy);
    let g = chain.offset(n0);
    if (1..4).any(|i| !same_offset(g, chain.offset(n0 + i))) {
        return domain(format!("defects on {n0}..={} must share one offset", n0 + 3));
    }
    let mut warnings = Vec::new();
    if n0 < 2 || n0 + 4 > chain.n_sites {
        warnings.push(format!("defect block {n0}..={} touches a boundary", n0 + 3));
    }
    if g < 10.0 * b / (2.0 * delta) {
        warnings.push(format!(
            "g = {g} is not much larger than B/(2Δ) = {}",
            b / (2.0 * delta)
        ));
    }
    let levels = w_block_levels(chain, g);
    let u = (8.0 * b * b * delta * delta + 16.0 * b * delta * g + 9.0 * g * g).sqrt();
    let gap = b * u / (4.0 * delta * (b * delta + g));
    Ok(EffectivePrediction {
        scenario: Scenario::WFourDefects,
        effective_energies: Some(levels.to_vec()),
        gap,
        period: 2.0 * PI / gap,
        entanglement_times: w_times(gap, count),
        effective_matrix: Some(w_block_matrix(chain, g)),
        provenance: Provenance::ClosedForm,
        warnings,
    })
}

/// Picks the shift sign that best reproduces the exact defect doublet of a
/// ten-site chain with adjacent defects at `g = 50B`.
pub fn calibrate_shift_sign(coupling: f64) -> Result<ShiftSign> {
    let g = 50.0 * coupling;
    let chain = ChainSpec::new(10, coupling, 10.0, 20.0 * coupling)?.with_defects([(4, g), (5, g)])?;
    let exact = decompose_matrix(&sector_hamiltonian(&chain, 1)?.matrix)?;
    let top: Vec<f64> = exact.eigenvalues.iter().rev().take(2).rev().copied().collect();
    let error = |sign| -> Result<f64> {
        let pred = one_excitation_pair_with_shift(&chain, 4, 5, 1, sign)?;
        let levels = pred.effective_energies.expect("μ = 0 has levels");
        Ok(levels.iter().zip(&top).map(|(a, b)| (a - b).abs()).sum())
    };
    Ok(if error(ShiftSign::Raise)? <= error(ShiftSign::Lower)? {
        ShiftSign::Raise
    } else {
        ShiftSign::Lower
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn host(n: usize, delta: f64) -> ChainSpec {
        ChainSpec::new(n, 1.0, delta, 20.0).unwrap()
    }

    #[test]
    fn adjacent_pair_period() {
        let chain = host(10, 10.0).with_defects([(4, 100.0), (5, 100.0)]).unwrap();
        let p = one_excitation_pair(&chain, 4, 5, 4).unwrap();
        assert!((p.gap - 1.0).abs() < 1e-15);
        assert!((p.period - 2.0 * PI).abs() < 1e-15);
        assert!(p.warnings.is_empty());
    }

    #[test]
    fn next_nearest_pair() {
        let chain = host(10, 10.0).with_defects([(4, 100.0), (6, 100.0)]).unwrap();
        let p = one_excitation_pair(&chain, 4, 6, 4).unwrap();
        assert!((p.gap - 0.005).abs() < 1e-15);
        assert!((p.period - 400.0 * PI).abs() < 1e-9);
        let e1 = chain.one_magnon_level();
        let levels = p.effective_energies.unwrap();
        assert!((levels[1] - (e1 + 100.0 + 3.0 / 400.0)).abs() < 1e-12);
        assert!((levels[0] - (e1 + 100.0 + 1.0 / 400.0)).abs() < 1e-12);
    }

    #[test]
    fn distant_pair_reports_only_gap() {
        let chain = host(12, 10.0).with_defects([(4, 20.0), (7, 20.0)]).unwrap();
        let p = one_excitation_pair(&chain, 4, 7, 4).unwrap();
        assert!(p.effective_energies.is_none());
        assert!((p.period - 2.0 * PI * 40f64.powi(2)).abs() < 1e-6);
    }

    #[test]
    fn pair_input_errors() {
        let chain = host(10, 10.0).with_defects([(4, 100.0), (5, 90.0)]).unwrap();
        assert!(one_excitation_pair(&chain, 4, 5, 4).is_err());
        assert!(one_excitation_pair(&chain, 5, 4, 4).is_err());
        assert!(one_excitation_pair(&chain, 4, 11, 4).is_err());
        let weak = host(10, 10.0).with_defects([(4, 3.0), (5, 3.0)]).unwrap();
        assert_eq!(one_excitation_pair(&weak, 4, 5, 4).unwrap().warnings.len(), 1);
    }

    #[test]
    fn two_level_probability_instants() {
        let chain = host(10, 10.0).with_defects([(4, 100.0), (5, 100.0)]).unwrap();
        let p = one_excitation_pair(&chain, 4, 5, 4).unwrap();
        assert_eq!(p.two_level_probabilities(0.0).unwrap(), (1.0, 0.0));
        let (stay, go) = p.two_level_probabilities(p.period / 2.0).unwrap();
        assert!(stay.abs() < 1e-15 && (go - 1.0).abs() < 1e-15);
        let (stay, go) = p.two_level_probabilities(p.period / 4.0).unwrap();
        assert!((stay - 0.5).abs() < 1e-15 && (go - 0.5).abs() < 1e-15);
        assert!(p.w_probabilities(1.0).is_err());
    }

    #[test]
    fn bound_pair_gap_and_first_instant() {
        let chain = host(12, 10.0).with_defect(6, 10.0).unwrap();
        let p = bound_pair_single_defect(&chain, 6, 4).unwrap();
        assert!((p.gap - 0.025).abs() < 1e-15);
        assert!((p.entanglement_times[0] - 20.0 * PI).abs() < 1e-12);
        let levels = p.effective_energies.unwrap();
        let s = 1.0 / (4.0 * 20.0);
        assert!((levels[1] - levels[0] - 2.0 * s).abs() < 1e-14);
    }

    #[test]
    fn bound_pair_small_g_limit() {
        let chain = host(12, 10.0).with_defect(6, 1e-9).unwrap();
        let p = bound_pair_single_defect(&chain, 6, 1).unwrap();
        assert!((p.gap - 1.0 / 20.0).abs() < 1e-10);
        assert!(!p.warnings.is_empty());
    }

    #[test]
    fn bound_pair_near_boundary_warns() {
        let chain = host(12, 10.0).with_defect(2, 10.0).unwrap();
        let p = bound_pair_single_defect(&chain, 2, 1).unwrap();
        assert!(p.warnings.iter().any(|w| w.contains("boundary")));
    }

    #[test]
    fn first_order_construction() {
        let chain = host(10, 10.0).with_defects([(4, 20.0), (5, 20.0), (6, 30.0)]).unwrap();
        let p = first_order_epr(&chain, 4, 4).unwrap();
        assert_eq!(p.provenance, Provenance::FirstOrderConstruction);
        assert!((p.period - 2.0 * PI).abs() < 1e-15);
        assert!((p.entanglement_times[0] - PI / 2.0).abs() < 1e-15);
        let bound = bound_pair_single_defect(&host(12, 10.0).with_defect(6, 20.0).unwrap(), 6, 1).unwrap();
        assert!((p.gap / bound.gap - 2.0 * 30.0).abs() < 1e-9);
        let wrong = host(10, 10.0).with_defects([(4, 20.0), (5, 20.0), (6, 20.0)]).unwrap();
        assert!(first_order_epr(&wrong, 4, 4).is_err());
    }

    #[test]
    fn w_block_reference_values() {
        let chain = host(12, 10.0).with_defects((3..=6).map(|s| (s, 10.0))).unwrap();
        let (r, s, _) = w_block_parameters(&chain, 10.0);
        assert!((r - 0.025).abs() < 1e-15);
        assert!((s - 0.0125).abs() < 1e-15);
        let p = w_four_defects(&chain, 3, 4).unwrap();
        assert!((p.gap - 3300f64.sqrt() / 800.0).abs() < 1e-15);
        assert!((p.gap - 0.0718).abs() < 1e-4);
        // Independent evaluation of cos(gap·t) = −1/3.
        let a = (-1.0f64 / 3.0).acos();
        let expect = [a, 2.0 * PI - a, 2.0 * PI + a, 4.0 * PI - a].map(|x| x / p.gap);
        for (t, e) in p.entanglement_times.iter().zip(expect) {
            assert!((t - e).abs() < 1e-9);
        }
        // Reference list quoted at the rounded splitting 0.0718.
        let rounded: Vec<f64> = w_times(0.0718, 4).iter().map(|t| (t * 100.0).round() / 100.0).collect();
        assert_eq!(rounded, vec![26.61, 60.90, 114.12, 148.41]);
        assert!((p.entanglement_times[0] - 26.61).abs() < 5e-3);
    }

    #[test]
    fn w_closed_forms_match_block_diagonalization() {
        let chain = host(12, 10.0).with_defects((3..=6).map(|s| (s, 10.0))).unwrap();
        let p = w_four_defects(&chain, 3, 4).unwrap();
        let numeric = decompose_matrix(p.effective_matrix.as_ref().unwrap()).unwrap();
        for (a, b) in numeric.eigenvalues.iter().zip(p.effective_energies.unwrap()) {
            assert!((a - b).abs() <= 1e-12 * b.abs());
        }
        // The middle eigenvector never touches the central pair.
        assert!(numeric.eigenvectors[(1, 1)].abs() < 1e-12);
    }

    #[test]
    fn w_probabilities_close() {
        let chain = host(12, 10.0).with_defects((3..=6).map(|s| (s, 10.0))).unwrap();
        let p = w_four_defects(&chain, 3, 4).unwrap();
        assert_eq!(p.w_probabilities(0.0).unwrap(), (1.0, 0.0));
        let (c, s) = p.w_probabilities(p.entanglement_times[0]).unwrap();
        assert!((c - 1.0 / 3.0).abs() < 1e-12 && (s - 1.0 / 3.0).abs() < 1e-12);
        for t in [3.0, 17.5, 90.0] {
            let (c, s) = p.w_probabilities(t).unwrap();
            assert!((c + 2.0 * s - 1.0).abs() < 1e-15);
        }
        assert!(p.two_level_probabilities(1.0).is_err());
        let uneven = host(12, 10.0)
            .with_defects([(3, 10.0), (4, 10.0), (5, 10.0), (6, 11.0)])
            .unwrap();
        assert!(w_four_defects(&uneven, 3, 4).is_err());
    }

    #[test]
    fn shift_sign_is_upward() {
        assert_eq!(calibrate_shift_sign(1.0).unwrap(), ShiftSign::Raise);
        assert_eq!(SECOND_ORDER_SHIFT, ShiftSign::Raise);
    }

    #[test]
    fn w_times_increase() {
        let t = w_times(0.3, 12);
        assert!(t.windows(2).all(|w| w[1] > w[0]));
    }
}
