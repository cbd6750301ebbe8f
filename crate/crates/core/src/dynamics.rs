//! Spectral decomposition and exact unitary evolution within one sector.
//!
//! Evolution is `ψ(t) = V e^{−iΛt} Vᵀ ψ(0)` from a full eigendecomposition,
//! so any time can be reached without step accumulation. Piecewise-constant
//! [`QuenchSchedule`]s chain several decompositions together.

use std::sync::Arc;

use nalgebra::{Complex, DMatrix, DVector};

use crate::basis::{Config, SectorBasis};
use crate::entanglement::{concurrence, fidelity_to_target, reduce, TargetState};
use crate::error::{domain, Error, Result};
use crate::hamiltonian::{build_sector_hamiltonian, ensure_same_sector, ChainSpec, SectorHamiltonian};

pub type C64 = Complex<f64>;

/// Relative tolerance of the eigensolver contract.
pub const SPECTRAL_TOLERANCE: f64 = 1e-10;

/// Default number of samples per time window.
pub const DEFAULT_SAMPLES: usize = 2000;

#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    /// Ascending.
    pub eigenvalues: DVector<f64>,
    /// Orthonormal columns, ordered like `eigenvalues`.
    pub eigenvectors: DMatrix<f64>,
    pub source_dimension: usize,
}

impl SpectralDecomposition {
    /// `max_i ‖H v_i − λ_i v_i‖∞`.
    pub fn residual(&self, matrix: &DMatrix<f64>) -> f64 {
        let hv = matrix * &self.eigenvectors;
        let mut worst = 0.0f64;
        for (i, &lambda) in self.eigenvalues.iter().enumerate() {
            let r = hv.column(i) - self.eigenvectors.column(i) * lambda;
            worst = worst.max(r.amax());
        }
        worst
    }

    /// `‖VᵀV − I‖∞` (max entry).
    pub fn orthonormality_error(&self) -> f64 {
        let n = self.eigenvectors.ncols();
        (self.eigenvectors.transpose() * &self.eigenvectors - DMatrix::identity(n, n)).amax()
    }

    pub fn dim(&self) -> usize {
        self.source_dimension
    }
}

/// Infinity norm (max absolute row sum).
fn inf_norm(m: &DMatrix<f64>) -> f64 {
    m.row_iter()
        .map(|r| r.iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Diagonalizes a real symmetric matrix and checks the residual and
/// orthonormality contract.
pub fn decompose_matrix(matrix: &DMatrix<f64>) -> Result<SpectralDecomposition> {
    let n = matrix.nrows();
    if n != matrix.ncols() {
        return domain(format!("matrix is {}×{}, not square", n, matrix.ncols()));
    }
    if matrix.iter().any(|x| !x.is_finite()) {
        return domain("matrix has non-finite entries");
    }
    if matrix != &matrix.transpose() {
        return domain("matrix is not symmetric");
    }
    let eig = matrix
        .clone()
        .try_symmetric_eigen(f64::EPSILON, 100 * n.max(10))
        .ok_or_else(|| Error::Numeric(format!("symmetric eigensolver did not converge for dimension {n}")))?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let eigenvalues = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let eigenvectors = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    let decomp = SpectralDecomposition {
        eigenvalues,
        eigenvectors,
        source_dimension: n,
    };

    let residual = decomp.residual(matrix);
    let ortho = decomp.orthonormality_error();
    let bound = SPECTRAL_TOLERANCE * inf_norm(matrix).max(1.0);
    if residual > bound || ortho > SPECTRAL_TOLERANCE {
        return Err(Error::Numeric(format!(
            "eigendecomposition outside tolerance: residual {residual:.3e} (bound {bound:.3e}), \
             orthonormality {ortho:.3e}"
        )));
    }
    Ok(decomp)
}

pub fn decompose(h: &SectorHamiltonian) -> Result<SpectralDecomposition> {
    decompose_matrix(&h.matrix)
}

/// Normalized complex amplitudes over a sector basis.
#[derive(Debug, Clone)]
pub struct StateVector {
    pub basis: Arc<SectorBasis>,
    pub amplitudes: DVector<C64>,
}

impl StateVector {
    /// Wraps `amplitudes`, requiring unit norm within `1e-10`.
    pub fn new(basis: Arc<SectorBasis>, amplitudes: DVector<C64>) -> Result<Self> {
        if amplitudes.len() != basis.dim() {
            return domain(format!(
                "state has {} amplitudes but the basis has {} configurations",
                amplitudes.len(),
                basis.dim()
            ));
        }
        let norm = amplitudes.norm();
        if (norm - 1.0).abs() > 1e-10 {
            return domain(format!("state is not normalized (norm {norm})"));
        }
        Ok(StateVector { basis, amplitudes })
    }

    /// The product state with up spins exactly at `config`.
    pub fn basis_state(basis: Arc<SectorBasis>, config: &Config) -> Result<Self> {
        let i = basis.index_of(config)?;
        let mut amplitudes = DVector::zeros(basis.dim());
        amplitudes[i] = C64::new(1.0, 0.0);
        Ok(StateVector { basis, amplitudes })
    }

    /// Normalized superposition of the given components.
    pub fn superposition(basis: Arc<SectorBasis>, components: &[(Config, C64)]) -> Result<Self> {
        let mut amplitudes = DVector::zeros(basis.dim());
        for (config, amp) in components {
            amplitudes[basis.index_of(config)?] += amp;
        }
        let norm = amplitudes.norm();
        if norm == 0.0 {
            return domain("superposition has zero norm");
        }
        amplitudes /= C64::new(norm, 0.0);
        Ok(StateVector { basis, amplitudes })
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitude(&self, config: &Config) -> Result<C64> {
        Ok(self.amplitudes[self.basis.index_of(config)?])
    }

    pub fn probability(&self, config: &Config) -> Result<f64> {
        Ok(self.amplitude(config)?.norm_sqr())
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.norm()
    }

    /// `⟨ψ|H|ψ⟩` for a real symmetric `H`.
    pub fn expectation(&self, matrix: &DMatrix<f64>) -> f64 {
        let re = self.amplitudes.map(|z| z.re);
        let im = self.amplitudes.map(|z| z.im);
        re.dot(&(matrix * &re)) + im.dot(&(matrix * &im))
    }
}

/// A state expanded in an eigenbasis, ready to be evaluated at any time.
#[derive(Debug, Clone)]
pub struct Propagation<'a> {
    decomp: &'a SpectralDecomposition,
    basis: Arc<SectorBasis>,
    coefficients: DVector<C64>,
}

impl<'a> Propagation<'a> {
    pub fn new(decomp: &'a SpectralDecomposition, psi0: &StateVector) -> Result<Self> {
        if psi0.dim() != decomp.source_dimension {
            return domain(format!(
                "state dimension {} does not match decomposition dimension {}",
                psi0.dim(),
                decomp.source_dimension
            ));
        }
        let re = decomp.eigenvectors.tr_mul(&psi0.amplitudes.map(|z| z.re));
        let im = decomp.eigenvectors.tr_mul(&psi0.amplitudes.map(|z| z.im));
        let coefficients = re.zip_map(&im, C64::new);
        Ok(Propagation {
            decomp,
            basis: psi0.basis.clone(),
            coefficients,
        })
    }

    pub fn amplitudes_at(&self, t: f64) -> DVector<C64> {
        let phased = DVector::from_iterator(
            self.coefficients.len(),
            self.coefficients
                .iter()
                .zip(self.decomp.eigenvalues.iter())
                .map(|(c, &e)| c * C64::from_polar(1.0, -e * t)),
        );
        let v = &self.decomp.eigenvectors;
        let re = v * phased.map(|z| z.re);
        let im = v * phased.map(|z| z.im);
        re.zip_map(&im, C64::new)
    }

    pub fn state_at(&self, t: f64) -> StateVector {
        StateVector {
            basis: self.basis.clone(),
            amplitudes: self.amplitudes_at(t),
        }
    }
}

/// `ψ(t)` for a single time.
pub fn evolve(decomp: &SpectralDecomposition, psi0: &StateVector, t: f64) -> Result<StateVector> {
    if t == 0.0 {
        Propagation::new(decomp, psi0)?;
        return Ok(psi0.clone());
    }
    Ok(Propagation::new(decomp, psi0)?.state_at(t))
}

/// `n` uniform samples on `[0, t_end]`, endpoints included.
pub fn uniform_times(t_end: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => (0..n).map(|i| t_end * i as f64 / (n - 1) as f64).collect(),
    }
}

/// Piecewise-constant sequence of chains sharing the same host parameters.
#[derive(Debug, Clone)]
pub struct QuenchSchedule {
    segments: Vec<(ChainSpec, f64)>,
}

impl QuenchSchedule {
    /// The final segment is open-ended: samples past the summed durations keep
    /// evolving under it.
    pub fn new(segments: Vec<(ChainSpec, f64)>) -> Result<Self> {
        let Some((first, _)) = segments.first() else {
            return domain("quench schedule needs at least one segment");
        };
        for (i, (spec, duration)) in segments.iter().enumerate() {
            spec.validate()?;
            if !(duration.is_finite() && *duration >= 0.0) {
                return domain(format!("segment {i} has invalid duration {duration}"));
            }
            if !spec.same_host(first) {
                return domain(format!("segment {i} differs from segment 0 in more than its defects"));
            }
        }
        Ok(QuenchSchedule { segments })
    }

    pub fn single(chain: ChainSpec) -> Self {
        QuenchSchedule {
            segments: vec![(chain, 0.0)],
        }
    }

    pub fn segments(&self) -> &[(ChainSpec, f64)] {
        &self.segments
    }
}

/// What a trace should record besides the time axis.
#[derive(Debug, Clone, Default)]
pub struct TraceRequest {
    pub tracked: Vec<Config>,
    pub targets: Vec<TargetState>,
    /// Site pairs whose two-qubit concurrence is recorded.
    pub concurrence_pairs: Vec<(usize, usize)>,
    /// Fidelities are phase-maximized unless this is set.
    pub plain_fidelity: bool,
    /// Verify that probabilities over the whole basis sum to one.
    pub check_closure: bool,
}

impl TraceRequest {
    pub fn tracking(tracked: Vec<Config>) -> Self {
        TraceRequest {
            tracked,
            ..Default::default()
        }
    }
}

/// Sampled record of an evolution. Row `i` of each table belongs to `times[i]`.
#[derive(Debug, Clone, Default)]
pub struct TimeTrace {
    pub times: Vec<f64>,
    pub probability_labels: Vec<String>,
    pub probabilities: Vec<Vec<f64>>,
    pub fidelity_labels: Vec<String>,
    pub fidelities: Vec<Vec<f64>>,
    pub concurrence_labels: Vec<String>,
    pub concurrences: Vec<Vec<f64>>,
    /// Largest `|Σ_c P_c − 1|` seen, when closure was checked.
    pub closure_error: Option<f64>,
}

impl TimeTrace {
    pub fn probability_column(&self, col: usize) -> Vec<f64> {
        self.probabilities.iter().map(|row| row[col]).collect()
    }

    pub fn fidelity_column(&self, col: usize) -> Vec<f64> {
        self.fidelities.iter().map(|row| row[col]).collect()
    }

    pub fn concurrence_column(&self, col: usize) -> Vec<f64> {
        self.concurrences.iter().map(|row| row[col]).collect()
    }
}

const CLOSURE_TOLERANCE: f64 = 1e-9;

fn check_times(times: &[f64]) -> Result<()> {
    if times.iter().any(|t| !t.is_finite() || *t < 0.0) {
        return domain("sample times must be finite and nonnegative");
    }
    if times.windows(2).any(|w| w[1] < w[0]) {
        return domain("sample times must be ascending");
    }
    Ok(())
}

fn record(
    basis: &SectorBasis,
    request: &TraceRequest,
    times: &[f64],
    mut state_at: impl FnMut(usize, f64) -> StateVector,
) -> Result<TimeTrace> {
    check_times(times)?;
    let tracked: Vec<usize> = request
        .tracked
        .iter()
        .map(|c| basis.index_of(c))
        .collect::<Result<_>>()?;
    for target in &request.targets {
        for c in target.components() {
            basis.index_of(c)?;
        }
    }
    for &(a, b) in &request.concurrence_pairs {
        if a == b || a == 0 || b == 0 || a > basis.n_sites() || b > basis.n_sites() {
            return domain(format!("invalid concurrence pair ({a}, {b})"));
        }
    }

    let mut trace = TimeTrace {
        times: times.to_vec(),
        probability_labels: request.tracked.iter().map(|c| format!("P_{}", c.label())).collect(),
        fidelity_labels: request.targets.iter().map(|t| format!("F_{}", t.label())).collect(),
        concurrence_labels: request
            .concurrence_pairs
            .iter()
            .map(|(a, b)| format!("C_{a}_{b}"))
            .collect(),
        ..Default::default()
    };
    let mut closure = 0.0f64;
    for (i, &t) in times.iter().enumerate() {
        let psi = state_at(i, t);
        trace
            .probabilities
            .push(tracked.iter().map(|&j| psi.amplitudes[j].norm_sqr().min(1.0)).collect());
        trace.fidelities.push(
            request
                .targets
                .iter()
                .map(|target| fidelity_to_target(&psi, target, !request.plain_fidelity))
                .collect::<Result<_>>()?,
        );
        trace.concurrences.push(
            request
                .concurrence_pairs
                .iter()
                .map(|&(a, b)| concurrence(&reduce(&psi, &[a, b])?))
                .collect::<Result<_>>()?,
        );
        if request.check_closure {
            let total: f64 = psi.amplitudes.iter().map(|z| z.norm_sqr()).sum();
            closure = closure.max((total - 1.0).abs());
        }
    }
    if request.check_closure {
        if closure > CLOSURE_TOLERANCE {
            return Err(Error::Numeric(format!("probability closure violated by {closure:.3e}")));
        }
        trace.closure_error = Some(closure);
    }
    Ok(trace)
}

/// Probabilities (and any requested fidelities/concurrences) of `psi0`
/// evolving under a fixed Hamiltonian.
pub fn probability_trace(
    decomp: &SpectralDecomposition,
    psi0: &StateVector,
    request: &TraceRequest,
    sample_times: &[f64],
) -> Result<TimeTrace> {
    let prop = Propagation::new(decomp, psi0)?;
    record(&psi0.basis, request, sample_times, |_, t| prop.state_at(t))
}

/// Evolution through an instantaneous-quench schedule.
pub fn evolve_schedule(
    schedule: &QuenchSchedule,
    psi0: &StateVector,
    request: &TraceRequest,
    sample_times: &[f64],
) -> Result<TimeTrace> {
    check_times(sample_times)?;
    let basis = psi0.basis.clone();
    let mut decomps = Vec::with_capacity(schedule.segments.len());
    for (spec, _) in &schedule.segments {
        let h = build_sector_hamiltonian(spec, basis.clone())?;
        ensure_same_sector(&h.basis, &basis)?;
        decomps.push(decompose(&h)?);
    }

    // State and start time at the beginning of every segment.
    let mut starts = Vec::with_capacity(decomps.len());
    let mut start_state = psi0.clone();
    let mut start_time = 0.0;
    for (decomp, (_, duration)) in decomps.iter().zip(&schedule.segments) {
        starts.push((start_time, start_state.clone()));
        start_state = evolve(decomp, &start_state, *duration)?;
        start_time += duration;
    }

    let props: Vec<Propagation> = decomps
        .iter()
        .zip(&starts)
        .map(|(d, (_, s))| Propagation::new(d, s))
        .collect::<Result<_>>()?;
    let last = props.len() - 1;
    record(&basis, request, sample_times, |_, t| {
        // Latest segment that has started; zero-length segments are skipped.
        let seg = (0..=last)
            .rev()
            .find(|&j| starts[j].0 <= t && (j == last || starts[j + 1].0 > t))
            .unwrap_or(0);
        props[seg].state_at(t - starts[seg].0)
    })
}

const RETURN_HYSTERESIS: f64 = 0.1;

/// Time of the first return of `P_config` to its maximum after it has
/// dropped clearly below one half. `None` if no full return happens before `t_max`.
pub fn first_return_time(
    decomp: &SpectralDecomposition,
    psi0: &StateVector,
    config: &Config,
    t_max: f64,
    samples: usize,
) -> Result<Option<f64>> {
    let prop = Propagation::new(decomp, psi0)?;
    let j = psi0.basis.index_of(config)?;
    let p = |t: f64| -> f64 {
        // Only one amplitude is needed.
        let v = &decomp.eigenvectors;
        let mut z = C64::new(0.0, 0.0);
        for (m, c) in prop.coefficients.iter().enumerate() {
            z += c * C64::from_polar(v[(j, m)], -decomp.eigenvalues[m] * t);
        }
        z.norm_sqr()
    };
    let times = uniform_times(t_max, samples.max(3));
    let values: Vec<f64> = times.iter().map(|&t| p(t)).collect();
    // Hysteresis keeps small fast ripples around 1/2 from counting as a return.
    let (lower, upper) = (0.5 - RETURN_HYSTERESIS, 0.5 + RETURN_HYSTERESIS);
    let Some(low) = values.iter().position(|&v| v < lower) else {
        return Ok(None);
    };
    let Some(rise) = values[low..].iter().position(|&v| v > upper).map(|i| i + low) else {
        return Ok(None);
    };
    let fall = values[rise..]
        .iter()
        .position(|&v| v < lower)
        .map(|i| i + rise)
        .unwrap_or(values.len());
    if fall == values.len() {
        // The return peak is cut off by the window.
        return Ok(None);
    }
    let peak = (rise..fall)
        .max_by(|&a, &b| values[a].total_cmp(&values[b]))
        .expect("nonempty window");
    // Golden-section refinement between the neighbouring samples.
    let (mut a, mut b) = (times[peak.saturating_sub(1)], times[(peak + 1).min(times.len() - 1)]);
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..80 {
        let x1 = b - phi * (b - a);
        let x2 = a + phi * (b - a);
        if p(x1) < p(x2) {
            a = x1;
        } else {
            b = x2;
        }
    }
    Ok(Some(0.5 * (a + b)))
}
