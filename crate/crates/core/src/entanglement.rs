//! Entanglement diagnostics: target-state fidelities, reduced density
//! matrices of a few qubits, and two-qubit concurrence.

use std::collections::BTreeMap;

use itertools::Itertools;
use nalgebra::{Complex, DMatrix};

use crate::basis::Config;
use crate::dynamics::{StateVector, C64};
use crate::error::{domain, Error, Result};

/// Largest subset accepted by [`reduce`].
pub const MAX_REDUCED_QUBITS: usize = 4;

const DENSITY_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TargetKind {
    EprPlus,
    EprMinus,
    W,
}

/// An equal-weight superposition of a few basis configurations.
#[derive(Debug, Clone)]
pub struct TargetState {
    kind: TargetKind,
    components: Vec<Config>,
    amplitudes: Vec<C64>,
}

impl TargetState {
    pub fn epr_plus(a: Config, b: Config) -> Result<Self> {
        Self::build(TargetKind::EprPlus, vec![a, b], &[1.0, 1.0])
    }

    pub fn epr_minus(a: Config, b: Config) -> Result<Self> {
        Self::build(TargetKind::EprMinus, vec![a, b], &[1.0, -1.0])
    }

    pub fn w(a: Config, b: Config, c: Config) -> Result<Self> {
        Self::build(TargetKind::W, vec![a, b, c], &[1.0, 1.0, 1.0])
    }

    fn build(kind: TargetKind, components: Vec<Config>, signs: &[f64]) -> Result<Self> {
        if !components.iter().all_unique() {
            return domain("target components must be distinct");
        }
        let scale = 1.0 / (components.len() as f64).sqrt();
        let amplitudes = signs.iter().map(|s| C64::new(s * scale, 0.0)).collect();
        Ok(TargetState {
            kind,
            components,
            amplitudes,
        })
    }

    pub fn kind(&self) -> TargetKind {
        self.kind
    }

    pub fn components(&self) -> &[Config] {
        &self.components
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn label(&self) -> String {
        let prefix = match self.kind {
            TargetKind::EprPlus => "EPRplus",
            TargetKind::EprMinus => "EPRminus",
            TargetKind::W => "W",
        };
        format!("{prefix}_{}", self.components.iter().map(Config::label).join("-"))
    }
}

/// Overlap of `psi` with `target`.
///
/// Plain mode returns `|⟨target|ψ⟩|²`. Phase-maximized mode returns the best
/// overlap over independent phases on each component, `(Σ|aᵢ|/√m)²`.
pub fn fidelity_to_target(psi: &StateVector, target: &TargetState, phase_maximized: bool) -> Result<f64> {
    let amps: Vec<C64> = target
        .components
        .iter()
        .map(|c| psi.amplitude(c))
        .collect::<Result<_>>()?;
    let f = if phase_maximized {
        let sum: f64 = amps
            .iter()
            .zip(&target.amplitudes)
            .map(|(a, t)| a.norm() * t.norm())
            .sum();
        sum * sum
    } else {
        amps.iter()
            .zip(&target.amplitudes)
            .map(|(a, t)| t.conj() * a)
            .sum::<C64>()
            .norm_sqr()
    };
    Ok(f.min(1.0))
}

/// Density matrix of a qubit subset. Basis index bit `m−1−j` is set when
/// qubit `j` of the subset is down, so the first basis state is all-up.
#[derive(Debug, Clone)]
pub struct ReducedDensityMatrix {
    pub qubits: Vec<usize>,
    pub matrix: DMatrix<C64>,
}

impl ReducedDensityMatrix {
    /// Validates Hermiticity, unit trace and positivity (eigenvalues above
    /// `−1e-12`).
    pub fn new(qubits: Vec<usize>, matrix: DMatrix<C64>) -> Result<Self> {
        let dim = 1usize << qubits.len();
        if matrix.nrows() != dim || matrix.ncols() != dim {
            return domain(format!(
                "density matrix for {} qubits must be {dim}×{dim}",
                qubits.len()
            ));
        }
        let herm = (&matrix - matrix.adjoint())
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        if herm > DENSITY_TOLERANCE {
            return Err(Error::Numeric(format!("density matrix not Hermitian ({herm:.3e})")));
        }
        let trace = matrix.trace();
        if (trace.re - 1.0).abs() > DENSITY_TOLERANCE || trace.im.abs() > DENSITY_TOLERANCE {
            return Err(Error::Numeric(format!("density matrix trace is {trace}")));
        }
        let rho = ReducedDensityMatrix { qubits, matrix };
        let min = rho.eigenvalues().iter().copied().fold(f64::INFINITY, f64::min);
        if min < -DENSITY_TOLERANCE {
            return Err(Error::Numeric(format!("density matrix has eigenvalue {min:.3e}")));
        }
        Ok(rho)
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        hermitian_part(&self.matrix)
            .symmetric_eigenvalues()
            .iter()
            .copied()
            .collect()
    }
}

fn hermitian_part(m: &DMatrix<C64>) -> DMatrix<C64> {
    (m + m.adjoint()) * C64::new(0.5, 0.0)
}

/// Partial trace of `|ψ⟩⟨ψ|` onto `qubits`, computed inside the sector: two
/// configurations contribute to the same block exactly when they agree on
/// every site outside the subset.
pub fn reduce(psi: &StateVector, qubits: &[usize]) -> Result<ReducedDensityMatrix> {
    let n = psi.basis.n_sites();
    if qubits.is_empty() || qubits.len() > MAX_REDUCED_QUBITS {
        return domain(format!(
            "can reduce onto 1..={MAX_REDUCED_QUBITS} qubits, got {}",
            qubits.len()
        ));
    }
    if !qubits.iter().all_unique() {
        return domain("reduced qubits must be distinct");
    }
    if let Some(&bad) = qubits.iter().find(|&&q| q == 0 || q > n) {
        return domain(format!("qubit {bad} outside 1..={n}"));
    }
    let m = qubits.len();
    let dim = 1usize << m;

    // Ordered map so the summation order, and hence the output bits, are fixed.
    let mut groups: BTreeMap<Vec<usize>, Vec<(usize, C64)>> = BTreeMap::new();
    for (config, &amp) in psi.basis.configs().iter().zip(psi.amplitudes.iter()) {
        if amp == C64::new(0.0, 0.0) {
            continue;
        }
        let outside: Vec<usize> = config.sites().iter().copied().filter(|s| !qubits.contains(s)).collect();
        let inner = qubits
            .iter()
            .enumerate()
            .filter(|(_, q)| !config.contains(**q))
            .fold(0, |acc, (j, _)| acc | 1 << (m - 1 - j));
        groups.entry(outside).or_default().push((inner, amp));
    }

    let mut rho = DMatrix::zeros(dim, dim);
    for members in groups.values() {
        for &(a, za) in members {
            for &(b, zb) in members {
                rho[(a, b)] += za * zb.conj();
            }
        }
    }
    ReducedDensityMatrix::new(qubits.to_vec(), rho)
}

/// `σʸ ⊗ σʸ` in the (up, down) ordering. It is real.
fn spin_flip() -> DMatrix<C64> {
    let mut yy = DMatrix::zeros(4, 4);
    yy[(0, 3)] = C64::new(-1.0, 0.0);
    yy[(1, 2)] = C64::new(1.0, 0.0);
    yy[(2, 1)] = C64::new(1.0, 0.0);
    yy[(3, 0)] = C64::new(-1.0, 0.0);
    yy
}

/// Hermitian square root, with eigenvalues clipped at zero.
fn sqrt_psd(m: &DMatrix<C64>) -> DMatrix<C64> {
    let eig = hermitian_part(m).symmetric_eigen();
    let roots = eig.eigenvalues.map(|x| {
        if x < 0.0 {
            log::debug!("clipping eigenvalue {x:.3e} to zero");
        }
        Complex::new(x.max(0.0).sqrt(), 0.0)
    });
    let v = &eig.eigenvectors;
    v * DMatrix::from_diagonal(&roots) * v.adjoint()
}

/// Wootters concurrence of a two-qubit density matrix.
///
/// The `λᵢ` are the square roots of the eigenvalues of `ρ ρ̃`, with
/// `ρ̃ = (σʸ⊗σʸ) ρ* (σʸ⊗σʸ)`. They are taken from the Hermitian matrix
/// `√ρ ρ̃ √ρ`, which has the same spectrum.
pub fn concurrence(rho: &ReducedDensityMatrix) -> Result<f64> {
    if rho.matrix.nrows() != 4 || rho.qubits.len() != 2 {
        return domain(format!(
            "concurrence needs a two-qubit density matrix, got {} qubits",
            rho.qubits.len()
        ));
    }
    let yy = spin_flip();
    let flipped = &yy * rho.matrix.map(|z| z.conj()) * &yy;
    let root = sqrt_psd(&rho.matrix);
    let product = &root * flipped * &root;
    let mut lambdas: Vec<f64> = hermitian_part(&product)
        .symmetric_eigenvalues()
        .iter()
        .map(|&x| x.max(0.0).sqrt())
        .collect();
    lambdas.sort_by(|a, b| b.total_cmp(a));
    Ok((lambdas[0] - lambdas[1] - lambdas[2] - lambdas[3]).clamp(0.0, 1.0))
}
