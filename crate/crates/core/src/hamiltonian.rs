//! Sector Hamiltonians of the XXZ chain with on-site defects.
//!
//! ```text
//! H = Σ_n (ε_n/2) σᶻ_n + Σ_bonds [ (BΔ/4) σᶻ_n σᶻ_{n+1} + J (σ⁺_n σ⁻_{n+1} + h.c.) ]
//! ```
//!
//! with free boundaries and `ε_n = ε₀ + offset(n)`. Energies are measured
//! from the all-down state, so the vacuum sits at zero. The hop amplitude `J`
//! is `B/2` by default; [`HopNormalization::LiteralPauli`] gives `B/4`.

use std::collections::BTreeMap;
use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::basis::{Config, SectorBasis};
use crate::error::{domain, Error, Result};

/// Largest chain accepted by the full `2^N` construction.
pub const FULL_SPACE_SITE_LIMIT: usize = 10;

/// Amplitude convention for moving an excitation to a neighbouring site.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HopNormalization {
    /// Hop matrix element `B/2`: one-magnon band `E₁ ± B`, bound-pair hopping
    /// `B/(4Δ)`. This is the convention every closed-form prediction uses.
    #[default]
    Standard,
    /// Hop matrix element `B/4`, from reading `σ± = (σˣ ± iσʸ)/2` literally
    /// inside `(B/2)(1/2) H_hop`.
    LiteralPauli,
}

impl HopNormalization {
    pub fn amplitude(self, coupling: f64) -> f64 {
        match self {
            HopNormalization::Standard => coupling / 2.0,
            HopNormalization::LiteralPauli => coupling / 4.0,
        }
    }
}

/// Physical parameters of a chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainSpec {
    pub n_sites: usize,
    /// Exchange coupling `B`.
    pub coupling: f64,
    /// Anisotropy `Δ`.
    pub anisotropy: f64,
    /// Common level spacing `ε₀`.
    pub base_spacing: f64,
    /// Site (1-based) to level-spacing offset.
    pub defects: BTreeMap<usize, f64>,
    #[serde(default)]
    pub hop: HopNormalization,
}

impl ChainSpec {
    pub fn new(n_sites: usize, coupling: f64, anisotropy: f64, base_spacing: f64) -> Result<Self> {
        let spec = ChainSpec {
            n_sites,
            coupling,
            anisotropy,
            base_spacing,
            defects: BTreeMap::new(),
            hop: HopNormalization::Standard,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Adds (or replaces) the level-spacing offset at `site`.
    pub fn with_defect(mut self, site: usize, offset: f64) -> Result<Self> {
        self.defects.insert(site, offset);
        self.validate()?;
        Ok(self)
    }

    pub fn with_defects(mut self, defects: impl IntoIterator<Item = (usize, f64)>) -> Result<Self> {
        self.defects.extend(defects);
        self.validate()?;
        Ok(self)
    }

    pub fn with_hop(mut self, hop: HopNormalization) -> Self {
        self.hop = hop;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_sites == 0 {
            return domain("chain must have at least one site");
        }
        for (name, v) in [
            ("coupling B", self.coupling),
            ("anisotropy Δ", self.anisotropy),
            ("base spacing ε₀", self.base_spacing),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return domain(format!("{name} must be finite and positive, got {v}"));
            }
        }
        for (&site, &offset) in &self.defects {
            if site == 0 || site > self.n_sites {
                return domain(format!("defect site {site} outside 1..={}", self.n_sites));
            }
            if !offset.is_finite() {
                return domain(format!("defect offset at site {site} is not finite"));
            }
        }
        Ok(())
    }

    pub fn offset(&self, site: usize) -> f64 {
        self.defects.get(&site).copied().unwrap_or(0.0)
    }

    /// Level spacing `ε_n` of site `n`.
    pub fn spacing(&self, site: usize) -> f64 {
        self.base_spacing + self.offset(site)
    }

    /// `BΔ`, the energy cost of one broken ferromagnetic bond pair.
    pub fn ising(&self) -> f64 {
        self.coupling * self.anisotropy
    }

    /// Bulk one-magnon level `E₁ = ε₀ − BΔ`.
    pub fn one_magnon_level(&self) -> f64 {
        self.base_spacing - self.ising()
    }

    pub fn hop_amplitude(&self) -> f64 {
        self.hop.amplitude(self.coupling)
    }

    /// True when both specs describe the same chain apart from defects.
    pub fn same_host(&self, other: &ChainSpec) -> bool {
        self.n_sites == other.n_sites
            && self.coupling == other.coupling
            && self.anisotropy == other.anisotropy
            && self.base_spacing == other.base_spacing
            && self.hop == other.hop
    }
}

/// Energy of the all-down state, `−Σ ε_n/2 + (N−1)BΔ/4`.
pub fn ground_energy(chain: &ChainSpec) -> f64 {
    let zeeman: f64 = (1..=chain.n_sites).map(|n| chain.spacing(n)).sum();
    -zeeman / 2.0 + (chain.n_sites as f64 - 1.0) * chain.ising() / 4.0
}

/// Dense Hamiltonian restricted to one excitation sector.
#[derive(Debug, Clone)]
pub struct SectorHamiltonian {
    pub basis: Arc<SectorBasis>,
    pub matrix: DMatrix<f64>,
    /// The subtracted all-down energy `E₀`.
    pub energy_origin: f64,
}

impl SectorHamiltonian {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }
}

/// Diagonal element relative to the all-down state: every up spin adds its
/// level spacing and every domain wall costs `BΔ/2`.
fn shifted_diagonal(chain: &ChainSpec, config: &Config) -> f64 {
    let zeeman: f64 = config.sites().iter().map(|&n| chain.spacing(n)).sum();
    let walls = (1..chain.n_sites)
        .filter(|&n| config.contains(n) != config.contains(n + 1))
        .count();
    zeeman - walls as f64 * chain.ising() / 2.0
}

/// Assembles the sector matrix of `chain` on `basis`.
pub fn build_sector_hamiltonian(chain: &ChainSpec, basis: Arc<SectorBasis>) -> Result<SectorHamiltonian> {
    chain.validate()?;
    if basis.n_sites() != chain.n_sites {
        return domain(format!(
            "basis has {} sites but the chain has {}",
            basis.n_sites(),
            chain.n_sites
        ));
    }
    let dim = basis.dim();
    let hop = chain.hop_amplitude();
    let mut matrix = DMatrix::zeros(dim, dim);
    for (i, config) in basis.configs().iter().enumerate() {
        matrix[(i, i)] = shifted_diagonal(chain, config);
        // Rightward moves only; the mirror entry is written at the same time.
        for (slot, &site) in config.sites().iter().enumerate() {
            let target = site + 1;
            if target > chain.n_sites || config.contains(target) {
                continue;
            }
            let mut moved = config.sites().to_vec();
            moved[slot] = target;
            let j = basis.index_of_sites(&moved)?;
            matrix[(i, j)] = hop;
            matrix[(j, i)] = hop;
        }
    }
    Ok(SectorHamiltonian {
        basis,
        matrix,
        energy_origin: ground_energy(chain),
    })
}

/// Convenience: enumerate the sector and build its Hamiltonian.
pub fn sector_hamiltonian(chain: &ChainSpec, n_excitations: usize) -> Result<SectorHamiltonian> {
    let basis = Arc::new(SectorBasis::enumerate(chain.n_sites, n_excitations)?);
    build_sector_hamiltonian(chain, basis)
}

// Full 2^N space. Bit n-1 of a state index is set when site n is up.

fn spin_z(state: usize, site: usize) -> f64 {
    if state & (1 << (site - 1)) != 0 {
        1.0
    } else {
        -1.0
    }
}

fn raise(state: usize, site: usize) -> Option<usize> {
    let bit = 1 << (site - 1);
    (state & bit == 0).then_some(state | bit)
}

fn lower(state: usize, site: usize) -> Option<usize> {
    let bit = 1 << (site - 1);
    (state & bit != 0).then_some(state & !bit)
}

fn check_full_space_size(chain: &ChainSpec, max_sites: usize) -> Result<()> {
    let limit = max_sites.min(FULL_SPACE_SITE_LIMIT);
    if chain.n_sites > limit {
        return domain(format!(
            "full-space construction refused for N={} (limit {limit})",
            chain.n_sites
        ));
    }
    Ok(())
}

/// Unshifted `2^N × 2^N` Hamiltonian built term by term from Pauli operators.
pub fn full_space_hamiltonian(chain: &ChainSpec, max_sites: usize) -> Result<DMatrix<f64>> {
    chain.validate()?;
    check_full_space_size(chain, max_sites)?;
    let n = chain.n_sites;
    let dim = 1usize << n;
    // (B/2)·(1/2)·H_hop under the literal reading; doubled for Standard.
    let hop_prefactor = match chain.hop {
        HopNormalization::LiteralPauli => chain.coupling / 2.0 * 0.5,
        HopNormalization::Standard => chain.coupling / 2.0,
    };
    let mut h = DMatrix::zeros(dim, dim);
    for state in 0..dim {
        let mut diag = 0.0;
        for site in 1..=n {
            diag += chain.spacing(site) / 2.0 * spin_z(state, site);
        }
        for site in 1..n {
            diag += chain.coupling / 2.0 * chain.anisotropy / 2.0 * spin_z(state, site) * spin_z(state, site + 1);
        }
        h[(state, state)] += diag;
        for site in 1..n {
            // σ⁺_n σ⁻_{n+1}
            if let Some(out) = lower(state, site + 1).and_then(|s| raise(s, site)) {
                h[(out, state)] += hop_prefactor;
            }
            // σ⁻_n σ⁺_{n+1}
            if let Some(out) = raise(state, site + 1).and_then(|s| lower(s, site)) {
                h[(out, state)] += hop_prefactor;
            }
        }
    }
    Ok(h)
}

/// Outcome of comparing the full-space matrix with the sector blocks.
#[derive(Debug, Clone, Copy)]
pub struct CrosscheckReport {
    /// Largest `|full − E₀ − sector|` over all in-sector pairs.
    pub max_block_deviation: f64,
    /// Largest entry coupling different excitation numbers.
    pub max_off_block: f64,
    /// Largest absolute entry of the full matrix.
    pub scale: f64,
}

impl CrosscheckReport {
    pub fn passed(&self) -> bool {
        let tol = 1e-12 * self.scale.max(f64::MIN_POSITIVE);
        self.max_block_deviation <= tol && self.max_off_block <= tol
    }
}

fn config_to_state(config: &Config) -> usize {
    config.sites().iter().fold(0, |acc, &s| acc | 1 << (s - 1))
}

/// Compares a full-space matrix against every sector block of `chain`.
pub fn compare_with_sectors(chain: &ChainSpec, full: &DMatrix<f64>) -> Result<CrosscheckReport> {
    let n = chain.n_sites;
    let dim = 1usize << n;
    if full.nrows() != dim || full.ncols() != dim {
        return domain(format!("full matrix is not {dim}×{dim}"));
    }
    let scale = full.amax();
    let mut max_off_block = 0.0f64;
    for r in 0..dim {
        for c in 0..dim {
            if r.count_ones() != c.count_ones() {
                max_off_block = max_off_block.max(full[(r, c)].abs());
            }
        }
    }
    let e0 = ground_energy(chain);
    let mut max_block_deviation = 0.0f64;
    for k in 0..=n {
        let h = sector_hamiltonian(chain, k)?;
        let states: Vec<usize> = h.basis.configs().iter().map(config_to_state).collect();
        for (i, &si) in states.iter().enumerate() {
            for (j, &sj) in states.iter().enumerate() {
                let shifted = full[(si, sj)] - if i == j { e0 } else { 0.0 };
                max_block_deviation = max_block_deviation.max((shifted - h.matrix[(i, j)]).abs());
            }
        }
    }
    Ok(CrosscheckReport {
        max_block_deviation,
        max_off_block,
        scale,
    })
}

/// Builds the full `2^N` Hamiltonian independently and checks that it is
/// block diagonal in excitation number with blocks equal to the sector
/// matrices. Refuses chains longer than `max_sites`.
pub fn full_space_crosscheck(chain: &ChainSpec, max_sites: usize) -> Result<bool> {
    let full = full_space_hamiltonian(chain, max_sites)?;
    Ok(compare_with_sectors(chain, &full)?.passed())
}

pub(crate) fn ensure_same_sector(a: &SectorBasis, b: &SectorBasis) -> Result<()> {
    if a.n_sites() != b.n_sites() || a.n_excitations() != b.n_excitations() {
        return Err(Error::Domain(format!(
            "sector mismatch: (N={}, k={}) vs (N={}, k={})",
            a.n_sites(),
            a.n_excitations(),
            b.n_sites(),
            b.n_excitations()
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn plain(n: usize) -> ChainSpec {
        ChainSpec::new(n, 1.0, 10.0, 5.0).unwrap()
    }

    #[test]
    fn ground_energy_two_sites() {
        assert_eq!(ground_energy(&plain(2)), -2.5);
    }

    #[test]
    fn ground_energy_matches_all_down_diagonal() {
        let chain = ChainSpec::new(12, 1.0, 10.0, 7.5)
            .unwrap()
            .with_defects((3..=6).map(|s| (s, 10.0)))
            .unwrap();
        // Literal sum of the Pauli terms on the all-down state.
        let mut direct = 0.0;
        for n in 1..=12 {
            direct -= chain.spacing(n) / 2.0;
        }
        for _ in 1..12 {
            direct += 1.0 / 2.0 * 10.0 / 2.0 * (-1.0 * -1.0);
        }
        assert!((ground_energy(&chain) - direct).abs() < 1e-12);
        let h = sector_hamiltonian(&chain, 0).unwrap();
        assert_eq!(h.matrix[(0, 0)], 0.0);
    }

    #[test]
    fn bulk_one_magnon_diagonal() {
        let chain = plain(8);
        let h = sector_hamiltonian(&chain, 1).unwrap();
        for n in 2..=7 {
            assert!((h.matrix[(n - 1, n - 1)] - chain.one_magnon_level()).abs() < 1e-12);
        }
        // Edge sites break a single bond.
        assert!((h.matrix[(0, 0)] - (5.0 - 5.0)).abs() < 1e-12);
    }

    #[test]
    fn bulk_adjacent_pair_diagonal() {
        let chain = plain(8);
        let h = sector_hamiltonian(&chain, 2).unwrap();
        let i = h.basis.index_of_sites(&[4, 5]).unwrap();
        let expected = 2.0 * chain.one_magnon_level() + chain.ising();
        assert!((h.matrix[(i, i)] - expected).abs() < 1e-12);
    }

    #[test]
    fn hop_elements_one_excitation() {
        let h = sector_hamiltonian(&plain(4), 1).unwrap();
        assert_eq!(h.matrix[(1, 2)], 0.5);
        assert_eq!(h.matrix[(0, 2)], 0.0);
        // Brute force: nonzero off-diagonal iff the sites are neighbours.
        for i in 0..4usize {
            for j in 0..4 {
                if i != j {
                    let expect = if i.abs_diff(j) == 1 { 0.5 } else { 0.0 };
                    assert_eq!(h.matrix[(i, j)], expect);
                }
            }
        }
    }

    #[test]
    fn literal_normalization_halves_hop() {
        let chain = plain(4).with_hop(HopNormalization::LiteralPauli);
        let h = sector_hamiltonian(&chain, 1).unwrap();
        assert_eq!(h.matrix[(1, 2)], 0.25);
        assert!(full_space_crosscheck(&chain, 8).unwrap());
    }

    #[test]
    fn dimension_mismatch() {
        let basis = Arc::new(SectorBasis::enumerate(5, 1).unwrap());
        assert!(build_sector_hamiltonian(&plain(4), basis).is_err());
    }

    #[test]
    fn invalid_chain_parameters() {
        assert!(ChainSpec::new(4, 0.0, 1.0, 1.0).is_err());
        assert!(ChainSpec::new(4, 1.0, -1.0, 1.0).is_err());
        assert!(ChainSpec::new(4, 1.0, 1.0, f64::NAN).is_err());
        assert!(plain(4).with_defect(5, 1.0).is_err());
        assert!(plain(4).with_defect(0, 1.0).is_err());
        assert!(plain(4).with_defect(2, f64::INFINITY).is_err());
    }

    #[test]
    fn crosscheck_plain_chain() {
        assert!(full_space_crosscheck(&plain(4), 8).unwrap());
    }

    #[test]
    fn crosscheck_with_defect() {
        let chain = plain(6).with_defect(3, 5.0).unwrap();
        assert!(full_space_crosscheck(&chain, 8).unwrap());
    }

    #[test]
    fn crosscheck_detects_corrupted_hop() {
        let chain = plain(6).with_defect(3, 5.0).unwrap();
        let mut full = full_space_hamiltonian(&chain, 8).unwrap();
        // Sites 2 and 3: state with site 2 up ↔ state with site 3 up.
        let (a, b) = (1 << 1, 1 << 2);
        assert_eq!(full[(a, b)], 0.5);
        full[(a, b)] = 0.55;
        full[(b, a)] = 0.55;
        assert!(!compare_with_sectors(&chain, &full).unwrap().passed());
    }

    #[test]
    fn crosscheck_refuses_large_chains() {
        assert!(full_space_crosscheck(&plain(9), 8).is_err());
        assert!(full_space_crosscheck(&plain(11), 64).is_err());
    }

    #[test]
    fn defect_shifts_only_occupying_diagonals() {
        let base = plain(7);
        let moved = base.clone().with_defect(4, 3.25).unwrap();
        let h0 = sector_hamiltonian(&base, 2).unwrap();
        let h1 = sector_hamiltonian(&moved, 2).unwrap();
        let diff = &h1.matrix - &h0.matrix;
        for (i, c) in h0.basis.configs().iter().enumerate() {
            for j in 0..h0.dim() {
                let expect = if i == j && c.contains(4) { 3.25 } else { 0.0 };
                assert!((diff[(i, j)] - expect).abs() < 1e-12);
            }
        }
    }
}
