//! Fixed-excitation-number sectors of an `N`-site chain.
//!
//! A configuration is the strictly increasing list of (1-based) sites that
//! carry an up spin. Configurations are stored in lexicographic order, so
//! ordinals are reproducible between runs and across implementations.

use std::collections::HashMap;
use std::fmt;

use itertools::Itertools;

use crate::error::{domain, Result};

/// Positions of the up spins, 1-based and strictly increasing.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Config(Vec<usize>);

impl Config {
    /// Builds a configuration, checking that the sites are strictly increasing
    /// and lie in `1..=n_sites`.
    pub fn new(sites: impl Into<Vec<usize>>, n_sites: usize) -> Result<Self> {
        let sites = sites.into();
        if sites.iter().any(|&s| s == 0 || s > n_sites) {
            return domain(format!("configuration {sites:?} has a site outside 1..={n_sites}"));
        }
        if sites.windows(2).any(|w| w[0] >= w[1]) {
            return domain(format!("configuration {sites:?} is not strictly increasing"));
        }
        Ok(Config(sites))
    }

    pub fn sites(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, site: usize) -> bool {
        self.0.binary_search(&site).is_ok()
    }

    /// Column-safe label such as `4_5`, used in CSV headers.
    pub fn label(&self) -> String {
        self.0.iter().map(|s| s.to_string()).join("_")
    }
}

impl fmt::Display for Config {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({})", self.0.iter().join(","))
    }
}

/// All configurations of `n_excitations` up spins on `n_sites` sites.
#[derive(Debug, Clone)]
pub struct SectorBasis {
    n_sites: usize,
    n_excitations: usize,
    configs: Vec<Config>,
    index_map: HashMap<Config, usize>,
}

impl SectorBasis {
    /// Enumerates the sector in lexicographic order.
    pub fn enumerate(n_sites: usize, n_excitations: usize) -> Result<Self> {
        if n_sites == 0 {
            return domain("a chain needs at least one site");
        }
        if n_excitations > n_sites {
            return domain(format!("cannot place {n_excitations} excitations on {n_sites} sites"));
        }
        let configs: Vec<Config> = (1..=n_sites).combinations(n_excitations).map(Config).collect();
        let index_map = configs.iter().enumerate().map(|(i, c)| (c.clone(), i)).collect();
        Ok(SectorBasis {
            n_sites,
            n_excitations,
            configs,
            index_map,
        })
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn n_excitations(&self) -> usize {
        self.n_excitations
    }

    pub fn dim(&self) -> usize {
        self.configs.len()
    }

    pub fn configs(&self) -> &[Config] {
        &self.configs
    }

    pub fn config(&self, ordinal: usize) -> &Config {
        &self.configs[ordinal]
    }

    /// Ordinal of `config`, or a domain error if it is malformed or belongs
    /// to a different sector.
    pub fn index_of(&self, config: &Config) -> Result<usize> {
        match self.index_map.get(config) {
            Some(&i) => Ok(i),
            None => domain(format!(
                "configuration {config} is not in the N={}, k={} sector",
                self.n_sites, self.n_excitations
            )),
        }
    }

    /// Convenience lookup from raw site positions.
    pub fn index_of_sites(&self, sites: &[usize]) -> Result<usize> {
        let config = Config::new(sites.to_vec(), self.n_sites)?;
        self.index_of(&config)
    }
}

/// Binomial coefficient, exact for the sizes used here.
pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
}

#[cfg(test)]
mod tests {
    use super::*;

    // Brute force over all 2^N bit patterns, independent of the combinations
    // iterator used by `enumerate`.
    fn brute_force(n: usize, k: usize) -> Vec<Vec<usize>> {
        let mut out: Vec<Vec<usize>> = (0u32..1 << n)
            .filter(|m| m.count_ones() as usize == k)
            .map(|m| (0..n).filter(|b| m & (1 << b) != 0).map(|b| b + 1).collect())
            .collect();
        out.sort();
        out
    }

    #[test]
    fn single_excitation_sites() {
        let b = SectorBasis::enumerate(3, 1).unwrap();
        let got: Vec<_> = b.configs().iter().map(|c| c.sites().to_vec()).collect();
        assert_eq!(got, vec![vec![1], vec![2], vec![3]]);
    }

    #[test]
    fn two_excitations_on_four_sites() {
        let b = SectorBasis::enumerate(4, 2).unwrap();
        assert_eq!(b.dim(), 6);
        assert_eq!(b.config(0).sites(), &[1, 2]);
        assert_eq!(b.config(5).sites(), &[3, 4]);
        assert_eq!(b.index_of_sites(&[1, 2]).unwrap(), 0);
        assert_eq!(b.index_of_sites(&[3, 4]).unwrap(), 5);
    }

    #[test]
    fn twelve_site_pair_sector_matches_brute_force() {
        let b = SectorBasis::enumerate(12, 2).unwrap();
        let brute = brute_force(12, 2);
        assert_eq!(brute.len(), 66);
        let got: Vec<_> = b.configs().iter().map(|c| c.sites().to_vec()).collect();
        assert_eq!(got, brute);
    }

    #[test]
    fn zero_based_ordinal() {
        let b = SectorBasis::enumerate(12, 1).unwrap();
        assert_eq!(b.index_of_sites(&[7]).unwrap(), 6);
    }

    #[test]
    fn out_of_range_excitations() {
        assert!(SectorBasis::enumerate(3, 4).is_err());
        assert!(SectorBasis::enumerate(0, 0).is_err());
    }

    #[test]
    fn malformed_configs_are_rejected() {
        let b = SectorBasis::enumerate(4, 2).unwrap();
        assert!(b.index_of_sites(&[2, 1]).is_err());
        assert!(b.index_of_sites(&[2, 2]).is_err());
        assert!(b.index_of_sites(&[0, 1]).is_err());
        assert!(b.index_of_sites(&[4, 5]).is_err());
        assert!(b.index_of_sites(&[1]).is_err());
    }

    #[test]
    fn empty_and_full_sectors() {
        let empty = SectorBasis::enumerate(5, 0).unwrap();
        assert_eq!(empty.dim(), 1);
        assert!(empty.config(0).is_empty());
        let full = SectorBasis::enumerate(5, 5).unwrap();
        assert_eq!(full.dim(), 1);
    }

    #[test]
    fn labels() {
        let c = Config::new(vec![4, 5], 12).unwrap();
        assert_eq!(c.label(), "4_5");
        assert_eq!(c.to_string(), "(4,5)");
    }
}
