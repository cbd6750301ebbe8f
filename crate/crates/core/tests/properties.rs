use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{Complex, DMatrix, DVector};
use proptest::prelude::*;

use xxz_defects::basis::binomial;
use xxz_defects::dynamics::{
    decompose, evolve, evolve_schedule, uniform_times, QuenchSchedule, StateVector, TraceRequest,
};
use xxz_defects::effective::{bound_pair_single_defect, first_order_epr, one_excitation_pair, w_four_defects};
use xxz_defects::entanglement::{concurrence, fidelity_to_target, reduce, ReducedDensityMatrix, TargetState};
use xxz_defects::hamiltonian::{full_space_crosscheck, sector_hamiltonian, ChainSpec};
use xxz_defects::{Config, SectorBasis};

type C64 = Complex<f64>;

fn chain_strategy(max_sites: usize) -> impl Strategy<Value = ChainSpec> {
    (3..=max_sites, 0.2..3.0f64, 0.5..12.0f64, 1.0..30.0f64)
        .prop_flat_map(|(n, b, delta, eps)| {
            let defects = proptest::collection::vec(proptest::option::of(-5.0..25.0f64), n);
            (Just((n, b, delta, eps)), defects)
        })
        .prop_map(|((n, b, delta, eps), offsets)| {
            let defects = offsets
                .into_iter()
                .enumerate()
                .filter_map(|(i, g)| g.map(|g| (i + 1, g)));
            ChainSpec::new(n, b, delta, eps).unwrap().with_defects(defects).unwrap()
        })
}

fn random_state(basis: Arc<SectorBasis>, raw: &[(f64, f64)]) -> StateVector {
    let v = DVector::from_fn(basis.dim(), |i, _| {
        let (re, im) = raw[i % raw.len()];
        C64::new(re + 0.01 * i as f64, im)
    });
    StateVector::new(basis, v.normalize()).unwrap()
}

fn amplitudes() -> impl Strategy<Value = Vec<(f64, f64)>> {
    proptest::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 1..40)
}

/// Embeds a sector state in the full 2^N space, bit `n-1` set when site n
/// is excited, and traces out everything but `qubits` by brute force.
fn reduce_by_embedding(psi: &StateVector, qubits: &[usize]) -> DMatrix<C64> {
    let n = psi.basis.n_sites();
    let mut full = vec![C64::new(0.0, 0.0); 1 << n];
    for (config, &z) in psi.basis.configs().iter().zip(psi.amplitudes.iter()) {
        let idx = config.sites().iter().fold(0usize, |acc, s| acc | 1 << (s - 1));
        full[idx] = z;
    }
    let m = qubits.len();
    // Local index: bit (m-1-j) set when qubit j is not excited.
    let local = |state: usize| {
        qubits
            .iter()
            .enumerate()
            .filter(|(_, q)| state & (1 << (**q - 1)) == 0)
            .fold(0usize, |acc, (j, _)| acc | 1 << (m - 1 - j))
    };
    let mask = qubits.iter().fold(0usize, |acc, q| acc | 1 << (q - 1));
    let mut rho = DMatrix::zeros(1 << m, 1 << m);
    for a in 0..full.len() {
        for b in 0..full.len() {
            if a & !mask == b & !mask {
                rho[(local(a), local(b))] += full[a] * full[b].conj();
            }
        }
    }
    rho
}

/// Wootters concurrence from the non-Hermitian product ρ ρ̃, whose eigenvalues
/// are found through its real 8×8 representation.
fn concurrence_oracle(rho: &DMatrix<C64>) -> f64 {
    let mut yy = DMatrix::<C64>::zeros(4, 4);
    for (i, j, v) in [(0, 3, -1.0), (1, 2, 1.0), (2, 1, 1.0), (3, 0, -1.0)] {
        yy[(i, j)] = C64::new(v, 0.0);
    }
    let tilde = &yy * rho.conjugate() * &yy;
    let product = rho * tilde;
    let real = DMatrix::<f64>::from_fn(8, 8, |i, j| {
        let z = product[(i % 4, j % 4)];
        match (i < 4, j < 4) {
            (true, true) | (false, false) => z.re,
            (true, false) => -z.im,
            (false, true) => z.im,
        }
    });
    let mut eig: Vec<f64> = real.complex_eigenvalues().iter().map(|z| z.re.max(0.0)).collect();
    eig.sort_by(|a, b| b.total_cmp(a));
    // Every eigenvalue appears twice in the real representation.
    let l: Vec<f64> = eig.iter().step_by(2).map(|x| x.sqrt()).collect();
    (l[0] - l[1] - l[2] - l[3]).max(0.0)
}

fn random_density_matrix(raw: &[(f64, f64)]) -> DMatrix<C64> {
    let a = DMatrix::from_fn(4, 4, |i, j| {
        let (re, im) = raw[(4 * i + j) % raw.len()];
        C64::new(re + 0.1 * (i as f64 - j as f64), im)
    });
    let rho = &a * a.adjoint();
    let tr = rho.trace();
    rho / tr
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn basis_round_trip(n in 1..=12usize, k_frac in 0.0..=1.0f64) {
        let k = (k_frac * n as f64).round() as usize;
        let basis = SectorBasis::enumerate(n, k).unwrap();
        prop_assert_eq!(basis.dim(), binomial(n, k));
        for (i, c) in basis.configs().iter().enumerate() {
            prop_assert_eq!(basis.index_of(c).unwrap(), i);
        }
        prop_assert!(basis.configs().windows(2).all(|w| w[0].sites() < w[1].sites()));
        prop_assert_eq!(basis.dim(), SectorBasis::enumerate(n, n - k).unwrap().dim());
    }

    #[test]
    fn sector_matrices_are_symmetric(chain in chain_strategy(9), k in 0..5usize) {
        let k = k.min(chain.n_sites);
        let h = sector_hamiltonian(&chain, k).unwrap();
        prop_assert_eq!(&h.matrix, &h.matrix.transpose());
    }

    #[test]
    fn sectors_match_full_space(chain in chain_strategy(8)) {
        prop_assert!(full_space_crosscheck(&chain, 8).unwrap());
    }

    #[test]
    fn defect_locality(chain in chain_strategy(8), site_frac in 0.0..1.0f64, extra in -10.0..10.0f64, k in 1..4usize) {
        let n = chain.n_sites;
        let site = 1 + (site_frac * n as f64) as usize % n;
        let k = k.min(n);
        let before = sector_hamiltonian(&chain, k).unwrap();
        let shifted = chain.clone().with_defect(site, chain.offset(site) + extra).unwrap();
        let after = sector_hamiltonian(&shifted, k).unwrap();
        for (i, c) in before.basis.configs().iter().enumerate() {
            for j in 0..before.dim() {
                let d = after.matrix[(i, j)] - before.matrix[(i, j)];
                if i == j && c.contains(site) {
                    prop_assert!((d - extra).abs() <= 1e-12 * (1.0 + before.matrix[(i, i)].abs()));
                } else {
                    prop_assert!(d.abs() <= 1e-12 * (1.0 + before.matrix[(i, i)].abs()), "entry ({i},{j}) moved by {d}");
                }
            }
        }
    }

    #[test]
    fn evolution_is_unitary_and_composes(chain in chain_strategy(9), k in 1..4usize, raw in amplitudes(), t1 in 0.0..500.0f64, t2 in 0.0..500.0f64) {
        let h = sector_hamiltonian(&chain, k.min(chain.n_sites)).unwrap();
        let d = decompose(&h).unwrap();
        let psi = random_state(h.basis.clone(), &raw);
        let direct = evolve(&d, &psi, t1 + t2).unwrap();
        let stepped = evolve(&d, &evolve(&d, &psi, t1).unwrap(), t2).unwrap();
        prop_assert!((direct.norm() - 1.0).abs() <= 1e-10);
        let diff = (&direct.amplitudes - &stepped.amplitudes).camax();
        prop_assert!(diff <= 1e-9, "composition error {diff}");
        let scale = h.matrix.abs().row_sum().max();
        let e0 = psi.expectation(&h.matrix);
        let e1 = direct.expectation(&h.matrix);
        prop_assert!((e1 - e0).abs() <= 1e-9 * scale);
    }

    #[test]
    fn phase_maximized_fidelity_dominates(raw in amplitudes(), t in 0.0..50.0f64) {
        let basis = Arc::new(SectorBasis::enumerate(8, 2).unwrap());
        let chain = ChainSpec::new(8, 1.0, 4.0, 10.0).unwrap().with_defects([(3, 2.0), (4, 2.0), (5, 2.0)]).unwrap();
        let h = sector_hamiltonian(&chain, 2).unwrap();
        let psi = evolve(&decompose(&h).unwrap(), &random_state(basis, &raw), t).unwrap();
        let c = |s: &[usize]| Config::new(s.to_vec(), 8).unwrap();
        for target in [
            TargetState::epr_plus(c(&[3, 4]), c(&[4, 5])).unwrap(),
            TargetState::epr_minus(c(&[2, 3]), c(&[6, 8])).unwrap(),
            TargetState::w(c(&[3, 4]), c(&[4, 5]), c(&[5, 6])).unwrap(),
        ] {
            let plain = fidelity_to_target(&psi, &target, false).unwrap();
            let best = fidelity_to_target(&psi, &target, true).unwrap();
            prop_assert!(best + 1e-12 >= plain);
            prop_assert!((0.0..=1.0 + 1e-12).contains(&best));
        }
    }

    #[test]
    fn reduce_matches_full_embedding(n in 3..=8usize, k in 1..4usize, raw in amplitudes(), picks in proptest::collection::vec(0..8usize, 1..=4)) {
        let k = k.min(n);
        let mut qubits: Vec<usize> = Vec::new();
        for p in picks {
            let q = 1 + p % n;
            if !qubits.contains(&q) {
                qubits.push(q);
            }
        }
        let psi = random_state(Arc::new(SectorBasis::enumerate(n, k).unwrap()), &raw);
        let rho = reduce(&psi, &qubits).unwrap();
        let oracle = reduce_by_embedding(&psi, &qubits);
        prop_assert!((&rho.matrix - &oracle).camax() <= 1e-12);
        prop_assert!((&rho.matrix - rho.matrix.adjoint()).camax() <= 1e-12);
        prop_assert!((rho.matrix.trace() - C64::new(1.0, 0.0)).norm() <= 1e-12);
        prop_assert!(rho.eigenvalues().iter().all(|&x| x >= -1e-12));
    }

    #[test]
    fn concurrence_matches_oracle(raw in proptest::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 16..=16)) {
        let rho = random_density_matrix(&raw);
        let value = concurrence(&ReducedDensityMatrix::new(vec![1, 2], rho.clone()).unwrap()).unwrap();
        prop_assert!((value - concurrence_oracle(&rho)).abs() <= 1e-8);
    }

    #[test]
    fn sector_concurrence_matches_oracle(n in 3..=8usize, k in 1..4usize, raw in amplitudes(), a in 0..8usize, b in 0..8usize) {
        let (a, b) = (1 + a % n, 1 + b % n);
        prop_assume!(a != b);
        let psi = random_state(Arc::new(SectorBasis::enumerate(n, k.min(n)).unwrap()), &raw);
        let rho = reduce(&psi, &[a, b]).unwrap();
        let (a, b) = (concurrence(&rho).unwrap(), concurrence_oracle(&rho.matrix));
        // Sector states give rank-deficient ρ; square roots of near-zero
        // eigenvalues of the non-normal product cost about half the digits.
        prop_assert!((a - b).abs() <= 1e-6, "{a} vs {b}");
    }

    #[test]
    fn concurrence_ignores_local_phases(raw in proptest::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 16..=16), p1 in 0.0..(2.0 * PI), p2 in 0.0..(2.0 * PI)) {
        let rho = random_density_matrix(&raw);
        let phase = |p: f64| [C64::new(1.0, 0.0), C64::from_polar(1.0, p)];
        let (u1, u2) = (phase(p1), phase(p2));
        let u = DMatrix::from_diagonal(&DVector::from_fn(4, |i, _| u1[i >> 1] * u2[i & 1]));
        let rotated = &u * &rho * u.adjoint();
        let before = concurrence(&ReducedDensityMatrix::new(vec![1, 2], rho).unwrap()).unwrap();
        let after = concurrence(&ReducedDensityMatrix::new(vec![1, 2], rotated).unwrap()).unwrap();
        prop_assert!((before - after).abs() <= 1e-10);
    }

    #[test]
    fn prediction_invariants(b in 0.2..3.0f64, delta in 1.0..20.0f64, g_over_b in 10.0..200.0f64, mu in 0..3usize) {
        let g = g_over_b * b;
        let host = ChainSpec::new(14, b, delta, 30.0).unwrap();
        let n0 = 4;
        let pair = host.clone().with_defects([(n0, g), (n0 + mu + 1, g)]).unwrap();
        let next = host.clone().with_defects([(n0, g), (n0 + mu + 2, g)]).unwrap();
        let stronger = host.clone().with_defects([(n0, 2.0 * g), (n0 + mu + 1, 2.0 * g)]).unwrap();
        let p = one_excitation_pair(&pair, n0, n0 + mu + 1, 4).unwrap();
        prop_assert!(p.gap > one_excitation_pair(&next, n0, n0 + mu + 2, 4).unwrap().gap);
        // At μ = 0 the gap is B whatever g is.
        let weaker_gap = one_excitation_pair(&stronger, n0, n0 + mu + 1, 4).unwrap().gap;
        if mu == 0 {
            prop_assert!(weaker_gap <= p.gap);
        } else {
            prop_assert!(p.gap > weaker_gap);
        }
        let others = [
            bound_pair_single_defect(&host.clone().with_defect(6, g).unwrap(), 6, 4).unwrap(),
            first_order_epr(&host.clone().with_defects([(4, g), (5, g), (6, g + b * delta)]).unwrap(), 4, 4).unwrap(),
        ];
        for pred in std::iter::once(&p).chain(others.iter()) {
            prop_assert!((pred.period * pred.gap - 2.0 * PI).abs() <= 1e-12 * 2.0 * PI);
            prop_assert!(pred.entanglement_times.windows(2).all(|w| w[0] < w[1]));
        }
        let w = w_four_defects(&host.clone().with_defects((3..=6).map(|s| (s, g))).unwrap(), 3, 4).unwrap();
        let levels = w.effective_energies.unwrap();
        prop_assert!(levels[0] < levels[1] && levels[1] < levels[2]);
        prop_assert!(w.entanglement_times.windows(2).all(|x| x[0] < x[1]));
    }
}

/// An instantaneous δ = 20B detuning cannot freeze the pair better than the
/// isolated two-level bound B / (2 √(B² + δ²)).
#[test]
fn quench_residual_oscillation_follows_two_level_bound() {
    let (n0, m0, g, delta_q) = (4, 5, 100.0, 20.0);
    let chain = ChainSpec::new(10, 1.0, 10.0, 20.0)
        .unwrap()
        .with_defects([(n0, g), (m0, g)])
        .unwrap();
    let h = sector_hamiltonian(&chain, 1).unwrap();
    let t_q = PI / 2.0;
    let detuned = chain.clone().with_defect(m0, g + delta_q).unwrap();
    let schedule = QuenchSchedule::new(vec![(chain, t_q), (detuned, 0.0)]).unwrap();
    let tracked = vec![Config::new(vec![n0], 10).unwrap(), Config::new(vec![m0], 10).unwrap()];
    let psi = StateVector::basis_state(h.basis.clone(), &tracked[0]).unwrap();
    let times: Vec<f64> = uniform_times(20.0 * PI, 8001).into_iter().map(|t| t + t_q).collect();
    let trace = evolve_schedule(&schedule, &psi, &TraceRequest::tracking(tracked), &times).unwrap();
    let dev = trace
        .probabilities
        .iter()
        .flat_map(|row| row.iter().map(|p| (p - 0.5).abs()))
        .fold(0.0, f64::max);
    let bound = 1.0 / (2.0 * (1.0 + delta_q * delta_q).sqrt());
    assert!((dev - bound).abs() < 2e-3, "residual {dev} vs two-level {bound}");
}
