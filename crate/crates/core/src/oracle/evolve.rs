//! Exact action of exp(-i·H·T) for the exchange Hamiltonian
//! H = Σ_{j≠j'} V(|r_j - r_j'|) σ_ps^j σ_sp^j' (both orderings summed).
//!
//! H conserves the total s-count and p-count separately, so the evolution
//! is block-diagonal over (s-count, p-count) sectors. Each occupied sector
//! is diagonalized densely (the phase matrix is Hermitian), which makes the
//! propagator exact for arbitrarily large V·T products and reusable across
//! initial states.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;

use super::{config_digit, pow3, ManyBodyState, P, S};
use crate::ensemble::{rddi_potential, AtomCloud};
use crate::error::{Error, Result};

/// Largest sector dimension the dense eigensolver is allowed to take on.
pub const DEFAULT_MAX_SECTOR_DIM: usize = 6000;

struct Sector {
    configs: Vec<usize>,
    /// Eigendecomposition of the dimensionless phase matrix W = V·T.
    eigenvalues: DVector<f64>,
    eigenvectors: DMatrix<Complex64>,
}

/// Reusable exact propagator for one (cloud, T) pair.
pub struct RddiPropagator {
    atom_count: usize,
    sectors: Vec<Sector>,
}

impl RddiPropagator {
    pub fn atom_count(&self) -> usize {
        self.atom_count
    }

    pub fn new(cloud: &AtomCloud, storage_t: f64, c3: f64) -> Result<Self> {
        Self::with_cap(cloud, storage_t, c3, DEFAULT_MAX_SECTOR_DIM)
    }

    pub fn with_cap(
        cloud: &AtomCloud,
        storage_t: f64,
        c3: f64,
        max_sector_dim: usize,
    ) -> Result<Self> {
        let n = cloud.len();
        if n == 0 {
            return Err(Error::InvalidParams("empty cloud".into()));
        }
        if n > super::DEFAULT_MAX_ATOMS {
            return Err(Error::MemoryCap(format!(
                "{n} atoms exceeds the exact-evolution cap {}",
                super::DEFAULT_MAX_ATOMS
            )));
        }
        if !(storage_t >= 0.0) {
            return Err(Error::InvalidParams("storage time must be >= 0".into()));
        }
        // dimensionless pair phases W_jk = V(|r_j - r_k|)·T
        let mut phases = vec![vec![0.0; n]; n];
        for j in 0..n {
            for k in j + 1..n {
                let r = cloud.distance(j, k);
                if r == 0.0 {
                    return Err(Error::Geometry(format!(
                        "atoms {j} and {k} coincide; self-interaction is excluded"
                    )));
                }
                let w = rddi_potential(r, c3)? * storage_t;
                phases[j][k] = w;
                phases[k][j] = w;
            }
        }

        let dim = pow3(n);
        // bucket configurations by (s-count, p-count)
        let mut buckets: Vec<Vec<usize>> = vec![Vec::new(); (n + 1) * (n + 1)];
        for config in 0..dim {
            let mut ns = 0;
            let mut np = 0;
            let mut c = config;
            for _ in 0..n {
                match (c % 3) as u8 {
                    S => ns += 1,
                    P => np += 1,
                    _ => {}
                }
                c /= 3;
            }
            buckets[ns * (n + 1) + np].push(config);
        }
        let active: Vec<Vec<usize>> = buckets
            .into_iter()
            .enumerate()
            .filter(|(key, configs)| {
                let ns = key / (n + 1);
                let np = key % (n + 1);
                ns >= 1 && np >= 1 && configs.len() >= 2
            })
            .map(|(_, configs)| configs)
            .collect();
        for configs in &active {
            if configs.len() > max_sector_dim {
                return Err(Error::MemoryCap(format!(
                    "sector dimension {} exceeds cap {max_sector_dim}",
                    configs.len()
                )));
            }
        }

        let sectors: Vec<Sector> = active
            .into_par_iter()
            .map(|configs| {
                let d = configs.len();
                let mut local_of = vec![usize::MAX; dim];
                for (i, &c) in configs.iter().enumerate() {
                    local_of[c] = i;
                }
                let mut h = DMatrix::from_element(d, d, Complex64::new(0.0, 0.0));
                for (col, &config) in configs.iter().enumerate() {
                    for j in 0..n {
                        if config_digit(config, j) != S {
                            continue;
                        }
                        for k in 0..n {
                            if k == j || config_digit(config, k) != P {
                                continue;
                            }
                            // σ_ps^j σ_sp^k : s at j → p, p at k → s
                            let target = config + pow3(j) - pow3(k);
                            let row = local_of[target];
                            h[(row, col)] += Complex64::new(phases[j][k], 0.0);
                        }
                    }
                }
                let eig = h.symmetric_eigen();
                Sector {
                    configs,
                    eigenvalues: eig.eigenvalues,
                    eigenvectors: eig.eigenvectors,
                }
            })
            .collect();

        Ok(RddiPropagator {
            atom_count: n,
            sectors,
        })
    }

    /// Apply exp(-i·H·T) to a state. Sectors not coupled by the exchange
    /// (no s or no p excitation) pass through untouched.
    pub fn apply(&self, state: &ManyBodyState) -> Result<ManyBodyState> {
        if state.atom_count != self.atom_count {
            return Err(Error::State(format!(
                "state has {} atoms, propagator was built for {}",
                state.atom_count, self.atom_count
            )));
        }
        let mut amps = state.amplitudes.clone();
        for sector in &self.sectors {
            let d = sector.configs.len();
            let x = DVector::from_fn(d, |i, _| amps[sector.configs[i]]);
            let mut y = sector.eigenvectors.adjoint() * x;
            for (yi, lambda) in y.iter_mut().zip(sector.eigenvalues.iter()) {
                *yi *= Complex64::new(0.0, -lambda).exp();
            }
            let out = &sector.eigenvectors * y;
            for (i, &c) in sector.configs.iter().enumerate() {
                amps[c] = out[i];
            }
        }
        ManyBodyState::from_amplitudes(amps, self.atom_count)
    }
}

/// Exact evolution of `state` under the exchange Hamiltonian for time `t`.
pub fn evolve_rddi(
    state: &ManyBodyState,
    cloud: &AtomCloud,
    t: f64,
    c3: f64,
) -> Result<ManyBodyState> {
    if cloud.len() != state.atom_count() {
        return Err(Error::State(format!(
            "cloud has {} atoms, state has {}",
            cloud.len(),
            state.atom_count()
        )));
    }
    RddiPropagator::new(cloud, t, c3)?.apply(state)
}

/// Closed-form two-atom propagator: the identity plus
/// {cos(VT) - 1} σ_pp^j σ_ss^j' on the diagonal of the exchange-coupled
/// configurations and -i·sin(VT) σ_ps^j σ_sp^j' between them, summed over
/// both orderings. Must agree with the direct matrix exponential of the
/// two-atom Hamiltonian elementwise.
pub fn exact_pair_propagator(v: f64, t: f64) -> DMatrix<Complex64> {
    let phase = v * t;
    let cos_m1 = phase.cos() - 1.0;
    let msin = Complex64::new(0.0, -phase.sin());
    let mut m = DMatrix::from_diagonal_element(9, 9, Complex64::new(1.0, 0.0));
    for (j, jp) in [(0usize, 1usize), (1, 0)] {
        // config with p at j and s at j'
        let pp_ss = P as usize * pow3(j) + S as usize * pow3(jp);
        // config with s at j and p at j'
        let ps_sp = S as usize * pow3(j) + P as usize * pow3(jp);
        m[(pp_ss, pp_ss)] += Complex64::new(cos_m1, 0.0);
        m[(pp_ss, ps_sp)] += msin;
    }
    m
}

/// Brute-force matrix exponential by scaling-and-squaring with a Taylor
/// series. Reference route for validating the closed-form propagator and
/// the sector evolution; not used by either.
pub fn reference_expm(m: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let n = m.nrows();
    assert_eq!(n, m.ncols(), "expm needs a square matrix");
    let inf_norm = (0..n)
        .map(|i| (0..n).map(|j| m[(i, j)].norm()).sum::<f64>())
        .fold(0.0f64, f64::max);
    let squarings = if inf_norm > 0.5 {
        (inf_norm / 0.5).log2().ceil() as u32
    } else {
        0
    };
    let scaled = m.map(|z| z / 2f64.powi(squarings as i32));
    let mut result = DMatrix::from_diagonal_element(n, n, Complex64::new(1.0, 0.0));
    let mut term = result.clone();
    for k in 1..=30 {
        term = (&term * &scaled) / Complex64::new(k as f64, 0.0);
        result += &term;
        if term.iter().map(|z| z.norm()).fold(0.0f64, f64::max) < 1e-20 {
            break;
        }
    }
    for _ in 0..squarings {
        result = &result * &result;
    }
    result
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::{AtomCloud, CloudGeometry};
    use crate::oracle::{
        apply_half_pi, build_dark_state, measure_correlators, run_protocol, G,
        PulseConvention, PulseKind, PulseSpec,
    };
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn protocol_cloud(zs: &[f64]) -> AtomCloud {
        AtomCloud::from_positions(
            zs.iter().map(|&z| [0.0, 0.0, z]).collect(),
            CloudGeometry::Segment {
                length: 100.0,
                cross_section: 1.0,
            },
        )
    }

    /// Hamiltonian of two atoms with pair phase w = V·T, as a dense matrix
    /// scaled so that exp(-i·H) is the propagator.
    fn two_atom_phase_matrix(w: f64) -> DMatrix<Complex64> {
        let mut h = DMatrix::from_element(9, 9, Complex64::new(0.0, 0.0));
        let sp = S as usize * pow3(0) + P as usize * pow3(1);
        let ps = P as usize * pow3(0) + S as usize * pow3(1);
        h[(sp, ps)] = Complex64::new(w, 0.0);
        h[(ps, sp)] = Complex64::new(w, 0.0);
        h
    }

    #[test]
    fn zero_time_is_identity() {
        let cloud = protocol_cloud(&[0.0, 1.0, 2.5]);
        let s = build_dark_state(0.3, 3).unwrap();
        let pulsed = apply_half_pi(
            &s,
            &PulseSpec::new(PulseKind::FirstHalfPi, PulseConvention::RealRotation),
        );
        let out = evolve_rddi(&pulsed, &cloud, 0.0, 1.0).unwrap();
        for (a, b) in out.amplitudes().iter().zip(pulsed.amplitudes()) {
            assert_abs_diff_eq!((a - b).norm(), 0.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn states_without_exchange_partners_are_fixed() {
        // no p excitation anywhere: H annihilates the state
        let cloud = protocol_cloud(&[0.0, 0.7]);
        let dark = build_dark_state(0.5, 2).unwrap();
        let out = evolve_rddi(&dark, &cloud, 3.0, 1.0).unwrap();
        for (a, b) in out.amplitudes().iter().zip(dark.amplitudes()) {
            assert_abs_diff_eq!((a - b).norm(), 0.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn two_atom_exchange_at_pi() {
        // |s,p⟩ with V·T = π: amplitude cos(π) = -1 on |s,p⟩, -i·sin(π) = 0
        // on |p,s⟩
        let cloud = protocol_cloud(&[0.0, 1.0]);
        let sp = S as usize * pow3(0) + P as usize * pow3(1);
        let ps = P as usize * pow3(0) + S as usize * pow3(1);
        let mut amps = vec![Complex64::new(0.0, 0.0); 9];
        amps[sp] = Complex64::new(1.0, 0.0);
        let s = ManyBodyState::from_amplitudes(amps, 2).unwrap();
        let out = evolve_rddi(&s, &cloud, std::f64::consts::PI, 1.0).unwrap();
        assert_abs_diff_eq!(out.amplitude(sp).re, -1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(out.amplitude(sp).im, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(out.amplitude(ps).norm(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn pair_propagator_trivial_and_quarter_phase() {
        let id = exact_pair_propagator(0.0, 5.0);
        assert_abs_diff_eq!(
            (&id - DMatrix::from_diagonal_element(9, 9, Complex64::new(1.0, 0.0)))
                .map(|z| z.norm())
                .max(),
            0.0,
            epsilon = 1e-15
        );
        // V·T = π/2: |s,p⟩ → -i|p,s⟩
        let m = exact_pair_propagator(std::f64::consts::FRAC_PI_2, 1.0);
        let sp = S as usize * pow3(0) + P as usize * pow3(1);
        let ps = P as usize * pow3(0) + S as usize * pow3(1);
        assert_abs_diff_eq!((m[(ps, sp)] - Complex64::new(0.0, -1.0)).norm(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(m[(sp, sp)].norm(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn pair_propagator_matches_brute_force_exponential() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..25 {
            let w: f64 = rng.random_range(0.0..10.0);
            let closed = exact_pair_propagator(w, 1.0);
            let brute = reference_expm(&two_atom_phase_matrix(w).map(|z| z * Complex64::new(0.0, -1.0)));
            let max_diff = (&closed - &brute).map(|z| z.norm()).max();
            assert!(max_diff < 1e-12, "w = {w}: max diff {max_diff:.3e}");
        }
    }

    #[test]
    fn sector_evolution_matches_closed_form_for_two_atoms() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let r: f64 = rng.random_range(0.4..3.0);
            let t: f64 = rng.random_range(0.0..10.0);
            let cloud = protocol_cloud(&[0.0, r]);
            let w = 1.0 / r.powi(3) * t;
            let closed = exact_pair_propagator(w, 1.0);
            // column-by-column comparison against the sector propagator
            let prop = RddiPropagator::new(&cloud, t, 1.0).unwrap();
            for col in 0..9 {
                let mut amps = vec![Complex64::new(0.0, 0.0); 9];
                amps[col] = Complex64::new(1.0, 0.0);
                let out = prop
                    .apply(&ManyBodyState::from_amplitudes(amps, 2).unwrap())
                    .unwrap();
                for row in 0..9 {
                    assert!(
                        (out.amplitude(row) - closed[(row, col)]).norm() < 1e-12,
                        "mismatch at ({row},{col}) for r={r}, t={t}"
                    );
                }
            }
        }
    }

    #[test]
    fn unitarity_and_counts_conserved_through_protocol() {
        let cloud = protocol_cloud(&[0.0, 0.31, 0.9, 1.7]);
        let psi = build_dark_state(0.2, 4).unwrap();
        assert_abs_diff_eq!(psi.norm(), 1.0, epsilon = 1e-12);
        let pulse = PulseSpec::new(PulseKind::FirstHalfPi, PulseConvention::RealRotation);
        let plus = apply_half_pi(&psi, &pulse);
        assert_abs_diff_eq!(plus.norm(), 1.0, epsilon = 1e-12);
        let (s0, p0) = plus.excitation_counts();
        let evolved = evolve_rddi(&plus, &cloud, 2.3, 1.0).unwrap();
        assert_abs_diff_eq!(evolved.norm(), 1.0, epsilon = 1e-12);
        let (s1, p1) = evolved.excitation_counts();
        assert_abs_diff_eq!(s0, s1, epsilon = 1e-12);
        assert_abs_diff_eq!(p0, p1, epsilon = 1e-12);
        let fin = apply_half_pi(
            &evolved,
            &PulseSpec::new(PulseKind::SecondHalfPi, PulseConvention::RealRotation),
        );
        assert_abs_diff_eq!(fin.norm(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn permutation_covariance() {
        // relabeling atoms together with their positions commutes with the
        // evolution
        let zs = [0.0, 0.4, 1.1];
        let perm = [2usize, 0, 1];
        let cloud = protocol_cloud(&zs);
        let permuted_cloud = protocol_cloud(&[zs[perm[0]], zs[perm[1]], zs[perm[2]]]);

        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let amps: Vec<Complex64> = (0..27)
            .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        let nrm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        let amps: Vec<Complex64> = amps.into_iter().map(|a| a / nrm).collect();
        let state = ManyBodyState::from_amplitudes(amps.clone(), 3).unwrap();

        // π sends new atom index i to old index perm[i]
        let permute = |s: &ManyBodyState| {
            let mut out = vec![Complex64::new(0.0, 0.0); 27];
            for config in 0..27 {
                let mut image = 0;
                for (new_atom, &old_atom) in perm.iter().enumerate() {
                    image += config_digit(config, old_atom) as usize * pow3(new_atom);
                }
                out[image] = s.amplitude(config);
            }
            ManyBodyState::from_amplitudes(out, 3).unwrap()
        };

        let evolved_then_permuted = permute(&evolve_rddi(&state, &cloud, 1.7, 1.0).unwrap());
        let permuted_then_evolved =
            evolve_rddi(&permute(&state), &permuted_cloud, 1.7, 1.0).unwrap();
        for (a, b) in evolved_then_permuted
            .amplitudes()
            .iter()
            .zip(permuted_then_evolved.amplitudes())
        {
            assert_abs_diff_eq!((a - b).norm(), 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn restored_population_scales_quadratically_in_time() {
        // 1 - cos(VT) = O(T²): the retrieved s population must vanish
        // quadratically as the storage time shrinks
        let cloud = protocol_cloud(&[0.0, 1.3, 2.9]);
        let pop = |t: f64| {
            let fin = run_protocol(&cloud, t, 1.0, 0.1, PulseConvention::RealRotation).unwrap();
            measure_correlators(&fin).s_population.iter().sum::<f64>()
        };
        let t0 = 1e-3;
        let ratio = pop(t0) / pop(t0 / 2.0);
        assert!((ratio - 4.0).abs() < 0.05, "ratio = {ratio}");
    }

    #[test]
    fn no_light_without_interaction() {
        let cloud = protocol_cloud(&[0.0, 0.5, 1.2, 2.0]);
        let fin = run_protocol(&cloud, 4.0, 0.0, 0.3, PulseConvention::RealRotation).unwrap();
        let c = measure_correlators(&fin);
        let total_s: f64 = c.s_population.iter().sum();
        assert!(total_s <= 1e-14, "s population {total_s:.3e} without RDDI");
    }

    #[test]
    fn pulse_convention_does_not_change_observables() {
        let cloud = protocol_cloud(&[0.0, 0.45, 1.05]);
        let a = measure_correlators(
            &run_protocol(&cloud, 1.9, 1.0, 0.15, PulseConvention::RealRotation).unwrap(),
        );
        let b = measure_correlators(
            &run_protocol(&cloud, 1.9, 1.0, 0.15, PulseConvention::GeneratorPhase).unwrap(),
        );
        for j in 0..3 {
            assert_abs_diff_eq!(a.s_population[j], b.s_population[j], epsilon = 1e-12);
            assert_abs_diff_eq!(a.p_population[j], b.p_population[j], epsilon = 1e-12);
            for k in 0..3 {
                assert_abs_diff_eq!(a.g2_at[(j, k)], b.g2_at[(j, k)], epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn coincident_atoms_rejected() {
        let cloud = protocol_cloud(&[0.0, 0.0]);
        let s = build_dark_state(0.1, 2).unwrap();
        assert!(evolve_rddi(&s, &cloud, 1.0, 1.0).is_err());
    }

    #[test]
    fn ground_digit_constant() {
        assert_eq!(G, 0);
    }
}
