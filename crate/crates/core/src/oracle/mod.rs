//! Exact brute-force quantum evolution of small ensembles of three-level
//! atoms (ground g plus Rydberg s and p) through the full
//! storage / π/2 / interaction / π/2 protocol. Ground truth for the pair
//! approximation.
//!
//! Configurations of N atoms are indexed in base 3 with digits
//! g = 0, s = 1, p = 2; atom j is digit j. All protocol steps are unitary,
//! so the state norm is conserved to machine precision.

mod evolve;

pub use evolve::{evolve_rddi, exact_pair_propagator, reference_expm, RddiPropagator};

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::ensemble::AtomCloud;
use crate::error::{Error, Result};

/// Default cap on the atom count; 3^10 amplitudes and the largest
/// interaction sector a dense eigensolver can still chew through.
pub const DEFAULT_MAX_ATOMS: usize = 10;

pub const G: u8 = 0;
pub const S: u8 = 1;
pub const P: u8 = 2;

/// Complex amplitude vector over the N-atom configuration space {g,s,p}^N.
#[derive(Debug, Clone, PartialEq)]
pub struct ManyBodyState {
    amplitudes: Vec<Complex64>,
    atom_count: usize,
}

pub(crate) fn pow3(n: usize) -> usize {
    3usize.pow(n as u32)
}

/// Digit of `config` at position `atom` (base-3).
pub fn config_digit(config: usize, atom: usize) -> u8 {
    ((config / pow3(atom)) % 3) as u8
}

impl ManyBodyState {
    pub fn from_amplitudes(amplitudes: Vec<Complex64>, atom_count: usize) -> Result<Self> {
        if amplitudes.len() != pow3(atom_count) {
            return Err(Error::State(format!(
                "amplitude vector length {} != 3^{atom_count}",
                amplitudes.len()
            )));
        }
        Ok(ManyBodyState {
            amplitudes,
            atom_count,
        })
    }

    pub fn atom_count(&self) -> usize {
        self.atom_count
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn amplitude(&self, config: usize) -> Complex64 {
        self.amplitudes[config]
    }

    /// Amplitude of the configuration given as per-atom digits.
    pub fn amplitude_of(&self, digits: &[u8]) -> Complex64 {
        assert_eq!(digits.len(), self.atom_count);
        let idx = digits
            .iter()
            .enumerate()
            .map(|(j, &d)| d as usize * pow3(j))
            .sum::<usize>();
        self.amplitudes[idx]
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes
            .iter()
            .map(|a| a.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    pub fn inner(&self, other: &ManyBodyState) -> Complex64 {
        assert_eq!(self.atom_count, other.atom_count);
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// Expectation values of the total s-count and p-count operators.
    pub fn excitation_counts(&self) -> (f64, f64) {
        let mut s_count = 0.0;
        let mut p_count = 0.0;
        for (config, amp) in self.amplitudes.iter().enumerate() {
            let w = amp.norm_sqr();
            if w == 0.0 {
                continue;
            }
            let mut c = config;
            for _ in 0..self.atom_count {
                match (c % 3) as u8 {
                    S => s_count += w,
                    P => p_count += w,
                    _ => {}
                }
                c /= 3;
            }
        }
        (s_count, p_count)
    }

    /// (configuration index, re, im) rows for every amplitude with
    /// |amplitude| > threshold, for debugging exports.
    pub fn triplets(&self, threshold: f64) -> Vec<(usize, f64, f64)> {
        self.amplitudes
            .iter()
            .enumerate()
            .filter(|(_, a)| a.norm() > threshold)
            .map(|(i, a)| (i, a.re, a.im))
            .collect()
    }
}

/// Build a product state from one (g, s, p) amplitude triple per atom.
fn product_state(per_atom: &[[Complex64; 3]]) -> ManyBodyState {
    let n = per_atom.len();
    let mut amps = vec![Complex64::new(1.0, 0.0)];
    for coeff in per_atom {
        let mut next = vec![Complex64::new(0.0, 0.0); amps.len() * 3];
        for (i, a) in amps.iter().enumerate() {
            for d in 0..3 {
                next[i + d * amps.len()] = a * coeff[d];
            }
        }
        amps = next;
    }
    ManyBodyState {
        amplitudes: amps,
        atom_count: n,
    }
}

/// Dark product state A^N ∏(1 - ε σ_sg)|g…g⟩: per-atom amplitudes
/// (A, -Aε, 0) on (g, s, p), with A = (1 + ε²)^(-1/2).
pub fn build_dark_state(epsilon: f64, n_atoms: usize) -> Result<ManyBodyState> {
    build_dark_state_capped(epsilon, n_atoms, DEFAULT_MAX_ATOMS)
}

pub fn build_dark_state_capped(
    epsilon: f64,
    n_atoms: usize,
    cap: usize,
) -> Result<ManyBodyState> {
    if n_atoms == 0 {
        return Err(Error::InvalidParams("n_atoms must be >= 1".into()));
    }
    if n_atoms > cap {
        return Err(Error::MemoryCap(format!(
            "{n_atoms} atoms exceeds the exact-evolution cap {cap}"
        )));
    }
    if !(epsilon >= 0.0) {
        return Err(Error::InvalidParams(format!(
            "epsilon must be >= 0, got {epsilon}"
        )));
    }
    let a = 1.0 / (1.0 + epsilon * epsilon).sqrt();
    let coeff = [
        Complex64::new(a, 0.0),
        Complex64::new(-a * epsilon, 0.0),
        Complex64::new(0.0, 0.0),
    ];
    Ok(product_state(&vec![coeff; n_atoms]))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PulseKind {
    FirstHalfPi,
    SecondHalfPi,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PulseConvention {
    /// Real rotation s → (s+p)/√2, p → (p-s)/√2. Applying the same pulse
    /// twice maps s → p and p → -s, realizing |+⟩ → |p⟩ and |-⟩ → |s⟩.
    RealRotation,
    /// exp(-i(π/4)(σ_ps + σ_sp)): s → (s - ip)/√2, p → (p - is)/√2.
    /// Changes intermediate phases only; measured correlators agree with
    /// the real-rotation convention.
    GeneratorPhase,
}

/// A single-atom π/2 unitary on the {s, p} Rydberg subspace (identity on g).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulseSpec {
    pub kind: PulseKind,
    /// Row-major 2×2 on the (s, p) basis.
    matrix: [[Complex64; 2]; 2],
}

impl PulseSpec {
    pub fn new(kind: PulseKind, convention: PulseConvention) -> Self {
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let matrix = match convention {
            PulseConvention::RealRotation => [
                [Complex64::new(r, 0.0), Complex64::new(-r, 0.0)],
                [Complex64::new(r, 0.0), Complex64::new(r, 0.0)],
            ],
            PulseConvention::GeneratorPhase => [
                [Complex64::new(r, 0.0), Complex64::new(0.0, -r)],
                [Complex64::new(0.0, -r), Complex64::new(r, 0.0)],
            ],
        };
        PulseSpec { kind, matrix }
    }

    pub fn matrix(&self) -> &[[Complex64; 2]; 2] {
        &self.matrix
    }

    /// Deviation of U†U from the identity, in max-abs norm.
    pub fn unitarity_defect(&self) -> f64 {
        let m = &self.matrix;
        let mut worst: f64 = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                let mut dot = Complex64::new(0.0, 0.0);
                for k in 0..2 {
                    dot += m[k][i].conj() * m[k][j];
                }
                let expect = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((dot - expect).norm());
            }
        }
        worst
    }
}

/// Apply the pulse unitary to every atom's {s, p} subspace.
pub fn apply_half_pi(state: &ManyBodyState, pulse: &PulseSpec) -> ManyBodyState {
    let mut amps = state.amplitudes.clone();
    let n = state.atom_count;
    let dim = amps.len();
    let u = &pulse.matrix;
    for atom in 0..n {
        let stride = pow3(atom);
        let block = stride * 3;
        let mut base = 0;
        while base < dim {
            for offset in 0..stride {
                let is = base + offset + stride;
                let ip = base + offset + 2 * stride;
                let s = amps[is];
                let p = amps[ip];
                amps[is] = u[0][0] * s + u[0][1] * p;
                amps[ip] = u[1][0] * s + u[1][1] * p;
            }
            base += block;
        }
    }
    ManyBodyState {
        amplitudes: amps,
        atom_count: n,
    }
}

/// Atomic correlators of a many-body state.
#[derive(Debug, Clone)]
pub struct Correlators {
    /// G¹_at(j, j') = ⟨σ_gs^j† σ_gs^j'⟩; Hermitian, diagonal = s populations.
    pub g1_at: DMatrix<Complex64>,
    /// G²_at(j, j') = ⟨σ_gs^j† σ_gs^j'† σ_gs^j' σ_gs^j⟩; real symmetric,
    /// zero diagonal.
    pub g2_at: DMatrix<f64>,
    pub s_population: Vec<f64>,
    pub p_population: Vec<f64>,
}

/// Measure first- and second-order atomic correlators and populations.
pub fn measure_correlators(state: &ManyBodyState) -> Correlators {
    let n = state.atom_count;
    let dim = state.amplitudes.len();
    let mut g1 = DMatrix::from_element(n, n, Complex64::new(0.0, 0.0));
    let mut g2 = DMatrix::from_element(n, n, 0.0);
    let mut s_pop = vec![0.0; n];
    let mut p_pop = vec![0.0; n];

    let mut digits = vec![0u8; n];
    let mut s_atoms: Vec<usize> = Vec::with_capacity(n);
    for config in 0..dim {
        let amp = state.amplitudes[config];
        let w = amp.norm_sqr();
        let mut c = config;
        s_atoms.clear();
        for j in 0..n {
            let d = (c % 3) as u8;
            digits[j] = d;
            c /= 3;
            match d {
                S => {
                    if w > 0.0 {
                        s_pop[j] += w;
                    }
                    s_atoms.push(j);
                }
                P => {
                    if w > 0.0 {
                        p_pop[j] += w;
                    }
                }
                _ => {}
            }
        }
        if w > 0.0 {
            // both-in-s projector
            for (a, &j) in s_atoms.iter().enumerate() {
                for &k in &s_atoms[a + 1..] {
                    g2[(j, k)] += w;
                    g2[(k, j)] += w;
                }
            }
        }
        if amp != Complex64::new(0.0, 0.0) {
            // off-diagonal coherence: configs with g at j and s at k pair
            // with the configuration where the excitation moved k → j
            for j in 0..n {
                if digits[j] != G {
                    continue;
                }
                for &k in &s_atoms {
                    let partner = config + pow3(j) - pow3(k);
                    g1[(j, k)] += state.amplitudes[partner].conj() * amp;
                }
            }
        }
    }
    for j in 0..n {
        g1[(j, j)] = Complex64::new(s_pop[j], 0.0);
    }
    Correlators {
        g1_at: g1,
        g2_at: g2,
        s_population: s_pop,
        p_population: p_pop,
    }
}

/// Run the full protocol: dark state → first π/2 → RDDI evolution over the
/// storage time → second π/2. Returns the final state whose s-sector maps
/// onto the restored light.
pub fn run_protocol(
    cloud: &AtomCloud,
    storage_t: f64,
    c3: f64,
    epsilon: f64,
    convention: PulseConvention,
) -> Result<ManyBodyState> {
    let propagator = RddiPropagator::new(cloud, storage_t, c3)?;
    run_protocol_with(&propagator, epsilon, convention)
}

/// Same protocol against a prebuilt propagator; the expensive sector
/// diagonalization does not depend on ε, so sweeps over the probe ratio
/// reuse it.
pub fn run_protocol_with(
    propagator: &RddiPropagator,
    epsilon: f64,
    convention: PulseConvention,
) -> Result<ManyBodyState> {
    let psi = build_dark_state(epsilon, propagator.atom_count())?;
    let psi = apply_half_pi(&psi, &PulseSpec::new(PulseKind::FirstHalfPi, convention));
    let psi = propagator.apply(&psi)?;
    Ok(apply_half_pi(
        &psi,
        &PulseSpec::new(PulseKind::SecondHalfPi, convention),
    ))
}

/// Pair-truncated final-storage state |Ψ_+⟩ + ΔΨ in the exact
/// representation: the identity term plus, for every ordered pair (j, j'),
/// (ε²/2)[e^(-iV T) - 1] σ_sg^j σ_pg^j' acting on the spectator product
/// Π(1 - ε σ_+g)|g⟩. Used to cross-check the norm-defect estimates.
pub fn pair_truncated_state(
    cloud: &AtomCloud,
    storage_t: f64,
    c3: f64,
    epsilon: f64,
) -> Result<ManyBodyState> {
    let n = cloud.len();
    if n > DEFAULT_MAX_ATOMS {
        return Err(Error::MemoryCap(format!(
            "{n} atoms exceeds the exact-evolution cap {DEFAULT_MAX_ATOMS}"
        )));
    }
    let a = 1.0 / (1.0 + epsilon * epsilon).sqrt();
    let r = std::f64::consts::FRAC_1_SQRT_2;
    // |Ψ_+⟩: per-atom (1, -ε/√2, -ε/√2) scaled by A
    let plus = [
        Complex64::new(a, 0.0),
        Complex64::new(-a * epsilon * r, 0.0),
        Complex64::new(-a * epsilon * r, 0.0),
    ];
    let mut total = product_state(&vec![plus; n]);
    let one_s = [
        Complex64::new(0.0, 0.0),
        Complex64::new(a, 0.0),
        Complex64::new(0.0, 0.0),
    ];
    let one_p = [
        Complex64::new(0.0, 0.0),
        Complex64::new(0.0, 0.0),
        Complex64::new(a, 0.0),
    ];
    for j in 0..n {
        for jp in 0..n {
            if j == jp {
                continue;
            }
            let r_jj = cloud.distance(j, jp);
            let v = crate::ensemble::rddi_potential(r_jj, c3)?;
            let bracket =
                (Complex64::new(0.0, -v * storage_t)).exp() - Complex64::new(1.0, 0.0);
            let coeff = bracket * (0.5 * epsilon * epsilon);
            let mut per_atom = vec![plus; n];
            per_atom[j] = one_s;
            per_atom[jp] = one_p;
            let piece = product_state(&per_atom);
            for (t, s) in total.amplitudes.iter_mut().zip(&piece.amplitudes) {
                *t += coeff * s;
            }
        }
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    #[test]
    fn dark_state_trivial_cases() {
        let s = build_dark_state(0.0, 3).unwrap();
        assert_abs_diff_eq!(s.amplitude_of(&[G, G, G]).re, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(s.norm(), 1.0, epsilon = 1e-14);

        let s = build_dark_state(1.0, 1).unwrap();
        let r = std::f64::consts::FRAC_1_SQRT_2;
        assert_abs_diff_eq!(s.amplitude_of(&[G]).re, r, epsilon = 1e-15);
        assert_abs_diff_eq!(s.amplitude_of(&[S]).re, -r, epsilon = 1e-15);
        assert_abs_diff_eq!(s.amplitude_of(&[P]).norm(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn dark_state_product_expansion() {
        // |ssg⟩ amplitude = (-Aε)²·A = ε²(1+ε²)^(-3/2)
        let eps = 0.1;
        let s = build_dark_state(eps, 3).unwrap();
        let expected = eps * eps * (1.0 + eps * eps).powf(-1.5);
        assert_relative_eq!(
            s.amplitude_of(&[S, S, G]).re,
            expected,
            max_relative = 1e-14
        );
        assert_abs_diff_eq!(s.norm(), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn dark_state_guards() {
        assert!(build_dark_state(0.1, 0).is_err());
        assert!(build_dark_state(-0.1, 2).is_err());
        assert!(build_dark_state_capped(0.1, 5, 4).is_err());
    }

    #[test]
    fn pulses_are_unitary() {
        for convention in [PulseConvention::RealRotation, PulseConvention::GeneratorPhase] {
            let p = PulseSpec::new(PulseKind::FirstHalfPi, convention);
            assert!(p.unitarity_defect() < 1e-14);
        }
    }

    #[test]
    fn pulse_leaves_ground_state_alone() {
        let s = build_dark_state(0.0, 2).unwrap();
        let pulse = PulseSpec::new(PulseKind::FirstHalfPi, PulseConvention::RealRotation);
        let out = apply_half_pi(&s, &pulse);
        assert_eq!(out, s);
    }

    #[test]
    fn pulse_splits_s_into_superposition() {
        let mut amps = vec![Complex64::new(0.0, 0.0); 3];
        amps[S as usize] = Complex64::new(1.0, 0.0);
        let s = ManyBodyState::from_amplitudes(amps, 1).unwrap();
        let pulse = PulseSpec::new(PulseKind::FirstHalfPi, PulseConvention::RealRotation);
        let once = apply_half_pi(&s, &pulse);
        let r = std::f64::consts::FRAC_1_SQRT_2;
        assert_abs_diff_eq!(once.amplitude_of(&[S]).re, r, epsilon = 1e-15);
        assert_abs_diff_eq!(once.amplitude_of(&[P]).re, r, epsilon = 1e-15);
        // same pulse twice: s → p up to global phase (exactly p here)
        let twice = apply_half_pi(&once, &pulse);
        assert_abs_diff_eq!(twice.amplitude_of(&[P]).re, 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(twice.amplitude_of(&[S]).norm(), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn measure_trivial_states() {
        let g = build_dark_state(0.0, 2).unwrap();
        let c = measure_correlators(&g);
        assert_eq!(c.g1_at.map(|z| z.norm()).sum(), 0.0);
        assert_eq!(c.g2_at.sum(), 0.0);

        let mut amps = vec![Complex64::new(0.0, 0.0); 3];
        amps[S as usize] = Complex64::new(1.0, 0.0);
        let s = ManyBodyState::from_amplitudes(amps, 1).unwrap();
        let c = measure_correlators(&s);
        assert_abs_diff_eq!(c.g1_at[(0, 0)].re, 1.0, epsilon = 1e-15);
        assert_eq!(c.g2_at[(0, 0)], 0.0);
        assert_abs_diff_eq!(c.s_population[0], 1.0, epsilon = 1e-15);
    }

    #[test]
    fn g1_is_hermitian_and_g2_symmetric_zero_diagonal() {
        // a protocol-like entangled state
        let cloud = crate::ensemble::AtomCloud::from_positions(
            vec![
                [0.0, 0.0, 0.0],
                [0.0, 0.0, 0.9e-4],
                [0.0, 0.0, 2.1e-4],
            ],
            crate::ensemble::CloudGeometry::Segment {
                length: 1e-3,
                cross_section: 1e-9,
            },
        );
        let p = crate::ensemble::rb87_sec5();
        let fin =
            run_protocol(&cloud, p.storage_t, p.c3, 0.2, PulseConvention::RealRotation)
                .unwrap();
        let c = measure_correlators(&fin);
        for j in 0..3 {
            assert_eq!(c.g2_at[(j, j)], 0.0);
            for k in 0..3 {
                assert_abs_diff_eq!(
                    (c.g1_at[(j, k)] - c.g1_at[(k, j)].conj()).norm(),
                    0.0,
                    epsilon = 1e-13
                );
                assert_abs_diff_eq!(c.g2_at[(j, k)], c.g2_at[(k, j)], epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn triplets_export_skips_zeros() {
        let s = build_dark_state(0.5, 2).unwrap();
        let t = s.triplets(0.0);
        assert_eq!(t.len(), 4); // only g/s digits populated
        assert!(t.iter().all(|&(i, _, _)| i < 9));
    }
}
