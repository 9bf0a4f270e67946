//! Analytic pair treatment of the atomic correlations created during
//! storage.
//!
//! For a dilute Rydberg gas (n_Ry·r_c³ ≪ 1) the storage evolution couples
//! mostly isolated pairs of atoms, and every correlator reduces to sums of
//! the elementary pair amplitude e^(-iV(r)T) - 1 over third atoms or pairs.
//! The exact small-N evolution in [`crate::oracle`] is the ground truth
//! these formulas are tested against.

use num_complex::Complex64;

use crate::ensemble::{rddi_potential, AtomCloud};
use crate::error::{Error, Result};

/// Dark-state normalization A = (1 + ε²)^(-1/2).
pub fn norm_a(epsilon: f64) -> f64 {
    1.0 / (1.0 + epsilon * epsilon).sqrt()
}

/// 1 - cos(x) as 2·sin²(x/2), stable against cancellation at small x.
pub fn one_minus_cos(x: f64) -> f64 {
    let s = (0.5 * x).sin();
    2.0 * s * s
}

/// e^(-ix) - 1 built from half-angle forms; exact to machine precision even
/// for phases far below 1.
pub fn phase_bracket(x: f64) -> Complex64 {
    Complex64::new(-one_minus_cos(x), -x.sin())
}

/// Elementary pair amplitude e^(-iV(r)T) - 1 accumulated by an interacting
/// pair at distance r during the storage time. Magnitude at most 2.
pub fn pair_amplitude(r: f64, t: f64, c3: f64) -> Result<Complex64> {
    let phase = rddi_potential(r, c3)? * t;
    Ok(phase_bracket(phase))
}

/// A pair-sum result together with the number of contributing terms;
/// `term_count == 0` flags a degenerate cloud (too few atoms), where the
/// value is zero by construction rather than physically.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairSum {
    pub value: Complex64,
    pub term_count: usize,
}

/// First-order atomic correlation between sites j and j′:
/// A⁴(ε⁴/4) Σ_{j″≠j,j′} [e^(iV(|r_j-r_j″|)T) - 1][e^(-iV(|r_j′-r_j″|)T) - 1].
///
/// The diagonal case j = j′ is allowed and reduces to the s-state
/// population A⁴(ε⁴/2) Σ (1 - cos VT).
pub fn g1_at(
    cloud: &AtomCloud,
    j: usize,
    jp: usize,
    epsilon: f64,
    t: f64,
    c3: f64,
) -> Result<PairSum> {
    let n = cloud.len();
    if j >= n || jp >= n {
        return Err(Error::InvalidParams(format!(
            "atom index out of range: {j}, {jp} with {n} atoms"
        )));
    }
    let a = norm_a(epsilon);
    let prefactor = a.powi(4) * epsilon.powi(4) / 4.0;
    let mut value = Complex64::new(0.0, 0.0);
    let mut term_count = 0;
    for third in 0..n {
        if third == j || third == jp {
            continue;
        }
        let left = pair_amplitude(cloud.distance(j, third), t, c3)?.conj();
        let right = pair_amplitude(cloud.distance(jp, third), t, c3)?;
        value += left * right;
        term_count += 1;
    }
    Ok(PairSum {
        value: value * prefactor,
        term_count,
    })
}

/// Second-order atomic correlation
/// (1 - δ_jj′) A⁴(ε⁴/2)(1 - cos[V(|r_j-r_j′|)T]).
pub fn g2_at(
    cloud: &AtomCloud,
    j: usize,
    jp: usize,
    epsilon: f64,
    t: f64,
    c3: f64,
) -> Result<f64> {
    let n = cloud.len();
    if j >= n || jp >= n {
        return Err(Error::InvalidParams(format!(
            "atom index out of range: {j}, {jp} with {n} atoms"
        )));
    }
    if j == jp {
        return Ok(0.0);
    }
    let a = norm_a(epsilon);
    let phase = rddi_potential(cloud.distance(j, jp), c3)? * t;
    Ok(a.powi(4) * epsilon.powi(4) / 2.0 * one_minus_cos(phase))
}

/// Full pair-approximation G²_at matrix for a cloud.
pub fn g2_at_matrix(
    cloud: &AtomCloud,
    epsilon: f64,
    t: f64,
    c3: f64,
) -> Result<nalgebra::DMatrix<f64>> {
    let n = cloud.len();
    let mut m = nalgebra::DMatrix::from_element(n, n, 0.0);
    for j in 0..n {
        for jp in j + 1..n {
            let v = g2_at(cloud, j, jp, epsilon, t, c3)?;
            m[(j, jp)] = v;
            m[(jp, j)] = v;
        }
    }
    Ok(m)
}
