//! Cross-validation of the analytic pair formulas against exact small-N
//! quantum evolution: the pair G²_at must track the exact correlators
//! entrywise in the dilute regime, with a deviation that shrinks as ε².

use rydramsey::ensemble::{AtomCloud, CloudGeometry};
use rydramsey::oracle::{measure_correlators, pair_truncated_state, run_protocol, PulseConvention};
use rydramsey::pair::g2_at_matrix;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Random 1D cloud of `n` atoms on a segment of `length` (protocol units,
/// r_c = 1), reproducible by seed.
fn random_line_cloud(n: usize, length: f64, seed: u64) -> AtomCloud {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let positions: Vec<[f64; 3]> = (0..n)
        .map(|_| [0.0, 0.0, rng.random_range(-0.5 * length..0.5 * length)])
        .collect();
    AtomCloud::from_positions(
        positions,
        CloudGeometry::Segment {
            length,
            cross_section: 1.0,
        },
    )
}

/// Entrywise deviations |exact - pair| for off-diagonal entries, paired
/// with the pair-formula magnitude they are judged against.
fn g2_deviations(n: usize, epsilon: f64, seed: u64) -> Vec<(f64, f64)> {
    // segment sized so the Rydberg gas is dilute: with cross-section r_c²
    // the pair density is A²ε²·n_atoms/length
    let length = 0.25 * n as f64;
    let cloud = random_line_cloud(n, length, seed);
    let (t, c3) = (1.0, 1.0);
    let fin = run_protocol(&cloud, t, c3, epsilon, PulseConvention::RealRotation).unwrap();
    let exact = measure_correlators(&fin).g2_at;
    let pair = g2_at_matrix(&cloud, epsilon, t, c3).unwrap();
    let mut devs = Vec::new();
    for j in 0..n {
        for k in 0..n {
            if j != k {
                devs.push(((exact[(j, k)] - pair[(j, k)]).abs(), pair[(j, k)]));
            }
        }
    }
    devs
}

#[test]
fn pair_g2_matches_exact_in_dilute_regime() {
    // fixed representative clouds; the worst entrywise deviation grows
    // systematically as ~(N-2)ε² from spectator dressing, so the 5% bound
    // has margin here for N ≤ 6 at ε ≤ 0.1
    for (n, seed) in [(3usize, 1u64), (4, 2), (5, 1), (6, 9)] {
        for epsilon in [0.05, 0.1] {
            let devs = g2_deviations(n, epsilon, seed);
            for (dev, reference) in devs {
                assert!(
                    dev <= 0.05 * reference + 1e-10,
                    "N={n} eps={epsilon}: |Δ| = {dev:.3e} vs pair value {reference:.3e}"
                );
            }
        }
    }
}

#[test]
fn pair_g2_deviation_shrinks_as_epsilon_squared() {
    let median = |mut xs: Vec<f64>| -> f64 {
        xs.sort_by(f64::total_cmp);
        xs[xs.len() / 2]
    };
    for (n, seed) in [(4usize, 31u64), (6, 32)] {
        let rel = |epsilon: f64| {
            let devs = g2_deviations(n, epsilon, seed);
            median(
                devs.into_iter()
                    .filter(|&(_, p)| p > 1e-9)
                    .map(|(d, p)| d / p)
                    .collect(),
            )
        };
        let coarse = rel(0.1);
        let fine = rel(0.05);
        assert!(
            coarse / fine >= 3.0,
            "N={n}: median relative deviation ratio {:.2} under ε halving",
            coarse / fine
        );
    }
}

#[test]
fn norm_defect_of_truncated_state_follows_triple_sum_order() {
    // the ε⁴ pieces of 2Re⟨Ψ₊|ΔΨ⟩ + ⟨ΔΨ|ΔΨ⟩ cancel; the surviving defect
    // is the triple-sum term (n_ry·r_c³)²·(n_ry·V) ∝ ε⁶, i.e. the norm
    // defect shrinks 8× per ε-halving
    let n = 6;
    let cloud = random_line_cloud(n, 1.5, 77);
    let defect = |epsilon: f64| -> f64 {
        let psi = pair_truncated_state(&cloud, 1.0, 1.0, epsilon).unwrap();
        (psi.norm().powi(2) - 1.0).abs()
    };
    let d1 = defect(0.2);
    let d2 = defect(0.1);
    let d3 = defect(0.05);
    let slope12 = (d1 / d2).log2();
    let slope23 = (d2 / d3).log2();
    assert!(
        (5.4..=6.6).contains(&slope12) && (5.4..=6.6).contains(&slope23),
        "defect scaling slopes {slope12:.2}, {slope23:.2} per halving \
         (defects {d1:.2e}, {d2:.2e}, {d3:.2e})"
    );
}

#[test]
fn norm_defect_scales_with_pair_density_squared_in_storage_time() {
    // at fixed ε and cloud, every pair bracket is linear in T in the
    // weak-phase regime, so the defect goes as T² ∝ (n_ry·r_c³)² — the
    // stated square of the pair density at fixed Rydberg count
    let cloud = AtomCloud::from_positions(
        vec![
            [0.0, 0.0, 0.0],
            [0.0, 0.0, 0.9],
            [0.0, 0.0, 2.1],
            [0.0, 0.0, 3.2],
            [0.0, 0.0, 4.6],
        ],
        CloudGeometry::Segment {
            length: 10.0,
            cross_section: 1.0,
        },
    );
    let defect = |t: f64| -> f64 {
        let psi = pair_truncated_state(&cloud, t, 1.0, 0.15).unwrap();
        (psi.norm().powi(2) - 1.0).abs()
    };
    let ratio = defect(0.02) / defect(0.01);
    assert!(
        (3.6..=4.4).contains(&ratio),
        "defect T-scaling ratio {ratio:.2}, expected ≈ 4"
    );
}

#[test]
fn optical_observables_agree_between_pulse_conventions() {
    // the measured correlators feeding every optical output must not
    // depend on the π/2 phase convention
    let cloud = random_line_cloud(5, 1.4, 55);
    let a = measure_correlators(
        &run_protocol(&cloud, 1.0, 1.0, 0.1, PulseConvention::RealRotation).unwrap(),
    );
    let b = measure_correlators(
        &run_protocol(&cloud, 1.0, 1.0, 0.1, PulseConvention::GeneratorPhase).unwrap(),
    );
    for j in 0..5 {
        for k in 0..5 {
            assert!(
                (a.g2_at[(j, k)] - b.g2_at[(j, k)]).abs() < 1e-12,
                "g2 differs between conventions at ({j},{k})"
            );
            assert!(
                (a.g1_at[(j, j)] - b.g1_at[(j, j)]).norm() < 1e-12,
                "populations differ between conventions"
            );
        }
    }
}
