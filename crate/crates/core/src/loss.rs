//! Polariton-loss modification of the two-photon amplitude.
//!
//! The lossless pair coefficient I(z) = i(e^(-iV(z)T) - 1) picks up a
//! Gaussian smearing when the restored polaritons decay nonadiabatically
//! during propagation: I'(z) = i(√α/2L√π)∫dz̃ [e^(-iV(|z̃|)T) - 1]
//! ·exp(-α(z̃-z)²/4L²). Everything here runs in protocol units (z in r_c,
//! loss length ℓ = L/(√α·r_c)); the 1D potential V(z) = C3/|z|³ mirrors the
//! reduction of pair positions to the propagation axis.

use num_complex::Complex64;
use rayon::prelude::*;
use serde_json::Value;

use crate::ensemble::PhysicalParams;
use crate::error::{Error, Result};
use crate::quad::{self, QuadOptions};
use crate::series::{CorrelationSeries, GridKind, Normalization};

/// Pair bracket b(x) = e^(-i/x³) - 1 at x = |z|/r_c.
fn bracket(x: f64) -> Complex64 {
    crate::pair::phase_bracket(x.powi(-3))
}

/// Lossless coefficient I(z) = i(e^(-iV(z)T) - 1) at z in r_c units;
/// |I(z)|² = 2(1 - cos[(r_c/z)³]).
pub fn lossless_point(z_rc: f64) -> Result<Complex64> {
    if !(z_rc > 0.0) {
        return Err(Error::InvalidParams(format!(
            "lossless profile needs z > 0, got {z_rc}"
        )));
    }
    Ok(Complex64::new(0.0, 1.0) * bracket(z_rc))
}

/// Lossless profile on a grid of z in meters.
pub fn lossless_profile(z_grid: &[f64], t: f64, c3: f64) -> Result<CorrelationSeries> {
    let r_c = (c3 * t).cbrt();
    let values = z_grid
        .iter()
        .map(|&z| lossless_point(z / r_c))
        .collect::<Result<Vec<_>>>()?;
    CorrelationSeries::new(
        z_grid.to_vec(),
        values,
        GridKind::ZMeters,
        Normalization::InputIntensity,
    )
}

const KERNEL_WINDOW_SIGMAS: f64 = 12.0;
const SPLIT_CAP: usize = 400_000;
const CONVERGE_ABS: f64 = 2e-5;

fn piece_opts() -> QuadOptions {
    QuadOptions {
        rel_tol: 1e-8,
        abs_tol: 1e-12,
        max_segments: 50_000,
    }
}

/// Phase-π boundaries of |z|⁻³ on an interval not containing 0.
fn mirror_phase_splits(a: f64, b: f64) -> Result<Vec<f64>> {
    if a >= 0.0 {
        quad::rddi_phase_splits(a.max(1e-12), b, 1.0, SPLIT_CAP)
    } else {
        debug_assert!(b <= 0.0);
        let mut pts: Vec<f64> = quad::rddi_phase_splits((-b).max(1e-12), -a, 1.0, SPLIT_CAP)?
            .into_iter()
            .map(|z| -z)
            .collect();
        pts.reverse();
        Ok(pts)
    }
}

/// Unit-mass Gaussian convolution of an arbitrary bracket function:
/// ∫ K(z̃ - z) f(z̃) dz̃ with K = (1/2ℓ√π)·exp(-(z̃-z)²/4ℓ²).
/// Exposed so the kernel normalization can be checked against constant
/// test brackets.
pub fn gaussian_convolution<F: Fn(f64) -> Complex64>(
    f: F,
    z: f64,
    ell: f64,
) -> Result<Complex64> {
    if !(ell > 0.0) {
        return Err(Error::InvalidParams("loss length must be positive".into()));
    }
    let kernel = |u: f64| (-(u - z) * (u - z) / (4.0 * ell * ell)).exp()
        / (2.0 * ell * std::f64::consts::PI.sqrt());
    let w = KERNEL_WINDOW_SIGMAS * ell;
    let q = quad::adaptive_gk(
        |u| kernel(u) * f(u),
        z - w,
        z + w,
        &piece_opts(),
    )?;
    Ok(q.value)
}

/// One evaluation of the convolution with the oscillation core |z̃| < z_eps
/// replaced by the averaged bracket -1.
fn lossy_point_with_core(z: f64, ell: f64, z_eps: f64) -> Result<Complex64> {
    let w = KERNEL_WINDOW_SIGMAS * ell;
    let (lo, hi) = (z - w, z + w);
    let kernel = |u: f64| (-(u - z) * (u - z) / (4.0 * ell * ell)).exp()
        / (2.0 * ell * std::f64::consts::PI.sqrt());
    let opts = piece_opts();
    let mut acc = Complex64::new(0.0, 0.0);
    // averaged core: bracket → -1 inside |z̃| ≤ z_eps
    let core_lo = lo.max(-z_eps);
    let core_hi = hi.min(z_eps);
    if core_hi > core_lo {
        let q = quad::adaptive_gk(|u| Complex64::new(-kernel(u), 0.0), core_lo, core_hi, &opts)?;
        acc += q.value;
    }
    // oscillatory remainder, pre-split at phase-π boundaries
    let mut pieces: Vec<(f64, f64)> = Vec::new();
    if lo < -z_eps {
        pieces.push((lo, hi.min(-z_eps)));
    }
    if hi > z_eps {
        pieces.push((lo.max(z_eps), hi));
    }
    for (a, b) in pieces {
        if b <= a {
            continue;
        }
        let splits = mirror_phase_splits(a, b)?;
        let q = quad::integrate_cells(
            |u| kernel(u) * bracket(u.abs()),
            a,
            b,
            splits,
            &opts,
        )?;
        acc += q.value;
    }
    Ok(Complex64::new(0.0, 1.0) * acc)
}

/// Lossy coefficient I'(z) at z in r_c units, for loss length ℓ = L/(√α r_c)
/// in r_c units. Even in z (the bracket depends on |z̃| and the kernel is
/// symmetric), finite at z = 0. The oscillation-core radius shrinks until
/// the result is stable to 2e-5.
pub fn lossy_point(z_rc: f64, ell_rc: f64) -> Result<Complex64> {
    if !z_rc.is_finite() {
        return Err(Error::InvalidParams("lossy profile needs finite z".into()));
    }
    let z_rc = z_rc.abs();
    if !(ell_rc > 0.0) {
        return Err(Error::InvalidParams("loss length must be positive".into()));
    }
    let w = KERNEL_WINDOW_SIGMAS * ell_rc;
    if z_rc - w > 0.11 {
        // window never reaches the oscillation region; no core replacement
        return lossy_point_with_core(z_rc, ell_rc, 0.0);
    }
    let mut z_eps = 0.25_f64;
    let mut prev = lossy_point_with_core(z_rc, ell_rc, z_eps)?;
    loop {
        z_eps *= 0.7;
        let next = lossy_point_with_core(z_rc, ell_rc, z_eps)?;
        if (next - prev).norm() < CONVERGE_ABS {
            return Ok(next);
        }
        if z_eps < 0.012 {
            return Err(Error::Quadrature(format!(
                "lossy profile did not stabilize at z = {z_rc} r_c (ell = {ell_rc})"
            )));
        }
        prev = next;
    }
}

/// Lossless and lossy coefficient profiles on a shared r_c-unit grid.
#[derive(Debug, Clone)]
pub struct LossProfile {
    pub loss_length_rc: f64,
    pub grid_rc: Vec<f64>,
    pub lossless: Vec<Complex64>,
    pub lossy: Vec<Complex64>,
}

impl LossProfile {
    pub fn compute(grid_rc: Vec<f64>, loss_length_rc: f64) -> Result<Self> {
        if grid_rc.is_empty() || grid_rc.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Grid("loss profile grid must be increasing".into()));
        }
        let lossless = grid_rc
            .iter()
            .map(|&z| lossless_point(z))
            .collect::<Result<Vec<_>>>()?;
        let lossy = grid_rc
            .par_iter()
            .map(|&z| lossy_point(z, loss_length_rc))
            .collect::<Result<Vec<_>>>()?;
        Ok(LossProfile {
            loss_length_rc,
            grid_rc,
            lossless,
            lossy,
        })
    }

    /// Input-intensity-normalized pair correlations |I(z)|² and |I'(z)|².
    pub fn g2_curves(&self) -> (Vec<f64>, Vec<f64>) {
        (
            self.lossless.iter().map(|v| v.norm_sqr()).collect(),
            self.lossy.iter().map(|v| v.norm_sqr()).collect(),
        )
    }

    /// Two-curve CSV (z/r_c, lossless |I|², lossy |I'|²) with a JSON header.
    pub fn write_csv<W: std::io::Write>(
        &self,
        mut w: W,
        extra_meta: &serde_json::Map<String, Value>,
    ) -> Result<()> {
        let mut meta = serde_json::Map::new();
        meta.insert("grid_kind".into(), Value::from("z_over_rc"));
        meta.insert("normalization".into(), Value::from("input_intensity"));
        meta.insert("loss_length_rc".into(), Value::from(self.loss_length_rc));
        meta.insert("points".into(), Value::from(self.grid_rc.len()));
        for (k, v) in extra_meta {
            meta.insert(k.clone(), v.clone());
        }
        writeln!(w, "# {}", Value::Object(meta))?;
        writeln!(w, "z_over_rc,lossless,lossy")?;
        let (g2_0, g2_l) = self.g2_curves();
        for i in 0..self.grid_rc.len() {
            writeln!(w, "{},{},{}", self.grid_rc[i], g2_0[i], g2_l[i])?;
        }
        Ok(())
    }
}

/// Lossy profile on a grid of z in meters (SI boundary).
pub fn lossy_profile(
    z_grid: &[f64],
    t: f64,
    c3: f64,
    length_l: f64,
    alpha: f64,
) -> Result<CorrelationSeries> {
    if !(length_l > 0.0 && alpha > 0.0) {
        return Err(Error::InvalidParams("need L > 0 and alpha > 0".into()));
    }
    let r_c = (c3 * t).cbrt();
    let ell = length_l / alpha.sqrt() / r_c;
    let values = z_grid
        .par_iter()
        .map(|&z| lossy_point(z / r_c, ell))
        .collect::<Result<Vec<_>>>()?;
    let mut s = CorrelationSeries::new(
        z_grid.to_vec(),
        values,
        GridKind::ZMeters,
        Normalization::InputIntensity,
    )?;
    s.metadata
        .insert("loss_length_rc".into(), Value::from(ell));
    Ok(s)
}

/// The reference grid for the two-curve figure: `n` log-spaced points on
/// [0.05, 3] r_c with the outermost |I|² maximum z = π^(-1/3) pinned to a
/// grid point.
pub fn fig3_grid(n: usize) -> Vec<f64> {
    let (a, b) = (0.05f64, 3.0f64);
    let mut grid: Vec<f64> = (0..n)
        .map(|i| a * (b / a).powf(i as f64 / (n - 1) as f64))
        .collect();
    let z_star = std::f64::consts::PI.powf(-1.0 / 3.0);
    // replace the nearest grid point by the exact extremum location
    let nearest = grid
        .iter()
        .enumerate()
        .min_by(|x, y| (x.1 - z_star).abs().total_cmp(&(y.1 - z_star).abs()))
        .map(|(i, _)| i)
        .unwrap();
    grid[nearest] = z_star;
    grid
}

/// Amplitude attenuation and decay of a dark-state polariton at wave
/// number k (1/m).
#[derive(Debug, Clone, Copy)]
pub struct PolaritonAttenuation {
    /// e^(-L²k²/2α) acting on the polariton amplitude.
    pub amplitude_factor: f64,
    /// Nonadiabatic decay rate γ_pol = 2Γ(v_g0·k)²/Ω_c² (1/s).
    pub decay_rate: f64,
    /// Propagation time L/(2 v_g0) (s).
    pub propagation_time: f64,
}

pub fn polariton_attenuation(k: f64, p: &PhysicalParams) -> Result<PolaritonAttenuation> {
    let d = crate::ensemble::derive_params(p)?;
    let exponent = p.length_l * p.length_l * k * k / (2.0 * p.alpha);
    Ok(PolaritonAttenuation {
        amplitude_factor: (-exponent).exp(),
        decay_rate: 2.0 * p.gamma_e * (d.v_g0 * k) * (d.v_g0 * k) / (p.omega_c * p.omega_c),
        propagation_time: p.length_l / (2.0 * d.v_g0),
    })
}

/// Cutoff (in r_c) of the z integral behind Ĩ(k); plays the role of the
/// finite cloud size that keeps ∫sin(V T)dz bounded.
pub const DEFAULT_Z_CUT_RC: f64 = 60.0;

/// Ĩ(k) = i∫dz [e^(-iV(|z|)T) - 1]e^(ikz) on a grid of k in 1/m, with the
/// z integral cut off at `z_cut_rc`·r_c. Even in k by construction.
pub fn i_tilde(k_grid: &[f64], t: f64, c3: f64, z_cut_rc: f64) -> Result<CorrelationSeries> {
    let r_c = (c3 * t).cbrt();
    let values: Vec<Complex64> = k_grid
        .par_iter()
        .map(|&k| i_tilde_point(k * r_c, z_cut_rc).map(|v| v * r_c))
        .collect::<Result<Vec<_>>>()?;
    let mut s = CorrelationSeries::new(
        k_grid.to_vec(),
        values,
        GridKind::KPerMeter,
        Normalization::InputIntensity,
    )?;
    s.metadata.insert("z_cut_rc".into(), Value::from(z_cut_rc));
    Ok(s)
}

/// Dimensionless Ĩ at κ = k·r_c: 2i∫₀^X b(x)cos(κx)dx with the averaged
/// oscillation core below x = 0.05.
pub fn i_tilde_point(kappa: f64, z_cut: f64) -> Result<Complex64> {
    let x_eps = 0.05;
    let kappa = kappa.abs();
    // core: bracket → -1
    let core = if kappa == 0.0 {
        Complex64::new(-x_eps, 0.0)
    } else {
        Complex64::new(-(kappa * x_eps).sin() / kappa, 0.0)
    };
    let phase = quad::rddi_phase_splits(x_eps, z_cut, 1.0, SPLIT_CAP)?;
    let splits = if kappa > 0.0 {
        quad::merge_splits(
            phase,
            quad::periodic_splits(x_eps, z_cut, std::f64::consts::PI / kappa, SPLIT_CAP)?,
        )
    } else {
        phase
    };
    let outer = quad::integrate_cells(
        |x| bracket(x) * (kappa * x).cos(),
        x_eps,
        z_cut,
        splits,
        &piece_opts(),
    )?;
    Ok(2.0 * Complex64::new(0.0, 1.0) * (core + outer.value))
}

/// Fourier-route lossy coefficient: Gaussian-filtered inverse transform
/// I'(z) = (1/π)∫₀^∞ Ĩ(κ)cos(κz)e^(-ℓ²κ²)dκ, Simpson on a uniform κ grid.
/// All lengths in r_c units. Cross-validates the real-space convolution.
pub fn lossy_profile_fourier(
    z_grid_rc: &[f64],
    ell_rc: f64,
    z_cut: f64,
) -> Result<Vec<Complex64>> {
    if !(ell_rc > 0.0) {
        return Err(Error::InvalidParams("loss length must be positive".into()));
    }
    let kappa_max = 6.5 / ell_rc;
    let z_max = z_grid_rc.iter().copied().fold(0.0f64, f64::max);
    // resolve cos(κz) at the largest z and the Gaussian at small κ
    let dk_osc = std::f64::consts::PI / (16.0 * z_max.max(1.0));
    let n_k = ((kappa_max / dk_osc).ceil() as usize).max(4096) | 1;
    let h = kappa_max / (n_k - 1) as f64;
    let i_tilde_vals: Vec<Complex64> = (0..n_k)
        .into_par_iter()
        .map(|i| i_tilde_point(i as f64 * h, z_cut))
        .collect::<Result<Vec<_>>>()?;
    let filtered: Vec<Complex64> = i_tilde_vals
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let kappa = i as f64 * h;
            v * (-ell_rc * ell_rc * kappa * kappa).exp()
        })
        .collect();
    Ok(z_grid_rc
        .par_iter()
        .map(|&z| {
            // composite Simpson over the uniform κ grid
            let mut acc = Complex64::new(0.0, 0.0);
            for i in 0..n_k {
                let kappa = i as f64 * h;
                let w = if i == 0 || i == n_k - 1 {
                    1.0
                } else if i % 2 == 1 {
                    4.0
                } else {
                    2.0
                };
                acc += filtered[i] * (kappa * z).cos() * w;
            }
            acc * h / 3.0 / std::f64::consts::PI
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::rb87_sec5;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use std::f64::consts::PI;

    #[test]
    fn lossless_extrema_and_zeros() {
        // outermost maximum: phase π at z = π^(-1/3), |I|² = 4
        let z_star = PI.powf(-1.0 / 3.0);
        let v = lossless_point(z_star).unwrap();
        assert_abs_diff_eq!(v.norm_sqr(), 4.0, epsilon = 1e-12);
        // zero at phase 2π
        let z0 = (2.0 * PI).powf(-1.0 / 3.0);
        assert_abs_diff_eq!(lossless_point(z0).unwrap().norm(), 0.0, epsilon = 1e-12);
        // far tail: |I| → (r_c/z)³
        let z = 6.0f64;
        assert_relative_eq!(
            lossless_point(z).unwrap().norm(),
            z.powi(-3),
            max_relative = 1e-4
        );
        assert!(lossless_point(0.0).is_err());
    }

    #[test]
    fn lossless_profile_si_grid() {
        let p = rb87_sec5();
        let r_c = (p.c3 * p.storage_t).cbrt();
        let grid: Vec<f64> = [0.5, 1.0, 2.0].iter().map(|x| x * r_c).collect();
        let s = lossless_profile(&grid, p.storage_t, p.c3).unwrap();
        for (i, &z_rc) in [0.5, 1.0, 2.0].iter().enumerate() {
            assert_relative_eq!(
                s.values[i].norm_sqr(),
                2.0 * (1.0 - (z_rc as f64).powi(-3).cos()),
                max_relative = 1e-12
            );
        }
    }

    #[test]
    fn kernel_has_unit_mass_and_constant_bracket_maps_to_minus_i() {
        for ell in [0.03, 0.5, 2.0] {
            let one = gaussian_convolution(|_| Complex64::new(1.0, 0.0), 0.7, ell).unwrap();
            assert_relative_eq!(one.re, 1.0, max_relative = 1e-8);
            // I' of the constant bracket -1 is i·(-1)·1 = -i
            let conv = gaussian_convolution(|_| Complex64::new(-1.0, 0.0), 0.7, ell).unwrap();
            let i_prime = Complex64::new(0.0, 1.0) * conv;
            assert_abs_diff_eq!((i_prime - Complex64::new(0.0, -1.0)).norm(), 0.0, epsilon = 1e-8);
        }
    }

    #[test]
    fn lossy_reduces_to_lossless_in_delta_kernel_limit() {
        let ell = 1e-6;
        for z in [0.2, 0.35, 0.6, 1.0, 2.0] {
            let lossy = lossy_point(z, ell).unwrap();
            let lossless = lossless_point(z).unwrap();
            assert!(
                (lossy - lossless).norm() < 1e-4,
                "z = {z}: |Δ| = {:.2e}",
                (lossy - lossless).norm()
            );
        }
    }

    #[test]
    fn lossy_is_bounded_and_smooths_peaks() {
        let profile = LossProfile::compute(fig3_grid(400), 0.5).unwrap();
        let (g2_lossless, g2_lossy) = profile.g2_curves();
        let max_lossless = g2_lossless.iter().copied().fold(0.0f64, f64::max);
        let max_lossy = g2_lossy.iter().copied().fold(0.0f64, f64::max);
        assert_abs_diff_eq!(max_lossless, 4.0, epsilon = 1e-9);
        assert!(max_lossy < 4.0, "losses must suppress the peaks");
        for v in &profile.lossy {
            assert!(v.norm() <= 2.0 + 1e-6);
        }
        // small-z oscillations are flattened: the lossy curve's spread over
        // z < 0.4 is far below the lossless swing (0 to 4)
        let small: Vec<f64> = profile
            .grid_rc
            .iter()
            .zip(&g2_lossy)
            .filter(|(&z, _)| z < 0.4)
            .map(|(_, &v)| v)
            .collect();
        let spread = small.iter().copied().fold(0.0f64, f64::max)
            - small.iter().copied().fold(f64::INFINITY, f64::min);
        assert!(spread < 0.5, "lossy spread {spread} at small z");
    }

    #[test]
    fn lossless_grid_resolves_first_five_extrema() {
        let grid = fig3_grid(2000);
        let g2: Vec<f64> = grid
            .iter()
            .map(|&z| lossless_point(z).unwrap().norm_sqr())
            .collect();
        // local maxima close to the full height 4
        let mut maxima = 0;
        for i in 1..g2.len() - 1 {
            if g2[i] > g2[i - 1] && g2[i] > g2[i + 1] && g2[i] > 3.5 {
                maxima += 1;
            }
        }
        assert!(maxima >= 5, "only {maxima} resolved maxima");
    }

    #[test]
    fn fig3_grid_pins_the_outer_maximum() {
        let grid = fig3_grid(2000);
        let z_star = PI.powf(-1.0 / 3.0);
        assert!(grid.iter().any(|&z| z == z_star));
        assert!(grid.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn lossy_tail_follows_inverse_sixth_power() {
        // far beyond ℓ and r_c the correlation drops like (r_c/z)⁶
        let ell = 0.1;
        for z in [2.5, 3.0] {
            let g2 = lossy_point(z, ell).unwrap().norm_sqr();
            assert_relative_eq!(g2, (z as f64).powi(-6), max_relative = 0.05);
        }
    }

    #[test]
    fn polariton_attenuation_values() {
        let p = rb87_sec5();
        let d = crate::ensemble::derive_params(&p).unwrap();
        assert_eq!(polariton_attenuation(0.0, &p).unwrap().amplitude_factor, 1.0);
        // L²k²/α = 2 ln 2 → amplitude factor 1/2
        let k = (2.0 * 2f64.ln() * p.alpha).sqrt() / p.length_l;
        let att = polariton_attenuation(k, &p).unwrap();
        assert_relative_eq!(att.amplitude_factor, 0.5, max_relative = 1e-12);
        // γ_pol·τ_prop equals the squared-amplitude exponent L²k²/α
        let expected = p.length_l * p.length_l * k * k / p.alpha;
        assert_relative_eq!(
            att.decay_rate * att.propagation_time,
            expected,
            max_relative = 1e-12
        );
        // §V scale: at k = 1/r_c the loss-length claim ℓ ≈ r_c gives e^(-1/2)
        let att = polariton_attenuation(1.0 / d.r_c, &p).unwrap();
        let ell_over_rc = d.loss_length / d.r_c;
        assert_relative_eq!(
            att.amplitude_factor,
            (-0.5 * ell_over_rc * ell_over_rc).exp(),
            max_relative = 1e-12
        );
        assert_abs_diff_eq!(att.amplitude_factor, (-0.5f64).exp(), epsilon = 0.01);
    }

    #[test]
    fn i_tilde_symmetry_and_k0() {
        let p = rb87_sec5();
        let r_c = (p.c3 * p.storage_t).cbrt();
        let ks: Vec<f64> = [-2.0, -0.5, 0.0, 0.5, 2.0].iter().map(|k| k / r_c).collect();
        let s = i_tilde(&ks, p.storage_t, p.c3, 40.0).unwrap();
        // even in k
        assert_abs_diff_eq!((s.values[0] - s.values[4]).norm(), 0.0, epsilon = 1e-8 * r_c);
        assert_abs_diff_eq!((s.values[1] - s.values[3]).norm(), 0.0, epsilon = 1e-8 * r_c);
        // k = 0: real part is the (cutoff) ∫ sin(V T) dz, checked against an
        // independent direct quadrature
        let direct = quad::integrate_cells(
            |x| Complex64::new((x.powi(-3)).sin(), 0.0),
            0.05,
            40.0,
            quad::rddi_phase_splits(0.05, 40.0, 1.0, SPLIT_CAP).unwrap(),
            &piece_opts(),
        )
        .unwrap();
        // core below 0.05 averages sin to 0; Ĩ(0).re = 2∫sin
        assert_relative_eq!(
            s.values[2].re / r_c,
            2.0 * direct.value.re,
            max_relative = 1e-4
        );
        // Riemann–Lebesgue decay at large k
        let big = i_tilde_point(300.0, 40.0).unwrap();
        let small = i_tilde_point(0.7, 40.0).unwrap();
        assert!(big.norm() < 0.02 * small.norm());
    }

    #[test]
    fn fourier_route_matches_convolution() {
        let ell = 0.5;
        let zs = [0.1, 0.3, 0.7, 1.0, 2.0, 5.0, 10.0];
        let fourier = lossy_profile_fourier(&zs, ell, DEFAULT_Z_CUT_RC).unwrap();
        let scale = zs
            .iter()
            .map(|&z| lossy_point(z, ell).unwrap().norm())
            .fold(0.0f64, f64::max);
        for (i, &z) in zs.iter().enumerate() {
            let conv = lossy_point(z, ell).unwrap();
            let diff = (conv - fourier[i]).norm();
            assert!(
                diff <= 1e-4 * scale,
                "z = {z}: |Δ| = {diff:.3e} vs scale {scale:.3}"
            );
        }
    }

    #[test]
    fn si_boundary_profile_consistency() {
        let p = rb87_sec5();
        let r_c = (p.c3 * p.storage_t).cbrt();
        let grid = vec![0.5 * r_c, r_c, 2.0 * r_c];
        let s = lossy_profile(&grid, p.storage_t, p.c3, p.length_l, p.alpha).unwrap();
        let ell = p.length_l / p.alpha.sqrt() / r_c;
        for (i, &z) in [0.5, 1.0, 2.0].iter().enumerate() {
            let direct = lossy_point(z, ell).unwrap();
            assert_abs_diff_eq!((s.values[i] - direct).norm(), 0.0, epsilon = 1e-12);
        }
    }
}
