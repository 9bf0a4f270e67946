//! Correlation functions of the restored light: the band-averaged
//! second-order correlation G²(τ), the restored/incident intensity ratio,
//! the first-order correlation G¹(τ), and its spectrum S(ω).
//!
//! Separations along the propagation axis map onto delay times through
//! z = v_g0·τ. All kernels run in protocol units (distances in r_c), where
//! the pair phase is V(z)·T = (r_c/z)³.

use num_complex::Complex64;
use rayon::prelude::*;
use serde_json::Value;

use crate::ensemble::AtomCloud;
use crate::error::{Error, Result};
use crate::pair::{norm_a, one_minus_cos, pair_amplitude, phase_bracket};
use crate::quad::{self, QuadOptions};
use crate::series::{CorrelationSeries, GridKind, Normalization};
use crate::validity::one_minus_cos_volume_integral;

/// Band of pair separations contributing to one delay τ: all pairs with
/// | |z_j - z_j'| - separation | ≤ half_width are averaged.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AveragingBand {
    pub separation: f64,
    pub half_width: f64,
}

impl AveragingBand {
    pub fn new(separation: f64, half_width: f64) -> Result<Self> {
        if !(half_width > 0.0 && half_width < separation) {
            return Err(Error::InvalidParams(format!(
                "band needs 0 < half_width < separation, got {half_width} vs {separation}"
            )));
        }
        Ok(AveragingBand {
            separation,
            half_width,
        })
    }
}

/// How the per-τ averaging band is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BandPolicy {
    /// Fixed half-width (m) for every τ.
    Fixed(f64),
    /// separation/20, widened to twice the mean interatomic spacing when
    /// the cloud is too sparse for statistics, and capped below the
    /// separation itself.
    Auto,
}

fn resolve_band(policy: BandPolicy, separation: f64, mean_spacing: f64) -> Option<AveragingBand> {
    let half = match policy {
        BandPolicy::Fixed(w) => w,
        BandPolicy::Auto => (separation / 20.0).max(2.0 * mean_spacing),
    };
    AveragingBand::new(separation, half.min(0.9 * separation)).ok()
}

/// Band-averaged second-order correlation of the restored light on a τ
/// grid. With `Normalization::InputIntensity` each pair contributes
/// |e^(-iV(Δz)T) - 1|²; `Raw` additionally carries the A⁴ε⁴/4 pair weight.
/// Empty bands are reported as gaps, never as silent zeros.
pub fn g2_light(
    cloud: &AtomCloud,
    epsilon: f64,
    t: f64,
    c3: f64,
    v_g0: f64,
    tau_grid: &[f64],
    policy: BandPolicy,
    normalization: Normalization,
) -> Result<CorrelationSeries> {
    if cloud.len() < 2 {
        return Err(Error::InvalidParams("g2_light needs at least 2 atoms".into()));
    }
    if tau_grid.is_empty() {
        return Err(Error::Grid("empty tau grid".into()));
    }
    let tau_min = tau_grid.iter().copied().fold(f64::INFINITY, f64::min);
    let width = cloud.geometry.transverse_width();
    if v_g0 * tau_min <= width {
        return Err(Error::InvalidParams(format!(
            "v_g0·τ_min = {:.3e} m does not exceed the transverse width {width:.3e} m; \
             the problem is not one-dimensional there",
            v_g0 * tau_min
        )));
    }
    let mut zs = cloud.z_coords();
    zs.sort_by(f64::total_cmp);
    let span = zs[zs.len() - 1] - zs[0];
    let mean_spacing = span / (zs.len() - 1) as f64;
    let scale = match normalization {
        Normalization::InputIntensity => 1.0,
        Normalization::Raw => norm_a(epsilon).powi(4) * epsilon.powi(4) / 4.0,
    };

    let per_tau: Vec<(f64, usize)> = tau_grid
        .par_iter()
        .map(|&tau| {
            let separation = v_g0 * tau;
            let Some(band) = resolve_band(policy, separation, mean_spacing) else {
                return (f64::NAN, 0);
            };
            let lo = band.separation - band.half_width;
            let hi = band.separation + band.half_width;
            let mut sum = 0.0;
            let mut count = 0usize;
            for &zj in &zs {
                let start = zs.partition_point(|&z| z < zj + lo);
                for &zk in zs[start..].iter() {
                    if zk > zj + hi {
                        break;
                    }
                    if let Ok(a) = pair_amplitude(zk - zj, t, c3) {
                        sum += a.norm_sqr();
                        count += 1;
                    }
                }
            }
            if count == 0 {
                (f64::NAN, 0)
            } else {
                (scale * sum / count as f64, count)
            }
        })
        .collect();

    let values: Vec<Complex64> = per_tau
        .iter()
        .map(|&(v, _)| Complex64::new(v, 0.0))
        .collect();
    let gaps: Vec<usize> = per_tau
        .iter()
        .enumerate()
        .filter(|(_, &(_, c))| c == 0)
        .map(|(i, _)| i)
        .collect();
    let counts: Vec<usize> = per_tau.iter().map(|&(_, c)| c).collect();

    let mut series =
        CorrelationSeries::new(tau_grid.to_vec(), values, GridKind::TauSeconds, normalization)?;
    series.gaps = gaps;
    series.metadata.insert("n_r_counts".into(), Value::from("pairs"));
    series
        .metadata
        .insert("band_policy".into(), Value::from(format!("{policy:?}")));
    series.metadata.insert(
        "pairs_min".into(),
        Value::from(counts.iter().copied().min().unwrap_or(0)),
    );
    series.metadata.insert(
        "pairs_max".into(),
        Value::from(counts.iter().copied().max().unwrap_or(0)),
    );
    series.metadata.insert("seed".into(), Value::from(cloud.seed));
    Ok(series)
}

/// Dense-cloud limit of [`g2_light`]: the input-intensity normalized
/// correlation evaluated directly at each separation,
/// ḡ²(v_g0 τ) = |e^(-iV T) - 1|² = 2(1 - cos[(r_c/(v_g0 τ))³]).
pub fn g2_light_continuum(
    tau_grid: &[f64],
    v_g0: f64,
    t: f64,
    c3: f64,
) -> Result<CorrelationSeries> {
    let values = tau_grid
        .iter()
        .map(|&tau| {
            pair_amplitude(v_g0 * tau, t, c3).map(|a| Complex64::new(a.norm_sqr(), 0.0))
        })
        .collect::<Result<Vec<_>>>()?;
    CorrelationSeries::new(
        tau_grid.to_vec(),
        values,
        GridKind::TauSeconds,
        Normalization::InputIntensity,
    )
    .map(|s| s.with_meta("mode", Value::from("continuum")))
}

/// Monte Carlo intensity estimate with a blocked standard error.
#[derive(Debug, Clone, Copy)]
pub struct IntensityEstimate {
    pub ratio: f64,
    /// Standard error of the mean, from blocking the reference atoms into
    /// z-slabs (neighborhood sums of nearby references are correlated).
    pub std_error: f64,
    pub reference_count: usize,
}

/// Distance of a position from the geometry boundary.
fn boundary_distance(cloud: &AtomCloud, pos: [f64; 3]) -> f64 {
    match cloud.geometry {
        crate::ensemble::CloudGeometry::Segment { length, .. } => 0.5 * length - pos[2].abs(),
        crate::ensemble::CloudGeometry::Box { lx, ly, lz } => (0.5 * lx - pos[0].abs())
            .min(0.5 * ly - pos[1].abs())
            .min(0.5 * lz - pos[2].abs()),
        crate::ensemble::CloudGeometry::Cylinder { radius, length } => {
            let rho = (pos[0] * pos[0] + pos[1] * pos[1]).sqrt();
            (radius - rho).min(0.5 * length - pos[2].abs())
        }
    }
}

/// Restored/incident intensity ratio from an explicit cloud:
/// A⁴(ε²/2)·⟨Σ_{j≠i}(1 - cos[V(r_ij)T])⟩ over reference atoms i at least
/// `margin` away from the geometry boundary (margin 0 uses every atom; a
/// few r_c of margin removes the neighborhood-truncation bias when
/// comparing against the homogeneous continuum value).
pub fn intensity_ratio_detailed(
    cloud: &AtomCloud,
    epsilon: f64,
    t: f64,
    c3: f64,
    margin: f64,
) -> Result<IntensityEstimate> {
    if cloud.is_empty() {
        return Err(Error::InvalidParams("intensity_ratio needs atoms".into()));
    }
    let n = cloud.len();
    let references: Vec<usize> = (0..n)
        .filter(|&i| boundary_distance(cloud, cloud.positions[i]) >= margin)
        .collect();
    if references.is_empty() {
        return Err(Error::InvalidParams(
            "no reference atoms survive the boundary margin".into(),
        ));
    }
    let sums: Vec<f64> = references
        .par_iter()
        .map(|&i| {
            let mut acc = 0.0;
            for j in 0..n {
                if j != i {
                    let phase = c3 / cloud.distance(i, j).powi(3) * t;
                    acc += one_minus_cos(phase);
                }
            }
            acc
        })
        .collect();
    let prefactor = norm_a(epsilon).powi(4) * epsilon.powi(2) / 2.0;
    let mean = sums.iter().sum::<f64>() / sums.len() as f64;

    // blocked standard error over z-slabs of the reference set
    let n_blocks = 8.min(sums.len());
    let mut by_z: Vec<(f64, f64)> = references
        .iter()
        .zip(&sums)
        .map(|(&i, &s)| (cloud.positions[i][2], s))
        .collect();
    by_z.sort_by(|a, b| a.0.total_cmp(&b.0));
    let block_means: Vec<f64> = by_z
        .chunks(by_z.len().div_ceil(n_blocks))
        .map(|chunk| chunk.iter().map(|&(_, s)| s).sum::<f64>() / chunk.len() as f64)
        .collect();
    let m = block_means.len() as f64;
    let grand = block_means.iter().sum::<f64>() / m;
    let var = block_means
        .iter()
        .map(|b| (b - grand) * (b - grand))
        .sum::<f64>()
        / (m - 1.0).max(1.0);
    let std_error = (var / m).sqrt();

    Ok(IntensityEstimate {
        ratio: prefactor * mean,
        std_error: prefactor * std_error,
        reference_count: sums.len(),
    })
}

pub fn intensity_ratio(cloud: &AtomCloud, epsilon: f64, t: f64, c3: f64) -> Result<f64> {
    Ok(intensity_ratio_detailed(cloud, epsilon, t, c3, 0.0)?.ratio)
}

/// Continuum route for the intensity ratio: the atom sum becomes a density
/// times the radial quadrature ∫d³r (1 - cos[V(r)T]).
pub fn intensity_ratio_continuum(
    epsilon: f64,
    density_n: f64,
    t: f64,
    c3: f64,
) -> Result<f64> {
    let integral = one_minus_cos_volume_integral(t, c3)?;
    Ok(norm_a(epsilon).powi(4) * epsilon.powi(2) / 2.0 * density_n * integral)
}

/// Protocol-unit pair bracket B(x) = e^(i/x³) - 1 at x = |z|/r_c.
fn bracket(x: f64) -> Complex64 {
    phase_bracket(x.powi(-3)).conj()
}

/// First-order correlation of the restored light on the 1D-reduced
/// geometry: I(d) = ∫dz B(|z|)·B*(|z + d|) with d = v_g0·τ/r_c, B the pair
/// bracket, and the integration cut off at |z| = z_cut·r_c (recorded in the
/// metadata). Values are dimensionless (lengths in r_c).
pub fn g1_light_continuum(
    tau_grid: &[f64],
    v_g0: f64,
    t: f64,
    c3: f64,
    z_cut_rc: f64,
) -> Result<CorrelationSeries> {
    if tau_grid.iter().any(|&tau| tau < 0.0) {
        return Err(Error::Grid("g1 tau grid must be non-negative".into()));
    }
    let r_c = (c3 * t).cbrt();
    if !(r_c > 0.0) {
        return Err(Error::InvalidParams("c3·t must be positive".into()));
    }
    let ds: Vec<f64> = tau_grid.iter().map(|&tau| v_g0 * tau / r_c).collect();
    if let Some(&d) = ds
        .iter()
        .find(|&&d| d > 0.0 && d < MIN_CONTINUUM_SEPARATION)
    {
        return Err(Error::Grid(format!(
            "separation {d:.3} r_c below the resolvable minimum {MIN_CONTINUUM_SEPARATION} r_c \
             (grid too fine near τ = 0)"
        )));
    }
    let values: Vec<Complex64> = ds
        .par_iter()
        .map(|&d| g1_correlation_integral(d, z_cut_rc))
        .collect::<Result<Vec<_>>>()?;
    let mut series = CorrelationSeries::new(
        tau_grid.to_vec(),
        values,
        GridKind::TauSeconds,
        Normalization::Raw,
    )?;
    series
        .metadata
        .insert("mode".into(), Value::from("continuum_1d"));
    series.metadata.insert("z_cut_rc".into(), Value::from(z_cut_rc));
    series
        .metadata
        .insert("length_unit".into(), Value::from("r_c"));
    Ok(series)
}

/// Smallest nonzero separation (in r_c) the continuum G¹ quadrature
/// resolves; below it the two oscillation cores overlap.
pub const MIN_CONTINUUM_SEPARATION: f64 = 0.08;

/// ∫_{-Z}^{Z} B(|z|) B*(|z + d|) dz with oscillation cores at z = 0 and
/// z = -d replaced by their stationary averages (bracket → -1) inside a
/// radius δ = min(0.08, d/4).
fn g1_correlation_integral(d: f64, z_cut: f64) -> Result<Complex64> {
    let opts = QuadOptions {
        rel_tol: 1e-8,
        abs_tol: 1e-10,
        max_segments: 50_000,
    };
    if d == 0.0 {
        // ∫ |B|² dz = 2∫₀ 2(1 - cos z⁻³) dz; the averaged core gives 2δ
        let delta = 0.05;
        let splits = quad::rddi_phase_splits(delta, z_cut, 1.0, 400_000)?;
        let outer = quad::integrate_cells(
            |z| Complex64::new(2.0 * (1.0 - z.powi(-3).cos()), 0.0),
            delta,
            z_cut,
            splits,
            &opts,
        )?;
        return Ok(Complex64::new(2.0 * (2.0 * delta + outer.value.re), 0.0));
    }
    let delta = (d / 4.0).min(0.08);
    const SPLIT_CAP: usize = 400_000;
    // phase-π boundaries of |z|⁻³ on an interval that avoids 0
    let phase_splits = |a: f64, b: f64| -> Result<Vec<f64>> {
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
    };
    // boundaries of the shifted phase |z + d|⁻³, mapped back to z
    let shifted_splits = |a: f64, b: f64| -> Result<Vec<f64>> {
        Ok(phase_splits(a + d, b + d)?.into_iter().map(|z| z - d).collect())
    };
    let f = |z: f64| bracket(z.abs()) * bracket((z + d).abs()).conj();
    let mut total = Complex64::new(0.0, 0.0);
    // [-Z, -d-δ]: both factors oscillate toward the region's right edge
    {
        let (a, b) = (-z_cut, -d - delta);
        if b > a {
            let splits = quad::merge_splits(phase_splits(a, b)?, shifted_splits(a, b)?);
            total += quad::integrate_cells(f, a, b, splits, &opts)?.value;
        }
    }
    // core around z = -d: the shifted bracket is replaced by its
    // oscillation average -1; B(|z|) is regular here
    {
        let (a, b) = ((-d - delta).max(-z_cut), -d + delta);
        let g = |z: f64| -bracket(z.abs());
        total += quad::integrate_cells(g, a, b, phase_splits(a, b)?, &opts)?.value;
    }
    // [-d+δ, -δ]
    {
        let (a, b) = (-d + delta, -delta);
        if b > a {
            let splits = quad::merge_splits(phase_splits(a, b)?, shifted_splits(a, b)?);
            total += quad::integrate_cells(f, a, b, splits, &opts)?.value;
        }
    }
    // core around z = 0: bracket(|z|) → -1
    {
        let (a, b) = (-delta, delta);
        let g = |z: f64| -bracket((z + d).abs()).conj();
        total += quad::integrate_cells(g, a, b, shifted_splits(a, b)?, &opts)?.value;
    }
    // [δ, Z]
    {
        let (a, b) = (delta, z_cut);
        let splits = quad::merge_splits(phase_splits(a, b)?, shifted_splits(a, b)?);
        total += quad::integrate_cells(f, a, b, splits, &opts)?.value;
    }
    Ok(total)
}

/// First-order correlation from an explicit cloud, averaging the pair
/// product over every reference atom. Dimensionless protocol-unit values.
pub fn g1_light_cloud(
    cloud: &AtomCloud,
    tau_grid: &[f64],
    v_g0: f64,
    t: f64,
    c3: f64,
) -> Result<CorrelationSeries> {
    if cloud.len() < 2 {
        return Err(Error::InvalidParams("g1_light_cloud needs atoms".into()));
    }
    let r_c = (c3 * t).cbrt();
    let zs = cloud.z_coords();
    let n = zs.len();
    let values: Vec<Complex64> = tau_grid
        .par_iter()
        .map(|&tau| {
            let d = v_g0 * tau;
            let mut acc = Complex64::new(0.0, 0.0);
            for i in 0..n {
                for j in 0..n {
                    if i == j {
                        continue;
                    }
                    let u = (zs[i] - zs[j]).abs() / r_c;
                    let w = (zs[i] - zs[j] + d).abs() / r_c;
                    if u > 0.0 && w > 0.0 {
                        acc += bracket(u) * bracket(w).conj();
                    }
                }
            }
            acc / n as f64
        })
        .collect();
    let mut series = CorrelationSeries::new(
        tau_grid.to_vec(),
        values,
        GridKind::TauSeconds,
        Normalization::Raw,
    )?;
    series.metadata.insert("mode".into(), Value::from("cloud"));
    series.metadata.insert("seed".into(), Value::from(cloud.seed));
    Ok(series)
}

/// Fraction of the peak below which the series must have decayed at its
/// edges for an unwindowed transform.
const SPECTRUM_DECAY: f64 = 1e-6;

/// Spectrum S(ω) = ∫ e^(-iωτ) G¹(τ) dτ by trapezoid-weighted discrete
/// transform on a uniform grid. A grid starting at τ = 0 is extended
/// Hermitian-symmetrically (G¹(-τ) = G¹(τ)*). Insufficient edge decay
/// triggers a cosine taper on the outer quarter, recorded as `windowed`.
pub fn spectrum(g1: &CorrelationSeries) -> Result<CorrelationSeries> {
    let h = g1
        .uniform_step()
        .ok_or_else(|| Error::Grid("spectrum needs a uniform tau grid".into()))?;
    let tau_max = *g1.grid.last().unwrap();
    let n_side = ((std::f64::consts::PI / (4.0 * h)) / (std::f64::consts::PI / (2.0 * tau_max)))
        .ceil() as usize;
    let d_omega = std::f64::consts::PI / (2.0 * tau_max);
    let omega_grid: Vec<f64> = (-(n_side as i64)..=n_side as i64)
        .map(|j| j as f64 * d_omega)
        .collect();
    spectrum_on(g1, &omega_grid)
}

pub fn spectrum_on(g1: &CorrelationSeries, omega_grid: &[f64]) -> Result<CorrelationSeries> {
    let h = g1
        .uniform_step()
        .ok_or_else(|| Error::Grid("spectrum needs a uniform tau grid".into()))?;
    if !g1.gaps.is_empty() {
        return Err(Error::Grid("g1 series has gaps".into()));
    }
    // extend to negative τ when the grid starts at 0
    let (taus, vals): (Vec<f64>, Vec<Complex64>) = if g1.grid[0].abs() < 1e-15 * h {
        let m = g1.grid.len();
        let mut taus = Vec::with_capacity(2 * m - 1);
        let mut vals = Vec::with_capacity(2 * m - 1);
        for i in (1..m).rev() {
            taus.push(-g1.grid[i]);
            vals.push(g1.values[i].conj());
        }
        taus.extend_from_slice(&g1.grid);
        vals.extend_from_slice(&g1.values);
        (taus, vals)
    } else if g1.grid[0] < 0.0 {
        (g1.grid.clone(), g1.values.clone())
    } else {
        return Err(Error::Grid(
            "g1 grid must start at τ = 0 or cover negative τ".into(),
        ));
    };

    let peak = vals.iter().map(|v| v.norm()).fold(0.0f64, f64::max);
    let edge = vals.first().unwrap().norm().max(vals.last().unwrap().norm());
    let needs_window = peak > 0.0 && edge > SPECTRUM_DECAY * peak;
    let vals: Vec<Complex64> = if needs_window {
        let n = vals.len();
        let taper = n / 4;
        vals.into_iter()
            .enumerate()
            .map(|(i, v)| {
                let from_edge = i.min(n - 1 - i);
                if from_edge < taper {
                    let x = from_edge as f64 / taper as f64;
                    v * 0.5 * (1.0 - (std::f64::consts::PI * x).cos())
                } else {
                    v
                }
            })
            .collect()
    } else {
        vals
    };

    let n = taus.len();
    let values: Vec<Complex64> = omega_grid
        .par_iter()
        .map(|&omega| {
            let mut acc = Complex64::new(0.0, 0.0);
            for (k, (&tau, &v)) in taus.iter().zip(&vals).enumerate() {
                let weight = if k == 0 || k == n - 1 { 0.5 } else { 1.0 };
                acc += v * Complex64::new(0.0, -omega * tau).exp() * weight;
            }
            acc * h
        })
        .collect();
    let mut series = CorrelationSeries::new(
        omega_grid.to_vec(),
        values,
        GridKind::OmegaRadPerSec,
        g1.normalization,
    )?;
    if needs_window {
        series.metadata.insert("windowed".into(), Value::from(true));
    }
    Ok(series)
}

/// Full width at half maximum of the real part, by linear interpolation
/// around the global peak. None when the half level is never crossed.
pub fn fwhm(series: &CorrelationSeries) -> Option<f64> {
    let re: Vec<f64> = series.values.iter().map(|v| v.re).collect();
    let (peak_idx, &peak) = re
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))?;
    if !(peak > 0.0) {
        return None;
    }
    let half = 0.5 * peak;
    let grid = &series.grid;
    let mut left = None;
    for i in (0..peak_idx).rev() {
        if re[i] <= half {
            let f = (half - re[i]) / (re[i + 1] - re[i]);
            left = Some(grid[i] + f * (grid[i + 1] - grid[i]));
            break;
        }
    }
    let mut right = None;
    for i in peak_idx..re.len() - 1 {
        if re[i + 1] <= half {
            let f = (re[i] - half) / (re[i] - re[i + 1]);
            right = Some(grid[i] + f * (grid[i + 1] - grid[i]));
            break;
        }
    }
    match (left, right) {
        (Some(l), Some(r)) => Some(r - l),
        _ => None,
    }
}
