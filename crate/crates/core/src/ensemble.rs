//! Physical parameters, derived quantities, the RDDI potential, and
//! atom-position sampling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::units;

/// Default cap on the number of sampled atom positions.
pub const DEFAULT_ATOM_CAP: usize = 2_000_000;

/// Cloud shape. The segment is the workhorse: beyond the transverse width
/// the pair problem is one-dimensional, so positions carry only a z
/// coordinate and the density is interpreted per unit length through the
/// effective cross section. Full-3D shapes are kept for volume integrals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CloudGeometry {
    /// 1D segment of `length` (m) with an effective cross section (m²).
    Segment { length: f64, cross_section: f64 },
    /// Rectangular box, dimensions in m.
    Box { lx: f64, ly: f64, lz: f64 },
    /// Cylinder along z, radius and length in m.
    Cylinder { radius: f64, length: f64 },
}

impl CloudGeometry {
    pub fn volume(&self) -> f64 {
        match *self {
            CloudGeometry::Segment {
                length,
                cross_section,
            } => length * cross_section,
            CloudGeometry::Box { lx, ly, lz } => lx * ly * lz,
            CloudGeometry::Cylinder { radius, length } => {
                std::f64::consts::PI * radius * radius * length
            }
        }
    }

    /// Extent along the propagation (z) axis.
    pub fn z_extent(&self) -> f64 {
        match *self {
            CloudGeometry::Segment { length, .. } => length,
            CloudGeometry::Box { lz, .. } => lz,
            CloudGeometry::Cylinder { length, .. } => length,
        }
    }

    /// Transverse width, used to decide where the 1D reduction is valid.
    pub fn transverse_width(&self) -> f64 {
        match *self {
            CloudGeometry::Segment { cross_section, .. } => cross_section.sqrt(),
            CloudGeometry::Box { lx, ly, .. } => lx.max(ly),
            CloudGeometry::Cylinder { radius, .. } => 2.0 * radius,
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            CloudGeometry::Segment {
                length,
                cross_section,
            } => length > 0.0 && cross_section > 0.0,
            CloudGeometry::Box { lx, ly, lz } => lx > 0.0 && ly > 0.0 && lz > 0.0,
            CloudGeometry::Cylinder { radius, length } => radius > 0.0 && length > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Geometry("all geometry dimensions must be positive".into()))
        }
    }
}

/// Experiment-level inputs. All frequencies and rates are angular (rad/s);
/// see [`crate::units`] for the input-boundary conversions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhysicalParams {
    /// Probe Rabi frequency Ω_p0 (rad/s). May be zero (no-probe limit).
    pub omega_p0: f64,
    /// Control Rabi frequency Ω_c (rad/s).
    pub omega_c: f64,
    /// Excited-state decay rate Γ (rad/s).
    pub gamma_e: f64,
    /// Optical density α (dimensionless).
    pub alpha: f64,
    /// Medium length L (m).
    pub length_l: f64,
    /// RDDI coefficient C3 (s⁻¹·m³, no 2π).
    pub c3: f64,
    /// Storage duration T (s).
    pub storage_t: f64,
    /// Total atom density n (1/m³).
    pub density_n: f64,
    /// Microwave Rabi frequency Ω_rf coupling the two Rydberg states (rad/s).
    pub omega_rf: f64,
    /// Cloud geometry.
    pub geometry: CloudGeometry,
}

impl PhysicalParams {
    /// Weak-probe ratio ε = Ω_p0/Ω_c.
    pub fn epsilon(&self) -> f64 {
        self.omega_p0 / self.omega_c
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("omega_c", self.omega_c),
            ("gamma_e", self.gamma_e),
            ("alpha", self.alpha),
            ("length_l", self.length_l),
            ("c3", self.c3),
            ("storage_t", self.storage_t),
            ("density_n", self.density_n),
            ("omega_rf", self.omega_rf),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidParams(format!(
                    "{name} must be strictly positive and finite, got {v}"
                )));
            }
        }
        if !(self.omega_p0 >= 0.0) || !self.omega_p0.is_finite() {
            return Err(Error::InvalidParams(format!(
                "omega_p0 must be non-negative, got {}",
                self.omega_p0
            )));
        }
        if self.omega_p0 >= self.omega_c {
            return Err(Error::InvalidParams(format!(
                "weak-probe regime requires omega_p0 < omega_c ({} >= {})",
                self.omega_p0, self.omega_c
            )));
        }
        self.geometry.validate()
    }
}

/// Quantities computed from [`PhysicalParams`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedParams {
    /// Dark-state normalization A = (1 + Ω_p0²/Ω_c²)^(-1/2).
    pub norm_a: f64,
    /// Group velocity v_g0 = Ω_c²L/(Γα) (m/s).
    pub v_g0: f64,
    /// Characteristic RDDI radius r_c = (C3·T)^(1/3) (m).
    pub r_c: f64,
    /// Rydberg-atom density n_Ry = A²(Ω_p0²/Ω_c²)n (1/m³).
    pub n_ry: f64,
    /// Mean Rydberg spacing n_Ry^(-1/3) (m); infinite when n_Ry = 0.
    pub r_ry: f64,
    /// Maximum storage time T_max = (C3·n_Ry)^(-1) (s); infinite when n_Ry = 0.
    pub t_max: f64,
    /// Characteristic loss distance L/√α (m).
    pub loss_length: f64,
    /// Delay time below which polariton losses matter, Γ√α/Ω_c² (s).
    pub loss_delay: f64,
}

/// Compute every derived quantity from its defining formula. Pure.
pub fn derive_params(p: &PhysicalParams) -> Result<DerivedParams> {
    p.validate()?;
    let eps2 = p.epsilon() * p.epsilon();
    let norm_a = 1.0 / (1.0 + eps2).sqrt();
    let v_g0 = p.omega_c * p.omega_c * p.length_l / (p.gamma_e * p.alpha);
    let r_c = (p.c3 * p.storage_t).cbrt();
    let n_ry = norm_a * norm_a * eps2 * p.density_n;
    let (r_ry, t_max) = if n_ry > 0.0 {
        (n_ry.powf(-1.0 / 3.0), 1.0 / (p.c3 * n_ry))
    } else {
        (f64::INFINITY, f64::INFINITY)
    };
    Ok(DerivedParams {
        norm_a,
        v_g0,
        r_c,
        n_ry,
        r_ry,
        t_max,
        loss_length: p.length_l / p.alpha.sqrt(),
        loss_delay: p.gamma_e * p.alpha.sqrt() / (p.omega_c * p.omega_c),
    })
}

/// RDDI exchange potential V(r) = C3/r³ (s⁻¹ for C3 in s⁻¹·m³).
///
/// Self-interaction is excluded, so r = 0 is rejected.
pub fn rddi_potential(r: f64, c3: f64) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::InvalidParams(format!(
            "rddi_potential requires r > 0, got {r}"
        )));
    }
    Ok(c3 / (r * r * r))
}

/// Dimensionless interaction phase V(r)·T = (r_c/r)³.
pub fn rddi_phase(r_over_rc: f64) -> f64 {
    let x = 1.0 / r_over_rc;
    x * x * x
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DimMode {
    Full3D,
    Reduced1D,
}

/// Sampled atom positions with geometry metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct AtomCloud {
    /// Positions in m; in reduced-1D mode the transverse components are zero.
    pub positions: Vec<[f64; 3]>,
    pub dim_mode: DimMode,
    pub seed: u64,
    pub geometry: CloudGeometry,
}

impl AtomCloud {
    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn distance(&self, j: usize, k: usize) -> f64 {
        let a = self.positions[j];
        let b = self.positions[k];
        let d = [a[0] - b[0], a[1] - b[1], a[2] - b[2]];
        (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt()
    }

    /// z coordinates, the only ones carrying structure in reduced-1D mode.
    pub fn z_coords(&self) -> Vec<f64> {
        self.positions.iter().map(|p| p[2]).collect()
    }

    /// Build a cloud from explicit positions (full-3D mode, no seed).
    pub fn from_positions(positions: Vec<[f64; 3]>, geometry: CloudGeometry) -> Self {
        AtomCloud {
            positions,
            dim_mode: DimMode::Full3D,
            seed: 0,
            geometry,
        }
    }

    /// Smallest pairwise distance; O(N²), intended for oracle-sized clouds.
    pub fn min_pair_distance(&self) -> Option<f64> {
        let n = self.len();
        if n < 2 {
            return None;
        }
        let mut best = f64::INFINITY;
        for j in 0..n {
            for k in j + 1..n {
                best = best.min(self.distance(j, k));
            }
        }
        Some(best)
    }
}

/// Sample `count` i.i.d. uniform positions in the parameter geometry.
/// Deterministic for a fixed seed.
pub fn sample_cloud(p: &PhysicalParams, count: usize, seed: u64) -> Result<AtomCloud> {
    sample_cloud_capped(p, count, seed, DEFAULT_ATOM_CAP)
}

pub fn sample_cloud_capped(
    p: &PhysicalParams,
    count: usize,
    seed: u64,
    cap: usize,
) -> Result<AtomCloud> {
    if count == 0 {
        return Err(Error::InvalidParams("count must be >= 1".into()));
    }
    if count > cap {
        return Err(Error::MemoryCap(format!(
            "requested {count} atoms exceeds cap {cap}"
        )));
    }
    p.geometry.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut positions = Vec::with_capacity(count);
    let dim_mode = match p.geometry {
        CloudGeometry::Segment { length, .. } => {
            for _ in 0..count {
                let z = rng.random_range(-0.5 * length..0.5 * length);
                positions.push([0.0, 0.0, z]);
            }
            DimMode::Reduced1D
        }
        CloudGeometry::Box { lx, ly, lz } => {
            for _ in 0..count {
                let x = rng.random_range(-0.5 * lx..0.5 * lx);
                let y = rng.random_range(-0.5 * ly..0.5 * ly);
                let z = rng.random_range(-0.5 * lz..0.5 * lz);
                positions.push([x, y, z]);
            }
            DimMode::Full3D
        }
        CloudGeometry::Cylinder { radius, length } => {
            for _ in 0..count {
                // rejection sampling in the disk; deterministic given the seed
                let (x, y) = loop {
                    let x = rng.random_range(-radius..radius);
                    let y = rng.random_range(-radius..radius);
                    if x * x + y * y <= radius * radius {
                        break (x, y);
                    }
                };
                let z = rng.random_range(-0.5 * length..0.5 * length);
                positions.push([x, y, z]);
            }
            DimMode::Full3D
        }
    };
    Ok(AtomCloud {
        positions,
        dim_mode,
        seed,
        geometry: p.geometry,
    })
}

/// Human-readable parameter file, with frequencies quoted the way the
/// literature quotes them (2π × MHz) and lengths/times in mm/μs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ParamsConfig {
    pub omega_p0_2pi_mhz: f64,
    pub omega_c_2pi_mhz: f64,
    pub gamma_e_2pi_mhz: f64,
    pub alpha: f64,
    pub length_l_mm: f64,
    pub c3_ghz_um3: f64,
    pub storage_t_us: f64,
    pub density_n_per_m3: f64,
    pub omega_rf_2pi_mhz: f64,
    pub geometry: GeometryConfig,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GeometryConfig {
    Segment { length_mm: f64, width_um: f64 },
    Box { lx_um: f64, ly_um: f64, lz_mm: f64 },
    Cylinder { radius_um: f64, length_mm: f64 },
}

impl ParamsConfig {
    pub fn to_params(&self) -> Result<PhysicalParams> {
        let geometry = match self.geometry {
            GeometryConfig::Segment {
                length_mm,
                width_um,
            } => CloudGeometry::Segment {
                length: units::mm(length_mm),
                cross_section: units::um(width_um) * units::um(width_um),
            },
            GeometryConfig::Box { lx_um, ly_um, lz_mm } => CloudGeometry::Box {
                lx: units::um(lx_um),
                ly: units::um(ly_um),
                lz: units::mm(lz_mm),
            },
            GeometryConfig::Cylinder {
                radius_um,
                length_mm,
            } => CloudGeometry::Cylinder {
                radius: units::um(radius_um),
                length: units::mm(length_mm),
            },
        };
        let p = PhysicalParams {
            omega_p0: units::two_pi_mhz(self.omega_p0_2pi_mhz),
            omega_c: units::two_pi_mhz(self.omega_c_2pi_mhz),
            gamma_e: units::two_pi_mhz(self.gamma_e_2pi_mhz),
            alpha: self.alpha,
            length_l: units::mm(self.length_l_mm),
            c3: units::c3_from_ghz_um3(self.c3_ghz_um3),
            storage_t: units::us(self.storage_t_us),
            density_n: self.density_n_per_m3,
            omega_rf: units::two_pi_mhz(self.omega_rf_2pi_mhz),
            geometry,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s)
            .map_err(|e| Error::InvalidParams(format!("config parse error: {e}")))
    }
}

/// Built-in Rb-87 preset: Γ = 2π·6 MHz, Ω_c = 2π·2 MHz, L = 1 mm, α = 30,
/// C3 = 610 GHz·μm³, T = 10 μs, Ω_rf = 2π·100 MHz. The probe ratio ε = 0.1
/// and density 8.3e11 m⁻³ are chosen so the Rydberg gas stays dilute
/// (n_Ry·r_c³ ≈ 0.05), where the pair treatment of the correlations holds.
pub fn rb87_sec5() -> PhysicalParams {
    PhysicalParams {
        omega_p0: units::two_pi_mhz(0.2),
        omega_c: units::two_pi_mhz(2.0),
        gamma_e: units::two_pi_mhz(6.0),
        alpha: 30.0,
        length_l: units::mm(1.0),
        c3: units::c3_from_ghz_um3(610.0),
        storage_t: units::us(10.0),
        density_n: 8.3e11,
        omega_rf: units::two_pi_mhz(100.0),
        geometry: CloudGeometry::Segment {
            length: units::mm(1.0),
            cross_section: units::um(50.0) * units::um(50.0),
        },
    }
}

/// Look up a named built-in preset.
pub fn preset(name: &str) -> Result<PhysicalParams> {
    match name {
        "rb87-sec5" => Ok(rb87_sec5()),
        other => Err(Error::InvalidParams(format!("unknown preset '{other}'"))),
    }
}
