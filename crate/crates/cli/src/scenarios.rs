//! Scenario execution: parameter resolution, regime gating, CSV and
//! manifest output.

use std::fs;
use std::path::{Path, PathBuf};

use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

use rydramsey::ensemble::{
    derive_params, preset, sample_cloud, AtomCloud, CloudGeometry, ParamsConfig, PhysicalParams,
};
use rydramsey::light::{self, BandPolicy};
use rydramsey::loss::{fig3_grid, LossProfile};
use rydramsey::oracle::{
    measure_correlators, run_protocol_with, PulseConvention, RddiPropagator,
};
use rydramsey::pair::g2_at_matrix;
use rydramsey::series::{linspace, Normalization};
use rydramsey::units;
use rydramsey::validity::{norm_defect_estimate, regime_check, volume_integral_check};

#[derive(Debug)]
pub enum RunError {
    Config(String),
    Regime(String),
    Other(anyhow::Error),
}

impl From<anyhow::Error> for RunError {
    fn from(e: anyhow::Error) -> Self {
        RunError::Other(e)
    }
}

impl From<rydramsey::Error> for RunError {
    fn from(e: rydramsey::Error) -> Self {
        match e {
            rydramsey::Error::InvalidParams(m) | rydramsey::Error::Geometry(m) => {
                RunError::Config(m)
            }
            other => RunError::Other(anyhow::anyhow!(other)),
        }
    }
}

pub struct ScenarioArgs {
    pub preset: String,
    pub config: Option<PathBuf>,
    pub seed: Option<u64>,
    pub out_dir: PathBuf,
    pub force: bool,
}

impl ScenarioArgs {
    fn params(&self) -> Result<PhysicalParams, RunError> {
        if let Some(path) = &self.config {
            let text = fs::read_to_string(path).map_err(|e| {
                RunError::Config(format!("cannot read {}: {e}", path.display()))
            })?;
            Ok(ParamsConfig::from_json(&text)?.to_params()?)
        } else {
            Ok(preset(&self.preset)?)
        }
    }

    fn require_seed(&self) -> Result<u64, RunError> {
        self.seed.ok_or_else(|| {
            RunError::Config("this scenario is stochastic; --seed is required".into())
        })
    }

    fn ensure_out_dir(&self) -> Result<(), RunError> {
        fs::create_dir_all(&self.out_dir)
            .map_err(|e| RunError::Other(anyhow::anyhow!("cannot create output dir: {e}")))
    }
}

/// Content hash of the resolved scenario inputs: scenario name, arguments,
/// seed, and physical parameters, hashed over their canonical JSON form.
fn input_hash(scenario: &str, args: &Value, seed: Option<u64>, params: Option<&PhysicalParams>) -> String {
    let canonical = json!({
        "scenario": scenario,
        "args": args,
        "seed": seed,
        "params": params,
    });
    let mut hasher = Sha256::new();
    hasher.update(canonical.to_string().as_bytes());
    hex::encode(hasher.finalize())
}

struct Manifest {
    scenario: &'static str,
    args: Value,
    seed: Option<u64>,
    params: Option<PhysicalParams>,
    extra: Map<String, Value>,
    outputs: Vec<String>,
}

impl Manifest {
    fn new(scenario: &'static str, args: Value) -> Self {
        Manifest {
            scenario,
            args,
            seed: None,
            params: None,
            extra: Map::new(),
            outputs: Vec::new(),
        }
    }

    fn hash(&self) -> String {
        input_hash(self.scenario, &self.args, self.seed, self.params.as_ref())
    }

    fn write(&self, out_dir: &Path) -> Result<PathBuf, RunError> {
        let mut map = Map::new();
        map.insert("scenario".into(), Value::from(self.scenario));
        map.insert("args".into(), self.args.clone());
        if let Some(seed) = self.seed {
            map.insert("seed".into(), Value::from(seed));
        }
        if let Some(p) = &self.params {
            map.insert(
                "params_si".into(),
                serde_json::to_value(p).expect("params serialize"),
            );
            map.insert(
                "derived".into(),
                serde_json::to_value(derive_params(p).expect("derivable")).expect("serialize"),
            );
        }
        for (k, v) in &self.extra {
            map.insert(k.clone(), v.clone());
        }
        map.insert(
            "outputs".into(),
            Value::from(self.outputs.clone()),
        );
        map.insert("input_sha256".into(), Value::from(self.hash()));
        let path = out_dir.join(format!("{}_manifest.json", self.scenario));
        let mut text = Value::Object(map).to_string();
        text.push('\n');
        fs::write(&path, text)
            .map_err(|e| RunError::Other(anyhow::anyhow!("cannot write manifest: {e}")))?;
        Ok(path)
    }
}

/// Hard regime gate shared by the physics scenarios.
fn gate_regime(
    p: &PhysicalParams,
    tau_grid: &[f64],
    force: bool,
) -> Result<rydramsey::validity::RegimeReport, RunError> {
    let report = regime_check(p, tau_grid)?;
    if !report.hard_ok() && !force {
        return Err(RunError::Regime(format!(
            "pair treatment invalid: n_ry·r_c³ = {:.3e} (ok: {}), r_c/r_ry = {:.3} (ok: {}), \
             T/T_max = {:.3} (ok: {}), norm defects {:.3e}/{:.3e} (ok: {})",
            report.n_ry_rc3,
            report.pair_density_ok,
            report.rc_over_rry,
            report.rc_rry_ok,
            report.t_over_tmax,
            report.storage_time_ok,
            report.norm_defect_terms[0],
            report.norm_defect_terms[1],
            report.norm_defect_ok,
        )));
    }
    if report.tau_loss_ok.iter().any(|&ok| !ok) {
        eprintln!(
            "note: some delays fall below the polariton-loss bound τ ≳ Γ√α/Ω_c²; \
             the lossy correlation applies there"
        );
    }
    Ok(report)
}

pub fn run_derive(args: &ScenarioArgs) -> Result<(), RunError> {
    let p = args.params()?;
    let d = derive_params(&p)?;
    args.ensure_out_dir()?;

    println!("derived quantities:");
    println!("  A (dark-state norm)      = {:.6}", d.norm_a);
    println!("  v_g0 (group velocity)    = {:.4} m/s", d.v_g0);
    println!("  r_c  (pair radius)       = {:.6} mm", d.r_c * 1e3);
    println!(
        "  V(r_c)                   = {:.6} MHz (2π-free; equals 1/T)",
        rydramsey::ensemble::rddi_potential(d.r_c, p.c3).map_err(RunError::from)? / 1e6
    );
    println!("  n_Ry (Rydberg density)   = {:.4e} 1/m³", d.n_ry);
    println!("  r_Ry (Rydberg spacing)   = {:.6} mm", d.r_ry * 1e3);
    println!("  T_max                    = {:.4} μs", d.t_max * 1e6);
    println!("  loss length L/√α         = {:.6} mm", d.loss_length * 1e3);
    println!("  loss delay Γ√α/Ω_c²      = {:.4} μs", d.loss_delay * 1e6);
    println!("  n_Ry·r_c³                = {:.4e}", d.n_ry * d.r_c.powi(3));

    let mut manifest = Manifest::new("derive", json!({ "preset": args.preset }));
    manifest.params = Some(p.clone());
    let report = regime_check(&p, &[])?;
    manifest
        .extra
        .insert("regime".into(), serde_json::to_value(&report).unwrap());
    let path = manifest.write(&args.out_dir)?;
    println!("manifest: {}", path.display());
    Ok(())
}

pub fn run_g2(
    args: &ScenarioArgs,
    atoms: usize,
    tau_min_us: f64,
    tau_max_us: f64,
    points: usize,
    band_half_width_um: Option<f64>,
) -> Result<(), RunError> {
    if points < 2 || tau_max_us <= tau_min_us || tau_min_us <= 0.0 {
        return Err(RunError::Config("need points ≥ 2 and 0 < tau_min < tau_max".into()));
    }
    let p = args.params()?;
    let d = derive_params(&p)?;
    let seed = args.require_seed()?;
    let tau_grid = linspace(units::us(tau_min_us), units::us(tau_max_us), points);
    let report = gate_regime(&p, &tau_grid, args.force)?;
    args.ensure_out_dir()?;

    let cloud = sample_cloud(&p, atoms, seed)?;
    let policy = match band_half_width_um {
        Some(w) => BandPolicy::Fixed(units::um(w)),
        None => BandPolicy::Auto,
    };
    let mut series = light::g2_light(
        &cloud,
        p.epsilon(),
        p.storage_t,
        p.c3,
        d.v_g0,
        &tau_grid,
        policy,
        Normalization::InputIntensity,
    )?;

    let scenario_args = json!({
        "preset": args.preset,
        "atoms": atoms,
        "tau_min_us": tau_min_us,
        "tau_max_us": tau_max_us,
        "points": points,
        "band_half_width_um": band_half_width_um,
    });
    let mut manifest = Manifest::new("g2", scenario_args);
    manifest.seed = Some(seed);
    manifest.params = Some(p);
    manifest
        .extra
        .insert("regime".into(), serde_json::to_value(&report).unwrap());

    series
        .metadata
        .insert("regime".into(), serde_json::to_value(&report).unwrap());
    series
        .metadata
        .insert("input_sha256".into(), Value::from(manifest.hash()));
    let csv_path = args.out_dir.join("g2.csv");
    let mut file = fs::File::create(&csv_path)
        .map_err(|e| RunError::Other(anyhow::anyhow!("cannot write CSV: {e}")))?;
    series.write_csv(&mut file).map_err(RunError::from)?;
    manifest.outputs.push("g2.csv".into());
    let path = manifest.write(&args.out_dir)?;
    if !series.gaps.is_empty() {
        eprintln!(
            "note: {} τ points had no atom pairs in the averaging band (gaps in CSV)",
            series.gaps.len()
        );
    }
    println!("g2: {}", csv_path.display());
    println!("manifest: {}", path.display());
    Ok(())
}

pub fn run_fig3(args: &ScenarioArgs, loss_length: f64, points: usize) -> Result<(), RunError> {
    if !(loss_length > 0.0) || points < 16 {
        return Err(RunError::Config("need loss_length > 0 and points ≥ 16".into()));
    }
    args.ensure_out_dir()?;
    let profile = LossProfile::compute(fig3_grid(points), loss_length)?;

    let scenario_args = json!({ "loss_length_rc": loss_length, "points": points });
    let mut manifest = Manifest::new("fig3", scenario_args.clone());
    manifest
        .extra
        .insert("protocol_units".into(), Value::from(true));

    let mut meta = Map::new();
    meta.insert("input_sha256".into(), Value::from(manifest.hash()));
    let csv_path = args.out_dir.join("fig3.csv");
    let mut file = fs::File::create(&csv_path)
        .map_err(|e| RunError::Other(anyhow::anyhow!("cannot write CSV: {e}")))?;
    profile.write_csv(&mut file, &meta).map_err(RunError::from)?;
    manifest.outputs.push("fig3.csv".into());
    let path = manifest.write(&args.out_dir)?;
    println!("fig3 curves: {}", csv_path.display());
    println!("manifest: {}", path.display());
    Ok(())
}

pub fn run_spectrum(args: &ScenarioArgs, tau_max_rc: f64, points: usize) -> Result<(), RunError> {
    if !(tau_max_rc > 1.0) || points < 32 {
        return Err(RunError::Config("need tau_max_rc > 1 and points ≥ 32".into()));
    }
    let p = args.params()?;
    let d = derive_params(&p)?;
    let tau_unit = d.r_c / d.v_g0;
    let tau_grid = linspace(0.0, tau_max_rc * tau_unit, points);
    let report = gate_regime(&p, &tau_grid[1..], args.force)?;
    args.ensure_out_dir()?;

    let g1 = light::g1_light_continuum(&tau_grid, d.v_g0, p.storage_t, p.c3, 60.0)?;
    let spec = light::spectrum(&g1)?;
    let fwhm = light::fwhm(&spec);

    let scenario_args = json!({
        "preset": args.preset,
        "tau_max_rc": tau_max_rc,
        "points": points,
    });
    let mut manifest = Manifest::new("spectrum", scenario_args);
    manifest.params = Some(p);
    manifest
        .extra
        .insert("regime".into(), serde_json::to_value(&report).unwrap());
    if let Some(w) = fwhm {
        manifest.extra.insert("fwhm_rad_per_s".into(), Value::from(w));
        manifest.extra.insert(
            "fwhm_in_vg_over_rc".into(),
            Value::from(w * tau_unit),
        );
        println!(
            "spectral FWHM = {:.4e} rad/s = {:.3} v_g0/r_c",
            w,
            w * tau_unit
        );
    }

    for (name, series) in [("g1.csv", &g1), ("spectrum.csv", &spec)] {
        let mut s = series.clone();
        s.metadata
            .insert("input_sha256".into(), Value::from(manifest.hash()));
        s.metadata
            .insert("regime".into(), serde_json::to_value(&report).unwrap());
        let csv_path = args.out_dir.join(name);
        let mut file = fs::File::create(&csv_path)
            .map_err(|e| RunError::Other(anyhow::anyhow!("cannot write CSV: {e}")))?;
        s.write_csv(&mut file).map_err(RunError::from)?;
        manifest.outputs.push(name.to_string());
        println!("{name}: {}", csv_path.display());
    }
    let path = manifest.write(&args.out_dir)?;
    println!("manifest: {}", path.display());
    Ok(())
}

pub fn run_oracle_compare(
    args: &ScenarioArgs,
    atoms: usize,
    epsilon: f64,
    segment_rc: Option<f64>,
    dump_state: bool,
) -> Result<(), RunError> {
    if atoms < 2 {
        return Err(RunError::Config("oracle comparison needs ≥ 2 atoms".into()));
    }
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(RunError::Config("need 0 < epsilon < 1".into()));
    }
    let seed = args.require_seed()?;
    args.ensure_out_dir()?;
    let length = segment_rc.unwrap_or(0.25 * atoms as f64);

    // protocol units: r_c = 1, T = 1
    let sampler = PhysicalParams {
        geometry: CloudGeometry::Segment {
            length,
            cross_section: 1.0,
        },
        ..preset("rb87-sec5")?
    };
    let cloud = sample_cloud(&sampler, atoms, seed)?;
    let cloud = AtomCloud::from_positions(cloud.positions, sampler.geometry);

    let propagator = RddiPropagator::new(&cloud, 1.0, 1.0)?;
    let fin = run_protocol_with(&propagator, epsilon, PulseConvention::RealRotation)?;
    let exact = measure_correlators(&fin).g2_at;
    let pair = g2_at_matrix(&cloud, epsilon, 1.0, 1.0)?;

    let mut rows = Vec::new();
    let mut rels = Vec::new();
    for j in 0..atoms {
        for k in j + 1..atoms {
            let dev = (exact[(j, k)] - pair[(j, k)]).abs();
            let rel = dev / pair[(j, k)].max(f64::MIN_POSITIVE);
            rels.push(rel);
            rows.push((j, k, cloud.distance(j, k), exact[(j, k)], pair[(j, k)], dev, rel));
        }
    }
    rels.sort_by(f64::total_cmp);
    let max_rel = *rels.last().unwrap();
    let median_rel = rels[rels.len() / 2];

    let scenario_args = json!({
        "atoms": atoms,
        "epsilon": epsilon,
        "segment_rc": length,
    });
    let mut manifest = Manifest::new("oracle_compare", scenario_args);
    manifest.seed = Some(seed);
    manifest
        .extra
        .insert("max_rel_deviation".into(), Value::from(max_rel));
    manifest
        .extra
        .insert("median_rel_deviation".into(), Value::from(median_rel));
    manifest
        .extra
        .insert("protocol_units".into(), Value::from(true));

    let csv_path = args.out_dir.join("oracle_compare.csv");
    let mut text = String::new();
    text.push_str(&format!(
        "# {}\n",
        json!({
            "atoms": atoms,
            "epsilon": epsilon,
            "segment_rc": length,
            "seed": seed,
            "input_sha256": manifest.hash(),
        })
    ));
    text.push_str("j,k,r_rc,exact,pair,abs_dev,rel_dev\n");
    for (j, k, r, e, p, dev, rel) in rows {
        text.push_str(&format!("{j},{k},{r},{e},{p},{dev},{rel}\n"));
    }
    fs::write(&csv_path, text)
        .map_err(|e| RunError::Other(anyhow::anyhow!("cannot write CSV: {e}")))?;
    manifest.outputs.push("oracle_compare.csv".into());

    if dump_state {
        let state_path = args.out_dir.join("state_triplets.csv");
        let mut text = String::from("config,re,im\n");
        for (config, re, im) in fin.triplets(0.0) {
            text.push_str(&format!("{config},{re},{im}\n"));
        }
        fs::write(&state_path, text)
            .map_err(|e| RunError::Other(anyhow::anyhow!("cannot write state: {e}")))?;
        manifest.outputs.push("state_triplets.csv".into());
        println!("state triplets: {}", state_path.display());
    }
    let path = manifest.write(&args.out_dir)?;

    println!("atoms = {atoms}, epsilon = {epsilon}, segment = {length} r_c");
    println!("max relative G2 deviation    = {:.4e}", max_rel);
    println!("median relative G2 deviation = {:.4e}", median_rel);
    println!("comparison: {}", csv_path.display());
    println!("manifest: {}", path.display());
    Ok(())
}

pub fn run_validity(args: &ScenarioArgs, tau_us: &[f64]) -> Result<(), RunError> {
    let p = args.params()?;
    args.ensure_out_dir()?;
    let tau_grid: Vec<f64> = tau_us.iter().map(|&t| units::us(t)).collect();
    let report = regime_check(&p, &tau_grid)?;
    let defect = norm_defect_estimate(&p, p.geometry.volume())?;
    let ratio = volume_integral_check(p.storage_t, p.c3)?;

    println!("regime report:");
    println!(
        "  n_Ry·r_c³            = {:.4e}  (pair treatment ok: {})",
        report.n_ry_rc3, report.pair_density_ok
    );
    println!(
        "  r_c/r_Ry             = {:.4}  (ok: {})",
        report.rc_over_rry, report.rc_rry_ok
    );
    println!(
        "  T/T_max              = {:.4}  (ok: {})",
        report.t_over_tmax, report.storage_time_ok
    );
    println!(
        "  Ω_rf margin          = {:.4e}  (ok: {})",
        report.rf_margin, report.rf_ok
    );
    for (tau, ok) in tau_us.iter().zip(&report.tau_loss_ok) {
        println!("  τ = {tau} μs above loss bound: {ok}");
    }
    println!(
        "  norm defects         = {:.4e}, {:.4e}  (ok: {})",
        defect.pair_times_volume, defect.pair_times_volume_sq, report.norm_defect_ok
    );
    println!("  volume-integral self-check ratio = {ratio:.6}");

    let mut manifest = Manifest::new("validity", json!({ "preset": args.preset, "tau_us": tau_us }));
    manifest.params = Some(p);
    manifest
        .extra
        .insert("regime".into(), serde_json::to_value(&report).unwrap());
    manifest
        .extra
        .insert("volume_integral_ratio".into(), Value::from(ratio));
    let path = manifest.write(&args.out_dir)?;
    println!("manifest: {}", path.display());

    if !report.hard_ok() && !args.force {
        return Err(RunError::Regime(
            "one or more hard regime conditions failed".into(),
        ));
    }
    Ok(())
}
