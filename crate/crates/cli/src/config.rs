//! Declarative scenario configs.
//!
//! Line-oriented TOML with units embedded in the key names (`_GPa`,
//! `_MHz`, `_um`, `_mT`, ...): a mistyped or wrongly-suffixed key is a
//! hard parse error, never a silent default. All values are converted to
//! SI exactly once, here.

use serde::Deserialize;
use spinmech_core::beam::BeamGeometry;
use spinmech_core::calibrate::StressAxis;
use spinmech_core::sense::MeasurementModel;
use spinmech_core::spin::{NvOrientation, ResponseBranch, StressTensor, SusceptibilityParams};
use spinmech_core::units::*;

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    Resonances,
    Calibrate,
    ForceMap,
    Sensitivity,
    Inertial,
}

impl ScenarioKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Resonances => "resonances",
            Self::Calibrate => "calibrate",
            Self::ForceMap => "force_map",
            Self::Sensitivity => "sensitivity",
            Self::Inertial => "inertial",
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub kind: ScenarioKind,
    pub seed: Option<u64>,
    #[serde(default)]
    pub material: MaterialBlock,
    pub geometry: Option<GeometryBlock>,
    #[serde(default)]
    pub measurement: MeasurementBlock,
    pub resonances: Option<ResonancesBlock>,
    pub calibrate: Option<CalibrateBlock>,
    pub force_map: Option<ForceMapBlock>,
    pub sensitivity: Option<SensitivityBlock>,
    pub inertial: Option<InertialBlock>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialBlock {
    #[serde(default = "d_a1")]
    pub a1_MHz_per_GPa: f64,
    #[serde(default = "d_a2")]
    pub a2_MHz_per_GPa: f64,
    #[serde(default = "d_b")]
    pub b_MHz_per_GPa: f64,
    #[serde(default = "d_c")]
    pub c_MHz_per_GPa: f64,
    #[serde(default = "d_d")]
    pub d_GHz: f64,
    #[serde(default = "d_gamma")]
    pub gamma_e_GHz_per_T: f64,
    #[serde(default = "d_youngs")]
    pub youngs_modulus_GPa: f64,
    #[serde(default = "d_density")]
    pub density_kg_per_m3: f64,
}

fn d_a1() -> f64 {
    4.86
}
fn d_a2() -> f64 {
    -3.7
}
fn d_b() -> f64 {
    -2.3
}
fn d_c() -> f64 {
    3.5
}
fn d_d() -> f64 {
    2.87
}
fn d_gamma() -> f64 {
    28.03
}
fn d_youngs() -> f64 {
    1220.0
}
fn d_density() -> f64 {
    3515.0
}

impl Default for MaterialBlock {
    fn default() -> Self {
        Self {
            a1_MHz_per_GPa: d_a1(),
            a2_MHz_per_GPa: d_a2(),
            b_MHz_per_GPa: d_b(),
            c_MHz_per_GPa: d_c(),
            d_GHz: d_d(),
            gamma_e_GHz_per_T: d_gamma(),
            youngs_modulus_GPa: d_youngs(),
            density_kg_per_m3: d_density(),
        }
    }
}

impl MaterialBlock {
    pub fn susceptibility(&self) -> Result<SusceptibilityParams, CliError> {
        SusceptibilityParams::from_conventional(
            self.a1_MHz_per_GPa,
            self.a2_MHz_per_GPa,
            self.b_MHz_per_GPa,
            self.c_MHz_per_GPa,
            self.d_GHz,
            self.gamma_e_GHz_per_T,
        )
        .map_err(|e| CliError::config(format!("material block: {e}")))
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryBlock {
    pub shape: String,
    pub width_um: f64,
    pub thickness_um: Option<f64>,
    pub length_um: f64,
}

impl GeometryBlock {
    pub fn build(&self, material: &MaterialBlock) -> Result<BeamGeometry, CliError> {
        let width = self.width_um * UM;
        let length = self.length_um * UM;
        let geom = match self.shape.as_str() {
            "cylindrical_pillar" => BeamGeometry::cylindrical_pillar(width, length),
            "rectangular_cantilever" => BeamGeometry::rectangular_cantilever(
                width,
                self.thickness_um.ok_or_else(|| {
                    CliError::config("geometry.thickness_um required for rectangular shapes")
                })? * UM,
                length,
            ),
            "doubly_clamped_beam" => BeamGeometry::doubly_clamped_beam(
                width,
                self.thickness_um.ok_or_else(|| {
                    CliError::config("geometry.thickness_um required for rectangular shapes")
                })? * UM,
                length,
            ),
            other => {
                return Err(CliError::config(format!(
                    "geometry.shape '{other}' not one of cylindrical_pillar, rectangular_cantilever, doubly_clamped_beam"
                )))
            }
        }
        .map_err(|e| CliError::config(format!("geometry block: {e}")))?;
        geom.with_elastic(
            material.youngs_modulus_GPa * GPA,
            material.density_kg_per_m3,
        )
        .map_err(|e| CliError::config(format!("material block: {e}")))
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasurementBlock {
    #[serde(default = "d_readout")]
    pub readout_factor: f64,
    #[serde(default = "d_tdc")]
    pub t_dc_max_us: f64,
    #[serde(default = "d_tac")]
    pub t_ac_max_us: f64,
    #[serde(default = "d_shot")]
    pub min_shot_period_ns: f64,
    #[serde(default = "d_tm")]
    pub averaging_time_s: f64,
}

fn d_readout() -> f64 {
    0.01
}
fn d_tdc() -> f64 {
    10.0
}
fn d_tac() -> f64 {
    100.0
}
fn d_shot() -> f64 {
    10.0
}
fn d_tm() -> f64 {
    1.0
}

impl Default for MeasurementBlock {
    fn default() -> Self {
        Self {
            readout_factor: d_readout(),
            t_dc_max_us: d_tdc(),
            t_ac_max_us: d_tac(),
            min_shot_period_ns: d_shot(),
            averaging_time_s: d_tm(),
        }
    }
}

impl MeasurementBlock {
    pub fn build(&self) -> Result<MeasurementModel, CliError> {
        let m = MeasurementModel {
            readout_factor: self.readout_factor,
            t_dc_max: self.t_dc_max_us * US,
            t_ac_max: self.t_ac_max_us * US,
            min_shot_period: self.min_shot_period_ns * NS,
            averaging_time: self.averaging_time_s,
        };
        m.validate()
            .map_err(|e| CliError::config(format!("measurement block: {e}")))?;
        Ok(m)
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StressBlock {
    #[serde(default)]
    pub xx_GPa: f64,
    #[serde(default)]
    pub yy_GPa: f64,
    #[serde(default)]
    pub zz_GPa: f64,
    #[serde(default)]
    pub yz_GPa: f64,
    #[serde(default)]
    pub zx_GPa: f64,
    #[serde(default)]
    pub xy_GPa: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UniaxialBlock {
    pub axis: String,
    pub pressure_GPa: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridBlock {
    pub start_GHz: f64,
    pub stop_GHz: f64,
    pub points: usize,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResonancesBlock {
    pub stress: Option<StressBlock>,
    pub uniaxial: Option<UniaxialBlock>,
    #[serde(default)]
    pub b_crystal_mT: [f64; 3],
    #[serde(default = "d_linewidth")]
    pub linewidth_MHz: f64,
    #[serde(default = "d_contrast")]
    pub contrast: f64,
    pub grid: GridBlock,
    /// Population weight per orientation family (defaults to equal).
    pub family_weights: Option<[f64; 4]>,
}

fn d_linewidth() -> f64 {
    1.0
}
fn d_contrast() -> f64 {
    0.2
}

impl ResonancesBlock {
    pub fn stress_tensor(&self) -> Result<StressTensor, CliError> {
        match (&self.stress, &self.uniaxial) {
            (Some(_), Some(_)) => Err(CliError::config(
                "resonances: give either stress or uniaxial, not both",
            )),
            (Some(s), None) => {
                StressTensor::from_gpa(s.xx_GPa, s.yy_GPa, s.zz_GPa, s.yz_GPa, s.zx_GPa, s.xy_GPa)
                    .map_err(|e| CliError::config(format!("resonances.stress: {e}")))
            }
            (None, Some(u)) => {
                let axis = StressAxis::from_label(&u.axis)
                    .map_err(|e| CliError::config(format!("resonances.uniaxial.axis: {e}")))?;
                if u.pressure_GPa < 0.0 {
                    return Err(CliError::config(
                        "resonances.uniaxial.pressure_GPa must be >= 0",
                    ));
                }
                StressTensor::uniaxial(axis.direction(), u.pressure_GPa * GPA)
                    .map_err(|e| CliError::config(format!("resonances.uniaxial: {e}")))
            }
            (None, None) => Ok(StressTensor::zero()),
        }
    }

    pub fn families(&self) -> Vec<(NvOrientation, f64)> {
        let weights = self.family_weights.unwrap_or([0.25; 4]);
        NvOrientation::all()
            .iter()
            .zip(weights.iter())
            .map(|(&f, &w)| (f, w))
            .collect()
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrateBlock {
    #[serde(default = "d_axes")]
    pub axes: Vec<String>,
    #[serde(default = "d_pressures")]
    pub pressures_GPa: Vec<f64>,
    #[serde(default = "d_sigma_f")]
    pub sigma_f_MHz: f64,
    #[serde(default = "d_sigma_int")]
    pub sigma_int_MHz: f64,
    /// Fit the susceptibilities to the simulated records (needs all
    /// three axes); disable to emit records only.
    #[serde(default = "d_true")]
    pub fit: bool,
    /// 0 = single experiment; > 0 = Monte-Carlo coverage study.
    #[serde(default)]
    pub monte_carlo_trials: usize,
    #[serde(default = "d_starts")]
    pub fit_starts: usize,
    #[serde(default)]
    pub cofit_a1: bool,
    pub force_inference: Option<ForceInferenceBlock>,
}

fn d_axes() -> Vec<String> {
    vec!["100".into(), "110".into(), "111".into()]
}
fn d_pressures() -> Vec<f64> {
    vec![0.0, 0.2, 0.4, 0.6, 0.8, 1.0]
}
fn d_sigma_f() -> f64 {
    0.1
}
fn d_sigma_int() -> f64 {
    1.0
}
fn d_starts() -> usize {
    8
}
fn d_true() -> bool {
    true
}

impl CalibrateBlock {
    pub fn axes(&self) -> Result<Vec<StressAxis>, CliError> {
        self.axes
            .iter()
            .map(|s| {
                StressAxis::from_label(s)
                    .map_err(|e| CliError::config(format!("calibrate.axes: {e}")))
            })
            .collect()
    }

    pub fn pressures_pa(&self) -> Result<Vec<f64>, CliError> {
        if self.pressures_GPa.iter().any(|&p| p < 0.0) {
            return Err(CliError::config("calibrate.pressures_GPa must be >= 0"));
        }
        Ok(self.pressures_GPa.iter().map(|p| p * GPA).collect())
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForceInferenceBlock {
    pub forces_nN: Vec<f64>,
    pub site_x_um: f64,
    pub site_z_um: f64,
    #[serde(default = "d_dfsigma")]
    pub delta_f_sigma_MHz: f64,
    #[serde(default = "d_profile_points")]
    pub profile_points: usize,
    #[serde(default = "d_profile_noise")]
    pub profile_noise_frac: f64,
    #[serde(default = "d_branch")]
    pub branch: String,
}

fn d_dfsigma() -> f64 {
    0.1
}
fn d_profile_points() -> usize {
    50
}
fn d_profile_noise() -> f64 {
    0.02
}
fn d_branch() -> String {
    "intrinsic".into()
}

pub fn parse_branch(s: &str) -> Result<ResponseBranch, CliError> {
    match s {
        "intrinsic" => Ok(ResponseBranch::Intrinsic),
        "upper" => Ok(ResponseBranch::Upper),
        "lower" => Ok(ResponseBranch::Lower),
        other => Err(CliError::config(format!(
            "branch '{other}' not one of intrinsic, upper, lower"
        ))),
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldBlock {
    pub preset: String,
    #[serde(default)]
    pub fx_pN: f64,
    #[serde(default)]
    pub fy_pN: f64,
    /// Vortex strength or linear gradient (pN per um of position).
    #[serde(default)]
    pub gradient_pN_per_um: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForceMapBlock {
    pub nx: usize,
    pub ny: usize,
    #[serde(default = "d_spacing")]
    pub spacing_um: f64,
    #[serde(default = "d_offset")]
    pub nv_offset_um: f64,
    #[serde(default = "d_pattern")]
    pub nv_pattern: String,
    pub field: FieldBlock,
    #[serde(default = "d_dwell")]
    pub dwell_s: f64,
    #[serde(default)]
    pub noiseless: bool,
    #[serde(default = "d_tiling")]
    pub tiling: String,
    #[serde(default = "d_branch")]
    pub branch: String,
}

fn d_spacing() -> f64 {
    0.25
}
fn d_offset() -> f64 {
    0.05
}
fn d_pattern() -> String {
    "diagonal".into()
}
fn d_dwell() -> f64 {
    1.0
}
fn d_tiling() -> String {
    "blocks".into()
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContourBlock {
    #[serde(default = "d_wmin")]
    pub w_min_um: f64,
    #[serde(default = "d_wmax")]
    pub w_max_um: f64,
    #[serde(default = "d_hmin")]
    pub h_min_um: f64,
    #[serde(default = "d_hmax")]
    pub h_max_um: f64,
    #[serde(default = "d_npts")]
    pub points_w: usize,
    #[serde(default = "d_npts")]
    pub points_h: usize,
}

fn d_wmin() -> f64 {
    0.05
}
fn d_wmax() -> f64 {
    1.0
}
fn d_hmin() -> f64 {
    0.1
}
fn d_hmax() -> f64 {
    10.0
}
fn d_npts() -> usize {
    40
}

impl Default for ContourBlock {
    fn default() -> Self {
        Self {
            w_min_um: d_wmin(),
            w_max_um: d_wmax(),
            h_min_um: d_hmin(),
            h_max_um: d_hmax(),
            points_w: d_npts(),
            points_h: d_npts(),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SensitivityBlock {
    #[serde(default = "d_offset")]
    pub nv_offset_um: f64,
    #[serde(default)]
    pub nv_depth_um: f64,
    #[serde(default = "d_branch")]
    pub branch: String,
    #[serde(default)]
    pub contour: ContourBlock,
    #[serde(default = "d_optical")]
    pub optical_resolution_nm: f64,
}

fn d_optical() -> f64 {
    10.0
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointMassBlock {
    pub mass_zg: f64,
    pub position_frac: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaussianMassBlock {
    pub mass_zg: f64,
    pub center_frac: f64,
    pub width_frac: f64,
}

#[derive(Debug, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct AdsorbateBlock {
    #[serde(default)]
    pub point_masses: Vec<PointMassBlock>,
    #[serde(default)]
    pub gaussians: Vec<GaussianMassBlock>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SiteBlock {
    /// Axial position as a fraction of the beam length.
    pub x_frac: f64,
    /// Depth as a fraction of the half thickness (+1 = top surface).
    pub z_frac: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriveBlock {
    #[serde(default)]
    pub mode: usize,
    #[serde(default = "d_amp")]
    pub amplitude_nm: f64,
    #[serde(default = "d_periods")]
    pub periods: u32,
    #[serde(default = "d_phase")]
    pub phase: String,
}

fn d_amp() -> f64 {
    1.0
}
fn d_periods() -> u32 {
    1
}
fn d_phase() -> String {
    "out_of_phase".into()
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InertialBlock {
    #[serde(default = "d_modes")]
    pub n_modes: usize,
    #[serde(default = "d_q")]
    pub q_factor: f64,
    #[serde(default)]
    pub adsorbate: AdsorbateBlock,
    pub sites: Vec<SiteBlock>,
    #[serde(default)]
    pub drive: Option<DriveBlock>,
    #[serde(default = "d_recon")]
    pub reconstruction_points: usize,
    pub target_eta_mass_zg: Option<f64>,
}

fn d_modes() -> usize {
    12
}
fn d_q() -> f64 {
    100.0
}
fn d_recon() -> usize {
    400
}

/// Parse and validate a scenario document.
pub fn parse_scenario(text: &str) -> Result<ScenarioConfig, CliError> {
    let cfg: ScenarioConfig =
        toml::from_str(text).map_err(|e| CliError::config(format!("parse error: {e}")))?;
    validate(&cfg)?;
    Ok(cfg)
}

fn validate(cfg: &ScenarioConfig) -> Result<(), CliError> {
    let need = |present: bool, block: &str| {
        if present {
            Ok(())
        } else {
            Err(CliError::config(format!(
                "kind = \"{}\" requires the [{block}] block",
                cfg.kind.name()
            )))
        }
    };
    match cfg.kind {
        ScenarioKind::Resonances => need(cfg.resonances.is_some(), "resonances")?,
        ScenarioKind::Calibrate => need(cfg.calibrate.is_some(), "calibrate")?,
        ScenarioKind::ForceMap => {
            need(cfg.force_map.is_some(), "force_map")?;
            need(cfg.geometry.is_some(), "geometry")?;
        }
        ScenarioKind::Sensitivity => {
            need(cfg.sensitivity.is_some(), "sensitivity")?;
            need(cfg.geometry.is_some(), "geometry")?;
        }
        ScenarioKind::Inertial => {
            need(cfg.inertial.is_some(), "inertial")?;
            need(cfg.geometry.is_some(), "geometry")?;
        }
    }

    // Reproducibility: noise requires a seed.
    let noisy = match cfg.kind {
        ScenarioKind::Calibrate => cfg
            .calibrate
            .as_ref()
            .map(|c| c.sigma_f_MHz > 0.0 || c.sigma_int_MHz > 0.0)
            .unwrap_or(false),
        ScenarioKind::ForceMap => cfg
            .force_map
            .as_ref()
            .map(|f| !f.noiseless)
            .unwrap_or(false),
        _ => false,
    };
    if noisy && cfg.seed.is_none() {
        return Err(CliError::config(
            "seed is mandatory when the scenario includes noise",
        ));
    }

    if let Some(r) = &cfg.resonances {
        if r.grid.points < 2 || r.grid.stop_GHz <= r.grid.start_GHz {
            return Err(CliError::config(
                "resonances.grid: needs points >= 2 and stop_GHz > start_GHz",
            ));
        }
        if !(r.contrast > 0.0 && r.contrast <= 1.0) {
            return Err(CliError::config("resonances.contrast must lie in (0, 1]"));
        }
        if r.linewidth_MHz <= 0.0 {
            return Err(CliError::config("resonances.linewidth_MHz must be > 0"));
        }
    }
    if let Some(i) = &cfg.inertial {
        if i.sites.is_empty() {
            return Err(CliError::config("inertial.sites must not be empty"));
        }
        for s in &i.sites {
            if !(0.0..=1.0).contains(&s.x_frac) || !(-1.0..=1.0).contains(&s.z_frac) {
                return Err(CliError::config(
                    "inertial.sites: x_frac must be in [0,1], z_frac in [-1,1]",
                ));
            }
        }
        for p in &i.adsorbate.point_masses {
            if p.mass_zg < 0.0 || !(0.0..=1.0).contains(&p.position_frac) {
                return Err(CliError::config(
                    "inertial.adsorbate.point_masses: mass_zg >= 0, position_frac in [0,1]",
                ));
            }
        }
    }
    if let Some(g) = &cfg.geometry {
        if g.width_um <= 0.0 || g.length_um <= 0.0 {
            return Err(CliError::config(
                "geometry: width_um and length_um must be > 0",
            ));
        }
    }
    if let Some(c) = &cfg.calibrate {
        if c.pressures_GPa.windows(2).any(|w| w[1] <= w[0]) {
            return Err(CliError::config(
                "calibrate.pressures_GPa must be strictly increasing",
            ));
        }
    }
    Ok(())
}
