//! End-to-end tests of the command line front end: exit codes,
//! validation messages, output formats and byte-level determinism.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn spinmech(args: &[&str], out_dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spinmech"))
        .args(args)
        .env("SPINMECH_OUT", out_dir)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, name: &str, contents: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, contents).unwrap();
    path.to_string_lossy().into_owned()
}

const SENSITIVITY_CFG: &str = r#"
kind = "sensitivity"

[geometry]
shape = "cylindrical_pillar"
width_um = 0.1
length_um = 1.0

[sensitivity]
nv_offset_um = 0.05

[sensitivity.contour]
points_w = 8
points_h = 8
"#;

#[test]
fn sensitivity_run_produces_expected_numbers() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "s.toml", SENSITIVITY_CFG);
    let out_dir = tmp.path().join("out");
    let out = spinmech(&["sensitivity", "--config", &cfg], &out_dir);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );

    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("sensitivity.json")).unwrap())
            .unwrap();
    let eta_dc = json["eta_dc_pN_per_sqrtHz"].as_f64().unwrap();
    assert!((eta_dc - 100.0).abs() < 10.0, "eta_dc = {eta_dc}");
    let band = json["ac_band_Hz"].as_array().unwrap();
    assert_eq!(band[0].as_f64().unwrap(), 1e4);
    assert_eq!(band[1].as_f64().unwrap(), 1e8);

    let contour = fs::read_to_string(out_dir.join("gradient_contour.csv")).unwrap();
    assert!(contour.starts_with("w_um,h_um,gradB_mT_per_um\n"));
    assert_eq!(contour.lines().count(), 65);

    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["kind"], "sensitivity");
    assert_eq!(manifest["toolkit_version"], env!("CARGO_PKG_VERSION"));
    assert!(manifest["config_sha256"].as_str().unwrap().len() == 64);
}

#[test]
fn unknown_key_is_a_hard_error_naming_the_key() {
    let tmp = tempfile::tempdir().unwrap();
    // "presure_GPa" misspelling must be named in the error.
    let cfg = write_config(
        tmp.path(),
        "bad.toml",
        r#"
kind = "resonances"

[resonances]
presure_GPa = 1.0

[resonances.grid]
start_GHz = 2.8
stop_GHz = 2.9
points = 100
"#,
    );
    let out = spinmech(&["resonances", "--config", &cfg], &tmp.path().join("out"));
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("presure_GPa"), "stderr: {err}");
    assert!(err.contains("\"category\":\"config\""), "stderr: {err}");
}

#[test]
fn negative_pressure_fails_validation() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "neg.toml",
        r#"
kind = "resonances"

[resonances]
uniaxial = { axis = "110", pressure_GPa = -1.0 }

[resonances.grid]
start_GHz = 2.8
stop_GHz = 2.9
points = 100
"#,
    );
    let out = spinmech(&["resonances", "--config", &cfg], &tmp.path().join("out"));
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("pressure_GPa"), "stderr: {err}");
}

#[test]
fn missing_seed_with_noise_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "noseed.toml",
        r#"
kind = "calibrate"

[calibrate]
axes = ["100", "110", "111"]
pressures_GPa = [0.0, 0.5, 1.0]
sigma_f_MHz = 0.1
"#,
    );
    let out = spinmech(&["calibrate", "--config", &cfg], &tmp.path().join("out"));
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("seed"));
}

#[test]
fn kind_must_match_subcommand() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "s.toml", SENSITIVITY_CFG);
    let out = spinmech(&["inertial", "--config", &cfg], &tmp.path().join("out"));
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn validate_only_writes_nothing() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "s.toml", SENSITIVITY_CFG);
    let out_dir = tmp.path().join("out");
    let out = spinmech(
        &["sensitivity", "--config", &cfg, "--validate-only"],
        &out_dir,
    );
    assert!(out.status.success());
    assert!(!out_dir.exists());
}

#[test]
fn reruns_with_same_seed_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg_text = r#"
kind = "force_map"
seed = 11

[geometry]
shape = "cylindrical_pillar"
width_um = 0.1
length_um = 1.0

[force_map]
nx = 4
ny = 4
spacing_um = 0.25
nv_offset_um = 0.05

[force_map.field]
preset = "uniform"
fx_pN = 120.0
fy_pN = -30.0
"#;
    let cfg = write_config(tmp.path(), "fm.toml", cfg_text);
    let dir_a = tmp.path().join("a");
    let dir_b = tmp.path().join("b");
    assert!(spinmech(&["force-map", "--config", &cfg], &dir_a)
        .status
        .success());
    assert!(spinmech(&["force-map", "--config", &cfg], &dir_b)
        .status
        .success());
    let a = fs::read(dir_a.join("force_image.csv")).unwrap();
    let b = fs::read(dir_b.join("force_image.csv")).unwrap();
    assert_eq!(a, b, "same config + seed must give identical bytes");

    // Seed override changes the noise realization.
    let dir_c = tmp.path().join("c");
    assert!(
        spinmech(&["force-map", "--config", &cfg, "--seed", "12"], &dir_c)
            .status
            .success()
    );
    let c = fs::read(dir_c.join("force_image.csv")).unwrap();
    assert_ne!(a, c);
}

#[test]
fn inertial_round_trip_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "in.toml",
        r#"
kind = "inertial"

[geometry]
shape = "doubly_clamped_beam"
width_um = 0.1
thickness_um = 0.1
length_um = 5.0

[inertial]
n_modes = 8
reconstruction_points = 200
target_eta_mass_zg = 1.0

[[inertial.adsorbate.point_masses]]
mass_zg = 1.0
position_frac = 0.3

[[inertial.sites]]
x_frac = 0.0
z_frac = 1.0

[inertial.drive]
mode = 0
amplitude_nm = 1.0
phase = "out_of_phase"
"#,
    );
    let out_dir = tmp.path().join("out");
    let out = spinmech(&["inertial", "--config", &cfg], &out_dir);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );

    let modes = fs::read_to_string(out_dir.join("modes.csv")).unwrap();
    assert!(modes.starts_with("n,kl_root,freq_Hz,Q\n"));
    assert_eq!(modes.lines().count(), 9);
    let first_mode = modes.lines().nth(1).unwrap();
    let freq: f64 = first_mode.split(',').nth(2).unwrap().parse().unwrap();
    assert!((freq - 76.6e6).abs() < 1e6, "nu0 = {freq}");

    let recon = fs::read_to_string(out_dir.join("reconstruction.csv")).unwrap();
    assert!(recon.starts_with("x_um,mu1_est_kg_per_m,mu1_true_kg_per_m\n"));

    let sens: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("mass_sensitivity.json")).unwrap())
            .unwrap();
    let a0 = sens["required_amplitude_for_target_m"].as_f64().unwrap();
    assert!((a0 - 2.3068e-4).abs() < 1e-7, "A0 = {a0}");

    let pert: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("perturbation.json")).unwrap())
            .unwrap();
    assert_eq!(pert["sites"].as_array().unwrap().len(), 1);
    // Out-of-phase echo carries the frequency-shift quadrature.
    let theta_out = pert["sites"][0]["theta_out_rad"].as_f64().unwrap();
    assert!(theta_out.abs() > 0.0);
}

#[test]
fn calibrate_emits_records_and_fit() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "cal.toml",
        r#"
kind = "calibrate"
seed = 3

[calibrate]
axes = ["100", "110", "111"]
pressures_GPa = [0.0, 0.25, 0.5, 0.75, 1.0]
sigma_f_MHz = 0.05
sigma_int_MHz = 1.0
"#,
    );
    let out_dir = tmp.path().join("out");
    let out = spinmech(&["calibrate", "--config", &cfg], &out_dir);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );

    let records = fs::read_to_string(out_dir.join("records.csv")).unwrap();
    assert!(records.starts_with("axis,family,P_GPa,shift_MHz,splitting_MHz,sigma_MHz\n"));
    // 3 axes x 4 families x 5 pressures.
    assert_eq!(records.lines().count(), 61);

    let fit: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("fit_report.json")).unwrap())
            .unwrap();
    assert!(fit["converged"].as_bool().unwrap());
    let b = fit["b_MHz_per_GPa"].as_f64().unwrap();
    let c = fit["c_MHz_per_GPa"].as_f64().unwrap();
    assert!((b + 2.3).abs() < 0.5, "b = {b}");
    assert!((c - 3.5).abs() < 0.5, "c = {c}");
}
