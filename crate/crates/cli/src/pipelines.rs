//! The five analysis pipelines behind the CLI subcommands.

use nalgebra::{Vector2, Vector3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde_json::json;

use spinmech_core::beam::{
    cantilever_profile, cantilever_stress_at, clamped_clamped_modes, fit_force_from_profile,
    BeamShape, BeamSite,
};
use spinmech_core::calibrate::{
    fit_susceptibilities, infer_force_from_odmr, recovery_trials, simulate_uniaxial, FitOptions,
    FitReport, RecoveryScenario, UniaxialScenario,
};
use spinmech_core::inertial::{
    echo_phase, interior_grid, mass_sensitivity, reconstruct_mass_distribution,
    required_drive_amplitude, spin_signal, AdsorbateDistribution, DriveProtocol, EchoPhase,
    GaussianBump, ModePerturbation,
};
use spinmech_core::sense::{
    gradient_crossover_grid, pillar_responsivity, reconstruct_force_image, sensitivity_report,
    shot_noise_sensitivity, simulate_pixel_measurements, MeasurementMode, PixelArray, Tiling,
    DEFAULT_OPTICAL_RESOLUTION,
};
use spinmech_core::spin::{
    frequency_grid, resonances_secular, stress_to_coupling, synthesize_odmr, MagneticEnvironment,
    NvOrientation, OdmrRequest,
};
use spinmech_core::units::*;

use crate::config::{parse_branch, ScenarioConfig, ScenarioKind};
use crate::error::CliError;
use crate::output::{Csv, CsvField, OutputDir};

fn numerical(e: impl std::fmt::Display) -> CliError {
    CliError::numerical(e.to_string())
}

/// Dispatch a validated scenario.
pub fn run(cfg: &ScenarioConfig, out: &mut OutputDir, seed: u64) -> Result<(), CliError> {
    match cfg.kind {
        ScenarioKind::Resonances => run_resonances(cfg, out),
        ScenarioKind::Calibrate => run_calibrate(cfg, out, seed),
        ScenarioKind::ForceMap => run_force_map(cfg, out, seed),
        ScenarioKind::Sensitivity => run_sensitivity(cfg, out),
        ScenarioKind::Inertial => run_inertial(cfg, out),
    }
}

fn run_resonances(cfg: &ScenarioConfig, out: &mut OutputDir) -> Result<(), CliError> {
    let block = cfg.resonances.as_ref().expect("validated");
    let params = cfg.material.susceptibility()?;
    let stress = block.stress_tensor()?;
    let field = MagneticEnvironment::new(Vector3::new(
        block.b_crystal_mT[0] * MT,
        block.b_crystal_mT[1] * MT,
        block.b_crystal_mT[2] * MT,
    ))
    .map_err(numerical)?;

    // Per-family resonance table.
    let mut table = Csv::new("family,f_minus_GHz,f_plus_GHz,shift_MHz,splitting_MHz");
    for fam in NvOrientation::all() {
        let coupling = stress_to_coupling(&stress, &params, fam);
        let r = resonances_secular(&coupling, field.axial_field(fam), &params);
        table.row(&[
            CsvField::Int(fam.index() as i64),
            CsvField::Float(r.f_minus / GHZ),
            CsvField::Float(r.f_plus / GHZ),
            CsvField::Float(r.shift / MHZ),
            CsvField::Float(r.splitting / MHZ),
        ]);
    }
    out.write("resonances.csv", &table.into_string())?;

    // Spectrum on the requested grid.
    let grid = frequency_grid(
        block.grid.start_GHz * GHZ,
        block.grid.stop_GHz * GHZ,
        block.grid.points,
    );
    let request = OdmrRequest {
        families: block.families(),
        stress,
        field,
        linewidth: block.linewidth_MHz * MHZ,
        contrast: block.contrast,
    };
    let spectrum = synthesize_odmr(&request, &params, &grid).map_err(numerical)?;
    for w in &spectrum.warnings {
        out.warn(w.clone());
    }
    let mut csv = Csv::new("frequency_GHz,intensity");
    for (f, i) in spectrum.frequencies.iter().zip(spectrum.intensity.iter()) {
        csv.row(&[CsvField::Float(f / GHZ), CsvField::Float(*i)]);
    }
    out.write("spectrum.csv", &csv.into_string())?;
    Ok(())
}

fn fit_report_json(report: &FitReport) -> serde_json::Value {
    json!({
        "a1_MHz_per_GPa": report.a1 / MHZ_PER_GPA,
        "a2_MHz_per_GPa": report.a2 / MHZ_PER_GPA,
        "b_MHz_per_GPa": report.b / MHZ_PER_GPA,
        "c_MHz_per_GPa": report.c / MHZ_PER_GPA,
        "sigma_a1_MHz_per_GPa": report.sigma_a1 / MHZ_PER_GPA,
        "sigma_a2_MHz_per_GPa": report.sigma_a2 / MHZ_PER_GPA,
        "sigma_b_MHz_per_GPa": report.sigma_b / MHZ_PER_GPA,
        "sigma_c_MHz_per_GPa": report.sigma_c / MHZ_PER_GPA,
        "covariance_MHz_per_GPa_sq": report
            .covariance
            .iter()
            .map(|row| row.iter().map(|v| v / (MHZ_PER_GPA * MHZ_PER_GPA)).collect::<Vec<_>>())
            .collect::<Vec<_>>(),
        "intrinsics": report.intrinsics.iter().map(|i| json!({
            "axis": i.axis.label(),
            "family": i.family,
            "mx_MHz": i.mx / MHZ,
            "my_MHz": i.my / MHZ,
            "delta_int_MHz": i.delta_int / MHZ,
            "offset_MHz": i.offset / MHZ,
        })).collect::<Vec<_>>(),
        "chi2": report.chi2,
        "residuals": report.residual_count,
        "parameters": report.parameter_count,
        "iterations": report.iterations,
        "converged": report.converged,
        "starts": report.starts_tried,
    })
}

fn run_calibrate(cfg: &ScenarioConfig, out: &mut OutputDir, seed: u64) -> Result<(), CliError> {
    let block = cfg.calibrate.as_ref().expect("validated");
    let params = cfg.material.susceptibility()?;
    let axes = block.axes()?;
    let pressures = block.pressures_pa()?;

    if !axes.is_empty() && !pressures.is_empty() {
        // One synthetic experiment over all axes.
        let mut records = Vec::new();
        for (k, &axis) in axes.iter().enumerate() {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (k as u64 + 1).wrapping_mul(0x9e37));
            let scen = UniaxialScenario::with_random_intrinsics(
                axis,
                pressures.clone(),
                block.sigma_int_MHz * MHZ,
                block.sigma_f_MHz * MHZ,
                &mut rng,
            )
            .map_err(numerical)?;
            records.extend(simulate_uniaxial(
                &scen,
                &params,
                seed.wrapping_add(k as u64),
            ));
        }

        let mut csv = Csv::new("axis,family,P_GPa,shift_MHz,splitting_MHz,sigma_MHz");
        for r in &records {
            csv.row(&[
                CsvField::Str(r.axis.label()),
                CsvField::Int(r.family.index() as i64),
                CsvField::Float(r.pressure / GPA),
                CsvField::Float(r.shift / MHZ),
                CsvField::Float(r.splitting / MHZ),
                CsvField::Float(r.sigma / MHZ),
            ]);
        }
        out.write("records.csv", &csv.into_string())?;

        let options = FitOptions {
            a1: params.a1,
            cofit_a1: block.cofit_a1,
            starts: block.fit_starts,
            seed,
            ..FitOptions::default()
        };
        if block.fit {
            let report = fit_susceptibilities(&records, &options).map_err(numerical)?;
            out.write_json("fit_report.json", &fit_report_json(&report))?;
        }

        if block.monte_carlo_trials > 0 {
            let scenario = RecoveryScenario {
                axes: axes.clone(),
                pressures: pressures.clone(),
                sigma_int: block.sigma_int_MHz * MHZ,
                sigma_f: block.sigma_f_MHz * MHZ,
            };
            let results =
                recovery_trials(&scenario, &params, &options, block.monte_carlo_trials, seed);
            let mut within = 0usize;
            let mut converged = 0usize;
            let mut errs: Vec<[f64; 3]> = Vec::new();
            for r in results.iter().flatten() {
                converged += 1;
                let e = [
                    (r.a2 - params.a2) / MHZ_PER_GPA,
                    (r.b - params.b) / MHZ_PER_GPA,
                    (r.c - params.c) / MHZ_PER_GPA,
                ];
                if e[0].abs() <= 0.2 && e[1].abs() <= 0.3 && e[2].abs() <= 0.3 {
                    within += 1;
                }
                errs.push(e);
            }
            let rms = |k: usize| {
                (errs.iter().map(|e| e[k] * e[k]).sum::<f64>() / errs.len().max(1) as f64).sqrt()
            };
            out.write_json(
                "coverage.json",
                &json!({
                    "trials": block.monte_carlo_trials,
                    "converged": converged,
                    "within_quoted_errors": within,
                    "coverage": within as f64 / block.monte_carlo_trials as f64,
                    "rms_error_MHz_per_GPa": { "a2": rms(0), "b": rms(1), "c": rms(2) },
                    "bounds_MHz_per_GPa": { "a2": 0.2, "b": 0.3, "c": 0.3 },
                }),
            )?;
        }
    }

    if let Some(fi) = &block.force_inference {
        let geom_block = cfg
            .geometry
            .as_ref()
            .ok_or_else(|| CliError::config("calibrate.force_inference requires [geometry]"))?;
        let geom = geom_block.build(&cfg.material)?;
        if geom.shape != BeamShape::RectangularCantilever {
            return Err(CliError::config(
                "calibrate.force_inference requires shape = \"rectangular_cantilever\"",
            ));
        }
        let site = BeamSite {
            x: fi.site_x_um * UM,
            z: fi.site_z_um * UM,
        };
        let branch = parse_branch(&fi.branch)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(0xf0));

        let mut cmp =
            Csv::new("F_true_nN,F_profile_nN,F_profile_sigma_nN,F_odmr_nN,F_odmr_sigma_nN");
        let mut profile_csv: Option<String> = None;
        for &f_nn in &fi.forces_nN {
            let f_true = f_nn * NN;
            // Optical bending profile with relative noise on the tip scale.
            let tip = cantilever_profile(f_true, &geom, geom.length).map_err(numerical)?;
            let noise = Normal::new(0.0, fi.profile_noise_frac * tip.abs().max(1e-15))
                .map_err(|e| CliError::numerical(e.to_string()))?;
            let samples: Vec<(f64, f64)> = (0..fi.profile_points)
                .map(|i| {
                    let x = geom.length * (i as f64 + 0.5) / fi.profile_points as f64;
                    let y = cantilever_profile(f_true, &geom, x).unwrap() + noise.sample(&mut rng);
                    (x, y)
                })
                .collect();
            let eb = fit_force_from_profile(&samples, &geom).map_err(numerical)?;

            // ODMR route: shift from the stress at the NV, with noise.
            let sigma_zz =
                cantilever_stress_at(f_true, &geom, site.x, site.z).map_err(numerical)?;
            let delta_f = branch.coefficient(&params) * sigma_zz
                + Normal::new(0.0, fi.delta_f_sigma_MHz * MHZ)
                    .map_err(|e| CliError::numerical(e.to_string()))?
                    .sample(&mut rng);
            let odmr = infer_force_from_odmr(
                delta_f,
                fi.delta_f_sigma_MHz * MHZ,
                &site,
                &geom,
                &params,
                branch,
            )
            .map_err(numerical)?;

            cmp.row(&[
                CsvField::Float(f_true / NN),
                CsvField::Float(eb.force / NN),
                CsvField::Float(eb.sigma / NN),
                CsvField::Float(odmr.force / NN),
                CsvField::Float(odmr.sigma / NN),
            ]);

            if profile_csv.is_none() {
                let mut p = Csv::new("x_um,deflection_nm");
                for &(x, y) in &samples {
                    p.row(&[CsvField::Float(x / UM), CsvField::Float(y / NM)]);
                }
                profile_csv = Some(p.into_string());
            }
        }
        out.write("force_comparison.csv", &cmp.into_string())?;
        if let Some(p) = profile_csv {
            out.write("profile.csv", &p)?;
        }
    }
    Ok(())
}

fn run_force_map(cfg: &ScenarioConfig, out: &mut OutputDir, seed: u64) -> Result<(), CliError> {
    let block = cfg.force_map.as_ref().expect("validated");
    let params = cfg.material.susceptibility()?;
    let geom = cfg
        .geometry
        .as_ref()
        .expect("validated")
        .build(&cfg.material)?;
    if geom.shape != BeamShape::CylindricalPillar {
        return Err(CliError::config(
            "force_map requires geometry.shape = \"cylindrical_pillar\"",
        ));
    }

    let array = match block.nv_pattern.as_str() {
        "diagonal" => PixelArray::with_diagonal_offsets(
            block.nx,
            block.ny,
            block.spacing_um * UM,
            geom,
            block.nv_offset_um * UM,
        ),
        "random" => PixelArray::with_random_offsets(
            block.nx,
            block.ny,
            block.spacing_um * UM,
            geom,
            block.nv_offset_um * UM,
            seed ^ 0xa11a,
        ),
        other => {
            return Err(CliError::config(format!(
                "force_map.nv_pattern '{other}' not one of diagonal, random"
            )))
        }
    }
    .map_err(numerical)?;

    let span_x = (block.nx.max(1) - 1) as f64 * block.spacing_um * UM;
    let span_y = (block.ny.max(1) - 1) as f64 * block.spacing_um * UM;
    let (cx, cy) = (span_x / 2.0, span_y / 2.0);
    let fx = block.field.fx_pN * PN;
    let fy = block.field.fy_pN * PN;
    let grad = block.field.gradient_pN_per_um * PN / UM;
    let field: Box<dyn Fn(f64, f64) -> Vector2<f64>> = match block.field.preset.as_str() {
        "uniform" => Box::new(move |_, _| Vector2::new(fx, fy)),
        "vortex" => Box::new(move |x, y| Vector2::new(-grad * (y - cy), grad * (x - cx))),
        "linear" => Box::new(move |x, _| Vector2::new(fx + grad * (x - cx), fy)),
        other => {
            return Err(CliError::config(format!(
                "force_map.field.preset '{other}' not one of uniform, vortex, linear"
            )))
        }
    };

    // Per-pixel frequency noise from the shot-noise chain at this dwell.
    let branch = parse_branch(&block.branch)?;
    let sigma_f = if block.noiseless {
        0.0
    } else {
        let r = pillar_responsivity(&array.geom, block.nv_offset_um * UM, 0.0, &params, branch)
            .map_err(numerical)?;
        let model = cfg.measurement.build()?;
        let eta = shot_noise_sensitivity(r, &model, MeasurementMode::Dc).map_err(numerical)?;
        r * eta / block.dwell_s.sqrt()
    };

    let shifts = simulate_pixel_measurements(&*field, &array, &params, sigma_f, seed);
    let tiling = match block.tiling.as_str() {
        "blocks" => Tiling::Blocks,
        "sliding" => Tiling::Sliding,
        other => {
            return Err(CliError::config(format!(
                "force_map.tiling '{other}' not one of blocks, sliding"
            )))
        }
    };
    let image =
        reconstruct_force_image(&array, &shifts, &params, sigma_f, tiling).map_err(numerical)?;

    // Optical-detection guard on the tip motion at the largest field value.
    let f_max = (0..block.ny)
        .flat_map(|j| (0..block.nx).map(move |i| (i, j)))
        .map(|(i, j)| {
            let p = array.position(i, j);
            field(p.x, p.y).norm()
        })
        .fold(0.0, f64::max);
    let r_tip = spinmech_core::beam::tip_compliance(&array.geom) * f_max;
    if r_tip > DEFAULT_OPTICAL_RESOLUTION {
        out.warn(format!(
            "tip displacement {r_tip:.3e} m at the peak field exceeds the optical resolution threshold"
        ));
    }

    let mut csv = Csv::new("I,J,Fx_pN,Fy_pN,sigma_Fx_pN,sigma_Fy_pN,mask");
    for e in &image.estimates {
        csv.row(&[
            CsvField::Int(e.index.0 as i64),
            CsvField::Int(e.index.1 as i64),
            CsvField::Float(e.force.x / PN),
            CsvField::Float(e.force.y / PN),
            CsvField::Float(e.sigma.x / PN),
            CsvField::Float(e.sigma.y / PN),
            CsvField::Int(e.masked as i64),
        ]);
    }
    out.write("force_image.csv", &csv.into_string())?;
    Ok(())
}

fn run_sensitivity(cfg: &ScenarioConfig, out: &mut OutputDir) -> Result<(), CliError> {
    let block = cfg.sensitivity.as_ref().expect("validated");
    let params = cfg.material.susceptibility()?;
    let geom = cfg
        .geometry
        .as_ref()
        .expect("validated")
        .build(&cfg.material)?;
    let model = cfg.measurement.build()?;
    let branch = parse_branch(&block.branch)?;

    let report = sensitivity_report(
        &geom,
        block.nv_offset_um * UM,
        block.nv_depth_um * UM,
        &params,
        branch,
        &model,
        block.optical_resolution_nm * NM,
    )
    .map_err(numerical)?;
    for w in &report.warnings {
        out.warn(w.clone());
    }

    out.write_json(
        "sensitivity.json",
        &json!({
            "responsivity_MHz_per_uN": report.responsivity / (MHZ / UN),
            "eta_dc_pN_per_sqrtHz": report.eta_dc / PN,
            "eta_ac_pN_per_sqrtHz": report.eta_ac / PN,
            "f_min_dc_pN": report.f_min_dc / PN,
            "f_min_ac_pN": report.f_min_ac / PN,
            "averaging_time_s": model.averaging_time,
            "ac_band_Hz": [report.ac_band.0, report.ac_band.1],
            "tip_compliance_m_per_N": report.tip_compliance,
            "r_tip_at_f_min_m": report.r_tip_at_f_min,
            "gradient_crossover_mT_per_um": report.gradient_crossover / (MT / UM),
        }),
    )?;

    let c = &block.contour;
    let grid = gradient_crossover_grid(
        &params,
        (c.w_min_um * UM, c.w_max_um * UM),
        (c.h_min_um * UM, c.h_max_um * UM),
        c.points_w,
        c.points_h,
    )
    .map_err(numerical)?;
    let mut csv = Csv::new("w_um,h_um,gradB_mT_per_um");
    for (w, h, g) in grid {
        csv.row(&[
            CsvField::Float(w / UM),
            CsvField::Float(h / UM),
            CsvField::Float(g / (MT / UM)),
        ]);
    }
    out.write("gradient_contour.csv", &csv.into_string())?;
    Ok(())
}

fn run_inertial(cfg: &ScenarioConfig, out: &mut OutputDir) -> Result<(), CliError> {
    let block = cfg.inertial.as_ref().expect("validated");
    let params = cfg.material.susceptibility()?;
    let geom = cfg
        .geometry
        .as_ref()
        .expect("validated")
        .build(&cfg.material)?;
    if geom.shape != BeamShape::DoublyClampedBeam {
        return Err(CliError::config(
            "inertial requires geometry.shape = \"doubly_clamped_beam\"",
        ));
    }
    let basis = clamped_clamped_modes(&geom, block.n_modes, block.q_factor).map_err(numerical)?;
    let l = geom.length;

    let mut mode_csv = Csv::new("n,kl_root,freq_Hz,Q");
    for n in 0..basis.len() {
        mode_csv.row(&[
            CsvField::Int(n as i64),
            CsvField::Float(basis.kl_root(n)),
            CsvField::Float(basis.frequency(n)),
            CsvField::Float(basis.q_factor(n)),
        ]);
    }
    out.write("modes.csv", &mode_csv.into_string())?;

    // Adsorbate.
    let mut adsorbate = AdsorbateDistribution::empty();
    for p in &block.adsorbate.point_masses {
        adsorbate = adsorbate
            .with_point_mass(p.mass_zg * ZG, p.position_frac * l)
            .map_err(numerical)?;
    }
    for g in &block.adsorbate.gaussians {
        adsorbate = adsorbate
            .with_gaussian(GaussianBump {
                mass: g.mass_zg * ZG,
                center: g.center_frac * l,
                width: g.width_frac * l,
            })
            .map_err(numerical)?;
    }

    let perturbation =
        ModePerturbation::evaluate(&adsorbate, &basis, block.n_modes).map_err(numerical)?;
    if perturbation.first_order_warning {
        out.warn(format!(
            "adsorbate/beam mass ratio {:.3e} exceeds the 5% first-order guard",
            perturbation.mass_ratio
        ));
    }

    // Spin readout per site under the configured drive.
    let drive_block = block.drive.as_ref();
    let mut site_reports = Vec::new();
    if let Some(d) = drive_block {
        let phase = match d.phase.as_str() {
            "in_phase" => EchoPhase::InPhase,
            "out_of_phase" => EchoPhase::OutOfPhase,
            other => {
                return Err(CliError::config(format!(
                    "inertial.drive.phase '{other}' not one of in_phase, out_of_phase"
                )))
            }
        };
        if d.mode >= block.n_modes {
            return Err(CliError::config(
                "inertial.drive.mode must be below n_modes",
            ));
        }
        let drive = DriveProtocol::new(d.mode, d.amplitude_nm * NM, phase, d.periods);
        for (i, s) in block.sites.iter().enumerate() {
            let site = BeamSite {
                x: s.x_frac * l,
                z: s.z_frac * geom.thickness / 2.0,
            };
            let signal =
                spin_signal(&site, &basis, &perturbation, &drive, &params).map_err(numerical)?;
            site_reports.push(json!({
                "site": i,
                "x_um": site.x / UM,
                "z_um": site.z / UM,
                "a_cos_Hz": signal.a_cos,
                "a_sin_Hz": signal.a_sin,
                "theta_in_rad": echo_phase(&signal, EchoPhase::InPhase, d.periods),
                "theta_out_rad": echo_phase(&signal, EchoPhase::OutOfPhase, d.periods),
            }));
        }
    }

    let couplings: Vec<Vec<f64>> = (0..block.n_modes)
        .map(|n| {
            (0..block.n_modes)
                .map(|m| perturbation.couplings[(n, m)])
                .collect()
        })
        .collect();
    out.write_json(
        "perturbation.json",
        &json!({
            "n_modes": block.n_modes,
            "frequencies_Hz": (0..basis.len()).map(|n| basis.frequency(n)).collect::<Vec<_>>(),
            "shift_ratios": perturbation.shift_ratios,
            "couplings": couplings,
            "mass_ratio": perturbation.mass_ratio,
            "sites": site_reports,
        }),
    )?;

    // Reconstruction against the configured truth.
    let grid = interior_grid(l, block.reconstruction_points);
    let recon = reconstruct_mass_distribution(
        &perturbation.shift_ratios,
        &perturbation.couplings,
        &basis,
        &grid,
    )
    .map_err(numerical)?;
    let mut csv = Csv::new("x_um,mu1_est_kg_per_m,mu1_true_kg_per_m");
    for (x, est) in recon.positions.iter().zip(recon.estimate.iter()) {
        csv.row(&[
            CsvField::Float(x / UM),
            CsvField::Float(*est),
            CsvField::Float(adsorbate.smooth_density(*x)),
        ]);
    }
    out.write("reconstruction.csv", &csv.into_string())?;
    if recon.min_value < 0.0 {
        out.warn(format!(
            "reconstruction has negative excursions (min {:.3e} kg/m over {:.1}% of the grid)",
            recon.min_value,
            recon.negative_fraction * 100.0
        ));
    }

    // Mass sensitivity at the first site, plus the drive amplitude needed
    // for a target sensitivity when requested.
    let model = cfg.measurement.build()?;
    let site0 = BeamSite {
        x: block.sites[0].x_frac * l,
        z: block.sites[0].z_frac * geom.thickness / 2.0,
    };
    let amplitude = drive_block.map(|d| d.amplitude_nm * NM).unwrap_or(1.0 * NM);
    let mode = drive_block.map(|d| d.mode).unwrap_or(0);
    let ms =
        mass_sensitivity(&basis, &site0, mode, amplitude, &model, &params).map_err(numerical)?;
    let mut sens = json!({
        "mode": mode,
        "drive_amplitude_m": amplitude,
        "phi_Hz": ms.phi,
        "eta_shift_per_sqrtHz": ms.eta_shift,
        "eta_mass_zg_per_sqrtHz": ms.eta_mass / ZG,
        "mass_min_zg": ms.mass_min / ZG,
        "beam_mass_kg": basis.mass(),
        "beam_volume_um3": geom.width * geom.thickness * geom.length / (UM * UM * UM),
        "resolution_alpha_m": spinmech_core::inertial::imaging_resolution(l, block.n_modes),
    });
    if let Some(target) = block.target_eta_mass_zg {
        let a0 = required_drive_amplitude(&basis, &site0, mode, &model, &params, target * ZG)
            .map_err(numerical)?;
        sens["required_amplitude_for_target_m"] = json!(a0);
        sens["target_eta_mass_zg"] = json!(target);
    }
    out.write_json("mass_sensitivity.json", &sens)?;
    Ok(())
}
