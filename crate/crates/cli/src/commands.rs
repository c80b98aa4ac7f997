//! The subcommands. Each one validates everything it needs (inputs parsed,
//! geometry checked) before starting any heavy computation.

use std::io::Write;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::Serialize;

use retromark::fmcw::{
    self, AdcMode, ChirpConfig, NoiseFloor, NoiseSpec, PointTarget, ProcessOptions, RadarFrame, RangeAzimuthMap,
    VirtualArray,
};
use retromark::link::{self, ReportLine, SnrSample};
use retromark::propagation::{field_slice, focal_scan, PropagationPlan};
use retromark::scatter::{
    self, load_angle_response, sweep_angles, sweep_rcs, sweep_stats, LensLayer, PatchPlaneSpec, RcsSweep, Reflector, TagAssembly,
    TagModel,
};
use retromark::synthesis::{
    build_quantized_lens, lens_to_mask, load_library, sample_profile, table1_library, LensSpec, MaskMode,
    QuantizedLens, UnitCellEntry,
};
use retromark::units::{Dbi, Dbsm, Frequency};
use retromark::ApertureMask;

use crate::config::*;
use crate::output::{config_hash, OutputDir};
use crate::CliError;

pub struct Context {
    pub out_dir: PathBuf,
    pub seed: u64,
}

fn invalid<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Validation(e.to_string())
}

fn failed<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Runtime(e.to_string())
}

fn open_output<T: Serialize>(ctx: &Context, command: &str, hashed: &T) -> Result<OutputDir, CliError> {
    OutputDir::create(&ctx.out_dir, command, &config_hash(command, ctx.seed, hashed))
}

fn library(lens: &LensSection) -> Result<Vec<UnitCellEntry>, CliError> {
    match &lens.library_path {
        Some(p) => load_library(p).map_err(invalid),
        None => Ok(table1_library()),
    }
}

fn lens_spec(lens: &LensSection, cells: usize) -> Result<LensSpec, CliError> {
    LensSpec::new(cells, lens.pitch_mm, lens.focal_length_mm, lens.frequency_ghz).map_err(invalid)
}

fn lens_mask(lens: &LensSection) -> Result<(QuantizedLens, ApertureMask), CliError> {
    let q = build_quantized_lens(&lens_spec(lens, lens.cells)?, &library(lens)?).map_err(invalid)?;
    let mode = match lens.mask_mode {
        MaskModeName::Ideal => MaskMode::Ideal,
        MaskModeName::Quantized => MaskMode::Quantized,
    };
    let mask = lens_to_mask(&q, lens.samples_per_cell, mode).map_err(invalid)?;
    Ok((q, mask))
}

// ---- synthesize ----

#[derive(Serialize)]
struct SynthesizeHash<'a> {
    lens: &'a LensSection,
    synthesize: &'a SynthesizeSection,
}

fn ring_table(lens: &QuantizedLens) -> String {
    let mut s = String::from("cell     ideal_deg  phase_deg  magnitude  r_mm   w_mm   g_mm   alpha_deg\n");
    for j in (0..=lens.spec().half_extent()).rev() {
        let c = lens.cell(0, j).expect("cell inside the lens");
        let e = &c.entry;
        s.push_str(&format!(
            "{:<8} {:>9.2}  {:>9.2}  {:>9.2}  {:<5}  {:<5}  {:<5}  {}\n",
            format!("(0,{j})"),
            c.ideal_phase_deg,
            e.phase_deg,
            e.magnitude,
            e.r_mm,
            e.w_mm,
            e.g_mm,
            e.alpha_deg
        ));
    }
    s
}

pub fn synthesize(cfg: &ExperimentConfig, ctx: &Context) -> Result<(), CliError> {
    let lib = library(&cfg.lens)?;
    let spec = lens_spec(&cfg.lens, cfg.lens.cells)?;
    let profiles = cfg
        .synthesize
        .profile_cells
        .iter()
        .map(|&n| lens_spec(&cfg.lens, n))
        .collect::<Result<Vec<_>, _>>()?;

    let lens = build_quantized_lens(&spec, &lib).map_err(failed)?;
    let mut out = open_output(
        ctx,
        "synthesize",
        &SynthesizeHash {
            lens: &cfg.lens,
            synthesize: &cfg.synthesize,
        },
    )?;
    out.text("quantized_lens.csv", |w| lens.write_csv(w))?;
    for p in &profiles {
        out.text(&format!("profile_n{}.csv", p.cells_per_side()), |w| {
            writeln!(w, "i,j,x_mm,y_mm,phase_deg")?;
            for ((i, j), ph) in sample_profile(p) {
                let (x, y) = (i as f64 * p.pitch_mm(), j as f64 * p.pitch_mm());
                writeln!(w, "{i},{j},{x:.4},{y:.4},{ph:.6}")?;
            }
            Ok(())
        })?;
    }
    let table = ring_table(&lens);
    out.text("synthesis_summary.txt", |w| {
        writeln!(w, "cells_per_side = {}", spec.cells_per_side())?;
        writeln!(w, "pitch_mm = {}", spec.pitch_mm())?;
        writeln!(w, "focal_length_mm = {}", spec.focal_length_mm())?;
        writeln!(w, "frequency_ghz = {}", spec.design_frequency_ghz())?;
        writeln!(w, "library_entries = {}", lib.len())?;
        writeln!(w)?;
        w.write_all(table.as_bytes())
    })?;
    print!("{table}");
    Ok(())
}

// ---- focus-scan ----

#[derive(Serialize)]
struct FocusHash<'a> {
    slice: bool,
    lens: &'a LensSection,
    focus_scan: &'a FocusScanSection,
}

pub fn focus_scan(cfg: &ExperimentConfig, ctx: &Context, slice: bool) -> Result<(), CliError> {
    let fs = &cfg.focus_scan;
    if !(fs.z_start_mm > 0.0 && fs.z_end_mm > fs.z_start_mm) {
        return Err(CliError::Validation(format!(
            "focus_scan: need 0 < z_start_mm < z_end_mm, got [{}, {}]",
            fs.z_start_mm, fs.z_end_mm
        )));
    }
    if fs.steps < 2 || (slice && fs.slice_steps < 2) {
        return Err(CliError::Validation("focus_scan: steps and slice_steps must be at least 2".into()));
    }
    let (q, mask) = lens_mask(&cfg.lens)?;
    let plan = PropagationPlan::for_grid(mask.grid(), fs.padding).map_err(invalid)?;

    let scan = focal_scan(&mask, fs.z_start_mm, fs.z_end_mm, fs.steps, &plan).map_err(failed)?;
    let field = if slice {
        Some(field_slice(&mask, fs.z_start_mm, fs.z_end_mm, fs.slice_steps, &plan).map_err(failed)?)
    } else {
        None
    };

    let mut out = open_output(
        ctx,
        "focus-scan",
        &FocusHash {
            slice,
            lens: &cfg.lens,
            focus_scan: fs,
        },
    )?;
    out.text("focal_scan.csv", |w| scan.write_csv(w))?;
    let f = q.spec().focal_length_mm();
    let summary = format!(
        "design_focal_length_mm = {f}\npeak_z_mm = {:.4}\npeak_intensity = {:.6}\nwithin_2mm_of_design = {}\ngrid = {}x{} (padded {}x{}), pitch_mm = {:.4}\n",
        scan.peak_z_mm,
        scan.peak_intensity,
        (scan.peak_z_mm - f).abs() <= 2.0,
        plan.dim().0,
        plan.dim().1,
        plan.padded_dim().0,
        plan.padded_dim().1,
        plan.pitch_mm()
    );
    out.text("focus_summary.txt", |w| w.write_all(summary.as_bytes()))?;
    if let Some(s) = field {
        out.text("field_slice.csv", |w| s.write_csv(w))?;
        out.with_header("field_slice.bin", |w, h| {
            writeln!(w, "# {h}")?;
            s.write_binary(w)
        })?;
    }
    print!("{summary}");
    Ok(())
}

// ---- rcs-sweep ----

#[derive(Serialize)]
struct SweepHash<'a> {
    lens: &'a LensSection,
    rcs_sweep: &'a RcsSweepSection,
}

fn complex(c: [f64; 2]) -> Complex64 {
    Complex64::new(c[0], c[1])
}

pub fn rcs_sweep(cfg: &ExperimentConfig, ctx: &Context) -> Result<(), CliError> {
    let rs = &cfg.rcs_sweep;
    let (_, mask) = lens_mask(&cfg.lens)?;
    let patches = PatchPlaneSpec {
        patch_length_mm: rs.patch_length_mm,
        patch_width_mm: rs.patch_width_mm,
        period_mm: rs.period_mm,
        extent_mm: (rs.board_mm[0], rs.board_mm[1]),
        patch_reflection: complex(rs.patch_reflection),
        ground_reflection: complex(rs.ground_reflection),
    };
    let mut tag = TagAssembly::new(mask, patches, rs.separation_mm);
    tag.board_extent_mm = (rs.board_mm[0], rs.board_mm[1]);
    if rs.front_layer == FrontLayerName::Unity {
        tag.lens = LensLayer::Unity;
    }
    if rs.reflector == ReflectorName::Mirror {
        tag.reflector = Reflector::Mirror {
            extent_mm: tag.board_extent_mm,
            reflection: Complex64::new(1.0, 0.0),
        };
    }
    tag.padding = rs.padding;
    if let Some(p) = &rs.angle_response_path {
        tag.lens_angle_response = Some(load_angle_response(p).map_err(invalid)?);
    }
    TagModel::new(&tag).map_err(invalid)?;
    let bare = TagAssembly::patch_only(patches, tag.wavelength_mm, tag.pitch_mm);
    let angles = sweep_angles(rs.start_deg, rs.end_deg, rs.step_deg).map_err(invalid)?;
    let half = rs.coverage_deg / 2.0;
    if !(rs.coverage_deg >= 0.0 && -half >= angles[0] - 1e-9 && half <= angles[angles.len() - 1] + 1e-9) {
        return Err(CliError::Validation(format!(
            "rcs_sweep: coverage ±{half}° is not inside the sweep [{}, {}]",
            rs.start_deg, rs.end_deg
        )));
    }

    let tag_sweep = sweep_rcs(&tag, rs.start_deg, rs.end_deg, rs.step_deg).map_err(failed)?;
    let tag_stats = sweep_stats(&tag_sweep, rs.coverage_deg).map_err(failed)?;
    let patch = if rs.patch_only && rs.reflector == ReflectorName::Patches {
        let s = sweep_rcs(&bare, rs.start_deg, rs.end_deg, rs.step_deg).map_err(failed)?;
        let st = sweep_stats(&s, rs.coverage_deg).map_err(failed)?;
        Some((s, st))
    } else {
        None
    };
    let bragg = scatter::bragg_angles(rs.period_mm, tag.wavelength_mm, &[-1, 1]).map_err(failed)?;

    let mut out = open_output(
        ctx,
        "rcs-sweep",
        &SweepHash {
            lens: &cfg.lens,
            rcs_sweep: rs,
        },
    )?;
    let write_sweep = |out: &mut OutputDir, name: &str, s: &RcsSweep| out.text(name, |w| s.write_csv(w));
    write_sweep(&mut out, "rcs_tag.csv", &tag_sweep)?;
    if let Some((s, _)) = &patch {
        write_sweep(&mut out, "rcs_patch.csv", s)?;
    }
    let mut stats = Vec::new();
    writeln!(stats, "[tag]").map_err(failed)?;
    tag_stats.write_text(&mut stats).map_err(failed)?;
    if let Some((_, st)) = &patch {
        writeln!(stats, "\n[patch_only]").map_err(failed)?;
        st.write_text(&mut stats).map_err(failed)?;
        let local = patch.as_ref().map(|p| p.0.local_maxima()).unwrap_or_default();
        writeln!(stats, "local_maxima_deg = {local:?}").map_err(failed)?;
    }
    if rs.reflector == ReflectorName::Patches {
        writeln!(stats, "\n[bragg]").map_err(failed)?;
        for (m, a) in &bragg.angles {
            writeln!(stats, "order_{m}_deg = {a:.4}").map_err(failed)?;
        }
    }
    out.text("stats.txt", |w| w.write_all(&stats))?;
    let (bw, bh) = (rs.board_mm[0], rs.board_mm[1]);
    out.text("table3.csv", |w| {
        writeln!(w, "{}", scatter::TABLE_CSV_HEADER)?;
        scatter::write_table_row(&mut *w, "tag", &format!("{bw} x {bh} x {}", rs.separation_mm), &tag_stats)?;
        if let Some((_, st)) = &patch {
            scatter::write_table_row(&mut *w, "patch_only", &format!("{bw} x {bh}"), st)?;
        }
        Ok(())
    })?;
    print!("{}", String::from_utf8_lossy(&stats));
    Ok(())
}

// ---- link ----

pub fn link_budget(cfg: &ExperimentConfig, ctx: &Context) -> Result<(), CliError> {
    let l = &cfg.link;
    let wavelength_m = Frequency::from_ghz(l.frequency_ghz)
        .map(|f| f.wavelength())
        .map_err(invalid)?
        .meters();
    let anchor = SnrSample::new(l.anchor_range_m, l.anchor_snr_db).map_err(invalid)?;
    if !(l.curve_start_m > 0.0 && l.curve_end_m > l.curve_start_m && l.curve_points >= 2) {
        return Err(CliError::Validation(
            "link: need 0 < curve_start_m < curve_end_m and curve_points ≥ 2".into(),
        ));
    }
    let sphere = link::sphere_rcs_inches(l.sphere_diameter_in).map_err(invalid)?;

    let tag_gain = link::gain_from_rcs(Dbsm(l.tag_peak_rcs_dbsm), wavelength_m).map_err(failed)?;
    let patch_gain = link::gain_from_rcs(Dbsm(l.patch_peak_rcs_dbsm), wavelength_m).map_err(failed)?;
    let realized = link::realized_gain(l.loaded_s21_db, l.reference_s21_db, Dbi(l.patch_gain_dbi));
    let det = link::detection_range(anchor, l.threshold_db).map_err(failed)?;
    let ratio = (l.curve_end_m / l.curve_start_m).powf(1.0 / (l.curve_points - 1) as f64);
    let curve = (0..l.curve_points)
        .map(|k| {
            let r = l.curve_start_m * ratio.powi(k as i32);
            link::snr_at_range(anchor, r).and_then(|s| SnrSample::new(r, s))
        })
        .collect::<Result<Vec<_>, _>>()
        .map_err(failed)?;
    let slope = link::fit_db_per_decade(&curve).map_err(failed)?;

    let mut lines = vec![
        ReportLine::new("wavelength", wavelength_m * 1e3, "mm"),
        ReportLine::new("sphere_rcs", sphere.0, "dBsm"),
        ReportLine::new("tag_gain_from_rcs", tag_gain.0, "dBi"),
        ReportLine::new("patch_gain_from_rcs", patch_gain.0, "dBi"),
        ReportLine::new("gain_enhancement", tag_gain.0 - patch_gain.0, "dB"),
        ReportLine::new("realized_gain", realized.0, "dBi"),
        ReportLine::new("anchor_range", anchor.range_m, "m"),
        ReportLine::new("anchor_snr", anchor.snr_db, "dB"),
        ReportLine::new("detection_threshold", l.threshold_db, "dB"),
        ReportLine::new("detection_range", det.range_m, "m"),
        ReportLine::new("detection_range_extrapolated", if det.extrapolated { 1.0 } else { 0.0 }, "flag"),
        ReportLine::new("snr_curve_slope", slope, "dB/decade"),
    ];
    for d in &l.marker_deltas_db {
        lines.push(ReportLine::new(format!("range_factor_{d}db"), link::range_factor(*d), "ratio"));
    }

    let mut out = open_output(ctx, "link", l)?;
    out.text("link_report.txt", |w| link::write_report_text(w, &lines))?;
    out.text("link_report.csv", |w| link::write_report_csv(w, &lines))?;
    out.text("snr_curve.csv", |w| link::write_snr_curve(w, &curve))?;
    link::write_report_text(std::io::stdout().lock(), &lines).map_err(failed)?;
    Ok(())
}

// ---- calibrate ----

pub fn calibrate(cfg: &ExperimentConfig, ctx: &Context) -> Result<(), CliError> {
    let c = &cfg.calibrate;
    let sphere = link::sphere_rcs_inches(c.sphere_diameter_in).map_err(invalid)?;
    let cal = link::calibrate(c.sphere_received_db, sphere, c.range_m).map_err(invalid)?;
    let rows = c
        .targets
        .iter()
        .map(|t| {
            let r = t.range_m.unwrap_or(c.range_m);
            cal.apply_at(t.received_db, r).map(|rcs| (t, r, rcs))
        })
        .collect::<Result<Vec<_>, _>>()
        .map_err(invalid)?;

    let mut out = open_output(ctx, "calibrate", c)?;
    let text = format!(
        "sphere_diameter_in = {}\nsphere_rcs_dbsm = {:.4}\nsphere_received_db = {}\nreference_range_m = {}\nfactor_db = {:.4}\n",
        c.sphere_diameter_in,
        sphere.0,
        c.sphere_received_db,
        c.range_m,
        cal.factor_db()
    );
    out.text("calibration.txt", |w| w.write_all(text.as_bytes()))?;
    out.text("calibration.csv", |w| {
        writeln!(w, "name,received_db,range_m,rcs_dbsm")?;
        for (t, r, rcs) in &rows {
            writeln!(w, "{},{},{},{:.4}", t.name, t.received_db, r, rcs.0)?;
        }
        Ok(())
    })?;
    print!("{text}");
    for (t, _, rcs) in &rows {
        println!("{}: {rcs}", t.name);
    }
    Ok(())
}

// ---- fmcw ----

fn chirp_config(f: &FmcwSection) -> ChirpConfig {
    ChirpConfig {
        start_frequency_ghz: f.start_frequency_ghz,
        slope_mhz_per_us: f.slope_mhz_per_us,
        chirp_duration_us: f.chirp_duration_us,
        adc_start_us: f.adc_start_us,
        sample_rate_msps: f.sample_rate_msps,
        samples_per_chirp: f.samples_per_chirp,
        tx_count: f.tx_count,
        rx_count: f.rx_count,
        chirps_per_tx: f.chirps_per_tx,
        adc_mode: match f.adc_mode {
            AdcModeName::Real => AdcMode::Real,
            AdcModeName::Complex => AdcMode::Complex,
        },
    }
}

fn targets(entries: &[TargetEntry]) -> Vec<PointTarget> {
    entries
        .iter()
        .map(|t| PointTarget::new(t.range_m, t.azimuth_deg, t.rcs_dbsm))
        .collect()
}

fn check_scene(cfg: &ChirpConfig, scene: &[PointTarget], what: &str) -> Result<(), CliError> {
    fmcw::validate_targets(cfg, scene).map_err(|e| CliError::Validation(format!("fmcw {what}: {e}")))
}

fn noise_seed(base: u64, k: u64) -> u64 {
    base.wrapping_add(k)
}

pub fn fmcw_run(cfg: &ExperimentConfig, ctx: &Context) -> Result<(), CliError> {
    let f = &cfg.fmcw;
    let chirp = chirp_config(f);
    let derived = chirp.derived().map_err(invalid)?;
    let arr = VirtualArray::for_config(&chirp).map_err(invalid)?;
    let opts = ProcessOptions {
        angle_bins: f.angle_bins,
        hamming: f.hamming,
    };
    if opts.angle_bins < 2 {
        return Err(CliError::Validation("fmcw: angle_bins must be at least 2".into()));
    }
    if f.noise_floor_db.is_none() && f.noise_db.is_none() {
        return Err(CliError::Validation(
            "fmcw: SNR needs either noise_db (simulated sky frame) or noise_floor_db".into(),
        ));
    }
    if !(f.pgm_dynamic_db > 0.0) {
        return Err(CliError::Validation("fmcw: pgm_dynamic_db must be positive".into()));
    }
    let scene = targets(&f.targets);
    let recorded = match &f.frame_path {
        Some(p) => {
            let file = std::fs::File::open(p).map_err(|e| CliError::Validation(format!("{}: {e}", p.display())))?;
            Some(
                RadarFrame::read_binary(std::io::BufReader::new(file), chirp, arr.clone())
                    .map_err(|e| CliError::Validation(format!("{}: {e}", p.display())))?,
            )
        }
        None => {
            check_scene(&chirp, &scene, "targets")?;
            None
        }
    };
    let cases = f
        .marker_cases
        .iter()
        .map(|c| {
            if !(c.window_m[1] >= c.window_m[0]) {
                return Err(CliError::Validation(format!("fmcw marker case {}: window is reversed", c.label)));
            }
            let (w, wo) = (targets(&c.with), targets(&c.without));
            check_scene(&chirp, &w, &format!("marker case {} (with)", c.label))?;
            check_scene(&chirp, &wo, &format!("marker case {} (without)", c.label))?;
            Ok((c, w, wo))
        })
        .collect::<Result<Vec<_>, _>>()?;

    let noise = |k: u64| match f.noise_db {
        Some(db) => NoiseSpec::new(db, noise_seed(ctx.seed, k)),
        None => NoiseSpec::off(),
    };
    let map_of = |scene: &[PointTarget], k: u64| -> Result<RangeAzimuthMap, CliError> {
        let frame = fmcw::synthesize_frame(&chirp, &arr, scene, noise(k)).map_err(failed)?;
        fmcw::process_frame_with(&frame, opts).map_err(failed)
    };
    let map = match &recorded {
        Some(frame) => fmcw::process_frame_with(frame, opts).map_err(failed)?,
        None => map_of(&scene, 0)?,
    };
    let report = match f.noise_floor_db {
        Some(db) => fmcw::peak_and_snr(&map, NoiseFloor::Db(db)),
        None => {
            let sky = map_of(&[], 1)?;
            fmcw::peak_and_snr(&map, NoiseFloor::Sky(&sky))
        }
    }
    .map_err(failed)?;
    let mut deltas = Vec::new();
    for (k, (c, w, wo)) in cases.iter().enumerate() {
        let k = 2 + 2 * k as u64;
        let with = map_of(w, k)?;
        let without = map_of(wo, k + 1)?;
        let d = fmcw::marker_delta(&with, &without, (c.window_m[0], c.window_m[1])).map_err(failed)?;
        deltas.push((c, d));
    }

    let mut out = open_output(ctx, "fmcw", f)?;
    out.text("map.csv", |w| map.write_csv(w))?;
    out.with_header("map.pgm", |w, h| {
        let mut buf = Vec::new();
        map.write_pgm(&mut buf, f.pgm_dynamic_db)?;
        // a comment may follow the magic number
        w.write_all(&buf[..3])?;
        writeln!(w, "# {h}")?;
        w.write_all(&buf[3..])
    })?;
    let mut text = format!(
        "bandwidth_ghz = {:.4}\nrange_resolution_cm = {:.4}\nmax_range_m = {:.3}\nrange_bin_m = {:.5}\n",
        derived.bandwidth_ghz,
        derived.range_resolution_m * 100.0,
        derived.max_range_m,
        derived.range_bin_m
    );
    let mut buf = Vec::new();
    report.write_text(&mut buf).map_err(failed)?;
    text.push_str(&String::from_utf8_lossy(&buf));
    out.text("peak.txt", |w| w.write_all(text.as_bytes()))?;
    if !deltas.is_empty() {
        out.text("marker_delta.csv", |w| {
            writeln!(w, "label,window_start_m,window_end_m,delta_db,range_factor")?;
            for (c, d) in &deltas {
                writeln!(
                    w,
                    "{},{},{},{d:.4},{:.4}",
                    c.label,
                    c.window_m[0],
                    c.window_m[1],
                    link::range_factor(*d)
                )?;
            }
            Ok(())
        })?;
    }
    print!("{text}");
    for (c, d) in &deltas {
        println!("marker_delta[{}] = {d:.2} dB", c.label);
    }
    Ok(())
}

pub fn resolve_out_dir(flag: Option<&Path>, cfg: &ExperimentConfig) -> PathBuf {
    flag.map(Path::to_path_buf)
        .or_else(|| cfg.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("out"))
}
