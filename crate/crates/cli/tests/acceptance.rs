//! Acceptance checks, one line per criterion. Runs as a plain binary so the
//! report is printed by `cargo test` without `--nocapture`.

use std::collections::BTreeMap;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use retromark::fmcw::{
    process_frame, synthesize_frame, ChirpConfig, NoiseFloor, NoiseSpec, PointTarget, TargetStrength, VirtualArray,
};
use retromark::link::{self, SnrSample};
use retromark::propagation::{focal_scan, PropagationPlan};
use retromark::scatter::{
    bragg_angles, monostatic_amplitude, rcs_from_amplitude, sweep_rcs, sweep_stats, PatchPlaneSpec, TagAssembly,
};
use retromark::synthesis::{
    build_quantized_lens, lens_to_mask, required_phase, required_phase_unwrapped, table1_library, LensSpec, MaskMode,
};
use retromark::units::Dbsm;

type Outcome = Result<String, String>;

const WL_MM: f64 = 299.792458 / 78.5;

fn check(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn within(t: Instant, limit: Duration) -> Result<Duration, String> {
    let e = t.elapsed();
    check(e < limit, format!("took {e:.2?}, limit {limit:?}"))?;
    Ok(e)
}

fn e<E: std::fmt::Display>(x: E) -> String {
    x.to_string()
}

fn eq1_reproduction() -> Outcome {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let x = rng.gen_range(-50.0..50.0);
        let y = rng.gen_range(-50.0..50.0);
        let f = rng.gen_range(1.0..100.0);
        let wl = rng.gen_range(1.0..10.0);
        let direct = 2.0 * std::f64::consts::PI / wl * ((x * x + y * y + f * f as f64).sqrt() - f);
        let got = required_phase_unwrapped(x, y, f, wl).map_err(e)?;
        worst = worst.max((got - direct).abs() / direct.abs());
        let wrapped = required_phase(x, y, f, wl).map_err(e)?;
        let d = (wrapped - direct.to_degrees().rem_euclid(360.0)).abs();
        check(d.min(360.0 - d) <= 1e-9 * direct.to_degrees(), format!("wrapped phase off by {d}°"))?;
    }
    check(worst < 1e-9, format!("worst relative error {worst:e}"))?;
    let el = within(t, Duration::from_secs(1))?;
    Ok(format!("worst rel err {worst:.1e}, {el:.2?}"))
}

fn table1_round_trip() -> Outcome {
    let t = Instant::now();
    // (cell j, phase °, magnitude) for cells (0, j)
    let table = [
        (10, 243.44, 0.89),
        (9, 142.41, 0.96),
        (8, 45.18, 0.89),
        (7, 313.86, 0.73),
        (6, 238.93, 0.89),
        (5, 166.71, 0.96),
        (4, 107.79, 0.92),
        (3, 61.94, 0.85),
        (2, 30.26, 0.81),
        (1, 11.28, 0.65),
        (0, 11.28, 0.65),
    ];
    let lens = build_quantized_lens(&LensSpec::reference(), &table1_library()).map_err(e)?;
    for (j, phase, mag) in table {
        let c = lens.cell(0, j).ok_or(format!("no cell (0,{j})"))?;
        check(
            c.entry.phase_deg == phase && c.entry.magnitude == mag,
            format!("(0,{j}) got ({}, {})", c.entry.phase_deg, c.entry.magnitude),
        )?;
    }
    let el = within(t, Duration::from_secs(1))?;
    Ok(format!("11/11 cells exact, {el:.2?}"))
}

fn focusing() -> Outcome {
    let t = Instant::now();
    let lens = build_quantized_lens(&LensSpec::reference(), &table1_library()).map_err(e)?;
    let mask = lens_to_mask(&lens, 4, MaskMode::Ideal).map_err(e)?;
    let plan = PropagationPlan::for_grid(mask.grid(), PropagationPlan::DEFAULT_PADDING).map_err(e)?;
    let scan = focal_scan(&mask, 5.0, 40.0, 351, &plan).map_err(e)?;
    check((scan.peak_z_mm - 20.0).abs() <= 2.0, format!("peak at {} mm", scan.peak_z_mm))?;
    let el = within(t, Duration::from_secs(30))?;
    Ok(format!("peak at {:.2} mm, {el:.2?}", scan.peak_z_mm))
}

fn flat_plate() -> Outcome {
    let t = Instant::now();
    let area_m2 = 0.053 * 0.053;
    let wl_m = WL_MM * 1e-3;
    let oracle = 10.0 * (4.0 * std::f64::consts::PI * area_m2 * area_m2 / (wl_m * wl_m)).log10();
    let tag = TagAssembly::flat_plate((53.0, 53.0), 20.0, WL_MM, 0.432);
    let rcs = rcs_from_amplitude(monostatic_amplitude(&tag, 0.0).map_err(e)?, WL_MM).0;
    check((rcs - oracle).abs() < 0.05, format!("{rcs:.4} vs {oracle:.4} dBsm"))?;
    check((oracle - 8.32).abs() < 0.005, format!("oracle {oracle}"))?;
    let el = within(t, Duration::from_secs(10))?;
    Ok(format!("{rcs:.3} dBsm vs closed form {oracle:.3}, {el:.2?}"))
}

fn reference_tag() -> Result<TagAssembly, String> {
    let lens = build_quantized_lens(&LensSpec::reference(), &table1_library()).map_err(e)?;
    let mask = lens_to_mask(&lens, 4, MaskMode::Quantized).map_err(e)?;
    Ok(TagAssembly::new(mask, PatchPlaneSpec::default(), 20.0))
}

fn bragg_lobes() -> Outcome {
    let b = bragg_angles(2.48, 3.8190, &[1, -1]).map_err(e)?;
    for (_, a) in &b.angles {
        check((a.abs() - 50.3).abs() <= 0.2, format!("Bragg angle {a}"))?;
    }
    let tag = reference_tag()?;
    let bare = TagAssembly::patch_only(PatchPlaneSpec::default(), tag.wavelength_mm, tag.pitch_mm);
    let sweep = sweep_rcs(&bare, -90.0, 90.0, 1.0).map_err(e)?;
    let maxima = sweep.local_maxima();
    let mut hits = Vec::new();
    for (_, a) in &b.angles {
        let hit = maxima
            .iter()
            .copied()
            .min_by(|x, y| (x - a).abs().total_cmp(&(y - a).abs()))
            .ok_or("no local maxima")?;
        check((hit - a).abs() <= 1.0, format!("nearest maximum to {a:.2}° is {hit}°"))?;
        hits.push(hit);
    }
    Ok(format!(
        "±{:.2}°, patch-plane maxima at {:?}",
        b.angles[0].1, hits
    ))
}

fn retro_stabilization() -> Outcome {
    let t = Instant::now();
    let tag = reference_tag()?;
    let bare = TagAssembly::patch_only(PatchPlaneSpec::default(), tag.wavelength_mm, tag.pitch_mm);
    let full = sweep_rcs(&tag, -90.0, 90.0, 1.0).map_err(e)?;
    let patch = sweep_rcs(&bare, -90.0, 90.0, 1.0).map_err(e)?;
    let el = within(t, Duration::from_secs(300))?;
    let sf = sweep_stats(&full, 80.0).map_err(e)?;
    let sp = sweep_stats(&patch, 80.0).map_err(e)?;
    check(
        sf.variation_db < sp.variation_db,
        format!("variation tag {:.2} dB vs patch {:.2} dB", sf.variation_db, sp.variation_db),
    )?;
    let gain20 = full.at(20.0).ok_or("no 20° sample")? - patch.at(20.0).ok_or("no 20° sample")?;
    check(gain20 > 10.0, format!("tag exceeds patch at 20° by {gain20:.2} dB"))?;
    Ok(format!(
        "variation {:.1} < {:.1} dB, +{gain20:.1} dB at 20°, {el:.1?}",
        sf.variation_db, sp.variation_db
    ))
}

fn rcs_gain() -> Outcome {
    let wl = 3.8190e-3;
    let g1 = link::gain_from_rcs(Dbsm(3.54), wl).map_err(e)?.0;
    let g2 = link::gain_from_rcs(Dbsm(-13.06), wl).map_err(e)?.0;
    check((g1 - 31.44).abs() < 0.02 && (g2 - 23.14).abs() < 0.02, format!("{g1:.3}, {g2:.3}"))?;
    Ok(format!("{g1:.2} dBi, {g2:.2} dBi"))
}

fn sphere_calibration() -> Outcome {
    let s = link::sphere_rcs_inches(2.175).map_err(e)?;
    check((s.0 + 26.20).abs() <= 0.05, format!("sphere {}", s.0))?;
    let cal = link::calibrate(-61.37, s, 5.0).map_err(e)?;
    check(cal.apply(-61.37) == s, "calibrate/apply round trip is not exact")?;
    Ok(format!("{:.3} dBsm, round trip exact", s.0))
}

fn chirp_parameters() -> Outcome {
    let d = ChirpConfig::default().derived().map_err(e)?;
    check((d.bandwidth_ghz - 4.19).abs() <= 0.01, format!("B = {}", d.bandwidth_ghz))?;
    check((d.range_resolution_m * 100.0 - 3.58).abs() <= 0.01, format!("ΔR = {}", d.range_resolution_m))?;
    check((d.max_range_m - 73.3).abs() <= 0.5, format!("Rmax = {}", d.max_range_m))?;
    Ok(format!(
        "B {:.4} GHz, ΔR {:.3} cm, Rmax {:.2} m",
        d.bandwidth_ghz,
        d.range_resolution_m * 100.0,
        d.max_range_m
    ))
}

fn fmcw_round_trip() -> Outcome {
    let cfg = ChirpConfig::default();
    let arr = VirtualArray::for_config(&cfg).map_err(e)?;
    let frame = synthesize_frame(&cfg, &arr, &[PointTarget::new(20.0, 10.0, 0.0)], NoiseSpec::off()).map_err(e)?;
    let t = Instant::now();
    let map = process_frame(&frame).map_err(e)?;
    let el = within(t, Duration::from_secs(10))?;
    let p = retromark::fmcw::peak_and_snr(&map, NoiseFloor::Db(0.0)).map_err(e)?;
    let bin = cfg.derived().map_err(e)?.range_bin_m;
    check((p.range_m - 20.0).abs() <= bin, format!("range {}", p.range_m))?;
    check((p.azimuth_deg - 10.0).abs() <= 2.0, format!("azimuth {}", p.azimuth_deg))?;
    Ok(format!("{:.3} m, {:.2}°, processed in {el:.2?}", p.range_m, p.azimuth_deg))
}

fn range_factors() -> Outcome {
    let mut got = Vec::new();
    for (db, want) in [(20.44, 3.24), (14.06, 2.25), (9.03, 1.68), (6.02, 1.41)] {
        let f = link::range_factor(db);
        check((f - want).abs() <= 0.01, format!("{db} dB → {f}"))?;
        got.push(format!("{f:.3}"));
    }
    Ok(got.join(" / "))
}

fn detection_law() -> Outcome {
    let anchor = SnrSample::new(71.41, 10.73).map_err(e)?;
    let r = link::detection_range(anchor, 10.0).map_err(e)?.range_m;
    check((r - 74.4).abs() <= 0.1, format!("detection range {r}"))?;

    // closed-form curve
    let curve: Vec<SnrSample> = (0..20)
        .map(|k| {
            let range = 5.0 * 1.15f64.powi(k);
            SnrSample::new(range, link::snr_at_range(anchor, range).unwrap()).unwrap()
        })
        .collect();
    let s1 = link::fit_db_per_decade(&curve).map_err(e)?;

    // simulated: same target stepped through bin-centred ranges
    let cfg = ChirpConfig {
        chirps_per_tx: 1,
        ..ChirpConfig::default()
    };
    let arr = VirtualArray::for_config(&cfg).map_err(e)?;
    let bin = cfg.derived().map_err(e)?.range_bin_m;
    let mut sim = Vec::new();
    for k in [150usize, 250, 400, 600, 900, 1300, 1800] {
        let range = k as f64 * bin;
        let target = PointTarget {
            range_m: range,
            azimuth_deg: 0.0,
            strength: TargetStrength::Rcs(0.0),
        };
        let frame = synthesize_frame(&cfg, &arr, &[target], NoiseSpec::off()).map_err(e)?;
        let p = retromark::fmcw::peak_and_snr(&process_frame(&frame).map_err(e)?, NoiseFloor::Db(-100.0)).map_err(e)?;
        sim.push(SnrSample::new(range, p.snr_db).map_err(e)?);
    }
    let s2 = link::fit_db_per_decade(&sim).map_err(e)?;
    for s in [s1, s2] {
        check((s + 40.0).abs() <= 0.5, format!("slope {s:.3} dB/decade"))?;
    }
    Ok(format!("{r:.2} m, slopes {s1:.2} / {s2:.2} dB/decade"))
}

fn read_dir(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(dir)
        .unwrap()
        .map(|ent| {
            let p = ent.unwrap().path();
            (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap())
        })
        .collect()
}

fn determinism() -> Outcome {
    let tmp = tempfile::tempdir().map_err(e)?;
    let cfg = tmp.path().join("c.toml");
    std::fs::write(
        &cfg,
        r#"
[focus_scan]
steps = 36
slice_steps = 6

[rcs_sweep]
start_deg = -20.0
end_deg = 20.0
step_deg = 10.0
coverage_deg = 40.0

[fmcw]
chirps_per_tx = 2
noise_db = -60.0
targets = [{ range_m = 15.0, azimuth_deg = 5.0, rcs_dbsm = 0.0 }]

[[fmcw.marker_cases]]
label = "a"
window_m = [14.0, 16.0]
with = [{ range_m = 15.0, azimuth_deg = 5.0, rcs_dbsm = 0.0 }]
without = [{ range_m = 15.0, azimuth_deg = 5.0, rcs_dbsm = -20.0 }]
"#,
    )
    .map_err(e)?;
    let commands: [&[&str]; 6] = [
        &["synthesize"],
        &["focus-scan", "--slice"],
        &["rcs-sweep"],
        &["link"],
        &["calibrate"],
        &["fmcw"],
    ];
    let mut files = 0;
    for cmd in commands {
        let mut outputs = Vec::new();
        for (run, threads) in [("a", "1"), ("b", "2")] {
            let dir = tmp.path().join(format!("{}_{run}", cmd[0]));
            let status = Command::new(env!("CARGO_BIN_EXE_retromark"))
                .args(cmd)
                .args(["--config", cfg.to_str().unwrap(), "--seed", "17", "--threads", threads, "--out"])
                .arg(&dir)
                .output()
                .map_err(e)?;
            check(
                status.status.success(),
                format!("{} failed: {}", cmd[0], String::from_utf8_lossy(&status.stderr)),
            )?;
            outputs.push(read_dir(&dir));
        }
        check(!outputs[0].is_empty(), format!("{} wrote nothing", cmd[0]))?;
        check(outputs[0] == outputs[1], format!("{} outputs differ between runs", cmd[0]))?;
        files += outputs[0].len();
    }
    Ok(format!("6 subcommands, {files} files byte-identical across runs"))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 13] = [
        ("phase profile matches direct evaluation", eq1_reproduction),
        ("unit-cell table round trip", table1_round_trip),
        ("ideal lens focuses at 20 ± 2 mm", focusing),
        ("flat-plate RCS normalization", flat_plate),
        ("Bragg lobes of the patch plane", bragg_lobes),
        ("lens stabilizes RCS over ±40°", retro_stabilization),
        ("RCS to gain conversion", rcs_gain),
        ("sphere calibration", sphere_calibration),
        ("chirp derived parameters", chirp_parameters),
        ("FMCW synthesize/process round trip", fmcw_round_trip),
        ("range-factor table", range_factors),
        ("detection-range law", detection_law),
        ("CLI determinism", determinism),
    ];
    let mut failed = 0;
    for (k, (name, f)) in criteria.iter().enumerate() {
        let result = std::panic::catch_unwind(f).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        match result {
            Ok(detail) => println!("PASS  {:>2}  {name}: {detail}", k + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL  {:>2}  {name}: {why}", k + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
