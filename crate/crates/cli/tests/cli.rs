use std::path::Path;
use std::process::{Command, Output};

fn retromark(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_retromark"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap()
}

#[test]
fn missing_library_is_a_validation_error_naming_the_path() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "c.toml", "[lens]\nlibrary_path = \"nowhere/lib.csv\"\n");
    let out = retromark(&["synthesize", "--config", &cfg, "--out", "o"], tmp.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("nowhere/lib.csv"));
    assert!(!tmp.path().join("o").exists());
}

#[test]
fn malformed_library_reports_the_line() {
    let tmp = tempfile::tempdir().unwrap();
    write(
        tmp.path(),
        "lib.csv",
        "cell_id,r_mm,w_mm,g_mm,alpha_deg,phase_deg,magnitude\na,0.1,0.1,0.1,10,20,0.9\nb,0.1,0.1,0.1,10,oops,0.9\n",
    );
    let cfg = write(tmp.path(), "c.toml", "[lens]\nlibrary_path = \"lib.csv\"\n");
    let out = retromark(&["synthesize", "--config", &cfg], tmp.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("lib.csv:3"), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn reversed_scan_range_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "c.toml", "[focus_scan]\nz_start_mm = 30.0\nz_end_mm = 10.0\n");
    let out = retromark(&["focus-scan", "--config", &cfg], tmp.path());
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn unknown_keys_and_bad_flags_are_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "c.toml", "[lens]\nfocal_length = 20.0\n");
    assert_eq!(retromark(&["synthesize", "--config", &cfg], tmp.path()).status.code(), Some(1));
    assert_eq!(retromark(&["synthesize", "--threads", "0"], tmp.path()).status.code(), Some(1));
    assert_eq!(retromark(&["no-such-command"], tmp.path()).status.code(), Some(1));
}

#[test]
fn out_of_range_fmcw_target_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(
        tmp.path(),
        "c.toml",
        "[fmcw]\nnoise_floor_db = 0.0\ntargets = [{ range_m = 90.0, azimuth_deg = 0.0, rcs_dbsm = 0.0 }]\n",
    );
    let out = retromark(&["fmcw", "--config", &cfg], tmp.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("#0"));
}

#[test]
fn synthesize_reproduces_the_table_column() {
    let tmp = tempfile::tempdir().unwrap();
    let out = retromark(&["synthesize", "--out", "o"], tmp.path());
    assert!(out.status.success());
    let table = [
        (0, 11.28, 0.65),
        (1, 11.28, 0.65),
        (2, 30.26, 0.81),
        (3, 61.94, 0.85),
        (4, 107.79, 0.92),
        (5, 166.71, 0.96),
        (6, 238.93, 0.89),
        (7, 313.86, 0.73),
        (8, 45.18, 0.89),
        (9, 142.41, 0.96),
        (10, 243.44, 0.89),
    ];
    let csv = read(&tmp.path().join("o"), "quantized_lens.csv");
    for (j, phase, mag) in table {
        let row = csv
            .lines()
            .find(|l| l.starts_with(&format!("0,{j},")))
            .unwrap_or_else(|| panic!("cell (0,{j})"));
        let f: Vec<&str> = row.split(',').collect();
        assert_eq!(f[3].parse::<f64>().unwrap(), phase);
        assert_eq!(f[4].parse::<f64>().unwrap(), mag);
    }
    assert!(tmp.path().join("o/profile_n11.csv").exists());
    assert!(tmp.path().join("o/profile_n21.csv").exists());
}

#[test]
fn every_output_carries_the_same_config_hash() {
    let tmp = tempfile::tempdir().unwrap();
    assert!(retromark(&["link", "--out", "a"], tmp.path()).status.success());
    let dir = tmp.path().join("a");
    let headers: Vec<String> = ["link_report.txt", "link_report.csv", "snr_curve.csv"]
        .iter()
        .map(|f| read(&dir, f).lines().next().unwrap().to_string())
        .collect();
    assert!(headers[0].starts_with("# retromark link config_sha256="));
    assert_eq!(headers[0].len(), "# retromark link config_sha256=".len() + 64);
    assert!(headers.iter().all(|h| h == &headers[0]));

    // a different seed is a different resolved config
    assert!(retromark(&["link", "--out", "b", "--seed", "9"], tmp.path()).status.success());
    let other = read(&tmp.path().join("b"), "link_report.csv");
    assert_ne!(other.lines().next().unwrap(), headers[0]);
}

#[test]
fn link_report_lines() {
    let tmp = tempfile::tempdir().unwrap();
    assert!(retromark(&["link", "--out", "o"], tmp.path()).status.success());
    let csv = read(&tmp.path().join("o"), "link_report.csv");
    let value = |q: &str| -> f64 {
        csv.lines()
            .find(|l| l.starts_with(&format!("{q},")))
            .and_then(|l| l.split(',').nth(1))
            .unwrap()
            .parse()
            .unwrap()
    };
    assert!((value("detection_range") - 74.4).abs() < 0.1);
    assert!((value("sphere_rcs") + 26.20).abs() < 0.05);
    assert!((value("tag_gain_from_rcs") - 31.44).abs() < 0.02);
}

#[test]
fn focus_scan_slice_matches_plan() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "c.toml", "[focus_scan]\nsteps = 36\nslice_steps = 11\n");
    let out = retromark(&["focus-scan", "--slice", "--config", &cfg, "--out", "o"], tmp.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let dir = tmp.path().join("o");
    let summary = read(&dir, "focus_summary.txt");
    let peak: f64 = summary
        .lines()
        .find_map(|l| l.strip_prefix("peak_z_mm = "))
        .unwrap()
        .parse()
        .unwrap();
    assert!((18.0..=22.0).contains(&peak));
    // header comment + column header + 11 z rows × 85 x samples
    assert_eq!(read(&dir, "field_slice.csv").lines().count(), 2 + 11 * 85);
    let bin = std::fs::read(dir.join("field_slice.bin")).unwrap();
    let body_start = bin.iter().enumerate().filter(|(_, b)| **b == b'\n').nth(1).unwrap().0 + 1;
    assert_eq!(bin.len() - body_start, 11 * 85 * 4);
}

#[test]
fn recorded_frame_can_be_processed() {
    use retromark::fmcw::{synthesize_frame, ChirpConfig, NoiseSpec, PointTarget, VirtualArray};
    let tmp = tempfile::tempdir().unwrap();
    let cfg = ChirpConfig {
        chirps_per_tx: 2,
        ..ChirpConfig::default()
    };
    let arr = VirtualArray::for_config(&cfg).unwrap();
    let frame = synthesize_frame(&cfg, &arr, &[PointTarget::new(12.0, -15.0, 0.0)], NoiseSpec::off()).unwrap();
    let mut bytes = Vec::new();
    frame.write_binary(&mut bytes).unwrap();
    std::fs::write(tmp.path().join("frame.bin"), bytes).unwrap();
    let toml = write(
        tmp.path(),
        "c.toml",
        "[fmcw]\nchirps_per_tx = 2\nnoise_floor_db = 0.0\nframe_path = \"frame.bin\"\n",
    );
    let out = retromark(&["fmcw", "--config", &toml, "--out", "o"], tmp.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let peak = read(&tmp.path().join("o"), "peak.txt");
    let az: f64 = peak
        .lines()
        .find_map(|l| l.strip_prefix("peak_azimuth_deg = "))
        .unwrap()
        .parse()
        .unwrap();
    assert!((az + 15.0).abs() <= 2.0, "{peak}");
}
