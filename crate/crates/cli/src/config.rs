//! Experiment configuration. One TOML file may hold every section; each
//! subcommand reads its own and falls back to defaults for anything missing.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub output_dir: Option<PathBuf>,
    pub lens: LensSection,
    pub synthesize: SynthesizeSection,
    pub focus_scan: FocusScanSection,
    pub rcs_sweep: RcsSweepSection,
    pub link: LinkSection,
    pub calibrate: CalibrateSection,
    pub fmcw: FmcwSection,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        let mut cfg: Self = toml::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))?;
        cfg.resolve_paths(path.parent().unwrap_or(Path::new(".")));
        Ok(cfg)
    }

    /// Relative input paths are taken relative to the config file.
    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut Option<PathBuf>| {
            if let Some(path) = p {
                if path.is_relative() {
                    *path = base.join(&*path);
                }
            }
        };
        fix(&mut self.lens.library_path);
        fix(&mut self.rcs_sweep.angle_response_path);
        fix(&mut self.fmcw.frame_path);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MaskModeName {
    Ideal,
    Quantized,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LensSection {
    pub cells: usize,
    pub pitch_mm: f64,
    pub focal_length_mm: f64,
    pub frequency_ghz: f64,
    /// Unit-cell library CSV; the built-in table when absent.
    pub library_path: Option<PathBuf>,
    pub samples_per_cell: usize,
    pub mask_mode: MaskModeName,
}

impl Default for LensSection {
    fn default() -> Self {
        Self {
            cells: 21,
            pitch_mm: 1.728,
            focal_length_mm: 20.0,
            frequency_ghz: 78.5,
            library_path: None,
            samples_per_cell: 4,
            mask_mode: MaskModeName::Ideal,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthesizeSection {
    /// Lens sizes to write phase profiles for.
    pub profile_cells: Vec<usize>,
}

impl Default for SynthesizeSection {
    fn default() -> Self {
        Self {
            profile_cells: vec![11, 21],
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FocusScanSection {
    pub z_start_mm: f64,
    pub z_end_mm: f64,
    pub steps: usize,
    pub padding: f64,
    pub slice_steps: usize,
}

impl Default for FocusScanSection {
    fn default() -> Self {
        Self {
            z_start_mm: 5.0,
            z_end_mm: 40.0,
            steps: 351,
            padding: 2.0,
            slice_steps: 141,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FrontLayerName {
    /// The synthesized metalens.
    Lens,
    /// Fully transparent, unbounded.
    Unity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReflectorName {
    Patches,
    /// Perfect mirror covering the board.
    Mirror,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RcsSweepSection {
    pub front_layer: FrontLayerName,
    pub reflector: ReflectorName,
    pub start_deg: f64,
    pub end_deg: f64,
    pub step_deg: f64,
    pub coverage_deg: f64,
    pub separation_mm: f64,
    pub board_mm: [f64; 2],
    pub patch_length_mm: f64,
    pub patch_width_mm: f64,
    pub period_mm: f64,
    /// Complex coefficients as `[re, im]`.
    pub patch_reflection: [f64; 2],
    pub ground_reflection: [f64; 2],
    pub padding: f64,
    /// CSV `theta_deg,transmission` applied on both passes through the lens.
    pub angle_response_path: Option<PathBuf>,
    /// Also sweep the bare patch plane.
    pub patch_only: bool,
}

impl Default for RcsSweepSection {
    fn default() -> Self {
        Self {
            front_layer: FrontLayerName::Lens,
            reflector: ReflectorName::Patches,
            start_deg: -90.0,
            end_deg: 90.0,
            step_deg: 1.0,
            coverage_deg: 80.0,
            separation_mm: 20.0,
            board_mm: [53.0, 53.0],
            patch_length_mm: 0.84,
            patch_width_mm: 1.28,
            period_mm: 2.48,
            patch_reflection: [1.0, 0.0],
            ground_reflection: [-1.0, 0.0],
            padding: 2.0,
            angle_response_path: None,
            patch_only: true,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LinkSection {
    pub frequency_ghz: f64,
    pub sphere_diameter_in: f64,
    pub tag_peak_rcs_dbsm: f64,
    pub patch_peak_rcs_dbsm: f64,
    pub loaded_s21_db: f64,
    pub reference_s21_db: f64,
    pub patch_gain_dbi: f64,
    pub anchor_range_m: f64,
    pub anchor_snr_db: f64,
    pub threshold_db: f64,
    pub curve_start_m: f64,
    pub curve_end_m: f64,
    pub curve_points: usize,
    pub marker_deltas_db: Vec<f64>,
}

impl Default for LinkSection {
    fn default() -> Self {
        Self {
            frequency_ghz: 78.5,
            sphere_diameter_in: 2.175,
            tag_peak_rcs_dbsm: 3.54,
            patch_peak_rcs_dbsm: -13.06,
            loaded_s21_db: -50.0,
            reference_s21_db: -58.58,
            patch_gain_dbi: 5.0,
            anchor_range_m: 71.41,
            anchor_snr_db: 10.73,
            threshold_db: 10.0,
            curve_start_m: 5.0,
            curve_end_m: 150.0,
            curve_points: 30,
            marker_deltas_db: vec![20.44, 14.06, 9.03, 6.02],
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrationTarget {
    pub name: String,
    pub received_db: f64,
    /// Defaults to the calibration range.
    pub range_m: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CalibrateSection {
    pub sphere_diameter_in: f64,
    pub sphere_received_db: f64,
    pub range_m: f64,
    pub targets: Vec<CalibrationTarget>,
}

impl Default for CalibrateSection {
    fn default() -> Self {
        Self {
            sphere_diameter_in: 2.175,
            sphere_received_db: -60.0,
            range_m: 5.0,
            targets: vec![CalibrationTarget {
                name: "sphere".into(),
                received_db: -60.0,
                range_m: None,
            }],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AdcModeName {
    Real,
    Complex,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetEntry {
    pub range_m: f64,
    pub azimuth_deg: f64,
    pub rcs_dbsm: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MarkerCase {
    pub label: String,
    pub window_m: [f64; 2],
    pub with: Vec<TargetEntry>,
    pub without: Vec<TargetEntry>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FmcwSection {
    pub start_frequency_ghz: f64,
    pub slope_mhz_per_us: f64,
    pub chirp_duration_us: f64,
    pub adc_start_us: f64,
    pub sample_rate_msps: f64,
    pub samples_per_chirp: usize,
    pub tx_count: usize,
    pub rx_count: usize,
    pub chirps_per_tx: usize,
    pub adc_mode: AdcModeName,
    pub angle_bins: usize,
    pub hamming: bool,
    /// Per-sample noise power; noise is off when absent.
    pub noise_db: Option<f64>,
    /// Constant floor for the SNR; otherwise a target-free frame is simulated.
    pub noise_floor_db: Option<f64>,
    pub pgm_dynamic_db: f64,
    pub targets: Vec<TargetEntry>,
    /// Recorded frame to process instead of synthesizing one.
    pub frame_path: Option<PathBuf>,
    pub marker_cases: Vec<MarkerCase>,
}

impl Default for FmcwSection {
    fn default() -> Self {
        Self {
            start_frequency_ghz: 76.81,
            slope_mhz_per_us: 10.235,
            chirp_duration_us: 430.0,
            adc_start_us: 6.0,
            sample_rate_msps: 10.0,
            samples_per_chirp: 4096,
            tx_count: 4,
            rx_count: 4,
            chirps_per_tx: 128,
            adc_mode: AdcModeName::Real,
            angle_bins: 181,
            hamming: true,
            noise_db: None,
            noise_floor_db: None,
            pgm_dynamic_db: 60.0,
            targets: vec![TargetEntry {
                range_m: 20.0,
                azimuth_deg: 0.0,
                rcs_dbsm: 0.0,
            }],
            frame_path: None,
            marker_cases: Vec::new(),
        }
    }
}
