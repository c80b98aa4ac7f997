//! Design and evaluation toolkit for retrodirective metalens radar markers.
//!
//! Lengths are in millimetres and frequencies in GHz unless a name says
//! otherwise. Fields use the `e^{+jωt}` time convention, so a wave travelling
//! toward +z carries `e^{-jkz}`.

pub mod error;
pub mod field;
pub mod fmcw;
pub mod link;
pub mod propagation;
pub mod scatter;
pub mod synthesis;
pub mod units;

pub use error::{Error, Result};
pub use field::{ApertureMask, FieldGrid};
pub use fmcw::{
    marker_delta, peak_and_snr, process_frame, synthesize_frame, AdcMode, ChirpConfig, DerivedParams, NoiseFloor,
    NoiseSpec, PeakReport, PointTarget, RadarFrame, RangeAzimuthMap, VirtualArray,
};
pub use link::{
    calibrate, detection_range, gain_from_rcs, range_factor, rcs_from_gain, realized_gain, snr_at_range, sphere_rcs,
    CalibrationFactor, SnrSample,
};
pub use num_complex::Complex64;
pub use propagation::{
    far_field, field_slice, focal_scan, propagate, FieldSlice, FocalScanResult, PropagationPlan, Propagator,
};
pub use scatter::{
    bragg_angles, monostatic_amplitude, rcs_from_amplitude, sweep_rcs, sweep_stats, LensLayer, PatchPlaneSpec,
    RcsSweep, Reflector, SweepStats, TagAssembly, TagModel,
};
pub use synthesis::{
    build_quantized_lens, lens_to_mask, load_library, nearest_match, required_phase, table1_library, LensSpec,
    MaskMode, QuantizedLens, UnitCellEntry,
};
pub use units::{Dbi, Dbsm, Frequency, Wavelength};
