//! Radar-equation bookkeeping: sphere calibration, RCS/gain conversion,
//! realized gain, and the R⁻⁴ SNR-versus-range law.

use std::io::Write;

use crate::error::{Error, Result};
use crate::units::{Dbi, Dbsm, MM_PER_INCH};

/// Receive gain assumed for the bare patch antenna.
pub const DEFAULT_PATCH_GAIN_DBI: f64 = 5.0;
/// SNR commonly taken as the reliable-detection threshold.
pub const DEFAULT_DETECTION_THRESHOLD_DB: f64 = 10.0;

fn positive(v: f64, what: &str) -> Result<f64> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(Error::domain(format!("{what} must be positive, got {v}")))
    }
}

/// Optical-region RCS `πa²` of a sphere of the given diameter.
pub fn sphere_rcs(diameter_mm: f64) -> Result<Dbsm> {
    let d_m = positive(diameter_mm, "sphere diameter")? * 1e-3;
    Ok(Dbsm::from_linear(std::f64::consts::PI * (d_m / 2.0).powi(2)))
}

pub fn sphere_rcs_inches(diameter_in: f64) -> Result<Dbsm> {
    sphere_rcs(diameter_in * MM_PER_INCH)
}

/// Additive dB offset from received power to RCS, valid at one range.
///
/// The anchor pair is kept rather than only its difference so the
/// calibration target maps back to its own RCS exactly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibrationFactor {
    pub known_rcs_dbsm: f64,
    pub received_power_db: f64,
    pub reference_range_m: f64,
}

pub fn calibrate(received_power_db: f64, known_rcs: Dbsm, range_m: f64) -> Result<CalibrationFactor> {
    positive(range_m, "calibration range")?;
    if !received_power_db.is_finite() || !known_rcs.0.is_finite() {
        return Err(Error::domain("calibration inputs must be finite"));
    }
    Ok(CalibrationFactor {
        known_rcs_dbsm: known_rcs.0,
        received_power_db,
        reference_range_m: range_m,
    })
}

impl CalibrationFactor {
    pub fn factor_db(&self) -> f64 {
        self.known_rcs_dbsm - self.received_power_db
    }

    /// RCS of a target received at the reference range.
    pub fn apply(&self, received_power_db: f64) -> Dbsm {
        Dbsm(self.known_rcs_dbsm + (received_power_db - self.received_power_db))
    }

    /// RCS of a target received at another range, correcting by `40·log10(R/R₀)`.
    pub fn apply_at(&self, received_power_db: f64, range_m: f64) -> Result<Dbsm> {
        positive(range_m, "range")?;
        Ok(Dbsm(self.apply(received_power_db).0 + range_correction_db(range_m, self.reference_range_m)))
    }
}

/// `40·log10(R/R₀)`.
pub fn range_correction_db(range_m: f64, reference_m: f64) -> f64 {
    40.0 * (range_m / reference_m).log10()
}

/// Monostatic RCS–gain relation `G = (σ − 20·log10 λ + 10·log10 4π) / 2`.
pub fn gain_from_rcs(rcs: Dbsm, wavelength_m: f64) -> Result<Dbi> {
    positive(wavelength_m, "wavelength")?;
    Ok(Dbi((rcs.0 - 20.0 * wavelength_m.log10() + 10.0 * (4.0 * std::f64::consts::PI).log10()) / 2.0))
}

pub fn rcs_from_gain(gain: Dbi, wavelength_m: f64) -> Result<Dbsm> {
    positive(wavelength_m, "wavelength")?;
    Ok(Dbsm(2.0 * gain.0 + 20.0 * wavelength_m.log10() - 10.0 * (4.0 * std::f64::consts::PI).log10()))
}

/// Gain from an S21 substitution measurement.
pub fn realized_gain(loaded_s21_db: f64, reference_s21_db: f64, receive_gain: Dbi) -> Dbi {
    Dbi(loaded_s21_db - reference_s21_db + receive_gain.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnrSample {
    pub range_m: f64,
    pub snr_db: f64,
}

impl SnrSample {
    pub fn new(range_m: f64, snr_db: f64) -> Result<Self> {
        positive(range_m, "anchor range")?;
        if !snr_db.is_finite() {
            return Err(Error::domain("anchor SNR must be finite"));
        }
        Ok(Self { range_m, snr_db })
    }
}

pub fn snr_at_range(anchor: SnrSample, range_m: f64) -> Result<f64> {
    positive(range_m, "range")?;
    Ok(anchor.snr_db - range_correction_db(range_m, anchor.range_m))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectionRange {
    pub range_m: f64,
    /// Set when the answer lies beyond twice the anchor range.
    pub extrapolated: bool,
}

/// Range at which the R⁻⁴ law brings the SNR down to `threshold_db`.
pub fn detection_range(anchor: SnrSample, threshold_db: f64) -> Result<DetectionRange> {
    if !threshold_db.is_finite() {
        return Err(Error::domain("threshold must be finite"));
    }
    let range_m = anchor.range_m * 10f64.powf((anchor.snr_db - threshold_db) / 40.0);
    Ok(DetectionRange {
        range_m,
        extrapolated: range_m > 2.0 * anchor.range_m,
    })
}

/// Detection-range ratio bought by an SNR gain of `delta_db`.
pub fn range_factor(delta_db: f64) -> f64 {
    10f64.powf(delta_db / 40.0)
}

/// Least-squares slope of SNR against `log10(range)`, in dB per decade.
pub fn fit_db_per_decade(samples: &[SnrSample]) -> Result<f64> {
    if samples.len() < 2 {
        return Err(Error::domain("need at least two samples to fit a slope"));
    }
    let n = samples.len() as f64;
    let xs: Vec<f64> = samples.iter().map(|s| s.range_m.log10()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = samples.iter().map(|s| s.snr_db).sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::domain("samples must span more than one range"));
    }
    let sxy: f64 = xs.iter().zip(samples).map(|(x, s)| (x - mx) * (s.snr_db - my)).sum();
    Ok(sxy / sxx)
}

pub fn write_snr_curve<W: Write>(mut out: W, samples: &[SnrSample]) -> std::io::Result<()> {
    writeln!(out, "range_m,snr_db")?;
    for s in samples {
        writeln!(out, "{:.4},{:.6}", s.range_m, s.snr_db)?;
    }
    Ok(())
}

/// One line of a link-budget report.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportLine {
    pub quantity: String,
    pub value: f64,
    pub unit: String,
}

impl ReportLine {
    pub fn new(quantity: impl Into<String>, value: f64, unit: impl Into<String>) -> Self {
        Self {
            quantity: quantity.into(),
            value,
            unit: unit.into(),
        }
    }
}

pub fn write_report_text<W: Write>(mut out: W, lines: &[ReportLine]) -> std::io::Result<()> {
    for l in lines {
        writeln!(out, "{} = {:.4} {}", l.quantity, l.value, l.unit)?;
    }
    Ok(())
}

pub fn write_report_csv<W: Write>(mut out: W, lines: &[ReportLine]) -> std::io::Result<()> {
    writeln!(out, "quantity,value,unit")?;
    for l in lines {
        writeln!(out, "{},{:.6},{}", l.quantity, l.value, l.unit)?;
    }
    Ok(())
}
