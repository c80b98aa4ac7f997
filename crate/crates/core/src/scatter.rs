//! Monostatic scattering of the two-layer cat's-eye tag and of the bare patch
//! plane, under a scalar physical-optics model.
//!
//! The tag chain for incidence angle θ is: tilted unit plane wave → lens →
//! propagate to the patch plane → reflection mask → propagate back → lens →
//! projection onto the incident wave. The return trip runs in a mirrored frame
//! (z flipped, x unchanged), so it reuses the forward propagator, and the wave
//! heading back toward the radar is the one whose transverse phase matches the
//! incident `e^{-jk·sinθ·x}`. All propagation happens on a periodic window that
//! is `padding` times the tag extent; nothing is cropped between the passes.

use std::io::Write;
use std::path::Path;

use ndarray::{Array2, Axis};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::field::ApertureMask;
use crate::propagation::{fft_wavenumber, transfer, Fft2};
use crate::units::Dbsm;

/// RCS values below this are reported as this floor.
pub const RCS_FLOOR_DBSM: f64 = -200.0;

/// Periodic patch-antenna plane behind the lens.
///
/// Patches are centred on the optical axis on a square lattice; only patches
/// that fit entirely inside the plane are placed. The resonant length runs
/// along y (E-plane, vertical polarization) and the width along x, the azimuth
/// axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PatchPlaneSpec {
    pub patch_length_mm: f64,
    pub patch_width_mm: f64,
    pub period_mm: f64,
    pub extent_mm: (f64, f64),
    pub patch_reflection: Complex64,
    /// Reflection of the grounded area between patches.
    pub ground_reflection: Complex64,
}

impl Default for PatchPlaneSpec {
    fn default() -> Self {
        Self {
            patch_length_mm: 0.84,
            patch_width_mm: 1.28,
            period_mm: 2.48,
            extent_mm: (53.0, 53.0),
            patch_reflection: Complex64::new(1.0, 0.0),
            ground_reflection: Complex64::new(-1.0, 0.0),
        }
    }
}

impl PatchPlaneSpec {
    pub fn validate(&self) -> Result<()> {
        let dims = [self.patch_length_mm, self.patch_width_mm];
        if dims.iter().any(|d| !(d.is_finite() && *d > 0.0)) {
            return Err(Error::domain("patch dimensions must be positive"));
        }
        if !(self.period_mm > self.patch_length_mm.max(self.patch_width_mm)) {
            return Err(Error::domain(format!(
                "patch period {} mm must exceed the patch dimensions",
                self.period_mm
            )));
        }
        check_extent(self.extent_mm, "patch plane")
    }

    /// Patch-centre offsets (multiples of the period) along one axis.
    fn lattice(&self, extent: f64, size: f64) -> Vec<f64> {
        let max_i = ((extent / 2.0 - size / 2.0) / self.period_mm + 1e-9).floor() as i64;
        (-max_i..=max_i).map(|i| i as f64 * self.period_mm).collect()
    }
}

fn check_extent(extent: (f64, f64), what: &str) -> Result<()> {
    if !(extent.0.is_finite() && extent.1.is_finite() && extent.0 > 0.0 && extent.1 > 0.0) {
        return Err(Error::domain(format!("{what} extent must be positive, got {extent:?}")));
    }
    Ok(())
}

/// Reflecting layer at the focal plane.
#[derive(Debug, Clone, PartialEq)]
pub enum Reflector {
    Patches(PatchPlaneSpec),
    /// Uniform rectangular mirror.
    Mirror { extent_mm: (f64, f64), reflection: Complex64 },
}

impl Reflector {
    fn extent(&self) -> (f64, f64) {
        match self {
            Reflector::Patches(p) => p.extent_mm,
            Reflector::Mirror { extent_mm, .. } => *extent_mm,
        }
    }
}

/// Front layer of the tag.
#[derive(Debug, Clone, PartialEq)]
pub enum LensLayer {
    /// No front layer: the reflector is illuminated directly.
    Absent,
    /// An unbounded, fully transparent layer.
    Unity,
    /// A metalens; the board area outside its aperture is opaque.
    Mask(ApertureMask),
}

/// Tabulated scalar lens transmission versus incidence angle, applied once on
/// the way in and once on the way out. Linear interpolation, clamped at the
/// ends.
#[derive(Debug, Clone, PartialEq)]
pub struct AngleResponse {
    angles_deg: Vec<f64>,
    gain: Vec<f64>,
}

impl AngleResponse {
    pub fn new(points: Vec<(f64, f64)>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::domain("angle response needs at least one point"));
        }
        if points.windows(2).any(|w| !(w[1].0 > w[0].0)) {
            return Err(Error::domain("angle response angles must be strictly increasing"));
        }
        if points.iter().any(|p| !(p.1.is_finite() && p.1 >= 0.0)) {
            return Err(Error::domain("angle response values must be finite and non-negative"));
        }
        let (angles_deg, gain) = points.into_iter().unzip();
        Ok(Self { angles_deg, gain })
    }

    pub fn at(&self, theta_deg: f64) -> f64 {
        let a = &self.angles_deg;
        let n = a.len();
        if theta_deg <= a[0] {
            return self.gain[0];
        }
        if theta_deg >= a[n - 1] {
            return self.gain[n - 1];
        }
        let k = a.partition_point(|&x| x <= theta_deg);
        let t = (theta_deg - a[k - 1]) / (a[k] - a[k - 1]);
        self.gain[k - 1] + t * (self.gain[k] - self.gain[k - 1])
    }
}

/// Read an angle response from CSV rows `theta_deg,transmission`; lines
/// starting with `#` are skipped.
pub fn load_angle_response(path: &Path) -> Result<AngleResponse> {
    let file = std::fs::File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_reader(file);
    let parse_err = |line: u64, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let headers = rdr.headers().map_err(|e| parse_err(1, e.to_string()))?.clone();
    if headers.iter().collect::<Vec<_>>() != ["theta_deg", "transmission"] {
        return Err(parse_err(1, "expected header `theta_deg,transmission`".into()));
    }
    let mut points = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| parse_err(e.position().map_or(0, |p| p.line()), e.to_string()))?;
        let line = rec.position().map_or(0, |p| p.line());
        let num = |k: usize| -> Result<f64> {
            rec.get(k)
                .and_then(|v| v.parse::<f64>().ok())
                .ok_or_else(|| parse_err(line, format!("column {} is not a number", k + 1)))
        };
        points.push((num(0)?, num(1)?));
    }
    AngleResponse::new(points).map_err(|e| parse_err(0, e.to_string()))
}

/// Geometry and discretization of a tag.
#[derive(Debug, Clone, PartialEq)]
pub struct TagAssembly {
    pub lens: LensLayer,
    pub reflector: Reflector,
    pub separation_mm: f64,
    pub board_extent_mm: (f64, f64),
    pub wavelength_mm: f64,
    pub pitch_mm: f64,
    /// Window size relative to the tag extent.
    pub padding: f64,
    pub lens_angle_response: Option<AngleResponse>,
}

impl TagAssembly {
    /// Lens in front of a patch plane; pitch and wavelength come from the mask.
    pub fn new(lens: ApertureMask, patches: PatchPlaneSpec, separation_mm: f64) -> Self {
        let g = lens.grid();
        Self {
            wavelength_mm: g.wavelength_mm(),
            pitch_mm: g.pitch_mm(),
            board_extent_mm: patches.extent_mm,
            lens: LensLayer::Mask(lens),
            reflector: Reflector::Patches(patches),
            separation_mm,
            padding: 2.0,
            lens_angle_response: None,
        }
    }

    pub fn patch_only(patches: PatchPlaneSpec, wavelength_mm: f64, pitch_mm: f64) -> Self {
        Self {
            lens: LensLayer::Absent,
            reflector: Reflector::Patches(patches),
            separation_mm: 0.0,
            board_extent_mm: patches.extent_mm,
            wavelength_mm,
            pitch_mm,
            padding: 1.0,
            lens_angle_response: None,
        }
    }

    /// Transparent front layer over a perfectly reflecting rectangle.
    pub fn flat_plate(extent_mm: (f64, f64), separation_mm: f64, wavelength_mm: f64, pitch_mm: f64) -> Self {
        Self {
            lens: LensLayer::Unity,
            reflector: Reflector::Mirror {
                extent_mm,
                reflection: Complex64::new(1.0, 0.0),
            },
            separation_mm,
            board_extent_mm: extent_mm,
            wavelength_mm,
            pitch_mm,
            padding: 2.0,
            lens_angle_response: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.wavelength_mm.is_finite() && self.wavelength_mm > 0.0) {
            return Err(Error::domain("wavelength must be positive"));
        }
        if !(self.pitch_mm.is_finite() && self.pitch_mm > 0.0 && self.pitch_mm <= self.wavelength_mm / 2.0) {
            return Err(Error::domain(format!(
                "pitch must lie in (0, λ/2], got {} mm",
                self.pitch_mm
            )));
        }
        if !(self.padding.is_finite() && self.padding >= 1.0) {
            return Err(Error::domain("padding must be ≥ 1"));
        }
        check_extent(self.board_extent_mm, "board")?;
        match &self.reflector {
            Reflector::Patches(p) => p.validate()?,
            Reflector::Mirror { extent_mm, .. } => check_extent(*extent_mm, "mirror")?,
        }
        if !matches!(self.lens, LensLayer::Absent) && !(self.separation_mm.is_finite() && self.separation_mm > 0.0) {
            return Err(Error::domain(format!(
                "lens-to-plane separation must be positive, got {} mm",
                self.separation_mm
            )));
        }
        if let LensLayer::Mask(m) = &self.lens {
            let g = m.grid();
            if (g.pitch_mm() - self.pitch_mm).abs() > 1e-12 * self.pitch_mm {
                return Err(Error::mismatch("lens mask pitch differs from assembly pitch"));
            }
            if (g.wavelength_mm() - self.wavelength_mm).abs() > 1e-12 * self.wavelength_mm {
                return Err(Error::mismatch("lens mask wavelength differs from assembly wavelength"));
            }
            let (nx, ny) = g.dim();
            if nx % 2 == 0 || ny % 2 == 0 {
                return Err(Error::domain("lens mask must have odd dimensions"));
            }
            let span = ((nx - 1) as f64 * g.pitch_mm(), (ny - 1) as f64 * g.pitch_mm());
            if span.0 > self.board_extent_mm.0 + 1e-9 || span.1 > self.board_extent_mm.1 + 1e-9 {
                return Err(Error::domain(format!(
                    "lens aperture {span:?} mm does not fit the board {:?} mm",
                    self.board_extent_mm
                )));
            }
        }
        Ok(())
    }
}

/// Fraction of each sample cell `[x − p/2, x + p/2]` covered by intervals of
/// width `size` centred at `centers`.
fn coverage(xs: &[f64], pitch: f64, centers: &[f64], size: f64) -> Vec<f64> {
    xs.iter()
        .map(|&x| {
            let covered: f64 = centers
                .iter()
                .map(|&c| {
                    let lo = (x - pitch / 2.0).max(c - size / 2.0);
                    let hi = (x + pitch / 2.0).min(c + size / 2.0);
                    (hi - lo).max(0.0)
                })
                .sum();
            (covered / pitch).min(1.0)
        })
        .collect()
}

fn odd_samples(extent: f64, pitch: f64) -> usize {
    let half = (extent / 2.0 / pitch - 1e-9).ceil() as usize;
    2 * half + 1
}

/// A rasterized tag ready for repeated amplitude evaluations.
#[derive(Debug, Clone)]
pub struct TagModel {
    n: usize,
    pitch: f64,
    k: f64,
    xs: Vec<f64>,
    lens: LensKind,
    reflect: Array2<Complex64>,
    /// Σ_y of the reflection mask, for the lens-free path.
    reflect_rows: Vec<Complex64>,
    transfer: Array2<Complex64>,
    fft: Option<Fft2>,
    response: Option<AngleResponse>,
}

#[derive(Debug, Clone)]
enum LensKind {
    Absent,
    Unity,
    Mask(Array2<Complex64>),
}

impl TagModel {
    pub fn new(tag: &TagAssembly) -> Result<Self> {
        tag.validate()?;
        let pitch = tag.pitch_mm;
        let r_ext = tag.reflector.extent();
        let extent = tag.board_extent_mm.0.max(tag.board_extent_mm.1).max(r_ext.0).max(r_ext.1);
        let base = odd_samples(extent, pitch);
        let n = match tag.lens {
            LensLayer::Absent => base,
            _ => {
                let m = (base as f64 * tag.padding).ceil() as usize;
                m | 1
            }
        };
        let center = (n / 2) as f64;
        let xs: Vec<f64> = (0..n).map(|i| (i as f64 - center) * pitch).collect();

        let reflect = match &tag.reflector {
            Reflector::Mirror { extent_mm, reflection } => {
                let cx = coverage(&xs, pitch, &[0.0], extent_mm.0);
                let cy = coverage(&xs, pitch, &[0.0], extent_mm.1);
                Array2::from_shape_fn((n, n), |(a, b)| reflection * (cx[a] * cy[b]))
            }
            Reflector::Patches(p) => {
                let bx = coverage(&xs, pitch, &[0.0], p.extent_mm.0);
                let by = coverage(&xs, pitch, &[0.0], p.extent_mm.1);
                let px = coverage(&xs, pitch, &p.lattice(p.extent_mm.0, p.patch_width_mm), p.patch_width_mm);
                let py = coverage(&xs, pitch, &p.lattice(p.extent_mm.1, p.patch_length_mm), p.patch_length_mm);
                let contrast = p.patch_reflection - p.ground_reflection;
                Array2::from_shape_fn((n, n), |(a, b)| {
                    p.ground_reflection * (bx[a] * by[b]) + contrast * (px[a] * py[b])
                })
            }
        };
        let reflect_rows = reflect.axis_iter(Axis(0)).map(|r| r.sum()).collect();

        let lens = match &tag.lens {
            LensLayer::Absent => LensKind::Absent,
            LensLayer::Unity => LensKind::Unity,
            LensLayer::Mask(m) => {
                let t = m.transmission();
                let (mx, my) = t.dim();
                let (ox, oy) = (n / 2 - mx / 2, n / 2 - my / 2);
                let mut w = Array2::zeros((n, n));
                w.slice_mut(ndarray::s![ox..ox + mx, oy..oy + my]).assign(t);
                LensKind::Mask(w)
            }
        };

        let k = 2.0 * std::f64::consts::PI / tag.wavelength_mm;
        let (transfer_fn, fft) = if matches!(lens, LensKind::Absent) {
            (Array2::zeros((0, 0)), None)
        } else {
            let h = Array2::from_shape_fn((n, n), |(a, b)| {
                let kx = fft_wavenumber(a, n, pitch);
                let ky = fft_wavenumber(b, n, pitch);
                transfer(k * k - kx * kx - ky * ky, tag.separation_mm)
            });
            (h, Some(Fft2::new(n, n)))
        };

        Ok(Self {
            n,
            pitch,
            k,
            xs,
            lens,
            reflect,
            reflect_rows,
            transfer: transfer_fn,
            fft,
            response: tag.lens_angle_response.clone(),
        })
    }

    /// Side length of the simulation window in samples.
    pub fn window_samples(&self) -> usize {
        self.n
    }

    pub fn reflection_mask(&self) -> &Array2<Complex64> {
        &self.reflect
    }

    /// Complex backscatter amplitude in mm² toward the incidence direction.
    pub fn monostatic_amplitude(&self, theta_deg: f64) -> Result<Complex64> {
        if !(theta_deg.is_finite() && theta_deg.abs() < 90.0) {
            return Err(Error::domain(format!("incidence angle must satisfy |θ| < 90°, got {theta_deg}")));
        }
        Ok(self.amplitude_unchecked(theta_deg))
    }

    /// The chain without the angle guard; at ±90° this is the grazing limit.
    fn amplitude_unchecked(&self, theta_deg: f64) -> Complex64 {
        let kx = self.k * theta_deg.to_radians().sin();
        let inc: Vec<Complex64> = self.xs.iter().map(|&x| Complex64::from_polar(1.0, -kx * x)).collect();
        let area = self.pitch * self.pitch;

        let mask = match &self.lens {
            LensKind::Absent => {
                let sum: Complex64 = self.reflect_rows.iter().zip(&inc).map(|(r, e)| r * e * e).sum();
                return sum * area;
            }
            LensKind::Unity => None,
            LensKind::Mask(m) => Some(m),
        };
        let fft = self.fft.as_ref().expect("fft planned with a front layer");
        let n = self.n;
        let mut u = match mask {
            Some(m) => Array2::from_shape_fn((n, n), |(a, b)| inc[a] * m[[a, b]]),
            None => Array2::from_shape_fn((n, n), |(a, _)| inc[a]),
        };
        let step = |u: &mut Array2<Complex64>| {
            fft.forward(u);
            *u *= &self.transfer;
            fft.inverse(u);
        };
        step(&mut u);
        u *= &self.reflect;
        step(&mut u);
        if let Some(m) = mask {
            u *= m;
        }
        let sum: Complex64 = u
            .axis_iter(Axis(0))
            .zip(&inc)
            .map(|(row, e)| row.sum() * e)
            .sum();
        let t = self.response.as_ref().map_or(1.0, |r| r.at(theta_deg));
        sum * area * t * t
    }
}

pub fn monostatic_amplitude(tag: &TagAssembly, theta_deg: f64) -> Result<Complex64> {
    TagModel::new(tag)?.monostatic_amplitude(theta_deg)
}

/// Monostatic RCS `σ = 4π|A|²/λ²` for a backscatter amplitude `A` in mm².
pub fn rcs_from_amplitude(amplitude: Complex64, wavelength_mm: f64) -> Dbsm {
    let sigma_mm2 = 4.0 * std::f64::consts::PI * amplitude.norm_sqr() / (wavelength_mm * wavelength_mm);
    let db = 10.0 * (sigma_mm2 * 1e-6).log10();
    Dbsm(if db.is_finite() { db.max(RCS_FLOOR_DBSM) } else { RCS_FLOOR_DBSM })
}

/// RCS versus azimuth.
#[derive(Debug, Clone, PartialEq)]
pub struct RcsSweep {
    angles_deg: Vec<f64>,
    rcs_dbsm: Vec<f64>,
    frequency_ghz: f64,
}

impl RcsSweep {
    pub fn new(angles_deg: Vec<f64>, rcs_dbsm: Vec<f64>, frequency_ghz: f64) -> Result<Self> {
        if angles_deg.len() != rcs_dbsm.len() || angles_deg.is_empty() {
            return Err(Error::mismatch("sweep needs one RCS value per angle"));
        }
        if angles_deg.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::domain("sweep angles must be strictly increasing"));
        }
        if rcs_dbsm.iter().any(|v| !v.is_finite()) {
            return Err(Error::domain("sweep RCS values must be finite"));
        }
        Ok(Self {
            angles_deg,
            rcs_dbsm,
            frequency_ghz,
        })
    }

    pub fn angles_deg(&self) -> &[f64] {
        &self.angles_deg
    }

    pub fn rcs_dbsm(&self) -> &[f64] {
        &self.rcs_dbsm
    }

    pub fn frequency_ghz(&self) -> f64 {
        self.frequency_ghz
    }

    pub fn len(&self) -> usize {
        self.angles_deg.len()
    }

    pub fn is_empty(&self) -> bool {
        self.angles_deg.is_empty()
    }

    pub fn at(&self, theta_deg: f64) -> Option<f64> {
        self.angles_deg
            .iter()
            .position(|&a| (a - theta_deg).abs() < 1e-9)
            .map(|k| self.rcs_dbsm[k])
    }

    /// Angles of strict local maxima (interior points only).
    pub fn local_maxima(&self) -> Vec<f64> {
        let v = &self.rcs_dbsm;
        (1..v.len().saturating_sub(1))
            .filter(|&k| v[k] > v[k - 1] && v[k] > v[k + 1])
            .map(|k| self.angles_deg[k])
            .collect()
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "theta_deg,rcs_dbsm")?;
        for (a, r) in self.angles_deg.iter().zip(&self.rcs_dbsm) {
            writeln!(out, "{a:.3},{r:.6}")?;
        }
        Ok(())
    }
}

/// Angles `start, start+step, …` up to `end` inclusive.
pub fn sweep_angles(start_deg: f64, end_deg: f64, step_deg: f64) -> Result<Vec<f64>> {
    if !(step_deg.is_finite() && step_deg > 0.0) {
        return Err(Error::domain(format!("sweep step must be positive, got {step_deg}")));
    }
    if !(start_deg >= -90.0 && end_deg <= 90.0 && end_deg >= start_deg) {
        return Err(Error::domain(format!(
            "sweep range [{start_deg}, {end_deg}] must lie within [-90, 90]"
        )));
    }
    let count = ((end_deg - start_deg) / step_deg + 1e-9).floor() as usize + 1;
    Ok((0..count).map(|k| start_deg + k as f64 * step_deg).collect())
}

/// Sweep the monostatic RCS over `[start, end]` in steps of `step` degrees.
///
/// Angles are evaluated independently in parallel and assembled by index.
pub fn sweep_rcs(tag: &TagAssembly, start_deg: f64, end_deg: f64, step_deg: f64) -> Result<RcsSweep> {
    let angles = sweep_angles(start_deg, end_deg, step_deg)?;
    let model = TagModel::new(tag)?;
    let rcs: Vec<f64> = angles
        .par_iter()
        .map(|&a| rcs_from_amplitude(model.amplitude_unchecked(a), tag.wavelength_mm).0)
        .collect();
    RcsSweep::new(angles, rcs, crate::units::Wavelength::from_mm(tag.wavelength_mm)?.frequency().ghz())
}

/// Monostatic Bragg directions of a periodic layer.
#[derive(Debug, Clone, PartialEq)]
pub struct BraggAngles {
    /// `(m, θ_m)` for each order with `|mλ/(2d)| ≤ 1`.
    pub angles: Vec<(i32, f64)>,
    /// Orders dropped because no real angle satisfies them.
    pub omitted: usize,
}

/// Solve `2d·sinθ = mλ` for each order.
pub fn bragg_angles(period_mm: f64, wavelength_mm: f64, orders: &[i32]) -> Result<BraggAngles> {
    if !(period_mm.is_finite() && period_mm > 0.0) {
        return Err(Error::domain(format!("period must be positive, got {period_mm}")));
    }
    let mut angles = Vec::new();
    let mut omitted = 0;
    for &m in orders {
        let s = m as f64 * wavelength_mm / (2.0 * period_mm);
        if s.abs() <= 1.0 {
            angles.push((m, s.asin().to_degrees()));
        } else {
            omitted += 1;
        }
    }
    Ok(BraggAngles { angles, omitted })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepStats {
    pub coverage_deg: f64,
    pub count: usize,
    pub peak_dbsm: f64,
    pub peak_angle_deg: f64,
    pub median_dbsm: f64,
    pub mean_dbsm: f64,
    /// Largest |RCS − mean| inside the coverage window, in dB.
    pub variation_db: f64,
}

impl SweepStats {
    pub fn write_text<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "coverage_deg = {}", self.coverage_deg)?;
        writeln!(out, "samples = {}", self.count)?;
        writeln!(out, "peak_dbsm = {:.4}", self.peak_dbsm)?;
        writeln!(out, "peak_angle_deg = {}", self.peak_angle_deg)?;
        writeln!(out, "median_dbsm = {:.4}", self.median_dbsm)?;
        writeln!(out, "mean_dbsm = {:.4}", self.mean_dbsm)?;
        writeln!(out, "variation_db = {:.4}", self.variation_db)
    }
}

/// Statistics over the angles in `[-coverage/2, +coverage/2]`.
pub fn sweep_stats(sweep: &RcsSweep, coverage_deg: f64) -> Result<SweepStats> {
    let half = coverage_deg / 2.0;
    let (first, last) = (sweep.angles_deg[0], sweep.angles_deg[sweep.len() - 1]);
    if !(coverage_deg.is_finite() && coverage_deg >= 0.0) || -half < first - 1e-9 || half > last + 1e-9 {
        return Err(Error::domain(format!(
            "coverage ±{half}° is not inside the sweep [{first}, {last}]"
        )));
    }
    let sel: Vec<(f64, f64)> = sweep
        .angles_deg
        .iter()
        .zip(&sweep.rcs_dbsm)
        .filter(|(a, _)| a.abs() <= half + 1e-9)
        .map(|(a, r)| (*a, *r))
        .collect();
    if sel.is_empty() {
        return Err(Error::EmptySelection(format!("no sweep angles within ±{half}°")));
    }
    let (peak_angle_deg, peak_dbsm) = sel
        .iter()
        .copied()
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .expect("non-empty");
    let mut vals: Vec<f64> = sel.iter().map(|s| s.1).collect();
    let mean = vals.iter().sum::<f64>() / vals.len() as f64;
    let variation = vals.iter().map(|v| (v - mean).abs()).fold(0.0, f64::max);
    vals.sort_by(f64::total_cmp);
    let mid = vals.len() / 2;
    let median = if vals.len() % 2 == 1 { vals[mid] } else { 0.5 * (vals[mid - 1] + vals[mid]) };
    Ok(SweepStats {
        coverage_deg,
        count: vals.len(),
        peak_dbsm,
        peak_angle_deg,
        median_dbsm: median,
        mean_dbsm: mean,
        variation_db: variation,
    })
}

/// Header of the comparison-table CSV row.
pub const TABLE_CSV_HEADER: &str = "label,size_mm,median_rcs_dbsm,angular_coverage_deg";

pub fn write_table_row<W: Write>(mut out: W, label: &str, size_mm: &str, stats: &SweepStats) -> std::io::Result<()> {
    writeln!(out, "{label},{size_mm},{:.2},{}", stats.median_dbsm, stats.coverage_deg)
}
