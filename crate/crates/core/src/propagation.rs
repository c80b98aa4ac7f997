//! Scalar angular-spectrum propagation between parallel planes.
//!
//! The transfer function for a step `dz` is `exp(-j·dz·√(k² − kx² − ky²))` on
//! propagating components. Evanescent components decay as `exp(-κ·dz)` going
//! forward and are dropped when stepping backwards.

use std::f64::consts::PI;
use std::io::Write;
use std::sync::Arc;

use ndarray::{s, Array2, Axis};
use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::field::{ApertureMask, FieldGrid};

/// Planned 2-D FFT over an `nx × ny` array.
#[derive(Clone)]
pub struct Fft2 {
    nx: usize,
    ny: usize,
    fwd_x: Arc<dyn Fft<f64>>,
    inv_x: Arc<dyn Fft<f64>>,
    fwd_y: Arc<dyn Fft<f64>>,
    inv_y: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Fft2 {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Fft2").field("nx", &self.nx).field("ny", &self.ny).finish()
    }
}

impl Fft2 {
    pub fn new(nx: usize, ny: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            nx,
            ny,
            fwd_x: planner.plan_fft_forward(nx),
            inv_x: planner.plan_fft_inverse(nx),
            fwd_y: planner.plan_fft_forward(ny),
            inv_y: planner.plan_fft_inverse(ny),
        }
    }

    pub fn forward(&self, data: &mut Array2<Complex64>) {
        self.run(data, &self.fwd_x, &self.fwd_y);
    }

    /// Inverse transform including the `1/(nx·ny)` normalization.
    pub fn inverse(&self, data: &mut Array2<Complex64>) {
        self.run(data, &self.inv_x, &self.inv_y);
        let scale = 1.0 / (self.nx * self.ny) as f64;
        data.mapv_inplace(|z| z * scale);
    }

    fn run(&self, data: &mut Array2<Complex64>, fx: &Arc<dyn Fft<f64>>, fy: &Arc<dyn Fft<f64>>) {
        assert_eq!(data.dim(), (self.nx, self.ny));
        // rows (y) are contiguous in standard layout
        let slice = data.as_slice_mut().expect("standard layout");
        fy.process(slice);
        let mut col = vec![Complex64::default(); self.nx];
        for j in 0..self.ny {
            for (i, c) in col.iter_mut().enumerate() {
                *c = slice[i * self.ny + j];
            }
            fx.process(&mut col);
            for (i, c) in col.iter().enumerate() {
                slice[i * self.ny + j] = *c;
            }
        }
    }
}

/// Angular frequency (rad/mm) of FFT bin `k` out of `n` at sample pitch `d`.
pub(crate) fn fft_wavenumber(k: usize, n: usize, pitch: f64) -> f64 {
    let signed = if k <= n / 2 { k as f64 } else { k as f64 - n as f64 };
    2.0 * PI * signed / (n as f64 * pitch)
}

/// Discretization of a propagation problem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PropagationPlan {
    nx: usize,
    ny: usize,
    pitch_mm: f64,
    wavelength_mm: f64,
    padding: f64,
    padded_nx: usize,
    padded_ny: usize,
}

impl PropagationPlan {
    pub const DEFAULT_PADDING: f64 = 2.0;

    /// `padding` scales each dimension; with `padding == 1` the grid is treated
    /// as periodic and propagation is exactly unitary on propagating components.
    pub fn new(nx: usize, ny: usize, pitch_mm: f64, wavelength_mm: f64, padding: f64) -> Result<Self> {
        if nx == 0 || ny == 0 {
            return Err(Error::domain("propagation grid must be non-empty"));
        }
        if !(padding.is_finite() && padding >= 1.0) {
            return Err(Error::domain(format!("padding factor must be ≥ 1, got {padding}")));
        }
        if !(wavelength_mm.is_finite() && wavelength_mm > 0.0) {
            return Err(Error::domain(format!("wavelength must be positive, got {wavelength_mm}")));
        }
        if !(pitch_mm.is_finite() && pitch_mm > 0.0) {
            return Err(Error::domain(format!("pitch must be positive, got {pitch_mm}")));
        }
        if pitch_mm > wavelength_mm / 2.0 {
            return Err(Error::domain(format!(
                "pitch {pitch_mm} mm exceeds λ/2 = {} mm",
                wavelength_mm / 2.0
            )));
        }
        let pad = |n: usize| ((n as f64 * padding).ceil() as usize).max(n);
        Ok(Self {
            nx,
            ny,
            pitch_mm,
            wavelength_mm,
            padding,
            padded_nx: pad(nx),
            padded_ny: pad(ny),
        })
    }

    pub fn for_grid(grid: &FieldGrid, padding: f64) -> Result<Self> {
        let (nx, ny) = grid.dim();
        Self::new(nx, ny, grid.pitch_mm(), grid.wavelength_mm(), padding)
    }

    pub fn dim(&self) -> (usize, usize) {
        (self.nx, self.ny)
    }

    pub fn padded_dim(&self) -> (usize, usize) {
        (self.padded_nx, self.padded_ny)
    }

    pub fn pitch_mm(&self) -> f64 {
        self.pitch_mm
    }

    pub fn wavelength_mm(&self) -> f64 {
        self.wavelength_mm
    }

    pub fn padding(&self) -> f64 {
        self.padding
    }

    fn offsets(&self) -> (usize, usize) {
        ((self.padded_nx - self.nx) / 2, (self.padded_ny - self.ny) / 2)
    }

    fn check(&self, field: &FieldGrid) -> Result<()> {
        let same_pitch = (field.pitch_mm() - self.pitch_mm).abs() <= 1e-12 * self.pitch_mm;
        let same_wl = (field.wavelength_mm() - self.wavelength_mm).abs() <= 1e-12 * self.wavelength_mm;
        if field.dim() != self.dim() || !same_pitch || !same_wl {
            return Err(Error::mismatch(format!(
                "field {:?} @ {} mm, λ {} mm does not match plan {:?} @ {} mm, λ {} mm",
                field.dim(),
                field.pitch_mm(),
                field.wavelength_mm(),
                self.dim(),
                self.pitch_mm,
                self.wavelength_mm
            )));
        }
        Ok(())
    }

    /// Squared axial wavenumber `k² − kx² − ky²` on the padded FFT grid.
    fn kz_squared(&self) -> Array2<f64> {
        let k = 2.0 * PI / self.wavelength_mm;
        let (px, py) = self.padded_dim();
        Array2::from_shape_fn((px, py), |(a, b)| {
            let kx = fft_wavenumber(a, px, self.pitch_mm);
            let ky = fft_wavenumber(b, py, self.pitch_mm);
            k * k - kx * kx - ky * ky
        })
    }
}

/// Free-space transfer function for one step of `dz` mm.
pub(crate) fn transfer(kz2: f64, dz: f64) -> Complex64 {
    if kz2 >= 0.0 {
        Complex64::from_polar(1.0, -dz * kz2.sqrt())
    } else if dz >= 0.0 {
        Complex64::new((-dz * (-kz2).sqrt()).exp(), 0.0)
    } else {
        Complex64::default()
    }
}

/// Reusable propagator: FFT plans and axial wavenumbers for one plan.
#[derive(Debug, Clone)]
pub struct Propagator {
    plan: PropagationPlan,
    fft: Fft2,
    kz2: Array2<f64>,
}

impl Propagator {
    pub fn new(plan: PropagationPlan) -> Self {
        let (px, py) = plan.padded_dim();
        Self {
            fft: Fft2::new(px, py),
            kz2: plan.kz_squared(),
            plan,
        }
    }

    pub fn plan(&self) -> &PropagationPlan {
        &self.plan
    }

    /// Angular spectrum of `field` on the padded grid (unnormalized FFT).
    pub fn spectrum(&self, field: &FieldGrid) -> Result<Array2<Complex64>> {
        self.plan.check(field)?;
        let mut buf = Array2::zeros(self.plan.padded_dim());
        let (ox, oy) = self.plan.offsets();
        let (nx, ny) = self.plan.dim();
        buf.slice_mut(s![ox..ox + nx, oy..oy + ny]).assign(field.samples());
        self.fft.forward(&mut buf);
        Ok(buf)
    }

    fn crop(&self, padded: &Array2<Complex64>) -> Array2<Complex64> {
        let (ox, oy) = self.plan.offsets();
        let (nx, ny) = self.plan.dim();
        padded.slice(s![ox..ox + nx, oy..oy + ny]).to_owned()
    }

    pub fn propagate(&self, field: &FieldGrid, dz_mm: f64) -> Result<FieldGrid> {
        let mut spec = self.spectrum(field)?;
        ndarray::Zip::from(&mut spec)
            .and(&self.kz2)
            .for_each(|s, &kz2| *s *= transfer(kz2, dz_mm));
        self.fft.inverse(&mut spec);
        Ok(field.replace_samples(self.crop(&spec)))
    }

    /// Remove evanescent content, leaving only the propagating spectrum.
    pub fn band_limit(&self, field: &FieldGrid) -> Result<FieldGrid> {
        let mut spec = self.spectrum(field)?;
        ndarray::Zip::from(&mut spec).and(&self.kz2).for_each(|s, &kz2| {
            if kz2 < 0.0 {
                *s = Complex64::default();
            }
        });
        self.fft.inverse(&mut spec);
        Ok(field.replace_samples(self.crop(&spec)))
    }

    /// Σ|S|² over propagating spectral components (unnormalized FFT units).
    pub fn propagating_power(&self, field: &FieldGrid) -> Result<f64> {
        let spec = self.spectrum(field)?;
        Ok(spec
            .iter()
            .zip(self.kz2.iter())
            .filter(|(_, &kz2)| kz2 >= 0.0)
            .map(|(s, _)| s.norm_sqr())
            .sum())
    }
}

/// Propagate `field` by `dz_mm` (negative steps propagate backwards).
pub fn propagate(field: &FieldGrid, dz_mm: f64, plan: &PropagationPlan) -> Result<FieldGrid> {
    Propagator::new(*plan).propagate(field, dz_mm)
}

/// On-axis intensity along z behind an illuminated aperture.
#[derive(Debug, Clone, PartialEq)]
pub struct FocalScanResult {
    pub z_mm: Vec<f64>,
    /// |u|² at the grid centre, relative to the unit incident intensity.
    pub intensity: Vec<f64>,
    pub peak_z_mm: f64,
    pub peak_intensity: f64,
}

impl FocalScanResult {
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "z_mm,on_axis_intensity")?;
        for (z, i) in self.z_mm.iter().zip(&self.intensity) {
            writeln!(out, "{z:.6},{i:.9e}")?;
        }
        Ok(())
    }
}

fn scan_positions(z_start: f64, z_end: f64, steps: usize) -> Result<Vec<f64>> {
    if !(z_start.is_finite() && z_end.is_finite() && z_start > 0.0 && z_end > z_start) {
        return Err(Error::domain(format!(
            "focal scan needs 0 < z_start < z_end, got [{z_start}, {z_end}]"
        )));
    }
    if steps < 2 {
        return Err(Error::domain(format!("focal scan needs at least 2 steps, got {steps}")));
    }
    let dz = (z_end - z_start) / (steps - 1) as f64;
    Ok((0..steps).map(|i| z_start + i as f64 * dz).collect())
}

/// Illuminate `mask` with a unit normal-incidence plane wave and record the
/// on-axis intensity at `steps` planes evenly spaced over `[z_start, z_end]`.
pub fn focal_scan(
    mask: &ApertureMask,
    z_start_mm: f64,
    z_end_mm: f64,
    steps: usize,
    plan: &PropagationPlan,
) -> Result<FocalScanResult> {
    let zs = scan_positions(z_start_mm, z_end_mm, steps)?;
    let prop = Propagator::new(*plan);
    let spec = prop.spectrum(&mask.illuminate())?;

    // Only the centre sample is needed, so evaluate the inverse transform at
    // that one point: u_c = (1/N) Σ S·H·e^{+j2π(a·cx/px + b·cy/py)}.
    let (px, py) = plan.padded_dim();
    let (ox, oy) = plan.offsets();
    let (cx, cy) = mask.grid().center_index();
    let (cx, cy) = (ox + cx, oy + cy);
    let norm = 1.0 / (px * py) as f64;
    let phx: Vec<Complex64> = (0..px)
        .map(|a| Complex64::from_polar(1.0, 2.0 * PI * ((a * cx) % px) as f64 / px as f64))
        .collect();
    let phy: Vec<Complex64> = (0..py)
        .map(|b| Complex64::from_polar(1.0, 2.0 * PI * ((b * cy) % py) as f64 / py as f64))
        .collect();
    let mut weighted = spec;
    for ((a, b), s) in weighted.indexed_iter_mut() {
        *s *= phx[a] * phy[b] * norm;
    }

    let intensity: Vec<f64> = zs
        .par_iter()
        .map(|&z| {
            weighted
                .iter()
                .zip(prop.kz2.iter())
                .map(|(s, &kz2)| s * transfer(kz2, z))
                .sum::<Complex64>()
                .norm_sqr()
        })
        .collect();

    let (k_peak, &peak_intensity) = intensity
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .expect("at least two steps");
    Ok(FocalScanResult {
        peak_z_mm: zs[k_peak],
        z_mm: zs,
        intensity,
        peak_intensity,
    })
}

/// |u|² on the x–z plane through the axis (y = centre row), one row per z.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldSlice {
    pub z_mm: Vec<f64>,
    pub x_mm: Vec<f64>,
    /// Shape `(z, x)`.
    pub intensity: Array2<f64>,
    pub wavelength_mm: f64,
}

impl FieldSlice {
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "z_mm,x_mm,intensity")?;
        for (iz, z) in self.z_mm.iter().enumerate() {
            for (ix, x) in self.x_mm.iter().enumerate() {
                writeln!(out, "{z:.6},{x:.6},{:.9e}", self.intensity[[iz, ix]])?;
            }
        }
        Ok(())
    }

    /// Text header line followed by row-major little-endian `f32` values.
    pub fn write_binary<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let (nz, nx) = self.intensity.dim();
        let dx = if nx > 1 { self.x_mm[1] - self.x_mm[0] } else { 0.0 };
        let dz = if nz > 1 { self.z_mm[1] - self.z_mm[0] } else { 0.0 };
        writeln!(
            out,
            "rows_z={nz} cols_x={nx} z0_mm={} dz_mm={dz} x0_mm={} dx_mm={dx} wavelength_mm={} dtype=f32le",
            self.z_mm.first().copied().unwrap_or(0.0),
            self.x_mm.first().copied().unwrap_or(0.0),
            self.wavelength_mm
        )?;
        for v in self.intensity.iter() {
            out.write_all(&(*v as f32).to_le_bytes())?;
        }
        Ok(())
    }
}

pub fn field_slice(
    mask: &ApertureMask,
    z_start_mm: f64,
    z_end_mm: f64,
    steps: usize,
    plan: &PropagationPlan,
) -> Result<FieldSlice> {
    let zs = scan_positions(z_start_mm, z_end_mm, steps)?;
    let prop = Propagator::new(*plan);
    let field = mask.illuminate();
    let cy = field.center_index().1;
    let rows: Vec<Vec<f64>> = zs
        .par_iter()
        .map(|&z| {
            prop.propagate(&field, z).map(|u| {
                u.samples().index_axis(Axis(1), cy).iter().map(|c| c.norm_sqr()).collect()
            })
        })
        .collect::<Result<_>>()?;
    let nx = field.dim().0;
    let intensity = Array2::from_shape_fn((zs.len(), nx), |(a, b)| rows[a][b]);
    Ok(FieldSlice {
        z_mm: zs,
        x_mm: field.x_coords(),
        intensity,
        wavelength_mm: field.wavelength_mm(),
    })
}

fn check_angle(theta_deg: f64) -> Result<()> {
    if !(theta_deg.is_finite() && theta_deg.abs() < 90.0) {
        return Err(Error::domain(format!("angle must satisfy |θ| < 90°, got {theta_deg}")));
    }
    Ok(())
}

/// Azimuth-cut radiation integral `F(θ) = Σ u(x, y)·e^{+jk·sinθ·x}·pitch²`.
pub fn far_field(field: &FieldGrid, angles_deg: &[f64]) -> Result<Vec<Complex64>> {
    field.require_nyquist()?;
    angles_deg.iter().try_for_each(|&a| check_angle(a))?;
    let xs = field.x_coords();
    let area = field.pitch_mm().powi(2);
    // integrate over y once
    let column_sums: Vec<Complex64> = field.samples().axis_iter(Axis(0)).map(|row| row.sum()).collect();
    let k = field.wavenumber();
    Ok(angles_deg
        .iter()
        .map(|&a| {
            let kx = k * a.to_radians().sin();
            column_sums
                .iter()
                .zip(&xs)
                .map(|(s, &x)| s * Complex64::from_polar(1.0, kx * x))
                .sum::<Complex64>()
                * area
        })
        .collect())
}

/// Radiation integral toward polar angle θ and azimuth φ:
/// `Σ u·e^{+jk·sinθ·(x·cosφ + y·sinφ)}·pitch²`.
pub fn far_field_direction(field: &FieldGrid, theta_deg: f64, phi_deg: f64) -> Result<Complex64> {
    field.require_nyquist()?;
    check_angle(theta_deg)?;
    let k = field.wavenumber() * theta_deg.to_radians().sin();
    let (kx, ky) = (k * phi_deg.to_radians().cos(), k * phi_deg.to_radians().sin());
    let xs = field.x_coords();
    let ys = field.y_coords();
    let ey: Vec<Complex64> = ys.iter().map(|&y| Complex64::from_polar(1.0, ky * y)).collect();
    let total: Complex64 = field
        .samples()
        .axis_iter(Axis(0))
        .zip(&xs)
        .map(|(row, &x)| {
            let inner: Complex64 = row.iter().zip(&ey).map(|(u, e)| u * e).sum();
            inner * Complex64::from_polar(1.0, kx * x)
        })
        .sum();
    Ok(total * field.pitch_mm().powi(2))
}
