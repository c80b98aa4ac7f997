//! Complex scalar fields sampled on uniform square-pitch grids.

use ndarray::Array2;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Complex field samples on a uniform grid.
///
/// Axis 0 is x, axis 1 is y. Sample `(i, j)` sits at
/// `origin + ((i - (nx-1)/2)·pitch, (j - (ny-1)/2)·pitch)`, so `origin` is the
/// physical coordinate of the grid centre. Odd dimensions put a sample exactly
/// on the centre.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldGrid {
    samples: Array2<Complex64>,
    pitch_mm: f64,
    origin_mm: (f64, f64),
    wavelength_mm: f64,
}

impl FieldGrid {
    pub fn new(samples: Array2<Complex64>, pitch_mm: f64, wavelength_mm: f64) -> Result<Self> {
        Self::with_origin(samples, pitch_mm, (0.0, 0.0), wavelength_mm)
    }

    pub fn with_origin(
        samples: Array2<Complex64>,
        pitch_mm: f64,
        origin_mm: (f64, f64),
        wavelength_mm: f64,
    ) -> Result<Self> {
        if !(pitch_mm.is_finite() && pitch_mm > 0.0) {
            return Err(Error::domain(format!("grid pitch must be positive, got {pitch_mm} mm")));
        }
        if !(wavelength_mm.is_finite() && wavelength_mm > 0.0) {
            return Err(Error::domain(format!(
                "wavelength must be positive, got {wavelength_mm} mm"
            )));
        }
        if samples.is_empty() {
            return Err(Error::domain("field grid has no samples"));
        }
        if samples.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::domain("field grid contains non-finite samples"));
        }
        Ok(Self {
            samples,
            pitch_mm,
            origin_mm,
            wavelength_mm,
        })
    }

    /// A unit-amplitude normally incident plane wave.
    pub fn plane_wave(nx: usize, ny: usize, pitch_mm: f64, wavelength_mm: f64) -> Result<Self> {
        Self::new(Array2::from_elem((nx, ny), Complex64::new(1.0, 0.0)), pitch_mm, wavelength_mm)
    }

    pub fn samples(&self) -> &Array2<Complex64> {
        &self.samples
    }

    pub fn into_samples(self) -> Array2<Complex64> {
        self.samples
    }

    pub fn dim(&self) -> (usize, usize) {
        self.samples.dim()
    }

    pub fn pitch_mm(&self) -> f64 {
        self.pitch_mm
    }

    pub fn origin_mm(&self) -> (f64, f64) {
        self.origin_mm
    }

    pub fn wavelength_mm(&self) -> f64 {
        self.wavelength_mm
    }

    pub fn wavenumber(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.wavelength_mm
    }

    /// Index of the sample nearest the grid centre.
    pub fn center_index(&self) -> (usize, usize) {
        let (nx, ny) = self.dim();
        (nx / 2, ny / 2)
    }

    pub fn x_coords(&self) -> Vec<f64> {
        axis_coords(self.dim().0, self.pitch_mm, self.origin_mm.0)
    }

    pub fn y_coords(&self) -> Vec<f64> {
        axis_coords(self.dim().1, self.pitch_mm, self.origin_mm.1)
    }

    /// Σ|u|²·pitch², in mm².
    pub fn total_power(&self) -> f64 {
        self.samples.iter().map(|z| z.norm_sqr()).sum::<f64>() * self.pitch_mm * self.pitch_mm
    }

    /// Whether the pitch resolves the full propagating spectrum (pitch ≤ λ/2).
    pub fn satisfies_nyquist(&self) -> bool {
        self.pitch_mm <= self.wavelength_mm / 2.0
    }

    pub(crate) fn require_nyquist(&self) -> Result<()> {
        if self.satisfies_nyquist() {
            Ok(())
        } else {
            Err(Error::domain(format!(
                "pitch {} mm exceeds λ/2 = {} mm",
                self.pitch_mm,
                self.wavelength_mm / 2.0
            )))
        }
    }

    /// Elementwise product with a mask sharing this grid's geometry.
    pub fn apply_mask(&self, mask: &ApertureMask) -> Result<FieldGrid> {
        let m = mask.grid();
        if m.dim() != self.dim() || (m.pitch_mm - self.pitch_mm).abs() > 1e-12 * self.pitch_mm {
            return Err(Error::mismatch(format!(
                "mask {:?} @ {} mm does not match field {:?} @ {} mm",
                m.dim(),
                m.pitch_mm,
                self.dim(),
                self.pitch_mm
            )));
        }
        let mut out = self.clone();
        out.samples *= &m.samples;
        Ok(out)
    }

    pub(crate) fn replace_samples(&self, samples: Array2<Complex64>) -> FieldGrid {
        FieldGrid {
            samples,
            pitch_mm: self.pitch_mm,
            origin_mm: self.origin_mm,
            wavelength_mm: self.wavelength_mm,
        }
    }
}

pub(crate) fn axis_coords(n: usize, pitch: f64, origin: f64) -> Vec<f64> {
    let center = (n as f64 - 1.0) / 2.0;
    (0..n).map(|i| origin + (i as f64 - center) * pitch).collect()
}

/// A complex transmission (or reflection) coefficient on a grid, used as a
/// multiplier on a [`FieldGrid`] with the same geometry.
#[derive(Debug, Clone, PartialEq)]
pub struct ApertureMask(FieldGrid);

impl ApertureMask {
    pub fn new(grid: FieldGrid) -> Self {
        Self(grid)
    }

    /// Unit transmission everywhere.
    pub fn uniform(nx: usize, ny: usize, pitch_mm: f64, wavelength_mm: f64) -> Result<Self> {
        FieldGrid::plane_wave(nx, ny, pitch_mm, wavelength_mm).map(Self)
    }

    pub fn grid(&self) -> &FieldGrid {
        &self.0
    }

    pub fn into_grid(self) -> FieldGrid {
        self.0
    }

    pub fn transmission(&self) -> &Array2<Complex64> {
        self.0.samples()
    }

    /// Field transmitted by a unit-amplitude normal-incidence plane wave.
    pub fn illuminate(&self) -> FieldGrid {
        self.0.clone()
    }
}
