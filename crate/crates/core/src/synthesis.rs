//! Metalens phase-profile synthesis and unit-cell quantization.
//!
//! The lens is an odd `N × N` array of unit cells indexed `(i, j)` with
//! `i, j ∈ [-(N-1)/2, (N-1)/2]`. Each cell receives the parabolic focusing
//! phase evaluated at its centre and is then mapped onto the library entry with
//! the closest transmission phase.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::io::{Read, Write};
use std::path::Path;

use ndarray::Array2;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::{ApertureMask, FieldGrid};
use crate::units::Frequency;

/// Header of the unit-cell library CSV.
pub const LIBRARY_CSV_HEADER: &str = "cell_id,r_mm,w_mm,g_mm,alpha_deg,phase_deg,magnitude";

/// Header of the quantized-lens export CSV.
pub const LENS_CSV_HEADER: &str =
    "i,j,ideal_phase_deg,assigned_phase_deg,magnitude,r_mm,w_mm,g_mm,alpha_deg";

const TABLE1_CSV: &str = include_str!("../../../data/table1_library.csv");

/// One row of a unit-cell library: ring geometry and its complex transmission.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitCellEntry {
    pub cell_id: String,
    pub r_mm: f64,
    pub w_mm: f64,
    pub g_mm: f64,
    pub alpha_deg: f64,
    /// Transmission phase in `[0, 360)`.
    pub phase_deg: f64,
    /// Transmission amplitude in `[0, 1]`.
    pub magnitude: f64,
}

impl UnitCellEntry {
    pub fn new(
        cell_id: impl Into<String>,
        r_mm: f64,
        w_mm: f64,
        g_mm: f64,
        alpha_deg: f64,
        phase_deg: f64,
        magnitude: f64,
    ) -> Result<Self> {
        for (name, v) in [("r", r_mm), ("w", w_mm), ("g", g_mm)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::domain(format!("unit cell {name} must be positive, got {v}")));
            }
        }
        if !(0.0..=1.0).contains(&magnitude) {
            return Err(Error::domain(format!(
                "unit cell magnitude must lie in [0, 1], got {magnitude}"
            )));
        }
        if !phase_deg.is_finite() || !alpha_deg.is_finite() {
            return Err(Error::domain("unit cell phase and split angle must be finite"));
        }
        Ok(Self {
            cell_id: cell_id.into(),
            r_mm,
            w_mm,
            g_mm,
            alpha_deg,
            phase_deg: wrap_degrees(phase_deg),
            magnitude,
        })
    }

    /// Entry with the given phase/magnitude and placeholder geometry.
    pub fn synthetic(phase_deg: f64, magnitude: f64) -> Result<Self> {
        Self::new(format!("synthetic_{phase_deg}"), 0.1, 0.1, 0.1, 0.0, phase_deg, magnitude)
    }

    pub fn transmission(&self) -> Complex64 {
        Complex64::from_polar(self.magnitude, self.phase_deg.to_radians())
    }
}

/// Wrap an angle in degrees into `[0, 360)`.
pub fn wrap_degrees(deg: f64) -> f64 {
    let w = deg.rem_euclid(360.0);
    // rem_euclid rounds tiny negatives up to exactly 360
    if w >= 360.0 {
        0.0
    } else {
        w
    }
}

/// Shortest distance between two phases on the circle, in degrees.
pub fn circular_distance_deg(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(360.0);
    d.min(360.0 - d)
}

/// The eleven published ring-resonator entries, in table order.
pub fn table1_library() -> Vec<UnitCellEntry> {
    parse_library(TABLE1_CSV.as_bytes(), Path::new("data/table1_library.csv"))
        .expect("shipped library is valid")
}

pub fn load_library(path: &Path) -> Result<Vec<UnitCellEntry>> {
    let file = std::fs::File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_library(file, path)
}

/// Parse a library CSV. `origin` is only used for error messages.
pub fn parse_library<R: Read>(reader: R, origin: &Path) -> Result<Vec<UnitCellEntry>> {
    let parse_err = |line: u64, message: String| Error::Parse {
        path: origin.to_path_buf(),
        line,
        message,
    };
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let header = rdr
        .headers()
        .map_err(|e| parse_err(1, e.to_string()))?
        .iter()
        .collect::<Vec<_>>()
        .join(",");
    if header != LIBRARY_CSV_HEADER {
        return Err(parse_err(1, format!("expected header `{LIBRARY_CSV_HEADER}`, found `{header}`")));
    }
    let mut entries = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            parse_err(line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != 7 {
            return Err(parse_err(line, format!("expected 7 fields, found {}", record.len())));
        }
        let num = |k: usize| -> Result<f64> {
            record[k]
                .parse::<f64>()
                .map_err(|e| parse_err(line, format!("field {k} `{}`: {e}", &record[k])))
        };
        let entry = UnitCellEntry::new(
            &record[0],
            num(1)?,
            num(2)?,
            num(3)?,
            num(4)?,
            num(5)?,
            num(6)?,
        )
        .map_err(|e| parse_err(line, e.to_string()))?;
        entries.push(entry);
    }
    if entries.is_empty() {
        return Err(Error::EmptyLibrary);
    }
    Ok(entries)
}

pub fn write_library<W: Write>(library: &[UnitCellEntry], out: W) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(LIBRARY_CSV_HEADER.split(','))?;
    for e in library {
        w.write_record([
            e.cell_id.clone(),
            e.r_mm.to_string(),
            e.w_mm.to_string(),
            e.g_mm.to_string(),
            e.alpha_deg.to_string(),
            e.phase_deg.to_string(),
            e.magnitude.to_string(),
        ])?;
    }
    w.flush()
}

/// Lens layout: cell count, cell pitch, focal length and design frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LensSpec {
    cells_per_side: usize,
    pitch_mm: f64,
    focal_length_mm: f64,
    design_frequency: Frequency,
}

impl LensSpec {
    pub fn new(
        cells_per_side: usize,
        pitch_mm: f64,
        focal_length_mm: f64,
        design_frequency_ghz: f64,
    ) -> Result<Self> {
        if cells_per_side < 3 || cells_per_side % 2 == 0 {
            return Err(Error::domain(format!(
                "cells per side must be odd and at least 3, got {cells_per_side}"
            )));
        }
        if !(pitch_mm.is_finite() && pitch_mm > 0.0) {
            return Err(Error::domain(format!("cell pitch must be positive, got {pitch_mm} mm")));
        }
        if !(focal_length_mm.is_finite() && focal_length_mm > 0.0) {
            return Err(Error::domain(format!(
                "focal length must be positive, got {focal_length_mm} mm"
            )));
        }
        Ok(Self {
            cells_per_side,
            pitch_mm,
            focal_length_mm,
            design_frequency: Frequency::from_ghz(design_frequency_ghz)?,
        })
    }

    /// 21 cells of 1.728 mm focusing at 20 mm, designed for 78.5 GHz.
    pub fn reference() -> Self {
        Self::new(21, 1.728, 20.0, 78.5).expect("reference lens is valid")
    }

    pub fn cells_per_side(&self) -> usize {
        self.cells_per_side
    }

    pub fn pitch_mm(&self) -> f64 {
        self.pitch_mm
    }

    pub fn focal_length_mm(&self) -> f64 {
        self.focal_length_mm
    }

    pub fn design_frequency_ghz(&self) -> f64 {
        self.design_frequency.ghz()
    }

    pub fn wavelength_mm(&self) -> f64 {
        self.design_frequency.wavelength().mm()
    }

    /// Largest cell index, `(N-1)/2`.
    pub fn half_extent(&self) -> i32 {
        (self.cells_per_side / 2) as i32
    }

    pub fn aperture_mm(&self) -> f64 {
        self.cells_per_side as f64 * self.pitch_mm
    }

    /// Cell indices in row-major order, `i` outer.
    pub fn cell_indices(&self) -> impl Iterator<Item = (i32, i32)> {
        let h = self.half_extent();
        (-h..=h).flat_map(move |i| (-h..=h).map(move |j| (i, j)))
    }

    /// Ideal phase at the centre of cell `(i, j)`.
    pub fn cell_phase_deg(&self, i: i32, j: i32) -> f64 {
        // integer r² keeps cells on the same ring bit-identical
        let r2 = (i64::from(i).pow(2) + i64::from(j).pow(2)) as f64 * self.pitch_mm * self.pitch_mm;
        wrap_degrees(phase_from_r2(r2, self.focal_length_mm, self.wavelength_mm()).to_degrees())
    }
}

fn phase_from_r2(r2: f64, f: f64, wavelength: f64) -> f64 {
    // √(r²+f²) − f written without cancellation
    2.0 * PI / wavelength * (r2 / ((r2 + f * f).sqrt() + f))
}

fn check_focus_args(f: f64, wavelength: f64) -> Result<()> {
    if !(f.is_finite() && f > 0.0) {
        return Err(Error::domain(format!("focal length must be positive, got {f} mm")));
    }
    if !(wavelength.is_finite() && wavelength > 0.0) {
        return Err(Error::domain(format!("wavelength must be positive, got {wavelength} mm")));
    }
    Ok(())
}

/// Focusing phase in radians before wrapping, `(2π/λ)(√(x²+y²+f²) − f)`.
pub fn required_phase_unwrapped(x_mm: f64, y_mm: f64, f_mm: f64, wavelength_mm: f64) -> Result<f64> {
    check_focus_args(f_mm, wavelength_mm)?;
    Ok(phase_from_r2(x_mm * x_mm + y_mm * y_mm, f_mm, wavelength_mm))
}

/// Focusing phase in degrees wrapped to `[0, 360)`.
pub fn required_phase(x_mm: f64, y_mm: f64, f_mm: f64, wavelength_mm: f64) -> Result<f64> {
    required_phase_unwrapped(x_mm, y_mm, f_mm, wavelength_mm).map(|p| wrap_degrees(p.to_degrees()))
}

/// Ideal phase of every cell, row-major.
pub fn sample_profile(spec: &LensSpec) -> Vec<((i32, i32), f64)> {
    spec.cell_indices()
        .map(|(i, j)| ((i, j), spec.cell_phase_deg(i, j)))
        .collect()
}

/// Index of the library entry closest in phase to `required_deg`.
///
/// Ties go to the larger magnitude, then to the lower index.
pub fn nearest_match_index(required_deg: f64, library: &[UnitCellEntry]) -> Result<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (k, e) in library.iter().enumerate() {
        let d = circular_distance_deg(required_deg, e.phase_deg);
        best = match best {
            None => Some((k, d)),
            Some((bk, bd)) => {
                if d < bd || (d == bd && e.magnitude > library[bk].magnitude) {
                    Some((k, d))
                } else {
                    Some((bk, bd))
                }
            }
        };
    }
    best.map(|(k, _)| k).ok_or(Error::EmptyLibrary)
}

pub fn nearest_match(required_deg: f64, library: &[UnitCellEntry]) -> Result<&UnitCellEntry> {
    nearest_match_index(required_deg, library).map(|k| &library[k])
}

/// Largest circular gap between adjacent library phases, in degrees.
pub fn max_phase_gap(library: &[UnitCellEntry]) -> Result<f64> {
    let mut phases: Vec<f64> = library.iter().map(|e| e.phase_deg).collect();
    if phases.is_empty() {
        return Err(Error::EmptyLibrary);
    }
    phases.sort_by(f64::total_cmp);
    let wrap_gap = phases[0] + 360.0 - phases[phases.len() - 1];
    Ok(phases
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(wrap_gap, f64::max))
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuantizedCell {
    pub i: i32,
    pub j: i32,
    pub ideal_phase_deg: f64,
    pub entry: UnitCellEntry,
}

/// A lens with every cell assigned a library entry.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantizedLens {
    spec: LensSpec,
    cells: Vec<QuantizedCell>,
}

impl QuantizedLens {
    pub fn spec(&self) -> &LensSpec {
        &self.spec
    }

    /// All cells, row-major with `i` outer.
    pub fn cells(&self) -> &[QuantizedCell] {
        &self.cells
    }

    pub fn cell(&self, i: i32, j: i32) -> Option<&QuantizedCell> {
        let h = self.spec.half_extent();
        if i.abs() > h || j.abs() > h {
            return None;
        }
        let n = self.spec.cells_per_side() as i32;
        Some(&self.cells[((i + h) * n + (j + h)) as usize])
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "{LENS_CSV_HEADER}")?;
        for c in &self.cells {
            let e = &c.entry;
            writeln!(
                out,
                "{},{},{:.6},{},{},{},{},{},{}",
                c.i, c.j, c.ideal_phase_deg, e.phase_deg, e.magnitude, e.r_mm, e.w_mm, e.g_mm, e.alpha_deg
            )?;
        }
        Ok(())
    }
}

/// Assign every cell the library entry nearest its ideal phase.
pub fn build_quantized_lens(spec: &LensSpec, library: &[UnitCellEntry]) -> Result<QuantizedLens> {
    if library.is_empty() {
        return Err(Error::EmptyLibrary);
    }
    // one match per ring radius
    let mut by_ring: HashMap<i64, usize> = HashMap::new();
    let mut cells = Vec::with_capacity(spec.cells_per_side().pow(2));
    for (i, j) in spec.cell_indices() {
        let ideal = spec.cell_phase_deg(i, j);
        let ring = i64::from(i).pow(2) + i64::from(j).pow(2);
        let k = match by_ring.get(&ring) {
            Some(&k) => k,
            None => {
                let k = nearest_match_index(ideal, library)?;
                by_ring.insert(ring, k);
                k
            }
        };
        cells.push(QuantizedCell {
            i,
            j,
            ideal_phase_deg: ideal,
            entry: library[k].clone(),
        });
    }
    Ok(QuantizedLens { spec: *spec, cells })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MaskMode {
    /// Unit magnitude with the exact focusing phase of each cell.
    Ideal,
    /// The assigned library entry's magnitude and phase.
    Quantized,
}

/// Cell index owning grid sample `m` (offset from the centre sample).
///
/// With an even sample count per cell the cell boundaries fall on samples;
/// those belong to the inner cell so the layout stays mirror-symmetric.
fn cell_of_sample(m: i64, samples_per_cell: i64) -> i64 {
    let c = (2 * m.abs() + samples_per_cell - 1) / (2 * samples_per_cell);
    c * m.signum()
}

/// Rasterize the lens into a transmission mask with pitch `p / samples_per_cell`.
///
/// Transmission is `|t|·e^{+jφ}`: under the `e^{+jωt}` convention a forward
/// wave accumulates `e^{-jkz}`, so advancing the outer cells by the focusing
/// phase makes the transmitted wave converge at `z = +f`. The grid has an odd
/// number of samples with one on the lens axis and spans exactly the aperture.
pub fn lens_to_mask(lens: &QuantizedLens, samples_per_cell: usize, mode: MaskMode) -> Result<ApertureMask> {
    if samples_per_cell < 2 {
        return Err(Error::domain(format!(
            "need at least 2 samples per cell, got {samples_per_cell}"
        )));
    }
    let spec = lens.spec();
    let spc = samples_per_cell as i64;
    let n_cells = spec.cells_per_side() as i64;
    let half = if spc % 2 == 0 { n_cells * spc / 2 } else { (n_cells * spc - 1) / 2 };
    let n = (2 * half + 1) as usize;
    let h = spec.half_extent();

    let mut cell_t = Array2::<Complex64>::zeros((spec.cells_per_side(), spec.cells_per_side()));
    for c in lens.cells() {
        let t = match mode {
            MaskMode::Ideal => Complex64::from_polar(1.0, c.ideal_phase_deg.to_radians()),
            MaskMode::Quantized => c.entry.transmission(),
        };
        cell_t[[(c.i + h) as usize, (c.j + h) as usize]] = t;
    }
    let owner: Vec<usize> = (0..n as i64)
        .map(|idx| (cell_of_sample(idx - half, spc) + i64::from(h)) as usize)
        .collect();
    let samples = Array2::from_shape_fn((n, n), |(a, b)| cell_t[[owner[a], owner[b]]]);
    let grid = FieldGrid::new(samples, spec.pitch_mm() / samples_per_cell as f64, spec.wavelength_mm())?;
    Ok(ApertureMask::new(grid))
}
