//! FMCW TDM-MIMO signal chain: chirp parameters, synthetic beat signals for
//! static point targets, and range/azimuth processing.
//!
//! Frames are stored slot-major: for chirp repeat `c`, transmitter `t` and
//! receiver `r`, the virtual element is `v = t·rx + r` and sample `n` lives at
//! `((c·V + v)·N + n)`.

use std::io::{BufRead, Write};

use ndarray::Array2;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::units::SPEED_OF_LIGHT_M_PER_S;

/// Upper edge of the 76–81 GHz automotive band.
pub const BAND_TOP_GHZ: f64 = 81.0;
/// Slack on the band-edge check; the nominal chirp overshoots by a few MHz.
pub const BAND_EDGE_TOLERANCE_GHZ: f64 = 0.01;
pub const DEFAULT_ANGLE_BINS: usize = 181;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AdcMode {
    /// Real-valued samples; only beat frequencies below fs/2 are usable.
    Real,
    /// Complex (I/Q) samples.
    Complex,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChirpConfig {
    pub start_frequency_ghz: f64,
    pub slope_mhz_per_us: f64,
    pub chirp_duration_us: f64,
    pub adc_start_us: f64,
    pub sample_rate_msps: f64,
    pub samples_per_chirp: usize,
    pub tx_count: usize,
    pub rx_count: usize,
    pub chirps_per_tx: usize,
    pub adc_mode: AdcMode,
}

impl Default for ChirpConfig {
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
            adc_mode: AdcMode::Real,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivedParams {
    pub bandwidth_ghz: f64,
    pub range_resolution_m: f64,
    pub max_range_m: f64,
    pub range_bin_m: f64,
}

impl ChirpConfig {
    /// Slope in Hz/s.
    fn slope_hz_per_s(&self) -> f64 {
        self.slope_mhz_per_us * 1e12
    }

    fn sample_rate_hz(&self) -> f64 {
        self.sample_rate_msps * 1e6
    }

    pub fn sampling_window_us(&self) -> f64 {
        self.samples_per_chirp as f64 / self.sample_rate_msps
    }

    pub fn virtual_elements(&self) -> usize {
        self.tx_count * self.rx_count
    }

    /// Range bins kept after the range FFT.
    pub fn range_bins(&self) -> usize {
        match self.adc_mode {
            AdcMode::Real => self.samples_per_chirp / 2,
            AdcMode::Complex => self.samples_per_chirp,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("start frequency", self.start_frequency_ghz),
            ("slope", self.slope_mhz_per_us),
            ("chirp duration", self.chirp_duration_us),
            ("sample rate", self.sample_rate_msps),
        ];
        for (what, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::domain(format!("{what} must be positive, got {v}")));
            }
        }
        if !(self.adc_start_us.is_finite() && self.adc_start_us >= 0.0) {
            return Err(Error::domain("ADC start delay must be non-negative"));
        }
        if self.samples_per_chirp < 2 || self.tx_count == 0 || self.rx_count == 0 || self.chirps_per_tx == 0 {
            return Err(Error::domain("sample, antenna and chirp counts must be positive"));
        }
        if self.sampling_window_us() > self.chirp_duration_us - self.adc_start_us + 1e-9 {
            return Err(Error::domain(format!(
                "sampling window {} µs exceeds the chirp after the ADC delay ({} µs)",
                self.sampling_window_us(),
                self.chirp_duration_us - self.adc_start_us
            )));
        }
        let bandwidth = self.slope_mhz_per_us * self.sampling_window_us() * 1e-3;
        let room = BAND_TOP_GHZ - self.start_frequency_ghz;
        if bandwidth > room + BAND_EDGE_TOLERANCE_GHZ {
            return Err(Error::domain(format!(
                "sampled bandwidth {bandwidth:.4} GHz runs past {BAND_TOP_GHZ} GHz (room {room:.4} GHz)"
            )));
        }
        Ok(())
    }

    pub fn derived(&self) -> Result<DerivedParams> {
        self.validate()?;
        let bandwidth_hz = self.slope_hz_per_s() * self.sampling_window_us() * 1e-6;
        let c = SPEED_OF_LIGHT_M_PER_S;
        let usable_beat = match self.adc_mode {
            AdcMode::Real => self.sample_rate_hz() / 2.0,
            AdcMode::Complex => self.sample_rate_hz(),
        };
        Ok(DerivedParams {
            bandwidth_ghz: bandwidth_hz * 1e-9,
            range_resolution_m: c / (2.0 * bandwidth_hz),
            max_range_m: usable_beat * c / (2.0 * self.slope_hz_per_s()),
            range_bin_m: c / (2.0 * bandwidth_hz),
        })
    }

    /// Carrier frequency at the first ADC sample.
    fn adc_start_frequency_hz(&self) -> f64 {
        self.start_frequency_ghz * 1e9 + self.slope_hz_per_s() * self.adc_start_us * 1e-6
    }

    pub fn beat_frequency_hz(&self, range_m: f64) -> f64 {
        2.0 * self.slope_hz_per_s() * range_m / SPEED_OF_LIGHT_M_PER_S
    }
}

/// Reflection strength of a point target.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TargetStrength {
    /// Radar cross section; the received amplitude is `√σ / R²`.
    Rcs(f64),
    /// Amplitude used as is, independent of range.
    Amplitude(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointTarget {
    pub range_m: f64,
    pub azimuth_deg: f64,
    pub strength: TargetStrength,
}

impl PointTarget {
    pub fn new(range_m: f64, azimuth_deg: f64, rcs_dbsm: f64) -> Self {
        Self {
            range_m,
            azimuth_deg,
            strength: TargetStrength::Rcs(rcs_dbsm),
        }
    }

    pub fn amplitude(&self) -> f64 {
        match self.strength {
            TargetStrength::Rcs(db) => 10f64.powf(db / 20.0) / (self.range_m * self.range_m),
            TargetStrength::Amplitude(a) => a,
        }
    }
}

/// Azimuth-only virtual array, positions in half-wavelengths.
#[derive(Debug, Clone, PartialEq)]
pub struct VirtualArray {
    tx_count: usize,
    rx_count: usize,
    positions: Vec<f64>,
}

impl VirtualArray {
    pub fn new(tx_count: usize, rx_count: usize, positions: Vec<f64>) -> Result<Self> {
        if tx_count == 0 || rx_count == 0 {
            return Err(Error::domain("array needs at least one tx and one rx"));
        }
        if positions.len() != tx_count * rx_count {
            return Err(Error::mismatch(format!(
                "{} positions for {}×{} virtual elements",
                positions.len(),
                tx_count,
                rx_count
            )));
        }
        if positions.windows(2).any(|w| !(w[1] > w[0])) || positions.iter().any(|p| !p.is_finite()) {
            return Err(Error::domain("virtual element positions must be strictly increasing"));
        }
        Ok(Self {
            tx_count,
            rx_count,
            positions,
        })
    }

    /// Uniform line at λ/2 spacing, element `t·rx + r` at position `t·rx + r`.
    pub fn uniform(tx_count: usize, rx_count: usize) -> Result<Self> {
        Self::new(tx_count, rx_count, (0..tx_count * rx_count).map(|v| v as f64).collect())
    }

    pub fn for_config(config: &ChirpConfig) -> Result<Self> {
        Self::uniform(config.tx_count, config.rx_count)
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    pub fn element(&self, tx: usize, rx: usize) -> usize {
        tx * self.rx_count + rx
    }

    /// Phase progression `e^{jπ·sinθ·p}` over the elements.
    pub fn steering_vector(&self, azimuth_deg: f64) -> Vec<Complex64> {
        let s = azimuth_deg.to_radians().sin();
        self.positions
            .iter()
            .map(|p| Complex64::from_polar(1.0, std::f64::consts::PI * s * p))
            .collect()
    }

    fn check(&self, config: &ChirpConfig) -> Result<()> {
        if self.tx_count != config.tx_count || self.rx_count != config.rx_count {
            return Err(Error::mismatch("virtual array does not match the chirp config antenna counts"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    /// Noise power per sample in dB; `None` disables noise.
    pub level_db: Option<f64>,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn off() -> Self {
        Self {
            level_db: None,
            seed: 0,
        }
    }

    pub fn new(level_db: f64, seed: u64) -> Self {
        Self {
            level_db: Some(level_db),
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum FrameData {
    Real(Vec<f64>),
    Complex(Vec<Complex64>),
}

impl FrameData {
    fn len(&self) -> usize {
        match self {
            FrameData::Real(v) => v.len(),
            FrameData::Complex(v) => v.len(),
        }
    }
}

/// One frame of raw ADC samples.
#[derive(Debug, Clone, PartialEq)]
pub struct RadarFrame {
    config: ChirpConfig,
    array: VirtualArray,
    data: FrameData,
}

const FRAME_MAGIC: &str = "retromark-frame v1";

impl RadarFrame {
    pub fn new(config: ChirpConfig, array: VirtualArray, data: FrameData) -> Result<Self> {
        config.validate()?;
        array.check(&config)?;
        let expected = config.chirps_per_tx * config.virtual_elements() * config.samples_per_chirp;
        let kind_ok = matches!(
            (&data, config.adc_mode),
            (FrameData::Real(_), AdcMode::Real) | (FrameData::Complex(_), AdcMode::Complex)
        );
        if !kind_ok {
            return Err(Error::mismatch("frame sample type does not match the ADC mode"));
        }
        if data.len() != expected {
            return Err(Error::mismatch(format!(
                "frame holds {} samples, config needs {expected}",
                data.len()
            )));
        }
        Ok(Self { config, array, data })
    }

    pub fn config(&self) -> &ChirpConfig {
        &self.config
    }

    pub fn array(&self) -> &VirtualArray {
        &self.array
    }

    pub fn data(&self) -> &FrameData {
        &self.data
    }

    fn row_range(&self, chirp: usize, element: usize) -> std::ops::Range<usize> {
        let n = self.config.samples_per_chirp;
        let start = (chirp * self.config.virtual_elements() + element) * n;
        start..start + n
    }

    /// Samples of one (chirp repeat, virtual element) slot as complex values.
    pub fn slot(&self, chirp: usize, element: usize) -> Vec<Complex64> {
        let r = self.row_range(chirp, element);
        match &self.data {
            FrameData::Real(v) => v[r].iter().map(|&x| Complex64::new(x, 0.0)).collect(),
            FrameData::Complex(v) => v[r].to_vec(),
        }
    }

    /// Zero every slot fired by transmitter `tx`.
    pub fn zero_tx(&mut self, tx: usize) {
        let rows: Vec<_> = (0..self.config.chirps_per_tx)
            .flat_map(|c| (0..self.config.rx_count).map(move |r| (c, r)))
            .map(|(c, r)| self.row_range(c, self.array.element(tx, r)))
            .collect();
        for range in rows {
            match &mut self.data {
                FrameData::Real(v) => v[range].fill(0.0),
                FrameData::Complex(v) => v[range].fill(Complex64::default()),
            }
        }
    }

    /// Multiply every sample by `g`.
    pub fn scale(&mut self, g: f64) {
        match &mut self.data {
            FrameData::Real(v) => v.iter_mut().for_each(|x| *x *= g),
            FrameData::Complex(v) => v.iter_mut().for_each(|x| *x *= g),
        }
    }

    /// Text header line followed by little-endian f64 samples (I then Q for
    /// complex frames).
    pub fn write_binary<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let c = &self.config;
        let mode = match c.adc_mode {
            AdcMode::Real => "real",
            AdcMode::Complex => "complex",
        };
        writeln!(
            out,
            "{FRAME_MAGIC} mode={mode} chirps={} tx={} rx={} samples={}",
            c.chirps_per_tx, c.tx_count, c.rx_count, c.samples_per_chirp
        )?;
        match &self.data {
            FrameData::Real(v) => v.iter().try_for_each(|x| out.write_all(&x.to_le_bytes())),
            FrameData::Complex(v) => v.iter().try_for_each(|x| {
                out.write_all(&x.re.to_le_bytes())?;
                out.write_all(&x.im.to_le_bytes())
            }),
        }
    }

    /// Read a frame written by [`RadarFrame::write_binary`]; the header must
    /// agree with `config`.
    pub fn read_binary<R: BufRead>(mut input: R, config: ChirpConfig, array: VirtualArray) -> Result<Self> {
        let bad = |m: String| Error::Parse {
            path: "<frame>".into(),
            line: 1,
            message: m,
        };
        let mut header = String::new();
        input.read_line(&mut header).map_err(|e| bad(e.to_string()))?;
        let mode = match config.adc_mode {
            AdcMode::Real => "real",
            AdcMode::Complex => "complex",
        };
        let expected = format!(
            "{FRAME_MAGIC} mode={mode} chirps={} tx={} rx={} samples={}",
            config.chirps_per_tx, config.tx_count, config.rx_count, config.samples_per_chirp
        );
        if header.trim_end() != expected {
            return Err(bad(format!("header `{}` does not match `{expected}`", header.trim_end())));
        }
        let mut bytes = Vec::new();
        input.read_to_end(&mut bytes).map_err(|e| bad(e.to_string()))?;
        if bytes.len() % 8 != 0 {
            return Err(bad("sample payload is not a whole number of f64 values".into()));
        }
        let vals: Vec<f64> = bytes
            .chunks_exact(8)
            .map(|b| f64::from_le_bytes(b.try_into().expect("8-byte chunk")))
            .collect();
        let data = match config.adc_mode {
            AdcMode::Real => FrameData::Real(vals),
            AdcMode::Complex => {
                if vals.len() % 2 != 0 {
                    return Err(bad("complex payload has an odd number of values".into()));
                }
                FrameData::Complex(vals.chunks_exact(2).map(|p| Complex64::new(p[0], p[1])).collect())
            }
        };
        Self::new(config, array, data)
    }
}

/// Check every target lies inside the unambiguous range and |azimuth| < 90°.
pub fn validate_targets(config: &ChirpConfig, targets: &[PointTarget]) -> Result<()> {
    let max = config.derived()?.max_range_m;
    let offenders: Vec<String> = targets
        .iter()
        .enumerate()
        .filter(|(_, t)| {
            !(t.range_m > 0.0 && t.range_m <= max && t.azimuth_deg.abs() < 90.0 && t.amplitude().is_finite())
        })
        .map(|(i, t)| format!("#{i} ({} m, {}°)", t.range_m, t.azimuth_deg))
        .collect();
    if offenders.is_empty() {
        Ok(())
    } else {
        Err(Error::domain(format!(
            "targets must lie in (0, {max:.2}] m with |azimuth| < 90°: {}",
            offenders.join(", ")
        )))
    }
}

/// Noise-free beat signal of one virtual element (complex form).
fn element_signal(config: &ChirpConfig, targets: &[PointTarget], position: f64) -> Vec<Complex64> {
    let n = config.samples_per_chirp;
    let fs = config.sample_rate_hz();
    let c = SPEED_OF_LIGHT_M_PER_S;
    let mut out = vec![Complex64::default(); n];
    for t in targets {
        let fb = config.beat_frequency_hz(t.range_m);
        let phi0 = 4.0 * std::f64::consts::PI * t.range_m * config.adc_start_frequency_hz() / c
            + std::f64::consts::PI * t.azimuth_deg.to_radians().sin() * position;
        let a = t.amplitude();
        for (k, o) in out.iter_mut().enumerate() {
            // reduce the phase before the trig call to keep large products accurate
            let cycles = (fb / fs * k as f64).fract();
            *o += Complex64::from_polar(a, 2.0 * std::f64::consts::PI * cycles + phi0);
        }
    }
    out
}

/// Build a frame for static point targets. Noise is drawn per chirp repeat
/// from its own ChaCha stream, so frames are reproducible for a given seed.
pub fn synthesize_frame(
    config: &ChirpConfig,
    array: &VirtualArray,
    targets: &[PointTarget],
    noise: NoiseSpec,
) -> Result<RadarFrame> {
    config.validate()?;
    array.check(config)?;
    validate_targets(config, targets)?;
    let v_count = config.virtual_elements();
    let n = config.samples_per_chirp;
    let clean: Vec<Vec<Complex64>> = array
        .positions()
        .iter()
        .map(|&p| element_signal(config, targets, p))
        .collect();
    let sigma2 = noise.level_db.map(|db| 10f64.powf(db / 10.0));
    let per_chirp = v_count * n;
    let chirp_rng = |c: usize| {
        let mut rng = ChaCha8Rng::seed_from_u64(noise.seed);
        rng.set_stream(c as u64);
        rng
    };
    let data = match config.adc_mode {
        AdcMode::Real => {
            let mut v = vec![0.0; config.chirps_per_tx * per_chirp];
            let normal = sigma2.map(|s| Normal::new(0.0, s.sqrt()).expect("finite noise level"));
            v.par_chunks_mut(per_chirp).enumerate().for_each(|(c, chunk)| {
                let mut rng = chirp_rng(c);
                for (e, row) in chunk.chunks_mut(n).enumerate() {
                    for (x, s) in row.iter_mut().zip(&clean[e]) {
                        *x = s.re + normal.map_or(0.0, |d| d.sample(&mut rng));
                    }
                }
            });
            FrameData::Real(v)
        }
        AdcMode::Complex => {
            let mut v = vec![Complex64::default(); config.chirps_per_tx * per_chirp];
            let normal = sigma2.map(|s| Normal::new(0.0, (s / 2.0).sqrt()).expect("finite noise level"));
            v.par_chunks_mut(per_chirp).enumerate().for_each(|(c, chunk)| {
                let mut rng = chirp_rng(c);
                for (e, row) in chunk.chunks_mut(n).enumerate() {
                    for (x, s) in row.iter_mut().zip(&clean[e]) {
                        *x = match normal {
                            Some(d) => s + Complex64::new(d.sample(&mut rng), d.sample(&mut rng)),
                            None => *s,
                        };
                    }
                }
            });
            FrameData::Complex(v)
        }
    };
    RadarFrame::new(*config, array.clone(), data)
}

/// Range spectra of every slot, kept bins only, laid out like the frame.
#[derive(Debug, Clone)]
pub struct RangeSpectra {
    chirps: usize,
    elements: usize,
    bins: usize,
    bin_m: f64,
    data: Vec<Complex64>,
}

impl RangeSpectra {
    pub fn bins(&self) -> usize {
        self.bins
    }

    pub fn range_axis_m(&self) -> Vec<f64> {
        (0..self.bins).map(|k| k as f64 * self.bin_m).collect()
    }

    pub fn row(&self, chirp: usize, element: usize) -> &[Complex64] {
        let start = (chirp * self.elements + element) * self.bins;
        &self.data[start..start + self.bins]
    }

    /// Virtual-array snapshot at one chirp repeat and range bin.
    pub fn snapshot(&self, chirp: usize, bin: usize) -> Vec<Complex64> {
        (0..self.elements).map(|e| self.row(chirp, e)[bin]).collect()
    }
}

/// Unwindowed fast-time FFT of every slot.
pub fn range_fft(frame: &RadarFrame) -> Result<RangeSpectra> {
    let cfg = frame.config();
    let n = cfg.samples_per_chirp;
    let bins = cfg.range_bins();
    let elements = cfg.virtual_elements();
    let fft = FftPlanner::new().plan_fft_forward(n);
    let mut data = vec![Complex64::default(); cfg.chirps_per_tx * elements * bins];
    data.par_chunks_mut(elements * bins).enumerate().for_each(|(c, chunk)| {
        let mut buf = vec![Complex64::default(); n];
        let mut scratch = vec![Complex64::default(); fft.get_inplace_scratch_len()];
        for (e, out) in chunk.chunks_mut(bins).enumerate() {
            let range = frame.row_range(c, e);
            match &frame.data {
                FrameData::Real(v) => buf.iter_mut().zip(&v[range]).for_each(|(b, &x)| *b = Complex64::new(x, 0.0)),
                FrameData::Complex(v) => buf.copy_from_slice(&v[range]),
            }
            fft.process_with_scratch(&mut buf, &mut scratch);
            out.copy_from_slice(&buf[..bins]);
        }
    });
    Ok(RangeSpectra {
        chirps: cfg.chirps_per_tx,
        elements,
        bins,
        bin_m: cfg.derived()?.range_bin_m,
        data,
    })
}

/// Symmetric Hamming window.
pub fn hamming(len: usize) -> Vec<f64> {
    if len == 1 {
        return vec![1.0];
    }
    (0..len)
        .map(|i| 0.54 - 0.46 * (2.0 * std::f64::consts::PI * i as f64 / (len - 1) as f64).cos())
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProcessOptions {
    /// Angle FFT length (zero-padded); odd lengths centre a bin on broadside.
    pub angle_bins: usize,
    pub hamming: bool,
}

impl Default for ProcessOptions {
    fn default() -> Self {
        Self {
            angle_bins: DEFAULT_ANGLE_BINS,
            hamming: true,
        }
    }
}

/// Linear power on a range × azimuth grid.
#[derive(Debug, Clone, PartialEq)]
pub struct RangeAzimuthMap {
    pub range_m: Vec<f64>,
    pub azimuth_deg: Vec<f64>,
    /// Indexed `[range bin, azimuth bin]`.
    pub power: Array2<f64>,
}

impl RangeAzimuthMap {
    pub fn new(range_m: Vec<f64>, azimuth_deg: Vec<f64>, power: Array2<f64>) -> Result<Self> {
        if power.dim() != (range_m.len(), azimuth_deg.len()) {
            return Err(Error::mismatch("map power does not match its axes"));
        }
        let monotone = |v: &[f64]| v.windows(2).all(|w| w[1] > w[0]);
        if !monotone(&range_m) || !monotone(&azimuth_deg) {
            return Err(Error::domain("map axes must be strictly increasing"));
        }
        if power.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
            return Err(Error::domain("map power must be finite and non-negative"));
        }
        Ok(Self {
            range_m,
            azimuth_deg,
            power,
        })
    }

    pub fn is_empty(&self) -> bool {
        self.power.is_empty()
    }

    /// Indices of the largest cell; ties go to the first in row-major order.
    pub fn argmax(&self) -> Option<(usize, usize)> {
        let mut best: Option<((usize, usize), f64)> = None;
        for (idx, &p) in self.power.indexed_iter() {
            if best.map_or(true, |(_, b)| p > b) {
                best = Some((idx, p));
            }
        }
        best.map(|b| b.0)
    }

    pub fn mean_power(&self) -> f64 {
        self.power.mean().unwrap_or(0.0)
    }

    fn same_axes(&self, other: &Self) -> bool {
        self.range_m == other.range_m && self.azimuth_deg == other.azimuth_deg
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "range_m,azimuth_deg,power_linear")?;
        for (i, r) in self.range_m.iter().enumerate() {
            for (j, a) in self.azimuth_deg.iter().enumerate() {
                writeln!(out, "{r:.5},{a:.4},{:.6e}", self.power[[i, j]])?;
            }
        }
        Ok(())
    }

    /// Binary graymap, one row per range bin (nearest first), `dynamic_db`
    /// below the peak mapped to black.
    pub fn write_pgm<W: Write>(&self, mut out: W, dynamic_db: f64) -> std::io::Result<()> {
        let (rows, cols) = self.power.dim();
        writeln!(out, "P5\n{cols} {rows}\n255")?;
        let peak = self.power.iter().copied().fold(0.0, f64::max);
        let pixels: Vec<u8> = self
            .power
            .iter()
            .map(|&p| {
                if peak <= 0.0 || p <= 0.0 {
                    return 0;
                }
                let db = 10.0 * (p / peak).log10();
                (((db + dynamic_db) / dynamic_db).clamp(0.0, 1.0) * 255.0).round() as u8
            })
            .collect();
        out.write_all(&pixels)
    }
}

/// Range FFT, Hamming-weighted angle DFT across the virtual array, and
/// magnitude averaging over chirp repeats.
pub fn process_frame(frame: &RadarFrame) -> Result<RangeAzimuthMap> {
    process_frame_with(frame, ProcessOptions::default())
}

pub fn process_frame_with(frame: &RadarFrame, opts: ProcessOptions) -> Result<RangeAzimuthMap> {
    if opts.angle_bins < 2 {
        return Err(Error::domain("angle FFT needs at least two bins"));
    }
    let spectra = range_fft(frame)?;
    let q_len = opts.angle_bins;
    let v_len = spectra.elements;
    let window = if opts.hamming { hamming(v_len) } else { vec![1.0; v_len] };
    // fftshifted bin index q ↦ spatial frequency 2q/Q in units of sinθ
    let q_lo = -((q_len / 2) as i64);
    let sin_axis: Vec<f64> = (0..q_len).map(|i| 2.0 * (q_lo + i as i64) as f64 / q_len as f64).collect();
    let azimuth_deg: Vec<f64> = sin_axis.iter().map(|s| s.clamp(-1.0, 1.0).asin().to_degrees()).collect();
    let positions = frame.array().positions();
    // split re/im so the inner product vectorizes
    let mut w_re = vec![0.0; q_len * v_len];
    let mut w_im = vec![0.0; q_len * v_len];
    for (q, s) in sin_axis.iter().enumerate() {
        for v in 0..v_len {
            let w = Complex64::from_polar(window[v], -std::f64::consts::PI * s * positions[v]);
            w_re[q * v_len + v] = w.re;
            w_im[q * v_len + v] = w.im;
        }
    }
    let bins = spectra.bins;
    let chirps = spectra.chirps;
    let mut power = Array2::<f64>::zeros((bins, q_len));
    let rows = power.as_slice_mut().expect("standard layout");
    rows.par_chunks_mut(q_len).enumerate().for_each(|(k, row)| {
        let mut x_re = vec![0.0; v_len];
        let mut x_im = vec![0.0; v_len];
        for c in 0..chirps {
            for v in 0..v_len {
                let z = spectra.data[(c * v_len + v) * bins + k];
                x_re[v] = z.re;
                x_im[v] = z.im;
            }
            for (q, acc) in row.iter_mut().enumerate() {
                let (wr, wi) = (&w_re[q * v_len..(q + 1) * v_len], &w_im[q * v_len..(q + 1) * v_len]);
                let mut re = 0.0;
                let mut im = 0.0;
                for v in 0..v_len {
                    re += wr[v] * x_re[v] - wi[v] * x_im[v];
                    im += wr[v] * x_im[v] + wi[v] * x_re[v];
                }
                *acc += re.hypot(im);
            }
        }
        for p in row.iter_mut() {
            let avg = *p / chirps as f64;
            *p = avg * avg;
        }
    });
    RangeAzimuthMap::new(spectra.range_axis_m(), azimuth_deg, power)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseFloor<'a> {
    Db(f64),
    /// Mean power of a target-free map.
    Sky(&'a RangeAzimuthMap),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeakReport {
    pub range_m: f64,
    pub azimuth_deg: f64,
    pub power_db: f64,
    pub noise_db: f64,
    pub snr_db: f64,
}

impl PeakReport {
    pub fn write_text<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "peak_range_m = {:.4}", self.range_m)?;
        writeln!(out, "peak_azimuth_deg = {:.4}", self.azimuth_deg)?;
        writeln!(out, "peak_power_db = {:.4}", self.power_db)?;
        writeln!(out, "noise_db = {:.4}", self.noise_db)?;
        writeln!(out, "snr_db = {:.4}", self.snr_db)
    }
}

pub fn peak_and_snr(map: &RangeAzimuthMap, noise: NoiseFloor<'_>) -> Result<PeakReport> {
    let (i, j) = map.argmax().ok_or_else(|| Error::EmptySelection("map has no cells".into()))?;
    let noise_db = match noise {
        NoiseFloor::Db(db) => db,
        NoiseFloor::Sky(sky) => {
            if sky.is_empty() {
                return Err(Error::EmptySelection("sky map has no cells".into()));
            }
            10.0 * sky.mean_power().log10()
        }
    };
    let power_db = 10.0 * map.power[[i, j]].log10();
    Ok(PeakReport {
        range_m: map.range_m[i],
        azimuth_deg: map.azimuth_deg[j],
        power_db,
        noise_db,
        snr_db: power_db - noise_db,
    })
}

fn window_peak_db(map: &RangeAzimuthMap, window: (f64, f64)) -> Result<f64> {
    let rows: Vec<usize> = (0..map.range_m.len())
        .filter(|&i| map.range_m[i] >= window.0 && map.range_m[i] <= window.1)
        .collect();
    if rows.is_empty() {
        return Err(Error::EmptySelection(format!(
            "range window [{}, {}] m contains no bins",
            window.0, window.1
        )));
    }
    let peak = rows
        .iter()
        .flat_map(|&i| map.power.row(i).to_vec())
        .fold(0.0, f64::max);
    Ok(10.0 * peak.log10())
}

/// Peak power in a range window with the marker present minus without it.
pub fn marker_delta(with: &RangeAzimuthMap, without: &RangeAzimuthMap, window_m: (f64, f64)) -> Result<f64> {
    if !with.same_axes(without) {
        return Err(Error::mismatch("maps do not share range/azimuth axes"));
    }
    if !(window_m.1 >= window_m.0) {
        return Err(Error::domain("range window is reversed"));
    }
    Ok(window_peak_db(with, window_m)? - window_peak_db(without, window_m)?)
}
