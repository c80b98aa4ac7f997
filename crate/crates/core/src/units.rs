//! Physical constants and unit-carrying scalars.
//!
//! Lengths are millimetres and frequencies gigahertz unless a name says
//! otherwise. Conversion to SI happens only inside the RCS and link formulas.

use std::f64::consts::PI;
use std::fmt;

use crate::error::{Error, Result};

/// Speed of light in vacuum, m/s (exact).
pub const SPEED_OF_LIGHT_M_PER_S: f64 = 299_792_458.0;

/// Speed of light expressed as mm·GHz, so `λ[mm] = C / f[GHz]`.
pub const SPEED_OF_LIGHT_MM_GHZ: f64 = SPEED_OF_LIGHT_M_PER_S * 1e-6;

pub const MM_PER_INCH: f64 = 25.4;

/// Wavelength in millimetres of a carrier at `frequency_ghz`.
pub fn wavelength_of(frequency_ghz: f64) -> Result<f64> {
    Ok(Frequency::from_ghz(frequency_ghz)?.wavelength().mm())
}

#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Frequency(f64);

impl Frequency {
    pub fn from_ghz(ghz: f64) -> Result<Self> {
        if !(ghz.is_finite() && ghz > 0.0) {
            return Err(Error::domain(format!(
                "frequency must be positive and finite, got {ghz} GHz"
            )));
        }
        Ok(Self(ghz))
    }

    pub fn ghz(self) -> f64 {
        self.0
    }

    pub fn hz(self) -> f64 {
        self.0 * 1e9
    }

    pub fn wavelength(self) -> Wavelength {
        Wavelength(SPEED_OF_LIGHT_MM_GHZ / self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Wavelength(f64);

impl Wavelength {
    pub fn from_mm(mm: f64) -> Result<Self> {
        if !(mm.is_finite() && mm > 0.0) {
            return Err(Error::domain(format!(
                "wavelength must be positive and finite, got {mm} mm"
            )));
        }
        Ok(Self(mm))
    }

    pub fn mm(self) -> f64 {
        self.0
    }

    pub fn meters(self) -> f64 {
        self.0 * 1e-3
    }

    /// Free-space wavenumber in rad/mm.
    pub fn wavenumber(self) -> f64 {
        2.0 * PI / self.0
    }

    pub fn frequency(self) -> Frequency {
        Frequency(SPEED_OF_LIGHT_MM_GHZ / self.0)
    }
}

macro_rules! decibel_type {
    ($(#[$meta:meta])* $name:ident, $unit:literal) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
        pub struct $name(pub f64);

        impl $name {
            /// From a linear power-like quantity.
            pub fn from_linear(linear: f64) -> Self {
                Self(10.0 * linear.log10())
            }

            pub fn to_linear(self) -> f64 {
                10f64.powf(self.0 / 10.0)
            }

            pub fn value(self) -> f64 {
                self.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "{:.2} {}", self.0, $unit)
            }
        }
    };
}

decibel_type!(
    /// Radar cross section relative to 1 m².
    Dbsm,
    "dBsm"
);
decibel_type!(
    /// Antenna gain relative to an isotropic radiator.
    Dbi,
    "dBi"
);
decibel_type!(
    /// Dimensionless power ratio.
    Db,
    "dB"
);

/// Power ratio in dB from a field (amplitude) ratio.
pub fn amplitude_to_db(ratio: f64) -> f64 {
    20.0 * ratio.log10()
}
