//! Physical constants and lab-unit conversions.
//!
//! Everything downstream computes in SI; the unit machinery here exists so
//! that configs and CLI flags can speak μK, G/cm, μm, ms and cm/s.
//!
//! Constants from CODATA 2018 / exact SI definitions.

use crate::error::{Error, Result};

/// Boltzmann constant (J/K), exact SI.
pub const K_B: f64 = 1.380649e-23;

/// Bohr magneton (J/T), CODATA 2018.
pub const MU_B: f64 = 9.274_010_078_3e-24;

/// Mass of ⁸⁵Rb (kg): 84.911789738 u × 1.66053906660e-27 kg/u.
pub const MASS_RB85: f64 = 1.409993e-25;

/// Fixed constants for the atom and state used throughout.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct PhysicalConstants {
    /// Boltzmann constant (J/K).
    pub k_b: f64,
    /// Magnetic moment scale (J/T).
    pub mu_b: f64,
    /// Atom mass (kg).
    pub mass: f64,
    /// g_F·m_F for the selected Zeeman state (dimensionless).
    pub g_f_m_f: f64,
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self::rb85()
    }
}

impl PhysicalConstants {
    /// ⁸⁵Rb in the doubly polarized |F=3, m_F=3⟩ state: g_F·m_F = (1/3)·3 = 1.
    pub const fn rb85() -> Self {
        PhysicalConstants {
            k_b: K_B,
            mu_b: MU_B,
            mass: MASS_RB85,
            g_f_m_f: 1.0,
        }
    }

    /// Thermal velocity scale σ = √(k_B·T/m) (m/s).
    pub fn thermal_sigma(&self, temperature: f64) -> f64 {
        (self.k_b * temperature / self.mass).sqrt()
    }

    /// Magnetic potential gradient U′ = g_F·m_F·μ_B·B′ (J/m) from a field
    /// gradient B′ (T/m). Rejects negative gradients.
    pub fn gradient_energy_per_length(&self, b_gradient: f64) -> Result<f64> {
        if b_gradient < 0.0 {
            return Err(Error::NegativeGradient(b_gradient));
        }
        Ok(self.g_f_m_f * self.mu_b * b_gradient)
    }

    /// Short fingerprint of the constants, recorded in run manifests so a
    /// result can be tied to the exact numbers that produced it.
    pub fn fingerprint(&self) -> String {
        let canonical = format!(
            "k_b={:e};mu_b={:e};mass={:e};g_f_m_f={:e}",
            self.k_b, self.mu_b, self.mass, self.g_f_m_f
        );
        // FNV-1a, 64-bit.
        let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
        for byte in canonical.bytes() {
            hash ^= u64::from(byte);
            hash = hash.wrapping_mul(0x100_0000_01b3);
        }
        format!("{hash:016x}")
    }
}

/// Physical dimension of a unit, used to gate conversions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Dimension {
    Length,
    Time,
    Velocity,
    Temperature,
    /// Energy. Temperature converts to energy through k_B (and back), so the
    /// two dimensions are treated as compatible.
    Energy,
    /// Magnetic field gradient (T/m and G/cm).
    FieldGradient,
}

impl Dimension {
    fn compatible(self, other: Dimension) -> bool {
        use Dimension::*;
        self == other
            || matches!((self, other), (Temperature, Energy) | (Energy, Temperature))
    }
}

/// A unit understood by the converter. Each unit carries its dimension and
/// the factor to the SI base of that dimension (temperature's base is K,
/// energy's is J; crossing between them multiplies by k_B).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Unit {
    Meter,
    Millimeter,
    Micron,
    Second,
    Millisecond,
    Microsecond,
    MeterPerSecond,
    CentimeterPerSecond,
    Kelvin,
    Millikelvin,
    Microkelvin,
    Nanokelvin,
    Joule,
    TeslaPerMeter,
    GaussPerCentimeter,
}

impl Unit {
    pub fn dimension(self) -> Dimension {
        use Unit::*;
        match self {
            Meter | Millimeter | Micron => Dimension::Length,
            Second | Millisecond | Microsecond => Dimension::Time,
            MeterPerSecond | CentimeterPerSecond => Dimension::Velocity,
            Kelvin | Millikelvin | Microkelvin | Nanokelvin => Dimension::Temperature,
            Joule => Dimension::Energy,
            TeslaPerMeter | GaussPerCentimeter => Dimension::FieldGradient,
        }
    }

    /// Factor to the SI base unit of this unit's dimension.
    pub fn si_factor(self) -> f64 {
        use Unit::*;
        match self {
            Meter | Second | MeterPerSecond | Kelvin | Joule | TeslaPerMeter => 1.0,
            Millimeter | Millisecond | Millikelvin => 1e-3,
            Micron | Microsecond | Microkelvin => 1e-6,
            Nanokelvin => 1e-9,
            CentimeterPerSecond => 1e-2,
            // 1 G/cm = 1e-4 T / 1e-2 m
            GaussPerCentimeter => 1e-2,
        }
    }

    pub fn symbol(self) -> &'static str {
        use Unit::*;
        match self {
            Meter => "m",
            Millimeter => "mm",
            Micron => "um",
            Second => "s",
            Millisecond => "ms",
            Microsecond => "us",
            MeterPerSecond => "m/s",
            CentimeterPerSecond => "cm/s",
            Kelvin => "K",
            Millikelvin => "mK",
            Microkelvin => "uK",
            Nanokelvin => "nK",
            Joule => "J",
            TeslaPerMeter => "T/m",
            GaussPerCentimeter => "G/cm",
        }
    }

    /// Parse a unit suffix, e.g. `"uK"` or `"G/cm"`.
    pub fn parse(s: &str) -> Result<Unit> {
        use Unit::*;
        let unit = match s {
            "m" => Meter,
            "mm" => Millimeter,
            "um" => Micron,
            "s" => Second,
            "ms" => Millisecond,
            "us" => Microsecond,
            "m/s" => MeterPerSecond,
            "cm/s" => CentimeterPerSecond,
            "K" => Kelvin,
            "mK" => Millikelvin,
            "uK" => Microkelvin,
            "nK" => Nanokelvin,
            "J" => Joule,
            "T/m" => TeslaPerMeter,
            "G/cm" => GaussPerCentimeter,
            _ => return Err(Error::UnknownUnit(s.to_string())),
        };
        Ok(unit)
    }
}

/// Convert `value` from `from` to `to`. The conversion is a single multiply
/// and divide, so round-trips are exact to within a few ulps. Temperature
/// and energy interconvert through k_B; any other cross-dimension pair is
/// rejected, naming both units.
pub fn convert(value: f64, from: Unit, to: Unit) -> Result<f64> {
    let (df, dt) = (from.dimension(), to.dimension());
    if !df.compatible(dt) {
        return Err(Error::IncompatibleUnits {
            from: from.symbol().to_string(),
            to: to.symbol().to_string(),
        });
    }
    let mut si = value * from.si_factor();
    if df == Dimension::Temperature && dt == Dimension::Energy {
        si *= K_B;
    } else if df == Dimension::Energy && dt == Dimension::Temperature {
        si /= K_B;
    }
    Ok(si / to.si_factor())
}

/// Parse `"26uK"`, `"8G/cm"`, `"0.5 ms"` into (value, unit). Whitespace
/// between number and suffix is tolerated.
pub fn parse_quantity(s: &str) -> Result<(f64, Unit)> {
    let trimmed = s.trim();
    let split = trimmed
        .char_indices()
        .find(|(_, c)| !(c.is_ascii_digit() || matches!(c, '.' | '-' | '+' | 'e' | 'E')))
        .map(|(i, _)| i)
        .unwrap_or(trimmed.len());
    // A trailing exponent letter with no digits after it ("2e") would split
    // wrong, but then the number parse below fails and reports the input.
    let (num, suffix) = trimmed.split_at(split);
    let value: f64 = num
        .parse()
        .map_err(|_| Error::MalformedQuantity(s.to_string()))?;
    let unit = Unit::parse(suffix.trim())?;
    Ok((value, unit))
}

/// Parse a quantity and convert it to the given SI target unit.
pub fn parse_to_si(s: &str, target: Unit) -> Result<f64> {
    let (value, unit) = parse_quantity(s)?;
    convert(value, unit, target)
}
