//! Physical quantities with explicit unit suffixes.
//!
//! Scenario files spell every dimensional value as `"<number> <unit>"`
//! (`"100 m"`, `"8192 ns"`, `"0.2 dB/km"`). Bare numbers are rejected for
//! these fields so a file can never silently mix up nanoseconds and metres.
//! Values are held in SI base units.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::Error;

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

macro_rules! quantity {
    ($(#[$meta:meta])* $name:ident, base = $base:literal, units = [$(($sym:literal, $scale:expr)),+ $(,)?]) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default)]
        pub struct $name(pub f64);

        impl $name {
            pub const UNITS: &'static [(&'static str, f64)] = &[$(($sym, $scale)),+];

            pub fn value(self) -> f64 {
                self.0
            }
        }

        impl FromStr for $name {
            type Err = Error;

            fn from_str(s: &str) -> Result<Self, Error> {
                parse_with_units(s, Self::UNITS, stringify!($name)).map($name)
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "{} {}", self.0, $base)
            }
        }

        impl Serialize for $name {
            fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
                s.collect_str(self)
            }
        }

        impl<'de> Deserialize<'de> for $name {
            fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
                let raw = String::deserialize(d)?;
                raw.parse().map_err(serde::de::Error::custom)
            }
        }
    };
}

quantity!(
    /// Length in metres.
    Length, base = "m",
    units = [("m", 1.0), ("km", 1e3), ("cm", 1e-2), ("mm", 1e-3), ("um", 1e-6), ("nm", 1e-9)]
);
quantity!(
    /// Time in seconds.
    Time, base = "s",
    units = [("s", 1.0), ("ms", 1e-3), ("us", 1e-6), ("ns", 1e-9), ("ps", 1e-12)]
);
quantity!(
    /// Frequency in hertz.
    Frequency, base = "Hz",
    units = [("Hz", 1.0), ("kHz", 1e3), ("MHz", 1e6), ("GHz", 1e9)]
);
quantity!(
    /// Energy in joules.
    Energy, base = "J",
    units = [("J", 1.0), ("mJ", 1e-3), ("uJ", 1e-6), ("nJ", 1e-9), ("pJ", 1e-12), ("fJ", 1e-15)]
);
quantity!(
    /// Power ratio in decibels.
    Decibel, base = "dB",
    units = [("dB", 1.0)]
);
quantity!(
    /// Per-metre coefficient such as a distributed backscatter fraction.
    PerLength, base = "/m",
    units = [("/m", 1.0), ("/km", 1e-3)]
);
quantity!(
    /// Fiber attenuation in dB per metre.
    DbPerLength, base = "dB/m",
    units = [("dB/m", 1.0), ("dB/km", 1e-3)]
);

fn parse_with_units(s: &str, units: &[(&str, f64)], what: &str) -> Result<f64, Error> {
    let s = s.trim();
    let split = s
        // no unit symbol starts with 'e', so exponents stay with the number
        .find(|c: char| (c.is_ascii_alphabetic() && c != 'e' && c != 'E') || c == '/')
        .ok_or_else(|| Error::Parse(format!("{what} `{s}` has no unit")))?;
    let (num, unit) = s.split_at(split);
    let unit = unit.trim();
    let value: f64 = num
        .trim()
        .parse()
        .map_err(|_| Error::Parse(format!("{what} `{s}`: bad number `{}`", num.trim())))?;
    if !value.is_finite() {
        return Err(Error::Parse(format!("{what} `{s}` is not finite")));
    }
    let scale = units
        .iter()
        .find(|(sym, _)| *sym == unit)
        .map(|(_, k)| *k)
        .ok_or_else(|| {
            let known: Vec<_> = units.iter().map(|(u, _)| *u).collect();
            Error::Parse(format!("{what} `{s}`: unknown unit `{unit}` (expected one of {known:?})"))
        })?;
    Ok(value * scale)
}

/// Converts a power ratio in dB (loss positive) to a linear transmission factor.
pub fn db_to_transmission(loss_db: f64) -> f64 {
    10f64.powf(-loss_db / 10.0)
}

pub fn transmission_to_db(t: f64) -> f64 {
    -10.0 * t.log10()
}
