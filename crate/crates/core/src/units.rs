//! Unit conventions.
//!
//! Everything internal is angular frequency in rad/ns and flux in radians
//! (`2π Φ/Φ0`). Inputs and outputs use linear GHz, fF and units of Φ0.

use std::f64::consts::PI;

pub const TWO_PI: f64 = 2.0 * PI;

/// Elementary charge in C (exact SI).
pub const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;
/// Planck constant in J·s (exact SI).
pub const PLANCK: f64 = 6.626_070_15e-34;

/// `e² / (2 h · 1 fF)` expressed in GHz. Dividing by a capacitance in fF
/// yields a charging energy in GHz.
pub const CHARGING_GHZ_FF: f64 =
    ELEMENTARY_CHARGE * ELEMENTARY_CHARGE / (2.0 * PLANCK * 1e-15) / 1e9;

#[inline]
pub fn ghz_to_angular(f_ghz: f64) -> f64 {
    TWO_PI * f_ghz
}

#[inline]
pub fn angular_to_ghz(omega: f64) -> f64 {
    omega / TWO_PI
}

#[inline]
pub fn angular_to_mhz(omega: f64) -> f64 {
    omega / TWO_PI * 1e3
}

#[inline]
pub fn angular_to_khz(omega: f64) -> f64 {
    omega / TWO_PI * 1e6
}

#[inline]
pub fn mhz_to_angular(f_mhz: f64) -> f64 {
    TWO_PI * f_mhz * 1e-3
}

#[inline]
pub fn khz_to_angular(f_khz: f64) -> f64 {
    TWO_PI * f_khz * 1e-6
}

#[inline]
pub fn flux_quanta_to_rad(phi_over_phi0: f64) -> f64 {
    TWO_PI * phi_over_phi0
}

#[inline]
pub fn rad_to_flux_quanta(phi: f64) -> f64 {
    phi / TWO_PI
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn charging_constant() {
        // e^2/(2h) per femtofarad is about 19.370 GHz.
        assert!((CHARGING_GHZ_FF - 19.37023).abs() < 1e-4);
    }

    #[test]
    fn round_trips() {
        assert!((angular_to_ghz(ghz_to_angular(6.6)) - 6.6).abs() < 1e-15);
        assert!((angular_to_khz(khz_to_angular(1.0)) - 1.0).abs() < 1e-12);
        assert!((rad_to_flux_quanta(flux_quanta_to_rad(0.5)) - 0.5).abs() < 1e-15);
    }
}
