//! Fixed physical constants (SI, CODATA 2018 values).

use serde::Serialize;

/// Table of the physical constants used throughout the crate.
///
/// `phi0` and `r_k` are derived from `h` and `e` so that the identities
/// `Φ0 = h/2e` and `R_K = h/e²` hold to rounding.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhysicalConstants {
    /// Planck constant (J·s)
    pub h: f64,
    /// Reduced Planck constant (J·s)
    pub hbar: f64,
    /// Elementary charge (C)
    pub e: f64,
    /// Superconducting flux quantum h/2e (Wb)
    pub phi0: f64,
    /// Vacuum permeability (H/m)
    pub mu0: f64,
    /// Electron mass (kg)
    pub m_e: f64,
    /// Boltzmann constant (J/K)
    pub k_b: f64,
    /// Bohr magneton (J/T)
    pub mu_b: f64,
    /// von Klitzing constant h/e² (Ω)
    pub r_k: f64,
}

const H: f64 = 6.626_070_15e-34;
const E: f64 = 1.602_176_634e-19;

/// The constant table. Every module reads constants from here.
pub const SI: PhysicalConstants = PhysicalConstants {
    h: H,
    hbar: H / (2.0 * std::f64::consts::PI),
    e: E,
    phi0: H / (2.0 * E),
    mu0: 1.256_637_062_12e-6,
    m_e: 9.109_383_701_5e-31,
    k_b: 1.380_649e-23,
    mu_b: 9.274_010_078_3e-24,
    r_k: H / (E * E),
};

impl Default for PhysicalConstants {
    fn default() -> Self {
        SI
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn derived_constants_are_consistent() {
        let c = PhysicalConstants::default();
        assert!(rel(c.phi0, c.h / (2.0 * c.e)) < 1e-12);
        assert!(rel(c.r_k, c.h / (c.e * c.e)) < 1e-12);
        assert!(rel(c.hbar * 2.0 * std::f64::consts::PI, c.h) < 1e-15);
        // 25.8 kΩ and 2.07e-15 Wb
        assert!((c.r_k - 25_812.807).abs() < 1e-2);
        assert!(rel(c.phi0, 2.067_833_848e-15) < 1e-9);
    }
}
