//! Strip geometry, film parameters and the closed-form scales derived from
//! them.

use serde::Serialize;
use thiserror::Error;

use crate::constants::PhysicalConstants;

/// Ratio of the first buckling field to the vortex entry threshold.
pub const BUCKLING_RATIO: f64 = 2.48;

#[derive(Debug, Error, PartialEq)]
pub enum DeviceError {
    #[error("invalid device: {0}")]
    InvalidDevice(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("degenerate fit: {0}")]
    DegenerateFit(String),
}

/// Geometry and material parameters of one resonator strip.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DeviceModel {
    /// Strip width (m)
    pub w: f64,
    /// Film thickness (m)
    pub t: f64,
    /// Resonator length (m)
    pub length: f64,
    /// Coherence length (m)
    pub xi: f64,
    /// London penetration depth (m)
    pub lambda_l: f64,
    /// Bare resonator frequency (Hz)
    pub f_r: f64,
    /// Resonator impedance (Ω)
    pub z_r: f64,
}

impl DeviceModel {
    /// The 3 µm × 400 µm, 24 nm thick granular aluminium strip with
    /// ξ = 7 nm, λ_L = 4 µm, f_r = 7.572 GHz and Z_r = 3 kΩ.
    pub fn reference() -> Self {
        DeviceModel {
            w: 3e-6,
            t: 24e-9,
            length: 400e-6,
            xi: 7e-9,
            lambda_l: 4e-6,
            f_r: 7.572e9,
            z_r: 3e3,
        }
    }

    pub fn validate(&self) -> Result<(), DeviceError> {
        let fields = [
            ("w", self.w),
            ("t", self.t),
            ("length", self.length),
            ("xi", self.xi),
            ("lambda_L", self.lambda_l),
            ("f_r", self.f_r),
            ("Z_r", self.z_r),
        ];
        for (name, v) in fields {
            if !v.is_finite() || v <= 0.0 {
                return Err(DeviceError::InvalidDevice(format!(
                    "{name} must be finite and positive, got {v}"
                )));
            }
        }
        if self.t >= self.lambda_l {
            return Err(DeviceError::InvalidDevice(format!(
                "thin-film limit requires t < lambda_L (t = {}, lambda_L = {})",
                self.t, self.lambda_l
            )));
        }
        if self.xi >= self.w {
            return Err(DeviceError::InvalidDevice(format!(
                "xi must be smaller than w (xi = {}, w = {})",
                self.xi, self.w
            )));
        }
        Ok(())
    }
}

/// Scales derived from a [`DeviceModel`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DerivedScales {
    /// Pearl length 2λ_L²/t (m)
    pub pearl_length: f64,
    /// Single-vortex energy Φ0²/(2π µ0 Λ) (J)
    pub eps0: f64,
    /// Dimensionless vortex entry threshold
    pub phi_s: f64,
    /// Threshold field φ_S Φ0 / w² (T)
    pub b_s: f64,
    /// True when `eps0` was supplied by the caller instead of the formula.
    pub eps0_overridden: bool,
}

impl DerivedScales {
    /// Replace the formula value of ε0 with an explicit calibration.
    pub fn with_eps0(mut self, eps0: f64) -> Result<Self, DeviceError> {
        if !eps0.is_finite() || eps0 <= 0.0 {
            return Err(DeviceError::InvalidParameter(format!(
                "eps0 override must be positive, got {eps0}"
            )));
        }
        self.eps0 = eps0;
        self.eps0_overridden = true;
        Ok(self)
    }
}

pub fn derive_scales(
    device: &DeviceModel,
    consts: &PhysicalConstants,
) -> Result<DerivedScales, DeviceError> {
    device.validate()?;
    let pearl_length = 2.0 * device.lambda_l * device.lambda_l / device.t;
    let eps0 = consts.phi0 * consts.phi0 / (2.0 * std::f64::consts::PI * consts.mu0 * pearl_length);
    let phi_s = entry_threshold(device.w, device.xi);
    let b_s = phi_s * consts.phi0 / (device.w * device.w);
    Ok(DerivedScales {
        pearl_length,
        eps0,
        phi_s,
        b_s,
        eps0_overridden: false,
    })
}

/// Threshold flux bias for stable vortices, (2/π)·ln(2w/(πξ)).
pub fn entry_threshold(w: f64, xi: f64) -> f64 {
    use std::f64::consts::PI;
    2.0 / PI * (2.0 * w / (PI * xi)).ln()
}

/// Dimensionless flux bias B·w²/Φ0 of a strip of width `w`.
pub fn flux_bias(b: f64, w: f64, consts: &PhysicalConstants) -> Result<f64, DeviceError> {
    if !b.is_finite() || !w.is_finite() || w <= 0.0 {
        return Err(DeviceError::InvalidParameter(format!(
            "flux_bias needs finite B and positive w (B = {b}, w = {w})"
        )));
    }
    Ok(b * w * w / consts.phi0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum VortexRegime {
    NoStableVortices,
    SingleRow,
    TwoRow,
}

/// Classify a flux bias. Field polarity does not matter, only |φ|.
pub fn vortex_regime(phi: f64, phi_s: f64) -> Result<VortexRegime, DeviceError> {
    if !phi_s.is_finite() || phi_s <= 0.0 || !phi.is_finite() {
        return Err(DeviceError::InvalidParameter(format!(
            "vortex_regime needs finite phi and positive phi_S (phi = {phi}, phi_S = {phi_s})"
        )));
    }
    let phi = phi.abs();
    Ok(if phi < phi_s {
        VortexRegime::NoStableVortices
    } else if phi <= BUCKLING_RATIO * phi_s {
        VortexRegime::SingleRow
    } else {
        VortexRegime::TwoRow
    })
}

/// Field at which a spin with the given g-factor is resonant with `f`.
pub fn esr_field(f: f64, g_factor: f64, consts: &PhysicalConstants) -> Result<f64, DeviceError> {
    if !(g_factor > 0.0) || !g_factor.is_finite() {
        return Err(DeviceError::InvalidParameter(format!(
            "g-factor must be positive, got {g_factor}"
        )));
    }
    if !(f >= 0.0) || !f.is_finite() {
        return Err(DeviceError::InvalidParameter(format!(
            "frequency must be non-negative, got {f}"
        )));
    }
    Ok(consts.h * f / (g_factor * consts.mu_b))
}

/// Ordinary least-squares line through coil calibration points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CoilCalibration {
    /// Field per unit current (T/A)
    pub slope: f64,
    /// Field at zero current (T)
    pub intercept: f64,
    /// NaN when there are only two points (no residual degrees of freedom).
    pub slope_std_error: f64,
    pub intercept_std_error: f64,
    pub n_points: usize,
}

impl CoilCalibration {
    /// Symmetric interval `slope ± z·σ_slope`.
    pub fn slope_interval(&self, z: f64) -> (f64, f64) {
        (
            self.slope - z * self.slope_std_error,
            self.slope + z * self.slope_std_error,
        )
    }
}

/// Fit `field = slope·current + intercept` to `(current (A), field (T))` pairs.
pub fn calibrate_coil(points: &[(f64, f64)]) -> Result<CoilCalibration, DeviceError> {
    if points.len() < 2 {
        return Err(DeviceError::DegenerateFit(format!(
            "need at least 2 points, got {}",
            points.len()
        )));
    }
    if points.iter().any(|(i, b)| !i.is_finite() || !b.is_finite()) {
        return Err(DeviceError::InvalidParameter("non-finite calibration point".into()));
    }
    let n = points.len() as f64;
    let mean_i = points.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_b = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mean_i).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mean_i) * (p.1 - mean_b)).sum();
    if sxx == 0.0 {
        return Err(DeviceError::DegenerateFit(
            "all calibration currents are identical".into(),
        ));
    }
    let slope = sxy / sxx;
    let intercept = mean_b - slope * mean_i;
    let (slope_se, intercept_se) = if points.len() > 2 {
        let ssr: f64 = points
            .iter()
            .map(|p| (p.1 - slope * p.0 - intercept).powi(2))
            .sum();
        let s2 = ssr / (n - 2.0);
        let sum_x2: f64 = points.iter().map(|p| p.0 * p.0).sum();
        ((s2 / sxx).sqrt(), (s2 * sum_x2 / (n * sxx)).sqrt())
    } else {
        (f64::NAN, f64::NAN)
    };
    Ok(CoilCalibration {
        slope,
        intercept,
        slope_std_error: slope_se,
        intercept_std_error: intercept_se,
        n_points: points.len(),
    })
}
