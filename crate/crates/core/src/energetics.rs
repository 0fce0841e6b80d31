//! Vortex energies in a thin strip of width `w`.
//!
//! Positions are measured across the strip (`x ∈ [0, w]`) and along it (`y`).
//! The single-vortex Gibbs energy is
//!
//! ```text
//! G1(x; B) = ε0 ln((2w/πξ) sin(πx/w) + 1) − 2π ε0 (B − nΦ0)/Φ0 · x(w − x)
//! ```
//!
//! where the Meissner prefactor `2πε0/Φ0` equals `Φ0/(µ0Λ)`. Writing it
//! through ε0 keeps every energy proportional to ε0 when ε0 is overridden.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::constants::{PhysicalConstants, SI};
use crate::device::{DerivedScales, DeviceModel};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EnergeticsError {
    #[error("position x = {x} m outside the strip [0, {w}] m")]
    Domain { x: f64, w: f64 },
    #[error("invalid pinning site: {0}")]
    InvalidSite(String),
    #[error("coincident vortices: pair energy diverges")]
    Divergent,
    #[error("vortex separation {separation} m is below 10 × delta_LR = {limit} m")]
    LinearizationInvalid { separation: f64, limit: f64 },
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

/// Lorentzian pinning dip `−V / (1 + r²/σ²)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PinningSite {
    /// m
    pub x: f64,
    /// m
    pub y: f64,
    /// Depth (J)
    pub depth: f64,
    /// Width (m)
    pub sigma: f64,
}

impl PinningSite {
    pub fn new(x: f64, y: f64, depth: f64, sigma: f64) -> Self {
        PinningSite { x, y, depth, sigma }
    }

    pub fn validate(&self, device: &DeviceModel) -> Result<(), EnergeticsError> {
        if ![self.x, self.y, self.depth, self.sigma].iter().all(|v| v.is_finite()) {
            return Err(EnergeticsError::InvalidSite(format!("non-finite field in {self:?}")));
        }
        if self.depth <= 0.0 || self.sigma <= 0.0 {
            return Err(EnergeticsError::InvalidSite(format!(
                "depth and width must be positive (depth = {}, sigma = {})",
                self.depth, self.sigma
            )));
        }
        if self.x <= 0.0 || self.x >= device.w {
            return Err(EnergeticsError::InvalidSite(format!(
                "x = {} m outside (0, {}) m",
                self.x, device.w
            )));
        }
        Ok(())
    }

    /// Pinning energy at `(x, y)`, negative.
    pub fn energy(&self, x: f64, y: f64) -> f64 {
        let r2 = (x - self.x).powi(2) + (y - self.y).powi(2);
        -self.depth / (1.0 + r2 / (self.sigma * self.sigma))
    }
}

fn check_x(x: f64, device: &DeviceModel) -> Result<(), EnergeticsError> {
    if !(x >= 0.0 && x <= device.w) {
        return Err(EnergeticsError::Domain { x, w: device.w });
    }
    Ok(())
}

/// Meissner coefficient `2πε0/Φ0` (J/(T·m²)).
fn meissner(scales: &DerivedScales) -> f64 {
    2.0 * PI * scales.eps0 / SI.phi0
}

/// Single-vortex Gibbs energy (J) at `x` for applied field `b` (T) and
/// areal density `n` (1/m²) of the other vortices.
pub fn gibbs_single(
    x: f64,
    b: f64,
    n: f64,
    scales: &DerivedScales,
    device: &DeviceModel,
) -> Result<f64, EnergeticsError> {
    check_x(x, device)?;
    let w = device.w;
    // measured from the nearer edge so both edges give exactly zero
    let edge = x.min(w - x);
    let core = scales.eps0 * ((2.0 * w / (PI * device.xi)) * (PI * edge / w).sin()).ln_1p();
    let b_eff = b - n * SI.phi0;
    Ok(core - meissner(scales) * b_eff * x * (w - x))
}

/// Gibbs energy plus all pinning dips (J).
pub fn total_potential(
    x: f64,
    y: f64,
    b: f64,
    n: f64,
    sites: &[PinningSite],
    scales: &DerivedScales,
    device: &DeviceModel,
) -> Result<f64, EnergeticsError> {
    let g = gibbs_single(x, b, n, scales, device)?;
    Ok(g + sites.iter().map(|s| s.energy(x, y)).sum::<f64>())
}

/// Potential energy surface of one strip with its pinning sites.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Landscape {
    pub device: DeviceModel,
    pub scales: DerivedScales,
    pub sites: Vec<PinningSite>,
    /// Areal density of other vortices (1/m²)
    pub vortex_density: f64,
}

impl Landscape {
    pub fn new(
        device: DeviceModel,
        scales: DerivedScales,
        sites: Vec<PinningSite>,
        vortex_density: f64,
    ) -> Result<Self, EnergeticsError> {
        for s in &sites {
            s.validate(&device)?;
        }
        if !vortex_density.is_finite() {
            return Err(EnergeticsError::InvalidInput("non-finite vortex density".into()));
        }
        Ok(Landscape {
            device,
            scales,
            sites,
            vortex_density,
        })
    }

    pub fn potential(&self, x: f64, y: f64, b: f64) -> Result<f64, EnergeticsError> {
        total_potential(x, y, b, self.vortex_density, &self.sites, &self.scales, &self.device)
    }

    /// Row-major samples `V(xs[i], ys[j])` with `j` fastest.
    pub fn sample(&self, xs: &[f64], ys: &[f64], b: f64) -> Result<Vec<f64>, EnergeticsError> {
        let rows: Result<Vec<Vec<f64>>, EnergeticsError> = xs
            .par_iter()
            .map(|&x| ys.iter().map(|&y| self.potential(x, y, b)).collect())
            .collect();
        Ok(rows?.into_iter().flatten().collect())
    }
}

fn well_positions(
    x_bar: f64,
    delta: f64,
    device: &DeviceModel,
) -> Result<(f64, f64), EnergeticsError> {
    if !(delta >= 0.0) || !x_bar.is_finite() {
        return Err(EnergeticsError::InvalidInput(format!(
            "need finite x_bar and delta_LR >= 0 (got {x_bar}, {delta})"
        )));
    }
    let (l, r) = (x_bar - 0.5 * delta, x_bar + 0.5 * delta);
    for x in [l, r] {
        if !(x > 0.0 && x < device.w) {
            return Err(EnergeticsError::Domain { x, w: device.w });
        }
    }
    Ok((l, r))
}

/// Gyromagnetic ratio of a double well (Hz/T):
/// `γ = 2π ε0 |δ_LR (2x̄ − w)| / (Φ0 h)`.
pub fn gamma_from_geometry(
    delta: f64,
    x_bar: f64,
    scales: &DerivedScales,
    device: &DeviceModel,
) -> Result<f64, EnergeticsError> {
    well_positions(x_bar, delta, device)?;
    Ok(2.0 * PI * scales.eps0 * (delta * (2.0 * x_bar - device.w)).abs() / (SI.phi0 * SI.h))
}

/// `G1(x̄ − δ/2) − G1(x̄ + δ/2)` (J).
pub fn signed_well_asymmetry(
    x_bar: f64,
    delta: f64,
    b: f64,
    n: f64,
    scales: &DerivedScales,
    device: &DeviceModel,
) -> Result<f64, EnergeticsError> {
    let (l, r) = well_positions(x_bar, delta, device)?;
    Ok(gibbs_single(l, b, n, scales, device)? - gibbs_single(r, b, n, scales, device)?)
}

/// `ΔG = |G1(x̄ − δ/2) − G1(x̄ + δ/2)|` (J). Its field derivative has
/// magnitude `h·γ` with γ from [`gamma_from_geometry`].
pub fn well_asymmetry(
    x_bar: f64,
    delta: f64,
    b: f64,
    n: f64,
    scales: &DerivedScales,
    device: &DeviceModel,
) -> Result<f64, EnergeticsError> {
    Ok(signed_well_asymmetry(x_bar, delta, b, n, scales, device)?.abs())
}

/// Site depths `(V_left, V_right)` that make the two wells degenerate at
/// `b0`: the site on the higher Gibbs energy gets `v_ref + ΔG(b0)`.
pub fn degenerate_depths(
    v_ref: f64,
    x_bar: f64,
    delta: f64,
    b0: f64,
    n: f64,
    scales: &DerivedScales,
    device: &DeviceModel,
) -> Result<(f64, f64), EnergeticsError> {
    let s = signed_well_asymmetry(x_bar, delta, b0, n, scales, device)?;
    Ok((v_ref + s.max(0.0), v_ref + (-s).max(0.0)))
}

/// Field at which `G1(x_L) − V_L = G1(x_R) − V_R`.
#[allow(clippy::too_many_arguments)]
pub fn degeneracy_field(
    x_bar: f64,
    delta: f64,
    v_left: f64,
    v_right: f64,
    n: f64,
    scales: &DerivedScales,
    device: &DeviceModel,
) -> Result<f64, EnergeticsError> {
    // the asymmetry is affine in B
    let a0 = signed_well_asymmetry(x_bar, delta, 0.0, n, scales, device)? - (v_left - v_right);
    let (l, r) = well_positions(x_bar, delta, device)?;
    let slope = -meissner(scales) * (l * (device.w - l) - r * (device.w - r));
    if slope == 0.0 {
        return Err(EnergeticsError::InvalidInput(
            "wells symmetric about the strip centre: asymmetry does not depend on field".into(),
        ));
    }
    Ok(-a0 / slope)
}

/// Interaction energy of two vortices in the strip (J), non-negative.
///
/// Evaluated as `ε0 ln(1 + sin(πx1/w) sin(πx2/w) / (sinh²(πΔy/2w) + sin²(πΔx/2w)))`,
/// an exact rewriting of the ratio of `cosh − cos` terms that stays
/// accurate when the vortices are far apart.
pub fn gibbs_pair(
    r1: (f64, f64),
    r2: (f64, f64),
    scales: &DerivedScales,
    device: &DeviceModel,
) -> Result<f64, EnergeticsError> {
    let w = device.w;
    for x in [r1.0, r2.0] {
        if !(x > 0.0 && x < w) {
            return Err(EnergeticsError::Domain { x, w });
        }
    }
    if r1 == r2 {
        return Err(EnergeticsError::Divergent);
    }
    let u = PI / w;
    let num = (u * r1.0).sin() * (u * r2.0).sin();
    let den = (0.5 * u * (r1.1 - r2.1)).sinh().powi(2) + (0.5 * u * (r1.0 - r2.0)).sin().powi(2);
    if den == 0.0 {
        return Err(EnergeticsError::Divergent);
    }
    Ok(scales.eps0 * (num / den).ln_1p())
}

/// Two pinned vortices, each tunnelling over `delta` around its centre.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VortexPair {
    pub r1: (f64, f64),
    pub r2: (f64, f64),
    pub delta: f64,
    /// `alpha[i][axis]`: σx weight of vortex `i` along x (0) and y (1)
    pub alpha: [[f64; 2]; 2],
    /// `beta[i][axis]`: σz weight
    pub beta: [[f64; 2]; 2],
}

impl VortexPair {
    /// All geometry coefficients equal to one.
    pub fn new(r1: (f64, f64), r2: (f64, f64), delta: f64) -> Self {
        VortexPair {
            r1,
            r2,
            delta,
            alpha: [[1.0; 2]; 2],
            beta: [[1.0; 2]; 2],
        }
    }

    pub fn swapped(&self) -> Self {
        VortexPair {
            r1: self.r2,
            r2: self.r1,
            delta: self.delta,
            alpha: [self.alpha[1], self.alpha[0]],
            beta: [self.beta[1], self.beta[0]],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PairCoupling {
    /// `∂²G2/∂R1_a ∂R2_b` for a, b ∈ {x, y} (J/m²)
    pub hessian: [[f64; 2]; 2],
    /// Spin couplings `J[a][b]` for σa ⊗ σb with a, b ∈ {x, z} (J)
    pub couplings: [[f64; 2]; 2],
    /// `max |J|` (J)
    pub energy_scale: f64,
}

/// Linearized interaction `r̂1ᵀ (∇_R1 ∇_R2 G2) r̂2` with
/// `r̂_i = δ (α_i σx + β_i σz)`. The mixed Hessian uses central differences
/// with step `1e-4·w`.
pub fn pair_coupling(
    pair: &VortexPair,
    scales: &DerivedScales,
    device: &DeviceModel,
) -> Result<PairCoupling, EnergeticsError> {
    if !(pair.delta > 0.0) {
        return Err(EnergeticsError::InvalidInput("delta_LR must be positive".into()));
    }
    let sep = (pair.r1.0 - pair.r2.0).hypot(pair.r1.1 - pair.r2.1);
    let limit = 10.0 * pair.delta;
    if sep <= limit {
        return Err(EnergeticsError::LinearizationInvalid { separation: sep, limit });
    }
    let h = 1e-4 * device.w;
    let g = |a: (f64, f64), b: (f64, f64)| gibbs_pair(a, b, scales, device);
    let shift = |r: (f64, f64), axis: usize, d: f64| if axis == 0 { (r.0 + d, r.1) } else { (r.0, r.1 + d) };
    let mut hessian = [[0.0; 2]; 2];
    for (a, row) in hessian.iter_mut().enumerate() {
        for (b, entry) in row.iter_mut().enumerate() {
            let pp = g(shift(pair.r1, a, h), shift(pair.r2, b, h))?;
            let pm = g(shift(pair.r1, a, h), shift(pair.r2, b, -h))?;
            let mp = g(shift(pair.r1, a, -h), shift(pair.r2, b, h))?;
            let mm = g(shift(pair.r1, a, -h), shift(pair.r2, b, -h))?;
            *entry = (pp - pm - mp + mm) / (4.0 * h * h);
        }
    }
    let weights = |i: usize| [pair.alpha[i], pair.beta[i]];
    let (w1, w2) = (weights(0), weights(1));
    let mut couplings = [[0.0; 2]; 2];
    for (p, row) in couplings.iter_mut().enumerate() {
        for (q, entry) in row.iter_mut().enumerate() {
            let mut s = 0.0;
            for a in 0..2 {
                for b in 0..2 {
                    s += w1[p][a] * hessian[a][b] * w2[q][b];
                }
            }
            *entry = pair.delta * pair.delta * s;
        }
    }
    let energy_scale = couplings.iter().flatten().fold(0.0_f64, |m, v| m.max(v.abs()));
    Ok(PairCoupling {
        hessian,
        couplings,
        energy_scale,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CouplingEstimateInput {
    /// Hz
    pub f_r: f64,
    /// Ω
    pub z_r: f64,
    /// m
    pub w: f64,
    /// m
    pub t: f64,
    /// m
    pub lambda_l: f64,
    /// m
    pub y_zpf: f64,
}

impl CouplingEstimateInput {
    pub fn from_device(device: &DeviceModel, y_zpf: f64) -> Self {
        CouplingEstimateInput {
            f_r: device.f_r,
            z_r: device.z_r,
            w: device.w,
            t: device.t,
            lambda_l: device.lambda_l,
            y_zpf,
        }
    }
}

/// Accepted zero-point length band (m).
pub const Y_ZPF_BAND: (f64, f64) = (0.1e-9, 1e-6);

/// Vortex–resonator coupling relative to the resonator energy:
/// `g̃/ħω_r = (λ_L² / (w t y_zpf)) (µ0 e²/m_e) sqrt(R_K / 4πZ_r)`.
pub fn coupling_estimate(
    input: &CouplingEstimateInput,
    consts: &PhysicalConstants,
) -> Result<f64, EnergeticsError> {
    let v = [input.f_r, input.z_r, input.w, input.t, input.lambda_l, input.y_zpf];
    if !v.iter().all(|x| x.is_finite() && *x > 0.0) {
        return Err(EnergeticsError::InvalidInput(format!("all inputs must be positive: {input:?}")));
    }
    if input.y_zpf < Y_ZPF_BAND.0 || input.y_zpf > Y_ZPF_BAND.1 {
        return Err(EnergeticsError::InvalidInput(format!(
            "y_zpf = {} m outside [{}, {}] m",
            input.y_zpf, Y_ZPF_BAND.0, Y_ZPF_BAND.1
        )));
    }
    let geometry = input.lambda_l * input.lambda_l / (input.w * input.t * input.y_zpf);
    let material = consts.mu0 * consts.e * consts.e / consts.m_e;
    Ok(geometry * material * (consts.r_k / (4.0 * PI * input.z_r)).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::device::derive_scales;
    use proptest::prelude::*;

    fn setup() -> (DerivedScales, DeviceModel) {
        let d = DeviceModel::reference();
        (derive_scales(&d, &SI).unwrap(), d)
    }

    #[test]
    fn gibbs_edges_vanish() {
        let (s, d) = setup();
        for b in [0.0, 1e-3] {
            assert_eq!(gibbs_single(0.0, b, 0.0, &s, &d).unwrap(), 0.0);
            assert!(gibbs_single(d.w, b, 0.0, &s, &d).unwrap().abs() < 1e-12 * s.eps0);
        }
        assert!(matches!(gibbs_single(-1e-9, 0.0, 0.0, &s, &d), Err(EnergeticsError::Domain { .. })));
    }

    #[test]
    fn gibbs_centre_value() {
        let (s, d) = setup();
        let g = gibbs_single(d.w / 2.0, 0.0, 0.0, &s, &d).unwrap();
        assert!((g / s.eps0 - 5.613).abs() < 1e-3);
    }

    #[test]
    fn meissner_identity() {
        let (s, _) = setup();
        let k_flux = SI.phi0 / (SI.mu0 * s.pearl_length);
        assert!((meissner(&s) / k_flux - 1.0).abs() < 1e-12);
    }

    #[test]
    fn density_acts_as_field_offset() {
        let (s, d) = setup();
        let n = 1e11;
        let a = gibbs_single(1e-6, 500e-6, n, &s, &d).unwrap();
        let b = gibbs_single(1e-6, 500e-6 - n * SI.phi0, 0.0, &s, &d).unwrap();
        assert!((a - b).abs() < 1e-12 * s.eps0);
    }

    #[test]
    fn pinning_peak() {
        let (s, d) = setup();
        let site = PinningSite::new(1.2e-6, 5e-6, 3.0 * s.eps0, 5e-9);
        let v = total_potential(site.x, site.y, 1e-4, 0.0, &[site], &s, &d).unwrap();
        let g = gibbs_single(site.x, 1e-4, 0.0, &s, &d).unwrap();
        assert_eq!(v, g - site.depth);
        assert_eq!(total_potential(0.7e-6, 0.0, 1e-4, 0.0, &[], &s, &d).unwrap(), gibbs_single(0.7e-6, 1e-4, 0.0, &s, &d).unwrap());
    }

    #[test]
    fn deep_site_creates_local_minimum() {
        let (s, d) = setup();
        let site = PinningSite::new(1.0e-6, 0.0, 0.5 * s.eps0, 10e-9);
        let l = Landscape::new(d, s, vec![site], 0.0).unwrap();
        let step = 0.5e-9;
        let mut best = (f64::INFINITY, 0.0, 0.0);
        for i in -60..=60 {
            for j in -60..=60 {
                let (x, y) = (site.x + i as f64 * step, site.y + j as f64 * step);
                let v = l.potential(x, y, 0.0).unwrap();
                if v < best.0 {
                    best = (v, x, y);
                }
            }
        }
        let r = (best.1 - site.x).hypot(best.2 - site.y);
        assert!(r < site.sigma);
        // strictly inside the search window, so a genuine local minimum
        assert!(r < 50.0 * step);
    }

    #[test]
    fn site_validation() {
        let (_, d) = setup();
        assert!(PinningSite::new(0.0, 0.0, 1.0, 1.0).validate(&d).is_err());
        assert!(PinningSite::new(1e-6, 0.0, -1.0, 1.0).validate(&d).is_err());
        assert!(PinningSite::new(1e-6, 0.0, 1.0, 1e-9).validate(&d).is_ok());
    }

    #[test]
    fn gamma_values() {
        let (s, d) = setup();
        assert_eq!(gamma_from_geometry(10e-9, d.w / 2.0, &s, &d).unwrap(), 0.0);
        let two_thz = s.with_eps0(SI.h * 2e12).unwrap();
        // |2x̄ − w| = 0.33 µm gives about 20 GHz/mT at ε0 = h·2 THz
        let x_bar = (d.w + 0.33e-6) / 2.0;
        let g = gamma_from_geometry(10e-9, x_bar, &two_thz, &d).unwrap();
        assert!((g / 20e12 - 1.0).abs() < 0.02, "{g}");
        let g2 = gamma_from_geometry(20e-9, x_bar, &two_thz, &d).unwrap();
        assert!((g2 / g - 2.0).abs() < 1e-12);
        assert!(gamma_from_geometry(10e-9, d.w, &s, &d).is_err());
    }

    #[test]
    fn asymmetry_slope_is_h_gamma() {
        let (s, d) = setup();
        let (x_bar, delta) = (1.2e-6, 20e-9);
        let gamma = gamma_from_geometry(delta, x_bar, &s, &d).unwrap();
        let bz = degeneracy_field(x_bar, delta, 1.0, 1.0, 0.0, &s, &d).unwrap();
        let db = 1e-6;
        for b in [bz + 200e-6, bz - 300e-6] {
            let up = well_asymmetry(x_bar, delta, b + db, 0.0, &s, &d).unwrap();
            let dn = well_asymmetry(x_bar, delta, b - db, 0.0, &s, &d).unwrap();
            let slope = (up - dn) / (2.0 * db);
            assert!((slope.abs() / (SI.h * gamma) - 1.0).abs() < 1e-6);
        }
        assert!(well_asymmetry(x_bar, delta, bz, 0.0, &s, &d).unwrap() < 1e-9 * s.eps0);
        assert_eq!(well_asymmetry(x_bar, 0.0, 3e-4, 0.0, &s, &d).unwrap(), 0.0);
    }

    #[test]
    fn aligned_depths_degenerate_at_target() {
        let (s, d) = setup();
        let (x_bar, delta, b0) = (1.1e-6, 15e-9, 128e-6);
        let (vl, vr) = degenerate_depths(0.2 * s.eps0, x_bar, delta, b0, 0.0, &s, &d).unwrap();
        let bz = degeneracy_field(x_bar, delta, vl, vr, 0.0, &s, &d).unwrap();
        assert!((bz - b0).abs() < 1e-12);
        assert!(degeneracy_field(d.w / 2.0, delta, vl, vr, 0.0, &s, &d).is_err());
    }

    #[test]
    fn pair_reference_value() {
        let (s, d) = setup();
        let g = gibbs_pair((d.w / 2.0, 0.0), (d.w / 2.0, d.w), &s, &d).unwrap();
        assert!((g / s.eps0 - 0.1729).abs() < 1e-4);
        let c = PI.cosh();
        let exact = ((c + 1.0) / (c - 1.0)).ln();
        assert!((g / s.eps0 - exact).abs() < 1e-12);
    }

    #[test]
    fn pair_limits() {
        let (s, d) = setup();
        let far = gibbs_pair((1e-6, 0.0), (2e-6, 100.0 * d.w), &s, &d).unwrap();
        assert!(far < 1e-100 * s.eps0);
        let edge = gibbs_pair((1e-15, 0.0), (2e-6, 1e-6), &s, &d).unwrap();
        assert!(edge < 1e-8 * s.eps0);
        assert!(matches!(gibbs_pair((1e-6, 0.0), (1e-6, 0.0), &s, &d), Err(EnergeticsError::Divergent)));
        let near = gibbs_pair((1e-6, 0.0), (1e-6, 1e-15), &s, &d).unwrap();
        assert!(near > 15.0 * s.eps0);
    }

    #[test]
    fn pair_coupling_checks() {
        let (s, d) = setup();
        let p = VortexPair::new((d.w / 2.0, 0.0), (d.w / 2.0, d.w), 10e-9);
        let c = pair_coupling(&p, &s, &d).unwrap();
        // analytic yy entry −ε0 (π/w)² 2C/(C² − 1)
        let ch = PI.cosh();
        let yy = -s.eps0 * (PI / d.w).powi(2) * 2.0 * ch / (ch * ch - 1.0);
        assert!((c.hessian[1][1] / yy - 1.0).abs() < 1e-5);
        let swapped = pair_coupling(&p.swapped(), &s, &d).unwrap();
        assert!((swapped.energy_scale / c.energy_scale - 1.0).abs() < 1e-9);
        assert!(c.energy_scale / SI.h < 12.5e9 / 10.0);
        let close = VortexPair::new((d.w / 2.0, 0.0), (d.w / 2.0, 50e-9), 10e-9);
        assert!(matches!(pair_coupling(&close, &s, &d), Err(EnergeticsError::LinearizationInvalid { .. })));
    }

    #[test]
    fn coupling_estimate_values() {
        let d = DeviceModel::reference();
        let at = |y| coupling_estimate(&CouplingEstimateInput::from_device(&d, y), &SI).unwrap();
        let one = at(1e-9);
        assert!((one - 6.5e-3).abs() < 0.1e-3, "{one}");
        assert!((at(2e-9) / one - 0.5).abs() < 1e-12);
        let mut high_z = CouplingEstimateInput::from_device(&d, 1e-9);
        high_z.z_r *= 4.0;
        assert!((coupling_estimate(&high_z, &SI).unwrap() / one - 0.5).abs() < 1e-12);
        assert!(coupling_estimate(&CouplingEstimateInput::from_device(&d, 1e-12), &SI).is_err());
    }

    proptest! {
        #[test]
        fn gibbs_mirror_symmetric(x in 0.0f64..3e-6) {
            let (s, d) = setup();
            let a = gibbs_single(x, 0.0, 0.0, &s, &d).unwrap();
            let b = gibbs_single(d.w - x, 0.0, 0.0, &s, &d).unwrap();
            prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(s.eps0 * 1e-3));
        }

        #[test]
        fn gibbs_linear_in_field(x in 1e-8f64..2.99e-6, b in -2e-3f64..2e-3) {
            let (s, d) = setup();
            let g0 = gibbs_single(x, 0.0, 0.0, &s, &d).unwrap();
            let g1 = gibbs_single(x, 1e-3, 0.0, &s, &d).unwrap();
            let gb = gibbs_single(x, b, 0.0, &s, &d).unwrap();
            let expected = (g1 - g0) * b / 1e-3;
            prop_assert!(((gb - g0) - expected).abs() <= 1e-9 * s.eps0);
        }

        #[test]
        fn pair_nonnegative(x1 in 1e-9f64..2.999e-6, x2 in 1e-9f64..2.999e-6, y1 in -5e-6f64..5e-6, y2 in -5e-6f64..5e-6) {
            let (s, d) = setup();
            prop_assume!((x1, y1) != (x2, y2));
            prop_assert!(gibbs_pair((x1, y1), (x2, y2), &s, &d).unwrap() >= 0.0);
        }

        #[test]
        fn meissner_term_matches_flux_form(x in 0.0f64..3e-6, b in -1e-3f64..1e-3) {
            let (s, d) = setup();
            let eps_form = 2.0 * PI * s.eps0 * (b / SI.phi0) * x * (x - d.w);
            let flux_form = -SI.phi0 * b / (SI.mu0 * s.pearl_length) * x * (d.w - x);
            prop_assert!((eps_form - flux_form).abs() <= 1e-12 * flux_form.abs().max(1e-40));
        }
    }
}
