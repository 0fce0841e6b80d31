use std::f64::consts::PI;

use vortexlab::constants::SI;
use vortexlab::device::{
    calibrate_coil, derive_scales, entry_threshold, esr_field, flux_bias, vortex_regime, VortexRegime,
};
use vortexlab::energetics::{
    coupling_estimate, gamma_from_geometry, gibbs_pair, gibbs_single, pair_coupling, total_potential,
    well_asymmetry, CouplingEstimateInput, PinningSite, VortexPair,
};
use vortexlab::{DerivedScales, DeviceModel};

fn reference() -> (DeviceModel, DerivedScales) {
    let d = DeviceModel::reference();
    (d, derive_scales(&d, &SI).unwrap())
}

#[test]
fn reference_scales() {
    let (d, s) = reference();
    assert!((s.phi_s - 3.57).abs() < 0.01);
    assert!((s.pearl_length - 1.333e-3).abs() < 1e-6);
    assert!((s.b_s - 821e-6).abs() < 1e-6);
    assert_eq!(entry_threshold(d.w, d.xi), s.phi_s);
}

#[test]
fn flux_bias_values() {
    let w = 3e-6;
    assert!((flux_bias(820e-6, w, &SI).unwrap() - 3.569).abs() < 1e-3);
    assert_eq!(flux_bias(0.0, w, &SI).unwrap(), 0.0);
    assert!((flux_bias(128e-6, w, &SI).unwrap() - 0.557).abs() < 1e-3);
}

#[test]
fn regimes() {
    let (_, s) = reference();
    assert_eq!(vortex_regime(0.5 * s.phi_s, s.phi_s).unwrap(), VortexRegime::NoStableVortices);
    assert_eq!(vortex_regime(1.5 * s.phi_s, s.phi_s).unwrap(), VortexRegime::SingleRow);
    assert_eq!(vortex_regime(3.0 * s.phi_s, s.phi_s).unwrap(), VortexRegime::TwoRow);
}

#[test]
fn esr_values() {
    assert!((esr_field(7.627e9, 2.0, &SI).unwrap() / 272.5e-3 - 1.0).abs() < 1e-3);
    assert_eq!(esr_field(0.0, 2.0, &SI).unwrap(), 0.0);
    assert!((esr_field(2e9, 2.0, &SI).unwrap() - 71.4e-3).abs() < 0.05e-3);
}

#[test]
fn coil_lines() {
    let two = calibrate_coil(&[(0.0, 0.0), (1.0, 72.8e-3)]).unwrap();
    assert_eq!(two.slope, 72.8e-3);
    let flat = calibrate_coil(&[(0.0, 1e-3), (1.0, 1e-3), (2.0, 1e-3)]).unwrap();
    assert_eq!(flat.slope, 0.0);
}

#[test]
fn single_vortex_energy() {
    let (d, s) = reference();
    assert_eq!(gibbs_single(0.0, 1e-4, 0.0, &s, &d).unwrap(), 0.0);
    assert_eq!(gibbs_single(d.w, 1e-4, 0.0, &s, &d).unwrap(), 0.0);
    let centre = gibbs_single(d.w / 2.0, 0.0, 0.0, &s, &d).unwrap() / s.eps0;
    assert!((centre - 5.613).abs() < 1e-3, "{centre}");
}

#[test]
fn site_adds_its_depth() {
    let (d, s) = reference();
    let site = PinningSite::new(1e-6, 0.0, 0.3 * s.eps0, 5e-9);
    let bare = gibbs_single(1e-6, 1e-4, 0.0, &s, &d).unwrap();
    let with = total_potential(1e-6, 0.0, 1e-4, 0.0, &[site], &s, &d).unwrap();
    assert!((bare - with - 0.3 * s.eps0).abs() < 1e-12 * s.eps0);
    assert_eq!(total_potential(1e-6, 0.0, 1e-4, 0.0, &[], &s, &d).unwrap(), bare);
}

#[test]
fn gamma_geometry() {
    let (d, s) = reference();
    assert_eq!(gamma_from_geometry(10e-9, d.w / 2.0, &s, &d).unwrap(), 0.0);
    let one = gamma_from_geometry(10e-9, 1e-6, &s, &d).unwrap();
    let two = gamma_from_geometry(20e-9, 1e-6, &s, &d).unwrap();
    assert!((two / one - 2.0).abs() < 1e-12);

    // with ε0 = h·2 THz, γ = 20 GHz/mT at δ = 10 nm needs |2x̄ − w| ≈ 0.33 µm
    let s2 = s.with_eps0(SI.h * 2e12).unwrap();
    let offset = 20e12 * SI.phi0 / (2.0 * PI * 2e12 * 10e-9);
    assert!((offset - 0.33e-6).abs() < 0.01e-6);
    let g = gamma_from_geometry(10e-9, (d.w + offset) / 2.0, &s2, &d).unwrap();
    assert!((g / 20e12 - 1.0).abs() < 1e-9);
}

#[test]
fn asymmetry_slope_is_h_gamma() {
    let (d, s) = reference();
    let (x_bar, delta) = (1.1e-6, 15e-9);
    let gamma = gamma_from_geometry(delta, x_bar, &s, &d).unwrap();
    let db = 1e-6;
    let a = well_asymmetry(x_bar, delta, 400e-6, 0.0, &s, &d).unwrap();
    let b = well_asymmetry(x_bar, delta, 400e-6 + db, 0.0, &s, &d).unwrap();
    assert!((((b - a) / db).abs() / (SI.h * gamma) - 1.0).abs() < 1e-3);
    assert_eq!(well_asymmetry(x_bar, 0.0, 400e-6, 0.0, &s, &d).unwrap_or(0.0), 0.0);
}

#[test]
fn pair_energy() {
    let (d, s) = reference();
    let g = gibbs_pair((d.w / 2.0, 0.0), (d.w / 2.0, d.w), &s, &d).unwrap();
    assert!((g / s.eps0 - 0.1729).abs() < 1e-4);
    let far = gibbs_pair((1e-6, 0.0), (2e-6, 20.0 * d.w), &s, &d).unwrap();
    assert!(far < 1e-25 * s.eps0);
    let edge = gibbs_pair((1e-14, 0.0), (2e-6, 1e-6), &s, &d).unwrap();
    assert!(edge < 1e-7 * s.eps0);
}

#[test]
fn central_axis_hessian() {
    let (d, s) = reference();
    let c = pair_coupling(&VortexPair::new((d.w / 2.0, 0.0), (d.w / 2.0, d.w), 10e-9), &s, &d).unwrap();
    let ch = PI.cosh();
    let scale = s.eps0 * (PI / d.w).powi(2) * 2.0 / (ch * ch - 1.0);
    assert!((c.hessian[1][1] / (-scale * ch) - 1.0).abs() < 1e-5);
    // the xx entry of the exact pair energy does not vanish on the axis
    assert!((c.hessian[0][0] / scale - 1.0).abs() < 1e-4);
    assert!(c.hessian[0][1].abs() < 1e-6 * scale);
    assert!(c.hessian[1][0].abs() < 1e-6 * scale);
    assert!(c.energy_scale / SI.h < 1.25e9);
}

#[test]
fn coupling_band() {
    let d = DeviceModel::reference();
    let at = |y: f64| coupling_estimate(&CouplingEstimateInput::from_device(&d, y), &SI).unwrap();
    for y in [1e-9, 3e-9, 10e-9] {
        let v = at(y);
        assert!(v > 0.5e-3 && v < 2e-2, "{y}: {v}");
    }
    assert!((at(4e-9) / at(2e-9) - 0.5).abs() < 1e-12);
}
