use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use super::{least_squares, FitError, FitResult, LmOptions};

/// Single-port reflection of a resonator with internal and external loss
/// rates `κ/2π` (Hz):
///
/// ```text
/// S11 = (iδ + (κ_int − κ_ext)/2) / (iδ + (κ_int + κ_ext)/2),   δ = f − f_r
/// ```
///
/// `S11 → 1` far from resonance and `S11 = −1` on resonance of a lossless
/// resonator.
pub fn reflection_coefficient(f: f64, f_r: f64, kappa_int: f64, kappa_ext: f64) -> Complex64 {
    let d = Complex64::new(0.0, f - f_r);
    (d + 0.5 * (kappa_int - kappa_ext)) / (d + 0.5 * (kappa_int + kappa_ext))
}

/// `arg S11` in `(−π, π]`.
pub fn reflection_phase(f: f64, f_r: f64, kappa_int: f64, kappa_ext: f64) -> f64 {
    reflection_coefficient(f, f_r, kappa_int, kappa_ext).arg()
}

fn wrap(phi: f64) -> f64 {
    let w = (phi + PI).rem_euclid(2.0 * PI) - PI;
    if w == -PI {
        PI
    } else {
        w
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReflectionFit {
    /// Resonance with the qubit in the ground state (Hz)
    pub f_r_g: f64,
    /// Shift of the resonance when the qubit is excited (Hz)
    pub chi: f64,
    pub kappa_int: f64,
    pub kappa_ext: f64,
    pub fit: FitResult,
}

/// Frequency of steepest phase change and the slope there.
fn steepest(freqs: &[f64], phase: &[f64]) -> (f64, f64) {
    let mut best = (freqs[0], 0.0_f64);
    for i in 1..freqs.len() {
        let slope = wrap(phase[i] - phase[i - 1]) / (freqs[i] - freqs[i - 1]);
        if slope.abs() > best.1.abs() {
            best = (0.5 * (freqs[i] + freqs[i - 1]), slope);
        }
    }
    best
}

/// Fits the reflection phase measured with the qubit in `|g⟩` and in `|e⟩`
/// with shared linewidths, returning the dispersive shift between the two
/// resonances. Residuals are wrapped angle differences divided by `sigma`.
pub fn fit_reflection_pair(
    freqs: &[f64],
    phase_g: &[f64],
    phase_e: &[f64],
    sigma: f64,
) -> Result<ReflectionFit, FitError> {
    let n = freqs.len();
    if phase_g.len() != n || phase_e.len() != n {
        return Err(FitError::InvalidData("frequency and phase lengths differ".into()));
    }
    if n < 5 {
        return Err(FitError::InsufficientData(format!(
            "reflection fit needs at least 5 frequencies, got {n}"
        )));
    }
    if !(sigma > 0.0) {
        return Err(FitError::InvalidData("sigma must be positive".into()));
    }
    let mut rows: Vec<(f64, f64, f64)> = (0..n).map(|i| (freqs[i], phase_g[i], phase_e[i])).collect();
    if rows.iter().any(|r| !(r.0.is_finite() && r.1.is_finite() && r.2.is_finite())) {
        return Err(FitError::InvalidData("non-finite entry".into()));
    }
    rows.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)).then(a.2.total_cmp(&b.2)));
    if rows.windows(2).any(|w| w[0].0 == w[1].0) {
        return Err(FitError::InvalidData("repeated frequency".into()));
    }
    let f: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let pg: Vec<f64> = rows.iter().map(|r| r.1).collect();
    let pe: Vec<f64> = rows.iter().map(|r| r.2).collect();

    let (fg0, slope) = steepest(&f, &pg);
    let (fe0, _) = steepest(&f, &pe);
    let kext0 = if slope != 0.0 { 4.0 / slope.abs() } else { (f[n - 1] - f[0]) / 10.0 };
    let kint0 = 0.1 * kext0;

    let fit = least_squares(
        |p| {
            let (fr, chi, ki, ke) = (p[0], p[1], p[2].abs(), p[3].abs());
            let g = f.iter().zip(&pg).map(|(x, y)| wrap(reflection_phase(*x, fr, ki, ke) - y) / sigma);
            let e = f.iter().zip(&pe).map(|(x, y)| wrap(reflection_phase(*x, fr + chi, ki, ke) - y) / sigma);
            g.chain(e).collect()
        },
        &[("f_r_g", fg0), ("chi", fe0 - fg0), ("kappa_int", kint0), ("kappa_ext", kext0)],
        LmOptions::default(),
    );
    let mut fit = fit;
    for key in ["kappa_int", "kappa_ext"] {
        if let Some(v) = fit.params.get_mut(key) {
            *v = v.abs();
        }
    }
    Ok(ReflectionFit {
        f_r_g: fit.value("f_r_g"),
        chi: fit.value("chi"),
        kappa_int: fit.value("kappa_int"),
        kappa_ext: fit.value("kappa_ext"),
        fit,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn far_detuned_phase_vanishes() {
        assert!(reflection_phase(7.572e9 + 1e12, 7.572e9, 0.1e6, 0.75e6).abs() < 1e-5);
    }

    #[test]
    fn lossless_on_resonance() {
        let s = reflection_coefficient(7.5e9, 7.5e9, 0.0, 1e6);
        assert!((s.norm() - 1.0).abs() < 1e-15);
        assert!((reflection_phase(7.5e9, 7.5e9, 0.0, 1e6).abs() - PI).abs() < 1e-15);
    }

    #[test]
    fn overcoupled_phase_rolls_by_two_pi() {
        let (fr, ki, ke) = (0.0, 0.1e6, 0.75e6);
        let mut total = 0.0;
        let mut prev = reflection_phase(-1e9, fr, ki, ke);
        for i in 1..=20000 {
            let x = -1e9 + 2e9 * i as f64 / 20000.0;
            let ph = reflection_phase(x, fr, ki, ke);
            total += wrap(ph - prev);
            prev = ph;
        }
        assert!((total.abs() - 2.0 * PI).abs() < 1e-2);
    }

    #[test]
    fn undercoupled_phase_returns() {
        let mut total = 0.0;
        let mut prev = reflection_phase(-1e9, 0.0, 2e6, 0.5e6);
        for i in 1..=20000 {
            let x = -1e9 + 2e9 * i as f64 / 20000.0;
            let ph = reflection_phase(x, 0.0, 2e6, 0.5e6);
            total += wrap(ph - prev);
            prev = ph;
        }
        assert!(total.abs() < 1e-2);
    }

    #[test]
    fn pair_recovers_chi() {
        let (fr, chi, ki, ke) = (7.572e9, -1.32e6, 0.05e6, 0.75e6);
        let freqs: Vec<f64> = (0..301).map(|i| fr - 6e6 + 12e6 * i as f64 / 300.0).collect();
        let pg: Vec<f64> = freqs.iter().map(|f| reflection_phase(*f, fr, ki, ke)).collect();
        let pe: Vec<f64> = freqs.iter().map(|f| reflection_phase(*f, fr + chi, ki, ke)).collect();
        let fit = fit_reflection_pair(&freqs, &pg, &pe, 0.01).unwrap();
        assert!(fit.fit.converged);
        assert!((fit.chi / chi - 1.0).abs() < 0.02);
        assert!((fit.kappa_ext / ke - 1.0).abs() < 1e-4);
    }
}
