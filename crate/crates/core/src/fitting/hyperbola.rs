use serde::Serialize;

use super::{check_points, least_squares, sorted_points, FitError, FitResult, LmOptions, SpectrumPoint};

/// `sqrt(f_q0² + γ²(B − B0)²)`
pub fn hyperbola(b: f64, f_q0: f64, gamma: f64, b0: f64) -> f64 {
    f_q0.hypot(gamma * (b - b0))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HyperbolaFit {
    /// Hz
    pub f_q0: f64,
    /// Hz/T
    pub gamma: f64,
    /// T
    pub b0: f64,
    pub fit: FitResult,
}

/// Fits the bare qubit hyperbola to `(B, f, σ)` points.
///
/// Start values: `B0` is the mean field of the lowest-frequency points,
/// `f_q0` the lowest frequency, `γ` the secant to the point farthest from `B0`.
pub fn fit_hyperbola(points: &[SpectrumPoint]) -> Result<HyperbolaFit, FitError> {
    check_points(points)?;
    if points.len() < 3 {
        return Err(FitError::InsufficientData(format!(
            "hyperbola fit needs at least 3 points, got {}",
            points.len()
        )));
    }
    let pts = sorted_points(points);
    let b_min = pts.first().map(|p| p.b).unwrap_or(0.0);
    let b_max = pts.last().map(|p| p.b).unwrap_or(0.0);
    if b_max == b_min {
        return Err(FitError::Degenerate("all points share one field".into()));
    }

    let f_low = pts.iter().map(|p| p.f).fold(f64::INFINITY, f64::min);
    let lowest: Vec<f64> = pts.iter().filter(|p| p.f == f_low).map(|p| p.b).collect();
    let b0 = lowest.iter().sum::<f64>() / lowest.len() as f64;
    let far = pts
        .iter()
        .max_by(|a, b| (a.b - b0).abs().total_cmp(&(b.b - b0).abs()))
        .copied()
        .unwrap_or(pts[0]);
    let mut gamma = if far.b != b0 {
        (far.f * far.f - f_low * f_low).max(0.0).sqrt() / (far.b - b0).abs()
    } else {
        0.0
    };
    if gamma == 0.0 {
        let f_high = pts.iter().map(|p| p.f).fold(f64::NEG_INFINITY, f64::max);
        gamma = ((f_high - f_low) / (b_max - b_min)).max(f_low.abs() / (b_max - b_min)).max(1.0);
    }

    let fit = least_squares(
        |p| {
            pts.iter()
                .map(|pt| (hyperbola(pt.b, p[0], p[1], p[2]) - pt.f) / pt.sigma)
                .collect()
        },
        &[("f_q0", f_low), ("gamma", gamma), ("B0", b0)],
        LmOptions::default(),
    );
    let mut fit = fit;
    // the model depends on f_q0 and γ only through their squares
    for key in ["f_q0", "gamma"] {
        if let Some(v) = fit.params.get_mut(key) {
            *v = v.abs();
        }
    }
    Ok(HyperbolaFit {
        f_q0: fit.value("f_q0"),
        gamma: fit.value("gamma"),
        b0: fit.value("B0"),
        fit,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn synthetic(f0: f64, g: f64, b0: f64, n: usize, sigma: f64) -> Vec<SpectrumPoint> {
        (0..n)
            .map(|i| {
                let b = b0 - 300e-6 + 600e-6 * i as f64 / (n - 1) as f64 + 7e-6;
                SpectrumPoint::new(b, hyperbola(b, f0, g, b0), sigma)
            })
            .collect()
    }

    #[test]
    fn exact_round_trip() {
        let pts = synthetic(2e9, 20e12, 128e-6, 25, 1e6);
        let fit = fit_hyperbola(&pts).unwrap();
        assert!(fit.fit.converged, "{:?}", fit);
        assert!((fit.f_q0 / 2e9 - 1.0).abs() < 1e-6);
        assert!((fit.gamma / 20e12 - 1.0).abs() < 1e-6);
        assert!((fit.b0 / 128e-6 - 1.0).abs() < 1e-6);
    }

    #[test]
    fn symmetric_points_center() {
        let b0 = 128e-6;
        let pts: Vec<SpectrumPoint> = [-80e-6, -40e-6, 40e-6, 80e-6]
            .iter()
            .map(|d| SpectrumPoint::new(b0 + d, hyperbola(b0 + d, 2e9, 20e12, b0), 1e6))
            .collect();
        let fit = fit_hyperbola(&pts).unwrap();
        assert!((fit.b0 - b0).abs() < 1e-12);
    }

    #[test]
    fn noisy_within_three_sigma() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let noise = Normal::new(0.0, 10e6).unwrap();
        let mut pts = synthetic(2e9, 20e12, 128e-6, 41, 10e6);
        for p in &mut pts {
            p.f += noise.sample(&mut rng);
        }
        let fit = fit_hyperbola(&pts).unwrap();
        for (name, truth) in [("f_q0", 2e9), ("gamma", 20e12), ("B0", 128e-6)] {
            let v = fit.fit.value(name);
            let e = fit.fit.error(name);
            assert!((v - truth).abs() < 3.0 * e, "{name}: {v} ± {e}");
        }
    }

    #[test]
    fn degenerate_inputs() {
        let same: Vec<SpectrumPoint> = (0..4).map(|i| SpectrumPoint::new(1e-4, 2e9 + i as f64, 1.0)).collect();
        assert!(matches!(fit_hyperbola(&same), Err(FitError::Degenerate(_))));
        let two = synthetic(2e9, 20e12, 128e-6, 2, 1.0);
        assert!(matches!(fit_hyperbola(&two), Err(FitError::InsufficientData(_))));
        let bad = vec![SpectrumPoint::new(0.0, 1.0, 0.0); 3];
        assert!(matches!(fit_hyperbola(&bad), Err(FitError::InvalidData(_))));
    }

    #[test]
    fn reflection_maps_center() {
        let b0 = 128e-6;
        let pts = synthetic(2e9, 20e12, b0, 21, 1e6);
        let mirrored: Vec<SpectrumPoint> = pts
            .iter()
            .map(|p| SpectrumPoint::new(2.0 * b0 - p.b, p.f, p.sigma))
            .collect();
        let a = fit_hyperbola(&pts).unwrap();
        let b = fit_hyperbola(&mirrored).unwrap();
        assert!((a.f_q0 / b.f_q0 - 1.0).abs() < 1e-8);
        assert!((a.gamma / b.gamma - 1.0).abs() < 1e-8);
        assert!(((2.0 * b0 - a.b0) / b.b0 - 1.0).abs() < 1e-8);
    }

    proptest! {
        #[test]
        fn order_invariant(seed in 0u64..1000) {
            use rand::seq::SliceRandom;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let noise = Normal::new(0.0, 5e6).unwrap();
            let mut pts = synthetic(2.3e9, 15e12, 50e-6, 15, 5e6);
            for p in &mut pts {
                p.f += noise.sample(&mut rng);
            }
            let a = fit_hyperbola(&pts).unwrap();
            pts.shuffle(&mut rng);
            let b = fit_hyperbola(&pts).unwrap();
            prop_assert_eq!(a.fit.params, b.fit.params);
        }
    }
}
