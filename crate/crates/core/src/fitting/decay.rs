use serde::Serialize;

use super::{least_squares, FitError, FitResult, LmOptions, TimeTrace};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExponentialFit {
    /// Time constant (s)
    pub tau: f64,
    pub amplitude: f64,
    pub offset: f64,
    pub fit: FitResult,
}

/// Fits `A·exp(−t/T) + c`.
///
/// For a trace without decay the time constant comes back with an infinite
/// standard error.
pub fn fit_exponential(trace: &TimeTrace) -> Result<ExponentialFit, FitError> {
    if trace.len() < 4 {
        return Err(FitError::InsufficientData(format!(
            "exponential fit needs at least 4 points, got {}",
            trace.len()
        )));
    }
    let t = trace.times();
    let y = trace.values();
    let n = y.len();
    let t0 = t[0];
    let tail = (n / 10).max(1);
    let c0 = y[n - tail..].iter().sum::<f64>() / tail as f64;
    let a0 = y[0] - c0;
    // first time the excursion falls below 1/e of its start
    let tau0 = y
        .iter()
        .zip(t)
        .find(|(v, _)| (*v - c0).abs() <= a0.abs() / std::f64::consts::E)
        .map(|(_, ti)| ti - t0)
        .filter(|d| *d > 0.0)
        .unwrap_or(trace.span() / 3.0);

    // time measured from the first sample keeps A the value at the start
    let fit = least_squares(
        |p| trace.residuals(|ti| p[1] * (-(ti - t0) / p[0]).exp() + p[2]),
        &[("T", tau0), ("A", a0), ("c", c0)],
        LmOptions::default(),
    );
    let mut fit = fit;
    // report the amplitude at t = 0
    let tau = fit.value("T");
    if t0 != 0.0 && tau.is_finite() && tau != 0.0 {
        let scale = (t0 / tau).exp();
        if let Some(a) = fit.params.get_mut("A") {
            *a *= scale;
        }
        if let Some(e) = fit.std_errors.get_mut("A") {
            *e *= scale;
        }
    }
    Ok(ExponentialFit {
        tau,
        amplitude: fit.value("A"),
        offset: fit.value("c"),
        fit,
    })
}
