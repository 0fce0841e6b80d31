use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use super::{least_squares, matrix_pencil, FitError, FitResult, LmOptions, TimeTrace};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DampedCosineFit {
    /// Hz
    pub frequency: f64,
    /// s
    pub tau: f64,
    pub amplitude: f64,
    pub phase: f64,
    pub offset: f64,
    pub fit: FitResult,
}

/// Fits `a·exp(−t/τ)·cos(2πf t + φ) + c`; fails if the trace covers less
/// than one period of the fitted oscillation.
pub fn fit_damped_cosine(trace: &TimeTrace) -> Result<DampedCosineFit, FitError> {
    if trace.len() < 6 {
        return Err(FitError::InsufficientData(format!(
            "damped cosine needs at least 6 points, got {}",
            trace.len()
        )));
    }
    let span = trace.span();
    let poles = matrix_pencil(trace.times(), trace.values(), 3);
    let Some(tone) = poles
        .iter()
        .filter(|p| p.frequency > 0.25 / span)
        .max_by(|a, b| a.amplitude.norm().total_cmp(&b.amplitude.norm()))
        .copied()
    else {
        return Err(FitError::Degenerate("no oscillation found".into()));
    };
    let offset0 = poles
        .iter()
        .filter(|p| p.frequency.abs() <= 0.25 / span)
        .map(|p| p.amplitude.re)
        .sum::<f64>();
    let t0 = trace.times()[0];
    let w0 = 2.0 * PI * tone.frequency;
    // pencil amplitudes refer to the first sample
    let c = 2.0 * tone.amplitude * num_complex::Complex64::from_polar((tone.rate * t0).exp(), -w0 * t0);
    let tau0 = if tone.rate > 0.0 { 1.0 / tone.rate } else { 10.0 * span };

    let fit = least_squares(
        |p| trace.residuals(|t| p[2] * (-t / p[1]).exp() * (2.0 * PI * p[0] * t + p[3]).cos() + p[4]),
        &[("f", tone.frequency), ("tau", tau0), ("a", c.norm()), ("phi", c.arg()), ("c", offset0)],
        LmOptions::default(),
    );
    let f = fit.value("f").abs();
    if f * span < 1.0 {
        return Err(FitError::Degenerate(format!(
            "trace covers {:.2} periods of the fitted oscillation",
            f * span
        )));
    }
    Ok(DampedCosineFit {
        frequency: f,
        tau: fit.value("tau"),
        amplitude: fit.value("a"),
        phase: fit.value("phi"),
        offset: fit.value("c"),
        fit,
    })
}

/// One Rabi time trace at a given drive amplitude (V).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RabiScan {
    pub amplitude: f64,
    pub trace: TimeTrace,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RabiWarning {
    pub amplitude: f64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RabiLinearFit {
    /// `(amplitude, Ω/2π, standard error)` for every trace that was used.
    pub rabi_frequencies: Vec<(f64, f64, f64)>,
    /// Hz/V
    pub slope: f64,
    pub fit: FitResult,
    /// Traces that were excluded.
    pub warnings: Vec<RabiWarning>,
}

/// Rabi frequency Ω/2π of a rectangular pulse of length `t_pi` that inverts
/// the population: `Ω·t_pi = π`.
pub fn rabi_frequency_from_pi_pulse(t_pi: f64) -> f64 {
    1.0 / (2.0 * t_pi)
}

/// Damped-cosine fit per trace, then a zero-intercept line of Ω/2π against
/// drive amplitude. Traces at zero amplitude contribute Ω = 0 directly.
pub fn fit_rabi_linear(scans: &[RabiScan]) -> Result<RabiLinearFit, FitError> {
    let mut sorted: Vec<&RabiScan> = scans.iter().collect();
    sorted.sort_by(|a, b| a.amplitude.total_cmp(&b.amplitude));
    let per_trace: Vec<(f64, Result<(f64, f64), FitError>)> = sorted
        .par_iter()
        .map(|s| {
            if s.amplitude == 0.0 {
                return (0.0, Ok((0.0, 0.0)));
            }
            let r = fit_damped_cosine(&s.trace).map(|f| (f.frequency, f.fit.error("f")));
            (s.amplitude, r)
        })
        .collect();

    let mut points = Vec::new();
    let mut warnings = Vec::new();
    for (amp, r) in per_trace {
        match r {
            Ok((f, e)) => points.push((amp, f, e)),
            Err(e) => warnings.push(RabiWarning {
                amplitude: amp,
                reason: e.to_string(),
            }),
        }
    }
    let informative: Vec<&(f64, f64, f64)> = points.iter().filter(|p| p.0 != 0.0).collect();
    if informative.is_empty() {
        return Err(FitError::InsufficientData(
            "no oscillating trace at non-zero amplitude".into(),
        ));
    }
    let s0 = informative.iter().map(|p| p.0 * p.1).sum::<f64>()
        / informative.iter().map(|p| p.0 * p.0).sum::<f64>();
    let fit = least_squares(
        |p| points.iter().map(|(a, f, _)| p[0] * a - f).collect(),
        &[("slope", s0)],
        LmOptions::default(),
    );
    Ok(RabiLinearFit {
        rabi_frequencies: points,
        slope: fit.value("slope"),
        fit,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rabi_trace(f: f64, n: usize, t_max: f64) -> TimeTrace {
        let ts: Vec<f64> = (0..n).map(|i| t_max * i as f64 / (n - 1) as f64).collect();
        let ys = ts
            .iter()
            .map(|t| 0.5 - 0.5 * (-t / 2e-6).exp() * (2.0 * PI * f * t).cos())
            .collect();
        TimeTrace::new(ts, ys).unwrap()
    }

    #[test]
    fn pi_pulse_arithmetic() {
        assert!((rabi_frequency_from_pi_pulse(20e-9) - 25e6).abs() < 1e-6);
        // the trace of a 25 MHz Rabi drive is inverted after 20 ns
        let fit = fit_damped_cosine(&rabi_trace(25e6, 101, 200e-9)).unwrap();
        assert!((fit.frequency - 25e6).abs() < 1.0);
    }

    #[test]
    fn linear_round_trip() {
        let slope = 1e6 / 1e-6;
        let scans: Vec<RabiScan> = [0.0, 5e-6, 10e-6, 20e-6, 30e-6]
            .iter()
            .map(|&a| RabiScan {
                amplitude: a,
                trace: rabi_trace(slope * a, 201, 1e-6),
            })
            .collect();
        let fit = fit_rabi_linear(&scans).unwrap();
        assert!((fit.slope / slope - 1.0).abs() < 0.01);
        assert_eq!(fit.rabi_frequencies[0], (0.0, 0.0, 0.0));
        assert!(fit.warnings.is_empty());
    }

    #[test]
    fn flat_trace_is_excluded() {
        let flat = TimeTrace::new((0..50).map(|i| i as f64 * 1e-8).collect(), vec![0.1; 50]).unwrap();
        let scans = vec![
            RabiScan { amplitude: 1.0, trace: rabi_trace(10e6, 101, 500e-9) },
            RabiScan { amplitude: 2.0, trace: flat },
        ];
        let fit = fit_rabi_linear(&scans).unwrap();
        assert_eq!(fit.warnings.len(), 1);
        assert_eq!(fit.warnings[0].amplitude, 2.0);
        assert!((fit.slope - 10e6).abs() < 1.0);
    }
}
