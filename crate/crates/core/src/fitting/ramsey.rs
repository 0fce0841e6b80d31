use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::{least_squares, matrix_pencil, FitError, FitResult, LmOptions, TimeTrace};

/// Beats with fewer than this many periods inside the trace are not resolved.
const MIN_BEAT_PERIODS: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RamseyFit {
    /// Shared decay time (s)
    pub t2_star: f64,
    /// Lower tone (Hz)
    pub f1: f64,
    /// Upper tone (Hz)
    pub f2: f64,
    /// `|f1 − f2|` (Hz)
    pub beat: f64,
    pub a1: f64,
    pub a2: f64,
    pub phi1: f64,
    pub phi2: f64,
    pub offset: f64,
    /// False when `|f1 − f2|·t_max < 0.5`; the split into two tones then
    /// carries no information and only `a1 + a2` is meaningful.
    pub beat_identifiable: bool,
    pub fit: FitResult,
}

fn two_tone(t: f64, p: &[f64]) -> f64 {
    (-t / p[0]).exp() * (p[3] * (2.0 * PI * p[1] * t + p[5]).cos() + p[4] * (2.0 * PI * p[2] * t + p[6]).cos())
        + p[7]
}

fn one_tone(t: f64, p: &[f64]) -> f64 {
    (-t / p[0]).exp() * p[2] * (2.0 * PI * p[1] * t + p[3]).cos() + p[4]
}

/// Amplitudes, phases and offset that best fit `trace` for fixed decay and tones.
fn linear_amplitudes(trace: &TimeTrace, tau: f64, freqs: &[f64]) -> (Vec<(f64, f64)>, f64) {
    let t = trace.times();
    let cols = 2 * freqs.len() + 1;
    let a = DMatrix::from_fn(t.len(), cols, |i, j| {
        let s = trace.sigma()[i];
        if j == cols - 1 {
            return 1.0 / s;
        }
        let env = (-t[i] / tau).exp();
        let w = 2.0 * PI * freqs[j / 2] * t[i];
        env * if j % 2 == 0 { w.cos() } else { -w.sin() } / s
    });
    let b = DVector::from_iterator(t.len(), trace.values().iter().zip(trace.sigma()).map(|(y, s)| y / s));
    let x = a
        .svd(true, true)
        .solve(&b, 1e-14)
        .unwrap_or_else(|_| DVector::zeros(cols));
    let tones = (0..freqs.len())
        .map(|k| {
            let (c, s) = (x[2 * k], x[2 * k + 1]);
            (c.hypot(s), s.atan2(c))
        })
        .collect();
    (tones, x[cols - 1])
}

/// Fits `exp(−t/T2*)·[a1 cos(2πf1 t + φ1) + a2 cos(2πf2 t + φ2)] + c`.
///
/// Start values come from a matrix-pencil decomposition followed by a linear
/// solve for amplitudes and phases.
pub fn fit_ramsey_beat(trace: &TimeTrace) -> Result<RamseyFit, FitError> {
    if trace.len() < 10 {
        return Err(FitError::InsufficientData(format!(
            "Ramsey fit needs at least 10 points, got {}",
            trace.len()
        )));
    }
    let span = trace.span();
    let t_max = *trace.times().last().unwrap_or(&span);
    let poles = matrix_pencil(trace.times(), trace.values(), 5);
    let resolution = 0.25 / span;
    let mut tones: Vec<_> = poles
        .iter()
        .filter(|p| p.frequency > resolution)
        .copied()
        .collect();
    tones.sort_by(|a, b| b.amplitude.norm().total_cmp(&a.amplitude.norm()));
    tones.truncate(2);
    let tau0 = {
        let rates: Vec<f64> = tones.iter().map(|p| p.rate).filter(|r| *r > 0.0).collect();
        if rates.is_empty() {
            span
        } else {
            rates.len() as f64 / rates.iter().sum::<f64>()
        }
    };
    let mut freqs: Vec<f64> = tones.iter().map(|p| p.frequency).collect();
    freqs.sort_by(f64::total_cmp);
    if freqs.is_empty() {
        freqs.push(1.0 / span);
    }

    if freqs.len() == 2 && (freqs[1] - freqs[0]) * t_max >= MIN_BEAT_PERIODS {
        let (amp, c0) = linear_amplitudes(trace, tau0, &freqs);
        let fit = least_squares(
            |p| trace.residuals(|t| two_tone(t, p)),
            &[
                ("T2s", tau0),
                ("f1", freqs[0]),
                ("f2", freqs[1]),
                ("a1", amp[0].0),
                ("a2", amp[1].0),
                ("phi1", amp[0].1),
                ("phi2", amp[1].1),
                ("c", c0),
            ],
            LmOptions::default(),
        );
        let (f1, f2) = (fit.value("f1"), fit.value("f2"));
        if (f2 - f1).abs() * t_max >= MIN_BEAT_PERIODS {
            return Ok(two_tone_result(fit));
        }
    }
    single_tone(trace, tau0, freqs[0])
}

fn wrap(phi: f64) -> f64 {
    (phi + PI).rem_euclid(2.0 * PI) - PI
}

fn two_tone_result(fit: FitResult) -> RamseyFit {
    let mut v: Vec<f64> = fit.params.values().copied().collect();
    // canonical signs: positive amplitudes, f1 < f2, phases in [−π, π)
    for (a, phi) in [(3, 5), (4, 6)] {
        if v[a] < 0.0 {
            v[a] = -v[a];
            v[phi] += PI;
        }
        v[phi] = wrap(v[phi]);
    }
    let mut fit = fit;
    if v[1] > v[2] {
        v.swap(1, 2);
        v.swap(3, 4);
        v.swap(5, 6);
        let e: Vec<f64> = fit.std_errors.values().copied().collect();
        for (k, i) in [("f1", 2), ("f2", 1), ("a1", 4), ("a2", 3), ("phi1", 6), ("phi2", 5)] {
            fit.std_errors[k] = e[i];
        }
    }
    for (slot, val) in fit.params.values_mut().zip(&v) {
        *slot = *val;
    }
    RamseyFit {
        t2_star: v[0],
        f1: v[1],
        f2: v[2],
        beat: v[2] - v[1],
        a1: v[3],
        a2: v[4],
        phi1: v[5],
        phi2: v[6],
        offset: v[7],
        beat_identifiable: true,
        fit,
    }
}

fn single_tone(trace: &TimeTrace, tau0: f64, f0: f64) -> Result<RamseyFit, FitError> {
    let (amp, c0) = linear_amplitudes(trace, tau0, &[f0]);
    let fit = least_squares(
        |p| trace.residuals(|t| one_tone(t, p)),
        &[("T2s", tau0), ("f", f0), ("a", amp[0].0), ("phi", amp[0].1), ("c", c0)],
        LmOptions::default(),
    );
    let mut a = fit.value("a");
    let mut phi = fit.value("phi");
    if a < 0.0 {
        a = -a;
        phi += PI;
    }
    phi = wrap(phi);
    let f = fit.value("f");
    let t2 = fit.value("T2s");
    let c = fit.value("c");
    let e = |k: &str| fit.error(k);
    let params = [
        ("T2s", t2, e("T2s")),
        ("f1", f, e("f")),
        ("f2", f, e("f")),
        ("a1", 0.5 * a, f64::INFINITY),
        ("a2", 0.5 * a, f64::INFINITY),
        ("phi1", phi, e("phi")),
        ("phi2", phi, e("phi")),
        ("c", c, e("c")),
        ("a_sum", a, e("a")),
    ];
    let reported = FitResult {
        params: params.iter().map(|(k, v, _)| (k.to_string(), *v)).collect(),
        std_errors: params.iter().map(|(k, _, s)| (k.to_string(), *s)).collect(),
        ..fit
    };
    Ok(RamseyFit {
        t2_star: t2,
        f1: f,
        f2: f,
        beat: 0.0,
        a1: 0.5 * a,
        a2: 0.5 * a,
        phi1: phi,
        phi2: phi,
        offset: c,
        beat_identifiable: false,
        fit: reported,
    })
}
