//! Least-squares fitting: a generic Levenberg–Marquardt engine and the
//! spectroscopy and time-domain fitters built on it.
//!
//! Every fitter sorts its input into a canonical order before fitting, so
//! results do not depend on the order in which points are supplied.

use serde::Serialize;
use thiserror::Error;

mod decay;
mod hyperbola;
mod joint;
mod lm;
mod pencil;
mod rabi_osc;
mod ramsey;
mod reflection;

pub use decay::{fit_exponential, ExponentialFit};
pub use hyperbola::{fit_hyperbola, hyperbola, HyperbolaFit};
pub use joint::{fit_joint_aqrm, JointFit, JointInit};
pub use lm::{least_squares, FitResult, LmOptions, Termination};
pub use pencil::{matrix_pencil, Pole};
pub use rabi_osc::{
    fit_damped_cosine, fit_rabi_linear, rabi_frequency_from_pi_pulse, DampedCosineFit, RabiLinearFit,
    RabiScan, RabiWarning,
};
pub use ramsey::{fit_ramsey_beat, RamseyFit};
pub use reflection::{fit_reflection_pair, reflection_coefficient, reflection_phase, ReflectionFit};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FitError {
    #[error("not enough data: {0}")]
    InsufficientData(String),
    #[error("degenerate data: {0}")]
    Degenerate(String),
    #[error("invalid data: {0}")]
    InvalidData(String),
}

/// One spectroscopic point: field (T), frequency (Hz), uncertainty (Hz).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpectrumPoint {
    pub b: f64,
    pub f: f64,
    pub sigma: f64,
}

impl SpectrumPoint {
    pub fn new(b: f64, f: f64, sigma: f64) -> Self {
        SpectrumPoint { b, f, sigma }
    }
}

fn check_points(points: &[SpectrumPoint]) -> Result<(), FitError> {
    for p in points {
        if !(p.b.is_finite() && p.f.is_finite() && p.sigma.is_finite()) {
            return Err(FitError::InvalidData(format!("non-finite point {p:?}")));
        }
        if p.sigma <= 0.0 {
            return Err(FitError::InvalidData(format!("sigma must be positive, got {}", p.sigma)));
        }
    }
    Ok(())
}

fn sorted_points(points: &[SpectrumPoint]) -> Vec<SpectrumPoint> {
    let mut v = points.to_vec();
    v.sort_by(|a, b| {
        a.b.total_cmp(&b.b)
            .then(a.f.total_cmp(&b.f))
            .then(a.sigma.total_cmp(&b.sigma))
    });
    v
}

/// Qubit and resonator branch frequencies measured over field.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct SpectrumDataset {
    pub qubit_points: Vec<SpectrumPoint>,
    pub resonator_points: Vec<SpectrumPoint>,
}

impl SpectrumDataset {
    pub fn validate(&self) -> Result<(), FitError> {
        check_points(&self.qubit_points)?;
        check_points(&self.resonator_points)?;
        let total = self.qubit_points.len() + self.resonator_points.len();
        if total < 4 {
            return Err(FitError::InsufficientData(format!(
                "joint fit needs at least 4 points, got {total}"
            )));
        }
        Ok(())
    }
}

/// Sampled time-domain signal with per-point uncertainty.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimeTrace {
    times: Vec<f64>,
    values: Vec<f64>,
    sigma: Vec<f64>,
}

impl TimeTrace {
    /// Unit uncertainty on every point.
    pub fn new(times: Vec<f64>, values: Vec<f64>) -> Result<Self, FitError> {
        let sigma = vec![1.0; times.len()];
        Self::with_sigma(times, values, sigma)
    }

    pub fn with_sigma(times: Vec<f64>, values: Vec<f64>, sigma: Vec<f64>) -> Result<Self, FitError> {
        if times.len() != values.len() || times.len() != sigma.len() {
            return Err(FitError::InvalidData(format!(
                "length mismatch: {} times, {} values, {} sigmas",
                times.len(),
                values.len(),
                sigma.len()
            )));
        }
        if times.iter().chain(&values).chain(&sigma).any(|v| !v.is_finite()) {
            return Err(FitError::InvalidData("non-finite entry".into()));
        }
        if sigma.iter().any(|s| *s <= 0.0) {
            return Err(FitError::InvalidData("sigma must be positive".into()));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(FitError::InvalidData("times must be strictly ascending".into()));
        }
        Ok(TimeTrace { times, values, sigma })
    }

    /// Builds from unordered samples by sorting on time.
    pub fn from_unsorted(samples: &[(f64, f64, f64)]) -> Result<Self, FitError> {
        let mut s = samples.to_vec();
        s.sort_by(|a, b| a.0.total_cmp(&b.0));
        Self::with_sigma(
            s.iter().map(|x| x.0).collect(),
            s.iter().map(|x| x.1).collect(),
            s.iter().map(|x| x.2).collect(),
        )
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn sigma(&self) -> &[f64] {
        &self.sigma
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn span(&self) -> f64 {
        match (self.times.first(), self.times.last()) {
            (Some(a), Some(b)) => b - a,
            _ => 0.0,
        }
    }

    /// Weighted residuals of `model` against the trace.
    fn residuals(&self, model: impl Fn(f64) -> f64) -> Vec<f64> {
        self.times
            .iter()
            .zip(&self.values)
            .zip(&self.sigma)
            .map(|((t, y), s)| (model(*t) - y) / s)
            .collect()
    }
}
