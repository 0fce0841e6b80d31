use serde::Serialize;

use super::{least_squares, sorted_points, FitError, FitResult, LmOptions, SpectrumDataset};
use crate::rabi::{branch_transitions, HilbertTruncation, QrmParams};

/// Weighted residual assigned to a point whose model evaluation failed.
const FAILURE_PENALTY: f64 = 1e3;

/// Optional start values; anything left `None` is derived from the data.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct JointInit {
    pub f_r: Option<f64>,
    pub g: Option<f64>,
    pub gamma: Option<f64>,
    pub b0: Option<f64>,
    pub f_q0: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JointFit {
    pub f_r: f64,
    pub g: f64,
    pub gamma: f64,
    pub b0: f64,
    pub f_q0: f64,
    pub fit: FitResult,
}

impl JointFit {
    pub fn params(&self) -> QrmParams {
        QrmParams {
            f_r: self.f_r,
            g: self.g,
            gamma: self.gamma,
            b0: self.b0,
            f_q0: self.f_q0,
            ..QrmParams::reference_aqrm()
        }
    }
}

fn model(p: &[f64]) -> QrmParams {
    QrmParams {
        f_r: p[0].abs(),
        g: p[1].abs(),
        gamma: p[2].abs(),
        b0: p[3],
        f_q0: p[4].abs(),
        ..QrmParams::reference_aqrm()
    }
}

/// Fits the asymmetric Rabi model to qubit-branch and resonator-branch
/// frequencies at once.
///
/// Model frequencies are the transitions from the ground state to the
/// eigenstate with the largest `|0,e⟩` weight (qubit points) and to the
/// remaining eigenstate with the largest `|1,g⟩` weight (resonator points).
/// Derived start values: `f_r` is the median resonator frequency, `B0` the
/// field of the lowest qubit point, `f_q0` that frequency, `γ` the secant
/// to the qubit point farthest from `B0`, and `g` one percent of `f_r`.
pub fn fit_joint_aqrm(
    data: &SpectrumDataset,
    init: JointInit,
    trunc: HilbertTruncation,
) -> Result<JointFit, FitError> {
    data.validate()?;
    let qubit = sorted_points(&data.qubit_points);
    let resonator = sorted_points(&data.resonator_points);

    let f_r = match init.f_r {
        Some(v) => v,
        None => {
            if resonator.is_empty() {
                return Err(FitError::InsufficientData(
                    "no resonator points and no resonator frequency given".into(),
                ));
            }
            let mut fs: Vec<f64> = resonator.iter().map(|p| p.f).collect();
            fs.sort_by(f64::total_cmp);
            let m = fs.len();
            if m % 2 == 1 {
                fs[m / 2]
            } else {
                0.5 * (fs[m / 2 - 1] + fs[m / 2])
            }
        }
    };
    let lowest = qubit.iter().min_by(|a, b| a.f.total_cmp(&b.f)).copied();
    let b0 = match (init.b0, lowest) {
        (Some(v), _) => v,
        (None, Some(p)) => p.b,
        (None, None) => {
            return Err(FitError::InsufficientData(
                "no qubit points and no sweet-spot field given".into(),
            ))
        }
    };
    let f_q0 = init.f_q0.or(lowest.map(|p| p.f)).unwrap_or(0.1 * f_r);
    let gamma = match init.gamma {
        Some(v) => v,
        None => {
            let far = qubit
                .iter()
                .max_by(|a, b| (a.b - b0).abs().total_cmp(&(b.b - b0).abs()))
                .filter(|p| p.b != b0);
            match far {
                Some(p) => ((p.f * p.f - f_q0 * f_q0).max(0.0).sqrt() / (p.b - b0).abs()).max(1.0),
                None => {
                    return Err(FitError::Degenerate(
                        "cannot estimate gamma: qubit points share one field".into(),
                    ))
                }
            }
        }
    };
    let g = init.g.unwrap_or(0.01 * f_r);

    let residuals = |p: &[f64]| -> Vec<f64> {
        let params = model(p);
        let q = qubit.iter().map(|pt| match branch_transitions(&params, pt.b, trunc) {
            Ok(t) => (t.qubit_like - pt.f) / pt.sigma,
            Err(_) => FAILURE_PENALTY,
        });
        let r = resonator.iter().map(|pt| match branch_transitions(&params, pt.b, trunc) {
            Ok(t) => (t.resonator_like - pt.f) / pt.sigma,
            Err(_) => FAILURE_PENALTY,
        });
        q.chain(r).collect()
    };
    let mut fit = least_squares(
        residuals,
        &[("f_r", f_r), ("g", g), ("gamma", gamma), ("B0", b0), ("f_q0", f_q0)],
        LmOptions::default(),
    );
    for key in ["f_r", "g", "gamma", "f_q0"] {
        if let Some(v) = fit.params.get_mut(key) {
            *v = v.abs();
        }
    }
    Ok(JointFit {
        f_r: fit.value("f_r"),
        g: fit.value("g"),
        gamma: fit.value("gamma"),
        b0: fit.value("B0"),
        f_q0: fit.value("f_q0"),
        fit,
    })
}
