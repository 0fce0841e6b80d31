//! Levenberg–Marquardt least squares with a central-difference Jacobian.

use indexmap::IndexMap;
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::Serialize;

/// Why the iteration stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Termination {
    /// Every gradient component is below tolerance relative to its column
    /// and the residual norm.
    Gradient,
    /// The accepted step was negligible relative to the parameters.
    Step,
    /// Residuals are exactly zero.
    ExactFit,
    MaxIterations,
    /// No damping produced a decrease.
    DampingExhausted,
    /// The model returned non-finite residuals at the initial point.
    InvalidStart,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LmOptions {
    pub gtol: f64,
    pub xtol: f64,
    pub max_iterations: usize,
    /// Relative finite-difference step.
    pub diff_step: f64,
    /// Absolute lower bound on the finite-difference step.
    pub diff_floor: f64,
}

impl Default for LmOptions {
    fn default() -> Self {
        LmOptions {
            gtol: 1e-10,
            xtol: 1e-12,
            max_iterations: 200,
            diff_step: 1e-6,
            diff_floor: 1e-12,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitResult {
    pub params: IndexMap<String, f64>,
    /// `inf` marks a parameter the data cannot determine.
    pub std_errors: IndexMap<String, f64>,
    /// Euclidean norm of the weighted residual vector.
    pub residual_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    pub termination: Termination,
    /// Residual sum of squares per degree of freedom.
    pub reduced_chi2: f64,
    /// Residual norm after every accepted step, starting with the initial point.
    #[serde(skip)]
    pub history: Vec<f64>,
}

impl FitResult {
    pub fn value(&self, name: &str) -> f64 {
        self.params[name]
    }

    pub fn error(&self, name: &str) -> f64 {
        self.std_errors[name]
    }

    pub fn is_identifiable(&self, name: &str) -> bool {
        self.std_errors[name].is_finite()
    }

    /// Names of parameters with infinite standard error.
    pub fn unidentifiable(&self) -> Vec<&str> {
        self.std_errors
            .iter()
            .filter(|(_, e)| !e.is_finite())
            .map(|(k, _)| k.as_str())
            .collect()
    }
}

fn sum_sq(r: &[f64]) -> f64 {
    r.iter().map(|x| x * x).sum()
}

fn jacobian<F>(f: &F, p: &[f64], m: usize, opts: &LmOptions) -> Option<DMatrix<f64>>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let n = p.len();
    let mut jac = DMatrix::zeros(m, n);
    let mut q = p.to_vec();
    for j in 0..n {
        let h = (opts.diff_step * p[j].abs()).max(opts.diff_floor);
        q[j] = p[j] + h;
        let up = f(&q);
        q[j] = p[j] - h;
        let down = f(&q);
        q[j] = p[j];
        for i in 0..m {
            let d = (up[i] - down[i]) / (2.0 * h);
            if !d.is_finite() {
                return None;
            }
            jac[(i, j)] = d;
        }
    }
    Some(jac)
}

/// Minimizes `Σ r_i(p)²` starting from `init`.
///
/// `residuals` must return the same number of weighted residuals at every
/// parameter vector. Never panics on a degenerate problem: failures are
/// reported through `converged = false` and [`Termination`].
pub fn least_squares<F>(residuals: F, init: &[(&str, f64)], opts: LmOptions) -> FitResult
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let names: Vec<String> = init.iter().map(|(k, _)| k.to_string()).collect();
    let mut p: Vec<f64> = init.iter().map(|(_, v)| *v).collect();
    let n = p.len();
    let mut r = residuals(&p);
    let m = r.len();
    let mut cost = sum_sq(&r);
    let mut history = vec![cost.sqrt()];

    let finish = |p: &[f64], r: &[f64], jac: Option<&DMatrix<f64>>, iterations, termination, history| {
        let cost = sum_sq(r);
        let dof = m.saturating_sub(n).max(1) as f64;
        let reduced = cost / dof;
        let errors = match jac {
            Some(j) => standard_errors(j, reduced),
            None => vec![f64::INFINITY; n],
        };
        let converged = matches!(
            termination,
            Termination::Gradient | Termination::Step | Termination::ExactFit
        );
        FitResult {
            params: names.iter().cloned().zip(p.iter().copied()).collect(),
            std_errors: names.iter().cloned().zip(errors).collect(),
            residual_norm: cost.sqrt(),
            iterations,
            converged,
            termination,
            reduced_chi2: reduced,
            history,
        }
    };

    if !cost.is_finite() || p.iter().any(|v| !v.is_finite()) {
        return finish(&p, &r, None, 0, Termination::InvalidStart, history);
    }

    let mut mu = 1e-3;
    let mut iterations = 0;
    loop {
        let Some(jac) = jacobian(&residuals, &p, m, &opts) else {
            return finish(&p, &r, None, iterations, Termination::DampingExhausted, history);
        };
        if cost == 0.0 {
            return finish(&p, &r, Some(&jac), iterations, Termination::ExactFit, history);
        }
        let rv = DVector::from_column_slice(&r);
        let grad = jac.tr_mul(&rv);
        let rnorm = cost.sqrt();
        let gmax = (0..n)
            .map(|j| {
                let cn = jac.column(j).norm();
                if cn == 0.0 {
                    0.0
                } else {
                    grad[j].abs() / (cn * rnorm)
                }
            })
            .fold(0.0, f64::max);
        if gmax <= opts.gtol {
            return finish(&p, &r, Some(&jac), iterations, Termination::Gradient, history);
        }
        if iterations >= opts.max_iterations {
            return finish(&p, &r, Some(&jac), iterations, Termination::MaxIterations, history);
        }
        iterations += 1;

        // solve in column-equilibrated variables: Marquardt scaling without
        // the conditioning loss of mixing parameters of very different size
        let jtj = jac.tr_mul(&jac);
        let col: Vec<f64> = (0..n)
            .map(|j| {
                let d = jtj[(j, j)].sqrt();
                if d > 0.0 {
                    d
                } else {
                    1.0
                }
            })
            .collect();
        let scaled = DMatrix::from_fn(n, n, |i, j| jtj[(i, j)] / (col[i] * col[j]));
        let scaled_grad = DVector::from_fn(n, |j, _| -grad[j] / col[j]);

        let mut accepted = false;
        while mu < 1e20 {
            let mut a = scaled.clone();
            for j in 0..n {
                a[(j, j)] += mu;
            }
            let step = match a.cholesky() {
                Some(c) => {
                    let y = c.solve(&scaled_grad);
                    DVector::from_fn(n, |j, _| y[j] / col[j])
                }
                None => {
                    mu *= 10.0;
                    continue;
                }
            };
            let trial: Vec<f64> = p.iter().zip(step.iter()).map(|(x, d)| x + d).collect();
            let r_trial = residuals(&trial);
            let c_trial = sum_sq(&r_trial);
            if c_trial.is_finite() && c_trial < cost {
                let small = step
                    .iter()
                    .zip(&p)
                    .all(|(d, x)| d.abs() <= opts.xtol * (x.abs() + opts.xtol));
                p = trial;
                r = r_trial;
                cost = c_trial;
                history.push(cost.sqrt());
                mu = (mu / 3.0).max(1e-12);
                accepted = true;
                if small {
                    let jac = jacobian(&residuals, &p, m, &opts);
                    return finish(&p, &r, jac.as_ref(), iterations, Termination::Step, history);
                }
                break;
            }
            let negligible = step
                .iter()
                .zip(&p)
                .all(|(d, x)| d.abs() <= opts.xtol * (x.abs() + opts.xtol));
            if negligible {
                // no representable improvement left around the current point
                return finish(&p, &r, Some(&jac), iterations, Termination::Step, history);
            }
            mu *= 4.0;
        }
        if !accepted {
            return finish(&p, &r, Some(&jac), iterations, Termination::DampingExhausted, history);
        }
    }
}

/// `sqrt(diag(s²·(JᵀJ)⁺))`, with infinity for parameters touching the null space.
fn standard_errors(jac: &DMatrix<f64>, reduced_chi2: f64) -> Vec<f64> {
    let n = jac.ncols();
    let norms: Vec<f64> = (0..n).map(|j| jac.column(j).norm()).collect();
    // column-equilibrated normal matrix so the rank test is scale free
    let mut scaled = jac.clone();
    for j in 0..n {
        if norms[j] > 0.0 {
            scaled.column_mut(j).scale_mut(1.0 / norms[j]);
        }
    }
    let eig = SymmetricEigen::new(scaled.tr_mul(&scaled));
    let lmax = eig.eigenvalues.iter().copied().fold(0.0, f64::max);
    let cutoff = 1e-12 * lmax.max(f64::MIN_POSITIVE);
    let mut unidentifiable = vec![false; n];
    for j in 0..n {
        if norms[j] == 0.0 {
            unidentifiable[j] = true;
        }
    }
    for (k, &lam) in eig.eigenvalues.iter().enumerate() {
        if lam <= cutoff {
            for j in 0..n {
                if eig.eigenvectors[(j, k)].abs() > 1e-3 {
                    unidentifiable[j] = true;
                }
            }
        }
    }
    (0..n)
        .map(|j| {
            if unidentifiable[j] {
                return f64::INFINITY;
            }
            let var: f64 = eig
                .eigenvalues
                .iter()
                .enumerate()
                .filter(|(_, &lam)| lam > cutoff)
                .map(|(k, &lam)| eig.eigenvectors[(j, k)].powi(2) / lam)
                .sum();
            (reduced_chi2 * var).sqrt() / norms[j]
        })
        .collect()
}
