//! Matrix-pencil estimation of damped complex exponentials.
//!
//! Used only to seed the oscillatory fits: it returns decay rates and
//! frequencies without any starting guess.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

/// `c · exp((−rate + 2πi·frequency) t)`
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Pole {
    /// 1/s
    pub rate: f64,
    /// Hz
    pub frequency: f64,
    pub amplitude: Complex64,
}

fn uniform_samples(times: &[f64], values: &[f64]) -> (f64, Vec<f64>) {
    let n = times.len();
    let dt = (times[n - 1] - times[0]) / (n - 1) as f64;
    let uniform = times
        .iter()
        .enumerate()
        .all(|(i, t)| (t - times[0] - dt * i as f64).abs() <= 1e-6 * dt);
    if uniform {
        return (dt, values.to_vec());
    }
    // linear interpolation onto an even grid
    let mut out = Vec::with_capacity(n);
    let mut j = 0;
    for i in 0..n {
        let t = times[0] + dt * i as f64;
        while j + 2 < n && times[j + 1] < t {
            j += 1;
        }
        let (t0, t1) = (times[j], times[j + 1]);
        let w = ((t - t0) / (t1 - t0)).clamp(0.0, 1.0);
        out.push(values[j] * (1.0 - w) + values[j + 1] * w);
    }
    (dt, out)
}

/// Estimates up to `max_poles` poles of the sampled signal; fewer when the
/// data has lower numerical rank. Amplitudes refer to `t = times[0]`.
pub fn matrix_pencil(times: &[f64], values: &[f64], max_poles: usize) -> Vec<Pole> {
    let n = times.len();
    if n < 4 || max_poles == 0 || n != values.len() {
        return Vec::new();
    }
    let (dt, y) = uniform_samples(times, values);
    let l = (n / 3).max(max_poles).min(n - 2);
    let rows = n - l;
    let hankel = DMatrix::from_fn(rows, l + 1, |i, j| y[i + j]);
    let svd = hankel.svd(false, true);
    let Some(v_t) = svd.v_t else {
        return Vec::new();
    };
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let smax = svd.singular_values[order[0]];
    if !(smax > 0.0) {
        return Vec::new();
    }
    let rank = order
        .iter()
        .take_while(|&&i| svd.singular_values[i] > 1e-9 * smax)
        .count();
    let m = rank.min(max_poles).min(l);
    if m == 0 {
        return Vec::new();
    }
    // right singular vectors as columns
    let v = DMatrix::from_fn(l + 1, m, |r, c| v_t[(order[c], r)]);
    let v1 = v.rows(0, l).into_owned();
    let v2 = v.rows(1, l).into_owned();
    let Ok(pinv) = v1.pseudo_inverse(1e-12) else {
        return Vec::new();
    };
    let z = (pinv * v2).complex_eigenvalues();

    // complex amplitudes from the Vandermonde system
    let vander = DMatrix::<Complex64>::from_fn(n, m, |i, k| z[k].powi(i as i32));
    let rhs = DMatrix::<Complex64>::from_fn(n, 1, |i, _| Complex64::new(y[i], 0.0));
    let amps = match vander.svd(true, true).solve(&rhs, 1e-14) {
        Ok(a) => a,
        Err(_) => return Vec::new(),
    };
    (0..m)
        .map(|k| Pole {
            rate: -z[k].norm().ln() / dt,
            frequency: z[k].arg() / (2.0 * std::f64::consts::PI * dt),
            amplitude: amps[(k, 0)],
        })
        .collect()
}
