//! Quantum jumps in single-shot readout records.
//!
//! States are stored as `bool`, `true` meaning excited.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Normal};
use serde::Serialize;
use thiserror::Error;

use crate::constants::PhysicalConstants;
use crate::fitting::{fit_exponential, FitError, TimeTrace};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum JumpError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("acceptance bands overlap: centres {separation} apart, bands need {required}")]
    AmbiguousBands { separation: f64, required: f64 },
    #[error("only {found} complete dwells in the {state} state, need {required}")]
    InsufficientDwells {
        state: &'static str,
        found: usize,
        required: usize,
    },
    #[error("clustering failed: {0}")]
    Clustering(String),
    #[error("population {p_e} is not below one half: population inversion, no positive temperature")]
    PopulationInversion { p_e: f64 },
    #[error(transparent)]
    Fit(#[from] FitError),
}

/// Mean dwell times of the two-state process.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TelegraphParams {
    /// Mean time in the ground state before excitation (s); infinite disables
    /// excitation.
    pub t_up: f64,
    /// Mean time in the excited state before relaxation (s)
    pub t_down: f64,
}

impl TelegraphParams {
    pub fn new(t_up: f64, t_down: f64) -> Result<Self, JumpError> {
        let p = TelegraphParams { t_up, t_down };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), JumpError> {
        if !(self.t_up > 0.0 && self.t_down > 0.0) || self.t_down.is_infinite() {
            return Err(JumpError::InvalidParams(format!(
                "dwell times must be positive (T_up = {}, T_down = {})",
                self.t_up, self.t_down
            )));
        }
        Ok(())
    }

    /// Stationary excited population `(1/T_up) / (1/T_up + 1/T_down)`.
    pub fn stationary_excited(&self) -> f64 {
        let up = 1.0 / self.t_up;
        up / (up + 1.0 / self.t_down)
    }

    /// `(1/T_up + 1/T_down)⁻¹`
    pub fn t1(&self) -> f64 {
        1.0 / (1.0 / self.t_up + 1.0 / self.t_down)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReadoutModel {
    pub center_g: Complex64,
    pub center_e: Complex64,
    /// Per-quadrature standard deviation
    pub sigma_cloud: f64,
    /// Integration time (s)
    pub tau_m: f64,
    /// Time between measurements (s)
    pub spacing: f64,
}

impl ReadoutModel {
    /// Clouds on the real axis, `separation` widths apart.
    pub fn symmetric(separation_sigma: f64, sigma_cloud: f64, tau_m: f64, spacing: f64) -> Result<Self, JumpError> {
        let half = 0.5 * separation_sigma * sigma_cloud;
        let m = ReadoutModel {
            center_g: Complex64::new(-half, 0.0),
            center_e: Complex64::new(half, 0.0),
            sigma_cloud,
            tau_m,
            spacing,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<(), JumpError> {
        if !(self.sigma_cloud > 0.0 && self.sigma_cloud.is_finite()) {
            return Err(JumpError::InvalidParams("sigma_cloud must be positive".into()));
        }
        if !(self.spacing > 0.0 && self.tau_m >= 0.0 && self.spacing >= self.tau_m) {
            return Err(JumpError::InvalidParams(format!(
                "need spacing >= tau_m > 0 (spacing = {}, tau_m = {})",
                self.spacing, self.tau_m
            )));
        }
        if !(self.center_g.re.is_finite()
            && self.center_g.im.is_finite()
            && self.center_e.re.is_finite()
            && self.center_e.im.is_finite())
        {
            return Err(JumpError::InvalidParams("non-finite cloud centre".into()));
        }
        Ok(())
    }

    fn center(&self, excited: bool) -> Complex64 {
        if excited {
            self.center_e
        } else {
            self.center_g
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    /// s, uniform at the readout spacing
    pub times: Vec<f64>,
    pub iq: Vec<Complex64>,
    /// Generator states, synthetic records only
    pub true_states: Option<Vec<bool>>,
    pub assigned_states: Option<Vec<bool>>,
}

impl Trajectory {
    /// Wraps measured points taken every `spacing` seconds.
    pub fn from_points(iq: Vec<Complex64>, spacing: f64) -> Self {
        let times = (0..iq.len()).map(|i| i as f64 * spacing).collect();
        Trajectory {
            times,
            iq,
            true_states: None,
            assigned_states: None,
        }
    }

    pub fn len(&self) -> usize {
        self.iq.len()
    }

    pub fn is_empty(&self) -> bool {
        self.iq.is_empty()
    }
}

/// Two-state Markov chain sampled every `spacing`, with Gaussian IQ noise on
/// each shot. The initial state is drawn from the stationary distribution.
pub fn simulate_trajectory(
    tg: &TelegraphParams,
    ro: &ReadoutModel,
    duration: f64,
    seed: u64,
) -> Result<Trajectory, JumpError> {
    tg.validate()?;
    ro.validate()?;
    if !(duration >= 0.0 && duration.is_finite()) {
        return Err(JumpError::InvalidParams(format!("duration {duration} s")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, ro.sigma_cloud).map_err(|e| JumpError::InvalidParams(e.to_string()))?;
    let leave_excited = Exp::new(1.0 / tg.t_down).map_err(|e| JumpError::InvalidParams(e.to_string()))?;
    let leave_ground = if tg.t_up.is_finite() {
        Some(Exp::new(1.0 / tg.t_up).map_err(|e| JumpError::InvalidParams(e.to_string()))?)
    } else {
        None
    };
    let mut excited = rng.random::<f64>() < tg.stationary_excited();
    let dwell = |excited: bool, rng: &mut ChaCha8Rng| -> f64 {
        if excited {
            leave_excited.sample(rng)
        } else {
            leave_ground.map_or(f64::INFINITY, |d| d.sample(rng))
        }
    };
    let mut next_jump = dwell(excited, &mut rng);

    let n = (duration / ro.spacing).floor() as usize;
    let mut times = Vec::with_capacity(n);
    let mut iq = Vec::with_capacity(n);
    let mut states = Vec::with_capacity(n);
    for i in 0..n {
        let t = i as f64 * ro.spacing;
        while next_jump <= t {
            excited = !excited;
            next_jump += dwell(excited, &mut rng);
        }
        let c = ro.center(excited);
        times.push(t);
        iq.push(Complex64::new(c.re + noise.sample(&mut rng), c.im + noise.sample(&mut rng)));
        states.push(excited);
    }
    Ok(Trajectory {
        times,
        iq,
        true_states: Some(states),
        assigned_states: None,
    })
}

/// Hysteretic assignment. Points are projected on the line through the two
/// centres; the assignment switches only when a point lands within
/// `n_sigma·σ` of the other state's centre. The first point goes to the
/// nearer centre.
pub fn latching_filter(iq: &[Complex64], ro: &ReadoutModel, n_sigma: f64) -> Result<Vec<bool>, JumpError> {
    ro.validate()?;
    if !(n_sigma > 0.0) {
        return Err(JumpError::InvalidParams("n_sigma must be positive".into()));
    }
    let axis = ro.center_e - ro.center_g;
    let separation = axis.norm();
    let band = n_sigma * ro.sigma_cloud;
    if separation <= 2.0 * band {
        return Err(JumpError::AmbiguousBands {
            separation,
            required: 2.0 * band,
        });
    }
    let unit = axis / separation;
    // coordinate along the axis, ground centre at 0 and excited at `separation`
    let project = |z: Complex64| ((z - ro.center_g) * unit.conj()).re;

    let mut out = Vec::with_capacity(iq.len());
    let Some(first) = iq.first() else {
        return Ok(out);
    };
    let mut state = project(*first) > 0.5 * separation;
    for z in iq {
        let s = project(*z);
        if state && s.abs() <= band {
            state = false;
        } else if !state && (s - separation).abs() <= band {
            state = true;
        }
        out.push(state);
    }
    Ok(out)
}

/// Complete dwells, in samples, as `(ground, excited)`. The first and last
/// runs are cut by the ends of the record and are dropped.
pub fn dwell_lengths(states: &[bool]) -> (Vec<usize>, Vec<usize>) {
    let mut runs: Vec<(bool, usize)> = Vec::new();
    for &s in states {
        match runs.last_mut() {
            Some((state, len)) if *state == s => *len += 1,
            _ => runs.push((s, 1)),
        }
    }
    let mut ground = Vec::new();
    let mut excited = Vec::new();
    if runs.len() > 2 {
        for &(s, len) in &runs[1..runs.len() - 1] {
            if s {
                excited.push(len);
            } else {
                ground.push(len);
            }
        }
    }
    (ground, excited)
}

pub const MIN_DWELLS: usize = 50;
pub const BINS_PER_DECADE: f64 = 20.0;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DwellFit {
    /// Fitted mean dwell (s)
    pub mean: f64,
    pub std_error: f64,
    /// Complete dwells used
    pub count: usize,
    /// Arithmetic mean of the dwells (s)
    pub sample_mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DwellStats {
    /// Mean ground dwell, the time to excite (s)
    pub t_up: DwellFit,
    /// Mean excited dwell, the time to relax (s)
    pub t_down: DwellFit,
    /// `(1/T_up + 1/T_down)⁻¹` (s)
    pub t1: f64,
    /// Fraction of samples assigned to the excited state
    pub p_e: f64,
}

/// Exponential fit to a log-binned histogram of dwell lengths on the
/// sampling lattice. Each bin is represented by its count per lattice value
/// at the time where the exponential takes its bin average; that time and
/// the Poisson weights are refined from the previous fit.
fn fit_dwells(lengths: &[usize], spacing: f64, state: &'static str) -> Result<DwellFit, JumpError> {
    if lengths.len() < MIN_DWELLS {
        return Err(JumpError::InsufficientDwells {
            state,
            found: lengths.len(),
            required: MIN_DWELLS,
        });
    }
    let max_len = *lengths.iter().max().expect("non-empty");
    let mut counts = vec![0usize; max_len + 1];
    for &l in lengths {
        counts[l] += 1;
    }
    // lattice ranges [lo, hi) of each logarithmic bin
    let mut bins: Vec<(usize, usize)> = Vec::new();
    let mut j = 0.0;
    let mut lo = 1usize;
    while lo <= max_len {
        j += 1.0;
        let hi = (10f64.powf(j / BINS_PER_DECADE)).ceil() as usize;
        if hi > lo {
            bins.push((lo, hi.min(max_len + 1)));
            lo = hi;
        }
    }
    let per_value: Vec<f64> = bins
        .iter()
        .map(|&(a, b)| counts[a..b].iter().sum::<usize>() as f64 / (b - a) as f64)
        .collect();

    let sample_mean = lengths.iter().sum::<usize>() as f64 / lengths.len() as f64 * spacing;
    let mut tau = sample_mean;
    let mut model: Option<(f64, f64)> = None;
    let mut fit = None;
    for _ in 0..4 {
        let mut rows = Vec::with_capacity(bins.len());
        for (&(a, b), &y) in bins.iter().zip(&per_value) {
            let m = (b - a) as f64;
            let avg = (a..b).map(|k| (-(k as f64) * spacing / tau).exp()).sum::<f64>() / m;
            let t_star = if avg > 0.0 {
                -tau * avg.ln()
            } else {
                0.5 * (a + b - 1) as f64 * spacing
            };
            let expected = match model {
                Some((amp, c)) => (amp * avg + c).max(0.0),
                None => y,
            };
            rows.push((t_star, y, expected.max(1.0 / m).sqrt() / m.sqrt()));
        }
        let trace = TimeTrace::from_unsorted(&rows)?;
        let f = fit_exponential(&trace)?;
        if !(f.tau.is_finite() && f.tau > 0.0) {
            return Err(JumpError::Fit(FitError::Degenerate(format!(
                "{state} dwell histogram gave time constant {}",
                f.tau
            ))));
        }
        tau = f.tau;
        model = Some((f.amplitude, f.offset));
        fit = Some(f);
    }
    let f = fit.expect("at least one pass");
    Ok(DwellFit {
        mean: f.tau,
        std_error: f.fit.error("T"),
        count: lengths.len(),
        sample_mean,
    })
}

/// Fitted mean dwell times of an assigned record.
pub fn dwell_statistics(states: &[bool], spacing: f64) -> Result<DwellStats, JumpError> {
    if !(spacing > 0.0) {
        return Err(JumpError::InvalidParams("spacing must be positive".into()));
    }
    let (ground, excited) = dwell_lengths(states);
    let t_up = fit_dwells(&ground, spacing, "ground")?;
    let t_down = fit_dwells(&excited, spacing, "excited")?;
    let t1 = 1.0 / (1.0 / t_up.mean + 1.0 / t_down.mean);
    let p_e = states.iter().filter(|s| **s).count() as f64 / states.len() as f64;
    Ok(DwellStats { t_up, t_down, t1, p_e })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IqClusters {
    pub center_g: Complex64,
    pub center_e: Complex64,
    pub sigma_cloud: f64,
    /// Weight of the excited component
    pub p_e: f64,
    pub iterations: usize,
    pub log_likelihood: f64,
}

pub const MIN_CLUSTER_POINTS: usize = 1000;
const EM_MAX_ITER: usize = 100;
const EM_TOL: f64 = 1e-8;

/// Two-component isotropic Gaussian mixture with a shared width, by
/// expectation maximization. The ground component is the heavier one, or
/// the one nearer `ground_hint` when given.
pub fn iq_cluster(points: &[Complex64], ground_hint: Option<Complex64>) -> Result<IqClusters, JumpError> {
    if points.len() < MIN_CLUSTER_POINTS {
        return Err(JumpError::Clustering(format!(
            "{} points, need at least {MIN_CLUSTER_POINTS}",
            points.len()
        )));
    }
    if points.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
        return Err(JumpError::Clustering("non-finite point".into()));
    }
    let n = points.len() as f64;

    // k-means++ seeding on the first block
    let head = &points[..MIN_CLUSTER_POINTS];
    let mut rng = ChaCha8Rng::seed_from_u64(0x1b);
    let c0 = head[rng.random_range(0..head.len())];
    let d2: Vec<f64> = head.iter().map(|z| (z - c0).norm_sqr()).collect();
    let total: f64 = d2.iter().sum();
    if total == 0.0 {
        return Err(JumpError::Clustering("all points coincide".into()));
    }
    let mut pick = rng.random::<f64>() * total;
    let mut c1 = head[head.len() - 1];
    for (z, d) in head.iter().zip(&d2) {
        if pick < *d {
            c1 = *z;
            break;
        }
        pick -= d;
    }
    let mut mu = [c0, c1];
    let mut weight = [0.5_f64, 0.5];
    let mut var = points.iter().map(|z| (z - 0.5 * (c0 + c1)).norm_sqr()).sum::<f64>() / (2.0 * n);

    let mut ll_prev = f64::NEG_INFINITY;
    let mut ll = f64::NEG_INFINITY;
    let mut iterations = 0;
    let mut resp = vec![0.0; points.len()];
    for it in 1..=EM_MAX_ITER {
        iterations = it;
        ll = 0.0;
        for (r, z) in resp.iter_mut().zip(points) {
            let l0 = weight[0].ln() - (z - mu[0]).norm_sqr() / (2.0 * var);
            let l1 = weight[1].ln() - (z - mu[1]).norm_sqr() / (2.0 * var);
            let m = l0.max(l1);
            let lse = m + ((l0 - m).exp() + (l1 - m).exp()).ln();
            *r = (l1 - lse).exp();
            ll += lse - (2.0 * std::f64::consts::PI * var).ln();
        }
        let w1: f64 = resp.iter().sum();
        let w0 = n - w1;
        if w0 < 1.0 || w1 < 1.0 {
            return Err(JumpError::Clustering("one component lost all its points".into()));
        }
        let s1: Complex64 = resp.iter().zip(points).map(|(r, z)| z * r).sum();
        let s0: Complex64 = resp.iter().zip(points).map(|(r, z)| z * (1.0 - r)).sum();
        mu = [s0 / w0, s1 / w1];
        weight = [w0 / n, w1 / n];
        var = resp
            .iter()
            .zip(points)
            .map(|(r, z)| (1.0 - r) * (z - mu[0]).norm_sqr() + r * (z - mu[1]).norm_sqr())
            .sum::<f64>()
            / (2.0 * n);
        if !(var > 0.0) {
            return Err(JumpError::Clustering("zero cloud width".into()));
        }
        if (ll - ll_prev).abs() <= EM_TOL * ll.abs() {
            break;
        }
        ll_prev = ll;
    }
    let sigma = var.sqrt();
    // an equal mixture closer than 2σ has a single mode
    if (mu[1] - mu[0]).norm() < 2.0 * sigma || weight[0].min(weight[1]) < 1e-3 {
        return Err(JumpError::Clustering(format!(
            "no two clusters: centres {:.3} widths apart, weights {:.4}/{:.4}",
            (mu[1] - mu[0]).norm() / sigma,
            weight[0],
            weight[1]
        )));
    }
    let ground = match ground_hint {
        Some(h) => usize::from((mu[1] - h).norm() < (mu[0] - h).norm()),
        None => usize::from(weight[1] > weight[0]),
    };
    let excited = 1 - ground;
    Ok(IqClusters {
        center_g: mu[ground],
        center_e: mu[excited],
        sigma_cloud: sigma,
        p_e: weight[excited],
        iterations,
        log_likelihood: ll,
    })
}

/// Boltzmann temperature (K) of a two-level system with excited population
/// `p_e` and transition frequency `f_q` (Hz).
pub fn effective_temperature(p_e: f64, f_q: f64, consts: &PhysicalConstants) -> Result<f64, JumpError> {
    if !(f_q > 0.0 && f_q.is_finite()) {
        return Err(JumpError::InvalidParams(format!("f_q = {f_q} Hz")));
    }
    if p_e >= 0.5 {
        return Err(JumpError::PopulationInversion { p_e });
    }
    if !(p_e > 0.0) {
        return Err(JumpError::InvalidParams(format!("population {p_e} must be positive")));
    }
    Ok(consts.h * f_q / (consts.k_b * ((1.0 - p_e) / p_e).ln()))
}

/// Excited population `1 / (1 + exp(h f_q / k_B T))`.
pub fn thermal_population(temperature: f64, f_q: f64, consts: &PhysicalConstants) -> Result<f64, JumpError> {
    if !(temperature > 0.0 && f_q > 0.0) {
        return Err(JumpError::InvalidParams(format!("T = {temperature} K, f_q = {f_q} Hz")));
    }
    let x = consts.h * f_q / (consts.k_b * temperature);
    Ok(1.0 / (1.0 + x.exp()))
}
