//! Quantum Rabi model of a spin-½ vortex qubit coupled to a resonator mode.
//!
//! The Hamiltonian is
//!
//! ```text
//! H/h = f_r (a†a + ½) + g (a† + a) σx + ½ (f_q0 ñ + γ B′ n̂′) · σ
//! ```
//!
//! with `B′ = B − B0`, the pseudo-field direction `ñ = (cos θ, 0, sin θ)` and
//! the applied-field direction `n̂′ = (−sin φ sin θ, cos φ, sin φ cos θ)`. The
//! two directions are orthogonal for every (θ, φ), so the bare qubit splitting
//! is always `sqrt(f_q0² + (γ B′)²)`. `(θ, φ) = (π/2, 0)` is the symmetric
//! model (equivalent to `σz·sqrt(B̃² + B′²)` by a rotation about x) and
//! `(π/2, π/2)` the asymmetric one with `−½ γ B′ σx`.
//!
//! Diagonalization is done in the bare product basis `|n⟩ ⊗ {|g⟩, |e⟩}` of
//! the uncoupled problem. A phase choice on `|e⟩` makes that matrix real for
//! every orientation, and eigenvalues are refined with a Rayleigh quotient
//! taken relative to the bare energy of each state's label. That keeps
//! dispersive shifts accurate down to couplings where they are many orders
//! of magnitude below the matrix norm.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::constants::SI;

const ANGLE_TOL: f64 = 1e-12;

/// Truncation changes below this are considered converged (Hz).
pub const CHI_CONVERGENCE_HZ: f64 = 1e3;
/// Default oscillator truncation.
pub const DEFAULT_N_FOCK: usize = 60;
const MAX_DOUBLINGS: usize = 4;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RabiError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("inadmissible field orientation theta = {theta}, phi = {phi}")]
    InvalidOrientation { theta: f64, phi: f64 },
    #[error("ambiguous state labeling at B = {b} T: bare state (n = {n}, {branch:?}) has no unique eigenstate")]
    AmbiguousLabeling {
        b: f64,
        n: usize,
        branch: Branch,
        /// `overlaps[i][j] = |⟨bare j|ψ_i⟩|²` for the labeled eigenstates.
        overlaps: Vec<Vec<f64>>,
    },
    #[error("qubit resonant with resonator (f_q = {f_q} Hz, f_r = {f_r} Hz)")]
    Resonance { f_q: f64, f_r: f64 },
    #[error("dispersive shift not converged: last change {change} Hz at n_fock = {n_fock}")]
    NotConverged { change: f64, n_fock: usize },
}

/// Parameters of one Rabi Hamiltonian family over the applied field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QrmParams {
    /// Resonator frequency (Hz)
    pub f_r: f64,
    /// Coupling g/2π (Hz)
    pub g: f64,
    /// Gyromagnetic ratio (Hz/T)
    pub gamma: f64,
    /// Sweet-spot field (T)
    pub b0: f64,
    /// Qubit frequency at the sweet spot, γ·B̃ (Hz)
    pub f_q0: f64,
    /// Polar angle of the pseudo-field (rad)
    pub theta: f64,
    /// Azimuth of the applied field (rad)
    pub phi: f64,
}

impl QrmParams {
    /// Asymmetric model with the fitted parameters of the reference device:
    /// f_r = 7.572 GHz, g = 92.5 MHz, γ = 20 GHz/mT, B0 = 128 µT, f_q0 = 2 GHz.
    pub fn reference_aqrm() -> Self {
        QrmParams {
            f_r: 7.572e9,
            g: 92.5e6,
            gamma: 20e12,
            b0: 128e-6,
            f_q0: 2e9,
            theta: std::f64::consts::FRAC_PI_2,
            phi: std::f64::consts::FRAC_PI_2,
        }
    }

    /// Same parameters with the symmetric orientation (θ, φ) = (π/2, 0).
    pub fn symmetric(self) -> Self {
        QrmParams {
            theta: std::f64::consts::FRAC_PI_2,
            phi: 0.0,
            ..self
        }
    }

    pub fn asymmetric(self) -> Self {
        QrmParams {
            theta: std::f64::consts::FRAC_PI_2,
            phi: std::f64::consts::FRAC_PI_2,
            ..self
        }
    }

    pub fn with_coupling(self, g: f64) -> Self {
        QrmParams { g, ..self }
    }

    pub fn validate(&self) -> Result<(), RabiError> {
        let finite = [self.f_r, self.g, self.gamma, self.b0, self.f_q0, self.theta, self.phi]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(RabiError::InvalidParams("non-finite parameter".into()));
        }
        if self.f_r <= 0.0 || self.g < 0.0 || self.gamma <= 0.0 || self.f_q0 < 0.0 {
            return Err(RabiError::InvalidParams(format!(
                "need f_r > 0, g >= 0, gamma > 0, f_q0 >= 0 (got f_r = {}, g = {}, gamma = {}, f_q0 = {})",
                self.f_r, self.g, self.gamma, self.f_q0
            )));
        }
        if !orientation_admissible(self.theta, self.phi) {
            return Err(RabiError::InvalidOrientation {
                theta: self.theta,
                phi: self.phi,
            });
        }
        Ok(())
    }

    /// Bare qubit field vector `f_q0 ñ + γ B′ n̂′` in Hz at applied field `b`.
    pub fn spin_field(&self, b: f64) -> [f64; 3] {
        let (st, ct) = self.theta.sin_cos();
        let (sp, cp) = self.phi.sin_cos();
        let bp = self.gamma * (b - self.b0);
        [
            self.f_q0 * ct - bp * sp * st,
            bp * cp,
            self.f_q0 * st + bp * sp * ct,
        ]
    }
}

/// φ = 0 for any θ, or θ ∈ {0, π/2} with φ ∈ [0, π).
pub fn orientation_admissible(theta: f64, phi: f64) -> bool {
    use std::f64::consts::{FRAC_PI_2, PI};
    if phi.abs() <= ANGLE_TOL {
        return true;
    }
    let special = theta.abs() <= ANGLE_TOL || (theta - FRAC_PI_2).abs() <= ANGLE_TOL;
    special && phi >= 0.0 && phi < PI
}

/// Oscillator truncation: Fock states `0..=n_fock`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct HilbertTruncation {
    n_fock: usize,
}

impl HilbertTruncation {
    pub fn new(n_fock: usize) -> Result<Self, RabiError> {
        if n_fock < 2 {
            return Err(RabiError::InvalidParams(format!(
                "n_fock must be at least 2, got {n_fock}"
            )));
        }
        Ok(HilbertTruncation { n_fock })
    }

    pub fn n_fock(&self) -> usize {
        self.n_fock
    }

    pub fn dim(&self) -> usize {
        2 * (self.n_fock + 1)
    }

    pub fn doubled(&self) -> Self {
        HilbertTruncation {
            n_fock: 2 * self.n_fock,
        }
    }
}

impl Default for HilbertTruncation {
    fn default() -> Self {
        HilbertTruncation {
            n_fock: DEFAULT_N_FOCK,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Branch {
    Ground,
    Excited,
}

/// Bare product state `|n⟩ ⊗ |branch⟩`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct BareLabel {
    pub n: usize,
    pub branch: Branch,
}

impl BareLabel {
    fn index(&self) -> usize {
        2 * self.n
            + match self.branch {
                Branch::Ground => 0,
                Branch::Excited => 1,
            }
    }

    fn from_index(i: usize) -> Self {
        BareLabel {
            n: i / 2,
            branch: if i % 2 == 0 { Branch::Ground } else { Branch::Excited },
        }
    }
}

/// Spectrum at one field with bare-state labels.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LabeledSpectrum {
    /// Applied field (T)
    pub b: f64,
    /// All eigenenergies, ascending (J)
    pub energies: Vec<f64>,
    /// Labels of the lowest `n_fock + 1` eigenstates, in energy order.
    pub labels: Vec<BareLabel>,
    /// Largest bare-state weight of each labeled eigenstate.
    pub label_weights: Vec<f64>,
    /// |0,g⟩ → |0,e⟩ transition (Hz)
    pub f_q_dressed: f64,
    /// |0,g⟩ → |1,g⟩ transition (Hz)
    pub f_r_g: f64,
    /// |0,e⟩ → |1,e⟩ transition (Hz)
    pub f_r_e: f64,
    /// `f_r_e − f_r_g`, formed from the level shifts so it carries no
    /// cancellation error from the GHz-scale transition frequencies (Hz)
    pub chi: f64,
}

impl LabeledSpectrum {
    /// Dispersive shift `f_r_e − f_r_g` (Hz).
    pub fn chi(&self) -> f64 {
        self.chi
    }

    /// Energy of the eigenstate carrying `label`, if it is in the labeled window.
    pub fn energy_of(&self, label: BareLabel) -> Option<f64> {
        self.labels
            .iter()
            .position(|l| *l == label)
            .map(|i| self.energies[i])
    }
}

/// Hamiltonian (J) in the basis `|n⟩ ⊗ {|↑⟩, |↓⟩}` (σz eigenstates), index `2n + s`.
pub fn build_hamiltonian(
    params: &QrmParams,
    b: f64,
    trunc: HilbertTruncation,
) -> Result<DMatrix<Complex64>, RabiError> {
    params.validate()?;
    if !b.is_finite() {
        return Err(RabiError::InvalidParams(format!("non-finite field {b}")));
    }
    let dim = trunc.dim();
    let [bx, by, bz] = params.spin_field(b);
    // ½ b·σ in the (↑, ↓) basis
    let spin = [
        [Complex64::new(0.5 * bz, 0.0), Complex64::new(0.5 * bx, -0.5 * by)],
        [Complex64::new(0.5 * bx, 0.5 * by), Complex64::new(-0.5 * bz, 0.0)],
    ];
    let mut h = DMatrix::<Complex64>::zeros(dim, dim);
    for n in 0..=trunc.n_fock {
        let osc = params.f_r * (n as f64 + 0.5);
        for s in 0..2 {
            for t in 0..2 {
                h[(2 * n + s, 2 * n + t)] += spin[s][t];
            }
            h[(2 * n + s, 2 * n + s)] += Complex64::new(osc, 0.0);
        }
        if n < trunc.n_fock {
            let c = params.g * ((n + 1) as f64).sqrt();
            // σx swaps ↑ and ↓
            for s in 0..2 {
                let i = 2 * n + s;
                let j = 2 * (n + 1) + (1 - s);
                h[(i, j)] = Complex64::new(c, 0.0);
                h[(j, i)] = Complex64::new(c, 0.0);
            }
        }
    }
    Ok(h * Complex64::new(SI.h, 0.0))
}

/// Bare-frame description: diagonal energies and the real symmetric matrix (Hz).
struct BareFrame {
    diag: Vec<f64>,
    h: DMatrix<f64>,
}

/// Spin eigenbasis (columns |g⟩, |e⟩ in σz components) with |e⟩ phased so
/// that ⟨g|σx|e⟩ is real and non-negative.
fn spin_basis(field: [f64; 3]) -> ([[Complex64; 2]; 2], f64) {
    let [bx, by, bz] = field;
    let norm = (bx * bx + by * by + bz * bz).sqrt();
    let (alpha, beta) = if norm == 0.0 {
        (0.0, 0.0)
    } else {
        ((bx * bx + by * by).sqrt().atan2(bz), by.atan2(bx))
    };
    let (sa, ca) = (0.5 * alpha).sin_cos();
    let phase = Complex64::from_polar(1.0, beta);
    // |+n⟩ = (cos α/2, e^{iβ} sin α/2), |−n⟩ = (−e^{−iβ} sin α/2, cos α/2)
    let g = [-phase.conj() * sa, Complex64::new(ca, 0.0)];
    let mut e = [Complex64::new(ca, 0.0), phase * sa];
    let c_ge = g[0].conj() * e[1] + g[1].conj() * e[0];
    if c_ge.norm() > 0.0 {
        let fix = c_ge.conj() / c_ge.norm();
        e = [e[0] * fix, e[1] * fix];
    }
    ([g, e], norm)
}

fn bare_frame(params: &QrmParams, b: f64, trunc: HilbertTruncation) -> BareFrame {
    let field = params.spin_field(b);
    let ([g, e], fq) = spin_basis(field);
    let basis = [g, e];
    // C = R† σx R, real after the phase choice
    let mut c = [[0.0; 2]; 2];
    for s in 0..2 {
        for t in 0..2 {
            let u = basis[s];
            let v = basis[t];
            c[s][t] = (u[0].conj() * v[1] + u[1].conj() * v[0]).re;
        }
    }
    let dim = trunc.dim();
    let mut diag = vec![0.0; dim];
    for n in 0..=trunc.n_fock {
        let osc = params.f_r * (n as f64 + 0.5);
        diag[2 * n] = osc - 0.5 * fq;
        diag[2 * n + 1] = osc + 0.5 * fq;
    }
    let mut h = DMatrix::<f64>::from_diagonal(&nalgebra::DVector::from_vec(diag.clone()));
    for n in 0..trunc.n_fock {
        let amp = params.g * ((n + 1) as f64).sqrt();
        for s in 0..2 {
            for t in 0..2 {
                let i = 2 * n + s;
                let j = 2 * (n + 1) + t;
                let v = amp * c[s][t];
                h[(i, j)] = v;
                h[(j, i)] = v;
            }
        }
    }
    BareFrame { diag, h }
}

/// Eigen-decomposition sorted ascending. Columns of the returned matrix are
/// eigenvectors in the bare basis.
fn sorted_eigen(h: DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let eig = SymmetricEigen::new(h);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let vals = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vecs = DMatrix::from_fn(eig.eigenvectors.nrows(), order.len(), |r, c| {
        eig.eigenvectors[(r, order[c])]
    });
    (vals, vecs)
}

/// Rayleigh quotient of `h − D_ref` for column `k` of `vecs`: the level
/// shift relative to the bare energy of `reference`.
fn level_shift(frame: &BareFrame, vecs: &DMatrix<f64>, k: usize, reference: usize) -> f64 {
    let dim = frame.diag.len();
    let d0 = frame.diag[reference];
    let mut num = 0.0;
    let mut norm = 0.0;
    for i in 0..dim {
        let vi = vecs[(i, k)];
        norm += vi * vi;
        if vi == 0.0 {
            continue;
        }
        num += vi * vi * (frame.h[(i, i)] - d0);
        // banded: couplings only to the neighbouring Fock level
        let lo = (i / 2).saturating_sub(1) * 2;
        let hi = ((i / 2 + 2) * 2).min(dim);
        for j in lo..hi {
            if j != i {
                num += vi * frame.h[(i, j)] * vecs[(j, k)];
            }
        }
    }
    num / norm
}

fn refined_energy(frame: &BareFrame, vecs: &DMatrix<f64>, k: usize, reference: usize) -> f64 {
    frame.diag[reference] + level_shift(frame, vecs, k, reference)
}

fn argmax_label(vecs: &DMatrix<f64>, k: usize) -> (usize, f64) {
    let mut best = 0;
    let mut best_w = -1.0;
    for i in 0..vecs.nrows() {
        let w = vecs[(i, k)] * vecs[(i, k)];
        // strict improvement beyond rounding; ties keep the lower photon number
        if w > best_w * (1.0 + 1e-12) + 1e-300 {
            best = i;
            best_w = w;
        }
    }
    (best, best_w)
}

/// Eigenenergies (J), ascending, without labeling.
pub fn eigenenergies(
    params: &QrmParams,
    b: f64,
    trunc: HilbertTruncation,
) -> Result<Vec<f64>, RabiError> {
    params.validate()?;
    if !b.is_finite() {
        return Err(RabiError::InvalidParams(format!("non-finite field {b}")));
    }
    let frame = bare_frame(params, b, trunc);
    let (vals, vecs) = sorted_eigen(frame.h.clone());
    Ok((0..vals.len())
        .map(|k| {
            let (lab, _) = argmax_label(&vecs, k);
            SI.h * refined_energy(&frame, &vecs, k, lab)
        })
        .collect())
}

pub fn solve_qrm(
    params: &QrmParams,
    b: f64,
    trunc: HilbertTruncation,
) -> Result<LabeledSpectrum, RabiError> {
    params.validate()?;
    if !b.is_finite() {
        return Err(RabiError::InvalidParams(format!("non-finite field {b}")));
    }
    let frame = bare_frame(params, b, trunc);
    let (vals, vecs) = sorted_eigen(frame.h.clone());
    let dim = vals.len();
    let window = trunc.n_fock + 1;

    let overlap_matrix = || -> Vec<Vec<f64>> {
        (0..window)
            .map(|i| (0..dim).map(|j| vecs[(j, i)] * vecs[(j, i)]).collect())
            .collect()
    };
    let mut labels = Vec::with_capacity(window);
    let mut weights = Vec::with_capacity(window);
    let mut owner = vec![usize::MAX; dim];
    for k in 0..window {
        let (lab, w) = argmax_label(&vecs, k);
        if owner[lab] != usize::MAX {
            let bl = BareLabel::from_index(lab);
            return Err(RabiError::AmbiguousLabeling {
                b,
                n: bl.n,
                branch: bl.branch,
                overlaps: overlap_matrix(),
            });
        }
        owner[lab] = k;
        labels.push(BareLabel::from_index(lab));
        weights.push(w);
    }

    let shift_of = |label: BareLabel| -> Result<f64, RabiError> {
        let k = owner[label.index()];
        if k == usize::MAX {
            return Err(RabiError::InvalidParams(format!(
                "bare state (n = {}, {:?}) outside the labeled window; increase n_fock",
                label.n, label.branch
            )));
        }
        // a hybridized state has no meaningful label even without a collision
        let runner_up = (0..dim)
            .filter(|&j| j != label.index())
            .map(|j| vecs[(j, k)] * vecs[(j, k)])
            .fold(0.0, f64::max);
        if weights[k] < 2.0 * runner_up {
            return Err(RabiError::AmbiguousLabeling {
                b,
                n: label.n,
                branch: label.branch,
                overlaps: overlap_matrix(),
            });
        }
        Ok(level_shift(&frame, &vecs, k, label.index()))
    };
    let s0g = shift_of(BareLabel { n: 0, branch: Branch::Ground })?;
    let s0e = shift_of(BareLabel { n: 0, branch: Branch::Excited })?;
    let s1g = shift_of(BareLabel { n: 1, branch: Branch::Ground })?;
    let s1e = shift_of(BareLabel { n: 1, branch: Branch::Excited })?;

    let mut energies: Vec<f64> = (0..dim)
        .map(|k| {
            let lab = if k < window {
                labels[k].index()
            } else {
                argmax_label(&vecs, k).0
            };
            SI.h * refined_energy(&frame, &vecs, k, lab)
        })
        .collect();
    // refinement can reorder an almost degenerate pair
    energies.sort_by(f64::total_cmp);

    let f_q = qubit_frequency(params, b);
    Ok(LabeledSpectrum {
        b,
        energies,
        labels,
        label_weights: weights,
        f_q_dressed: f_q + (s0e - s0g),
        f_r_g: params.f_r + (s1g - s0g),
        f_r_e: params.f_r + (s1e - s0e),
        chi: (s1e - s0e) - (s1g - s0g),
    })
}

/// Bare (uncoupled) qubit frequency `sqrt(f_q0² + (γ(B − B0))²)` (Hz).
pub fn qubit_frequency(params: &QrmParams, b: f64) -> f64 {
    params.f_q0.hypot(params.gamma * (b - params.b0))
}

/// Dispersive shift at a fixed truncation (Hz).
pub fn dispersive_shift_at(
    params: &QrmParams,
    b: f64,
    trunc: HilbertTruncation,
) -> Result<f64, RabiError> {
    Ok(solve_qrm(params, b, trunc)?.chi())
}

/// Dispersive shift with automatic truncation doubling until the value
/// changes by less than [`CHI_CONVERGENCE_HZ`].
pub fn dispersive_shift(
    params: &QrmParams,
    b: f64,
    trunc: HilbertTruncation,
) -> Result<f64, RabiError> {
    let mut t = trunc;
    let mut chi = dispersive_shift_at(params, b, t)?;
    for _ in 0..MAX_DOUBLINGS {
        let next = t.doubled();
        let chi_next = dispersive_shift_at(params, b, next)?;
        let change = (chi_next - chi).abs();
        if change < CHI_CONVERGENCE_HZ {
            return Ok(chi_next);
        }
        t = next;
        chi = chi_next;
        if t.n_fock >= DEFAULT_N_FOCK << MAX_DOUBLINGS {
            return Err(RabiError::NotConverged {
                change,
                n_fock: t.n_fock,
            });
        }
    }
    Err(RabiError::NotConverged {
        change: f64::NAN,
        n_fock: t.n_fock,
    })
}

/// Transverse coupling `g·sqrt(1 − n_x²)` where `n` is the qubit quantization axis.
pub fn transverse_coupling(params: &QrmParams, b: f64) -> f64 {
    let [bx, by, bz] = params.spin_field(b);
    let norm = (bx * bx + by * by + bz * bz).sqrt();
    if norm == 0.0 {
        return params.g;
    }
    let nx = bx / norm;
    params.g * (1.0 - nx * nx).max(0.0).sqrt()
}

/// Second-order dispersive shift including the counter-rotating term:
/// `2 g⊥² (1/(f_q − f_r) + 1/(f_q + f_r))` (Hz).
pub fn chi_perturbative(params: &QrmParams, b: f64) -> Result<f64, RabiError> {
    params.validate()?;
    let f_q = qubit_frequency(params, b);
    let detuning = f_q - params.f_r;
    if detuning.abs() <= 1e-9 * params.f_r {
        return Err(RabiError::Resonance { f_q, f_r: params.f_r });
    }
    let gp = transverse_coupling(params, b);
    Ok(2.0 * gp * gp * (1.0 / detuning + 1.0 / (f_q + params.f_r)))
}

/// Independent `solve_qrm` at every field; output order matches input order.
pub fn sweep_field(
    params: &QrmParams,
    fields: &[f64],
    trunc: HilbertTruncation,
) -> Vec<Result<LabeledSpectrum, RabiError>> {
    fields
        .par_iter()
        .map(|&b| solve_qrm(params, b, trunc))
        .collect()
}

/// Ground-state transitions to the qubit-like and resonator-like states.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BranchTransitions {
    /// To the eigenstate with the largest |0,e⟩ weight (Hz)
    pub qubit_like: f64,
    /// To the eigenstate other than the above with the largest |1,g⟩ weight (Hz)
    pub resonator_like: f64,
    /// The two lowest excitation energies above the ground state (Hz)
    pub lowest: [f64; 2],
}

/// Branch assignment that never fails: used where crossings must be followed
/// through resonance (spectrum fits, gap scans).
pub fn branch_transitions(
    params: &QrmParams,
    b: f64,
    trunc: HilbertTruncation,
) -> Result<BranchTransitions, RabiError> {
    params.validate()?;
    if !b.is_finite() {
        return Err(RabiError::InvalidParams(format!("non-finite field {b}")));
    }
    let frame = bare_frame(params, b, trunc);
    let (vals, vecs) = sorted_eigen(frame.h.clone());
    let i0e = BareLabel { n: 0, branch: Branch::Excited }.index();
    let i1g = BareLabel { n: 1, branch: Branch::Ground }.index();
    let weight = |row: usize, k: usize| vecs[(row, k)] * vecs[(row, k)];
    let ground = 0;
    let mut q = 1;
    for k in 1..vals.len() {
        if weight(i0e, k) > weight(i0e, q) {
            q = k;
        }
    }
    let mut r = if q == 1 { 2 } else { 1 };
    for k in 1..vals.len() {
        if k != q && weight(i1g, k) > weight(i1g, r) {
            r = k;
        }
    }
    let e = |k: usize| {
        let (lab, _) = argmax_label(&vecs, k);
        refined_energy(&frame, &vecs, k, lab)
    };
    let e0 = e(ground);
    Ok(BranchTransitions {
        qubit_like: e(q) - e0,
        resonator_like: e(r) - e0,
        lowest: [e(1) - e0, e(2) - e0],
    })
}
