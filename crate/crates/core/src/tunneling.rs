//! Pinned-vortex Schrödinger problem.
//!
//! The Hamiltonian is solved in units of `ħΩ` with lengths in units of the
//! zero-point length:
//!
//! ```text
//! H / ħΩ = −y_zpf² ∇² + V / ħΩ
//! ```
//!
//! on a uniform grid with Dirichlet walls, using the three-point (five-point
//! in 2D) Laplacian.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::constants::SI;
use crate::energetics::{signed_well_asymmetry, EnergeticsError, Landscape, PinningSite};
use crate::lanczos::{dense_eigenpairs, lowest_eigenpairs, BandedSymmetric, LanczosError, LanczosOptions};

pub const MIN_POINTS: usize = 64;
pub const MAX_LEVELS: usize = 10;
/// Margin, in site widths, the grid must leave around every pinning site.
pub const SITE_MARGIN: f64 = 5.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TunnelError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("potential has {got} samples, grid has {expected}")]
    PotentialSize { got: usize, expected: usize },
    #[error("requested {0} levels, at most {MAX_LEVELS} supported")]
    TooManyLevels(usize),
    #[error("eigensolver failed: {0}")]
    Solver(#[from] LanczosError),
    #[error(transparent)]
    Energetics(#[from] EnergeticsError),
    #[error("two-level reduction invalid: third level is only {ratio:.3} splittings above the second (need 3)")]
    ReductionInvalid { ratio: f64 },
    #[error("{0}")]
    InvalidInput(String),
}

/// Uniform axis between two Dirichlet walls; the walls themselves carry no
/// sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Axis {
    /// m
    pub min: f64,
    /// m
    pub max: f64,
    pub points: usize,
}

impl Axis {
    pub fn new(min: f64, max: f64, points: usize) -> Result<Self, TunnelError> {
        if !(min.is_finite() && max.is_finite() && max > min) {
            return Err(TunnelError::InvalidGrid(format!("empty extent [{min}, {max}]")));
        }
        if points < MIN_POINTS {
            return Err(TunnelError::InvalidGrid(format!(
                "{points} points per axis, need at least {MIN_POINTS}"
            )));
        }
        Ok(Axis { min, max, points })
    }

    pub fn spacing(&self) -> f64 {
        (self.max - self.min) / (self.points + 1) as f64
    }

    pub fn coordinate(&self, i: usize) -> f64 {
        self.min + (i + 1) as f64 * self.spacing()
    }

    pub fn coordinates(&self) -> Vec<f64> {
        (0..self.points).map(|i| self.coordinate(i)).collect()
    }

    fn covers(&self, centre: f64, margin: f64) -> bool {
        self.min <= centre - margin && self.max >= centre + margin
    }
}

/// Samples are stored with `y` varying fastest.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Grid {
    /// Along the strip width at fixed `y` (m).
    Line { x: Axis, y: f64 },
    Plane { x: Axis, y: Axis },
}

impl Grid {
    pub fn line(x_min: f64, x_max: f64, points: usize, y: f64) -> Result<Self, TunnelError> {
        Ok(Grid::Line {
            x: Axis::new(x_min, x_max, points)?,
            y,
        })
    }

    pub fn plane(x: Axis, y: Axis) -> Self {
        Grid::Plane { x, y }
    }

    pub fn dimension(&self) -> usize {
        match self {
            Grid::Line { .. } => 1,
            Grid::Plane { .. } => 2,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Grid::Line { x, .. } => x.points,
            Grid::Plane { x, y } => x.points * y.points,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn x_axis(&self) -> &Axis {
        match self {
            Grid::Line { x, .. } | Grid::Plane { x, .. } => x,
        }
    }

    /// Volume element of the grid inner product.
    pub fn cell(&self) -> f64 {
        match self {
            Grid::Line { x, .. } => x.spacing(),
            Grid::Plane { x, y } => x.spacing() * y.spacing(),
        }
    }

    /// `(x, y)` of every sample in storage order.
    pub fn points(&self) -> Vec<(f64, f64)> {
        match self {
            Grid::Line { x, y } => x.coordinates().into_iter().map(|xi| (xi, *y)).collect(),
            Grid::Plane { x, y } => {
                let ys = y.coordinates();
                x.coordinates()
                    .into_iter()
                    .flat_map(|xi| ys.iter().map(move |&yj| (xi, yj)))
                    .collect()
            }
        }
    }

    /// Index of the sample mirrored through the grid centre.
    pub fn mirror_index(&self, i: usize) -> usize {
        self.len() - 1 - i
    }

    /// Checks that every site lies at least five widths inside the walls.
    pub fn check_covers(&self, sites: &[PinningSite]) -> Result<(), TunnelError> {
        for s in sites {
            let margin = SITE_MARGIN * s.sigma;
            let ok = match self {
                Grid::Line { x, .. } => x.covers(s.x, margin),
                Grid::Plane { x, y } => x.covers(s.x, margin) && y.covers(s.y, margin),
            };
            if !ok {
                return Err(TunnelError::InvalidGrid(format!(
                    "site at ({:.3e}, {:.3e}) m is closer than {SITE_MARGIN} widths to a wall",
                    s.x, s.y
                )));
            }
        }
        Ok(())
    }
}

/// Scales of the pinned vortex. Only `ħ²/2m_v = ħΩ·y_zpf²` enters the
/// kinetic term; `Ω` also sets the energy unit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TunnelModel {
    /// m
    pub y_zpf: f64,
    /// rad/s
    pub omega: f64,
    /// kg
    pub m_v: Option<f64>,
}

impl TunnelModel {
    pub fn new(y_zpf: f64, omega: f64) -> Result<Self, TunnelError> {
        let m = TunnelModel { y_zpf, omega, m_v: None };
        m.validate()?;
        Ok(m)
    }

    /// `y_zpf = sqrt(ħ / 2 m_v Ω)`.
    pub fn from_mass(m_v: f64, omega: f64) -> Result<Self, TunnelError> {
        if !(m_v > 0.0 && omega > 0.0) {
            return Err(TunnelError::InvalidModel("mass and frequency must be positive".into()));
        }
        let m = TunnelModel {
            y_zpf: (SI.hbar / (2.0 * m_v * omega)).sqrt(),
            omega,
            m_v: Some(m_v),
        };
        m.validate()?;
        Ok(m)
    }

    /// Matches the curvature of a Lorentzian site at its bottom,
    /// `ħΩ = 4 V y_zpf² / σ²`.
    pub fn from_pinning(site: &PinningSite, y_zpf: f64) -> Result<Self, TunnelError> {
        if !(site.depth > 0.0 && site.sigma > 0.0) {
            return Err(TunnelError::InvalidModel("site depth and width must be positive".into()));
        }
        let energy = 4.0 * site.depth * y_zpf * y_zpf / (site.sigma * site.sigma);
        Self::new(y_zpf, energy / SI.hbar)
    }

    pub fn validate(&self) -> Result<(), TunnelError> {
        if !(self.y_zpf > 0.0 && self.y_zpf.is_finite()) {
            return Err(TunnelError::InvalidModel(format!("y_zpf = {} must be positive", self.y_zpf)));
        }
        if !(self.omega > 0.0 && self.omega.is_finite()) {
            return Err(TunnelError::InvalidModel(format!("Omega = {} must be positive", self.omega)));
        }
        if let Some(m) = self.m_v {
            let y = (SI.hbar / (2.0 * m * self.omega)).sqrt();
            if !((y / self.y_zpf - 1.0).abs() <= 1e-6) {
                return Err(TunnelError::InvalidModel(format!(
                    "mass {m} kg implies y_zpf = {y} m, model has {} m",
                    self.y_zpf
                )));
            }
        }
        Ok(())
    }

    /// `ħΩ` (J)
    pub fn energy_unit(&self) -> f64 {
        SI.hbar * self.omega
    }
}

/// Lowest eigenpairs of the pinned-vortex Hamiltonian.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EigenResult {
    /// Ascending (J)
    pub energies: Vec<f64>,
    /// Normalized so that `Σ |ψ|² · cell = 1`.
    pub wavefunctions: Vec<Vec<f64>>,
    /// Residual norms `‖Hψ − Eψ‖` in units of ħΩ.
    pub residuals: Vec<f64>,
    /// Applied field (T), when the potential came from a landscape.
    pub field: Option<f64>,
}

impl EigenResult {
    /// `E1 − E0` (J)
    pub fn splitting(&self) -> f64 {
        self.energies[1] - self.energies[0]
    }

    /// `(E1 − E0)/ħ` (rad/s)
    pub fn omega_q(&self) -> f64 {
        self.splitting() / SI.hbar
    }

    /// `⟨ψ_k | P | ψ_k⟩` for the reflection through the grid centre.
    pub fn parity(&self, k: usize, grid: &Grid) -> f64 {
        let psi = &self.wavefunctions[k];
        psi.iter()
            .enumerate()
            .map(|(i, v)| v * psi[grid.mirror_index(i)])
            .sum::<f64>()
            * grid.cell()
    }

    /// Grid inner product of two wavefunctions.
    pub fn overlap(&self, a: usize, b: usize, grid: &Grid) -> f64 {
        self.wavefunctions[a]
            .iter()
            .zip(&self.wavefunctions[b])
            .map(|(x, y)| x * y)
            .sum::<f64>()
            * grid.cell()
    }
}

fn hamiltonian(grid: &Grid, potential: &[f64], model: &TunnelModel) -> Result<BandedSymmetric, TunnelError> {
    model.validate()?;
    if potential.len() != grid.len() {
        return Err(TunnelError::PotentialSize {
            got: potential.len(),
            expected: grid.len(),
        });
    }
    if let Some(v) = potential.iter().find(|v| !v.is_finite()) {
        return Err(TunnelError::InvalidInput(format!("non-finite potential sample {v}")));
    }
    let unit = model.energy_unit();
    let y2 = model.y_zpf * model.y_zpf;
    let h = match grid {
        Grid::Line { x, .. } => {
            let c = y2 / x.spacing().powi(2);
            let mut h = BandedSymmetric::zeros(x.points, 1);
            for i in 0..x.points {
                h.set(i, i, 2.0 * c + potential[i] / unit);
                if i > 0 {
                    h.set(i, i - 1, -c);
                }
            }
            h
        }
        Grid::Plane { x, y } => {
            let (nx, ny) = (x.points, y.points);
            let cx = y2 / x.spacing().powi(2);
            let cy = y2 / y.spacing().powi(2);
            let mut h = BandedSymmetric::zeros(nx * ny, ny);
            for i in 0..nx {
                for j in 0..ny {
                    let k = i * ny + j;
                    h.set(k, k, 2.0 * (cx + cy) + potential[k] / unit);
                    if j > 0 {
                        h.set(k, k - 1, -cy);
                    }
                    if i > 0 {
                        h.set(k, k - ny, -cx);
                    }
                }
            }
            h
        }
    };
    Ok(h)
}

fn package(
    grid: &Grid,
    model: &TunnelModel,
    values: Vec<f64>,
    vectors: Vec<Vec<f64>>,
    residuals: Vec<f64>,
) -> EigenResult {
    let unit = model.energy_unit();
    let scale = 1.0 / grid.cell().sqrt();
    let wavefunctions = vectors
        .into_iter()
        .map(|mut v| {
            // fix the sign so results are reproducible
            let pivot = v.iter().copied().max_by(|a, b| a.abs().total_cmp(&b.abs())).unwrap_or(1.0);
            let s = if pivot < 0.0 { -scale } else { scale };
            v.iter_mut().for_each(|x| *x *= s);
            v
        })
        .collect();
    EigenResult {
        energies: values.into_iter().map(|e| e * unit).collect(),
        wavefunctions,
        residuals,
        field: None,
    }
}

/// Lowest `k` eigenpairs by shift-invert Lanczos.
pub fn solve_schrodinger(
    grid: &Grid,
    potential: &[f64],
    model: &TunnelModel,
    k: usize,
) -> Result<EigenResult, TunnelError> {
    if k == 0 || k > MAX_LEVELS {
        return Err(TunnelError::TooManyLevels(k));
    }
    let h = hamiltonian(grid, potential, model)?;
    // the kinetic term is non-negative, so this shift lies below the spectrum
    let floor = potential.iter().copied().fold(f64::INFINITY, f64::min) / model.energy_unit();
    let eig = lowest_eigenpairs(&h, k, floor - 1.0, LanczosOptions::default())?;
    Ok(package(grid, model, eig.values, eig.vectors, eig.residuals))
}

/// Same problem by full dense diagonalization. Intended as a reference on
/// small grids.
pub fn solve_schrodinger_dense(
    grid: &Grid,
    potential: &[f64],
    model: &TunnelModel,
    k: usize,
) -> Result<EigenResult, TunnelError> {
    if k == 0 || k > grid.len() {
        return Err(TunnelError::TooManyLevels(k));
    }
    let h = hamiltonian(grid, potential, model)?;
    let (values, vectors) = dense_eigenpairs(&h);
    Ok(package(
        grid,
        model,
        values[..k].to_vec(),
        vectors[..k].to_vec(),
        vec![0.0; k],
    ))
}

/// Samples the landscape on the grid and solves at field `b`.
pub fn solve_at_field(
    landscape: &Landscape,
    grid: &Grid,
    model: &TunnelModel,
    b: f64,
    k: usize,
) -> Result<EigenResult, TunnelError> {
    let potential = grid
        .points()
        .iter()
        .map(|&(x, y)| landscape.potential(x, y, b))
        .collect::<Result<Vec<f64>, _>>()?;
    let mut r = solve_schrodinger(grid, &potential, model, k)?;
    r.field = Some(b);
    Ok(r)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FieldPoint {
    /// T
    pub b: f64,
    /// rad/s
    pub omega_q: f64,
    /// J
    pub e0: f64,
    /// J
    pub e1: f64,
}

impl FieldPoint {
    fn from_result(b: f64, r: &EigenResult) -> Self {
        FieldPoint {
            b,
            omega_q: r.omega_q(),
            e0: r.energies[0],
            e1: r.energies[1],
        }
    }

    /// Hz
    pub fn f_q(&self) -> f64 {
        self.omega_q / (2.0 * PI)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FieldSpectrum {
    /// In the order of the requested fields.
    pub points: Vec<FieldPoint>,
    /// Point of lowest qubit frequency among `points`.
    pub sweet_spot: FieldPoint,
}

/// Qubit frequency `(E1 − E0)/ħ` at every field, solved in parallel.
pub fn spectrum_vs_field(
    landscape: &Landscape,
    grid: &Grid,
    model: &TunnelModel,
    fields: &[f64],
) -> Result<FieldSpectrum, TunnelError> {
    if fields.is_empty() {
        return Err(TunnelError::InvalidInput("empty field list".into()));
    }
    grid.check_covers(&landscape.sites)?;
    let points = fields
        .par_iter()
        .map(|&b| solve_at_field(landscape, grid, model, b, 2).map(|r| FieldPoint::from_result(b, &r)))
        .collect::<Result<Vec<_>, _>>()?;
    let sweet_spot = *points
        .iter()
        .min_by(|a, b| a.omega_q.total_cmp(&b.omega_q))
        .expect("non-empty");
    Ok(FieldSpectrum { points, sweet_spot })
}

/// Golden-section search for the field of minimal splitting inside
/// `[lo, hi]`. Returns the solution at that field with three levels.
pub fn find_sweet_spot(
    landscape: &Landscape,
    grid: &Grid,
    model: &TunnelModel,
    lo: f64,
    hi: f64,
    field_tol: f64,
) -> Result<EigenResult, TunnelError> {
    if !(hi > lo && field_tol > 0.0) {
        return Err(TunnelError::InvalidInput(format!("bad bracket [{lo}, {hi}] or tolerance {field_tol}")));
    }
    grid.check_covers(&landscape.sites)?;
    let split = |b: f64| solve_at_field(landscape, grid, model, b, 2).map(|r| r.splitting());
    let ratio = (5.0_f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut d) = (lo, hi);
    let mut b = d - ratio * (d - a);
    let mut c = a + ratio * (d - a);
    let (mut fb, mut fc) = (split(b)?, split(c)?);
    while d - a > field_tol {
        if fb <= fc {
            d = c;
            c = b;
            fc = fb;
            b = d - ratio * (d - a);
            fb = split(b)?;
        } else {
            a = b;
            b = c;
            fb = fc;
            c = a + ratio * (d - a);
            fc = split(c)?;
        }
    }
    solve_at_field(landscape, grid, model, 0.5 * (a + d), 3)
}

/// Centre and separation of a two-site double well.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DoubleWell {
    /// m
    pub x_bar: f64,
    /// m
    pub delta_lr: f64,
}

impl DoubleWell {
    pub fn from_sites(sites: &[PinningSite]) -> Result<Self, TunnelError> {
        let [a, b] = sites else {
            return Err(TunnelError::InvalidInput(format!(
                "a double well needs exactly two sites, got {}",
                sites.len()
            )));
        };
        Ok(DoubleWell {
            x_bar: 0.5 * (a.x + b.x),
            delta_lr: (a.x - b.x).abs(),
        })
    }
}

/// `ħω_q = sqrt(4Δ² + ε(B)²)` with `ε` affine in the field and zero at the
/// sweet spot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TwoLevel {
    /// Tunnelling amplitude Δ (J)
    pub delta: f64,
    /// Field where ε = 0 (T)
    pub b_sweet: f64,
    /// `dε/dB` (J/T)
    pub slope: f64,
}

impl TwoLevel {
    /// J
    pub fn epsilon(&self, b: f64) -> f64 {
        self.slope * (b - self.b_sweet)
    }

    /// J
    pub fn energy_gap(&self, b: f64) -> f64 {
        (2.0 * self.delta).hypot(self.epsilon(b))
    }

    /// rad/s
    pub fn omega_q(&self, b: f64) -> f64 {
        self.energy_gap(b) / SI.hbar
    }
}

/// Reduces the solution at the sweet spot to a two-level system. The
/// asymmetry slope comes from the Gibbs energy difference between the two
/// sites; its zero is placed at the solver's sweet spot.
pub fn two_level_reduction(
    at_sweet_spot: &EigenResult,
    well: &DoubleWell,
    landscape: &Landscape,
) -> Result<TwoLevel, TunnelError> {
    let e = &at_sweet_spot.energies;
    if e.len() < 3 {
        return Err(TunnelError::InvalidInput("reduction needs the three lowest levels".into()));
    }
    let b_sweet = at_sweet_spot
        .field
        .ok_or_else(|| TunnelError::InvalidInput("eigen result carries no field".into()))?;
    let split = e[1] - e[0];
    let ratio = (e[2] - e[1]) / split;
    if !(ratio >= 3.0) {
        return Err(TunnelError::ReductionInvalid { ratio });
    }
    let asym = |b: f64| {
        signed_well_asymmetry(
            well.x_bar,
            well.delta_lr,
            b,
            landscape.vortex_density,
            &landscape.scales,
            &landscape.device,
        )
    };
    let db = 1e-3;
    let slope = (asym(b_sweet + db)? - asym(b_sweet - db)?) / (2.0 * db);
    Ok(TwoLevel {
        delta: 0.5 * split,
        b_sweet,
        slope,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::device::{derive_scales, DeviceModel};
    use crate::energetics::degenerate_depths;

    fn unit_model() -> TunnelModel {
        TunnelModel::new(1e-9, 1e11).unwrap()
    }

    fn harmonic(grid: &Grid, m: &TunnelModel) -> Vec<f64> {
        let centre = 0.5 * (grid.x_axis().min + grid.x_axis().max);
        grid.points()
            .iter()
            .map(|&(x, _)| m.energy_unit() * ((x - centre) / m.y_zpf).powi(2) / 4.0)
            .collect()
    }

    /// Quartic double well in units of y_zpf: `h (u² − a²)² / a⁴` plus tilt.
    fn quartic(grid: &Grid, m: &TunnelModel, barrier: f64, a: f64, tilt: f64) -> Vec<f64> {
        let centre = 0.5 * (grid.x_axis().min + grid.x_axis().max);
        grid.points()
            .iter()
            .map(|&(x, _)| {
                let u = (x - centre) / m.y_zpf;
                m.energy_unit() * (barrier * (u * u - a * a).powi(2) / a.powi(4) + tilt * u / a)
            })
            .collect()
    }

    #[test]
    fn harmonic_levels() {
        let m = unit_model();
        let grid = Grid::line(-12e-9, 12e-9, 1024, 0.0).unwrap();
        let r = solve_schrodinger(&grid, &harmonic(&grid, &m), &m, 4).unwrap();
        for (n, e) in r.energies.iter().enumerate() {
            let exact = (n as f64 + 0.5) * m.energy_unit();
            assert!((e / exact - 1.0).abs() < 1e-4, "level {n}: {e} vs {exact}");
        }
        for a in 0..4 {
            for b in 0..4 {
                let want = if a == b { 1.0 } else { 0.0 };
                assert!((r.overlap(a, b, &grid) - want).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn harmonic_grid_refinement() {
        let m = unit_model();
        let coarse = Grid::line(-16e-9, 16e-9, 1024, 0.0).unwrap();
        let fine = Grid::line(-16e-9, 16e-9, 2048, 0.0).unwrap();
        let a = solve_schrodinger(&coarse, &harmonic(&coarse, &m), &m, 2).unwrap();
        let b = solve_schrodinger(&fine, &harmonic(&fine, &m), &m, 2).unwrap();
        for k in 0..2 {
            assert!((a.energies[k] / b.energies[k] - 1.0).abs() < 1e-4);
        }
    }

    #[test]
    fn box_ratio() {
        let m = unit_model();
        let grid = Grid::line(0.0, 50e-9, 1024, 0.0).unwrap();
        let r = solve_schrodinger(&grid, &vec![0.0; 1024], &m, 3).unwrap();
        assert!((r.energies[1] / r.energies[0] - 4.0).abs() < 1e-3);
        assert!((r.energies[2] / r.energies[0] - 9.0).abs() < 1e-2);
    }

    #[test]
    fn dense_agrees_with_lanczos() {
        let m = unit_model();
        let grid = Grid::line(-8e-9, 8e-9, 256, 0.0).unwrap();
        let v = quartic(&grid, &m, 3.0, 3.0, 0.05);
        let a = solve_schrodinger(&grid, &v, &m, 4).unwrap();
        let b = solve_schrodinger_dense(&grid, &v, &m, 4).unwrap();
        for k in 0..4 {
            assert!((a.energies[k] / b.energies[k] - 1.0).abs() < 1e-9);
            assert!((a.overlap(k, k, &grid) - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn splitting_falls_with_barrier() {
        let m = unit_model();
        let grid = Grid::line(-8e-9, 8e-9, 256, 0.0).unwrap();
        let splits: Vec<f64> = [1.0, 2.0, 3.0, 4.0, 5.0]
            .iter()
            .map(|&h| {
                let r = solve_schrodinger_dense(&grid, &quartic(&grid, &m, h, 3.0, 0.0), &m, 2).unwrap();
                r.splitting()
            })
            .collect();
        assert!(splits.windows(2).all(|w| w[1] < w[0]), "{splits:?}");
    }

    #[test]
    fn symmetric_well_parity() {
        let m = unit_model();
        let grid = Grid::line(-10e-9, 10e-9, 1024, 0.0).unwrap();
        let r = solve_schrodinger(&grid, &quartic(&grid, &m, 3.0, 3.0, 0.0), &m, 2).unwrap();
        assert!((r.parity(0, &grid) - 1.0).abs() < 1e-6);
        assert!((r.parity(1, &grid) + 1.0).abs() < 1e-6);
    }

    #[test]
    fn splitting_even_in_tilt() {
        let m = unit_model();
        let grid = Grid::line(-10e-9, 10e-9, 512, 0.0).unwrap();
        for tilt in [0.01, 0.05, 0.2] {
            let up = solve_schrodinger(&grid, &quartic(&grid, &m, 3.0, 3.0, tilt), &m, 2).unwrap();
            let dn = solve_schrodinger(&grid, &quartic(&grid, &m, 3.0, 3.0, -tilt), &m, 2).unwrap();
            assert!((up.splitting() / dn.splitting() - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn plane_separable_harmonic() {
        let m = unit_model();
        let ax = Axis::new(-12e-9, 12e-9, 96).unwrap();
        let grid = Grid::plane(ax, ax);
        let v: Vec<f64> = grid
            .points()
            .iter()
            .map(|&(x, y)| m.energy_unit() * ((x / m.y_zpf).powi(2) + (y / m.y_zpf).powi(2)) / 4.0)
            .collect();
        let r = solve_schrodinger(&grid, &v, &m, 3).unwrap();
        assert!((r.energies[0] / m.energy_unit() - 1.0).abs() < 5e-3);
        assert!((r.energies[1] / m.energy_unit() - 2.0).abs() < 1e-2);
        assert!((r.energies[2] / m.energy_unit() - 2.0).abs() < 1e-2);
    }

    #[test]
    fn model_validation() {
        assert!(TunnelModel::new(0.0, 1.0).is_err());
        let m = TunnelModel::from_mass(1e-30, 1e11).unwrap();
        assert!((m.y_zpf - (SI.hbar / 2e-19).sqrt()).abs() < 1e-20);
        let bad = TunnelModel { m_v: Some(2e-30), ..m };
        assert!(bad.validate().is_err());
        let site = PinningSite::new(1e-6, 0.0, 1e-22, 5e-9);
        let p = TunnelModel::from_pinning(&site, 2e-9).unwrap();
        assert!((p.energy_unit() - 4.0 * 1e-22 * 0.16).abs() < 1e-30);
    }

    #[test]
    fn grid_checks() {
        assert!(Grid::line(0.0, 1.0, 63, 0.0).is_err());
        let g = Grid::line(0.0, 100e-9, 64, 0.0).unwrap();
        assert!(g.check_covers(&[PinningSite::new(50e-9, 0.0, 1.0, 5e-9)]).is_ok());
        assert!(g.check_covers(&[PinningSite::new(20e-9, 0.0, 1.0, 5e-9)]).is_err());
        assert!(matches!(
            solve_schrodinger(&g, &[0.0; 10], &unit_model(), 2),
            Err(TunnelError::PotentialSize { .. })
        ));
        assert!(matches!(
            solve_schrodinger(&g, &[0.0; 64], &unit_model(), 11),
            Err(TunnelError::TooManyLevels(11))
        ));
    }

    #[test]
    fn two_level_formula() {
        let t = TwoLevel { delta: 1.0, b_sweet: 0.0, slope: 1.0 };
        assert_eq!(t.energy_gap(0.0), 2.0);
        assert!((t.energy_gap(2.0) - 2.0 * 2.0_f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn landscape_double_well() {
        let device = DeviceModel::reference();
        let scales = derive_scales(&device, &SI).unwrap();
        let (x_bar, delta_lr, sigma, b0) = (1.2e-6, 12e-9, 4e-9, 130e-6);
        let (vl, vr) = degenerate_depths(0.02 * scales.eps0, x_bar, delta_lr, b0, 0.0, &scales, &device).unwrap();
        let sites = vec![
            PinningSite::new(x_bar - delta_lr / 2.0, 0.0, vl, sigma),
            PinningSite::new(x_bar + delta_lr / 2.0, 0.0, vr, sigma),
        ];
        let land = Landscape::new(device, scales, sites.clone(), 0.0).unwrap();
        let model = TunnelModel::from_pinning(&sites[0], 1.5e-9).unwrap();
        let half = delta_lr / 2.0 + 6.0 * sigma;
        let grid = Grid::line(x_bar - half, x_bar + half, 512, 0.0).unwrap();
        let sweet = find_sweet_spot(&land, &grid, &model, b0 - 50e-6, b0 + 50e-6, 1e-9).unwrap();
        let well = DoubleWell::from_sites(&sites).unwrap();
        let tl = two_level_reduction(&sweet, &well, &land).unwrap();
        // zero-point energies of the two sites differ, moving the sweet spot
        assert!((tl.b_sweet - b0).abs() < 20e-6, "{}", tl.b_sweet);
        let fields: Vec<f64> = (-4..=4).map(|i| tl.b_sweet + i as f64 * 0.5 * tl.delta / tl.slope.abs()).collect();
        let spec = spectrum_vs_field(&land, &grid, &model, &fields).unwrap();
        for p in &spec.points {
            let rel = p.omega_q / tl.omega_q(p.b) - 1.0;
            assert!(rel.abs() < 0.05, "B = {}: {rel}", p.b);
        }
    }
}
