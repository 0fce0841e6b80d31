//! Lowest eigenpairs of symmetric banded matrices.
//!
//! Shift-invert Lanczos: the matrix `A − σI` is factored once by banded
//! Cholesky, and Lanczos with full reorthogonalization runs on its inverse,
//! whose largest eigenvalues are the ones of `A` closest above `σ`. The
//! Krylov basis grows until every requested Ritz pair has a small residual
//! measured against `A` itself.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LanczosError {
    #[error("shifted matrix is not positive definite (pivot {pivot} at row {row})")]
    NotPositiveDefinite { row: usize, pivot: f64 },
    #[error("requested {k} eigenpairs from a matrix of dimension {n}")]
    TooManyEigenpairs { k: usize, n: usize },
    #[error("Lanczos did not converge with a Krylov space of {krylov}; residual norms {residuals:?}")]
    NotConverged { krylov: usize, residuals: Vec<f64> },
}

/// Symmetric matrix stored by its lower band: `band[i][d] = A[i, i − d]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BandedSymmetric {
    n: usize,
    bw: usize,
    data: Vec<f64>,
}

impl BandedSymmetric {
    pub fn zeros(n: usize, bandwidth: usize) -> Self {
        BandedSymmetric {
            n,
            bw: bandwidth,
            data: vec![0.0; n * (bandwidth + 1)],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> usize {
        self.bw
    }

    fn idx(&self, i: usize, d: usize) -> usize {
        i * (self.bw + 1) + d
    }

    /// Entry `(i, j)`; zero outside the band.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (r, c) = if i >= j { (i, j) } else { (j, i) };
        let d = r - c;
        if d > self.bw {
            0.0
        } else {
            self.data[self.idx(r, d)]
        }
    }

    /// Sets `(i, j)` and `(j, i)`.
    ///
    /// # Panics
    /// If `(i, j)` lies outside the band.
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let (r, c) = if i >= j { (i, j) } else { (j, i) };
        let d = r - c;
        assert!(d <= self.bw, "entry ({i}, {j}) outside bandwidth {}", self.bw);
        let k = self.idx(r, d);
        self.data[k] = v;
    }

    pub fn add_diagonal(&mut self, i: usize, v: f64) {
        let k = self.idx(i, 0);
        self.data[k] += v;
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        for i in 0..self.n {
            let mut s = self.data[self.idx(i, 0)] * x[i];
            for d in 1..=self.bw.min(i) {
                s += self.data[self.idx(i, d)] * x[i - d];
            }
            for d in 1..=self.bw.min(self.n - 1 - i) {
                s += self.data[self.idx(i + d, d)] * x[i + d];
            }
            y[i] = s;
        }
    }

    /// Upper bound on the spectral radius (Gershgorin).
    pub fn norm_bound(&self) -> f64 {
        (0..self.n)
            .map(|i| {
                let lo = i.saturating_sub(self.bw);
                let hi = (i + self.bw).min(self.n - 1);
                (lo..=hi).map(|j| self.get(i, j).abs()).sum::<f64>()
            })
            .fold(0.0, f64::max)
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.n, |i, j| self.get(i, j))
    }
}

/// Lower Cholesky factor in the same band layout.
#[derive(Debug, Clone)]
pub struct BandedCholesky {
    l: BandedSymmetric,
}

impl BandedCholesky {
    pub fn factor(a: &BandedSymmetric) -> Result<Self, LanczosError> {
        let n = a.n;
        let bw = a.bw;
        let mut l = BandedSymmetric::zeros(n, bw);
        for i in 0..n {
            let j0 = i.saturating_sub(bw);
            for j in j0..=i {
                let k0 = j0.max(j.saturating_sub(bw));
                let mut s = a.data[a.idx(i, i - j)];
                for k in k0..j {
                    s -= l.data[l.idx(i, i - k)] * l.data[l.idx(j, j - k)];
                }
                if i == j {
                    if !(s > 0.0) {
                        return Err(LanczosError::NotPositiveDefinite { row: i, pivot: s });
                    }
                    let k = l.idx(i, 0);
                    l.data[k] = s.sqrt();
                } else {
                    let k = l.idx(i, i - j);
                    l.data[k] = s / l.data[l.idx(j, 0)];
                }
            }
        }
        Ok(BandedCholesky { l })
    }

    /// Solves `A x = b` in place.
    pub fn solve_in_place(&self, b: &mut [f64]) {
        let l = &self.l;
        let n = l.n;
        let bw = l.bw;
        for i in 0..n {
            let mut s = b[i];
            for k in i.saturating_sub(bw)..i {
                s -= l.data[l.idx(i, i - k)] * b[k];
            }
            b[i] = s / l.data[l.idx(i, 0)];
        }
        for i in (0..n).rev() {
            let mut s = b[i];
            for k in (i + 1)..=(i + bw).min(n - 1) {
                s -= l.data[l.idx(k, k - i)] * b[k];
            }
            b[i] = s / l.data[l.idx(i, 0)];
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LanczosOptions {
    /// Residual tolerance relative to the Gershgorin bound of `A`.
    pub tol: f64,
    /// Seed of the start vector.
    pub seed: u64,
}

impl Default for LanczosOptions {
    fn default() -> Self {
        LanczosOptions { tol: 1e-10, seed: 0x5eed }
    }
}

/// Eigenpairs sorted by ascending eigenvalue; vectors are unit-norm.
#[derive(Debug, Clone)]
pub struct Eigenpairs {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
    pub residuals: Vec<f64>,
    pub krylov_dim: usize,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn normalize(v: &mut [f64]) -> f64 {
    let n = dot(v, v).sqrt();
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    }
    n
}

/// Gram–Schmidt twice against every basis vector.
fn orthogonalize(v: &mut [f64], basis: &[Vec<f64>]) {
    for _ in 0..2 {
        for q in basis {
            let c = dot(v, q);
            v.iter_mut().zip(q).for_each(|(x, qi)| *x -= c * qi);
        }
    }
}

fn tridiagonal_eigen(alpha: &[f64], beta: &[f64]) -> (Vec<f64>, DMatrix<f64>) {
    let m = alpha.len();
    let mut t = DMatrix::<f64>::zeros(m, m);
    for i in 0..m {
        t[(i, i)] = alpha[i];
        if i + 1 < m {
            t[(i, i + 1)] = beta[i];
            t[(i + 1, i)] = beta[i];
        }
    }
    let eig = SymmetricEigen::new(t);
    (eig.eigenvalues.iter().copied().collect(), eig.eigenvectors)
}

/// Lowest `k` eigenpairs of `a`, which must satisfy `a − σI` positive definite.
pub fn lowest_eigenpairs(
    a: &BandedSymmetric,
    k: usize,
    sigma: f64,
    opts: LanczosOptions,
) -> Result<Eigenpairs, LanczosError> {
    let n = a.dim();
    if k == 0 || k > n {
        return Err(LanczosError::TooManyEigenpairs { k, n });
    }
    let mut shifted = a.clone();
    for i in 0..n {
        shifted.add_diagonal(i, -sigma);
    }
    let chol = BandedCholesky::factor(&shifted)?;
    let tol = opts.tol * a.norm_bound().max(f64::MIN_POSITIVE);

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut random_vector = |basis: &[Vec<f64>]| -> Vec<f64> {
        let mut v: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        orthogonalize(&mut v, basis);
        normalize(&mut v);
        v
    };

    let mut basis: Vec<Vec<f64>> = Vec::new();
    let mut alpha = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    let mut q = random_vector(&basis);
    let mut w = vec![0.0; n];
    let mut av = vec![0.0; n];
    let mut last_residuals = vec![f64::INFINITY; k];
    let check_every = 5;

    while basis.len() < n {
        basis.push(q.clone());
        w.copy_from_slice(&q);
        chol.solve_in_place(&mut w);
        let a_j = dot(&w, &q);
        alpha.push(a_j);
        orthogonalize(&mut w, &basis);
        let b_j = normalize(&mut w);
        let m = basis.len();

        let exhausted = m == n;
        if m >= k && (m % check_every == 0 || exhausted || b_j <= 1e-12 * a_j.abs()) {
            let (theta, s) = tridiagonal_eigen(&alpha, &beta);
            // largest θ of the inverse ↔ smallest eigenvalues of A
            let mut order: Vec<usize> = (0..m).collect();
            order.sort_by(|&x, &y| theta[y].total_cmp(&theta[x]));
            let estimates: Vec<f64> = order[..k]
                .iter()
                .map(|&i| (b_j * s[(m - 1, i)]).abs() / theta[i].abs().powi(2))
                .collect();
            if exhausted || estimates.iter().all(|&e| e < tol) {
                let mut values = Vec::with_capacity(k);
                let mut vectors = Vec::with_capacity(k);
                let mut residuals = Vec::with_capacity(k);
                for &i in &order[..k] {
                    let mut x = vec![0.0; n];
                    for (jj, qj) in basis.iter().enumerate() {
                        let c = s[(jj, i)];
                        x.iter_mut().zip(qj).for_each(|(xi, qi)| *xi += c * qi);
                    }
                    normalize(&mut x);
                    a.matvec(&x, &mut av);
                    let lam = dot(&x, &av);
                    let r = av
                        .iter()
                        .zip(&x)
                        .map(|(ax, xi)| (ax - lam * xi).powi(2))
                        .sum::<f64>()
                        .sqrt();
                    values.push(lam);
                    vectors.push(x);
                    residuals.push(r);
                }
                if residuals.iter().all(|&r| r < tol) {
                    let mut idx: Vec<usize> = (0..k).collect();
                    idx.sort_by(|&x, &y| values[x].total_cmp(&values[y]));
                    return Ok(Eigenpairs {
                        values: idx.iter().map(|&i| values[i]).collect(),
                        vectors: idx.iter().map(|&i| vectors[i].clone()).collect(),
                        residuals: idx.iter().map(|&i| residuals[i]).collect(),
                        krylov_dim: m,
                    });
                }
                last_residuals = residuals;
                if exhausted {
                    break;
                }
            }
        }
        if exhausted {
            break;
        }
        if b_j <= 1e-12 * a_j.abs().max(f64::MIN_POSITIVE) {
            // invariant subspace found: continue with a fresh direction
            beta.push(0.0);
            q = random_vector(&basis);
        } else {
            beta.push(b_j);
            q = w.clone();
        }
    }
    Err(LanczosError::NotConverged {
        krylov: basis.len(),
        residuals: last_residuals,
    })
}

/// Dense reference: all eigenpairs of `a`, ascending.
pub fn dense_eigenpairs(a: &BandedSymmetric) -> (Vec<f64>, Vec<Vec<f64>>) {
    let eig = SymmetricEigen::new(a.to_dense());
    let mut order: Vec<usize> = (0..a.dim()).collect();
    order.sort_by(|&x, &y| eig.eigenvalues[x].total_cmp(&eig.eigenvalues[y]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = order
        .iter()
        .map(|&i| eig.eigenvectors.column(i).iter().copied().collect())
        .collect();
    (values, vectors)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn laplacian_1d(n: usize) -> BandedSymmetric {
        let mut a = BandedSymmetric::zeros(n, 1);
        for i in 0..n {
            a.set(i, i, 2.0);
            if i + 1 < n {
                a.set(i + 1, i, -1.0);
            }
        }
        a
    }

    #[test]
    fn cholesky_solves() {
        let mut a = laplacian_1d(50);
        for i in 0..50 {
            a.add_diagonal(i, 0.1 * i as f64);
        }
        let x: Vec<f64> = (0..50).map(|i| (i as f64 * 0.3).sin()).collect();
        let mut b = vec![0.0; 50];
        a.matvec(&x, &mut b);
        let chol = BandedCholesky::factor(&a).unwrap();
        chol.solve_in_place(&mut b);
        for (u, v) in b.iter().zip(&x) {
            assert!((u - v).abs() < 1e-12);
        }
    }

    #[test]
    fn indefinite_is_rejected() {
        let mut a = laplacian_1d(10);
        a.add_diagonal(3, -10.0);
        assert!(matches!(
            BandedCholesky::factor(&a),
            Err(LanczosError::NotPositiveDefinite { .. })
        ));
    }

    #[test]
    fn laplacian_eigenvalues_analytic() {
        let n = 400;
        let a = laplacian_1d(n);
        let r = lowest_eigenpairs(&a, 4, -1.0, LanczosOptions::default()).unwrap();
        for (j, v) in r.values.iter().enumerate() {
            let theta = (j + 1) as f64 * std::f64::consts::PI / (2.0 * (n + 1) as f64);
            let exact = 4.0 * theta.sin().powi(2);
            assert!(((v - exact) / exact).abs() < 1e-9, "{v} vs {exact}");
        }
    }

    #[test]
    fn matches_dense_on_banded() {
        // 2D Laplacian on 12x12 has bandwidth 12 and repeated eigenvalues
        let nx = 12;
        let n = nx * nx;
        let mut a = BandedSymmetric::zeros(n, nx);
        for iy in 0..nx {
            for ix in 0..nx {
                let i = iy * nx + ix;
                a.set(i, i, 4.0 + 0.01 * ((ix * 7 + iy * 3) % 5) as f64);
                if ix + 1 < nx {
                    a.set(i, i + 1, -1.0);
                }
                if iy + 1 < nx {
                    a.set(i, i + nx, -1.0);
                }
            }
        }
        let r = lowest_eigenpairs(&a, 6, 0.0, LanczosOptions::default()).unwrap();
        let (dense, _) = dense_eigenpairs(&a);
        for (x, y) in r.values.iter().zip(&dense) {
            assert!((x - y).abs() < 1e-9 * y.abs());
        }
    }

    #[test]
    fn small_matrix_exhausts_krylov() {
        let a = laplacian_1d(3);
        let r = lowest_eigenpairs(&a, 3, 0.0, LanczosOptions::default()).unwrap();
        assert_eq!(r.values.len(), 3);
        assert!(lowest_eigenpairs(&a, 4, 0.0, LanczosOptions::default()).is_err());
    }

    proptest! {
        #[test]
        fn orthonormal_ritz_vectors(diag in prop::collection::vec(0.0f64..5.0, 80)) {
            let mut a = laplacian_1d(80);
            for (i, d) in diag.iter().enumerate() {
                a.add_diagonal(i, *d);
            }
            let r = lowest_eigenpairs(&a, 5, -0.5, LanczosOptions::default()).unwrap();
            for i in 0..5 {
                for j in 0..5 {
                    let d = dot(&r.vectors[i], &r.vectors[j]);
                    let expected = if i == j { 1.0 } else { 0.0 };
                    prop_assert!((d - expected).abs() < 1e-8);
                }
            }
            let (dense, _) = dense_eigenpairs(&a);
            for (x, y) in r.values.iter().zip(&dense) {
                prop_assert!((x - y).abs() < 1e-8 * (1.0 + y.abs()));
            }
        }
    }
}
