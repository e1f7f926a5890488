//! Hermitian eigendecomposition, spectral projectors, functional calculus,
//! complex resolvent solves and operator norms.

use crate::error::{Error, Result};
use crate::lattice::LatticeOperator;
use crate::sparse::CsrMatrix;
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64 as C64;

pub const DENSE_CAP: usize = 4096;

#[derive(Clone, Debug)]
pub struct EigenSystem {
    pub values: Vec<f64>,
    /// Orthonormal eigenvectors stored as columns, ordered like `values`.
    pub vectors: DMatrix<C64>,
}

/// Interval membership used for every projector: strict on the left, closed on the right.
pub fn in_interval(x: f64, lo: f64, hi: f64) -> bool {
    x > lo && x <= hi
}

pub fn eigendecompose(op: &LatticeOperator) -> Result<EigenSystem> {
    if !op.hermitian {
        let defect = op.mat.hermitian_defect();
        if defect != 0.0 {
            return Err(Error::NotHermitian(defect));
        }
    }
    eigendecompose_matrix(&op.mat.to_dense())
}

/// Dense path. Input must be Hermitian up to `1e-12·max|entry|`; it is symmetrized before solving.
pub fn eigendecompose_matrix(m: &DMatrix<C64>) -> Result<EigenSystem> {
    let n = m.nrows();
    if n != m.ncols() {
        return Err(Error::Domain("matrix not square".into()));
    }
    if n > DENSE_CAP {
        return Err(Error::OverCap { size: n, cap: DENSE_CAP });
    }
    let scale = m.iter().fold(0.0f64, |a, v| a.max(v.norm())).max(1.0);
    let adj = m.adjoint();
    let defect = (m - &adj).iter().fold(0.0f64, |a, v| a.max(v.norm()));
    if defect > 1e-12 * scale {
        return Err(Error::NotHermitian(defect));
    }
    let h = (m + adj).scale(0.5);
    let real = h.iter().all(|v| v.im == 0.0);
    let (vals, vecs): (Vec<f64>, DMatrix<C64>) = if real {
        let r = h.map(|v| v.re);
        let e = SymmetricEigen::new(r);
        (e.eigenvalues.iter().copied().collect(), e.eigenvectors.map(|v| C64::new(v, 0.0)))
    } else {
        let e = SymmetricEigen::new(h);
        (e.eigenvalues.iter().copied().collect(), e.eigenvectors)
    };
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
    let values = order.iter().map(|&i| vals[i]).collect();
    let vectors = DMatrix::from_fn(n, n, |i, j| vecs[(i, order[j])]);
    Ok(EigenSystem { values, vectors })
}

impl EigenSystem {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn indices_in(&self, lo: f64, hi: f64) -> Vec<usize> {
        (0..self.dim()).filter(|&j| in_interval(self.values[j], lo, hi)).collect()
    }

    /// Columns of the eigenvectors listed in `idx`.
    pub fn columns(&self, idx: &[usize]) -> DMatrix<C64> {
        DMatrix::from_fn(self.dim(), idx.len(), |i, j| self.vectors[(i, idx[j])])
    }

    pub fn projector(&self, lo: f64, hi: f64) -> DMatrix<C64> {
        let v = self.columns(&self.indices_in(lo, hi));
        &v * v.adjoint()
    }

    /// `V diag(d) V*`.
    pub fn from_diagonal(&self, d: &[C64]) -> DMatrix<C64> {
        let mut vd = self.vectors.clone();
        for (j, dj) in d.iter().enumerate() {
            for i in 0..self.dim() {
                vd[(i, j)] *= dj;
            }
        }
        vd * self.vectors.adjoint()
    }

    pub fn apply_function<F: Fn(f64) -> f64>(&self, f: F) -> Result<DMatrix<C64>> {
        self.apply_function_complex(|x| C64::new(f(x), 0.0))
    }

    pub fn apply_function_complex<F: Fn(f64) -> C64>(&self, f: F) -> Result<DMatrix<C64>> {
        let mut d = Vec::with_capacity(self.dim());
        for &l in &self.values {
            let v = f(l);
            if !v.re.is_finite() || !v.im.is_finite() {
                return Err(Error::NonFinite(l));
            }
            d.push(v);
        }
        Ok(self.from_diagonal(&d))
    }

    pub fn dist_to_spectrum(&self, z: C64) -> f64 {
        self.values.iter().map(|&l| (C64::new(l, 0.0) - z).norm()).fold(f64::INFINITY, f64::min)
    }

    /// `max_j ‖T v_j − λ_j v_j‖`.
    pub fn residual(&self, t: &DMatrix<C64>) -> f64 {
        let tv = t * &self.vectors;
        (0..self.dim())
            .map(|j| (tv.column(j) - self.vectors.column(j) * C64::new(self.values[j], 0.0)).norm())
            .fold(0.0, f64::max)
    }

    pub fn orthonormality_defect(&self) -> f64 {
        let g = self.vectors.adjoint() * &self.vectors;
        (g - DMatrix::<C64>::identity(self.dim(), self.dim())).iter().fold(0.0, |a, v| a.max(v.norm()))
    }
}

/// LU factorization of the banded matrix `T − z` without pivoting.
///
/// Every leading block of `T − z` is `T_k − z` with `T_k` Hermitian, hence invertible
/// for `Im z ≠ 0`, so the unpivoted elimination never meets a zero pivot.
pub struct BandedLu {
    n: usize,
    bw: usize,
    band: Vec<C64>,
    source: CsrMatrix,
    z: C64,
}

impl BandedLu {
    pub fn factor(t: &CsrMatrix, z: C64) -> Result<BandedLu> {
        if z.im == 0.0 {
            return Err(Error::RealShift(format!("z = {z} lies on the real axis")));
        }
        let n = t.dim();
        let bw = t.bandwidth();
        let w = 2 * bw + 1;
        let mut band = vec![C64::new(0.0, 0.0); n * w];
        let at = |i: usize, j: usize| i * w + (j + bw - i);
        for (i, j, v) in t.triplets() {
            band[at(i, j)] = v;
        }
        for i in 0..n {
            band[at(i, i)] -= z;
        }
        for k in 0..n {
            let piv = band[at(k, k)];
            if piv.norm() == 0.0 || !piv.re.is_finite() {
                return Err(Error::Solver(format!("zero pivot at row {k}")));
            }
            let last = (k + bw).min(n - 1);
            for i in k + 1..=last {
                let l = band[at(i, k)] / piv;
                band[at(i, k)] = l;
                if l == C64::new(0.0, 0.0) {
                    continue;
                }
                for j in k + 1..=last {
                    let u = band[at(k, j)];
                    band[at(i, j)] -= l * u;
                }
            }
        }
        Ok(BandedLu { n, bw, band, source: t.clone(), z })
    }

    fn substitute(&self, b: &[C64]) -> Vec<C64> {
        let (n, bw) = (self.n, self.bw);
        let w = 2 * bw + 1;
        let at = |i: usize, j: usize| i * w + (j + bw - i);
        let mut y = b.to_vec();
        for i in 0..n {
            let first = i.saturating_sub(bw);
            let mut s = y[i];
            for j in first..i {
                s -= self.band[at(i, j)] * y[j];
            }
            y[i] = s;
        }
        for i in (0..n).rev() {
            let last = (i + bw).min(n - 1);
            let mut s = y[i];
            for j in i + 1..=last {
                s -= self.band[at(i, j)] * y[j];
            }
            y[i] = s / self.band[at(i, i)];
        }
        y
    }

    fn residual(&self, x: &[C64], b: &[C64]) -> Vec<C64> {
        let tx = self.source.matvec(x);
        (0..self.n).map(|i| b[i] - (tx[i] - self.z * x[i])).collect()
    }

    /// Solves `(T − z)x = b` with up to three refinement sweeps; errors if the
    /// relative residual stays above `1e-10`.
    pub fn solve(&self, b: &[C64]) -> Result<Vec<C64>> {
        let bn = norm(b);
        if bn == 0.0 {
            return Ok(vec![C64::new(0.0, 0.0); self.n]);
        }
        let mut x = self.substitute(b);
        let mut r = self.residual(&x, b);
        for _ in 0..3 {
            if norm(&r) <= 1e-13 * bn {
                break;
            }
            let dx = self.substitute(&r);
            for i in 0..self.n {
                x[i] += dx[i];
            }
            r = self.residual(&x, b);
        }
        let rel = norm(&r) / bn;
        if rel > 1e-10 {
            return Err(Error::Solver(format!("relative residual {rel:e} at z = {}", self.z)));
        }
        Ok(x)
    }
}

pub fn resolvent_apply(t: &CsrMatrix, z: C64, b: &[C64]) -> Result<Vec<C64>> {
    BandedLu::factor(t, z)?.solve(b)
}

pub fn norm(x: &[C64]) -> f64 {
    x.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
}

pub fn dot(x: &[C64], y: &[C64]) -> C64 {
    x.iter().zip(y).map(|(a, b)| a.conj() * b).sum()
}

/// A linear map known only through its action and the action of its adjoint.
pub trait LinearMap: Sync {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[C64]) -> Result<Vec<C64>>;
    fn apply_adjoint(&self, x: &[C64]) -> Result<Vec<C64>>;
}

impl LinearMap for DMatrix<C64> {
    fn dim(&self) -> usize {
        self.nrows()
    }
    fn apply(&self, x: &[C64]) -> Result<Vec<C64>> {
        Ok((self * DVector::from_column_slice(x)).iter().copied().collect())
    }
    fn apply_adjoint(&self, x: &[C64]) -> Result<Vec<C64>> {
        Ok((self.adjoint() * DVector::from_column_slice(x)).iter().copied().collect())
    }
}

/// Largest singular value by Lanczos iteration on `X*X` with full reorthogonalization.
/// The start vector is a fixed deterministic sequence, so repeated calls agree bitwise.
pub fn operator_norm(x: &dyn LinearMap) -> Result<f64> {
    norm_lanczos(x, 1e-10, 400)
}

pub fn norm_lanczos(x: &dyn LinearMap, rel_tol: f64, max_iter: usize) -> Result<f64> {
    let n = x.dim();
    if n == 0 {
        return Ok(0.0);
    }
    let mut q: Vec<C64> = (0..n).map(|i| C64::new(1.0 + 0.5 * ((i as f64) * 0.618_034).sin(), 0.25 * ((i as f64) * 1.3).cos())).collect();
    let q0 = norm(&q);
    q.iter_mut().for_each(|v| *v /= q0);
    let mut basis: Vec<Vec<C64>> = vec![q];
    let mut alphas: Vec<f64> = Vec::new();
    let mut betas: Vec<f64> = Vec::new();
    let mut prev = 0.0f64;
    let steps = max_iter.min(n);
    for k in 0..steps {
        let w0 = x.apply(&basis[k])?;
        let mut w = x.apply_adjoint(&w0)?;
        let a = dot(&basis[k], &w).re;
        alphas.push(a);
        for _ in 0..2 {
            for b in &basis {
                let c = dot(b, &w);
                for i in 0..n {
                    w[i] -= c * b[i];
                }
            }
        }
        let beta = norm(&w);
        let theta = largest_ritz(&alphas, &betas);
        let converged_breakdown = beta <= 1e-14 * theta.max(1e-300);
        if converged_breakdown || k + 1 == steps {
            return Ok(theta.max(0.0).sqrt());
        }
        if k >= 2 && (theta - prev).abs() <= rel_tol * theta {
            return Ok(theta.max(0.0).sqrt());
        }
        prev = theta;
        betas.push(beta);
        basis.push(w.iter().map(|v| v / beta).collect());
    }
    Err(Error::NoConvergence { iterations: steps, estimate: prev.max(0.0).sqrt() })
}

fn largest_ritz(alphas: &[f64], betas: &[f64]) -> f64 {
    let k = alphas.len();
    let t = DMatrix::<f64>::from_fn(k, k, |i, j| {
        if i == j {
            alphas[i]
        } else if i + 1 == j {
            betas[i]
        } else if j + 1 == i {
            betas[j]
        } else {
            0.0
        }
    });
    SymmetricEigen::new(t).eigenvalues.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

/// Exact largest singular value through a dense Hermitian eigensolve of `X*X`.
pub fn dense_norm(x: &DMatrix<C64>) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    let g = x.adjoint() * x;
    let g = (&g + g.adjoint()).scale(0.5);
    SymmetricEigen::new(g).eigenvalues.iter().copied().fold(0.0f64, f64::max).sqrt()
}

/// Minimal eigenvalue of a Hermitian matrix (symmetrized first).
pub fn min_eigenvalue(m: &DMatrix<C64>) -> f64 {
    if m.nrows() == 0 {
        return f64::INFINITY;
    }
    let h = (m + m.adjoint()).scale(0.5);
    if h.iter().all(|v| v.im == 0.0) {
        return SymmetricEigen::new(h.map(|v| v.re)).eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    }
    SymmetricEigen::new(h).eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
}
