//! Finite boxes of ℤ^d and the Dirichlet-truncated operators living on them.

use crate::error::{Error, Result};
use crate::sparse::CsrMatrix;
use crate::weights;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// The cube {−R,…,R}^d, enumerated lexicographically with n_1 most significant.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct BoxDomain {
    d: usize,
    radius: usize,
}

impl BoxDomain {
    pub fn new(d: usize, radius: usize) -> Result<BoxDomain> {
        if d == 0 || radius == 0 {
            return Err(Error::InvalidDomain(format!("d = {d}, radius = {radius}")));
        }
        let side = 2 * radius + 1;
        if (side as f64).powi(d as i32) > 1e8 {
            return Err(Error::InvalidDomain(format!("{side}^{d} sites is too many")));
        }
        Ok(BoxDomain { d, radius })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    pub fn side(&self) -> usize {
        2 * self.radius + 1
    }

    pub fn size(&self) -> usize {
        self.side().pow(self.d as u32)
    }

    pub fn contains(&self, site: &[i64]) -> bool {
        site.len() == self.d && site.iter().all(|&x| x.unsigned_abs() as usize <= self.radius)
    }

    pub fn index_of(&self, site: &[i64]) -> Option<usize> {
        if !self.contains(site) {
            return None;
        }
        let r = self.radius as i64;
        Some(site.iter().fold(0usize, |acc, &x| acc * self.side() + (x + r) as usize))
    }

    pub fn site(&self, mut index: usize) -> Vec<i64> {
        let mut s = vec![0i64; self.d];
        for k in (0..self.d).rev() {
            s[k] = (index % self.side()) as i64 - self.radius as i64;
            index /= self.side();
        }
        s
    }

    pub fn sites(&self) -> impl Iterator<Item = Vec<i64>> + '_ {
        (0..self.size()).map(move |i| self.site(i))
    }

    /// `R − max_i |n_i|`: number of hops needed to leave the box.
    pub fn depth(&self, index: usize) -> usize {
        let m = self.site(index).iter().map(|x| x.unsigned_abs() as usize).max().unwrap_or(0);
        self.radius - m
    }

    /// Indices of sites more than `margin` hops from the outside, i.e. at depth at least `margin`.
    pub fn interior(&self, margin: usize) -> Vec<usize> {
        (0..self.size()).filter(|&i| self.depth(i) >= margin).collect()
    }

    /// Index in `outer` of each site of `self`; `outer` must be a larger box of the same dimension.
    pub fn embedding_into(&self, outer: &BoxDomain) -> Result<Vec<usize>> {
        if outer.d != self.d || outer.radius < self.radius {
            return Err(Error::DomainMismatch(format!("cannot embed {self:?} into {outer:?}")));
        }
        Ok(self.sites().map(|s| outer.index_of(&s).unwrap()).collect())
    }
}

pub fn euclid(site: &[i64]) -> f64 {
    site.iter().map(|&x| (x * x) as f64).sum::<f64>().sqrt()
}

#[derive(Clone, Debug, PartialEq)]
pub struct LatticeOperator {
    pub domain: BoxDomain,
    pub mat: CsrMatrix,
    pub hermitian: bool,
}

impl LatticeOperator {
    pub fn new(domain: BoxDomain, mat: CsrMatrix) -> Result<LatticeOperator> {
        if mat.dim() != domain.size() {
            return Err(Error::DomainMismatch(format!("matrix {} vs box {}", mat.dim(), domain.size())));
        }
        Ok(LatticeOperator { domain, mat, hermitian: false })
    }

    /// Tags the operator as Hermitian after checking exact conjugate symmetry of the stored entries.
    pub fn new_hermitian(domain: BoxDomain, mat: CsrMatrix) -> Result<LatticeOperator> {
        let mut op = Self::new(domain, mat)?;
        let defect = op.mat.hermitian_defect();
        if defect != 0.0 {
            return Err(Error::NotHermitian(defect));
        }
        op.hermitian = true;
        Ok(op)
    }

    fn same_domain(&self, o: &LatticeOperator) -> Result<()> {
        if self.domain != o.domain {
            return Err(Error::DomainMismatch(format!("{:?} vs {:?}", self.domain, o.domain)));
        }
        Ok(())
    }

    pub fn add(&self, o: &LatticeOperator) -> Result<LatticeOperator> {
        self.same_domain(o)?;
        let m = self.mat.add(&o.mat);
        if self.hermitian && o.hermitian {
            Self::new_hermitian(self.domain, m)
        } else {
            Self::new(self.domain, m)
        }
    }

    pub fn sub(&self, o: &LatticeOperator) -> Result<LatticeOperator> {
        self.same_domain(o)?;
        Self::new(self.domain, self.mat.sub(&o.mat))
    }

    pub fn mul(&self, o: &LatticeOperator) -> Result<LatticeOperator> {
        self.same_domain(o)?;
        Self::new(self.domain, self.mat.matmul(&o.mat))
    }

    pub fn scale(&self, s: C64) -> LatticeOperator {
        LatticeOperator { domain: self.domain, mat: self.mat.scale(s), hermitian: self.hermitian && s.im == 0.0 }
    }

    pub fn adjoint(&self) -> LatticeOperator {
        LatticeOperator { domain: self.domain, mat: self.mat.adjoint(), hermitian: self.hermitian }
    }

    /// Largest `‖Mδ_n‖` over `domain.interior(margin)`.
    pub fn interior_column_norm(&self, margin: usize) -> f64 {
        let norms = self.mat.column_norms();
        self.domain.interior(margin).into_iter().map(|i| norms[i]).fold(0.0, f64::max)
    }
}

fn check_axis(domain: &BoxDomain, axis: usize) -> Result<()> {
    if axis == 0 || axis > domain.dim() {
        return Err(Error::AxisOutOfRange { axis, d: domain.dim() });
    }
    Ok(())
}

fn real(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// `(S_i ψ)(n) = ψ(n − e_i)`, hops across the boundary dropped. Axes are 1-based.
pub fn build_shift(domain: &BoxDomain, axis: usize) -> Result<LatticeOperator> {
    check_axis(domain, axis)?;
    let mut t = Vec::new();
    for i in 0..domain.size() {
        let mut s = domain.site(i);
        s[axis - 1] -= 1;
        if let Some(j) = domain.index_of(&s) {
            t.push((i, j, real(1.0)));
        }
    }
    LatticeOperator::new(*domain, CsrMatrix::from_triplets(domain.size(), t))
}

pub fn build_position(domain: &BoxDomain, axis: usize) -> Result<LatticeOperator> {
    check_axis(domain, axis)?;
    let d: Vec<f64> = domain.sites().map(|s| s[axis - 1] as f64).collect();
    LatticeOperator::new_hermitian(*domain, CsrMatrix::diagonal(&d))
}

/// `Δ_i = 2 − S_i − S_i*`.
pub fn build_laplacian_axis(domain: &BoxDomain, axis: usize) -> Result<LatticeOperator> {
    let s = build_shift(domain, axis)?;
    let m = CsrMatrix::identity(domain.size()).scale(real(2.0)).sub(&s.mat).sub(&s.mat.adjoint());
    LatticeOperator::new_hermitian(*domain, m)
}

pub fn build_laplacian(domain: &BoxDomain) -> LatticeOperator {
    let mut m = CsrMatrix::zeros(domain.size());
    for axis in 1..=domain.dim() {
        m = m.add(&build_laplacian_axis(domain, axis).unwrap().mat);
    }
    LatticeOperator::new_hermitian(*domain, m).expect("laplacian is symmetric by construction")
}

/// `A = (i/2) Σ_i [(S_i − S_i*)N_i + N_i(S_i − S_i*)]`.
pub fn build_dilation_generator(domain: &BoxDomain) -> LatticeOperator {
    let mut m = CsrMatrix::zeros(domain.size());
    for axis in 1..=domain.dim() {
        let s = build_shift(domain, axis).unwrap().mat;
        let n = build_position(domain, axis).unwrap().mat;
        let diff = s.sub(&s.adjoint());
        m = m.add(&diff.matmul(&n)).add(&n.matmul(&diff));
    }
    LatticeOperator::new_hermitian(*domain, m.scale(C64::new(0.0, 0.5))).expect("entries are exact half-integers")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TableEntry {
    pub site: Vec<i64>,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PotentialSpec {
    /// `w sin(k(n_1+…+n_d)) / |n|`, zero at the origin.
    Wigner { w: f64, k: f64 },
    /// `c_amp · log_{m+1}^{−q}(⟨n⟩) Π_{k≤m} log_k^{−r}(⟨n⟩)`.
    HypothesisH { m: usize, r: f64, q: f64, c_amp: f64 },
    /// Explicit values; unlisted sites are zero.
    CustomTable { entries: Vec<TableEntry> },
}

impl PotentialSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            PotentialSpec::Wigner { w, k } => {
                if !w.is_finite() || !k.is_finite() || *k <= 0.0 || *k >= 2.0 * PI || *k == PI {
                    return Err(Error::InvalidPotential(format!("wigner needs k in (0,2π)\\{{π}}, got {k}")));
                }
            }
            PotentialSpec::HypothesisH { r, q, c_amp, .. } => {
                if !(*r >= 0.0 && q > r) || !c_amp.is_finite() {
                    return Err(Error::InvalidPotential(format!("hypothesis_h needs q > r ≥ 0, got r={r}, q={q}")));
                }
            }
            PotentialSpec::CustomTable { entries } => {
                if entries.iter().any(|e| !e.value.is_finite()) {
                    return Err(Error::InvalidPotential("non-finite table value".into()));
                }
            }
        }
        Ok(())
    }

    /// Value at any site of ℤ^d, inside or outside a box.
    pub fn value_at(&self, site: &[i64]) -> f64 {
        match self {
            PotentialSpec::Wigner { w, k } => {
                let r = euclid(site);
                if r == 0.0 {
                    0.0
                } else {
                    w * (k * site.iter().sum::<i64>() as f64).sin() / r
                }
            }
            PotentialSpec::HypothesisH { m, r, q, c_amp } => c_amp * weights::w_m(*m, -q, -r, euclid(site)),
            PotentialSpec::CustomTable { entries } => entries.iter().filter(|e| e.site == site).map(|e| e.value).sum(),
        }
    }
}

pub fn build_potential(domain: &BoxDomain, spec: &PotentialSpec) -> Result<LatticeOperator> {
    spec.validate()?;
    if let PotentialSpec::CustomTable { entries } = spec {
        if let Some(e) = entries.iter().find(|e| e.site.len() != domain.dim()) {
            return Err(Error::InvalidPotential(format!("site {:?} has wrong dimension", e.site)));
        }
    }
    let d: Vec<f64> = domain.sites().map(|s| spec.value_at(&s)).collect();
    LatticeOperator::new_hermitian(*domain, CsrMatrix::diagonal(&d))
}

/// `Δ + Σ potentials`.
pub fn build_hamiltonian(domain: &BoxDomain, potentials: &[PotentialSpec]) -> Result<LatticeOperator> {
    let mut h = build_laplacian(domain);
    for p in potentials {
        h = h.add(&build_potential(domain, p)?)?;
    }
    Ok(h)
}

pub fn commutator(x: &LatticeOperator, y: &LatticeOperator) -> Result<LatticeOperator> {
    x.same_domain(y)?;
    LatticeOperator::new(x.domain, x.mat.matmul(&y.mat).sub(&y.mat.matmul(&x.mat)))
}

/// `[X, iY] = i(XY − YX)`.
pub fn i_commutator(x: &LatticeOperator, y: &LatticeOperator) -> Result<LatticeOperator> {
    Ok(commutator(x, y)?.scale(C64::new(0.0, 1.0)))
}

/// Compression of `[Δ+V, iA]` to `domain`, computed on a box `margin` sites wider.
///
/// Both factors have range one, so with `margin ≥ 2` the entries coupling sites of
/// `domain` coincide with those of the infinite-lattice commutator.
pub fn commutator_with_generator_compressed(
    domain: &BoxDomain,
    potentials: &[PotentialSpec],
    margin: usize,
) -> Result<nalgebra::DMatrix<C64>> {
    let big = BoxDomain::new(domain.dim(), domain.radius() + margin)?;
    let h = build_hamiltonian(&big, potentials)?;
    let a = build_dilation_generator(&big);
    let c = i_commutator(&h, &a)?.mat.to_dense();
    let emb = domain.embedding_into(&big)?;
    let n = emb.len();
    Ok(nalgebra::DMatrix::from_fn(n, n, |i, j| c[(emb[i], emb[j])]))
}

fn check_margin(domain: &BoxDomain, margin: usize) -> Result<()> {
    if margin >= domain.radius() {
        return Err(Error::MarginTooLarge { margin, radius: domain.radius() });
    }
    Ok(())
}

/// Interior residual of `[Δ, iA] = Σ_k Δ_k(4 − Δ_k)`.
pub fn verify_commutator_identity_laplacian(domain: &BoxDomain, margin: usize) -> Result<f64> {
    check_margin(domain, margin)?;
    let lhs = i_commutator(&build_laplacian(domain), &build_dilation_generator(domain))?;
    let four = CsrMatrix::identity(domain.size()).scale(real(4.0));
    let mut rhs = CsrMatrix::zeros(domain.size());
    for axis in 1..=domain.dim() {
        let dk = build_laplacian_axis(domain, axis)?.mat;
        rhs = rhs.add(&dk.matmul(&four.sub(&dk)));
    }
    Ok(LatticeOperator::new(*domain, lhs.mat.sub(&rhs))?.interior_column_norm(margin))
}

/// `W̃ = diag(w sin(k Σ n_j))` for a Wigner spec.
pub fn build_wigner_tilde(domain: &BoxDomain, spec: &PotentialSpec) -> Result<LatticeOperator> {
    let PotentialSpec::Wigner { w, k } = spec else {
        return Err(Error::InvalidPotential("expected a wigner spec".into()));
    };
    spec.validate()?;
    let d: Vec<f64> = domain.sites().map(|s| w * (k * s.iter().sum::<i64>() as f64).sin()).collect();
    LatticeOperator::new_hermitian(*domain, CsrMatrix::diagonal(&d))
}

/// `U_i = diag(n_i / |n|)`, zero at the origin.
pub fn build_u(domain: &BoxDomain, axis: usize) -> Result<LatticeOperator> {
    check_axis(domain, axis)?;
    let d: Vec<f64> = domain
        .sites()
        .map(|s| {
            let r = euclid(&s);
            if r == 0.0 {
                0.0
            } else {
                s[axis - 1] as f64 / r
            }
        })
        .collect();
    LatticeOperator::new_hermitian(*domain, CsrMatrix::diagonal(&d))
}

/// Interior residual of `[W, iA] = K_W + B_W`.
pub fn verify_commutator_identity_wigner(domain: &BoxDomain, spec: &PotentialSpec, margin: usize) -> Result<f64> {
    check_margin(domain, margin)?;
    let wt = build_wigner_tilde(domain, spec)?.mat;
    let w = build_potential(domain, spec)?;
    let lhs = i_commutator(&w, &build_dilation_generator(domain))?.mat;
    let n = domain.size();
    let mut sum_sym = CsrMatrix::zeros(n);
    let mut b = CsrMatrix::zeros(n);
    for axis in 1..=domain.dim() {
        let s = build_shift(domain, axis)?.mat;
        let sa = s.adjoint();
        let u = build_u(domain, axis)?.mat;
        sum_sym = sum_sym.add(&sa.add(&s));
        let anti = sa.sub(&s);
        b = b.add(&u.matmul(&wt).matmul(&anti)).sub(&anti.matmul(&wt).matmul(&u));
    }
    let k = w.mat.matmul(&sum_sym).add(&sum_sym.matmul(&w.mat)).scale(real(0.5));
    let diff = lhs.sub(&k).sub(&b);
    Ok(LatticeOperator::new(*domain, diff)?.interior_column_norm(margin))
}

/// Interior residual of `[V, iA] = Σ_i (½ − N_i)(V − τ_iV)S_i + (½ + N_i)(V − τ_i*V)S_i*`,
/// where `τ_iV(n) = V(n − e_i)` is evaluated from the potential formula (not truncated).
pub fn verify_commutator_identity_potential(domain: &BoxDomain, spec: &PotentialSpec, margin: usize) -> Result<f64> {
    check_margin(domain, margin)?;
    let v = build_potential(domain, spec)?;
    let lhs = i_commutator(&v, &build_dilation_generator(domain))?.mat;
    let n = domain.size();
    let mut rhs = CsrMatrix::zeros(n);
    for axis in 1..=domain.dim() {
        let s = build_shift(domain, axis)?.mat;
        let mut down = Vec::with_capacity(n);
        let mut up = Vec::with_capacity(n);
        for site in domain.sites() {
            let here = spec.value_at(&site);
            let ni = site[axis - 1] as f64;
            let mut m = site.clone();
            m[axis - 1] -= 1;
            let mut p = site.clone();
            p[axis - 1] += 1;
            down.push((0.5 - ni) * (here - spec.value_at(&m)));
            up.push((0.5 + ni) * (here - spec.value_at(&p)));
        }
        rhs = rhs.add(&CsrMatrix::diagonal(&down).matmul(&s)).add(&CsrMatrix::diagonal(&up).matmul(&s.adjoint()));
    }
    Ok(LatticeOperator::new(*domain, lhs.sub(&rhs))?.interior_column_norm(margin))
}
