//! Almost analytic extensions and the Helffer–Sjöstrand functional calculus, plus the projected
//! weighted commutator gap built from `φ(A/R)`.

use crate::error::{Error, Result};
use crate::jet::{Jet, ORDER};
use crate::lap::{default_candidate_mass, point_spectrum_candidates};
use crate::lattice::{build_dilation_generator, build_hamiltonian, BoxDomain, PotentialSpec};
use crate::mourre::{critical_energies, rho_min_on, Interval};
use crate::quad::gauss7_nodes;
use crate::sparse::CsrMatrix;
use crate::spectral::{dense_norm, eigendecompose, eigendecompose_matrix, min_eigenvalue, BandedLu};
use crate::weights::{bracket, bracket_jet, Phi, WeightSpec};
use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

fn h(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else {
        (-1.0 / t).exp()
    }
}

fn h_prime(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else {
        h(t) / (t * t)
    }
}

/// Smooth step: 0 for `t ≤ 0`, 1 for `t ≥ 1`.
pub fn smooth_step(t: f64) -> f64 {
    let (a, b) = (h(t), h(1.0 - t));
    a / (a + b)
}

pub fn smooth_step_prime(t: f64) -> f64 {
    if t <= 0.0 || t >= 1.0 {
        return 0.0;
    }
    let (a, b) = (h(t), h(1.0 - t));
    (h_prime(t) * b + a * h_prime(1.0 - t)) / ((a + b) * (a + b))
}

/// Cutoff `≡ 1` on `|u| ≤ 1/2` and `≡ 0` on `|u| ≥ 1`.
pub fn chi(u: f64) -> f64 {
    smooth_step(2.0 * (1.0 - u.abs()))
}

pub fn chi_prime(u: f64) -> f64 {
    -2.0 * u.signum() * smooth_step_prime(2.0 * (1.0 - u.abs()))
}

/// Functions with analytic derivatives available to the calculus.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum HsFunction {
    /// `⟨x⟩^{−1}`.
    InverseBracket,
    /// `𝒲_{M+1}^{−p}(x/R)`.
    Composite { spec: WeightSpec },
    /// The bounded increasing φ built from `M`, `p`.
    Phi {
        #[serde(rename = "M")]
        m: usize,
        p: f64,
    },
    /// φ′.
    PhiPrime {
        #[serde(rename = "M")]
        m: usize,
        p: f64,
    },
    Constant { value: f64 },
}

impl HsFunction {
    /// Symbol order ρ: `|f^{(j)}(x)| ≲ ⟨x⟩^{ρ−j}`.
    pub fn rho(&self) -> f64 {
        match self {
            HsFunction::InverseBracket | HsFunction::PhiPrime { .. } => -1.0,
            HsFunction::Composite { .. } => -0.5,
            HsFunction::Phi { .. } | HsFunction::Constant { .. } => 0.0,
        }
    }
}

/// `φ̃(x+iy) = χ(y/⟨x⟩) Σ_{j≤N} φ^{(j)}(x)(iy)^j/j!`.
#[derive(Clone, Debug)]
pub struct AlmostAnalyticExtension {
    f: HsFunction,
    phi: Option<Phi>,
    order: usize,
}

impl AlmostAnalyticExtension {
    /// `∂̄φ̃` needs `φ^{(N+1)}`, so `order + 1` must be a supplied derivative.
    pub fn new(f: HsFunction, order: usize) -> Result<AlmostAnalyticExtension> {
        if order + 1 >= ORDER {
            return Err(Error::Domain(format!("derivatives are supplied up to order {}, extension order {order} needs one more", ORDER - 1)));
        }
        let phi = match &f {
            HsFunction::Phi { m, p } => Some(Phi::new(*m, *p)?),
            HsFunction::PhiPrime { p, .. } if *p <= 0.5 => return Err(Error::Domain(format!("p = {p} must exceed 1/2"))),
            HsFunction::Composite { spec } => {
                spec.validate()?;
                None
            }
            _ => None,
        };
        Ok(AlmostAnalyticExtension { f, phi, order })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn rho(&self) -> f64 {
        self.f.rho()
    }

    pub fn function(&self) -> &HsFunction {
        &self.f
    }

    /// `φ^{(j)}(x)` for `j < ORDER`.
    pub fn derivatives(&self, x: f64) -> Result<[f64; ORDER]> {
        let jet = match &self.f {
            HsFunction::InverseBracket => bracket_jet(Jet::variable(x)).powf(-1.0),
            HsFunction::Composite { spec } => spec.composite_jet(Jet::variable(x)),
            HsFunction::Phi { .. } => self.phi.as_ref().expect("prepared in new").jet(x)?,
            HsFunction::PhiPrime { m, p } => crate::weights::phi_prime_jet(*m, *p, Jet::variable(x)),
            HsFunction::Constant { value } => Jet::constant(*value),
        };
        let d = jet.derivatives();
        if d.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(x));
        }
        Ok(d)
    }

    pub fn eval(&self, x: f64, y: f64) -> Result<C64> {
        let d = self.derivatives(x)?;
        Ok(C64::new(chi(y / bracket(x)), 0.0) * taylor(&d, self.order, y))
    }

    pub fn dbar(&self, x: f64, y: f64) -> Result<C64> {
        Ok(dbar_from(&self.derivatives(x)?, self.order, x, y))
    }

    pub fn in_support(x: f64, y: f64) -> bool {
        y.abs() < bracket(x)
    }
}

fn taylor(d: &[f64; ORDER], order: usize, y: f64) -> C64 {
    let iy = C64::new(0.0, y);
    let mut pow = C64::new(1.0, 0.0);
    let mut fact = 1.0;
    let mut s = C64::new(0.0, 0.0);
    for (j, dj) in d.iter().enumerate().take(order + 1) {
        if j > 0 {
            pow *= iy;
            fact *= j as f64;
        }
        s += pow * (dj / fact);
    }
    s
}

/// `∂̄ = ½(∂_x + i∂_y)` of the extension. The Taylor sum telescopes to its top term.
fn dbar_from(d: &[f64; ORDER], order: usize, x: f64, y: f64) -> C64 {
    let b = bracket(x);
    let u = y / b;
    if u.abs() >= 1.0 {
        return C64::new(0.0, 0.0);
    }
    let cp = chi_prime(u);
    let mut out = C64::new(0.0, 0.0);
    if cp != 0.0 {
        let dchi = C64::new(-y * x / (b * b * b), 1.0 / b) * (0.5 * cp);
        out += dchi * taylor(d, order, y);
    }
    let c = chi(u);
    if c != 0.0 {
        let fact: f64 = (1..=order).map(|i| i as f64).product();
        out += C64::new(0.0, y).powu(order as u32) * (0.5 * c * d[order + 1] / fact);
    }
    out
}

/// Empirical `c_ℓ = sup |∂̄φ̃(x+iy)| / (⟨x⟩^{ρ−1−ℓ}|y|^ℓ)` over an `n × n` grid with
/// `x = sinh(s)`, `s ∈ [−8, 8]`, and `y/⟨x⟩` log-spaced in `[1e−3, 1)`.
pub fn fit_constant(ext: &AlmostAnalyticExtension, ell: usize, n: usize) -> Result<f64> {
    if n < 2 {
        return Err(Error::Domain("grid needs at least two points".into()));
    }
    let rho = ext.rho();
    let mut best = 0.0f64;
    for i in 0..n {
        let x = (-8.0 + 16.0 * i as f64 / (n - 1) as f64).sinh();
        let d = ext.derivatives(x)?;
        let b = bracket(x);
        for j in 0..n {
            let v = 10f64.powf(-3.0 + 3.0 * j as f64 / n as f64);
            let y = v * b;
            let val = dbar_from(&d, ext.order, x, y).norm();
            best = best.max(val / (b.powf(rho - 1.0 - ell as f64) * y.powi(ell as i32)));
        }
    }
    Ok(best)
}

#[derive(Clone, Debug)]
pub struct HsResult {
    pub matrix: DMatrix<C64>,
    pub nodes: usize,
}

struct Column {
    s: (f64, f64),
    v: (f64, f64),
    v_cells: usize,
}

fn gershgorin(t: &CsrMatrix) -> f64 {
    (0..t.dim()).map(|i| t.row(i).map(|(_, v)| v.norm()).sum::<f64>()).fold(0.0, f64::max)
}

/// Cells across the ramp `1/2 ≤ |y|/⟨x⟩ ≤ 1` of the cutoff, where `χ′` is steep.
const RAMP_CELLS: usize = 8;

/// Mesh in `(s, v)` with `x = sinh s`, `y = v cosh s = v⟨x⟩`, so `dx dy = cosh²s ds dv`.
///
/// Near the spectrum of `T` the resolvent varies on the scale `y`, so the `s` width of a cell in
/// the band `v ∈ [2^{−j−1}, 2^{−j}]` is proportional to `2^{−j}`. The band `[0, 2^{−6}]` carries
/// the weight `|y|^N` and shares the finest width. Far from the spectrum the integrand is smooth
/// and a coarse mesh suffices. Every level halves all widths.
fn mesh(x_near: f64, s_max: f64, level: u32) -> Vec<Column> {
    let scale = 0.5f64.powi(level as i32);
    let sub = 1usize << level;
    let s_near = x_near.asinh();
    let mut cols = Vec::new();
    let mut bands: Vec<(f64, f64)> = (0..6).map(|j| (0.5f64.powi(j + 1), 0.5f64.powi(j))).collect();
    bands.push((0.0, 1.0 / 64.0));
    for &(va, vb) in &bands {
        let width = 0.5 * vb.max(1.0 / 32.0) * scale;
        let n = (2.0 * s_near / width).ceil() as usize;
        let w = 2.0 * s_near / n as f64;
        let v_cells = if vb == 1.0 { RAMP_CELLS * sub } else { sub };
        for i in 0..n {
            let a = -s_near + i as f64 * w;
            cols.push(Column { s: (a, a + w), v: (va, vb), v_cells });
        }
    }
    let n = ((s_max - s_near) / scale).ceil() as usize;
    let w = (s_max - s_near) / n as f64;
    for side in [-1.0, 1.0] {
        for i in 0..n {
            let a = s_near + i as f64 * w;
            let (lo, hi) = if side > 0.0 { (a, a + w) } else { (-a - w, -a) };
            cols.push(Column { s: (lo, hi), v: (0.0, 0.5), v_cells: 2 * sub });
            cols.push(Column { s: (lo, hi), v: (0.5, 1.0), v_cells: RAMP_CELLS * sub });
        }
    }
    cols
}

/// `(T − z)^{−1}` column by column.
pub fn resolvent_matrix(t: &CsrMatrix, z: C64) -> Result<DMatrix<C64>> {
    let n = t.dim();
    let lu = BandedLu::factor(t, z)?;
    let mut out = DMatrix::<C64>::zeros(n, n);
    let mut e = vec![C64::new(0.0, 0.0); n];
    for j in 0..n {
        e[j] = C64::new(1.0, 0.0);
        let col = lu.solve(&e)?;
        e[j] = C64::new(0.0, 0.0);
        for i in 0..n {
            out[(i, j)] = col[i];
        }
    }
    Ok(out)
}

/// `φ^{(k)}(T) = (−1)^k (k!/π) ∫∫ ∂̄φ̃(z) (T − z)^{−1−k} dx dy`.
///
/// Only `y > 0` is integrated: for real φ and Hermitian `T` the lower half-plane contributes
/// the adjoint. Columns of the mesh are independent and are summed in mesh order.
pub fn hs_apply(t: &CsrMatrix, ext: &AlmostAnalyticExtension, k: usize, level: u32) -> Result<HsResult> {
    let n = t.dim();
    let defect = t.hermitian_defect();
    if defect > 1e-12 * t.max_abs().max(1.0) {
        return Err(Error::NotHermitian(defect));
    }
    let decay = k as f64 - ext.rho();
    if decay <= 0.0 {
        return Err(Error::Precondition(format!("need ρ < k, got ρ = {} and k = {k}", ext.rho())));
    }
    let x_near = gershgorin(t) + 2.0;
    let s_max = (28.0 / decay).min(60.0).max(x_near.asinh() + 1.0);
    let cols = mesh(x_near, s_max, level);
    let order = ext.order;
    let parts: Vec<(DMatrix<C64>, usize)> = cols
        .par_iter()
        .map(|col| -> Result<(DMatrix<C64>, usize)> {
            let mut acc = DMatrix::<C64>::zeros(n, n);
            let mut count = 0;
            for (s, ws) in gauss7_nodes(col.s.0, col.s.1) {
                let x = s.sinh();
                let c = s.cosh();
                let d = ext.derivatives(x)?;
                let dv = (col.v.1 - col.v.0) / col.v_cells as f64;
                for cell in 0..col.v_cells {
                    let va = col.v.0 + cell as f64 * dv;
                    for (v, wv) in gauss7_nodes(va, va + dv) {
                        let y = v * c;
                        let db = dbar_from(&d, order, x, y);
                        if db == C64::new(0.0, 0.0) {
                            continue;
                        }
                        let r = resolvent_matrix(t, C64::new(x, y))?;
                        let mut rk = r.clone();
                        for _ in 0..k {
                            rk = &rk * &r;
                        }
                        acc += rk * (db * (ws * wv * c * c));
                        count += 1;
                    }
                }
            }
            Ok((acc, count))
        })
        .collect::<Result<_>>()?;
    let mut m = DMatrix::<C64>::zeros(n, n);
    let mut nodes = 0;
    for (p, c) in parts {
        m += p;
        nodes += c;
    }
    let fact: f64 = (1..=k).map(|i| i as f64).product();
    let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
    let matrix = (&m + m.adjoint()) * C64::new(sign * fact / PI, 0.0);
    Ok(HsResult { matrix, nodes })
}

/// `φ^{(k)}(T)` through the eigendecomposition, the oracle for `hs_apply`.
pub fn oracle_apply(t: &CsrMatrix, ext: &AlmostAnalyticExtension, k: usize) -> Result<DMatrix<C64>> {
    if k >= ORDER {
        return Err(Error::Domain(format!("derivative order {k} not available")));
    }
    let es = eigendecompose_matrix(&t.to_dense())?;
    let mut d = Vec::with_capacity(es.dim());
    for &l in &es.values {
        d.push(C64::new(ext.derivatives(l)?[k], 0.0));
    }
    Ok(es.from_diagonal(&d))
}

#[derive(Clone, Debug, Serialize)]
pub struct HsConvergence {
    pub levels: Vec<u32>,
    pub nodes: Vec<usize>,
    pub errors: Vec<f64>,
}

impl HsConvergence {
    /// Each refinement reduces the error by at least 2×, unless the error is already at `floor`.
    pub fn halves_until(&self, floor: f64) -> bool {
        self.errors.windows(2).all(|w| w[0] <= floor || w[1] <= 0.5 * w[0] || w[1] <= floor)
    }
}

/// Oracle errors `‖hs_apply − oracle‖` at each mesh level.
pub fn hs_convergence(t: &CsrMatrix, ext: &AlmostAnalyticExtension, k: usize, levels: &[u32]) -> Result<HsConvergence> {
    let oracle = oracle_apply(t, ext, k)?;
    let mut nodes = Vec::new();
    let mut errors = Vec::new();
    for &l in levels {
        let r = hs_apply(t, ext, k, l)?;
        errors.push(dense_norm(&(r.matrix - &oracle)));
        nodes.push(r.nodes);
    }
    Ok(HsConvergence { levels: levels.to_vec(), nodes, errors })
}

/// Smooth window `≡ 1` on `[lo, hi]`, vanishing outside `(lo − ramp, hi + ramp)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlateauWindow {
    pub lo: f64,
    pub hi: f64,
    pub ramp: f64,
}

impl PlateauWindow {
    pub fn value(&self, e: f64) -> f64 {
        if e < self.lo {
            smooth_step((e - self.lo + self.ramp) / self.ramp)
        } else if e > self.hi {
            smooth_step((self.hi + self.ramp - e) / self.ramp)
        } else {
            1.0
        }
    }

    pub fn support(&self) -> Interval {
        Interval { lo: self.lo - self.ramp, hi: self.hi + self.ramp }
    }

    /// `self · other = self`, i.e. the support of `self` lies in the plateau of `other`.
    pub fn nests_in(&self, other: &PlateauWindow) -> bool {
        let eps = 1e-12 * (1.0 + other.lo.abs().max(other.hi.abs()));
        other.lo <= self.lo - self.ramp + eps && self.hi + self.ramp <= other.hi + eps
    }

    fn validate(&self) -> Result<()> {
        if !(self.lo <= self.hi) || !(self.ramp > 0.0) {
            return Err(Error::Domain(format!("invalid window {self:?}")));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GapConfig {
    pub d: usize,
    /// Radius of the box carrying the eigenvectors of `H`.
    pub r_box: usize,
    /// Radius of the box carrying `A`; must exceed `r_box`.
    pub a_box: usize,
    #[serde(default)]
    pub potentials: Vec<PotentialSpec>,
    pub theta: PlateauWindow,
    pub eta: PlateauWindow,
    pub chi: PlateauWindow,
    pub weight: WeightSpec,
    pub r_grid: Vec<f64>,
    pub tol: f64,
    #[serde(default = "default_candidate_mass")]
    pub candidate_mass: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct GapRow {
    pub r: f64,
    pub min_gap: f64,
    pub rhs_norm: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct GapSearch {
    pub gamma: f64,
    pub rows: Vec<GapRow>,
    /// First `R` of the grid with `min_gap ≥ −tol`.
    pub found: Option<f64>,
}

/// Minimal eigenvalue of `θP⊥( i[H, φ(A/R)] − (γ/3R) φ′(A/R) )P⊥θ` for each `R` of the grid.
///
/// The eigenvectors of `H` live on the box `r_box` and are embedded into the box `a_box`, where
/// `H` and `A` act, so the commutator is the infinite-lattice one evaluated on trial vectors.
/// `γ` is the minimum of `ϱ_Δ^A` over the support of θ. An exhausted grid is a finding, not an
/// error.
pub fn weighted_commutator_gap(cfg: &GapConfig) -> Result<GapSearch> {
    for w in [&cfg.theta, &cfg.eta, &cfg.chi] {
        w.validate()?;
    }
    if !cfg.theta.nests_in(&cfg.eta) || !cfg.eta.nests_in(&cfg.chi) {
        return Err(Error::Precondition("bumps must satisfy ηθ = θ and χη = η".into()));
    }
    if cfg.weight.p <= 0.5 {
        return Err(Error::Precondition(format!("p = {} must exceed 1/2", cfg.weight.p)));
    }
    if cfg.a_box <= cfg.r_box {
        return Err(Error::Domain("the A box must be larger than the H box".into()));
    }
    let supp = cfg.theta.support();
    for p in &cfg.potentials {
        if let PotentialSpec::Wigner { k, .. } = p {
            if !critical_energies(cfg.d, *k)?.admits(&supp) {
                return Err(Error::Domain(format!("window ({}, {}) is not inside μ(H)", supp.lo, supp.hi)));
            }
        }
    }
    let gamma = rho_min_on(&supp, cfg.d)?;
    let small = BoxDomain::new(cfg.d, cfg.r_box)?;
    let big = BoxDomain::new(cfg.d, cfg.a_box)?;
    let es = eigendecompose(&build_hamiltonian(&small, &cfg.potentials)?)?;
    let point = point_spectrum_candidates(&es, &small, supp.lo, supp.hi, cfg.candidate_mass);
    let idx: Vec<usize> = es.indices_in(supp.lo, supp.hi).into_iter().filter(|j| !point.contains(j)).collect();
    let emb = small.embedding_into(&big)?;
    let nb = big.size();
    let mut v = DMatrix::<C64>::zeros(nb, idx.len());
    for (i, &ib) in emb.iter().enumerate() {
        for (j, &col) in idx.iter().enumerate() {
            v[(ib, j)] = es.vectors[(i, col)];
        }
    }
    let th: Vec<f64> = idx.iter().map(|&j| cfg.theta.value(es.values[j])).collect();
    let h_big = build_hamiltonian(&big, &cfg.potentials)?.mat.to_dense();
    let a_es = eigendecompose(&build_dilation_generator(&big))?;
    let phi = Phi::new(cfg.weight.m, cfg.weight.p)?;
    let rows: Vec<GapRow> = cfg
        .r_grid
        .iter()
        .map(|&r| -> Result<GapRow> {
            let mut pv = Vec::with_capacity(nb);
            for &l in &a_es.values {
                pv.push(C64::new(phi.value(l / r)?, 0.0));
            }
            let f = a_es.from_diagonal(&pv);
            let fp = a_es.apply_function(|l| crate::weights::phi_prime(cfg.weight.m, cfg.weight.p, l / r))?;
            let comm = (&h_big * &f - &f * &h_big) * C64::new(0.0, 1.0);
            let scale = gamma / (3.0 * r);
            let mut lhs = v.adjoint() * comm * &v;
            let mut rhs = v.adjoint() * fp * &v * C64::new(scale, 0.0);
            for a in 0..th.len() {
                for b in 0..th.len() {
                    let w = th[a] * th[b];
                    lhs[(a, b)] *= w;
                    rhs[(a, b)] *= w;
                }
            }
            let min_gap = min_eigenvalue(&(lhs - &rhs));
            Ok(GapRow { r, min_gap, rhs_norm: dense_norm(&rhs) })
        })
        .collect::<Result<_>>()?;
    let found = rows.iter().find(|row| row.min_gap >= -cfg.tol).map(|row| row.r);
    Ok(GapSearch { gamma, rows, found })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lap::DEFAULT_CANDIDATE_MASS;
    use crate::lattice::build_dilation_generator;

    #[test]
    fn cutoff_profile() {
        assert_eq!(chi(0.0), 1.0);
        assert_eq!(chi(0.5), 1.0);
        assert_eq!(chi(-0.4), 1.0);
        assert_eq!(chi(1.0), 0.0);
        assert!(chi(0.75) > 0.0 && chi(0.75) < 1.0);
        let hh = 1e-6;
        for u in [0.6, 0.75, -0.8, 0.95] {
            let fd = (chi(u + hh) - chi(u - hh)) / (2.0 * hh);
            assert!((chi_prime(u) - fd).abs() < 1e-6, "{u}");
        }
    }

    #[test]
    fn extension_basic_invariants() {
        let ext = AlmostAnalyticExtension::new(HsFunction::InverseBracket, 4).unwrap();
        for x in [-3.0, 0.0, 0.7, 20.0] {
            assert_eq!(ext.eval(x, 0.0).unwrap().re, 1.0 / bracket(x));
            assert_eq!(ext.eval(x, 0.0).unwrap().im, 0.0);
            let up = ext.eval(x, 0.3).unwrap();
            let down = ext.eval(x, -0.3).unwrap();
            assert!((up - down.conj()).norm() < 1e-15);
            assert_eq!(ext.dbar(x, 1.01 * bracket(x)).unwrap().norm(), 0.0);
        }
        assert!(AlmostAnalyticExtension::new(HsFunction::InverseBracket, ORDER - 1).is_err());
    }

    #[test]
    fn constant_extension_lives_on_cutoff_ramp() {
        let ext = AlmostAnalyticExtension::new(HsFunction::Constant { value: 1.0 }, 3).unwrap();
        assert_eq!(ext.dbar(0.3, 0.2).unwrap().norm(), 0.0);
        assert!(ext.dbar(0.0, 0.75).unwrap().norm() > 0.0);
    }

    #[test]
    fn dbar_matches_finite_differences() {
        let ext = AlmostAnalyticExtension::new(HsFunction::InverseBracket, 3).unwrap();
        let hh = 1e-5;
        for (x, y) in [(0.3, 0.2), (1.0, 1.0), (-2.0, 1.5)] {
            let dx = (ext.eval(x + hh, y).unwrap() - ext.eval(x - hh, y).unwrap()) / (2.0 * hh);
            let dy = (ext.eval(x, y + hh).unwrap() - ext.eval(x, y - hh).unwrap()) / (2.0 * hh);
            let fd = (dx + C64::new(0.0, 1.0) * dy) * 0.5;
            assert!((fd - ext.dbar(x, y).unwrap()).norm() < 1e-7, "{x} {y}");
        }
    }

    #[test]
    fn fitted_constants_stable() {
        let ext = AlmostAnalyticExtension::new(HsFunction::InverseBracket, 4).unwrap();
        for ell in 0..=2 {
            let a = fit_constant(&ext, ell, 80).unwrap();
            let b = fit_constant(&ext, ell, 160).unwrap();
            assert!(a.is_finite() && b / a < 1.1, "{ell} {a} {b}");
        }
    }

    #[test]
    fn scalar_zero_operator() {
        let ext = AlmostAnalyticExtension::new(HsFunction::InverseBracket, 4).unwrap();
        let t = CsrMatrix::diagonal(&[0.0]);
        let r = hs_apply(&t, &ext, 0, 0).unwrap();
        assert!((r.matrix[(0, 0)] - C64::new(1.0, 0.0)).norm() < 1e-6, "{}", r.matrix[(0, 0)]);
    }

    #[test]
    fn generator_oracle_agreement() {
        let domain = BoxDomain::new(1, 6).unwrap();
        let a = build_dilation_generator(&domain).mat;
        let ext = AlmostAnalyticExtension::new(HsFunction::Composite { spec: WeightSpec::new(0, 1.0) }, 5).unwrap();
        let conv = hs_convergence(&a, &ext, 0, &[0, 1]).unwrap();
        assert!(conv.errors[1] <= 1e-6, "{:?}", conv.errors);
        assert!(conv.halves_until(1e-10), "{:?}", conv.errors);
    }

    #[test]
    fn precondition_on_decay() {
        let ext = AlmostAnalyticExtension::new(HsFunction::Constant { value: 2.0 }, 3).unwrap();
        assert!(hs_apply(&CsrMatrix::diagonal(&[0.0]), &ext, 0, 0).is_err());
    }

    #[test]
    fn plateau_nesting() {
        let theta = PlateauWindow { lo: 1.9, hi: 2.1, ramp: 0.05 };
        let eta = PlateauWindow { lo: 1.85, hi: 2.15, ramp: 0.05 };
        assert!(theta.nests_in(&eta));
        assert!(!eta.nests_in(&theta));
        assert_eq!(theta.value(2.0), 1.0);
        assert_eq!(theta.value(1.85), 0.0);
    }

    pub(crate) fn gap_cfg() -> GapConfig {
        GapConfig {
            d: 1,
            r_box: 16,
            a_box: 32,
            potentials: vec![],
            theta: PlateauWindow { lo: 1.85, hi: 2.15, ramp: 0.05 },
            eta: PlateauWindow { lo: 1.75, hi: 2.25, ramp: 0.05 },
            chi: PlateauWindow { lo: 1.65, hi: 2.35, ramp: 0.05 },
            weight: WeightSpec::new(0, 1.0),
            r_grid: vec![1.0, 2.0, 4.0, 8.0, 16.0, 32.0],
            tol: 1e-8,
            candidate_mass: DEFAULT_CANDIDATE_MASS,
        }
    }

    #[test]
    fn free_gap_search_succeeds() {
        let res = weighted_commutator_gap(&gap_cfg()).unwrap();
        assert!(res.found.is_some(), "{:?}", res.rows);
        assert!((res.gamma - 3.96).abs() < 1e-12);
    }

    #[test]
    fn gap_rejects_broken_nesting() {
        let mut cfg = gap_cfg();
        cfg.eta = PlateauWindow { lo: 1.9, hi: 2.1, ramp: 0.05 };
        assert!(matches!(weighted_commutator_gap(&cfg), Err(Error::Precondition(_))));
        let mut cfg = gap_cfg();
        cfg.weight.p = 0.5;
        assert!(weighted_commutator_gap(&cfg).is_err());
    }

    #[test]
    fn strong_wigner_destroys_gap() {
        let mut cfg = gap_cfg();
        cfg.potentials = vec![PotentialSpec::Wigner { w: 12.0, k: PI / 2.0 }];
        let res = weighted_commutator_gap(&cfg).unwrap();
        assert!(res.found.is_none(), "{:?}", res.rows);
        assert!(res.rows.iter().all(|r| r.min_gap < 0.0));
    }
}
