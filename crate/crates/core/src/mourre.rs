//! Threshold sets, Mourre-window arithmetic, the ρ-function of Δ, the `b_k` decomposition,
//! vanishing checks for `W̃` and numerical Mourre estimates on energy windows.
//!
//! A finite box cannot see compactness. `mourre_gap` reports the minimal eigenvalue of the
//! commutator on the whole spectral subspace of the truncation, so the contribution of `K`
//! shows up as a deficit carried by boundary-localized eigenvectors; the trend across radii is
//! the observable.

use crate::error::{Error, Result};
use crate::lattice::{
    build_dilation_generator, build_hamiltonian, build_laplacian, build_laplacian_axis, build_wigner_tilde, euclid,
    i_commutator, BoxDomain, LatticeOperator, PotentialSpec,
};
use crate::monotone::coordinate_subspace;
use crate::sparse::CsrMatrix;
use crate::spectral::{dense_norm, eigendecompose, min_eigenvalue};
use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdSet {
    pub d: usize,
    pub values: Vec<f64>,
}

/// `{4k : k = 0..d}`.
pub fn thresholds(d: usize) -> Result<ThresholdSet> {
    if d == 0 {
        return Err(Error::Domain("dimension must be at least 1".into()));
    }
    Ok(ThresholdSet { d, values: (0..=d).map(|k| 4.0 * k as f64).collect() })
}

/// Open interval `(lo, hi)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Interval> {
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::Domain(format!("empty or invalid interval ({lo}, {hi})")));
        }
        Ok(Interval { lo, hi })
    }

    pub fn mid(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn contains_interval(&self, other: &Interval) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriticalEnergies {
    pub e_minus: f64,
    pub e_plus: f64,
    pub e_of_k: f64,
    /// The set μ(H) as a disjoint union of open intervals.
    pub mu: Vec<Interval>,
}

impl CriticalEnergies {
    pub fn admits(&self, i: &Interval) -> bool {
        self.mu.iter().any(|m| m.contains_interval(i))
    }
}

/// `E_±(k) = 2 ± 2cos(k/2)`, the two-branch `E(k)` and the window set μ(H).
pub fn critical_energies(d: usize, k: f64) -> Result<CriticalEnergies> {
    if d == 0 {
        return Err(Error::Domain("dimension must be at least 1".into()));
    }
    if !(k > 0.0 && k < 2.0 * PI) || k == PI {
        return Err(Error::Domain(format!("k = {k} must lie in (0, 2π) without π")));
    }
    let c = (k / 2.0).cos();
    let e_minus = 2.0 - 2.0 * c;
    let e_plus = 2.0 + 2.0 * c;
    let e_of_k = if k < PI { 4.0 - 4.0 * c } else { 4.0 + 4.0 * c };
    let top = 4.0 * d as f64;
    let mu = if d == 1 {
        let (a, b) = if e_minus < e_plus { (e_minus, e_plus) } else { (e_plus, e_minus) };
        vec![Interval { lo: 0.0, hi: a }, Interval { lo: a, hi: b }, Interval { lo: b, hi: 4.0 }]
    } else {
        vec![Interval { lo: 0.0, hi: e_of_k }, Interval { lo: top - e_of_k, hi: top }]
    };
    Ok(CriticalEnergies { e_minus, e_plus, e_of_k, mu })
}

/// Band index `k` with `E ∈ (4(k−1), 4k)`.
pub fn band_index(e: f64, d: usize) -> Result<usize> {
    let top = 4.0 * d as f64;
    if !(e > 0.0 && e < top) || (e / 4.0).fract() == 0.0 {
        return Err(Error::Domain(format!("energy {e} is a threshold or outside (0, {top})")));
    }
    Ok((e / 4.0).floor() as usize + 1)
}

/// `ϱ_Δ^A(E) = −(E − 𝐭_{k−1})(E − 𝐭_k)`.
pub fn rho_delta(e: f64, d: usize) -> Result<f64> {
    let k = band_index(e, d)? as f64;
    Ok(-(e - 4.0 * (k - 1.0)) * (e - 4.0 * k))
}

/// Minimum of `ϱ_Δ^A` over the closure of `i`, which must sit inside one band.
pub fn rho_min_on(i: &Interval, d: usize) -> Result<f64> {
    let k = band_index(i.mid(), d)?;
    let (a, b) = (4.0 * (k as f64 - 1.0), 4.0 * k as f64);
    if i.lo < a || i.hi > b {
        return Err(Error::Domain(format!("interval ({}, {}) crosses a threshold", i.lo, i.hi)));
    }
    let f = |e: f64| -(e - a) * (e - b);
    Ok(f(i.lo).min(f(i.hi)))
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct BkReport {
    pub residual: f64,
    pub min_eigenvalue: f64,
}

/// `[Δ, iA] = −(Δ−𝐭_{k−1})(Δ−𝐭_k) + b_k(Δ)` with
/// `b_k(Δ) = −8(k−1)Δ + 16k(k−1) + Σ_{i≠j} Δ_iΔ_j`.
///
/// Returns the interior residual and the minimal eigenvalue of `b_k(Δ)` compressed to the
/// interior sites.
pub fn verify_bk_decomposition(domain: &BoxDomain, k_band: usize, margin: usize) -> Result<BkReport> {
    let d = domain.dim();
    if k_band == 0 || k_band > d {
        return Err(Error::Domain(format!("band {k_band} outside 1..={d}")));
    }
    if margin < 2 || margin >= domain.radius() {
        return Err(Error::MarginTooLarge { margin, radius: domain.radius() });
    }
    let n = domain.size();
    let k = k_band as f64;
    let id = CsrMatrix::identity(n);
    let delta = build_laplacian(domain);
    let lhs = i_commutator(&delta, &build_dilation_generator(domain))?.mat;
    let axes: Vec<CsrMatrix> = (1..=d).map(|a| build_laplacian_axis(domain, a).map(|o| o.mat)).collect::<Result<_>>()?;
    let mut b = delta.mat.scale(re(-8.0 * (k - 1.0))).add(&id.scale(re(16.0 * k * (k - 1.0))));
    for i in 0..d {
        for j in 0..d {
            if i != j {
                b = b.add(&axes[i].matmul(&axes[j]));
            }
        }
    }
    let lo = delta.mat.sub(&id.scale(re(4.0 * (k - 1.0))));
    let hi = delta.mat.sub(&id.scale(re(4.0 * k)));
    let rhs = lo.matmul(&hi).scale(re(-1.0)).add(&b);
    let residual = LatticeOperator::new(*domain, lhs.sub(&rhs))?.interior_column_norm(margin);
    let p = coordinate_subspace(n, &domain.interior(margin));
    let min_eigenvalue = min_eigenvalue(&(p.adjoint() * b.to_dense() * &p));
    Ok(BkReport { residual, min_eigenvalue })
}

fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// `exp(1 − 1/(1−u²))` on `|u| < 1`, zero elsewhere; peak value 1 at `u = 0`.
pub fn bump(u: f64) -> f64 {
    if u.abs() >= 1.0 {
        0.0
    } else {
        (1.0 - 1.0 / (1.0 - u * u)).exp()
    }
}

/// The bump rescaled to the interval `i`.
pub fn bump_on(i: &Interval, e: f64) -> f64 {
    bump((2.0 * e - i.lo - i.hi) / (i.hi - i.lo))
}

#[derive(Clone, Debug, Serialize)]
pub struct VanishingReport {
    pub k: f64,
    pub interval: Interval,
    pub radii: Vec<usize>,
    pub norms: Vec<f64>,
    /// `norms[last] / norms[last−1]`.
    pub last_ratio: f64,
    pub decays: bool,
}

/// `‖Q θ(Δ) W̃ θ(Δ) Q‖` on each radius, where `θ` is the bump on `i` and
/// `Q = diag(bump(|n|/(3R/4)))` is a smooth window keeping the measurement away from the
/// Dirichlet boundary. No window check is made, so this also serves the control runs.
pub fn vanishing_norms(d: usize, w: f64, k: f64, i: &Interval, radii: &[usize]) -> Result<Vec<f64>> {
    let spec = PotentialSpec::Wigner { w, k };
    spec.validate()?;
    radii
        .par_iter()
        .map(|&r| {
            let domain = BoxDomain::new(d, r)?;
            let es = eigendecompose(&build_laplacian(&domain))?;
            let theta = es.apply_function(|e| bump_on(i, e))?;
            let wt = build_wigner_tilde(&domain, &spec)?.mat.to_dense();
            let q: Vec<f64> = domain.sites().map(|s| bump(euclid(&s) / (0.75 * r as f64))).collect();
            let mut m = &theta * wt * &theta;
            for a in 0..m.nrows() {
                for b in 0..m.ncols() {
                    m[(a, b)] *= q[a] * q[b];
                }
            }
            Ok(dense_norm(&m))
        })
        .collect()
}

/// Vanishing check for `θ(Δ)W̃θ(Δ)` with `θ` supported in `i ⊂ μ(H)`.
///
/// Verdict: the last norm is at round-off level (≤ 1e−12) or the last ratio is ≤ 0.7.
pub fn verify_vanishing(d: usize, w: f64, k: f64, i: &Interval, radii: &[usize]) -> Result<VanishingReport> {
    let crit = critical_energies(d, k)?;
    if !crit.admits(i) {
        return Err(Error::Domain(format!(
            "window ({}, {}) is not inside μ(H) = {:?}",
            i.lo, i.hi, crit.mu
        )));
    }
    if radii.len() < 2 {
        return Err(Error::Domain("need at least two radii".into()));
    }
    let norms = vanishing_norms(d, w, k, i, radii)?;
    let n = norms.len();
    let last_ratio = if norms[n - 2] == 0.0 { 0.0 } else { norms[n - 1] / norms[n - 2] };
    let decays = norms[n - 1] <= 1e-12 || last_ratio <= 0.7;
    Ok(VanishingReport { k, interval: *i, radii: radii.to_vec(), norms, last_ratio, decays })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MourreWindow {
    pub e: f64,
    pub interval: Interval,
    /// Minimal eigenvalue of `E_I(H)[H, iA]E_I(H)` on the range of `E_I(H)`.
    /// `None` when the truncation has no eigenvalue in `I`.
    pub gamma_lower: Option<f64>,
    /// `max(0, min_I ϱ_Δ^A − gamma_lower)`: the size of the finite-rank correction needed to
    /// reach the free Mourre constant.
    pub compact_norm: f64,
    pub states: usize,
}

/// Mourre estimate of the truncation of `Δ + Σ potentials` on `i`.
///
/// `[H, iA]` is computed on a box `margin` sites wider and compressed back, so the commutator
/// carries no spurious boundary terms. With a Wigner term, `i` must lie in μ(H); otherwise it
/// must avoid the thresholds.
pub fn mourre_gap(domain: &BoxDomain, potentials: &[PotentialSpec], i: &Interval, margin: usize) -> Result<MourreWindow> {
    let d = domain.dim();
    for p in potentials {
        if let PotentialSpec::Wigner { k, .. } = p {
            if !critical_energies(d, *k)?.admits(i) {
                return Err(Error::Domain(format!("window ({}, {}) is not inside μ(H)", i.lo, i.hi)));
            }
        }
    }
    let rho = rho_min_on(i, d)?;
    let h = build_hamiltonian(domain, potentials)?;
    let es = eigendecompose(&h)?;
    let idx = es.indices_in(i.lo, i.hi);
    if idx.is_empty() {
        return Ok(MourreWindow { e: i.mid(), interval: *i, gamma_lower: None, compact_norm: 0.0, states: 0 });
    }
    let c = crate::lattice::commutator_with_generator_compressed(domain, potentials, margin)?;
    let v = es.columns(&idx);
    let m: DMatrix<C64> = v.adjoint() * c * &v;
    let g = min_eigenvalue(&m);
    Ok(MourreWindow { e: i.mid(), interval: *i, gamma_lower: Some(g), compact_norm: (rho - g).max(0.0), states: idx.len() })
}

#[derive(Clone, Debug, Serialize)]
pub struct MourreRow {
    pub d: usize,
    pub k: Option<f64>,
    pub i_lo: f64,
    pub i_hi: f64,
    pub r_box: usize,
    pub gamma_lower: Option<f64>,
    pub compact_norm: f64,
}

/// Every (window, radius) pair, in window-major order.
pub fn mourre_scan(d: usize, radii: &[usize], potentials: &[PotentialSpec], windows: &[Interval], margin: usize) -> Result<Vec<MourreRow>> {
    let k = potentials.iter().find_map(|p| match p {
        PotentialSpec::Wigner { k, .. } => Some(*k),
        _ => None,
    });
    let jobs: Vec<(Interval, usize)> = windows.iter().flat_map(|w| radii.iter().map(move |&r| (*w, r))).collect();
    jobs.par_iter()
        .map(|(w, r)| {
            let domain = BoxDomain::new(d, *r)?;
            let mw = mourre_gap(&domain, potentials, w, margin)?;
            Ok(MourreRow { d, k, i_lo: w.lo, i_hi: w.hi, r_box: *r, gamma_lower: mw.gamma_lower, compact_norm: mw.compact_norm })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::SQRT_2;

    #[test]
    fn threshold_values() {
        assert_eq!(thresholds(1).unwrap().values, vec![0.0, 4.0]);
        assert_eq!(thresholds(3).unwrap().values, vec![0.0, 4.0, 8.0, 12.0]);
        assert!(thresholds(0).is_err());
    }

    #[test]
    fn critical_energy_arithmetic() {
        let c = critical_energies(1, PI / 2.0).unwrap();
        assert!((c.e_minus - (2.0 - SQRT_2)).abs() < 1e-15);
        assert!((c.e_plus - (2.0 + SQRT_2)).abs() < 1e-15);
        assert_eq!(c.mu.len(), 3);
        let c2 = critical_energies(2, PI / 2.0).unwrap();
        assert!((c2.e_of_k - (4.0 - 2.0 * SQRT_2)).abs() < 1e-15);
        assert!((c2.mu[1].lo - (4.0 + 2.0 * SQRT_2)).abs() < 1e-14);
        let c3 = critical_energies(2, 1.5 * PI).unwrap();
        assert!((c3.e_of_k - (4.0 - 2.0 * SQRT_2)).abs() < 1e-14);
        assert!(critical_energies(1, PI).is_err());
        assert!(critical_energies(1, 0.0).is_err());
    }

    #[test]
    fn rho_values() {
        assert_eq!(rho_delta(2.0, 1).unwrap(), 4.0);
        assert_eq!(rho_delta(6.0, 2).unwrap(), 4.0);
        assert!(rho_delta(4.0 - 1e-9, 1).unwrap() < 1e-8);
        assert!(rho_delta(4.0, 2).is_err());
        assert!(rho_delta(-0.1, 1).is_err());
        let i = Interval::new(1.8, 2.2).unwrap();
        assert!((rho_min_on(&i, 1).unwrap() - 3.96).abs() < 1e-12);
    }

    #[test]
    fn bk_identity() {
        for (d, r, k) in [(1, 6, 1), (2, 5, 1), (2, 5, 2)] {
            let rep = verify_bk_decomposition(&BoxDomain::new(d, r).unwrap(), k, 2).unwrap();
            assert!(rep.residual <= 1e-12, "{d} {k} {}", rep.residual);
            assert!(rep.min_eigenvalue >= -1e-10, "{d} {k} {}", rep.min_eigenvalue);
        }
    }

    #[test]
    fn bump_profile() {
        assert_eq!(bump(0.0), 1.0);
        assert_eq!(bump(1.0), 0.0);
        let i = Interval::new(1.0, 3.0).unwrap();
        assert_eq!(bump_on(&i, 2.0), 1.0);
        assert_eq!(bump_on(&i, 0.5), 0.0);
    }

    #[test]
    fn vanishing_zero_amplitude_and_refusal() {
        let i = Interval::new(0.2, 0.4).unwrap();
        let n = vanishing_norms(1, 0.0, PI / 2.0, &i, &[8, 16]).unwrap();
        assert!(n.iter().all(|&v| v == 0.0));
        let bad = Interval::new(3.3, 3.5).unwrap();
        assert!(verify_vanishing(1, 1.0, PI / 2.0, &bad, &[8, 16]).is_err());
    }

    #[test]
    fn vanishing_decays_at_quarter_wavenumber() {
        let i = Interval::new(0.2, 0.4).unwrap();
        let rep = verify_vanishing(1, 1.0, PI / 2.0, &i, &[16, 32, 64]).unwrap();
        assert!(rep.decays, "{:?}", rep.norms);
    }

    #[test]
    fn free_mourre_window() {
        let domain = BoxDomain::new(1, 32).unwrap();
        let i = Interval::new(1.8, 2.2).unwrap();
        let mw = mourre_gap(&domain, &[], &i, 2).unwrap();
        let g = mw.gamma_lower.unwrap();
        assert!((g - 3.96).abs() <= 0.15 * 3.96, "{g}");
        let empty = mourre_gap(&domain, &[], &Interval::new(0.0001, 0.0002).unwrap(), 2).unwrap();
        assert_eq!(empty.gamma_lower, None);
    }

    #[test]
    fn shrinking_window_does_not_lower_gap() {
        let domain = BoxDomain::new(1, 24).unwrap();
        let wide = mourre_gap(&domain, &[], &Interval::new(1.5, 2.5).unwrap(), 2).unwrap();
        let narrow = mourre_gap(&domain, &[], &Interval::new(1.8, 2.2).unwrap(), 2).unwrap();
        assert!(narrow.gamma_lower.unwrap() >= wide.gamma_lower.unwrap() - 1e-10);
    }

    #[test]
    fn small_potential_keeps_half_the_gap() {
        let domain = BoxDomain::new(1, 32).unwrap();
        let i = Interval::new(1.8, 2.2).unwrap();
        let free = mourre_gap(&domain, &[], &i, 2).unwrap().gamma_lower.unwrap();
        let v = PotentialSpec::HypothesisH { m: 0, r: 2.0, q: 3.0, c_amp: 0.1 };
        let g = mourre_gap(&domain, &[v], &i, 2).unwrap().gamma_lower.unwrap();
        assert!(g >= 0.5 * free, "{g} {free}");
    }
}
