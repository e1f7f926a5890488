//! Weighted limiting-absorption sweeps, unweighted resolvent controls and the local-decay
//! time integral, all at finite volume.
//!
//! The infinite-volume point spectrum projector `P` is approximated by projecting out
//! truncation eigenvectors whose mass concentrates near the center of the box
//! (`point_spectrum_candidates`). Boundary-localized and extended modes are kept.

use crate::error::{Error, Result};
use crate::lattice::{build_dilation_generator, build_hamiltonian, euclid, BoxDomain, PotentialSpec};
use crate::mourre::Interval;
use crate::sparse::CsrMatrix;
use crate::spectral::{eigendecompose, norm_lanczos, BandedLu, EigenSystem, LinearMap};
use crate::weights::WeightSpec;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::Write;

/// Eigenvalues in `(lo, hi]` whose eigenvector carries at least `mass` of its norm² within
/// distance `R/2` of the origin.
pub fn point_spectrum_candidates(es: &EigenSystem, domain: &BoxDomain, lo: f64, hi: f64, mass: f64) -> Vec<usize> {
    let half = domain.radius() as f64 / 2.0;
    let inner: Vec<usize> = domain.sites().enumerate().filter(|(_, s)| euclid(s) <= half).map(|(i, _)| i).collect();
    es.indices_in(lo, hi)
        .into_iter()
        .filter(|&j| inner.iter().map(|&i| es.vectors[(i, j)].norm_sqr()).sum::<f64>() >= mass)
        .collect()
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProjectorPolicy {
    #[default]
    Full,
    RemovePointSpectrum,
}

/// The operator the weight is a function of.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightOn {
    /// The generator of dilations.
    #[default]
    A,
    /// `|N|`, the Euclidean position.
    N,
    /// No weight (control).
    Identity,
}

/// Minimal eigenvector mass within `R/2` of the center for a point-spectrum candidate.
/// Extended box modes carry about one half there.
pub const DEFAULT_CANDIDATE_MASS: f64 = 0.9;

pub(crate) fn default_candidate_mass() -> f64 {
    DEFAULT_CANDIDATE_MASS
}

fn yes() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub d: usize,
    pub radii: Vec<usize>,
    #[serde(default)]
    pub potentials: Vec<PotentialSpec>,
    pub j: Interval,
    /// Positive and strictly descending.
    pub eta_grid: Vec<f64>,
    /// Uniform abscissae in `[J.lo, J.hi]`, both ends included.
    pub x_points: usize,
    /// Also place abscissae at the truncation eigenvalues inside `J`.
    #[serde(default = "yes")]
    pub include_eigenvalues: bool,
    pub weight: WeightSpec,
    #[serde(default)]
    pub weight_on: WeightOn,
    #[serde(default)]
    pub projector: ProjectorPolicy,
    #[serde(default = "default_candidate_mass")]
    pub candidate_mass: f64,
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        if self.d == 0 || self.radii.is_empty() {
            return Err(Error::Config("need d ≥ 1 and at least one radius".into()));
        }
        Interval::new(self.j.lo, self.j.hi)?;
        if self.eta_grid.is_empty() || self.eta_grid.iter().any(|&e| !(e > 0.0)) || self.eta_grid.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::Config("eta_grid must be positive and strictly descending".into()));
        }
        if self.x_points < 2 {
            return Err(Error::Config("x_points must be at least 2".into()));
        }
        self.weight.validate()
    }
}

/// `weight(T)` where `T` is selected by `on`.
pub fn weight_matrix(domain: &BoxDomain, spec: &WeightSpec, on: WeightOn) -> Result<DMatrix<C64>> {
    let n = domain.size();
    match on {
        WeightOn::Identity => Ok(DMatrix::identity(n, n)),
        WeightOn::N => {
            let d: Vec<C64> = domain.sites().map(|s| C64::new(spec.composite(euclid(&s)), 0.0)).collect();
            Ok(DMatrix::from_diagonal(&DVector::from_vec(d)))
        }
        WeightOn::A => {
            let es = eigendecompose(&build_dilation_generator(domain))?;
            es.apply_function(|x| spec.composite(x))
        }
    }
}

/// `X = C P⊥ (H − z)^{−1} C`, known through solves.
struct WeightedResolvent<'a> {
    c: &'a DMatrix<C64>,
    keep: Option<&'a DMatrix<C64>>,
    lu: BandedLu,
    lu_conj: BandedLu,
}

impl WeightedResolvent<'_> {
    fn project(&self, x: Vec<C64>) -> Vec<C64> {
        match self.keep {
            None => x,
            Some(p) => {
                let v = DVector::from_vec(x);
                (p * (p.adjoint() * v)).iter().copied().collect()
            }
        }
    }

    fn weight(&self, x: &[C64]) -> Vec<C64> {
        (self.c * DVector::from_column_slice(x)).iter().copied().collect()
    }
}

impl LinearMap for WeightedResolvent<'_> {
    fn dim(&self) -> usize {
        self.c.nrows()
    }

    fn apply(&self, x: &[C64]) -> Result<Vec<C64>> {
        let y = self.lu.solve(&self.weight(x))?;
        Ok(self.weight(&self.project(y)))
    }

    fn apply_adjoint(&self, x: &[C64]) -> Result<Vec<C64>> {
        let y = self.project(self.weight(x));
        Ok(self.weight(&self.lu_conj.solve(&y)?))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub r_box: usize,
    pub re_z: f64,
    pub im_z: f64,
    pub weighted_norm: f64,
    pub unweighted_norm: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepFailure {
    pub r_box: usize,
    pub re_z: f64,
    pub im_z: f64,
    pub message: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct SupRow {
    pub r_box: usize,
    pub eta: f64,
    pub weighted_sup: f64,
    pub unweighted_sup: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    pub failures: Vec<SweepFailure>,
    /// Number of point-spectrum candidates removed, per radius.
    pub removed: Vec<(usize, usize)>,
}

struct Prepared {
    r: usize,
    h: CsrMatrix,
    c: DMatrix<C64>,
    keep: Option<DMatrix<C64>>,
    kept_values: Vec<f64>,
    xs: Vec<f64>,
    removed: usize,
}

fn prepare(cfg: &SweepConfig, r: usize) -> Result<Prepared> {
    let domain = BoxDomain::new(cfg.d, r)?;
    let h = build_hamiltonian(&domain, &cfg.potentials)?;
    let es = eigendecompose(&h)?;
    let c = weight_matrix(&domain, &cfg.weight, cfg.weight_on)?;
    let removed_idx = match cfg.projector {
        ProjectorPolicy::Full => Vec::new(),
        ProjectorPolicy::RemovePointSpectrum => point_spectrum_candidates(&es, &domain, cfg.j.lo, cfg.j.hi, cfg.candidate_mass),
    };
    let kept: Vec<usize> = (0..es.dim()).filter(|j| !removed_idx.contains(j)).collect();
    let keep = if removed_idx.is_empty() { None } else { Some(es.columns(&kept)) };
    let kept_values: Vec<f64> = kept.iter().map(|&j| es.values[j]).collect();
    let mut xs: Vec<f64> = (0..cfg.x_points).map(|i| cfg.j.lo + (cfg.j.hi - cfg.j.lo) * i as f64 / (cfg.x_points - 1) as f64).collect();
    if cfg.include_eigenvalues {
        xs.extend(es.values.iter().copied().filter(|&l| l >= cfg.j.lo && l <= cfg.j.hi));
    }
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    Ok(Prepared { r, h: h.mat, c, keep, kept_values, xs, removed: removed_idx.len() })
}

fn evaluate(p: &Prepared, x: f64, eta: f64) -> Result<SweepRow> {
    let z = C64::new(x, eta);
    let op = WeightedResolvent {
        c: &p.c,
        keep: p.keep.as_ref(),
        lu: BandedLu::factor(&p.h, z)?,
        lu_conj: BandedLu::factor(&p.h, z.conj())?,
    };
    let weighted_norm = norm_lanczos(&op, 1e-10, 400)?;
    let dist = p.kept_values.iter().map(|&l| (C64::new(l, 0.0) - z).norm()).fold(f64::INFINITY, f64::min);
    Ok(SweepRow { r_box: p.r, re_z: x, im_z: eta, weighted_norm, unweighted_norm: 1.0 / dist })
}

/// `‖𝒲(H − z)^{−1}P⊥𝒲‖` over `radii × x_grid × eta_grid`, rows sorted by `(R, x, η)`.
///
/// Grid points where a solve or the norm iteration fails are listed in `failures`.
pub fn lap_sweep(cfg: &SweepConfig) -> Result<SweepResult> {
    cfg.validate()?;
    let prepared: Vec<Prepared> = cfg.radii.par_iter().map(|&r| prepare(cfg, r)).collect::<Result<_>>()?;
    let mut jobs = Vec::new();
    for (pi, p) in prepared.iter().enumerate() {
        for &x in &p.xs {
            for &eta in &cfg.eta_grid {
                jobs.push((pi, x, eta));
            }
        }
    }
    let outcomes: Vec<std::result::Result<SweepRow, SweepFailure>> = jobs
        .par_iter()
        .map(|&(pi, x, eta)| {
            let p = &prepared[pi];
            evaluate(p, x, eta).map_err(|e| SweepFailure { r_box: p.r, re_z: x, im_z: eta, message: e.to_string() })
        })
        .collect();
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for o in outcomes {
        match o {
            Ok(r) => rows.push(r),
            Err(f) => failures.push(f),
        }
    }
    rows.sort_by(|a, b| a.r_box.cmp(&b.r_box).then(a.re_z.total_cmp(&b.re_z)).then(a.im_z.total_cmp(&b.im_z)));
    let removed = prepared.iter().map(|p| (p.r, p.removed)).collect();
    Ok(SweepResult { rows, failures, removed })
}

impl SweepResult {
    /// Sups over `Re z` for every `(R, η)`, ordered by `R` then descending η.
    pub fn sups(&self) -> Vec<SupRow> {
        let mut out: Vec<SupRow> = Vec::new();
        for row in &self.rows {
            match out.iter_mut().find(|s| s.r_box == row.r_box && s.eta == row.im_z) {
                Some(s) => {
                    s.weighted_sup = s.weighted_sup.max(row.weighted_norm);
                    s.unweighted_sup = s.unweighted_sup.max(row.unweighted_norm);
                }
                None => out.push(SupRow { r_box: row.r_box, eta: row.im_z, weighted_sup: row.weighted_norm, unweighted_sup: row.unweighted_norm }),
            }
        }
        out.sort_by(|a, b| a.r_box.cmp(&b.r_box).then(b.eta.total_cmp(&a.eta)));
        out
    }

    /// CSV with header `r_box,re_z,im_z,weighted_norm,unweighted_norm`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        for row in &self.rows {
            wr.serialize(row).map_err(|e| Error::Io(std::io::Error::other(e)))?;
        }
        wr.flush()?;
        Ok(())
    }

    pub fn verdict(&self, flat_tol: f64, control_growth: f64) -> LapVerdict {
        let sups = self.sups();
        let mut per_radius = Vec::new();
        let mut radii: Vec<usize> = sups.iter().map(|s| s.r_box).collect();
        radii.dedup();
        for r in radii {
            let s: Vec<&SupRow> = sups.iter().filter(|s| s.r_box == r).collect();
            let wmax = s.iter().map(|x| x.weighted_sup).fold(0.0, f64::max);
            let wmin = s.iter().map(|x| x.weighted_sup).fold(f64::INFINITY, f64::min);
            let first = s.first().expect("nonempty");
            let last = s.last().expect("nonempty");
            per_radius.push(RadiusVerdict { r_box: r, flatness: wmax / wmin, control_growth: last.unweighted_sup / first.unweighted_sup });
        }
        let flat = per_radius.iter().all(|v| v.flatness <= 1.0 + flat_tol);
        let control = per_radius.iter().all(|v| v.control_growth >= control_growth);
        LapVerdict { per_radius, flat, control, failures: self.failures.len() }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RadiusVerdict {
    pub r_box: usize,
    /// `max_η sup / min_η sup` of the weighted norm.
    pub flatness: f64,
    /// Unweighted sup at the smallest η over the sup at the largest η.
    pub control_growth: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct LapVerdict {
    pub per_radius: Vec<RadiusVerdict>,
    pub flat: bool,
    pub control: bool,
    pub failures: usize,
}

impl LapVerdict {
    pub fn pass(&self) -> bool {
        self.flat && self.control && self.failures == 0
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct TransferReport {
    pub rows: Vec<(usize, f64, f64)>,
    pub min_ratio: f64,
    pub max_ratio: f64,
}

impl TransferReport {
    pub fn within(&self, kappa: f64) -> bool {
        self.min_ratio >= 1.0 / kappa && self.max_ratio <= kappa
    }
}

/// Reruns the sweep with the weight a function of `|N|` instead of `A` and reports
/// `sup_A / sup_N` for every `(R, η)`.
pub fn weight_transfer_check(cfg: &SweepConfig) -> Result<TransferReport> {
    let mut a = cfg.clone();
    a.weight_on = WeightOn::A;
    let mut n = cfg.clone();
    n.weight_on = WeightOn::N;
    let sa = lap_sweep(&a)?.sups();
    let sn = lap_sweep(&n)?.sups();
    let rows: Vec<(usize, f64, f64)> = sa.iter().zip(&sn).map(|(x, y)| (x.r_box, x.eta, x.weighted_sup / y.weighted_sup)).collect();
    let min_ratio = rows.iter().map(|r| r.2).fold(f64::INFINITY, f64::min);
    let max_ratio = rows.iter().map(|r| r.2).fold(0.0, f64::max);
    Ok(TransferReport { rows, min_ratio, max_ratio })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialState {
    /// Seeded random amplitudes on the sites with `|n| ≤ fraction·R`.
    Random { fraction: f64 },
    /// `δ_0`.
    Delta,
    /// An eigenvector of the truncation, by index.
    Eigenvector { index: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecayConfig {
    pub d: usize,
    pub r_box: usize,
    #[serde(default)]
    pub potentials: Vec<PotentialSpec>,
    pub j: Interval,
    pub weight: WeightSpec,
    #[serde(default)]
    pub weight_on: WeightOn,
    #[serde(default)]
    pub projector: ProjectorPolicy,
    #[serde(default = "default_candidate_mass")]
    pub candidate_mass: f64,
    pub state: InitialState,
    pub t_max: f64,
    /// Number of time samples, odd so that `T_max/2` is a sample.
    pub steps: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct DecayResult {
    pub total: f64,
    /// `(F(T) − F(T/2)) / F(T)` for the cumulative integral `F`.
    pub tail_fraction: f64,
    pub times: Vec<f64>,
    pub cumulative: Vec<f64>,
}

/// `∫_0^T ‖𝒲 e^{−itH} P⊥E_J(H) ψ‖² dt` by the trapezoid rule, propagation by spectral calculus.
pub fn local_decay(cfg: &DecayConfig, seed: u64) -> Result<DecayResult> {
    if cfg.steps < 3 || cfg.steps % 2 == 0 || !(cfg.t_max > 0.0) {
        return Err(Error::Config("steps must be odd and ≥ 3, t_max positive".into()));
    }
    let domain = BoxDomain::new(cfg.d, cfg.r_box)?;
    let es = eigendecompose(&build_hamiltonian(&domain, &cfg.potentials)?)?;
    let n = domain.size();
    let psi: DVector<C64> = match &cfg.state {
        InitialState::Random { fraction } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let lim = fraction * cfg.r_box as f64;
            let v: Vec<C64> = domain
                .sites()
                .map(|s| {
                    let a = C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
                    if euclid(&s) <= lim {
                        a
                    } else {
                        C64::new(0.0, 0.0)
                    }
                })
                .collect();
            DVector::from_vec(v)
        }
        InitialState::Delta => {
            let mut v = DVector::zeros(n);
            v[domain.index_of(&vec![0; cfg.d]).expect("origin")] = C64::new(1.0, 0.0);
            v
        }
        InitialState::Eigenvector { index } => {
            if *index >= n {
                return Err(Error::Domain(format!("eigenvector index {index} ≥ {n}")));
            }
            es.vectors.column(*index).into_owned()
        }
    };
    let pn = psi.norm();
    if pn == 0.0 {
        return Err(Error::Domain("initial state vanishes".into()));
    }
    let psi = psi / C64::new(pn, 0.0);
    let removed = match cfg.projector {
        ProjectorPolicy::Full => Vec::new(),
        ProjectorPolicy::RemovePointSpectrum => point_spectrum_candidates(&es, &domain, cfg.j.lo, cfg.j.hi, cfg.candidate_mass),
    };
    let idx: Vec<usize> = es.indices_in(cfg.j.lo, cfg.j.hi).into_iter().filter(|j| !removed.contains(j)).collect();
    let v = es.columns(&idx);
    let coef = v.adjoint() * psi;
    let cv = weight_matrix(&domain, &cfg.weight, cfg.weight_on)? * v;
    let lambdas: Vec<f64> = idx.iter().map(|&j| es.values[j]).collect();
    let times: Vec<f64> = (0..cfg.steps).map(|k| cfg.t_max * k as f64 / (cfg.steps - 1) as f64).collect();
    let f: Vec<f64> = times
        .iter()
        .map(|&t| {
            let c = DVector::from_fn(idx.len(), |i, _| coef[i] * C64::from_polar(1.0, -t * lambdas[i]));
            (&cv * c).norm_squared()
        })
        .collect();
    let mut cumulative = vec![0.0; cfg.steps];
    for k in 1..cfg.steps {
        cumulative[k] = cumulative[k - 1] + 0.5 * (f[k] + f[k - 1]) * (times[k] - times[k - 1]);
    }
    let total = cumulative[cfg.steps - 1];
    let mid = cumulative[(cfg.steps - 1) / 2];
    let tail_fraction = if total == 0.0 { 0.0 } else { (total - mid) / total };
    Ok(DecayResult { total, tail_fraction, times, cumulative })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::dense_norm;

    fn free_cfg(radii: Vec<usize>) -> SweepConfig {
        SweepConfig {
            d: 1,
            radii,
            potentials: vec![],
            j: Interval { lo: 1.8, hi: 2.2 },
            eta_grid: vec![1e-1, 1e-2],
            x_points: 5,
            include_eigenvalues: true,
            weight: WeightSpec::new(0, 1.0),
            weight_on: WeightOn::A,
            projector: ProjectorPolicy::Full,
            candidate_mass: DEFAULT_CANDIDATE_MASS,
        }
    }

    #[test]
    fn sweep_matches_dense_norm() {
        let cfg = free_cfg(vec![8]);
        let res = lap_sweep(&cfg).unwrap();
        assert!(res.failures.is_empty());
        let domain = BoxDomain::new(1, 8).unwrap();
        let h = build_hamiltonian(&domain, &[]).unwrap().mat.to_dense();
        let c = weight_matrix(&domain, &cfg.weight, WeightOn::A).unwrap();
        let cnorm = dense_norm(&c);
        for row in res.rows.iter().take(4) {
            let z = C64::new(row.re_z, row.im_z);
            let shifted = &h - DMatrix::<C64>::identity(h.nrows(), h.nrows()) * z;
            let inv = shifted.try_inverse().unwrap();
            let want = dense_norm(&(&c * inv * &c));
            assert!((row.weighted_norm - want).abs() <= 1e-8 * want, "{} {}", row.weighted_norm, want);
            assert!(row.unweighted_norm * cnorm * cnorm >= row.weighted_norm * (1.0 - 1e-9));
        }
    }

    #[test]
    fn rows_sorted_and_sup_monotone() {
        let mut cfg = free_cfg(vec![6, 4]);
        let res = lap_sweep(&cfg).unwrap();
        assert!(res.rows.windows(2).all(|w| (w[0].r_box, w[0].re_z) <= (w[1].r_box, w[1].re_z)));
        let before = res.sups();
        cfg.x_points = 9;
        let after = lap_sweep(&cfg).unwrap().sups();
        for (a, b) in before.iter().zip(&after) {
            assert!(b.weighted_sup >= a.weighted_sup * (1.0 - 1e-12));
        }
    }

    #[test]
    fn identity_weight_is_plain_resolvent() {
        let mut cfg = free_cfg(vec![6]);
        cfg.weight_on = WeightOn::Identity;
        for row in lap_sweep(&cfg).unwrap().rows {
            assert!((row.weighted_norm - row.unweighted_norm).abs() <= 1e-8 * row.unweighted_norm);
        }
    }

    #[test]
    fn conjugate_symmetry() {
        let domain = BoxDomain::new(1, 6).unwrap();
        let h = build_hamiltonian(&domain, &[PotentialSpec::Wigner { w: 0.5, k: 1.0 }]).unwrap().mat;
        let c = weight_matrix(&domain, &WeightSpec::new(0, 1.0), WeightOn::A).unwrap();
        let z = C64::new(2.0, 0.05);
        let op = |z: C64| WeightedResolvent { c: &c, keep: None, lu: BandedLu::factor(&h, z).unwrap(), lu_conj: BandedLu::factor(&h, z.conj()).unwrap() };
        let a = norm_lanczos(&op(z), 1e-12, 400).unwrap();
        let b = norm_lanczos(&op(z.conj()), 1e-12, 400).unwrap();
        assert!((a - b).abs() <= 1e-9 * a);
    }

    #[test]
    fn removed_states_are_annihilated() {
        let domain = BoxDomain::new(1, 10).unwrap();
        let v = PotentialSpec::CustomTable { entries: vec![crate::lattice::TableEntry { site: vec![0], value: -3.0 }] };
        let es = eigendecompose(&build_hamiltonian(&domain, std::slice::from_ref(&v)).unwrap()).unwrap();
        let bound = es.values[0];
        assert!(bound < 0.0);
        let cand = point_spectrum_candidates(&es, &domain, bound - 0.1, bound + 0.1, 0.5);
        assert_eq!(cand, vec![0]);
        let cfg = DecayConfig {
            d: 1,
            r_box: 10,
            potentials: vec![v],
            j: Interval { lo: bound - 0.1, hi: bound + 0.1 },
            weight: WeightSpec::new(0, 1.0),
            weight_on: WeightOn::A,
            projector: ProjectorPolicy::RemovePointSpectrum,
            candidate_mass: DEFAULT_CANDIDATE_MASS,
            state: InitialState::Eigenvector { index: 0 },
            t_max: 5.0,
            steps: 11,
        };
        assert_eq!(local_decay(&cfg, 0).unwrap().total, 0.0);
    }

    #[test]
    fn decay_deterministic_and_saturating_for_delta() {
        let cfg = DecayConfig {
            d: 1,
            r_box: 64,
            potentials: vec![],
            j: Interval { lo: 1.0, hi: 3.0 },
            weight: WeightSpec::new(0, 1.0),
            weight_on: WeightOn::A,
            projector: ProjectorPolicy::Full,
            candidate_mass: DEFAULT_CANDIDATE_MASS,
            state: InitialState::Delta,
            t_max: 32.0,
            steps: 401,
        };
        let a = local_decay(&cfg, 3).unwrap();
        assert!(a.tail_fraction <= 0.1, "{}", a.tail_fraction);
        let mut rnd = cfg.clone();
        rnd.state = InitialState::Random { fraction: 0.25 };
        let x = local_decay(&rnd, 7).unwrap();
        let y = local_decay(&rnd, 7).unwrap();
        assert_eq!(x.total.to_bits(), y.total.to_bits());
    }

    #[test]
    fn transfer_ratio_bounded() {
        let rep = weight_transfer_check(&free_cfg(vec![6, 10])).unwrap();
        assert_eq!(rep.rows.len(), 4);
        assert!(rep.within(10.0), "{:?}", rep);
    }

    #[test]
    fn bad_grids_rejected() {
        let mut cfg = free_cfg(vec![6]);
        cfg.eta_grid = vec![1e-2, 1e-1];
        assert!(lap_sweep(&cfg).is_err());
    }
}
