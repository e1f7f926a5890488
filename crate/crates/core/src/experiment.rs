//! Configuration-driven experiment runner.
//!
//! A config is a TOML document with an `experiment` id, a `seed`, an `[output]` block, a
//! `[model]` block and an experiment-specific `[math]` block. Unknown keys are rejected at every
//! level. Running a config yields a [`Report`] of named verdicts and in-memory artifacts, which
//! [`write_outputs`] turns into CSV/JSON files and a manifest.

use crate::error::{Error, Result};
use crate::helffer::{hs_convergence, weighted_commutator_gap, AlmostAnalyticExtension, GapConfig, HsFunction, PlateauWindow};
use crate::lap::{
    default_candidate_mass, lap_sweep, local_decay, weight_transfer_check, DecayConfig, InitialState, ProjectorPolicy, SweepConfig,
    WeightOn,
};
use crate::lattice::{
    build_dilation_generator, verify_commutator_identity_laplacian, verify_commutator_identity_potential,
    verify_commutator_identity_wigner, BoxDomain, PotentialSpec,
};
use crate::monotone::{
    boundedness_curve, c_d, matrix_monotone_suite, power_order_experiment, scalar_bound_check, verify_a_dominated_by_n, BoundLemma, ScalarBound, ScalarFn,
    ScalarGrid, SuiteParams,
};
use crate::mourre::{critical_energies, mourre_scan, rho_min_on, thresholds, verify_bk_decomposition, verify_vanishing, Interval};
use crate::polylog::{integral_rep_residual, verify_asymptotic, verify_nevanlinna};
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentId {
    Identities,
    MourreScan,
    LapSweep,
    LocalDecay,
    MonotoneSuite,
    PolylogVerify,
    HsCompare,
    BoundsCurve,
}

impl ExperimentId {
    pub const ALL: [ExperimentId; 8] = [
        ExperimentId::Identities,
        ExperimentId::MourreScan,
        ExperimentId::LapSweep,
        ExperimentId::LocalDecay,
        ExperimentId::MonotoneSuite,
        ExperimentId::PolylogVerify,
        ExperimentId::HsCompare,
        ExperimentId::BoundsCurve,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            ExperimentId::Identities => "identities",
            ExperimentId::MourreScan => "mourre-scan",
            ExperimentId::LapSweep => "lap-sweep",
            ExperimentId::LocalDecay => "local-decay",
            ExperimentId::MonotoneSuite => "monotone-suite",
            ExperimentId::PolylogVerify => "polylog-verify",
            ExperimentId::HsCompare => "hs-compare",
            ExperimentId::BoundsCurve => "bounds-curve",
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CatalogEntry {
    pub id: &'static str,
    pub description: &'static str,
    pub anchor: &'static str,
}

pub fn catalog() -> Vec<CatalogEntry> {
    ExperimentId::ALL
        .iter()
        .map(|id| {
            let (description, anchor) = match id {
                ExperimentId::Identities => (
                    "interior residuals of the commutator identities for Δ, V, W and the b_k remainder",
                    "[Δ,iA] = Σ Δ_k(4−Δ_k) and the Wigner split K_W + B_W",
                ),
                ExperimentId::MourreScan => (
                    "finite-box Mourre constants on energy windows, plus the vanishing trend of θ(Δ)W̃θ(Δ)",
                    "Mourre estimate on I ⊂ μ(H)",
                ),
                ExperimentId::LapSweep => (
                    "weighted resolvent norms on a (Re z, Im z) grid with the unweighted blow-up control",
                    "limiting absorption principle",
                ),
                ExperimentId::LocalDecay => {
                    ("saturation of the weighted local-decay time integral", "local decay ∫‖𝒲e^{−itH}P⊥E_J(H)ψ‖²dt < ∞")
                }
                ExperimentId::MonotoneSuite => (
                    "randomized Loewner-order search for operator monotonicity and its failure",
                    "operator monotonicity of Φ_n and √, non-monotonicity of log^k",
                ),
                ExperimentId::PolylogVerify => (
                    "series versus integral representation, asymptotics and Nevanlinna positivity of Φ_n",
                    "polylogarithm Φ_σ(z) = −Li_σ(−z)",
                ),
                ExperimentId::HsCompare => (
                    "Helffer–Sjöstrand quadrature against exact functional calculus, optional weighted commutator gap",
                    "Helffer–Sjöstrand formula for φ^{(k)}(T)",
                ),
                ExperimentId::BoundsCurve => (
                    "norm curves of weight products in the box radius, scalar bound suprema and A-by-N domination",
                    "weight-conjugation bounds and (A²+1) ≼ c_d(N²+1)",
                ),
            };
            CatalogEntry { id: id.as_str(), description, anchor }
        })
        .collect()
}

pub fn catalog_text() -> String {
    let mut s = String::new();
    for e in catalog() {
        let _ = writeln!(s, "{:<15} {}\n{:<15} reproduces: {}", e.id, e.description, "", e.anchor);
    }
    s
}

pub fn catalog_json() -> String {
    serde_json::to_string_pretty(&catalog()).expect("catalog serializes")
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputBlock {
    #[serde(default = "default_directory")]
    pub directory: PathBuf,
    #[serde(default = "default_formats")]
    pub formats: Vec<Format>,
}

fn default_directory() -> PathBuf {
    PathBuf::from("out")
}

fn default_formats() -> Vec<Format> {
    vec![Format::Csv, Format::Json]
}

impl Default for OutputBlock {
    fn default() -> Self {
        OutputBlock { directory: default_directory(), formats: default_formats() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelBlock {
    pub d: usize,
    pub radii: Vec<usize>,
    #[serde(default)]
    pub potentials: Vec<PotentialSpec>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config<M> {
    pub experiment: ExperimentId,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output: OutputBlock,
    pub model: ModelBlock,
    pub math: M,
}

fn two() -> usize {
    2
}

fn tight() -> f64 {
    1e-12
}

fn yes() -> bool {
    true
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IdentitiesMath {
    #[serde(default = "two")]
    pub margin: usize,
    #[serde(default = "tight")]
    pub tol: f64,
    /// Wigner frequencies whose critical energies are tabulated.
    #[serde(default)]
    pub k_values: Vec<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VanishingBlock {
    pub w: f64,
    pub k: f64,
    pub interval: Interval,
    pub radii: Vec<usize>,
    /// A window touching a critical energy; its norms must not decay.
    #[serde(default)]
    pub control: Option<Interval>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MourreMath {
    pub windows: Vec<Interval>,
    #[serde(default = "two")]
    pub margin: usize,
    /// Relative tolerance of `gamma_lower` against `min_I ϱ_Δ^A` at the largest radius.
    #[serde(default)]
    pub rho_rel_tol: Option<f64>,
    #[serde(default)]
    pub vanishing: Option<VanishingBlock>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LapMath {
    pub j: Interval,
    pub eta_grid: Vec<f64>,
    pub x_points: usize,
    #[serde(default = "yes")]
    pub include_eigenvalues: bool,
    pub weight: crate::weights::WeightSpec,
    #[serde(default)]
    pub weight_on: WeightOn,
    #[serde(default)]
    pub projector: ProjectorPolicy,
    #[serde(default = "default_candidate_mass")]
    pub candidate_mass: f64,
    pub flat_tol: f64,
    pub control_growth: f64,
    /// Also compare weights in `A` and in `|N|`; verdict `sup_A/sup_N ∈ [1/κ, κ]`.
    #[serde(default)]
    pub transfer_kappa: Option<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecayControl {
    #[serde(default)]
    pub state: Option<InitialState>,
    #[serde(default = "identity_weight")]
    pub weight_on: WeightOn,
    pub min_tail: f64,
}

fn identity_weight() -> WeightOn {
    WeightOn::Identity
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecayMath {
    pub j: Interval,
    pub weight: crate::weights::WeightSpec,
    #[serde(default)]
    pub weight_on: WeightOn,
    #[serde(default)]
    pub projector: ProjectorPolicy,
    #[serde(default = "default_candidate_mass")]
    pub candidate_mass: f64,
    pub state: InitialState,
    pub t_max: f64,
    pub steps: usize,
    pub max_tail: f64,
    #[serde(default)]
    pub control: Option<DecayControl>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MonotoneMath {
    /// Functions expected to be operator monotone.
    #[serde(default)]
    pub positive: Vec<ScalarFn>,
    /// Functions for which a counterexample is expected.
    #[serde(default)]
    pub negative: Vec<ScalarFn>,
    pub a: f64,
    pub b: f64,
    pub n_max: usize,
    pub trials: usize,
    /// Trials per size for the negative list.
    pub negative_trials: usize,
    pub tol: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolylogMath {
    pub orders: Vec<u32>,
    pub asymptotic_x: Vec<f64>,
    pub asymptotic_tol: f64,
    pub nevanlinna_samples: usize,
    pub nevanlinna_tol: f64,
    /// Orders σ of `Li_{σ+1}` compared by series and integral.
    pub overlap_sigmas: Vec<f64>,
    pub overlap_r: (f64, f64),
    pub overlap_samples: usize,
    pub overlap_tol: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GapBlock {
    pub r_box: usize,
    pub a_box: usize,
    pub theta: PlateauWindow,
    pub eta: PlateauWindow,
    pub chi: PlateauWindow,
    pub weight: crate::weights::WeightSpec,
    pub r_grid: Vec<f64>,
    pub tol: f64,
    #[serde(default = "default_candidate_mass")]
    pub candidate_mass: f64,
    /// Whether the search is expected to succeed.
    #[serde(default = "yes")]
    pub expect_found: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HsCase {
    pub function: HsFunction,
    /// Derivative order `k`; requires `ρ < k`.
    #[serde(default)]
    pub derivative: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HsMath {
    pub functions: Vec<HsCase>,
    pub order: usize,
    pub levels: Vec<u32>,
    pub tol: f64,
    pub floor: f64,
    #[serde(default)]
    pub gap: Option<GapBlock>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScalarBlock {
    pub kinds: Vec<ScalarBound>,
    pub s_values: Vec<f64>,
    pub p_values: Vec<f64>,
    pub grid: ScalarGrid,
    pub refine_tol: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DominationBlock {
    pub dims: Vec<usize>,
    pub radius: usize,
    #[serde(default = "unit")]
    pub alpha: f64,
}

/// Exploratory `min σ(𝐍^n − 𝐀^n)` table; reported, never judged.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PowerOrderBlock {
    pub d: usize,
    pub radius: usize,
    pub powers: Vec<u32>,
}

fn unit() -> f64 {
    1.0
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundsMath {
    pub lemmas: Vec<BoundLemma>,
    pub p_values: Vec<f64>,
    #[serde(default)]
    pub m: usize,
    pub flat_tol: f64,
    pub control_growth: f64,
    #[serde(default)]
    pub scalar: Option<ScalarBlock>,
    #[serde(default)]
    pub domination: Option<DominationBlock>,
    #[serde(default)]
    pub power_order: Option<PowerOrderBlock>,
}

#[derive(Clone, Debug)]
pub enum ExperimentConfig {
    Identities(Config<IdentitiesMath>),
    MourreScan(Config<MourreMath>),
    LapSweep(Config<LapMath>),
    LocalDecay(Config<DecayMath>),
    MonotoneSuite(Config<MonotoneMath>),
    PolylogVerify(Config<PolylogMath>),
    HsCompare(Config<HsMath>),
    BoundsCurve(Config<BoundsMath>),
}

macro_rules! each {
    ($self:expr, $c:ident => $body:expr) => {
        match $self {
            ExperimentConfig::Identities($c) => $body,
            ExperimentConfig::MourreScan($c) => $body,
            ExperimentConfig::LapSweep($c) => $body,
            ExperimentConfig::LocalDecay($c) => $body,
            ExperimentConfig::MonotoneSuite($c) => $body,
            ExperimentConfig::PolylogVerify($c) => $body,
            ExperimentConfig::HsCompare($c) => $body,
            ExperimentConfig::BoundsCurve($c) => $body,
        }
    };
}

#[derive(Deserialize)]
struct Probe {
    experiment: ExperimentId,
}

fn typed<M: DeserializeOwned>(text: &str) -> Result<Config<M>> {
    toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
}

impl ExperimentConfig {
    /// Parses in two passes: the id selects the math schema, then the whole document is
    /// deserialized strictly so that diagnostics carry line and column.
    pub fn parse(text: &str) -> Result<ExperimentConfig> {
        let probe: Probe = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let cfg = match probe.experiment {
            ExperimentId::Identities => ExperimentConfig::Identities(typed(text)?),
            ExperimentId::MourreScan => ExperimentConfig::MourreScan(typed(text)?),
            ExperimentId::LapSweep => ExperimentConfig::LapSweep(typed(text)?),
            ExperimentId::LocalDecay => ExperimentConfig::LocalDecay(typed(text)?),
            ExperimentId::MonotoneSuite => ExperimentConfig::MonotoneSuite(typed(text)?),
            ExperimentId::PolylogVerify => ExperimentConfig::PolylogVerify(typed(text)?),
            ExperimentId::HsCompare => ExperimentConfig::HsCompare(typed(text)?),
            ExperimentId::BoundsCurve => ExperimentConfig::BoundsCurve(typed(text)?),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn id(&self) -> ExperimentId {
        each!(self, c => c.experiment)
    }

    pub fn seed(&self) -> u64 {
        each!(self, c => c.seed)
    }

    pub fn set_seed(&mut self, seed: u64) {
        each!(self, c => c.seed = seed)
    }

    pub fn output(&self) -> &OutputBlock {
        each!(self, c => &c.output)
    }

    pub fn model(&self) -> &ModelBlock {
        each!(self, c => &c.model)
    }

    fn validate(&self) -> Result<()> {
        let m = self.model();
        if m.d == 0 || m.radii.is_empty() || m.radii.contains(&0) {
            return Err(Error::Config("model needs d ≥ 1 and non-empty positive radii".into()));
        }
        for p in &m.potentials {
            p.validate().map_err(|e| Error::Config(format!("model.potentials: {e}")))?;
        }
        if self.output().formats.is_empty() {
            return Err(Error::Config("output.formats must not be empty".into()));
        }
        Ok(())
    }
}

/// Exit status of a failed run: 2 for errors in the input, 3 for numerical failures.
pub fn error_exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_)
        | Error::InvalidDomain(_)
        | Error::InvalidPotential(_)
        | Error::AxisOutOfRange { .. }
        | Error::DomainMismatch(_)
        | Error::MarginTooLarge { .. }
        | Error::Domain(_)
        | Error::Precondition(_) => 2,
        _ => 3,
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Verdict {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Clone, Debug)]
pub struct Artifact {
    /// File name relative to the output directory.
    pub name: String,
    pub format: Format,
    pub contents: String,
}

#[derive(Clone, Debug)]
pub struct Report {
    pub experiment: ExperimentId,
    pub seed: u64,
    pub verdicts: Vec<Verdict>,
    /// Items whose numerics broke down; any entry makes the run exit with status 3.
    pub failures: Vec<String>,
    pub artifacts: Vec<Artifact>,
}

impl Report {
    fn new(experiment: ExperimentId, seed: u64) -> Report {
        Report { experiment, seed, verdicts: Vec::new(), failures: Vec::new(), artifacts: Vec::new() }
    }

    fn verdict(&mut self, name: &str, pass: bool, detail: String) {
        self.verdicts.push(Verdict { name: name.into(), pass, detail });
    }

    fn csv<T: Serialize>(&mut self, name: &str, rows: &[T]) -> Result<()> {
        let mut wr = csv::Writer::from_writer(Vec::new());
        for r in rows {
            wr.serialize(r).map_err(|e| Error::Io(std::io::Error::other(e)))?;
        }
        let bytes = wr.into_inner().map_err(|e| Error::Io(std::io::Error::other(e.to_string())))?;
        let contents = String::from_utf8(bytes).map_err(|e| Error::Io(std::io::Error::other(e)))?;
        self.artifacts.push(Artifact { name: format!("{name}.csv"), format: Format::Csv, contents });
        Ok(())
    }

    fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let contents = serde_json::to_string_pretty(value).map_err(|e| Error::Io(std::io::Error::other(e)))? + "\n";
        self.artifacts.push(Artifact { name: format!("{name}.json"), format: Format::Json, contents });
        Ok(())
    }

    pub fn passed(&self) -> bool {
        self.verdicts.iter().all(|v| v.pass)
    }

    pub fn exit_code(&self) -> i32 {
        if !self.failures.is_empty() {
            3
        } else if self.passed() {
            0
        } else {
            1
        }
    }

    pub fn summary_text(&self) -> String {
        let mut s = String::new();
        for v in &self.verdicts {
            let _ = writeln!(s, "{} {}: {}", if v.pass { "PASS" } else { "FAIL" }, v.name, v.detail);
        }
        for f in &self.failures {
            let _ = writeln!(s, "NUMERICAL FAILURE {f}");
        }
        s
    }
}

#[derive(Serialize)]
struct Summary<'a> {
    experiment: &'static str,
    seed: u64,
    passed: bool,
    verdicts: &'a [Verdict],
    failures: &'a [String],
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Report> {
    let mut rep = Report::new(cfg.id(), cfg.seed());
    match cfg {
        ExperimentConfig::Identities(c) => run_identities(c, &mut rep)?,
        ExperimentConfig::MourreScan(c) => run_mourre(c, &mut rep)?,
        ExperimentConfig::LapSweep(c) => run_lap(c, &mut rep)?,
        ExperimentConfig::LocalDecay(c) => run_decay(c, &mut rep)?,
        ExperimentConfig::MonotoneSuite(c) => run_monotone(c, &mut rep)?,
        ExperimentConfig::PolylogVerify(c) => run_polylog(c, &mut rep)?,
        ExperimentConfig::HsCompare(c) => run_hs(c, &mut rep)?,
        ExperimentConfig::BoundsCurve(c) => run_bounds(c, &mut rep)?,
    }
    let summary = Summary {
        experiment: rep.experiment.as_str(),
        seed: rep.seed,
        passed: rep.passed(),
        verdicts: &rep.verdicts,
        failures: &rep.failures,
    };
    let contents = serde_json::to_string_pretty(&summary).map_err(|e| Error::Io(std::io::Error::other(e)))? + "\n";
    rep.artifacts.push(Artifact { name: "summary.json".into(), format: Format::Json, contents });
    Ok(rep)
}

#[derive(Serialize)]
struct ResidualRow {
    d: usize,
    r_box: usize,
    identity: String,
    residual: f64,
    min_eigenvalue: Option<f64>,
}

#[derive(Serialize)]
struct CriticalRow {
    d: usize,
    k: f64,
    e_minus: f64,
    e_plus: f64,
    e_of_k: f64,
    mu: String,
}

fn run_identities(c: &Config<IdentitiesMath>, rep: &mut Report) -> Result<()> {
    let d = c.model.d;
    let mut rows = Vec::new();
    for &r in &c.model.radii {
        let domain = BoxDomain::new(d, r)?;
        let m = c.math.margin;
        rows.push(ResidualRow { d, r_box: r, identity: "laplacian".into(), residual: verify_commutator_identity_laplacian(&domain, m)?, min_eigenvalue: None });
        for k in 1..=d {
            let b = verify_bk_decomposition(&domain, k, m)?;
            rows.push(ResidualRow { d, r_box: r, identity: format!("b_{k}"), residual: b.residual, min_eigenvalue: Some(b.min_eigenvalue) });
        }
        for p in &c.model.potentials {
            let (name, residual) = match p {
                PotentialSpec::Wigner { .. } => ("wigner", verify_commutator_identity_wigner(&domain, p, m)?),
                PotentialSpec::HypothesisH { .. } => ("hypothesis_h", verify_commutator_identity_potential(&domain, p, m)?),
                PotentialSpec::CustomTable { .. } => ("custom_table", verify_commutator_identity_potential(&domain, p, m)?),
            };
            rows.push(ResidualRow { d, r_box: r, identity: name.into(), residual, min_eigenvalue: None });
        }
    }
    let worst = rows.iter().map(|r| r.residual).fold(0.0, f64::max);
    rep.verdict("commutator identities", worst <= c.math.tol, format!("worst interior residual {worst:e} (tol {:e})", c.math.tol));
    rep.csv("residuals", &rows)?;
    let th = thresholds(d)?;
    let exact = th.values.iter().enumerate().all(|(k, &v)| v == 4.0 * k as f64);
    rep.verdict("thresholds", exact, format!("{:?}", th.values));
    let mut crit = Vec::new();
    for &k in &c.math.k_values {
        let e = critical_energies(d, k)?;
        let mu = e.mu.iter().map(|i| format!("({},{})", i.lo, i.hi)).collect::<Vec<_>>().join(" ");
        crit.push(CriticalRow { d, k, e_minus: e.e_minus, e_plus: e.e_plus, e_of_k: e.e_of_k, mu });
    }
    if !crit.is_empty() {
        rep.csv("critical_energies", &crit)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct VanishingRow {
    window: &'static str,
    i_lo: f64,
    i_hi: f64,
    r_box: usize,
    norm: f64,
}

fn run_mourre(c: &Config<MourreMath>, rep: &mut Report) -> Result<()> {
    let m = &c.model;
    let rows = mourre_scan(m.d, &m.radii, &m.potentials, &c.math.windows, c.math.margin)?;
    let positive = rows.iter().all(|r| r.gamma_lower.is_none_or(|g| g > 0.0));
    rep.verdict("positive commutator", positive, format!("{} (window, radius) pairs", rows.len()));
    if let Some(tol) = c.math.rho_rel_tol {
        let r_last = *m.radii.iter().max().expect("radii validated");
        let mut worst = 0.0f64;
        let mut missing = false;
        for w in &c.math.windows {
            let rho = rho_min_on(w, m.d)?;
            match rows.iter().find(|r| r.r_box == r_last && r.i_lo == w.lo && r.i_hi == w.hi).and_then(|r| r.gamma_lower) {
                Some(g) => worst = worst.max((g - rho).abs() / rho.abs()),
                None => missing = true,
            }
        }
        rep.verdict("ϱ-function agreement", !missing && worst <= tol, format!("worst relative deviation {worst:.4} (tol {tol})"));
    }
    rep.csv("mourre", &rows)?;
    if let Some(v) = &c.math.vanishing {
        let main = verify_vanishing(m.d, v.w, v.k, &v.interval, &v.radii)?;
        rep.verdict("vanishing trend", main.decays, format!("norms {:?}, last ratio {:.3}", main.norms, main.last_ratio));
        let mut vr: Vec<VanishingRow> = main
            .radii
            .iter()
            .zip(&main.norms)
            .map(|(&r, &n)| VanishingRow { window: "inside", i_lo: v.interval.lo, i_hi: v.interval.hi, r_box: r, norm: n })
            .collect();
        if let Some(ctl) = &v.control {
            let norms = crate::mourre::vanishing_norms(m.d, v.w, v.k, ctl, &v.radii)?;
            let n = norms.len();
            let ratio = norms[n - 1] / norms[n - 2];
            let flat = norms[n - 1] > 1e-12 && ratio > 0.7;
            rep.verdict("vanishing control", flat, format!("norms {norms:?}, last ratio {ratio:.3}"));
            vr.extend(
                v.radii.iter().zip(&norms).map(|(&r, &x)| VanishingRow { window: "control", i_lo: ctl.lo, i_hi: ctl.hi, r_box: r, norm: x }),
            );
        }
        rep.csv("vanishing", &vr)?;
    }
    Ok(())
}

fn run_lap(c: &Config<LapMath>, rep: &mut Report) -> Result<()> {
    let x = &c.math;
    let cfg = SweepConfig {
        d: c.model.d,
        radii: c.model.radii.clone(),
        potentials: c.model.potentials.clone(),
        j: x.j,
        eta_grid: x.eta_grid.clone(),
        x_points: x.x_points,
        include_eigenvalues: x.include_eigenvalues,
        weight: x.weight,
        weight_on: x.weight_on,
        projector: x.projector,
        candidate_mass: x.candidate_mass,
    };
    cfg.validate().map_err(|e| Error::Config(e.to_string()))?;
    let res = lap_sweep(&cfg)?;
    let v = res.verdict(x.flat_tol, x.control_growth);
    let flat: Vec<String> = v.per_radius.iter().map(|r| format!("R={}: {:.3}", r.r_box, r.flatness)).collect();
    let grow: Vec<String> = v.per_radius.iter().map(|r| format!("R={}: {:.1}", r.r_box, r.control_growth)).collect();
    rep.verdict("weighted sup flat in η", v.flat, format!("max/min over η {} (allowed {})", flat.join(", "), 1.0 + x.flat_tol));
    rep.verdict("unweighted control grows", v.control, format!("growth {} (needed {})", grow.join(", "), x.control_growth));
    for f in &res.failures {
        rep.failures.push(format!("R={} z={}+{}i: {}", f.r_box, f.re_z, f.im_z, f.message));
    }
    let mut buf = Vec::new();
    res.write_csv(&mut buf)?;
    rep.artifacts.push(Artifact { name: "sweep.csv".into(), format: Format::Csv, contents: String::from_utf8_lossy(&buf).into_owned() });
    rep.csv("sups", &res.sups())?;
    rep.json("lap_verdict", &v)?;
    if let Some(kappa) = x.transfer_kappa {
        let t = weight_transfer_check(&cfg)?;
        rep.verdict(
            "A-to-N weight transfer",
            t.within(kappa),
            format!("sup_A/sup_N in [{:.3}, {:.3}] (κ = {kappa})", t.min_ratio, t.max_ratio),
        );
        rep.json("transfer", &t)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct DecayRow {
    run: &'static str,
    r_box: usize,
    t: f64,
    cumulative: f64,
}

fn run_decay(c: &Config<DecayMath>, rep: &mut Report) -> Result<()> {
    let x = &c.math;
    let mut rows = Vec::new();
    for &r in &c.model.radii {
        let cfg = DecayConfig {
            d: c.model.d,
            r_box: r,
            potentials: c.model.potentials.clone(),
            j: x.j,
            weight: x.weight,
            weight_on: x.weight_on,
            projector: x.projector,
            candidate_mass: x.candidate_mass,
            state: x.state.clone(),
            t_max: x.t_max,
            steps: x.steps,
        };
        let res = local_decay(&cfg, c.seed)?;
        rep.verdict(
            &format!("weighted tail saturates (R={r})"),
            res.tail_fraction <= x.max_tail,
            format!("tail fraction {:.4} (max {})", res.tail_fraction, x.max_tail),
        );
        rows.extend(res.times.iter().zip(&res.cumulative).map(|(&t, &v)| DecayRow { run: "weighted", r_box: r, t, cumulative: v }));
        if let Some(ctl) = &x.control {
            let mut cc = cfg.clone();
            cc.weight_on = ctl.weight_on;
            if let Some(s) = &ctl.state {
                cc.state = s.clone();
            }
            let res = local_decay(&cc, c.seed)?;
            rep.verdict(
                &format!("unweighted control does not saturate (R={r})"),
                res.tail_fraction >= ctl.min_tail,
                format!("tail fraction {:.4} (min {})", res.tail_fraction, ctl.min_tail),
            );
            rows.extend(res.times.iter().zip(&res.cumulative).map(|(&t, &v)| DecayRow { run: "control", r_box: r, t, cumulative: v }));
        }
    }
    rep.csv("decay", &rows)?;
    Ok(())
}

#[derive(Serialize)]
struct MonotoneRow {
    f_id: String,
    expected_monotone: bool,
    trials_run: usize,
    worst_min_eigenvalue: f64,
    violated: bool,
}

fn run_monotone(c: &Config<MonotoneMath>, rep: &mut Report) -> Result<()> {
    let x = &c.math;
    let mut rows = Vec::new();
    for (list, expected, trials) in [(&x.positive, true, x.trials), (&x.negative, false, x.negative_trials)] {
        for f in list {
            let p = SuiteParams { a: x.a, b: x.b, n_max: x.n_max, trials, seed: c.seed, tol: x.tol, stop_on_violation: !expected };
            let r = matrix_monotone_suite(f, &p)?;
            let ok = r.violated != expected;
            let what = if expected { "no violation" } else { "counterexample found" };
            rep.verdict(
                &format!("{} {}", r.f_id, what),
                ok,
                format!("{} trials, worst min eigenvalue {:e}", r.trials_run, r.worst_min_eigenvalue),
            );
            if let Some(ce) = &r.counterexample {
                rep.json(&format!("counterexample_{}", sanitize(&r.f_id)), ce)?;
            }
            rows.push(MonotoneRow {
                f_id: r.f_id,
                expected_monotone: expected,
                trials_run: r.trials_run,
                worst_min_eigenvalue: r.worst_min_eigenvalue,
                violated: r.violated,
            });
        }
    }
    rep.csv("monotone", &rows)?;
    Ok(())
}

fn sanitize(s: &str) -> String {
    s.chars().map(|ch| if ch.is_ascii_alphanumeric() { ch } else { '_' }).collect()
}

#[derive(Serialize)]
struct PolylogRow {
    check: &'static str,
    order: f64,
    x: Option<f64>,
    value: f64,
}

fn run_polylog(c: &Config<PolylogMath>, rep: &mut Report) -> Result<()> {
    let x = &c.math;
    let mut rng = ChaCha8Rng::seed_from_u64(c.seed);
    let mut rows = Vec::new();
    let (r_lo, r_hi) = x.overlap_r;
    if !(0.0 < r_lo && r_lo < r_hi && r_hi < 1.0) {
        return Err(Error::Config(format!("overlap_r must satisfy 0 < lo < hi < 1, got {:?}", x.overlap_r)));
    }
    let annulus: Vec<C64> = (0..x.overlap_samples)
        .map(|_| C64::from_polar(rng.random_range(r_lo..r_hi), rng.random_range(-std::f64::consts::PI..std::f64::consts::PI)))
        .collect();
    let mut worst_overlap = 0.0f64;
    for &s in &x.overlap_sigmas {
        let r = integral_rep_residual(s, &annulus)?;
        worst_overlap = worst_overlap.max(r);
        rows.push(PolylogRow { check: "series_vs_integral", order: s + 1.0, x: None, value: r });
    }
    rep.verdict("series/integral agreement", worst_overlap <= x.overlap_tol, format!("worst {worst_overlap:e} (tol {:e})", x.overlap_tol));
    let mut worst_asym = 0.0f64;
    for &n in &x.orders {
        for (xv, ratio) in x.asymptotic_x.iter().zip(verify_asymptotic(n, &x.asymptotic_x)?) {
            if Some(xv) == x.asymptotic_x.last() {
                worst_asym = worst_asym.max((ratio - 1.0).abs());
            }
            rows.push(PolylogRow { check: "asymptotic_ratio", order: n as f64, x: Some(*xv), value: ratio });
        }
    }
    rep.verdict(
        "asymptotic ratio at the largest x",
        worst_asym <= x.asymptotic_tol,
        format!("worst |ratio − 1| {worst_asym:.4} (tol {})", x.asymptotic_tol),
    );
    let upper: Vec<C64> = (0..x.nevanlinna_samples)
        .map(|_| {
            let re = rng.random_range(-1.0f64..1.0) * 10f64.powf(rng.random_range(-1.0..3.0));
            C64::new(re, 10f64.powf(rng.random_range(-3.0..3.0)))
        })
        .collect();
    let mut worst_nev = 0.0f64;
    for &n in &x.orders {
        let v = verify_nevanlinna(n, &upper)?;
        worst_nev = worst_nev.max(v);
        rows.push(PolylogRow { check: "nevanlinna_violation", order: n as f64, x: None, value: v });
    }
    rep.verdict("Nevanlinna positivity", worst_nev <= x.nevanlinna_tol, format!("worst violation {worst_nev:e} over {} samples", upper.len()));
    rep.csv("polylog", &rows)?;
    Ok(())
}

#[derive(Serialize)]
struct HsRow {
    function: String,
    level: u32,
    nodes: usize,
    error: f64,
}

fn run_hs(c: &Config<HsMath>, rep: &mut Report) -> Result<()> {
    let x = &c.math;
    let domain = BoxDomain::new(c.model.d, c.model.radii[0])?;
    let t = build_dilation_generator(&domain).mat;
    let mut rows = Vec::new();
    for case in &x.functions {
        let ext = AlmostAnalyticExtension::new(case.function.clone(), x.order)?;
        let conv = hs_convergence(&t, &ext, case.derivative, &x.levels)?;
        let f = serde_json::to_string(&case.function).map_err(|e| Error::Io(std::io::Error::other(e)))?;
        let name = format!("{f} k={}", case.derivative);
        let last = *conv.errors.last().ok_or_else(|| Error::Config("levels must not be empty".into()))?;
        rep.verdict(&format!("oracle agreement {name}"), last <= x.tol, format!("errors {:?} (tol {:e})", conv.errors, x.tol));
        rep.verdict(&format!("refinement halves error {name}"), conv.halves_until(x.floor), format!("floor {:e}", x.floor));
        for ((&l, &n), &e) in conv.levels.iter().zip(&conv.nodes).zip(&conv.errors) {
            rows.push(HsRow { function: name.clone(), level: l, nodes: n, error: e });
        }
    }
    rep.csv("hs_convergence", &rows)?;
    if let Some(g) = &x.gap {
        let cfg = GapConfig {
            d: c.model.d,
            r_box: g.r_box,
            a_box: g.a_box,
            potentials: c.model.potentials.clone(),
            theta: g.theta,
            eta: g.eta,
            chi: g.chi,
            weight: g.weight,
            r_grid: g.r_grid.clone(),
            tol: g.tol,
            candidate_mass: g.candidate_mass,
        };
        let s = weighted_commutator_gap(&cfg)?;
        let detail = match s.found {
            Some(r) => format!("γ = {:.4}, found R = {r}", s.gamma),
            None => format!("γ = {:.4}, no R in the grid", s.gamma),
        };
        rep.verdict("weighted commutator gap", s.found.is_some() == g.expect_found, detail);
        rep.csv("gap", &s.rows)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct CurveRow {
    lemma: BoundLemma,
    p: f64,
    r_box: usize,
    norm: f64,
}

#[derive(Serialize)]
struct ScalarRow {
    kind: ScalarBound,
    s: f64,
    p: f64,
    sup: f64,
    sup_refined: f64,
}

#[derive(Serialize)]
struct DominationRow {
    d: usize,
    r_box: usize,
    alpha: f64,
    c_d: f64,
    min_eigenvalue: f64,
}

fn run_bounds(c: &Config<BoundsMath>, rep: &mut Report) -> Result<()> {
    let x = &c.math;
    let mut rows = Vec::new();
    for &lemma in &x.lemmas {
        for &p in &x.p_values {
            let curve = boundedness_curve(lemma, c.model.d, &c.model.radii, p, x.m)?;
            if lemma == BoundLemma::Control {
                let g = curve.growth();
                rep.verdict(&format!("{lemma:?} grows (p={p})"), g >= x.control_growth, format!("growth {g:.3} (needed {})", x.control_growth));
            } else {
                let f = curve.flatness();
                rep.verdict(&format!("{lemma:?} flattens (p={p})"), f <= x.flat_tol, format!("norm(last)/norm(mid) {f:.4} (allowed {})", x.flat_tol));
            }
            rows.extend(curve.box_radii.iter().zip(&curve.norms).map(|(&r, &n)| CurveRow { lemma, p, r_box: r, norm: n }));
        }
    }
    rep.csv("curves", &rows)?;
    if let Some(s) = &x.scalar {
        let mut srows = Vec::new();
        for &kind in &s.kinds {
            for &sv in &s.s_values {
                for &p in &s.p_values {
                    let a = scalar_bound_check(kind, sv, p, &s.grid)?;
                    let b = scalar_bound_check(kind, sv, p, &s.grid.refined())?;
                    let ratio = a.max(b) / a.min(b);
                    rep.verdict(
                        &format!("{kind:?} sup stable (s={sv}, p={p})"),
                        ratio <= s.refine_tol,
                        format!("sup {a:.5} → {b:.5} under refinement"),
                    );
                    srows.push(ScalarRow { kind, s: sv, p, sup: a, sup_refined: b });
                }
            }
        }
        rep.csv("scalar_bounds", &srows)?;
    }
    if let Some(dm) = &x.domination {
        let mut drows = Vec::new();
        for &d in &dm.dims {
            let r = verify_a_dominated_by_n(d, dm.radius, dm.alpha)?;
            let cd = c_d(d);
            let formula = ((d * d * d + d * d + 1) as f64).max(4.0 * (d as f64 + 1.0));
            rep.verdict(
                &format!("A-by-N domination (d={d})"),
                !r.violated && cd == formula,
                format!("min eigenvalue {:e}, c_d = {cd}", r.min_eigenvalue_of_difference),
            );
            drows.push(DominationRow { d, r_box: dm.radius, alpha: dm.alpha, c_d: cd, min_eigenvalue: r.min_eigenvalue_of_difference });
        }
        rep.csv("domination", &drows)?;
    }
    if let Some(po) = &x.power_order {
        rep.csv("power_order", &power_order_experiment(po.d, po.radius, &po.powers)?)?;
    }
    Ok(())
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().fold(String::with_capacity(2 * bytes.len()), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex(&Sha256::digest(bytes))
}

/// Run metadata written to `manifest.txt`.
pub struct RunInfo<'a> {
    pub config_text: &'a str,
    pub wall_seconds: f64,
    pub workers: usize,
}

/// Writes the artifacts whose format is enabled, then `manifest.txt`. Returns the paths written.
pub fn write_outputs(rep: &Report, formats: &[Format], dir: &Path, info: &RunInfo) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let mut lines = String::new();
    for a in rep.artifacts.iter().filter(|a| formats.contains(&a.format)) {
        let path = dir.join(&a.name);
        std::fs::write(&path, &a.contents)?;
        let _ = writeln!(lines, "artifact {} sha256={}", a.name, sha256_hex(a.contents.as_bytes()));
        written.push(path);
    }
    let stamp = std::time::SystemTime::now().duration_since(std::time::UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    let mut m = String::new();
    let _ = writeln!(m, "experiment {}", rep.experiment.as_str());
    let _ = writeln!(m, "package {} {}", env!("CARGO_PKG_NAME"), env!("CARGO_PKG_VERSION"));
    let _ = writeln!(m, "config_sha256 {}", sha256_hex(info.config_text.as_bytes()));
    let _ = writeln!(m, "seed {}", rep.seed);
    let _ = writeln!(m, "workers {}", info.workers);
    let _ = writeln!(m, "verdict {}", match rep.exit_code() {
        0 => "pass",
        1 => "fail",
        _ => "numerical-failure",
    });
    let _ = writeln!(m, "wall_time_seconds {:.3}", info.wall_seconds);
    let _ = writeln!(m, "timestamp_unix {stamp}");
    m.push_str(&lines);
    let path = dir.join("manifest.txt");
    std::fs::write(&path, m)?;
    written.push(path);
    Ok(written)
}
