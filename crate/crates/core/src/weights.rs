//! Iterated logarithms, the weight family `w_M^{α,β}`, the bounded function φ and
//! weight operators built by functional calculus.

use crate::error::{Error, Result};
use crate::jet::Jet;
use crate::quad;
use crate::spectral::EigenSystem;
use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

/// `⟨x⟩ = √(1 + x²)`.
pub fn bracket(x: f64) -> f64 {
    x.hypot(1.0)
}

/// `log_0 ≡ 1`, `log_1(x) = log(1+x)`, `log_k = log(1 + log_{k−1})`.
pub fn iterated_log(k: usize, x: f64) -> f64 {
    if k == 0 {
        return 1.0;
    }
    let mut v = x;
    for _ in 0..k {
        v = v.ln_1p();
    }
    v
}

/// `log_{M+1}^α(⟨x⟩) Π_{k=0}^M log_k^β(⟨x⟩)`.
pub fn w_m(m: usize, alpha: f64, beta: f64, x: f64) -> f64 {
    let y = bracket(x);
    let mut prod = 1.0;
    let mut l = y;
    for _ in 1..=m {
        l = l.ln_1p();
        prod *= l.powf(beta);
    }
    l = l.ln_1p();
    prod * l.powf(alpha)
}

pub fn bracket_jet(x: Jet) -> Jet {
    (x * x + Jet::constant(1.0)).sqrt()
}

pub fn w_m_jet(m: usize, alpha: f64, beta: f64, x: Jet) -> Jet {
    let mut l = bracket_jet(x);
    let mut prod = Jet::constant(1.0);
    for _ in 1..=m {
        l = l.ln1p();
        prod = prod * l.powf(beta);
    }
    l = l.ln1p();
    prod * l.powf(alpha)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightSpec {
    #[serde(rename = "M")]
    pub m: usize,
    pub p: f64,
    #[serde(default)]
    pub alpha: f64,
    #[serde(default)]
    pub beta: f64,
    #[serde(default = "one")]
    pub scale_r: f64,
}

fn one() -> f64 {
    1.0
}

impl WeightSpec {
    pub fn new(m: usize, p: f64) -> WeightSpec {
        WeightSpec { m, p, alpha: 0.0, beta: 0.0, scale_r: 1.0 }
    }

    pub fn with_scale(mut self, r: f64) -> WeightSpec {
        self.scale_r = r;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.scale_r >= 1.0) || !self.p.is_finite() || !self.alpha.is_finite() || !self.beta.is_finite() {
            return Err(Error::Domain(format!("invalid weight spec {self:?}")));
        }
        Ok(())
    }

    /// `w_M^{α,β}(x/R)`.
    pub fn scalar(&self, x: f64) -> f64 {
        w_m(self.m, self.alpha, self.beta, x / self.scale_r)
    }

    /// `𝒲_{M+1}^{−p}(x/R) = ⟨x/R⟩^{−1/2} w_M^{−p,−1/2}(x/R)`.
    pub fn composite(&self, x: f64) -> f64 {
        let u = x / self.scale_r;
        bracket(u).powf(-0.5) * w_m(self.m, -self.p, -0.5, u)
    }

    pub fn composite_jet(&self, x: Jet) -> Jet {
        let u = x.scale(1.0 / self.scale_r);
        bracket_jet(u).powf(-0.5) * w_m_jet(self.m, -self.p, -0.5, u)
    }

    pub fn phi_prime(&self, t: f64) -> f64 {
        phi_prime(self.m, self.p, t / self.scale_r)
    }

    pub fn phi(&self, t: f64) -> Result<f64> {
        Phi::new(self.m, self.p)?.value(t / self.scale_r)
    }
}

/// `1/(⟨t⟩ w_M^{2p,1}(t))`, the integrand defining φ.
pub fn phi_prime(m: usize, p: f64, t: f64) -> f64 {
    1.0 / (bracket(t) * w_m(m, 2.0 * p, 1.0, t))
}

pub fn phi_prime_jet(m: usize, p: f64, t: Jet) -> Jet {
    Jet::constant(1.0) / (bracket_jet(t) * w_m_jet(m, 2.0 * p, 1.0, t))
}

/// `φ(t) = ∫_{−∞}^t φ′`, a bounded increasing function when `p > 1/2`.
///
/// On `[0, 1]` the integrand is integrated directly. Beyond `x = 1` the variable
/// `u = log_{M+1}(⟨x⟩)` turns the integrand into `g(u)·u^{−2p}` with `g → 1`, and
/// `u = u_1 e^s` makes the remaining tail exponentially small in `s`.
#[derive(Clone, Copy, Debug)]
pub struct Phi {
    m: usize,
    p: f64,
    u1: f64,
    half: f64,
}

const PHI_TOL: f64 = 1e-13;
const S_MAX: f64 = 60.0;

impl Phi {
    pub fn new(m: usize, p: f64) -> Result<Phi> {
        if !(p > 0.5) {
            return Err(Error::Domain(format!("φ needs p > 1/2, got {p}")));
        }
        let u1 = iterated_log(m + 1, bracket(1.0));
        let mut phi = Phi { m, p, u1, half: 0.0 };
        let big_u = u1 * S_MAX.exp();
        phi.half = phi.core(1.0) + phi.tail_between(u1, big_u) + big_u.powf(1.0 - 2.0 * p) / (2.0 * p - 1.0);
        Ok(phi)
    }

    /// `φ(∞)`.
    pub fn total(&self) -> f64 {
        2.0 * self.half
    }

    fn core(&self, x: f64) -> f64 {
        let (m, p) = (self.m, self.p);
        quad::integrate_real(|t| phi_prime(m, p, t), 0.0, x, PHI_TOL, 0.0, 2000).value.re
    }

    /// `g(u)` with every overflowing factor replaced by its limit 1.
    fn g(&self, u: f64) -> f64 {
        let mut ls = vec![u];
        let mut cur = u;
        for _ in 0..=self.m {
            cur = cur.exp_m1();
            ls.push(cur);
        }
        // ls = [L_{M+1}, L_M, …, L_1, L_0 = y]
        let y = ls[self.m + 1];
        if !y.is_finite() {
            return ls[1..=self.m]
                .iter()
                .filter(|l| l.is_finite())
                .map(|l| (1.0 + l) / l)
                .product();
        }
        let x = (y - 1.0).sqrt() * (y + 1.0).sqrt();
        let mut g = (1.0 + y) / x;
        for l in &ls[1..=self.m] {
            g *= (1.0 + l) / l;
        }
        g
    }

    fn tail_between(&self, ua: f64, ub: f64) -> f64 {
        if ub <= ua {
            return 0.0;
        }
        let p = self.p;
        let sb = (ub / ua).ln();
        let f = |s: f64| {
            let u = ua * s.exp();
            self.g(u) * u.powf(1.0 - 2.0 * p)
        };
        quad::integrate_real(f, 0.0, sb, PHI_TOL, 0.0, 4000).value.re
    }

    /// `∫_0^{|t|} φ′`.
    fn from_zero(&self, a: f64) -> f64 {
        if a <= 1.0 {
            self.core(a)
        } else {
            let ua = iterated_log(self.m + 1, bracket(a));
            self.core(1.0) + self.tail_between(self.u1, ua)
        }
    }

    pub fn value(&self, t: f64) -> Result<f64> {
        if t.is_nan() {
            return Err(Error::Domain("φ(NaN)".into()));
        }
        if t.is_infinite() {
            return Ok(if t > 0.0 { self.total() } else { 0.0 });
        }
        let v = self.from_zero(t.abs());
        Ok(if t >= 0.0 { self.half + v } else { self.half - v })
    }

    /// Taylor jet of φ at `t`: value by quadrature, higher coefficients from φ′.
    pub fn jet(&self, t: f64) -> Result<Jet> {
        let d = phi_prime_jet(self.m, self.p, Jet::variable(t));
        let mut c = [0.0; crate::jet::ORDER];
        c[0] = self.value(t)?;
        for k in 1..crate::jet::ORDER {
            c[k] = d.c[k - 1] / k as f64;
        }
        Ok(Jet { c })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightVariant {
    W,
    WComposite,
    Phi,
    PhiPrime,
}

/// `f(T/R)` for the scalar function selected by `variant`.
pub fn weight_operator(es: &EigenSystem, spec: &WeightSpec, variant: WeightVariant) -> Result<DMatrix<C64>> {
    spec.validate()?;
    match variant {
        WeightVariant::W => es.apply_function(|x| spec.scalar(x)),
        WeightVariant::WComposite => es.apply_function(|x| spec.composite(x)),
        WeightVariant::PhiPrime => es.apply_function(|x| spec.phi_prime(x)),
        WeightVariant::Phi => {
            let phi = Phi::new(spec.m, spec.p)?;
            let mut d = Vec::with_capacity(es.dim());
            for &l in &es.values {
                d.push(C64::new(phi.value(l / spec.scale_r)?, 0.0));
            }
            Ok(es.from_diagonal(&d))
        }
    }
}
