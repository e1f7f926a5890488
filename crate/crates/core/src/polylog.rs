//! Polylogarithms `Li_σ`, the Nevanlinna variants `Φ_σ(z) = −Li_σ(−z)` and their
//! Herglotz representation.

use crate::error::{Error, Result};
use crate::quad;
use num_complex::Complex64 as C64;
use statrs::function::gamma::gamma;

const SERIES_RADIUS: f64 = 0.5;

/// Power series `Σ z^k/k^σ`, valid for `|z| < 1`.
pub fn li_series(sigma: f64, z: C64) -> Result<C64> {
    let r = z.norm();
    if r >= 1.0 {
        return Err(Error::Domain(format!("series needs |z| < 1, got {r}")));
    }
    let mut sum = C64::new(0.0, 0.0);
    let mut pow = z;
    for k in 1..200_000u32 {
        let term = pow / (k as f64).powf(sigma);
        sum += term;
        // remaining tail is at most |term|·r/(1−r)
        if term.norm() * r / (1.0 - r) <= 1e-17 * sum.norm().max(1e-300) || term.norm() == 0.0 {
            return Ok(sum);
        }
        pow *= z;
    }
    Err(Error::NoConvergence { iterations: 200_000, estimate: sum.norm() })
}

/// Integral representation `z/Γ(σ) ∫_0^∞ v^{σ−1}/(e^v − z) dv` (that is, `λ = e^v`).
///
/// On `v ∈ [0, 1]` the substitution `v = w^{1/σ}` removes the endpoint power, giving
/// `z/Γ(σ+1) ∫_0^1 dw/(e^{w^{1/σ}} − z)`; on `v ≥ 1` the variable `t = e^{−v}` gives
/// `z/Γ(σ) ∫_0^{1/e} (−log t)^{σ−1}/(1 − z t) dt`.
pub fn li_integral(sigma: f64, z: C64) -> Result<C64> {
    if !(sigma > 0.0) {
        return Err(Error::Domain(format!("order must be positive, got {sigma}")));
    }
    if z.im == 0.0 && z.re >= 1.0 && !(z.re == 1.0 && sigma > 1.0) {
        return Err(Error::Domain(format!("z = {} lies on the branch cut", z.re)));
    }
    if z == C64::new(0.0, 0.0) {
        return Ok(z);
    }
    let one = C64::new(1.0, 0.0);
    let near = |w: f64| one / (C64::new(w.powf(1.0 / sigma).exp(), 0.0) - z);
    let far = |t: f64| {
        let l = -t.ln();
        let num = if sigma == 1.0 { 1.0 } else { l.powf(sigma - 1.0) };
        C64::new(num, 0.0) / (one - z * t)
    };
    // |e^v − z| is smallest near v = log|z|; split there so the adaptive rule sees the peak
    let v_star = z.norm().ln();
    let mut near_cuts = vec![0.0, 1.0];
    let mut far_cuts = vec![0.0, (-1.0f64).exp()];
    if v_star > 0.0 && v_star < 1.0 {
        near_cuts.insert(1, v_star.powf(sigma));
    } else if v_star > 1.0 {
        far_cuts.insert(1, (-v_star).exp());
    }
    let run = |f: &dyn Fn(f64) -> C64, cuts: &[f64]| -> Result<C64> {
        let mut total = C64::new(0.0, 0.0);
        for w in cuts.windows(2) {
            let r = quad::integrate(f, w[0], w[1], 1e-15, 1e-13, 20_000);
            if !r.converged && r.error > 1e-10 * r.value.norm().max(1.0) {
                return Err(Error::NoConvergence { iterations: r.evaluations, estimate: r.error });
            }
            total += r.value;
        }
        Ok(total)
    };
    let a = run(&near, &near_cuts)? / gamma(sigma + 1.0);
    let b = run(&far, &far_cuts)? / gamma(sigma);
    Ok(z * (a + b))
}

/// `Li_σ(z)`: series inside `|z| ≤ 1/2`, integral representation elsewhere off `[1, ∞)`.
pub fn li(sigma: f64, z: C64) -> Result<C64> {
    if !(sigma > 0.0) {
        return Err(Error::Domain(format!("order must be positive, got {sigma}")));
    }
    if z.norm() <= SERIES_RADIUS {
        li_series(sigma, z)
    } else {
        li_integral(sigma, z)
    }
}

/// `Φ_σ(z) = −Li_σ(−z)` for `z ∉ (−∞, −1]`.
pub fn phi_complex(sigma: f64, z: C64) -> Result<C64> {
    if z.im == 0.0 && z.re <= -1.0 {
        return Err(Error::Domain(format!("z = {} lies on the cut of Φ", z.re)));
    }
    Ok(-li(sigma, -z)?)
}

/// Real `Φ_n(x)`, `x > −1`; `Φ_1(x) = log(1+x)` in closed form.
pub fn phi(n: u32, x: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::Domain("Φ_n needs n ≥ 1".into()));
    }
    if !(x > -1.0) {
        return Err(Error::Domain(format!("Φ_n needs x > −1, got {x}")));
    }
    if n == 1 {
        return Ok(x.ln_1p());
    }
    Ok(phi_complex(n as f64, C64::new(x, 0.0))?.re)
}

/// `n!·Φ_n(x)/log^n(x)` on each grid point.
pub fn verify_asymptotic(n: u32, x_grid: &[f64]) -> Result<Vec<f64>> {
    let fact: f64 = (1..=n).map(|k| k as f64).product();
    x_grid
        .iter()
        .map(|&x| {
            if x < 10.0 {
                return Err(Error::Domain(format!("asymptotic grid needs x ≥ 10, got {x}")));
            }
            Ok(fact * phi(n, x)? / x.ln().powi(n as i32))
        })
        .collect()
}

/// `max_z max(0, −Im Φ_n(z))` over samples in the open upper half-plane.
pub fn verify_nevanlinna(n: u32, samples: &[C64]) -> Result<f64> {
    let mut worst = 0.0f64;
    for &z in samples {
        if !(z.im > 0.0) {
            return Err(Error::Domain(format!("sample {z} is not in the upper half-plane")));
        }
        worst = worst.max(-phi_complex(n as f64, z)?.im);
    }
    Ok(worst)
}

/// `max |Li_{σ+1}(z) by series − by integral|` over samples with `|z| < 1`.
pub fn integral_rep_residual(sigma: f64, samples: &[C64]) -> Result<f64> {
    if !(sigma > -1.0) {
        return Err(Error::Domain(format!("σ must exceed −1, got {sigma}")));
    }
    let mut worst = 0.0f64;
    for &z in samples {
        let s = li_series(sigma + 1.0, z)?;
        let i = li_integral(sigma + 1.0, z)?;
        worst = worst.max((s - i).norm());
    }
    Ok(worst)
}

/// `f(z) = α + βz + ∫ (1/(λ−z) − λ/(λ²+1)) ρ(λ) dλ` with `ρ` supported on `(−∞, −1]`.
pub struct NevanlinnaRep {
    pub alpha: f64,
    pub beta: f64,
    pub density: Box<dyn Fn(f64) -> f64 + Send + Sync>,
    pub support: (f64, f64),
}

impl NevanlinnaRep {
    /// Representation of `Φ_{σ+1}`: density `log^σ(−λ)/Γ(σ+1)` on `(−∞, −1]`.
    pub fn for_phi(sigma: f64) -> Result<NevanlinnaRep> {
        if !(sigma > -1.0) {
            return Err(Error::Domain(format!("σ must exceed −1, got {sigma}")));
        }
        let g = gamma(sigma + 1.0);
        // α = (1/Γ)∫_1^∞ log^σ(λ)/(λ(λ²+1)) dλ, with λ = 1/t
        let a = quad::integrate_real(|t| (-t.ln()).powf(sigma) * t / (1.0 + t * t), 0.0, 1.0, 1e-15, 1e-14, 5000);
        Ok(NevanlinnaRep {
            alpha: a.value.re / g,
            beta: 0.0,
            density: Box::new(move |l: f64| if l <= -1.0 { (-l).ln().powf(sigma) / g } else { 0.0 }),
            support: (f64::NEG_INFINITY, -1.0),
        })
    }

    /// `∫ ρ(λ)/(λ²+1) dλ`, finite for a genuine representing measure.
    pub fn measure_mass(&self) -> f64 {
        // λ = −1/t maps (−∞, −1] onto (0, 1]
        quad::integrate_real(|t| (self.density)(-1.0 / t) / (1.0 + t * t), 0.0, 1.0, 1e-14, 1e-12, 5000).value.re
    }

    pub fn evaluate(&self, z: C64) -> C64 {
        let f = |t: f64| {
            let l = -1.0 / t;
            let kernel = C64::new(1.0, 0.0) / (C64::new(l, 0.0) - z) - l / (l * l + 1.0);
            kernel * (self.density)(l) / (t * t)
        };
        let r = quad::integrate(f, 0.0, 1.0, 1e-14, 1e-13, 20_000);
        C64::new(self.alpha, 0.0) + self.beta * z + r.value
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    /// Inversion formula for integer order, an independent route to `Li_n(z)` for `|z| > 1`:
    /// `Li_n(z) + (−1)^n Li_n(1/z) = −(2πi)^n/n! · B_n(1/2 + log(−z)/(2πi))`.
    fn li_by_inversion(n: u32, z: C64) -> C64 {
        let w = c(0.5, 0.0) + (-z).ln() / c(0.0, 2.0 * PI);
        let b = match n {
            1 => w - 0.5,
            2 => w * w - w + 1.0 / 6.0,
            3 => w * w * w - w * w * 1.5 + w * 0.5,
            _ => unreachable!(),
        };
        let fact: f64 = (1..=n).map(|k| k as f64).product();
        let lhs = -c(0.0, 2.0 * PI).powu(n) / fact * b;
        let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
        lhs - sign * li_series(n as f64, 1.0 / z).unwrap()
    }

    #[test]
    fn zero_and_special_values() {
        for s in [0.3, 1.0, 2.5] {
            assert_eq!(li(s, c(0.0, 0.0)).unwrap(), c(0.0, 0.0));
        }
        let zeta2: f64 = (1..2_000_000u64).map(|k| 1.0 / (k as f64 * k as f64)).sum::<f64>() + 1.0 / 2_000_000.0;
        assert!((li(2.0, c(1.0, 0.0)).unwrap().re - zeta2).abs() < 1e-10);
        let zeta3: f64 = (1..200_000u64).map(|k| (k as f64).powi(-3)).sum::<f64>() + 0.5 / 200_000f64.powi(2);
        assert!((li(3.0, c(1.0, 0.0)).unwrap().re - zeta3).abs() < 1e-10);
        assert!(li(1.0, c(1.0, 0.0)).is_err());
        assert!(li(2.0, c(3.0, 0.0)).is_err());
        assert!(li(0.0, c(0.1, 0.0)).is_err());
    }

    #[test]
    fn phi_closed_form_and_monotone() {
        assert!((phi(1, 1.0).unwrap() - 2f64.ln()).abs() < 1e-15);
        for n in 1..=4 {
            assert_eq!(phi(n, 0.0).unwrap(), 0.0);
        }
        // order 1 through the integral agrees with the logarithm
        for x in [0.7, 4.0, 100.0] {
            let v = phi_complex(1.0, c(x, 0.0)).unwrap().re;
            assert!((v - x.ln_1p()).abs() < 1e-11);
        }
        assert!(phi(2, -1.0).is_err());
        let mut prev = f64::NEG_INFINITY;
        for x in [-0.9, -0.5, 0.0, 0.4, 0.6, 3.0, 50.0, 1e4] {
            let v = phi(3, x).unwrap();
            assert!(v > prev);
            prev = v;
        }
    }

    #[test]
    fn phi3_at_ten_two_methods() {
        let by_integral = phi(3, 10.0).unwrap();
        let by_inversion = -li_by_inversion(3, c(-10.0, 0.0)).re;
        assert!((by_integral - by_inversion).abs() < 1e-9);
        for n in [2, 3] {
            for x in [2.0, 37.0, 1e6] {
                let a = phi(n, x).unwrap();
                let b = -li_by_inversion(n, c(-x, 0.0)).re;
                assert!((a - b).abs() < 1e-9 * b.abs().max(1.0), "n={n} x={x}");
            }
        }
    }

    #[test]
    fn complex_values_against_inversion() {
        for z in [c(-3.0, 2.0), c(0.2, -4.0), c(5.0, 0.5)] {
            let a = li(2.0, z).unwrap();
            let b = li_by_inversion(2, z);
            assert!((a - b).norm() < 1e-9, "{z}: {a} vs {b}");
        }
    }

    #[test]
    fn asymptotics() {
        let r1 = verify_asymptotic(1, &[1e8]).unwrap();
        assert!((r1[0] - 1.0).abs() < 1e-8);
        let r3 = verify_asymptotic(3, &[1e8]).unwrap();
        assert!((r3[0] - 1.0).abs() < 5e-2);
        let r2 = verify_asymptotic(2, &[1e4, 1e6, 1e8]).unwrap();
        assert!((r2[0] - 1.0).abs() > (r2[1] - 1.0).abs());
        assert!((r2[1] - 1.0).abs() > (r2[2] - 1.0).abs());
        assert!(verify_asymptotic(2, &[5.0]).is_err());
    }

    #[test]
    fn nevanlinna_and_reflection() {
        assert!(phi_complex(2.0, c(0.0, 1.0)).unwrap().im > 0.0);
        assert!(phi_complex(3.0, c(5.0, 0.01)).unwrap().im >= 0.0);
        assert_eq!(verify_nevanlinna(3, &[c(-4.0, 0.05), c(2.0, 3.0)]).unwrap(), 0.0);
        assert!(verify_nevanlinna(2, &[c(1.0, 0.0)]).is_err());
        for x in [-0.5, 0.3, 7.0] {
            assert!(phi_complex(2.0, c(x, 0.0)).unwrap().im.abs() < 1e-13);
        }
        for z in [c(-3.0, 0.7), c(2.0, 1.0), c(0.1, 0.2)] {
            let a = phi_complex(3.0, z.conj()).unwrap();
            let b = phi_complex(3.0, z).unwrap().conj();
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn integral_representation_replay() {
        assert!(integral_rep_residual(2.0, &[c(0.5, 0.0)]).unwrap() <= 1e-9);
        assert!(integral_rep_residual(0.5, &[c(-0.9, 0.0)]).unwrap() <= 1e-9);
        assert_eq!(integral_rep_residual(1.0, &[c(0.0, 0.0)]).unwrap(), 0.0);
        assert!(integral_rep_residual(-0.5, &[c(0.3, 0.4), c(-0.2, 0.6)]).unwrap() <= 1e-9);
    }

    #[test]
    fn herglotz_representation() {
        let rep = NevanlinnaRep::for_phi(2.0).unwrap();
        assert!(rep.measure_mass().is_finite());
        assert!((rep.density)(-5.0) >= 0.0);
        for z in [c(0.5, 0.0), c(3.0, 2.0), c(-2.0, 0.5)] {
            let a = rep.evaluate(z);
            let b = phi_complex(3.0, z).unwrap();
            assert!((a - b).norm() < 1e-9, "{z}: {a} vs {b}");
        }
    }
}
