//! Truncated Taylor jets: exact chain-rule derivatives of the weight functions.

use std::ops::{Add, Div, Mul, Neg, Sub};

pub const ORDER: usize = 8;

/// Normalized Taylor coefficients `c_j = f^(j)(x0) / j!` for `j < ORDER`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jet {
    pub c: [f64; ORDER],
}

impl Jet {
    pub fn constant(v: f64) -> Jet {
        let mut c = [0.0; ORDER];
        c[0] = v;
        Jet { c }
    }

    pub fn variable(x: f64) -> Jet {
        let mut c = [0.0; ORDER];
        c[0] = x;
        c[1] = 1.0;
        Jet { c }
    }

    pub fn value(&self) -> f64 {
        self.c[0]
    }

    pub fn derivative(&self, k: usize) -> f64 {
        let fact: f64 = (1..=k).map(|i| i as f64).product();
        self.c[k] * fact
    }

    pub fn derivatives(&self) -> [f64; ORDER] {
        let mut out = [0.0; ORDER];
        for (k, o) in out.iter_mut().enumerate() {
            *o = self.derivative(k);
        }
        out
    }

    /// `f∘self`, given the normalized Taylor coefficients of `f` at `self.value()`.
    pub fn compose(&self, f: &[f64; ORDER]) -> Jet {
        let mut h = *self;
        h.c[0] = 0.0;
        let mut out = Jet::constant(f[0]);
        let mut pow = Jet::constant(1.0);
        for fj in f.iter().skip(1) {
            pow = pow * h;
            for k in 0..ORDER {
                out.c[k] += fj * pow.c[k];
            }
        }
        out
    }

    pub fn ln1p(&self) -> Jet {
        let y = self.c[0];
        let mut f = [0.0; ORDER];
        f[0] = y.ln_1p();
        for (j, fj) in f.iter_mut().enumerate().skip(1) {
            let sign = if j % 2 == 1 { 1.0 } else { -1.0 };
            *fj = sign / (j as f64 * (1.0 + y).powi(j as i32));
        }
        self.compose(&f)
    }

    pub fn ln(&self) -> Jet {
        let y = self.c[0];
        let mut f = [0.0; ORDER];
        f[0] = y.ln();
        for (j, fj) in f.iter_mut().enumerate().skip(1) {
            let sign = if j % 2 == 1 { 1.0 } else { -1.0 };
            *fj = sign / (j as f64 * y.powi(j as i32));
        }
        self.compose(&f)
    }

    pub fn powf(&self, a: f64) -> Jet {
        let y = self.c[0];
        let mut f = [0.0; ORDER];
        let mut binom = 1.0;
        for (j, fj) in f.iter_mut().enumerate() {
            if j > 0 {
                binom *= (a - (j as f64 - 1.0)) / j as f64;
            }
            *fj = binom * y.powf(a - j as f64);
        }
        self.compose(&f)
    }

    pub fn sqrt(&self) -> Jet {
        self.powf(0.5)
    }

    pub fn exp(&self) -> Jet {
        let e = self.c[0].exp();
        let mut f = [0.0; ORDER];
        let mut fact = 1.0;
        for (j, fj) in f.iter_mut().enumerate() {
            if j > 0 {
                fact *= j as f64;
            }
            *fj = e / fact;
        }
        self.compose(&f)
    }

    pub fn scale(&self, s: f64) -> Jet {
        let mut out = *self;
        for v in out.c.iter_mut() {
            *v *= s;
        }
        out
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(mut self, o: Jet) -> Jet {
        for k in 0..ORDER {
            self.c[k] += o.c[k];
        }
        self
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(mut self, o: Jet) -> Jet {
        for k in 0..ORDER {
            self.c[k] -= o.c[k];
        }
        self
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, o: Jet) -> Jet {
        let mut c = [0.0; ORDER];
        for i in 0..ORDER {
            for j in 0..ORDER - i {
                c[i + j] += self.c[i] * o.c[j];
            }
        }
        Jet { c }
    }
}

impl Div for Jet {
    type Output = Jet;
    fn div(self, o: Jet) -> Jet {
        let mut q = [0.0; ORDER];
        for k in 0..ORDER {
            let mut s = self.c[k];
            for j in 0..k {
                s -= q[j] * o.c[k - j];
            }
            q[k] = s / o.c[0];
        }
        Jet { c: q }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derivatives_of_exp_sin_free_expression() {
        // f(x) = sqrt(1+x^2), f'(x) = x/f, f''(x) = 1/f^3
        let x = 0.7;
        let j = (Jet::variable(x) * Jet::variable(x) + Jet::constant(1.0)).sqrt();
        let f = (1.0 + x * x).sqrt();
        assert!((j.derivative(1) - x / f).abs() < 1e-15);
        assert!((j.derivative(2) - 1.0 / f.powi(3)).abs() < 1e-15);
        assert!((j.derivative(3) - (-3.0 * x / f.powi(5))).abs() < 1e-14);
    }

    #[test]
    fn ln1p_and_exp_invert() {
        let j = Jet::variable(0.3).ln1p().exp();
        assert!((j.value() - 1.3).abs() < 1e-15);
        assert!((j.derivative(1) - 1.0).abs() < 1e-14);
        for k in 2..ORDER {
            assert!(j.derivative(k).abs() < 1e-11, "k={k} {}", j.derivative(k));
        }
    }

    #[test]
    fn division_matches_powf() {
        let a = Jet::variable(1.7);
        let r1 = Jet::constant(1.0) / a;
        let r2 = a.powf(-1.0);
        for k in 0..ORDER {
            assert!((r1.c[k] - r2.c[k]).abs() < 1e-14);
        }
    }
}
