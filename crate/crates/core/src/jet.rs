//! Third-order forward-mode differentiation.
//!
//! A [`Jet`] carries a value together with its first three derivatives with
//! respect to a single real variable. Arithmetic and the elementary functions
//! propagate all four components exactly (Leibniz rule for products,
//! Faà di Bruno for compositions), which is what lets every profile expose
//! clean curvature-grade derivatives without symbolic bookkeeping.

use std::ops::{Add, Div, Mul, Neg, Sub};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jet {
    pub v: f64,
    pub d1: f64,
    pub d2: f64,
    pub d3: f64,
}

impl Jet {
    pub const fn new(v: f64, d1: f64, d2: f64, d3: f64) -> Self {
        Self { v, d1, d2, d3 }
    }

    pub const fn constant(c: f64) -> Self {
        Self::new(c, 0.0, 0.0, 0.0)
    }

    /// The independent variable itself, seeded at `x`.
    pub const fn variable(x: f64) -> Self {
        Self::new(x, 1.0, 0.0, 0.0)
    }

    /// Applies an outer function given its value and first three derivatives
    /// at `self.v`.
    #[inline]
    pub fn compose(self, g: [f64; 4]) -> Self {
        let (f1, f2, f3) = (self.d1, self.d2, self.d3);
        Self {
            v: g[0],
            d1: g[1] * f1,
            d2: g[2] * f1 * f1 + g[1] * f2,
            d3: g[3] * f1 * f1 * f1 + 3.0 * g[2] * f1 * f2 + g[1] * f3,
        }
    }

    pub fn exp(self) -> Self {
        let e = self.v.exp();
        self.compose([e, e, e, e])
    }

    pub fn ln(self) -> Self {
        let x = self.v;
        self.compose([x.ln(), 1.0 / x, -1.0 / (x * x), 2.0 / (x * x * x)])
    }

    pub fn recip(self) -> Self {
        let x = self.v;
        let r = 1.0 / x;
        self.compose([r, -r * r, 2.0 * r * r * r, -6.0 * r * r * r * r])
    }

    pub fn powf(self, p: f64) -> Self {
        let x = self.v;
        if x == 0.0 {
            // Only reached for integer-like exponents in practice; fall back to
            // the generic rule which yields the correct limits for p >= 3.
            let g0 = if p == 0.0 { 1.0 } else { 0.0 };
            let g1 = if p == 1.0 { 1.0 } else { 0.0 };
            let g2 = if p == 2.0 { 2.0 } else { 0.0 };
            let g3 = if p == 3.0 { 6.0 } else { 0.0 };
            return self.compose([g0, g1, g2, g3]);
        }
        let xp = x.powf(p);
        self.compose([
            xp,
            p * xp / x,
            p * (p - 1.0) * xp / (x * x),
            p * (p - 1.0) * (p - 2.0) * xp / (x * x * x),
        ])
    }

    pub fn powi(self, n: u32) -> Self {
        let mut acc = Jet::constant(1.0);
        for _ in 0..n {
            acc = acc * self;
        }
        acc
    }

    /// Multiplies value and all derivatives by `s`.
    pub fn scale(self, s: f64) -> Self {
        Self::new(self.v * s, self.d1 * s, self.d2 * s, self.d3 * s)
    }

    /// Reflects a jet evaluated at `|x|` to the point `-|x|` assuming the
    /// underlying function is odd (`odd = true`) or even.
    pub fn reflect(self, odd: bool) -> Self {
        if odd {
            Self::new(-self.v, self.d1, -self.d2, self.d3)
        } else {
            Self::new(self.v, -self.d1, self.d2, -self.d3)
        }
    }
}

impl Add for Jet {
    type Output = Jet;
    #[inline]
    fn add(self, o: Jet) -> Jet {
        Jet::new(self.v + o.v, self.d1 + o.d1, self.d2 + o.d2, self.d3 + o.d3)
    }
}

impl Sub for Jet {
    type Output = Jet;
    #[inline]
    fn sub(self, o: Jet) -> Jet {
        Jet::new(self.v - o.v, self.d1 - o.d1, self.d2 - o.d2, self.d3 - o.d3)
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
    #[inline]
    fn mul(self, o: Jet) -> Jet {
        Jet::new(
            self.v * o.v,
            self.d1 * o.v + self.v * o.d1,
            self.d2 * o.v + 2.0 * self.d1 * o.d1 + self.v * o.d2,
            self.d3 * o.v + 3.0 * self.d2 * o.d1 + 3.0 * self.d1 * o.d2 + self.v * o.d3,
        )
    }
}

impl Div for Jet {
    type Output = Jet;
    fn div(self, o: Jet) -> Jet {
        self * o.recip()
    }
}

impl Add<f64> for Jet {
    type Output = Jet;
    fn add(self, c: f64) -> Jet {
        Jet::new(self.v + c, self.d1, self.d2, self.d3)
    }
}

impl Mul<f64> for Jet {
    type Output = Jet;
    fn mul(self, c: f64) -> Jet {
        self.scale(c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-12 * (1.0 + b.abs())
    }

    #[test]
    fn product_and_quotient_rules() {
        // f(x) = x^2 / (1 + x) at x = 2, derivatives by hand.
        let x = Jet::variable(2.0);
        let f = (x * x) / (x + 1.0);
        assert!(close(f.v, 4.0 / 3.0));
        // f' = (x^2 + 2x)/(1+x)^2 = 8/9
        assert!(close(f.d1, 8.0 / 9.0));
        // f'' = 2/(1+x)^3 = 2/27
        assert!(close(f.d2, 2.0 / 27.0));
        // f''' = -6/(1+x)^4 = -6/81
        assert!(close(f.d3, -6.0 / 81.0));
    }

    #[test]
    fn exp_of_quadratic() {
        let r = 0.7;
        let x = Jet::variable(r);
        let g = (x * x * -0.5).exp();
        let e = (-0.5 * r * r).exp();
        assert!(close(g.d1, -r * e));
        assert!(close(g.d2, (r * r - 1.0) * e));
        assert!(close(g.d3, (3.0 * r - r * r * r) * e));
    }

    #[test]
    fn powf_matches_closed_form() {
        let r: f64 = 1.3;
        let q = 0.6;
        let w = (Jet::variable(r) * Jet::variable(r) + 1.0).powf(q);
        let base: f64 = 1.0 + r * r;
        assert!(close(w.v, base.powf(q)));
        assert!(close(w.d1, 2.0 * q * r * base.powf(q - 1.0)));
    }

    #[test]
    fn reflection_parity() {
        let x = Jet::variable(0.4);
        let s = (x.exp() - (-x).exp()) * 0.5;
        let neg = (Jet::variable(-0.4).exp() - (-Jet::variable(-0.4)).exp()) * 0.5;
        let refl = s.reflect(true);
        assert!(close(refl.v, neg.v) && close(refl.d1, neg.d1));
        assert!(close(refl.d2, neg.d2) && close(refl.d3, neg.d3));
    }
}
