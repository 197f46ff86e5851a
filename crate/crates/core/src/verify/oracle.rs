//! Reference values computed independently of [`crate::specfun`]:
//! double-double power series for `I_n` and the Turán difference, and
//! trapezoidal quadrature of `∫₀^∞ e^{−x cosh t} cosh(νt) dt` for `K_ν`.

use std::ops::{Add, Div, Mul, Neg, Sub};

/// Unevaluated sum `hi + lo` with `|lo| ≤ ulp(hi)/2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dd {
    pub hi: f64,
    pub lo: f64,
}

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

impl Dd {
    pub const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };

    pub fn from_f64(x: f64) -> Self {
        Dd { hi: x, lo: 0.0 }
    }

    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    fn renorm(hi: f64, lo: f64) -> Self {
        let (hi, lo) = quick_two_sum(hi, lo);
        Dd { hi, lo }
    }

    pub fn mul_f64(self, b: f64) -> Dd {
        let (p, e) = two_prod(self.hi, b);
        Dd::renorm(p, e + self.lo * b)
    }

    pub fn div_f64(self, b: f64) -> Dd {
        let q1 = self.hi / b;
        let (p, pe) = two_prod(q1, b);
        let (s, e) = two_sum(self.hi, -p);
        let q2 = (s + (e - pe + self.lo)) / b;
        Dd::renorm(q1, q2)
    }
}

impl Add for Dd {
    type Output = Dd;

    fn add(self, o: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, o.hi);
        let (t, f) = two_sum(self.lo, o.lo);
        let (s, e) = quick_two_sum(s, e + t);
        Dd::renorm(s, e + f)
    }
}

impl Neg for Dd {
    type Output = Dd;

    fn neg(self) -> Dd {
        Dd { hi: -self.hi, lo: -self.lo }
    }
}

impl Sub for Dd {
    type Output = Dd;

    fn sub(self, o: Dd) -> Dd {
        self + (-o)
    }
}

impl Mul for Dd {
    type Output = Dd;

    fn mul(self, o: Dd) -> Dd {
        let (p, e) = two_prod(self.hi, o.hi);
        Dd::renorm(p, e + (self.hi * o.lo + self.lo * o.hi))
    }
}

impl Div for Dd {
    type Output = Dd;

    fn div(self, o: Dd) -> Dd {
        let q1 = self.hi / o.hi;
        let r = self - o.mul_f64(q1);
        let q2 = r.hi / o.hi;
        let r = r - o.mul_f64(q2);
        let q3 = r.hi / o.hi;
        let (a, b) = quick_two_sum(q1, q2);
        Dd { hi: a, lo: b } + Dd::from_f64(q3)
    }
}

/// `I_n(x)` as a double-double from `Σ (x/2)^{2k+n} / (k!(k+n)!)`.
pub fn bessel_i_dd(n: u32, x: f64) -> Dd {
    let half = Dd::from_f64(x * 0.5);
    let y = half * half;
    let mut term = Dd::from_f64(1.0);
    for k in 1..=n {
        term = (term * half).div_f64(k as f64);
    }
    let mut sum = term;
    for k in 1..2000u32 {
        term = (term * y).div_f64((k * (k + n)) as f64);
        sum = sum + term;
        if term.hi.abs() < 1e-34 * sum.hi.abs() {
            break;
        }
    }
    sum
}

pub fn bessel_i(n: u32, x: f64) -> f64 {
    bessel_i_dd(n, x).to_f64()
}

/// `K_ν(x)` by the trapezoidal rule on `e^{−x(cosh t − 1)} cosh(νt)`, which
/// converges geometrically for this entire integrand.
pub fn bessel_k(nu: u32, x: f64) -> f64 {
    assert!(x > 0.0);
    let h = 1.0 / 128.0;
    let t_max = (800.0 / x + 1.0).acosh() + 1.0;
    let steps = (t_max / h).ceil() as usize;
    let mut sum = Dd::from_f64(0.5);
    for i in 1..=steps {
        let t = i as f64 * h;
        let v = (-x * (t.cosh() - 1.0)).exp() * (nu as f64 * t).cosh();
        sum = sum + Dd::from_f64(v);
        if v == 0.0 {
            break;
        }
    }
    sum.to_f64() * h * (-x).exp()
}

/// `I₁² − I₀I₂` in double-double.
pub fn turan(x: f64) -> f64 {
    let (i0, i1, i2) = (bessel_i_dd(0, x), bessel_i_dd(1, x), bessel_i_dd(2, x));
    (i1 * i1 - i0 * i2).to_f64()
}

/// `((εI₁ − 2I₂)/T, −εI₂/T)` in double-double.
pub fn f_coeffs(eps: f64) -> (f64, f64) {
    let (i0, i1, i2) = (bessel_i_dd(0, eps), bessel_i_dd(1, eps), bessel_i_dd(2, eps));
    let t = i1 * i1 - i0 * i2;
    let f1 = (i1.mul_f64(eps) - i2.mul_f64(2.0)) / t;
    let f2 = i2.mul_f64(-eps) / t;
    (f1.to_f64(), f2.to_f64())
}

/// `n` points `lo·(hi/lo)^{k/(n−1)}`.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..n).map(|k| (a + (b - a) * k as f64 / (n - 1) as f64).exp()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dd_arithmetic_keeps_low_word() {
        let third = Dd::from_f64(1.0).div_f64(3.0);
        let back = third.mul_f64(3.0) - Dd::from_f64(1.0);
        assert!(back.to_f64().abs() < 1e-31);
        let q = Dd::from_f64(2.0) / Dd::from_f64(7.0) * Dd::from_f64(7.0);
        assert!((q - Dd::from_f64(2.0)).to_f64().abs() < 1e-30);
    }

    #[test]
    fn known_values() {
        assert!((bessel_i(0, 1.0) - 1.266_065_877_752_008_4).abs() < 1e-15);
        assert!((bessel_k(0, 1.0) - 0.421_024_438_240_708_3).abs() < 1e-15);
        assert!((bessel_k(1, 1.0) - 0.601_907_230_197_234_6).abs() < 1e-15);
    }

    #[test]
    fn grid_endpoints() {
        let g = log_grid(1e-4, 30.0, 200);
        assert_eq!(g.len(), 200);
        assert!((g[0] - 1e-4).abs() < 1e-18 && (g[199] - 30.0).abs() < 1e-12);
    }
}
