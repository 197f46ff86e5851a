//! Modified Bessel functions of integer order and the derived expressions
//! built on them: the Turán difference `I₁² − I₀I₂`, the numerator of the
//! variance function, the mixed boundary matrix and the `f₁`, `f₂`
//! coefficients of the sphere-average decomposition.
//!
//! Evaluation regimes:
//!
//! * `I_n`: ascending series for `x ≤ 25`, exponentially scaled Hankel
//!   expansion above (its smallest term there is below `e^{-50}`).
//! * `K_n`: logarithmic ascending series for `x ≤ 2`, Steed's continued
//!   fraction (CF2) above.
//! * Turán difference: the Neumann product series, whose terms are all
//!   positive, for `x < 8`; direct scaled evaluation above.
//!
//! Everything here is pure and allocation free.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

const I_SERIES_MAX: f64 = 25.0;
const K_SERIES_MAX: f64 = 2.0;
const TURAN_SERIES_MAX: f64 = 8.0;
const NUMERATOR_SERIES_MAX: f64 = 2.0;
const MAX_TERMS: usize = 500;

/// Order of a modified Bessel function of the first kind. Only the orders
/// the sphere-average covariance needs are constructible.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum BesselOrder {
    Zero,
    One,
    Two,
}

impl BesselOrder {
    pub fn as_u32(self) -> u32 {
        match self {
            BesselOrder::Zero => 0,
            BesselOrder::One => 1,
            BesselOrder::Two => 2,
        }
    }
}

impl TryFrom<u32> for BesselOrder {
    type Error = Error;

    fn try_from(n: u32) -> Result<Self> {
        match n {
            0 => Ok(BesselOrder::Zero),
            1 => Ok(BesselOrder::One),
            2 => Ok(BesselOrder::Two),
            _ => Err(Error::domain("specfun::BesselOrder", format!("order {n} not in {{0, 1, 2}}"))),
        }
    }
}

fn check_nonnegative<T: Scalar>(op: &'static str, x: T) -> Result<()> {
    if !x.is_finite() || x < T::zero() {
        return Err(Error::domain(op, format!("argument {x} must be finite and >= 0")));
    }
    Ok(())
}

fn check_positive<T: Scalar>(op: &'static str, x: T) -> Result<()> {
    if !x.is_finite() || x <= T::zero() {
        return Err(Error::domain(op, format!("argument {x} must be finite and > 0")));
    }
    Ok(())
}

// I_n(x) = (x/2)^n Σ_k y^k / (k! (k+n)!),  y = x²/4
fn i_series<T: Scalar>(n: u32, x: T) -> T {
    let half = x * T::lit(0.5);
    let y = half * half;
    let mut term = T::one();
    for k in 1..=n {
        term = term * half / T::lit(k as f64);
    }
    let mut sum = T::zero();
    for k in 0..MAX_TERMS {
        sum = sum + term;
        if term <= sum * T::epsilon() * T::lit(0.25) {
            break;
        }
        let kf = T::from_usize_lossy(k);
        term = term * y / ((kf + T::one()) * (kf + T::one() + T::lit(n as f64)));
    }
    sum
}

// e^{-x} I_n(x) from the Hankel expansion; only used for x > 25.
fn i_asymptotic_scaled<T: Scalar>(n: u32, x: T) -> T {
    let mu = T::lit(4.0 * (n * n) as f64);
    let eight_x = T::lit(8.0) * x;
    let mut term = T::one();
    let mut sum = T::one();
    for k in 1..MAX_TERMS {
        let odd = T::lit((2 * k - 1) as f64);
        let next = -term * (mu - odd * odd) / (T::lit(k as f64) * eight_x);
        if next.abs() >= term.abs() {
            break;
        }
        term = next;
        sum = sum + term;
        if term.abs() <= sum.abs() * T::epsilon() * T::lit(0.25) {
            break;
        }
    }
    sum / (T::TAU() * x).sqrt()
}

/// Modified Bessel function `I_order(x)` for `x ≥ 0`.
pub fn bessel_i<T: Scalar>(order: BesselOrder, x: T) -> Result<T> {
    check_nonnegative("specfun::bessel_i", x)?;
    let n = order.as_u32();
    if x <= T::lit(I_SERIES_MAX) {
        Ok(i_series(n, x))
    } else {
        Ok(i_asymptotic_scaled(n, x) * x.exp())
    }
}

/// Exponentially scaled `e^{-x} I_order(x)`; finite for every finite `x ≥ 0`.
pub fn bessel_i_scaled<T: Scalar>(order: BesselOrder, x: T) -> Result<T> {
    check_nonnegative("specfun::bessel_i_scaled", x)?;
    let n = order.as_u32();
    if x <= T::lit(I_SERIES_MAX) {
        Ok(i_series(n, x) * (-x).exp())
    } else {
        Ok(i_asymptotic_scaled(n, x))
    }
}

// (K0, K1) by the A&S 9.6.11 series, x ≤ 2.
fn k_series<T: Scalar>(x: T) -> (T, T) {
    let half = x * T::lit(0.5);
    let y = half * half;
    let log_term = half.ln() + T::euler_gamma();
    let i0 = i_series(0, x);
    let i1 = i_series(1, x);

    // Σ_{k≥1} H_k y^k/(k!)²
    let mut s0 = T::zero();
    // Σ_{k≥0} (2H_k + 1/(k+1)) y^k/(k!(k+1)!)
    let mut s1 = T::zero();
    let mut u0 = T::one();
    let mut u1 = T::one();
    let mut harmonic = T::zero();
    for k in 0..MAX_TERMS {
        let kf = T::from_usize_lossy(k);
        let c1 = T::lit(2.0) * harmonic + T::one() / (kf + T::one());
        let d0 = harmonic * u0;
        let d1 = c1 * u1;
        s0 = s0 + d0;
        s1 = s1 + d1;
        if k > 0 && d0 <= s0 * T::epsilon() * T::lit(0.25) && d1 <= s1 * T::epsilon() * T::lit(0.25) {
            break;
        }
        u0 = u0 * y / ((kf + T::one()) * (kf + T::one()));
        u1 = u1 * y / ((kf + T::one()) * (kf + T::lit(2.0)));
        harmonic = harmonic + T::one() / (kf + T::one());
    }
    let k0 = -log_term * i0 + s0;
    let k1 = x.recip() + log_term * i1 - x * T::lit(0.25) * s1;
    (k0, k1)
}

// (e^x K0, e^x K1) by Steed's CF2, x > 2.
fn k_cf2_scaled<T: Scalar>(x: T) -> (T, T) {
    let two = T::lit(2.0);
    let mut b = two * (T::one() + x);
    let mut d = b.recip();
    let mut delh = d;
    let mut h = d;
    let mut q1 = T::zero();
    let mut q2 = T::one();
    let a1 = T::lit(0.25);
    let mut q = a1;
    let mut c = a1;
    let mut a = -a1;
    let mut s = T::one() + q * delh;
    for i in 2..MAX_TERMS {
        let fi = T::from_usize_lossy(i);
        a = a - two * (fi - T::one());
        c = -a * c / fi;
        let qnew = (q1 - b * q2) / a;
        q1 = q2;
        q2 = qnew;
        q = q + c * qnew;
        b = b + two;
        d = (b + a * d).recip();
        delh = (b * d - T::one()) * delh;
        h = h + delh;
        let dels = q * delh;
        s = s + dels;
        if (dels / s).abs() < T::epsilon() * T::lit(0.25) {
            break;
        }
    }
    h = a1 * h;
    let k0 = (T::PI() / (two * x)).sqrt() / s;
    let k1 = k0 * (x + T::lit(0.5) - h) / x;
    (k0, k1)
}

fn k_order(order: BesselOrder) -> Result<usize> {
    match order {
        BesselOrder::Zero => Ok(0),
        BesselOrder::One => Ok(1),
        BesselOrder::Two => Err(Error::domain("specfun::bessel_k", "only K0 and K1 are provided")),
    }
}

/// Modified Bessel function of the second kind `K_order(x)`, order 0 or 1,
/// for `x > 0`.
pub fn bessel_k<T: Scalar>(order: BesselOrder, x: T) -> Result<T> {
    let idx = k_order(order)?;
    check_positive("specfun::bessel_k", x)?;
    if x <= T::lit(K_SERIES_MAX) {
        let (k0, k1) = k_series(x);
        Ok(if idx == 0 { k0 } else { k1 })
    } else {
        let (k0, k1) = k_cf2_scaled(x);
        Ok(if idx == 0 { k0 } else { k1 } * (-x).exp())
    }
}

/// Exponentially scaled `e^{x} K_order(x)`.
pub fn bessel_k_scaled<T: Scalar>(order: BesselOrder, x: T) -> Result<T> {
    let idx = k_order(order)?;
    check_positive("specfun::bessel_k_scaled", x)?;
    let (k0, k1) = if x <= T::lit(K_SERIES_MAX) {
        let (k0, k1) = k_series(x);
        (k0 * x.exp(), k1 * x.exp())
    } else {
        k_cf2_scaled(x)
    };
    Ok(if idx == 0 { k0 } else { k1 })
}

// (I1² − I0 I2)/y for y = x²/4, via
//   I1² − I0 I2 = Σ_k y^{k+1} (2k+2)! / ((k+1) (k!)² ((k+2)!)²).
fn turan_over_y_series<T: Scalar>(x: T) -> T {
    let y = x * x * T::lit(0.25);
    let mut term = T::lit(0.5);
    let mut sum = T::zero();
    for k in 0..MAX_TERMS {
        sum = sum + term;
        if term <= sum * T::epsilon() * T::lit(0.25) {
            break;
        }
        let kf = T::from_usize_lossy(k);
        let k3 = kf + T::lit(3.0);
        term = term * y * T::lit(2.0) * (T::lit(2.0) * kf + T::lit(3.0)) / ((kf + T::one()) * k3 * k3);
    }
    sum
}

// e^{-2x} (I1² − I0 I2)
fn turan_scaled_direct<T: Scalar>(x: T) -> T {
    let i0 = i_scaled_unchecked(0, x);
    let i1 = i_scaled_unchecked(1, x);
    let i2 = i_scaled_unchecked(2, x);
    i1 * i1 - i0 * i2
}

fn i_scaled_unchecked<T: Scalar>(n: u32, x: T) -> T {
    if x <= T::lit(I_SERIES_MAX) {
        i_series(n, x) * (-x).exp()
    } else {
        i_asymptotic_scaled(n, x)
    }
}

/// Turán difference `I₁²(x) − I₀(x)I₂(x)`, evaluated without cancellation.
/// Positive for `x > 0`, zero at the origin, and `≥ x²/8` on the tested range.
pub fn turan<T: Scalar>(x: T) -> Result<T> {
    check_nonnegative("specfun::turan", x)?;
    if x < T::lit(TURAN_SERIES_MAX) {
        Ok(x * x * T::lit(0.25) * turan_over_y_series(x))
    } else {
        Ok(turan_scaled_direct(x) * (T::lit(2.0) * x).exp())
    }
}

/// Coefficients `f₁(ε) = (εI₁ − 2I₂)/T(ε)` and `f₂(ε) = −εI₂/T(ε)` where
/// `T` is the Turán difference. `f₁ → 2`, `f₂ → 0` as `ε → 0`.
pub fn f_coeffs<T: Scalar>(eps: T) -> Result<(T, T)> {
    const OP: &str = "specfun::f_coeffs";
    check_positive(OP, eps)?;
    let y = eps * eps * T::lit(0.25);
    if y < T::min_positive_value() {
        return Err(Error::Precision {
            op: OP,
            msg: format!("eps = {eps}: turan(eps) underflows, coefficients are not representable"),
        });
    }
    if eps < T::lit(TURAN_SERIES_MAX) {
        // εI₁ − 2I₂ = 2y Σ y^k (k+1)/(k!(k+2)!),  εI₂ = ε y Σ y^k/(k!(k+2)!)
        let mut diff_term = T::lit(0.5);
        let mut p2_term = T::lit(0.5);
        let mut diff = T::zero();
        let mut p2 = T::zero();
        for k in 0..MAX_TERMS {
            diff = diff + diff_term;
            p2 = p2 + p2_term;
            if diff_term <= diff * T::epsilon() * T::lit(0.25) && p2_term <= p2 * T::epsilon() * T::lit(0.25) {
                break;
            }
            let kf = T::from_usize_lossy(k);
            diff_term = diff_term * y * (kf + T::lit(2.0)) / ((kf + T::one()) * (kf + T::one()) * (kf + T::lit(3.0)));
            p2_term = p2_term * y / ((kf + T::one()) * (kf + T::lit(3.0)));
        }
        let ty = turan_over_y_series(eps);
        Ok((T::lit(2.0) * diff / ty, -eps * p2 / ty))
    } else {
        let i1 = i_scaled_unchecked(1, eps);
        let i2 = i_scaled_unchecked(2, eps);
        let t = turan_scaled_direct(eps);
        let damp = (-eps).exp();
        Ok(((eps * i1 - T::lit(2.0) * i2) / t * damp, -eps * i2 / t * damp))
    }
}

/// Pieces of the variance function `G`: returns `(N/y, T/y)` with
/// `N = 2I₁K₁ + 2I₂K₀ − 1`, `T` the Turán difference and `y = r²/4`,
/// for `0 < r ≤ 2`. Both ratios stay O(1) (and representable) even when
/// `y` itself underflows.
pub(crate) fn green_parts_small<T: Scalar>(r: T) -> (T, T) {
    let half = r * T::lit(0.5);
    let y = half * half;
    let log_half = half.ln();
    let gamma = T::euler_gamma();

    // (P1 − 1)/y = Σ_j y^j / ((j+1)! (j+2)!)
    let mut p1_tail = T::zero();
    let mut t = T::lit(0.5);
    for j in 0..MAX_TERMS {
        p1_tail = p1_tail + t;
        if t <= p1_tail * T::epsilon() * T::lit(0.25) {
            break;
        }
        let jf = T::from_usize_lossy(j);
        t = t * y / ((jf + T::lit(2.0)) * (jf + T::lit(3.0)));
    }
    let p1 = T::one() + y * p1_tail;

    let mut p2 = T::zero();
    let mut s0 = T::zero();
    let mut s1 = T::zero();
    let mut u0 = T::one();
    let mut u1 = T::one();
    let mut u2 = T::lit(0.5);
    let mut harmonic = T::zero();
    for k in 0..MAX_TERMS {
        let kf = T::from_usize_lossy(k);
        let psi1 = harmonic - gamma;
        let psi2 = harmonic + T::one() / (kf + T::one()) - gamma;
        let d2 = u2;
        let d0 = psi1 * u0;
        let d1 = (psi1 + psi2) * u1;
        p2 = p2 + d2;
        s0 = s0 + d0;
        s1 = s1 + d1;
        let tiny = T::epsilon() * T::lit(0.25);
        if k > 0 && d2 <= p2 * tiny && d0.abs() <= s0.abs() * tiny && d1.abs() <= s1.abs() * tiny {
            break;
        }
        u0 = u0 * y / ((kf + T::one()) * (kf + T::one()));
        u1 = u1 * y / ((kf + T::one()) * (kf + T::lit(2.0)));
        u2 = u2 * y / ((kf + T::one()) * (kf + T::lit(3.0)));
        harmonic = harmonic + T::one() / (kf + T::one());
    }
    let turan_y = turan_over_y_series(r);
    let num_y = p1_tail + T::lit(2.0) * log_half * turan_y - p1 * s1 + T::lit(2.0) * p2 * s0;
    (num_y, turan_y)
}

/// `2I₁(r)K₁(r) + 2I₂(r)K₀(r) − 1`, the (negated) numerator of the variance
/// function. Tends to 0 as `r → 0` and to −1 as `r → ∞`.
pub fn green_numerator<T: Scalar>(r: T) -> Result<T> {
    check_positive("specfun::green_numerator", r)?;
    if r <= T::lit(NUMERATOR_SERIES_MAX) {
        let (num_y, _) = green_parts_small(r);
        Ok(num_y * r * r * T::lit(0.25))
    } else {
        let (k0, k1) = k_cf2_scaled(r);
        let i1 = i_scaled_unchecked(1, r);
        let i2 = i_scaled_unchecked(2, r);
        Ok(T::lit(2.0) * (i1 * k1 + i2 * k0) - T::one())
    }
}

/// `G(r)` for `r > 2` from exponentially scaled factors:
/// `G = −N e^{−2r} / (4π² T_scaled)`.
pub(crate) fn green_large<T: Scalar>(r: T) -> T {
    let (k0, k1) = k_cf2_scaled(r);
    let i1 = i_scaled_unchecked(1, r);
    let i2 = i_scaled_unchecked(2, r);
    let num = T::lit(2.0) * (i1 * k1 + i2 * k0) - T::one();
    let t = turan_scaled_direct(r);
    let four_pi2 = T::lit(4.0) * T::PI() * T::PI();
    -num * (T::lit(-2.0) * r).exp() / (four_pi2 * t)
}

pub(crate) const GREEN_SERIES_MAX: f64 = NUMERATOR_SERIES_MAX;

// Σ y^k/(k!(k+2)!) = I₂(x)/y
fn i2_over_y<T: Scalar>(x: T) -> T {
    let y = x * x * T::lit(0.25);
    let mut term = T::lit(0.5);
    let mut sum = T::zero();
    for k in 0..MAX_TERMS {
        sum = sum + term;
        if term <= sum * T::epsilon() * T::lit(0.25) {
            break;
        }
        let kf = T::from_usize_lossy(k);
        term = term * y / ((kf + T::one()) * (kf + T::lit(3.0)));
    }
    sum
}

/// `I₂(d)/turan(eps)` as a ratio of series, representable even when both
/// factors underflow. Requires `eps > 0`, `d ≥ 0`.
pub(crate) fn i2_over_turan<T: Scalar>(d: T, eps: T) -> T {
    if eps < T::lit(TURAN_SERIES_MAX) && d < T::lit(TURAN_SERIES_MAX) {
        let q = d / eps;
        q * q * i2_over_y(d) / turan_over_y_series(eps)
    } else {
        let t = if eps < T::lit(TURAN_SERIES_MAX) {
            eps * eps * T::lit(0.25) * turan_over_y_series(eps)
        } else {
            turan_scaled_direct(eps) * (T::lit(2.0) * eps).exp()
        };
        i_scaled_unchecked(2, d) * d.exp() / t
    }
}

/// The 2×2 matrix with rows `(I₁(r)/r, I₁′(r))` and `(I₂(r)/r, I₁″(r))`
/// that maps the sphere and sphere-derivative averages to the corrected
/// sphere average.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct MixedBoundaryMatrix<T> {
    pub r: T,
    pub entries: [[T; 2]; 2],
    pub det: T,
}

impl<T: Scalar> MixedBoundaryMatrix<T> {
    pub fn new(r: T) -> Result<Self> {
        const OP: &str = "specfun::MixedBoundaryMatrix";
        check_positive(OP, r)?;
        let i0 = bessel_i(BesselOrder::Zero, r)?;
        let i1 = bessel_i(BesselOrder::One, r)?;
        let i2 = bessel_i(BesselOrder::Two, r)?;
        let (d1, d2) = i1_derivatives(i0, i1, i2, r);
        let entries = [[i1 / r, d1], [i2 / r, d2]];
        let det = entries[0][0] * entries[1][1] - entries[0][1] * entries[1][0];
        if det == T::zero() || !det.is_finite() {
            return Err(Error::Precision { op: OP, msg: format!("singular at r = {r}") });
        }
        Ok(Self { r, entries, det })
    }

    /// `B(r)⁻¹`.
    pub fn inverse(&self) -> [[T; 2]; 2] {
        let [[a, b], [c, d]] = self.entries;
        [[d / self.det, -b / self.det], [-c / self.det, a / self.det]]
    }
}

/// `(I₁′(x), I₁″(x))` from `I₀, I₁, I₂` using
/// `I₁′ = (I₀+I₂)/2`, `I₁″ = (I₁ + (I₁+I₃)/2)/2`, `I₃ = I₁ − (4/x)I₂`.
pub fn i1_derivatives<T: Scalar>(i0: T, i1: T, i2: T, x: T) -> (T, T) {
    let half = T::lit(0.5);
    let i3 = i1 - T::lit(4.0) / x * i2;
    let d1 = (i0 + i2) * half;
    let i2_prime = (i1 + i3) * half;
    let d2 = (i1 + i2_prime) * half;
    (d1, d2)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn i(n: u32, x: f64) -> f64 {
        bessel_i(BesselOrder::try_from(n).unwrap(), x).unwrap()
    }

    fn k(n: u32, x: f64) -> f64 {
        bessel_k(BesselOrder::try_from(n).unwrap(), x).unwrap()
    }

    #[test]
    fn values_at_origin() {
        assert_eq!(i(0, 0.0), 1.0);
        assert_eq!(i(1, 0.0), 0.0);
        assert_eq!(i(2, 0.0), 0.0);
        assert_eq!(turan(0.0_f64).unwrap(), 0.0);
    }

    #[test]
    fn domain_errors() {
        assert!(bessel_i(BesselOrder::Zero, f64::NAN).is_err());
        assert!(bessel_i(BesselOrder::Zero, f64::INFINITY).is_err());
        assert!(bessel_i(BesselOrder::Zero, -1.0).is_err());
        assert!(bessel_k(BesselOrder::Zero, 0.0).is_err());
        assert!(bessel_k(BesselOrder::One, -2.0).is_err());
        assert!(bessel_k(BesselOrder::Two, 1.0).is_err());
        assert!(BesselOrder::try_from(3).is_err());
        assert!(f_coeffs(0.0).is_err());
    }

    #[test]
    fn k0_large_argument_decay() {
        let v = k(0, 30.0);
        assert!(v > 0.0 && v < 1e-13, "K0(30) = {v:e}");
        let asym = (std::f64::consts::PI / 60.0).sqrt() * (-30.0_f64).exp();
        assert!((v / asym - 1.0).abs() < 5e-3);
    }

    #[test]
    fn k0_small_argument_log() {
        let x = 1e-6;
        let resid = k(0, x) + (x / 2.0).ln() + f64::euler_gamma();
        assert!(resid.abs() < 1e-9, "{resid:e}");
    }

    #[test]
    fn wronskian() {
        for &x in &[0.1, 1.0, 1.999, 2.001, 5.0, 24.0, 26.0] {
            let w = i(0, x) * k(1, x) + i(1, x) * k(0, x);
            assert!((w * x - 1.0).abs() < 1e-12, "x = {x}: {w}");
        }
    }

    #[test]
    fn recurrence_fixes_i2() {
        for &x in &[1e-3, 0.3, 1.0, 7.9, 8.1, 20.0, 25.5, 30.0] {
            let lhs = i(0, x) - i(2, x);
            let rhs = 2.0 / x * i(1, x);
            assert!((lhs / rhs - 1.0).abs() < 1e-10, "x = {x}");
        }
    }

    #[test]
    fn derivative_identities_match_finite_differences() {
        let h = 1e-6;
        for &x in &[0.2, 1.0, 3.0, 9.0] {
            let (d1, d2) = i1_derivatives(i(0, x), i(1, x), i(2, x), x);
            let fd1 = (i(1, x + h) - i(1, x - h)) / (2.0 * h);
            let fd2 = {
                let dp = i1_derivatives(i(0, x + h), i(1, x + h), i(2, x + h), x + h).0;
                let dm = i1_derivatives(i(0, x - h), i(1, x - h), i(2, x - h), x - h).0;
                (dp - dm) / (2.0 * h)
            };
            assert!((d1 - fd1).abs() < 1e-6 * d1.abs().max(1.0));
            assert!((d2 - fd2).abs() < 1e-6 * d2.abs().max(1.0));
        }
    }

    #[test]
    fn mixed_boundary_matrix_invertible() {
        for &r in &[1e-3_f64, 0.1, 1.0, 5.0, 20.0] {
            let b = MixedBoundaryMatrix::new(r).unwrap();
            assert!(b.det != 0.0);
            let inv = b.inverse();
            let e = b.entries;
            let id00 = e[0][0] * inv[0][0] + e[0][1] * inv[1][0];
            let id01 = e[0][0] * inv[0][1] + e[0][1] * inv[1][1];
            assert!((id00 - 1.0).abs() < 1e-9 && id01.abs() < 1e-9, "r = {r}");
        }
    }

    #[test]
    fn turan_regimes_agree_at_switchover() {
        let below = turan(7.999_999_999_f64).unwrap();
        let above = turan(8.000_000_001_f64).unwrap();
        assert!((below / above - 1.0).abs() < 1e-8);
    }

    #[test]
    fn turan_beats_naive_subtraction() {
        // naive evaluation loses roughly four digits at 0.01
        let x = 0.01_f64;
        let naive = i(1, x).powi(2) - i(0, x) * i(2, x);
        let series = turan(x).unwrap();
        assert!((naive / series - 1.0).abs() < 1e-10);
        assert!(series > 0.0);
    }

    #[test]
    fn f_coeffs_limits() {
        let (f1, f2) = f_coeffs(1e-3_f64).unwrap();
        assert!((f1 - 2.0).abs() < 1e-3);
        assert!(f2.abs() < 1e-3);
        match f_coeffs(1e-160_f64) {
            Err(Error::Precision { .. }) => {}
            other => panic!("expected precision error, got {other:?}"),
        }
    }

    #[test]
    fn f_coeffs_continuous_across_regimes() {
        let (a1, a2) = f_coeffs(7.999_999_999_f64).unwrap();
        let (b1, b2) = f_coeffs(8.000_000_001_f64).unwrap();
        assert!((a1 / b1 - 1.0).abs() < 1e-8);
        assert!((a2 / b2 - 1.0).abs() < 1e-8);
    }

    #[test]
    fn numerator_limits() {
        let small = green_numerator(1e-4_f64).unwrap();
        assert!(small.abs() < 1e-7);
        let large = green_numerator(200.0_f64).unwrap();
        assert!((large + 1.0).abs() < 1e-2);
        // IₙKₙ ~ 1/(2r), so the combination sits near 2/r − 1
        let r = 20.0_f64;
        assert!((green_numerator(r).unwrap() - (2.0 / r - 1.0)).abs() < 5e-3);
    }

    #[test]
    fn single_precision_tracks_double() {
        for &x in &[0.05_f64, 1.0, 4.0, 12.0] {
            let a = bessel_i(BesselOrder::One, x as f32).unwrap() as f64;
            let b = i(1, x);
            assert!((a / b - 1.0).abs() < 1e-5);
            let a = bessel_k(BesselOrder::Zero, x as f32).unwrap() as f64;
            let b = k(0, x);
            assert!((a / b - 1.0).abs() < 1e-5);
        }
    }
}
