//! Variance function `G`, its inverse, the three-regime covariance kernel of
//! the sphere-average family and assembled covariance matrices.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg;
use crate::scalar::Scalar;
use crate::specfun::{self, BesselOrder};

/// Jitter multipliers (relative to the mean diagonal) tried in order when a
/// Cholesky factorization fails.
pub const JITTER_LADDER: [f64; 3] = [1e-12, 1e-10, 1e-8];

/// Index of one sphere-average observation: a center in R⁴ and a radius.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, serde::Deserialize)]
pub struct SphereSpec<T> {
    pub center: [T; 4],
    pub radius: T,
}

impl<T: Scalar> SphereSpec<T> {
    pub fn new(center: [T; 4], radius: T) -> Result<Self> {
        if !(radius.is_finite() && radius > T::zero()) {
            return Err(Error::domain("covariance::SphereSpec", format!("radius {radius} must be finite and > 0")));
        }
        if center.iter().any(|c| !c.is_finite()) {
            return Err(Error::domain("covariance::SphereSpec", "center components must be finite"));
        }
        Ok(Self { center, radius })
    }

    pub fn distance(&self, other: &Self) -> T {
        distance(&self.center, &other.center)
    }
}

pub fn distance<T: Scalar>(a: &[T; 4], b: &[T; 4]) -> T {
    a.iter().zip(b).map(|(&x, &y)| (x - y) * (x - y)).fold(T::zero(), |acc, v| acc + v).sqrt()
}

/// Which of the two spheres passed to [`classify`] contains the other.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Outer {
    First,
    Second,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum GeometryCase {
    Concentric,
    Disjoint,
    Nested { outer: Outer },
    Unsupported,
}

impl GeometryCase {
    pub fn name(&self) -> &'static str {
        match self {
            GeometryCase::Concentric => "concentric",
            GeometryCase::Disjoint => "disjoint",
            GeometryCase::Nested { .. } => "nested",
            GeometryCase::Unsupported => "unsupported",
        }
    }
}

/// Classifies a pair of spheres. Boundary-touching inclusion
/// (`|x−y| + ε_inner = ε_outer`) counts as nested; tangent exterior contact
/// is unsupported.
pub fn classify<T: Scalar>(a: &SphereSpec<T>, b: &SphereSpec<T>) -> GeometryCase {
    if a.center == b.center {
        return GeometryCase::Concentric;
    }
    let d = a.distance(b);
    if d > a.radius + b.radius {
        GeometryCase::Disjoint
    } else if d + b.radius <= a.radius {
        GeometryCase::Nested { outer: Outer::First }
    } else if d + a.radius <= b.radius {
        GeometryCase::Nested { outer: Outer::Second }
    } else {
        GeometryCase::Unsupported
    }
}

fn four_pi2<T: Scalar>() -> T {
    T::lit(4.0) * T::PI() * T::PI()
}

/// Variance function `G(r) = −(2I₁K₁ + 2I₂K₀ − 1)/(4π²(I₁² − I₀I₂))`,
/// strictly positive and decreasing, `≈ −log(r)/(2π²) + 0.0312` near 0.
pub fn green_g<T: Scalar>(r: T) -> Result<T> {
    if !(r > T::zero()) || r.is_nan() {
        return Err(Error::domain("covariance::green_g", format!("r = {r} must be > 0")));
    }
    if r.is_infinite() {
        return Ok(T::zero());
    }
    Ok(green_unchecked(r))
}

fn green_unchecked<T: Scalar>(r: T) -> T {
    if r <= T::lit(specfun::GREEN_SERIES_MAX) {
        let (num_y, turan_y) = specfun::green_parts_small(r);
        -num_y / (four_pi2::<T>() * turan_y)
    } else {
        specfun::green_large(r)
    }
}

/// Absolute tolerance of [`green_g_inv`] on the recovered `G` value.
pub fn green_inv_tolerance<T: Scalar>(t: T) -> T {
    T::lit(1e-12).max(T::lit(64.0) * T::epsilon()) * t.max(T::one())
}

/// `G⁻¹(t)`: the radius `r` with `|G(r) − t| ≤ max(1e-12, 64ε)·max(1, t)`.
/// Bisection in `log r` to full precision, bracketed around the seed
/// `exp(−2π²(t − 0.0312))`.
pub fn green_g_inv<T: Scalar>(t: T) -> Result<T> {
    const OP: &str = "covariance::green_g_inv";
    if !(t > T::zero()) || !t.is_finite() {
        return Err(Error::domain(OP, format!("t = {t} must be finite and > 0")));
    }
    let r_floor = T::min_positive_value();
    if green_unchecked(r_floor) < t {
        return Err(Error::Precision { op: OP, msg: format!("G⁻¹({t}) underflows the scalar type") });
    }
    let two_pi2 = T::lit(2.0) * T::PI() * T::PI();
    let seed = (-(two_pi2 * (t - T::lit(0.0312)))).exp().max(r_floor);
    let mut lo = seed.ln();
    let mut hi = lo;
    let step = T::lit(0.5);
    // G(e^lo) >= t >= G(e^hi)
    while green_unchecked(lo.exp()) < t {
        lo = (lo - step).max(r_floor.ln());
    }
    while green_unchecked(hi.exp()) > t {
        hi = hi + step;
        if hi > T::lit(1000.0).ln() {
            return Err(Error::Precision { op: OP, msg: format!("G⁻¹({t}) exceeds the representable range") });
        }
    }
    let tol = green_inv_tolerance(t);
    for _ in 0..2000 {
        let mid = (lo + hi) * T::lit(0.5);
        if mid <= lo || mid >= hi {
            break;
        }
        let g = green_unchecked(mid.exp());
        if g == t {
            return Ok(mid.exp());
        }
        if g > t {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let (rl, rh) = (lo.exp(), hi.exp());
    let best = if (green_unchecked(rl) - t).abs() <= (green_unchecked(rh) - t).abs() { rl } else { rh };
    if (green_unchecked(best) - t).abs() > tol {
        return Err(Error::Precision { op: OP, msg: format!("bisection stalled at t = {t}") });
    }
    Ok(best)
}

/// Covariance `Cov(X(a), X(b))` of two sphere averages.
pub fn kernel<T: Scalar>(a: &SphereSpec<T>, b: &SphereSpec<T>) -> Result<T> {
    match classify(a, b) {
        GeometryCase::Concentric => green_g(a.radius.max(b.radius)),
        GeometryCase::Disjoint => {
            let d = a.distance(b);
            Ok(specfun::bessel_k(BesselOrder::Zero, d)? / (T::lit(2.0) * T::PI() * T::PI()))
        }
        GeometryCase::Nested { outer } => {
            let (out, _) = match outer {
                Outer::First => (a, b),
                Outer::Second => (b, a),
            };
            nested_kernel(a.distance(b), out.radius)
        }
        GeometryCase::Unsupported => Err(Error::geometry(
            "covariance::kernel",
            format!("no covariance formula for overlapping spheres {a:?} and {b:?}"),
        )),
    }
}

/// Nested-regime covariance for outer radius `eps_outer` and center distance `d`:
/// `I₀(d)G(ε) − I₂(d)/(4π² turan(ε))`.
pub fn nested_kernel<T: Scalar>(d: T, eps_outer: T) -> Result<T> {
    let g = green_g(eps_outer)?;
    let i0 = specfun::bessel_i(BesselOrder::Zero, d)?;
    Ok(i0 * g - specfun::i2_over_turan(d, eps_outer) / four_pi2::<T>())
}

/// Symmetric covariance matrix over a list of sphere specs, optionally
/// carrying its lower Cholesky factor. Stored row-major.
#[derive(Debug, Clone, Serialize)]
pub struct CovMatrix<T> {
    specs: Vec<SphereSpec<T>>,
    n: usize,
    entries: Vec<T>,
    jitter_applied: T,
    #[serde(skip)]
    factor: Option<Vec<T>>,
}

impl<T: Scalar> CovMatrix<T> {
    /// Wraps a dense symmetric matrix without specs (unfactorized).
    pub fn from_dense(n: usize, entries: Vec<T>) -> Result<Self> {
        const OP: &str = "covariance::CovMatrix::from_dense";
        if entries.len() != n * n {
            return Err(Error::domain(OP, format!("expected {} entries, got {}", n * n, entries.len())));
        }
        for i in 0..n {
            for j in 0..i {
                let (a, b) = (entries[i * n + j], entries[j * n + i]);
                if a != b {
                    return Err(Error::domain(OP, format!("not symmetric at ({i}, {j}): {a} vs {b}")));
                }
            }
        }
        Ok(Self { specs: Vec::new(), n, entries, jitter_applied: T::zero(), factor: None })
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn specs(&self) -> &[SphereSpec<T>] {
        &self.specs
    }

    pub fn entry(&self, i: usize, j: usize) -> T {
        self.entries[i * self.n + j]
    }

    pub fn entries(&self) -> &[T] {
        &self.entries
    }

    pub fn jitter_applied(&self) -> T {
        self.jitter_applied
    }

    pub fn is_factorized(&self) -> bool {
        self.factor.is_some()
    }

    /// Lower-triangular factor (row-major, upper part zero) if factorized.
    pub fn factor(&self) -> Option<&[T]> {
        self.factor.as_deref()
    }

    /// Cholesky factorization with the jitter ladder: exact first, then
    /// `δ·mean(diag)` for each `δ` in [`JITTER_LADDER`].
    pub fn factorize(&mut self) -> Result<()> {
        if self.n == 0 {
            self.factor = Some(Vec::new());
            return Ok(());
        }
        let mean_diag =
            (0..self.n).map(|i| self.entry(i, i)).fold(T::zero(), |a, b| a + b) / T::from_usize_lossy(self.n);
        let ladder = std::iter::once(T::zero()).chain(JITTER_LADDER.iter().map(|&d| T::lit(d) * mean_diag));
        for jitter in ladder {
            let mut work = self.entries.clone();
            for i in 0..self.n {
                work[i * self.n + i] = work[i * self.n + i] + jitter;
            }
            if linalg::cholesky_in_place(self.n, &mut work).is_ok() {
                if jitter > T::zero() {
                    log::debug!("covariance: factorized {}x{} with jitter {jitter}", self.n, self.n);
                }
                self.jitter_applied = jitter;
                self.factor = Some(work);
                return Ok(());
            }
        }
        let min_eig = linalg::min_eigenvalue_estimate(self.n, &self.entries).to_f64_lossy();
        Err(Error::Factorization {
            op: "covariance::CovMatrix::factorize",
            min_eigenvalue: min_eig,
            msg: format!("{}x{} matrix not positive definite at jitter 1e-8·mean(diag)", self.n, self.n),
        })
    }
}

/// Builds `entries[i][j] = kernel(specs[i], specs[j])` and factorizes it.
pub fn assemble<T: Scalar>(specs: &[SphereSpec<T>]) -> Result<CovMatrix<T>> {
    let n = specs.len();
    for i in 0..n {
        for j in 0..i {
            if classify(&specs[i], &specs[j]) == GeometryCase::Unsupported {
                return Err(Error::geometry(
                    "covariance::assemble",
                    format!("pair ({j}, {i}) is overlapping: {:?} / {:?}", specs[j], specs[i]),
                ));
            }
        }
    }
    let mut entries = vec![T::zero(); n * n];
    for i in 0..n {
        for j in 0..=i {
            let v = kernel(&specs[i], &specs[j])?;
            entries[i * n + j] = v;
            entries[j * n + i] = v;
        }
    }
    let mut cov = CovMatrix { specs: specs.to_vec(), n, entries, jitter_applied: T::zero(), factor: None };
    cov.factorize()?;
    Ok(cov)
}

/// One configuration `(x, y, ε₁, ε₂)` for [`kc_difference_bound`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KcSample<T> {
    pub x: [T; 4],
    pub y: [T; 4],
    pub eps1: T,
    pub eps2: T,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct KcCaseStats {
    pub count: usize,
    /// Supremum of `Var(X(x,ε₁) − X(y,ε₂))·(ε₁∧ε₂)/(|x−y| + |ε₁−ε₂|)`.
    pub sup_ratio: f64,
    pub sup_at: Option<[f64; 10]>,
    /// Configurations with zero denominator; their variance difference
    /// must vanish.
    pub degenerate: usize,
    pub max_degenerate_variance: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct KcReport {
    pub concentric: KcCaseStats,
    pub disjoint: KcCaseStats,
    pub nested: KcCaseStats,
    pub skipped_unsupported: usize,
}

impl KcReport {
    pub fn all_finite(&self) -> bool {
        [&self.concentric, &self.disjoint, &self.nested].iter().all(|c| c.sup_ratio.is_finite())
    }
}

/// `Var(X(a) − X(b))` from kernel values.
pub fn variance_difference<T: Scalar>(a: &SphereSpec<T>, b: &SphereSpec<T>) -> Result<T> {
    Ok(green_g(a.radius)? + green_g(b.radius)? - T::lit(2.0) * kernel(a, b)?)
}

/// Sweeps the Hölder-type covariance-difference bound over a grid of
/// configurations, per geometry case.
pub fn kc_difference_bound<T: Scalar>(samples: &[KcSample<T>]) -> Result<KcReport> {
    let mut report = KcReport::default();
    for s in samples {
        let a = SphereSpec::new(s.x, s.eps1)?;
        let b = SphereSpec::new(s.y, s.eps2)?;
        let case = classify(&a, &b);
        let stats = match case {
            GeometryCase::Concentric => &mut report.concentric,
            GeometryCase::Disjoint => &mut report.disjoint,
            GeometryCase::Nested { .. } => &mut report.nested,
            GeometryCase::Unsupported => {
                report.skipped_unsupported += 1;
                continue;
            }
        };
        let var = variance_difference(&a, &b)?.to_f64_lossy();
        let denom = (a.distance(&b) + (s.eps1 - s.eps2).abs()).to_f64_lossy();
        stats.count += 1;
        if denom == 0.0 {
            stats.degenerate += 1;
            stats.max_degenerate_variance = stats.max_degenerate_variance.max(var.abs());
            continue;
        }
        let ratio = var.abs() * s.eps1.min(s.eps2).to_f64_lossy() / denom;
        if ratio > stats.sup_ratio || ratio.is_nan() {
            stats.sup_ratio = ratio;
            let mut at = [0.0; 10];
            for k in 0..4 {
                at[k] = s.x[k].to_f64_lossy();
                at[4 + k] = s.y[k].to_f64_lossy();
            }
            at[8] = s.eps1.to_f64_lossy();
            at[9] = s.eps2.to_f64_lossy();
            stats.sup_at = Some(at);
        }
    }
    log::info!(
        "kc bound: C(concentric) = {:.4}, C(disjoint) = {:.4}, C(nested) = {:.4}, skipped {}",
        report.concentric.sup_ratio,
        report.disjoint.sup_ratio,
        report.nested.sup_ratio,
        report.skipped_unsupported
    );
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn spec(c: [f64; 4], r: f64) -> SphereSpec<f64> {
        SphereSpec::new(c, r).unwrap()
    }

    #[test]
    fn classify_examples() {
        let o = [0.0; 4];
        assert_eq!(classify(&spec(o, 1.0), &spec([3.0, 0.0, 0.0, 0.0], 1.0)), GeometryCase::Disjoint);
        assert_eq!(classify(&spec(o, 0.5), &spec(o, 0.2)), GeometryCase::Concentric);
        assert_eq!(
            classify(&spec(o, 1.0), &spec([0.2, 0.0, 0.0, 0.0], 0.3)),
            GeometryCase::Nested { outer: Outer::First }
        );
        assert_eq!(
            classify(&spec([0.2, 0.0, 0.0, 0.0], 0.3), &spec(o, 1.0)),
            GeometryCase::Nested { outer: Outer::Second }
        );
        // tangent from outside, and partial overlap
        assert_eq!(classify(&spec(o, 1.0), &spec([2.0, 0.0, 0.0, 0.0], 1.0)), GeometryCase::Unsupported);
        assert_eq!(classify(&spec(o, 1.0), &spec([1.0, 0.0, 0.0, 0.0], 0.5)), GeometryCase::Unsupported);
        // internally tangent counts as nested
        assert_eq!(
            classify(&spec(o, 1.0), &spec([0.5, 0.0, 0.0, 0.0], 0.5)),
            GeometryCase::Nested { outer: Outer::First }
        );
    }

    #[test]
    fn green_rejects_nonpositive() {
        assert!(green_g(0.0).is_err());
        assert!(green_g(-1.0).is_err());
        assert!(green_g(f64::NAN).is_err());
        assert!(green_g_inv(0.0).is_err());
        assert!(green_g_inv(-3.0).is_err());
    }

    #[test]
    fn green_ordering_and_decay() {
        let (a, b, c) = (green_g(0.1).unwrap(), green_g(0.2).unwrap(), green_g(1.0).unwrap());
        assert!(a > b && b > c && c > 0.0);
        let far = green_g(20.0).unwrap();
        assert!(far > 0.0 && far < 1e-6);
    }

    #[test]
    fn green_small_radius_offset() {
        // G(r) + log(r)/(2π²) tends to a constant near 0.0312
        for &r in &[1e-6, 1e-10, 1e-30, 1e-200] {
            let offset = green_g(r).unwrap() + f64::ln(r) / (2.0 * PI * PI);
            assert!((offset - 0.031_203_455).abs() < 1e-6, "r = {r}: {offset}");
        }
    }

    #[test]
    fn green_continuous_at_regime_switch() {
        let a = green_g(2.0_f64 - 1e-12).unwrap();
        let b = green_g(2.0 + 1e-12).unwrap();
        assert!((a / b - 1.0).abs() < 1e-10);
    }

    #[test]
    fn inverse_round_trip() {
        let r = green_g_inv(green_g(0.05_f64).unwrap()).unwrap();
        assert!((r - 0.05).abs() < 1e-10);
        for &t in &[1e-3_f64, 0.1, 1.0, 5.0, 20.0, 35.0] {
            let r = green_g_inv(t).unwrap();
            assert!((green_g(r).unwrap() - t).abs() <= 1e-12 * t.max(1.0), "t = {t}");
        }
        assert!(matches!(green_g_inv(40.0), Err(Error::Precision { .. })));
    }

    #[test]
    fn inverse_log_asymptotic() {
        let t = 3.0;
        let ratio = green_g((-2.0 * PI * PI * t).exp()).unwrap() / t;
        assert!((ratio - 1.0).abs() < 0.05);
    }

    #[test]
    fn inverse_strictly_decreasing() {
        let ts: Vec<f64> = (1..=100).map(|k| 0.05 * k as f64).collect();
        let rs: Vec<f64> = ts.iter().map(|&t| green_g_inv(t).unwrap()).collect();
        assert!(rs.windows(2).all(|w| w[0] > w[1]));
    }

    #[test]
    fn kernel_branches() {
        let o = [0.0; 4];
        assert_eq!(kernel(&spec(o, 0.3), &spec(o, 0.3)).unwrap(), green_g(0.3).unwrap());
        assert_eq!(nested_kernel(0.0, 0.7).unwrap(), green_g(0.7).unwrap());
        let k = kernel(&spec(o, 0.2), &spec([1.0, 0.0, 0.0, 0.0], 0.3)).unwrap();
        let k01 = 0.421_024_438_240_708_3;
        assert!((k - k01 / (2.0 * PI * PI)).abs() < 1e-15);
        let overlap = kernel(&spec(o, 1.0), &spec([1.0, 0.0, 0.0, 0.0], 0.5));
        assert!(matches!(overlap, Err(Error::Geometry { .. })));
    }

    #[test]
    fn nested_tends_to_concentric() {
        let outer = spec([0.0; 4], 0.4);
        let inner = spec([1e-8, 0.0, 0.0, 0.0], 0.1);
        let nested = kernel(&outer, &inner).unwrap();
        let conc = kernel(&outer, &spec([0.0; 4], 0.1)).unwrap();
        assert!((nested - conc).abs() < 1e-10);
    }

    #[test]
    fn assemble_single_and_concentric_pair() {
        let one = assemble(&[spec([0.0; 4], 0.25)]).unwrap();
        assert_eq!(one.entry(0, 0), green_g(0.25).unwrap());
        assert_eq!(one.jitter_applied(), 0.0);

        let pair = assemble(&[spec([0.0; 4], 0.1), spec([0.0; 4], 0.2)]).unwrap();
        assert_eq!(pair.entry(0, 1), green_g(0.2).unwrap());
        assert_eq!(pair.entry(1, 0), green_g(0.2).unwrap());
        assert_eq!(pair.entry(0, 0), green_g(0.1).unwrap());
        assert!(pair.is_factorized());
    }

    #[test]
    fn assemble_reports_offending_pair() {
        let specs = [spec([0.0; 4], 0.1), spec([5.0, 0.0, 0.0, 0.0], 0.1), spec([0.15, 0.0, 0.0, 0.0], 0.1)];
        match assemble(&specs) {
            Err(Error::Geometry { msg, .. }) => assert!(msg.contains("(0, 2)"), "{msg}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn from_dense_rejects_asymmetry() {
        assert!(CovMatrix::from_dense(2, vec![1.0, 0.5, 0.4, 1.0]).is_err());
        assert!(CovMatrix::from_dense(2, vec![1.0, 0.5, 0.5]).is_err());
    }

    #[test]
    fn indefinite_matrix_fails_with_eigenvalue() {
        let mut m = CovMatrix::from_dense(2, vec![1.0, 2.0, 2.0, 1.0]).unwrap();
        match m.factorize() {
            Err(Error::Factorization { min_eigenvalue, .. }) => assert!((min_eigenvalue + 1.0).abs() < 1e-6),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn kc_degenerate_is_zero() {
        let s = KcSample { x: [0.0; 4], y: [0.0; 4], eps1: 0.2, eps2: 0.2 };
        let rep = kc_difference_bound(&[s]).unwrap();
        assert_eq!(rep.concentric.degenerate, 1);
        assert_eq!(rep.concentric.max_degenerate_variance, 0.0);
    }

    #[test]
    fn generic_over_single_precision() {
        let g32 = green_g(0.3_f32).unwrap() as f64;
        assert!((g32 / green_g(0.3).unwrap() - 1.0).abs() < 1e-5);
        let r = green_g_inv(1.0_f32).unwrap();
        assert!((green_g(r).unwrap() - 1.0).abs() < 1e-4);
    }
}
