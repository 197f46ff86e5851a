//! Counting scheme: radii `r_n = n^{−K}`, threshold `√(2a) − δ(n)` with
//! `δ(n) = C_δ (log n)^{ζ−1}`, counts of high centers per level and the
//! box-count regression.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::covariance::green_g;
use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::sampler::{FieldGrid, FieldGridSpec, HierarchicalSampler, RadialPath};
use crate::stats::{self, Estimate, LinearFit};

pub(crate) const SQRT_TWO_PI2: f64 = 4.442_882_938_158_366; // √(2π²)

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UpperSchemeParams {
    pub a: f64,
    /// Exponent parameter `ε`; the radius exponent is `K = 1/ε`.
    pub eps_scheme: f64,
    pub zeta: f64,
    pub c_delta: f64,
    pub n_min: usize,
    pub n_max: usize,
}

impl Default for UpperSchemeParams {
    fn default() -> Self {
        Self { a: 0.5, eps_scheme: 0.2, zeta: 0.5, c_delta: 0.1, n_min: 2, n_max: 5 }
    }
}

impl UpperSchemeParams {
    pub fn validate(&self) -> Result<()> {
        const OP: &str = "multifractal::UpperSchemeParams";
        if !(self.a >= 0.0 && self.a.is_finite()) {
            return Err(Error::domain(OP, format!("a = {} must be finite and >= 0", self.a)));
        }
        if !(self.eps_scheme > 0.0 && self.eps_scheme.is_finite()) {
            return Err(Error::domain(OP, "eps_scheme must be positive"));
        }
        if !(self.zeta > 0.0 && self.zeta < 1.0) {
            return Err(Error::domain(OP, format!("zeta = {} must lie in (0, 1)", self.zeta)));
        }
        if !(self.c_delta > 0.0 && self.c_delta.is_finite()) {
            return Err(Error::domain(OP, "c_delta must be positive"));
        }
        if self.n_min < 2 || self.n_max < self.n_min {
            return Err(Error::domain(OP, "levels need 2 <= n_min <= n_max"));
        }
        Ok(())
    }

    pub fn k_exponent(&self) -> f64 {
        1.0 / self.eps_scheme
    }

    pub fn radius(&self, n: usize) -> f64 {
        (n as f64).powf(-self.k_exponent())
    }

    pub fn delta(&self, n: usize) -> f64 {
        self.c_delta * (n as f64).ln().powf(self.zeta - 1.0)
    }

    pub fn threshold(&self, n: usize) -> f64 {
        (2.0 * self.a).sqrt() - self.delta(n)
    }

    pub fn level_indices(&self) -> std::ops::RangeInclusive<usize> {
        self.n_min..=self.n_max
    }

    pub fn radii(&self) -> Vec<f64> {
        self.level_indices().map(|n| self.radius(n)).collect()
    }

    pub fn with_a(&self, a: f64) -> Self {
        Self { a, ..*self }
    }
}

/// `B(x,t)/(√(2π²)·t)`: compared against `√(2a)` for `a`-thickness.
pub fn thickness_ratio(path: &RadialPath<f64>, level_time: f64) -> Result<f64> {
    let i = path.index_of(level_time).ok_or_else(|| {
        Error::domain("multifractal::thickness_ratio", format!("t = {level_time} is not on the path grid"))
    })?;
    Ok(path.values[i] / (SQRT_TWO_PI2 * level_time))
}

/// Limit-thick on the tail `times[from..]`: every ratio within `tol` of `√(2a)`.
pub fn is_limit_thick(path: &RadialPath<f64>, a: f64, from: usize, tol: f64) -> bool {
    let target = (2.0 * a).sqrt();
    path.times[from..].iter().zip(&path.values[from..]).all(|(t, b)| (b / (SQRT_TWO_PI2 * t) - target).abs() <= tol)
}

/// Limsup-thick on the tail: the largest ratio reaches `√(2a) − tol`.
pub fn is_limsup_thick(path: &RadialPath<f64>, a: f64, from: usize, tol: f64) -> bool {
    let target = (2.0 * a).sqrt();
    path.times[from..]
        .iter()
        .zip(&path.values[from..])
        .map(|(t, b)| b / (SQRT_TWO_PI2 * t))
        .fold(f64::NEG_INFINITY, f64::max)
        >= target - tol
}

fn level_of(grid: &FieldGrid<f64>, radius: f64) -> Option<usize> {
    grid.levels.iter().position(|&r| (r - radius).abs() <= 1e-12 * radius)
}

/// `|𝒜_n|`: centers with `|X(x_j, r_n)|/(√(2π²)G(r_n)) ≥ √(2a) − δ(n)`.
pub fn count_high_centers(grid: &FieldGrid<f64>, params: &UpperSchemeParams, n: usize) -> Result<usize> {
    let r = params.radius(n);
    let level = level_of(grid, r)
        .ok_or_else(|| Error::domain("multifractal::count_high_centers", format!("grid has no level r_{n} = {r}")))?;
    let scale = SQRT_TWO_PI2 * green_g(r)?;
    let thr = params.threshold(n);
    Ok(grid.level_values(level).filter(|x| x.abs() / scale >= thr).count())
}

/// Exact `P(|N(0, G(r_n))| ≥ (√(2a) − δ(n))·√(2π²)·G(r_n))`.
pub fn exact_tail_probability(params: &UpperSchemeParams, n: usize) -> Result<f64> {
    let thr = params.threshold(n);
    if thr <= 0.0 {
        return Ok(1.0);
    }
    let g = green_g(params.radius(n))?;
    let z = thr * SQRT_TWO_PI2 * g.sqrt();
    Ok(erfc(z / std::f64::consts::SQRT_2))
}

/// One regression point: a scale and the (possibly averaged) count at it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DimensionPoint {
    pub radius: f64,
    pub count: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DimensionFit {
    pub fit: LinearFit,
    pub used_levels: usize,
    /// The slope of `log count` against `log(1/r)`.
    pub dimension_estimate: f64,
}

/// Least-squares slope of `log count` on `log(1/r)` over the points with a
/// positive count.
pub fn box_dimension_estimate(points: &[DimensionPoint]) -> Result<DimensionFit> {
    let used: Vec<&DimensionPoint> = points.iter().filter(|p| p.count > 0.0 && p.radius > 0.0).collect();
    if used.len() < 3 {
        return Err(Error::InsufficientData {
            op: "multifractal::box_dimension_estimate",
            msg: format!("{} level(s) with positive counts, need 3", used.len()),
        });
    }
    let xs: Vec<f64> = used.iter().map(|p| -p.radius.ln()).collect();
    let ys: Vec<f64> = used.iter().map(|p| p.count.ln()).collect();
    let fit = stats::linear_fit(&xs, &ys);
    Ok(DimensionFit { fit, used_levels: used.len(), dimension_estimate: fit.slope })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelCount {
    pub n: usize,
    pub radius: f64,
    pub delta: f64,
    pub threshold: f64,
    pub centers: usize,
    /// Mean of `|𝒜_n|` over replications, with its standard error.
    pub count: Estimate,
    pub tail_probability: f64,
    pub expected_count: f64,
    /// `(mean count / centers)·r_n^{−4}`: the count an `r_n`-covering of `J`
    /// would need.
    pub scaled_count: f64,
}

impl LevelCount {
    /// Mean fraction of high centers within `k` SE of the exact tail.
    pub fn tail_consistent(&self, k: f64) -> bool {
        self.count.within(self.expected_count, k)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThickPointReport {
    pub a: f64,
    pub params: UpperSchemeParams,
    pub replications: usize,
    pub levels: Vec<LevelCount>,
    /// `counts[rep][level]`.
    pub counts: Vec<Vec<usize>>,
    pub fit: Option<DimensionFit>,
    pub dimension_estimate: Option<f64>,
    pub fit_error: Option<String>,
}

impl ThickPointReport {
    pub fn all_zero(&self) -> bool {
        self.counts.iter().flatten().all(|&c| c == 0)
    }
}

/// Sampler plus per-replication field draws for the counting scheme; one
/// set of draws is shared by every thickness evaluated.
pub struct UpperExperiment {
    params: UpperSchemeParams,
    sampler: HierarchicalSampler<f64>,
}

impl UpperExperiment {
    /// `k⁴` lattice centers on `[0,1]⁴` with levels `r_{n_min}..r_{n_max}`.
    pub fn new(params: UpperSchemeParams, k: usize) -> Result<Self> {
        params.validate()?;
        let spec = FieldGridSpec::lattice(k, params.radii())?;
        Ok(Self { params, sampler: HierarchicalSampler::new(spec)? })
    }

    pub fn params(&self) -> &UpperSchemeParams {
        &self.params
    }

    pub fn centers(&self) -> usize {
        self.sampler.spec().centers.len()
    }

    pub fn sample(&self, rep: usize, rng: RngStream) -> Result<FieldGrid<f64>> {
        self.sampler.sample(rng.derive(&[rep as u64]))
    }

    /// Counts for every thickness in `a_values` over `replications` draws.
    pub fn run(&self, a_values: &[f64], replications: usize, rng: RngStream) -> Result<Vec<ThickPointReport>> {
        let per_rep: Vec<Vec<Vec<usize>>> = (0..replications)
            .into_par_iter()
            .map(|r| -> Result<Vec<Vec<usize>>> {
                let grid = self.sample(r, rng)?;
                a_values
                    .iter()
                    .map(|&a| {
                        let p = self.params.with_a(a);
                        p.level_indices().map(|n| count_high_centers(&grid, &p, n)).collect()
                    })
                    .collect()
            })
            .collect::<Result<_>>()?;
        a_values
            .iter()
            .enumerate()
            .map(|(ai, &a)| {
                let counts: Vec<Vec<usize>> = per_rep.iter().map(|v| v[ai].clone()).collect();
                self.report(a, counts)
            })
            .collect()
    }

    fn report(&self, a: f64, counts: Vec<Vec<usize>>) -> Result<ThickPointReport> {
        let p = self.params.with_a(a);
        let centers = self.centers();
        let levels: Vec<LevelCount> = p
            .level_indices()
            .enumerate()
            .map(|(li, n)| -> Result<LevelCount> {
                let xs: Vec<f64> = counts.iter().map(|c| c[li] as f64).collect();
                let count = if xs.len() > 1 {
                    stats::estimate(&xs)
                } else {
                    Estimate { mean: xs.first().copied().unwrap_or(0.0), se: f64::NAN, n: xs.len() }
                };
                let tail = exact_tail_probability(&p, n)?;
                let radius = p.radius(n);
                Ok(LevelCount {
                    n,
                    radius,
                    delta: p.delta(n),
                    threshold: p.threshold(n),
                    centers,
                    count,
                    tail_probability: tail,
                    expected_count: tail * centers as f64,
                    scaled_count: count.mean / centers as f64 * radius.powi(-4),
                })
            })
            .collect::<Result<_>>()?;
        let points: Vec<DimensionPoint> =
            levels.iter().map(|l| DimensionPoint { radius: l.radius, count: l.scaled_count }).collect();
        let (fit, fit_error) = match box_dimension_estimate(&points) {
            Ok(f) => (Some(f), None),
            Err(e) => (None, Some(e.to_string())),
        };
        Ok(ThickPointReport {
            a,
            params: p,
            replications: counts.len(),
            levels,
            counts,
            dimension_estimate: fit.map(|f| f.dimension_estimate),
            fit,
            fit_error,
        })
    }
}

/// Counting-scheme report for a single thickness.
pub fn run_upper_scheme(
    params: &UpperSchemeParams,
    k: usize,
    replications: usize,
    rng: RngStream,
) -> Result<ThickPointReport> {
    let exp = UpperExperiment::new(*params, k)?;
    Ok(exp.run(&[params.a], replications, rng)?.remove(0))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmptyAboveFourReport {
    pub a: f64,
    pub replications: usize,
    /// `counts[rep][level]`.
    pub counts: Vec<Vec<usize>>,
    pub all_zero: bool,
}

/// Counts `|𝒜_n|` for `a > 4` over `replications` draws; all should vanish.
pub fn empty_above_four_check(
    exp: &UpperExperiment,
    a: f64,
    replications: usize,
    rng: RngStream,
) -> Result<EmptyAboveFourReport> {
    if !(a > 4.0) {
        return Err(Error::precondition("multifractal::empty_above_four_check", format!("a = {a} must exceed 4")));
    }
    let rep = exp.run(&[a], replications, rng)?.remove(0);
    Ok(EmptyAboveFourReport { a, replications, all_zero: rep.all_zero(), counts: rep.counts })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn planted_grid(values: Vec<f64>, radius: f64) -> FieldGrid<f64> {
        let n = values.len();
        FieldGrid {
            centers: (0..n).map(|i| [i as f64, 0.0, 0.0, 0.0]).collect(),
            levels: vec![radius],
            cell_volumes: vec![1.0; n],
            values,
            seed: 0,
            stream_id: 0,
        }
    }

    #[test]
    fn params_and_radii() {
        let p = UpperSchemeParams::default();
        p.validate().unwrap();
        assert_eq!(p.k_exponent(), 5.0);
        assert!((p.radius(2) - 1.0 / 32.0).abs() < 1e-15);
        let r = p.radii();
        assert!(r.windows(2).all(|w| w[1] < w[0]));
        assert!(p.delta(3) < p.delta(2));
        assert!(UpperSchemeParams { zeta: 1.0, ..p }.validate().is_err());
    }

    #[test]
    fn zero_thickness_counts_everything() {
        let p = UpperSchemeParams { a: 0.0, ..Default::default() };
        let grid = planted_grid(vec![0.0, -0.3, 2.0], p.radius(2));
        assert_eq!(count_high_centers(&grid, &p, 2).unwrap(), 3);
        assert_eq!(exact_tail_probability(&p, 2).unwrap(), 1.0);
    }

    #[test]
    fn planted_value_detected() {
        let p = UpperSchemeParams { a: 4.5, ..Default::default() };
        let r = p.radius(3);
        let big = 4.0 * SQRT_TWO_PI2 * green_g(r).unwrap();
        assert_eq!(count_high_centers(&planted_grid(vec![big], r), &p, 3).unwrap(), 1);
        assert_eq!(count_high_centers(&planted_grid(vec![0.1], r), &p, 3).unwrap(), 0);
        assert!(count_high_centers(&planted_grid(vec![0.1], r), &p, 4).is_err());
    }

    #[test]
    fn threshold_monotone_in_a() {
        let r = UpperSchemeParams::default().radius(2);
        let vals: Vec<f64> = (0..50).map(|i| (i as f64 - 25.0) * 0.02).collect();
        let grid = planted_grid(vals, r);
        let mut prev = usize::MAX;
        for a in [0.0, 0.1, 0.3, 0.6, 1.0] {
            let c = count_high_centers(&grid, &UpperSchemeParams { a, ..Default::default() }, 2).unwrap();
            assert!(c <= prev);
            prev = c;
        }
    }

    #[test]
    fn regression_recovers_power_law() {
        let p = UpperSchemeParams::default();
        let pts: Vec<DimensionPoint> = (2..=5)
            .map(|n| {
                let r = p.radius(n);
                DimensionPoint { radius: r, count: r.powf(-3.0).round() }
            })
            .collect();
        let f = box_dimension_estimate(&pts).unwrap();
        assert!((f.dimension_estimate - 3.0).abs() < 0.05);
        let flat: Vec<DimensionPoint> = pts.iter().map(|q| DimensionPoint { count: 7.0, ..*q }).collect();
        assert!(box_dimension_estimate(&flat).unwrap().dimension_estimate.abs() < 1e-12);
        assert!(matches!(box_dimension_estimate(&pts[..2]), Err(Error::InsufficientData { .. })));
    }

    #[test]
    fn drift_path_ratio_is_target() {
        let a = 0.7;
        let times = vec![0.5, 1.0, 2.0, 3.5];
        let mu = (4.0 * a * std::f64::consts::PI.powi(2)).sqrt();
        let path = RadialPath::new([0.0; 4], times.clone(), times.iter().map(|t| mu * t).collect()).unwrap();
        for &t in &times {
            assert!((thickness_ratio(&path, t).unwrap() - (2.0 * a).sqrt()).abs() < 1e-14);
        }
        assert!(thickness_ratio(&path, 0.75).is_err());
        assert!(is_limit_thick(&path, a, 1, 1e-9));
        assert!(is_limsup_thick(&path, a, 1, 1e-9));
        let zero = RadialPath::new([0.0; 4], times.clone(), vec![0.0; 4]).unwrap();
        assert_eq!(thickness_ratio(&zero, 2.0).unwrap(), 0.0);
    }
}
