//! Exact Gaussian sampling of the sphere-average family: joint draws from a
//! factorized covariance, radial Brownian paths in the time `t = G(r)`, and
//! the hierarchical grid sampler (joint coarse level, independent fine
//! increments per center).

use rayon::prelude::*;
use serde::Serialize;

use crate::covariance::{self, CovMatrix, GeometryCase, SphereSpec};
use crate::error::{Error, Result};
use crate::linalg;
use crate::rng::RngStream;
use crate::scalar::Scalar;

const JOINT_CHUNK: usize = 1024;
const COARSE_TAG: u64 = u64::MAX;

/// Row-major `rows × cols` matrix of draws.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Draws<T> {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<T>,
}

impl<T: Scalar> Draws<T> {
    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[i * self.cols + j]
    }
}

/// `n_draws` i.i.d. rows `L z` with `z` standard normal. Draws are generated
/// in chunks of 1024 rows, each from its own child stream, so the output is
/// independent of the thread count.
pub fn sample_joint<T: Scalar>(cov: &CovMatrix<T>, n_draws: usize, rng: RngStream) -> Result<Draws<T>> {
    let l = cov
        .factor()
        .ok_or(Error::State { op: "sampler::sample_joint", msg: "covariance matrix is not factorized".into() })?;
    let n = cov.size();
    let mut data = vec![T::zero(); n_draws * n];
    if n > 0 {
        data.par_chunks_mut(JOINT_CHUNK * n).enumerate().for_each(|(c, chunk)| {
            let mut g = rng.derive(&[c as u64]).generator();
            let mut z = vec![T::zero(); n];
            for row in chunk.chunks_mut(n) {
                for v in z.iter_mut() {
                    *v = T::lit(g.normal());
                }
                linalg::lower_mul(n, l, &z, row);
            }
        });
    }
    Ok(Draws { rows: n_draws, cols: n, data })
}

/// The time-changed process `B(x, t) = X(x, G⁻¹(t))` on a time grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RadialPath<T> {
    pub center: [T; 4],
    pub times: Vec<T>,
    pub values: Vec<T>,
}

impl<T: Scalar> RadialPath<T> {
    /// Builds a path from given values, checking the time grid.
    pub fn new(center: [T; 4], times: Vec<T>, values: Vec<T>) -> Result<Self> {
        check_times("sampler::RadialPath", &times)?;
        if times.len() != values.len() {
            return Err(Error::domain("sampler::RadialPath", "times and values differ in length"));
        }
        Ok(Self { center, times, values })
    }

    /// Index of `t` on the grid, compared exactly.
    pub fn index_of(&self, t: T) -> Option<usize> {
        self.times.binary_search_by(|p| p.partial_cmp(&t).expect("finite times")).ok()
    }
}

fn check_times<T: Scalar>(op: &'static str, times: &[T]) -> Result<()> {
    if times.is_empty() {
        return Err(Error::domain(op, "time grid is empty"));
    }
    if !(times[0] > T::zero()) || times.iter().any(|t| !t.is_finite()) {
        return Err(Error::domain(op, "times must be finite and positive"));
    }
    if let Some(k) = times.windows(2).position(|w| w[1] <= w[0]) {
        return Err(Error::domain(op, format!("times not strictly increasing at index {}", k + 1)));
    }
    Ok(())
}

/// Brownian path on `times`: `B(t₀) ~ N(0, t₀)` plus independent
/// `N(0, t_{k+1} − t_k)` increments.
pub fn radial_bm<T: Scalar>(center: [T; 4], times: &[T], rng: RngStream) -> Result<RadialPath<T>> {
    check_times("sampler::radial_bm", times)?;
    let mut g = rng.generator();
    let mut values = Vec::with_capacity(times.len());
    let mut prev_t = T::zero();
    let mut b = T::zero();
    for &t in times {
        b = b + T::lit(g.normal()) * (t - prev_t).sqrt();
        values.push(b);
        prev_t = t;
    }
    Ok(RadialPath { center, times: times.to_vec(), values })
}

/// Layout of a field grid: centers, strictly decreasing radii and the cell
/// volume attached to each center.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FieldGridSpec<T> {
    pub centers: Vec<[T; 4]>,
    pub levels: Vec<T>,
    pub cell_volumes: Vec<T>,
}

impl<T: Scalar> FieldGridSpec<T> {
    pub fn new(centers: Vec<[T; 4]>, levels: Vec<T>, cell_volumes: Vec<T>) -> Result<Self> {
        const OP: &str = "sampler::FieldGridSpec";
        if centers.is_empty() || levels.is_empty() {
            return Err(Error::domain(OP, "need at least one center and one level"));
        }
        if cell_volumes.len() != centers.len() {
            return Err(Error::domain(OP, "one cell volume per center required"));
        }
        if levels.iter().any(|r| !(*r > T::zero() && r.is_finite())) {
            return Err(Error::domain(OP, "radii must be finite and positive"));
        }
        if levels.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::domain(OP, "radii must be strictly decreasing"));
        }
        Ok(Self { centers, levels, cell_volumes })
    }

    /// `k⁴` cell centers of the regular partition of `[0,1]⁴`, each carrying
    /// volume `k⁻⁴`.
    pub fn lattice(k: usize, levels: Vec<T>) -> Result<Self> {
        if k == 0 {
            return Err(Error::domain("sampler::FieldGridSpec::lattice", "k must be positive"));
        }
        let h = T::one() / T::from_usize_lossy(k);
        let mut centers = Vec::with_capacity(k.pow(4));
        for a in 0..k {
            for b in 0..k {
                for c in 0..k {
                    for d in 0..k {
                        let coord = |i: usize| (T::from_usize_lossy(i) + T::lit(0.5)) * h;
                        centers.push([coord(a), coord(b), coord(c), coord(d)]);
                    }
                }
            }
        }
        let vol = h.powi(4);
        let n = centers.len();
        Self::new(centers, levels, vec![vol; n])
    }

    pub fn coarse_radius(&self) -> T {
        self.levels[0]
    }

    /// Smallest distance between distinct centers (`+∞` for one center).
    pub fn min_spacing(&self) -> T {
        let n = self.centers.len();
        (0..n)
            .into_par_iter()
            .map(|i| {
                let mut m = T::infinity();
                for j in i + 1..n {
                    m = m.min(covariance::distance(&self.centers[i], &self.centers[j]));
                }
                m
            })
            .reduce(T::infinity, T::min)
    }

    /// Times `t_l = G(ε_l)` of the levels.
    pub fn level_times(&self) -> Result<Vec<T>> {
        self.levels.iter().map(|&r| covariance::green_g(r)).collect()
    }
}

/// Field values at every (center, level) plus the stream that produced them.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FieldGrid<T> {
    pub centers: Vec<[T; 4]>,
    pub levels: Vec<T>,
    pub cell_volumes: Vec<T>,
    /// Row-major `centers × levels`.
    pub values: Vec<T>,
    pub seed: u64,
    pub stream_id: u64,
}

impl<T: Scalar> FieldGrid<T> {
    pub fn n_centers(&self) -> usize {
        self.centers.len()
    }

    pub fn n_levels(&self) -> usize {
        self.levels.len()
    }

    pub fn value(&self, center: usize, level: usize) -> T {
        self.values[center * self.levels.len() + level]
    }

    pub fn level_values(&self, level: usize) -> impl Iterator<Item = T> + '_ {
        let l = self.levels.len();
        self.values.iter().skip(level).step_by(l).copied()
    }
}

/// Reusable hierarchical sampler: the coarse covariance is assembled and
/// factorized once.
#[derive(Debug, Clone)]
pub struct HierarchicalSampler<T> {
    spec: FieldGridSpec<T>,
    coarse: CovMatrix<T>,
    increment_sd: Vec<T>,
}

impl<T: Scalar> HierarchicalSampler<T> {
    pub fn new(spec: FieldGridSpec<T>) -> Result<Self> {
        const OP: &str = "sampler::hierarchical_sample";
        let eps0 = spec.coarse_radius();
        let spacing = spec.min_spacing();
        if !(spacing > T::lit(2.0) * eps0) {
            return Err(Error::precondition(
                OP,
                format!("center spacing {spacing} must exceed 2·ε₀ = {}", T::lit(2.0) * eps0),
            ));
        }
        let specs: Vec<SphereSpec<T>> =
            spec.centers.iter().map(|&c| SphereSpec::new(c, eps0)).collect::<Result<_>>()?;
        // spacing > 2ε₀ already implies this; kept as a guard for rounding
        if specs.len() <= 64 {
            for i in 0..specs.len() {
                for j in 0..i {
                    if covariance::classify(&specs[i], &specs[j]) != GeometryCase::Disjoint {
                        return Err(Error::geometry(OP, format!("coarse pair ({j}, {i}) is not disjoint")));
                    }
                }
            }
        }
        let coarse = covariance::assemble(&specs)?;
        let times = spec.level_times()?;
        let increment_sd = times.windows(2).map(|w| (w[1] - w[0]).sqrt()).collect();
        Ok(Self { spec, coarse, increment_sd })
    }

    pub fn spec(&self) -> &FieldGridSpec<T> {
        &self.spec
    }

    pub fn coarse_covariance(&self) -> &CovMatrix<T> {
        &self.coarse
    }

    /// One exact draw of the whole family. The coarse level uses the child
    /// stream `[u64::MAX]`; the increment at fine level `l` of center `i`
    /// uses child stream `[i, l]`, so enlarging the grid leaves existing
    /// centers untouched.
    pub fn sample(&self, rng: RngStream) -> Result<FieldGrid<T>> {
        let n = self.spec.centers.len();
        let levels = self.spec.levels.len();
        let coarse = sample_joint(&self.coarse, 1, rng.derive(&[COARSE_TAG]))?;
        let mut values = vec![T::zero(); n * levels];
        values.par_chunks_mut(levels).enumerate().for_each(|(i, row)| {
            let mut acc = coarse.data[i];
            row[0] = acc;
            for (l, sd) in self.increment_sd.iter().enumerate() {
                let z = rng.derive(&[i as u64, (l + 1) as u64]).generator().normal();
                acc = acc + *sd * T::lit(z);
                row[l + 1] = acc;
            }
        });
        Ok(FieldGrid {
            centers: self.spec.centers.clone(),
            levels: self.spec.levels.clone(),
            cell_volumes: self.spec.cell_volumes.clone(),
            values,
            seed: rng.seed,
            stream_id: rng.stream_id,
        })
    }
}

/// One-shot form of [`HierarchicalSampler`].
pub fn hierarchical_sample<T: Scalar>(spec: &FieldGridSpec<T>, rng: RngStream) -> Result<FieldGrid<T>> {
    HierarchicalSampler::new(spec.clone())?.sample(rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::covariance::green_g;

    #[test]
    fn unfactorized_is_state_error() {
        let m = CovMatrix::from_dense(1, vec![1.0_f64]).unwrap();
        assert!(matches!(sample_joint(&m, 3, RngStream::new(1, 1)), Err(Error::State { .. })));
    }

    #[test]
    fn joint_is_deterministic() {
        let cov =
            covariance::assemble(&[SphereSpec::new([0.0; 4], 0.1).unwrap(), SphereSpec::new([0.0; 4], 0.2).unwrap()])
                .unwrap();
        let a = sample_joint(&cov, 3000, RngStream::new(42, 9)).unwrap();
        let b = sample_joint(&cov, 3000, RngStream::new(42, 9)).unwrap();
        assert_eq!(a, b);
        let c = sample_joint(&cov, 3000, RngStream::new(42, 10)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn radial_bm_rejects_bad_grids() {
        let r = RngStream::new(0, 0);
        assert!(radial_bm([0.0; 4], &[1.0, 1.0], r).is_err());
        assert!(radial_bm([0.0; 4], &[0.0, 1.0], r).is_err());
        assert!(radial_bm::<f64>([0.0; 4], &[], r).is_err());
    }

    #[test]
    fn spacing_precondition() {
        let spec = FieldGridSpec::new(vec![[0.0; 4], [0.15, 0.0, 0.0, 0.0]], vec![0.1, 0.05], vec![1.0, 1.0]).unwrap();
        assert!(matches!(hierarchical_sample(&spec, RngStream::new(1, 0)), Err(Error::Precondition { .. })));
    }

    #[test]
    fn single_center_reduces_to_radial_path() {
        let spec = FieldGridSpec::new(vec![[0.5; 4]], vec![0.2, 0.05, 0.01], vec![1.0]).unwrap();
        let grid = hierarchical_sample(&spec, RngStream::new(5, 0)).unwrap();
        assert_eq!(grid.n_levels(), 3);
        let times = spec.level_times().unwrap();
        assert!((times[0] - green_g(0.2_f64).unwrap()).abs() < 1e-15);
        // values are cumulative: increments between levels equal the path increments
        let v: Vec<f64> = (0..3).map(|l| grid.value(0, l)).collect();
        assert!(v.iter().all(|x| x.is_finite()));
    }

    #[test]
    fn levels_must_decrease() {
        assert!(FieldGridSpec::new(vec![[0.0; 4]], vec![0.1, 0.2], vec![1.0]).is_err());
    }

    #[test]
    fn lattice_layout() {
        let s = FieldGridSpec::<f64>::lattice(3, vec![0.1]).unwrap();
        assert_eq!(s.centers.len(), 81);
        assert!((s.min_spacing() - 1.0 / 3.0).abs() < 1e-15);
        assert!((s.cell_volumes.iter().sum::<f64>() - 1.0).abs() < 1e-14);
    }
}
