//! Perfect-thick-point scheme: radii `s_m = 1/m!`, times `t_m = G(s_m)`,
//! events `A_m`, `B_{n+1}`, their probabilities and the two-point
//! correlation inequality.

use serde::{Deserialize, Serialize};

use crate::covariance::{self, green_g, green_g_inv, GeometryCase, SphereSpec};
use crate::error::{Error, Result};
use crate::rng::{Generator, RngStream};
use crate::sampler::{self, RadialPath};
use crate::stats::Estimate;

/// Sub-steps per interval `(t_m, t_{m+1}]`.
pub const DEFAULT_SUBSTEPS: usize = 32;
/// Length of the tail window after `t_{n+1}` for `B_{n+1}`.
pub const DEFAULT_TAIL_HORIZON: f64 = 10.0;
/// Tail grid points per unit time.
pub const DEFAULT_TAIL_STEPS_PER_UNIT: usize = 32;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LowerSchemeParams {
    pub a: f64,
    pub n_max: usize,
    /// `s[m−1] = 1/m!` for `m = 1..=n_max+1`.
    pub s: Vec<f64>,
    /// `t[m−1] = G(s_m)`.
    pub t: Vec<f64>,
}

impl LowerSchemeParams {
    pub fn new(a: f64, n_max: usize) -> Result<Self> {
        const OP: &str = "multifractal::LowerSchemeParams";
        if !(a >= 0.0 && a.is_finite()) {
            return Err(Error::domain(OP, format!("a = {a} must be finite and >= 0")));
        }
        if n_max == 0 {
            return Err(Error::domain(OP, "n_max must be positive"));
        }
        let mut s = Vec::with_capacity(n_max + 1);
        let mut fact = 1.0;
        for m in 1..=n_max + 1 {
            fact *= m as f64;
            s.push(1.0 / fact);
        }
        let t = s.iter().map(|&r| green_g(r)).collect::<Result<Vec<_>>>()?;
        Ok(Self { a, n_max, s, t })
    }

    /// Drift `μ = √(4aπ²)`.
    pub fn drift(&self) -> f64 {
        (4.0 * self.a).sqrt() * std::f64::consts::PI
    }

    /// `s_m` (1-based).
    pub fn s_m(&self, m: usize) -> f64 {
        self.s[m - 1]
    }

    /// `t_m` (1-based).
    pub fn t_m(&self, m: usize) -> f64 {
        self.t[m - 1]
    }

    fn check_n(&self, op: &'static str, n: usize) -> Result<()> {
        if n == 0 || n > self.n_max {
            return Err(Error::domain(op, format!("n = {n} must lie in 1..={}", self.n_max)));
        }
        Ok(())
    }
}

/// Discretization of the event windows.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridOptions {
    pub substeps: usize,
    pub tail_horizon: f64,
    pub tail_steps_per_unit: usize,
}

impl Default for GridOptions {
    fn default() -> Self {
        Self {
            substeps: DEFAULT_SUBSTEPS,
            tail_horizon: DEFAULT_TAIL_HORIZON,
            tail_steps_per_unit: DEFAULT_TAIL_STEPS_PER_UNIT,
        }
    }
}

/// Time grid from `t_1` through `t_{n+1} + T_tail` with `anchors[m−1]` the
/// index of `t_m`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EventGrid {
    pub n: usize,
    pub times: Vec<f64>,
    pub anchors: Vec<usize>,
}

pub fn event_grid(params: &LowerSchemeParams, n: usize, opts: GridOptions) -> Result<EventGrid> {
    const OP: &str = "multifractal::event_grid";
    params.check_n(OP, n)?;
    if opts.substeps == 0 || opts.tail_steps_per_unit == 0 || !(opts.tail_horizon >= 0.0) {
        return Err(Error::domain(OP, "grid options must be positive"));
    }
    let mut times = vec![params.t_m(1)];
    let mut anchors = vec![0];
    for m in 1..=n {
        let (a, b) = (params.t_m(m), params.t_m(m + 1));
        for j in 1..opts.substeps {
            times.push(a + (b - a) * j as f64 / opts.substeps as f64);
        }
        times.push(b);
        anchors.push(times.len() - 1);
    }
    let t_end = params.t_m(n + 1);
    let tail_steps = (opts.tail_horizon * opts.tail_steps_per_unit as f64).round() as usize;
    for k in 1..=tail_steps {
        times.push(t_end + k as f64 / opts.tail_steps_per_unit as f64);
    }
    Ok(EventGrid { n, times, anchors })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PerfectThickTrace {
    pub path: RadialPath<f64>,
    /// `a_flags[m−1]` is the `A_m` flag, `m = 1..=n`.
    pub a_flags: Vec<bool>,
    pub b_flag: bool,
    pub is_perfect: bool,
}

/// Evaluates `A_1..A_n` and `B_{n+1}` on a path whose grid contains
/// `t_1..t_{n+1}` exactly. Suprema run over the grid points.
pub fn perfect_thick_trace(path: &RadialPath<f64>, params: &LowerSchemeParams, n: usize) -> Result<PerfectThickTrace> {
    const OP: &str = "multifractal::perfect_thick_trace";
    params.check_n(OP, n)?;
    let anchor = |m: usize| {
        path.index_of(params.t_m(m))
            .ok_or_else(|| Error::domain(OP, format!("t_{m} = {} missing from the path grid", params.t_m(m))))
    };
    let mu = params.drift();
    let mut a_flags = Vec::with_capacity(n);
    for m in 1..=n {
        let (i0, i1) = (anchor(m)?, anchor(m + 1)?);
        let (t0, b0) = (path.times[i0], path.values[i0]);
        let bound = (path.times[i1] - t0).sqrt();
        let ok = (i0 + 1..=i1).all(|k| (path.values[k] - b0 - mu * (path.times[k] - t0)).abs() <= bound);
        a_flags.push(ok);
    }
    let ie = anchor(n + 1)?;
    let (te, be) = (path.times[ie], path.values[ie]);
    let b_flag = (ie..path.times.len()).all(|k| (path.values[k] - be).abs() - path.times[k] <= 1.0 - te);
    let is_perfect = b_flag && a_flags.iter().all(|&f| f);
    Ok(PerfectThickTrace { path: path.clone(), a_flags, b_flag, is_perfect })
}

/// Path-free evaluation of `Eⁿ` with early exit. Consumes the generator
/// exactly as [`sampler::radial_bm`] would on the same grid until the first
/// failed event.
pub fn simulate_perfect(params: &LowerSchemeParams, grid: &EventGrid, g: &mut Generator) -> bool {
    let mu = params.drift();
    let times = &grid.times;
    let mut b = g.normal() * times[0].sqrt();
    for m in 0..grid.n {
        let (i0, i1) = (grid.anchors[m], grid.anchors[m + 1]);
        let (t0, b0) = (times[i0], b);
        let bound = (times[i1] - t0).sqrt();
        for k in i0 + 1..=i1 {
            b += g.normal() * (times[k] - times[k - 1]).sqrt();
            if (b - b0 - mu * (times[k] - t0)).abs() > bound {
                return false;
            }
        }
    }
    let ie = grid.anchors[grid.n];
    let (te, be) = (times[ie], b);
    for k in ie + 1..times.len() {
        b += g.normal() * (times[k] - times[k - 1]).sqrt();
        if (b - be).abs() - times[k] > 1.0 - te {
            return false;
        }
    }
    true
}

/// Monte Carlo `P(Eⁿ)` over `n_paths` radial paths.
pub fn perfect_probability(
    params: &LowerSchemeParams,
    n: usize,
    opts: GridOptions,
    n_paths: usize,
    rng: RngStream,
) -> Result<Estimate> {
    let grid = event_grid(params, n, opts)?;
    let hits = bernoulli_chunks(n_paths, rng, |g| simulate_perfect(params, &grid, g));
    Ok(bernoulli_estimate(hits, n_paths))
}

pub(crate) fn bernoulli_estimate(hits: usize, n: usize) -> Estimate {
    let p = hits as f64 / n as f64;
    Estimate { mean: p, se: (p * (1.0 - p) / n as f64).sqrt(), n }
}

fn bernoulli_chunks(n: usize, rng: RngStream, f: impl Fn(&mut Generator) -> bool + Sync) -> usize {
    use rayon::prelude::*;
    const CHUNK: usize = 4096;
    (0..n.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let mut g = rng.derive(&[c as u64]).generator();
            let len = CHUNK.min(n - c * CHUNK);
            (0..len).filter(|_| f(&mut g)).count()
        })
        .sum()
}

/// `P(sup_{s∈[0,1]} |W_s − c·s| ≤ 1)` for standard Brownian motion `W`, by
/// the eigenfunction expansion of the killed process and Girsanov.
pub fn strip_probability(c: f64) -> f64 {
    strip_probability_barrier(c, 1.0)
}

/// `P(sup_{s∈[0,1]} |W_s − c·s| ≤ b)`.
pub fn strip_probability_barrier(c: f64, b: f64) -> f64 {
    // rescale to barrier 1 over horizon 1/b²
    let (c, horizon) = (c * b, 1.0 / (b * b));
    let pi = std::f64::consts::PI;
    let mut sum = 0.0;
    for j in 0..200 {
        let k = (2 * j + 1) as f64;
        let omega = k * pi / 2.0;
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        let term = sign * (-k * k * pi * pi * horizon / 8.0).exp() * omega / (c * c + omega * omega);
        sum += term;
        if term.abs() < 1e-300 {
            break;
        }
    }
    2.0 * c.cosh() * (-c * c * horizon / 2.0).exp() * sum
}

/// Shift `β = −ζ(1/2)/√(2π)` of the effective barrier under discrete
/// monitoring: a barrier `b` checked every `h` behaves like `b + β√h`.
pub const DISCRETE_BARRIER_SHIFT: f64 = 0.582_597_157_939_010_7;

/// Exact probability of `A_m` for continuous paths: the strip event with
/// drift `μ√(t_{m+1} − t_m)`.
pub fn exact_a_probability(params: &LowerSchemeParams, m: usize) -> f64 {
    let dt = params.t_m(m + 1) - params.t_m(m);
    strip_probability(params.drift() * dt.sqrt())
}

/// Continuity-corrected approximation of `P(A_m)` when the supremum is
/// taken over `substeps` equally spaced points.
pub fn discrete_a_probability(params: &LowerSchemeParams, m: usize, substeps: usize) -> f64 {
    let dt = params.t_m(m + 1) - params.t_m(m);
    let b = 1.0 + DISCRETE_BARRIER_SHIFT / (substeps as f64).sqrt();
    strip_probability_barrier(params.drift() * dt.sqrt(), b)
}

/// Monte Carlo `P(A_m)` with `substeps` grid points on `(t_m, t_{m+1}]`.
pub fn a_event_probability(
    params: &LowerSchemeParams,
    m: usize,
    substeps: usize,
    n_paths: usize,
    rng: RngStream,
) -> Result<Estimate> {
    if m == 0 || m + 1 > params.t.len() || substeps == 0 {
        return Err(Error::domain("multifractal::a_event_probability", "m or substeps out of range"));
    }
    let mu = params.drift();
    let dt = params.t_m(m + 1) - params.t_m(m);
    let h = dt / substeps as f64;
    let (sd, bound) = (h.sqrt(), dt.sqrt());
    let hits = bernoulli_chunks(n_paths, rng, |g| {
        let mut w = 0.0;
        for k in 1..=substeps {
            w += g.normal() * sd;
            if (w - mu * h * k as f64).abs() > bound {
                return false;
            }
        }
        true
    });
    Ok(bernoulli_estimate(hits, n_paths))
}

/// `𝒞_l = C·∏_{j=1}^{l+1} 1/c_j` with
/// `c_j = exp(½μ√(t_{j+1}−t_j) − μ²(t_{j+1}−t_j))`, `μ² = 4aπ²`, from an
/// explicit time list (`t[j−1] = t_j`).
pub fn corr_constant_from_times(l: usize, a: f64, t: &[f64], c: f64) -> Result<f64> {
    if l == 0 || t.len() < l + 2 {
        return Err(Error::domain(
            "multifractal::corr_constant",
            format!("l = {l} needs l >= 1 and at least {} times, got {}", l + 2, t.len()),
        ));
    }
    let mu2 = 4.0 * a * std::f64::consts::PI * std::f64::consts::PI;
    let log_prod: f64 = (1..=l + 1)
        .map(|j| {
            let dt = t[j] - t[j - 1];
            -(0.5 * (mu2 * dt).sqrt() - mu2 * dt)
        })
        .sum();
    Ok(c * log_prod.exp())
}

pub fn corr_constant(l: usize, params: &LowerSchemeParams, c: f64) -> Result<f64> {
    corr_constant_from_times(l, params.a, &params.t, c)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelationOptions {
    /// Distance `|x − y|` along the first axis; `None` uses `s_l`.
    pub distance: Option<f64>,
    /// Calibrated constant `C` in `𝒞_l`.
    pub c_const: f64,
    pub grid: GridOptions,
}

impl Default for CorrelationOptions {
    fn default() -> Self {
        Self { distance: None, c_const: 1.0, grid: GridOptions::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrelationReport {
    pub l: usize,
    pub n: usize,
    pub distance: f64,
    pub n_draws: usize,
    /// Smallest retained time; all grid times at or after it enter the
    /// joint law. `None` when nothing is supported.
    pub retained_from_time: Option<f64>,
    /// Events (`"A1"`, …, `"B3"`) whose windows overlap unsupported
    /// sphere pairs and are dropped from both centers.
    pub excluded_events: Vec<String>,
    pub included_events: Vec<String>,
    pub p_x: Estimate,
    pub p_y: Estimate,
    pub p_joint: Estimate,
    pub corr_constant: f64,
    pub combined_se: f64,
    pub ratio: f64,
    pub holds: bool,
}

/// Monte Carlo check of `P(Eⁿ(x) ∩ Eⁿ(y)) ≤ 𝒞_l P(Eⁿ(x)) P(Eⁿ(y))` with
/// `x = (½,½,½,½)`, `y = x + d·e₁`. Grid times are retained from the
/// smallest radius upwards while every cross pair of spheres stays disjoint
/// or nested; events whose windows are not fully retained are excluded for
/// both centers and listed.
pub fn correlation_inequality_check(
    l: usize,
    n: usize,
    params: &LowerSchemeParams,
    opts: CorrelationOptions,
    n_draws: usize,
    rng: RngStream,
) -> Result<CorrelationReport> {
    const OP: &str = "multifractal::correlation_inequality_check";
    params.check_n(OP, n)?;
    let c_l = corr_constant(l, params, opts.c_const)?;
    let d = opts.distance.unwrap_or_else(|| params.s_m(l));
    if !(d > 0.0) {
        return Err(Error::domain(OP, "distance must be positive"));
    }
    let grid = event_grid(params, n, opts.grid)?;
    let x = [0.5; 4];
    let y = [0.5 + d, 0.5, 0.5, 0.5];
    let radii: Vec<f64> = grid.times.iter().map(|&t| green_g_inv(t)).collect::<Result<_>>()?;

    // suffix retention, smallest radius first
    let mut first = grid.times.len();
    for k in (0..grid.times.len()).rev() {
        let sx = SphereSpec::new(x, radii[k])?;
        let ok = (k..grid.times.len()).all(|j| {
            let sy = SphereSpec::new(y, radii[j]).expect("positive radius");
            let sxj = SphereSpec::new(x, radii[j]).expect("positive radius");
            let syk = SphereSpec::new(y, radii[k]).expect("positive radius");
            covariance::classify(&sx, &sy) != GeometryCase::Unsupported
                && covariance::classify(&sxj, &syk) != GeometryCase::Unsupported
        });
        if !ok {
            break;
        }
        first = k;
    }

    let a_included: Vec<bool> = (0..n).map(|m| first < grid.times.len() && grid.anchors[m] >= first).collect();
    let b_included = first < grid.times.len() && grid.anchors[n] >= first;
    let mut included_events = Vec::new();
    let mut excluded_events = Vec::new();
    for (m, &inc) in a_included.iter().enumerate() {
        let name = format!("A{}", m + 1);
        if inc {
            included_events.push(name)
        } else {
            excluded_events.push(name)
        }
    }
    let bname = format!("B{}", n + 1);
    if b_included {
        included_events.push(bname)
    } else {
        excluded_events.push(bname)
    }
    if !excluded_events.is_empty() {
        log::info!("correlation check l = {l}, n = {n}: excluded {excluded_events:?}");
    }

    let (p_x, p_y, p_joint, retained_from_time) = if first == grid.times.len() {
        let one = Estimate { mean: 1.0, se: 0.0, n: n_draws };
        (one, one, one, None)
    } else {
        let kept = &grid.times[first..];
        let mut specs = Vec::with_capacity(2 * kept.len());
        for center in [x, y] {
            for r in &radii[first..] {
                specs.push(SphereSpec::new(center, *r)?);
            }
        }
        let cov = covariance::assemble(&specs)?;
        let draws = sampler::sample_joint(&cov, n_draws, rng)?;
        let len = kept.len();
        let mu = params.drift();
        let events_hold = |vals: &[f64]| -> bool {
            let idx = |i: usize| i - first;
            for (m, &included) in a_included.iter().enumerate().take(n) {
                if !included {
                    continue;
                }
                let (i0, i1) = (idx(grid.anchors[m]), idx(grid.anchors[m + 1]));
                let (t0, b0) = (kept[i0], vals[i0]);
                let bound = (kept[i1] - t0).sqrt();
                if (i0 + 1..=i1).any(|k| (vals[k] - b0 - mu * (kept[k] - t0)).abs() > bound) {
                    return false;
                }
            }
            if b_included {
                let ie = idx(grid.anchors[n]);
                let (te, be) = (kept[ie], vals[ie]);
                if (ie..len).any(|k| (vals[k] - be).abs() - kept[k] > 1.0 - te) {
                    return false;
                }
            }
            true
        };
        let (mut hx, mut hy, mut hj) = (0usize, 0usize, 0usize);
        for r in 0..n_draws {
            let row = draws.row(r);
            let ex = events_hold(&row[..len]);
            let ey = events_hold(&row[len..]);
            hx += ex as usize;
            hy += ey as usize;
            hj += (ex && ey) as usize;
        }
        (
            bernoulli_estimate(hx, n_draws),
            bernoulli_estimate(hy, n_draws),
            bernoulli_estimate(hj, n_draws),
            Some(kept[0]),
        )
    };
    let bound = c_l * p_x.mean * p_y.mean;
    let combined_se = (p_joint.se.powi(2)
        + c_l * c_l * (p_y.mean.powi(2) * p_x.se.powi(2) + p_x.mean.powi(2) * p_y.se.powi(2)))
    .sqrt();
    let ratio = if p_x.mean * p_y.mean > 0.0 { p_joint.mean / (p_x.mean * p_y.mean) } else { f64::NAN };
    Ok(CorrelationReport {
        l,
        n,
        distance: d,
        n_draws,
        retained_from_time,
        excluded_events,
        included_events,
        p_x,
        p_y,
        p_joint,
        corr_constant: c_l,
        combined_se,
        ratio,
        holds: p_joint.mean <= bound + 3.0 * combined_se,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schedule() {
        let p = LowerSchemeParams::new(0.5, 3).unwrap();
        assert_eq!(p.s.len(), 4);
        assert!((p.s_m(3) - 1.0 / 6.0).abs() < 1e-16);
        assert!(p.t.windows(2).all(|w| w[1] > w[0]));
        assert!(p.s.windows(2).all(|w| w[1] < w[0]));
        assert!((p.t_m(4) - green_g(1.0 / 24.0).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn grid_contains_anchors() {
        let p = LowerSchemeParams::new(0.25, 3).unwrap();
        let g = event_grid(&p, 2, GridOptions::default()).unwrap();
        for m in 1..=3 {
            assert_eq!(g.times[g.anchors[m - 1]], p.t_m(m));
        }
        assert_eq!(g.times.len(), 1 + 2 * 32 + 320);
        assert!(g.times.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn drift_path_is_perfect() {
        let p = LowerSchemeParams::new(0.5, 3).unwrap();
        let g = event_grid(&p, 3, GridOptions::default()).unwrap();
        let mu = p.drift();
        let path = RadialPath::new([0.0; 4], g.times.clone(), g.times.iter().map(|t| mu * t).collect()).unwrap();
        let tr = perfect_thick_trace(&path, &p, 3).unwrap();
        assert!(tr.a_flags.iter().all(|&f| f));
        assert_eq!(tr.a_flags.len(), 3);
    }

    #[test]
    fn planted_jump_breaks_first_event() {
        let p = LowerSchemeParams::new(0.5, 2).unwrap();
        let g = event_grid(&p, 2, GridOptions::default()).unwrap();
        let mu = p.drift();
        let jump = 10.0 * (p.t_m(2) - p.t_m(1)).sqrt();
        let vals: Vec<f64> =
            g.times.iter().enumerate().map(|(k, t)| mu * t + if k >= 5 { jump } else { 0.0 }).collect();
        let path = RadialPath::new([0.0; 4], g.times.clone(), vals).unwrap();
        let tr = perfect_thick_trace(&path, &p, 2).unwrap();
        assert!(!tr.a_flags[0]);
        assert!(tr.a_flags[1]);
        assert!(!tr.is_perfect);
    }

    #[test]
    fn trace_rejects_missing_anchor() {
        let p = LowerSchemeParams::new(0.5, 2).unwrap();
        let path = RadialPath::new([0.0; 4], vec![0.01, 0.02], vec![0.0, 0.0]).unwrap();
        assert!(perfect_thick_trace(&path, &p, 1).is_err());
    }

    #[test]
    fn early_exit_agrees_with_full_trace() {
        let p = LowerSchemeParams::new(0.25, 2).unwrap();
        let g = event_grid(&p, 2, GridOptions::default()).unwrap();
        for k in 0..300 {
            let stream = RngStream::new(11, k);
            let path = sampler::radial_bm([0.5; 4], &g.times, stream).unwrap();
            let full = perfect_thick_trace(&path, &p, 2).unwrap().is_perfect;
            let fast = simulate_perfect(&p, &g, &mut stream.generator());
            assert_eq!(full, fast, "stream {k}");
        }
    }

    #[test]
    fn strip_probability_driftless_value() {
        // P(sup_[0,1] |W| < 1)
        assert!((strip_probability(0.0) - 0.370_777_5).abs() < 1e-6);
        assert!(strip_probability(1.0) < strip_probability(0.0));
        assert!((strip_probability(0.5) - strip_probability(-0.5)).abs() < 1e-15);
    }

    #[test]
    fn corr_constant_degenerate_cases() {
        let t = vec![0.3; 6];
        assert_eq!(corr_constant_from_times(2, 0.5, &t, 1.0).unwrap(), 1.0);
        let p0 = LowerSchemeParams::new(0.0, 4).unwrap();
        assert_eq!(corr_constant(3, &p0, 1.0).unwrap(), 1.0);
        let p = LowerSchemeParams::new(0.5, 2).unwrap();
        assert!(corr_constant(2, &p, 1.0).is_err());
    }
}
