//! Numerical acceptance criteria, each reduced to a list of [`Check`]s.
//!
//! [`run_all`] evaluates criteria 1–10 twice from the same seed and adds a
//! determinism criterion comparing the two JSON renderings byte for byte.

pub mod oracle;

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::covariance::{assemble, classify, green_g, green_g_inv, kernel, GeometryCase, SphereSpec};
use crate::error::Result;
use crate::linalg::min_eigenvalue_estimate;
use crate::liouville::{cm_tilt_check, liouville_grid, moment_check, LiouvilleParams, TiltOptions};
use crate::multifractal::{
    correlation_inequality_check, empty_above_four_check, energy_scheme, CorrelationOptions, EnergyOptions,
    LowerSchemeParams, UpperExperiment, UpperSchemeParams,
};
use crate::rng::RngStream;
use crate::sampler::{radial_bm, FieldGridSpec, HierarchicalSampler};
use crate::specfun::{bessel_i, bessel_k, turan, BesselOrder};
use crate::stats;

/// Seed used by `verify-all` unless overridden.
pub const SHIPPED_SEED: u64 = 4_041_997;

/// Frozen lower bound for `turan(x)/x²` on `[1e-4, 10]`.
pub const TURAN_OVER_X2_LOWER: f64 = 0.12;
/// Frozen `C` in `G(x) + C log x ≤ C′` on `(0, 1]`.
pub const BOUND_G_C: f64 = 1.0 / (2.0 * PI * PI);
/// Frozen `C′` in `G(x) + C log x ≤ C′` on `(0, 1]`.
pub const BOUND_G_C_PRIME: f64 = 0.036;
/// Largest accepted ratio between the `α`-energies of `μ_1, μ_2, μ_3`.
pub const ENERGY_STABILITY_RATIO: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Profile {
    /// Sample sizes as pinned by the criteria.
    #[default]
    Full,
    /// Reduced sizes for smoke runs; tolerances are unchanged.
    Quick,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VerifyConfig {
    pub seed: u64,
    pub profile: Profile,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self { seed: SHIPPED_SEED, profile: Profile::Full }
    }
}

struct Sizes {
    joint_samples: usize,
    bm_paths: usize,
    moment_reps: usize,
    tilt_draws: usize,
    lattice: usize,
    upper_reps: usize,
    empty_reps: usize,
    energy_reps: usize,
    pilot_paths: usize,
    corr_draws: usize,
}

impl Sizes {
    fn of(p: Profile) -> Self {
        match p {
            Profile::Full => Sizes {
                joint_samples: 1_000_000,
                bm_paths: 100_000,
                moment_reps: 10_000,
                tilt_draws: 200_000,
                lattice: 8,
                upper_reps: 400,
                empty_reps: 50,
                energy_reps: 2000,
                pilot_paths: 200_000,
                corr_draws: 10_000,
            },
            Profile::Quick => Sizes {
                joint_samples: 20_000,
                bm_paths: 5_000,
                moment_reps: 200,
                tilt_draws: 5_000,
                lattice: 4,
                upper_reps: 20,
                empty_reps: 5,
                energy_reps: 40,
                pilot_paths: 20_000,
                corr_draws: 1_000,
            },
        }
    }
}

/// Relation tested by a [`Check`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Relation {
    /// `|observed − target| ≤ tolerance`
    Close,
    /// `observed ≤ target`
    AtMost,
    /// `observed ≥ target`
    AtLeast,
    /// `observed` is 1 for true
    Holds,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub relation: Relation,
    pub observed: f64,
    pub target: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl Check {
    pub fn close(name: impl Into<String>, observed: f64, target: f64, tolerance: f64) -> Self {
        let passed = (observed - target).abs() <= tolerance;
        Check { name: name.into(), relation: Relation::Close, observed, target, tolerance, passed }
    }

    pub fn at_most(name: impl Into<String>, observed: f64, bound: f64) -> Self {
        Check {
            name: name.into(),
            relation: Relation::AtMost,
            observed,
            target: bound,
            tolerance: 0.0,
            passed: observed <= bound,
        }
    }

    pub fn at_least(name: impl Into<String>, observed: f64, bound: f64) -> Self {
        Check {
            name: name.into(),
            relation: Relation::AtLeast,
            observed,
            target: bound,
            tolerance: 0.0,
            passed: observed >= bound,
        }
    }

    pub fn holds(name: impl Into<String>, ok: bool, observed: f64) -> Self {
        Check { name: name.into(), relation: Relation::Holds, observed, target: 1.0, tolerance: 0.0, passed: ok }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionResult {
    pub id: u32,
    pub title: String,
    pub passed: bool,
    pub checks: Vec<Check>,
    pub error: Option<String>,
}

impl CriterionResult {
    fn from_checks(id: u32, title: &str, checks: Result<Vec<Check>>) -> Self {
        match checks {
            Ok(checks) => CriterionResult {
                id,
                title: title.into(),
                passed: !checks.is_empty() && checks.iter().all(|c| c.passed),
                checks,
                error: None,
            },
            Err(e) => CriterionResult {
                id,
                title: title.into(),
                passed: false,
                checks: Vec::new(),
                error: Some(e.to_string()),
            },
        }
    }

    /// One status line, naming the first failing check.
    pub fn line(&self) -> String {
        let status = if self.passed { "PASS" } else { "FAIL" };
        let ok = self.checks.iter().filter(|c| c.passed).count();
        let mut s = format!("criterion {:>2} {status} {} ({ok}/{} checks)", self.id, self.title, self.checks.len());
        if let Some(e) = &self.error {
            s.push_str(&format!(": error: {e}"));
        } else if let Some(c) = self.checks.iter().find(|c| !c.passed) {
            s.push_str(&format!(
                ": {} observed {:.6e} vs {:?} {:.6e} (tol {:.3e})",
                c.name, c.observed, c.relation, c.target, c.tolerance
            ));
        }
        s
    }
}

/// One flattened CSV row of a summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRow {
    pub criterion: u32,
    pub title: String,
    pub check: String,
    pub relation: Relation,
    pub observed: f64,
    pub target: f64,
    pub tolerance: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub seed: u64,
    pub profile: Profile,
    pub criteria: Vec<CriterionResult>,
    pub passed: usize,
    pub total: usize,
    pub all_passed: bool,
}

impl Summary {
    fn new(cfg: VerifyConfig, criteria: Vec<CriterionResult>) -> Self {
        let passed = criteria.iter().filter(|c| c.passed).count();
        Summary {
            seed: cfg.seed,
            profile: cfg.profile,
            total: criteria.len(),
            all_passed: passed == criteria.len(),
            passed,
            criteria,
        }
    }

    pub fn criterion(&self, id: u32) -> Option<&CriterionResult> {
        self.criteria.iter().find(|c| c.id == id)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("summary serializes");
        s.push('\n');
        s
    }

    pub fn rows(&self) -> Vec<CheckRow> {
        self.criteria
            .iter()
            .flat_map(|c| {
                c.checks.iter().map(move |k| CheckRow {
                    criterion: c.id,
                    title: c.title.clone(),
                    check: k.name.clone(),
                    relation: k.relation,
                    observed: k.observed,
                    target: k.target,
                    tolerance: k.tolerance,
                    passed: k.passed,
                })
            })
            .collect()
    }
}

pub const TITLES: [&str; 11] = [
    "special-functions",
    "green-asymptotics",
    "bound-constants",
    "covariance-consistency",
    "sampling-exactness",
    "liouville-moments",
    "tilt-drift",
    "tail-counts",
    "dimension-trend",
    "energy-scheme",
    "determinism",
];

fn max_rel_err(xs: &[f64], f: impl Fn(f64) -> Result<f64>, oracle: impl Fn(f64) -> f64) -> Result<f64> {
    let mut worst = 0.0_f64;
    for &x in xs {
        let o = oracle(x);
        worst = worst.max(((f(x)? - o) / o).abs());
    }
    Ok(worst)
}

pub fn special_functions() -> Result<Vec<Check>> {
    let xs = oracle::log_grid(1e-4, 30.0, 200);
    let mut checks = Vec::new();
    for (name, order) in [("I0", BesselOrder::Zero), ("I1", BesselOrder::One), ("I2", BesselOrder::Two)] {
        let e = max_rel_err(&xs, |x| bessel_i(order, x), |x| oracle::bessel_i(order.as_u32(), x))?;
        checks.push(Check::at_most(format!("{name} max relative error"), e, 1e-10));
    }
    for (name, order) in [("K0", BesselOrder::Zero), ("K1", BesselOrder::One)] {
        let e = max_rel_err(&xs, |x| bessel_k(order, x), |x| oracle::bessel_k(order.as_u32(), x))?;
        checks.push(Check::at_most(format!("{name} max relative error"), e, 1e-10));
    }
    let mut w = 0.0_f64;
    for &x in &xs {
        let v = bessel_i(BesselOrder::Zero, x)? * bessel_k(BesselOrder::One, x)?
            + bessel_i(BesselOrder::One, x)? * bessel_k(BesselOrder::Zero, x)?;
        w = w.max((x * v - 1.0).abs());
    }
    checks.push(Check::at_most("Wronskian x(I0K1 + I1K0) - 1", w, 1e-10));
    Ok(checks)
}

pub fn green_asymptotics() -> Result<Vec<Check>> {
    let two_pi2 = 2.0 * PI * PI;
    let mut ratios = Vec::new();
    for r in oracle::log_grid(1e-6, 1e-3, 50) {
        ratios.push(green_g(r)? * (-two_pi2 / r.ln()));
    }
    let lo = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let grid = oracle::log_grid(1e-6, 20.0, 500);
    let values: Vec<f64> = grid.iter().map(|&r| green_g(r)).collect::<Result<_>>()?;
    let violations = values.windows(2).filter(|w| !(w[1] < w[0])).count();
    let mut round_trip = 0.0_f64;
    for (&r, &g) in grid.iter().zip(&values) {
        round_trip = round_trip.max((green_g_inv(g)? - r).abs() / r);
    }
    Ok(vec![
        Check::at_least("min G(r)(-2pi^2/log r) on [1e-6, 1e-3]", lo, 0.98),
        Check::at_most("max G(r)(-2pi^2/log r) on [1e-6, 1e-3]", hi, 1.02),
        Check::holds("G strictly decreasing on 500 points", violations == 0, violations as f64),
        Check::at_most("max relative G^-1 round-trip error", round_trip, 1e-10),
    ])
}

pub fn bound_constants() -> Result<Vec<Check>> {
    let mut t_min = f64::INFINITY;
    for x in oracle::log_grid(1e-4, 10.0, 1000) {
        t_min = t_min.min(turan(x)? / (x * x));
    }
    let mut g_max = f64::NEG_INFINITY;
    for x in oracle::log_grid(1e-300, 1.0, 1000) {
        g_max = g_max.max(green_g(x)? + BOUND_G_C * x.ln());
    }
    Ok(vec![
        Check::at_least("min turan(x)/x^2 on [1e-4, 10]", t_min, TURAN_OVER_X2_LOWER),
        Check::at_most("max G(x) + C log x on (0, 1]", g_max, BOUND_G_C_PRIME),
    ])
}

/// Twelve mutually disjoint-or-nested spheres around three far-apart centers.
pub fn supported_configuration() -> Result<Vec<SphereSpec<f64>>> {
    let mut specs = Vec::new();
    for c in [[0.0, 0.0, 0.0, 0.0], [3.0, 0.0, 0.0, 0.0], [0.0, 3.0, 0.0, 0.0]] {
        for r in [1.0, 0.5, 0.2] {
            specs.push(SphereSpec::new(c, r)?);
        }
        specs.push(SphereSpec::new([c[0] + 0.35, c[1], c[2], c[3]], 0.1)?);
    }
    Ok(specs)
}

pub fn covariance_consistency() -> Result<Vec<Check>> {
    let d = 1e-8;
    let mut nested = 0.0_f64;
    for (outer, inner) in [(0.5, 0.2), (1.0, 0.1), (2.0, 1.5), (0.3, 0.29)] {
        let a = SphereSpec::<f64>::new([0.0; 4], outer)?;
        let b = SphereSpec::new([d, 0.0, 0.0, 0.0], inner)?;
        let c = SphereSpec::new([0.0; 4], inner)?;
        nested = nested.max((kernel(&a, &b)? - kernel(&a, &c)?).abs());
    }
    let specs = supported_configuration()?;
    let mut asym = 0.0_f64;
    let mut unsupported = 0;
    for a in &specs {
        for b in &specs {
            if classify(a, b) == GeometryCase::Unsupported {
                unsupported += 1;
                continue;
            }
            asym = asym.max((kernel(a, b)? - kernel(b, a)?).abs());
        }
    }
    let mut cov = assemble(&specs)?;
    let min_eig = min_eigenvalue_estimate(cov.size(), cov.entries());
    let factorized = cov.factorize();
    Ok(vec![
        Check::at_most("max |nested - concentric| at d = 1e-8", nested, 1e-10),
        Check::holds("12-spec configuration fully supported", unsupported == 0, unsupported as f64),
        Check::at_most("max |k(a,b) - k(b,a)|", asym, 0.0),
        Check::holds("Cholesky succeeds", factorized.is_ok(), min_eig),
        Check::at_most("jitter applied", cov.jitter_applied(), 1e-10),
    ])
}

pub fn sampling_exactness(cfg: VerifyConfig) -> Result<Vec<Check>> {
    let sizes = Sizes::of(cfg.profile);
    let rng = RngStream::new(cfg.seed, 5);
    let (x, y) = ([0.0; 4], [3.0, 0.0, 0.0, 0.0]);
    let levels = [1.0, 0.5];
    let spec = FieldGridSpec::new(vec![x, y], levels.to_vec(), vec![1.0, 1.0])?;
    let sampler = HierarchicalSampler::new(spec)?;
    let draws: Vec<[f64; 4]> = (0..sizes.joint_samples)
        .into_par_iter()
        .map(|i| -> Result<[f64; 4]> {
            let g = sampler.sample(rng.derive(&[0, i as u64]))?;
            Ok([g.value(0, 0), g.value(0, 1), g.value(1, 0), g.value(1, 1)])
        })
        .collect::<Result<_>>()?;
    let specs = [
        SphereSpec::new(x, levels[0])?,
        SphereSpec::new(x, levels[1])?,
        SphereSpec::new(y, levels[0])?,
        SphereSpec::new(y, levels[1])?,
    ];
    let exact = assemble(&specs)?;
    let cols: Vec<Vec<f64>> = (0..4).map(|j| draws.iter().map(|d| d[j]).collect()).collect();
    let names = ["x@1", "x@0.5", "y@1", "y@0.5"];
    let mut checks = Vec::new();
    for i in 0..4 {
        for j in i..4 {
            let e = stats::covariance(&cols[i], &cols[j]);
            checks.push(Check::close(
                format!("cov[{}, {}]", names[i], names[j]),
                e.mean,
                exact.entry(i, j),
                4.0 * e.se,
            ));
        }
    }
    let times = [0.5, 1.2, 2.0];
    let paths: Vec<(f64, f64)> = (0..sizes.bm_paths)
        .into_par_iter()
        .map(|i| -> Result<(f64, f64)> {
            let p = radial_bm(x, &times, rng.derive(&[1, i as u64]))?;
            Ok((p.values[2] - p.values[0], p.values[1] - p.values[0]))
        })
        .collect::<Result<_>>()?;
    let (dt, ds): (Vec<f64>, Vec<f64>) = paths.into_iter().unzip();
    let e = stats::covariance(&dt, &ds);
    checks.push(Check::close("Cov(B(2.0) - B(0.5), B(1.2) - B(0.5))", e.mean, 0.7, 3.0 * e.se));
    Ok(checks)
}

pub fn liouville_moments(cfg: VerifyConfig) -> Result<Vec<Check>> {
    let sizes = Sizes::of(cfg.profile);
    let params = LiouvilleParams::new(PI, 1.0 / 16.0, 1)?;
    let spec = liouville_grid(6, &params)?;
    let r = moment_check(&spec, 0, &params, sizes.moment_reps, RngStream::new(cfg.seed, 6))?;
    Ok(vec![
        Check::close("E[total mass] vs volume", r.first.mean, r.volume, 3.0 * r.first.se),
        Check::close("E[total mass^2] vs exact double sum", r.second.mean, r.second_exact, 3.0 * r.second.se),
    ])
}

pub fn tilt_drift(cfg: VerifyConfig) -> Result<Vec<Check>> {
    let sizes = Sizes::of(cfg.profile);
    let params = LiouvilleParams::new(PI, 1.0 / 16.0, 1)?;
    let spec = SphereSpec::new([0.0; 4], 1.0)?;
    let mut checks = Vec::new();
    for (i, t) in [1.0, 2.0].into_iter().enumerate() {
        let rng = RngStream::new(cfg.seed, 7).derive(&[i as u64]);
        let r = cm_tilt_check(&spec, t, &params, TiltOptions::default(), sizes.tilt_draws, rng)?;
        checks.push(Check::close(format!("tilted drift at t = {t}"), r.estimate.mean, r.target, 3.0 * r.estimate.se));
    }
    Ok(checks)
}

fn upper_checks(cfg: VerifyConfig) -> Result<(Vec<Check>, Vec<Check>)> {
    let sizes = Sizes::of(cfg.profile);
    let exp = UpperExperiment::new(UpperSchemeParams::default(), sizes.lattice)?;
    let a_values = [0.25, 0.5, 1.0];
    let reports = exp.run(&a_values, sizes.upper_reps, RngStream::new(cfg.seed, 8))?;
    let mut tail = Vec::new();
    for level in reports[1].levels.iter().filter(|l| (2..=4).contains(&l.n)) {
        let c = level.centers as f64;
        tail.push(Check::close(
            format!("mean |A_{}|/centers vs exact tail (a = 0.5)", level.n),
            level.count.mean / c,
            level.tail_probability,
            3.0 * level.count.se / c,
        ));
    }
    let mut dim = Vec::new();
    let estimates: Vec<Option<f64>> = reports.iter().map(|r| r.dimension_estimate).collect();
    for (r, &a) in reports.iter().zip(&a_values) {
        let e = r.dimension_estimate.unwrap_or(f64::NAN);
        dim.push(Check::close(format!("dimension estimate at a = {a}"), e, 4.0 - a, 0.6));
    }
    let monotone = estimates.windows(2).all(|w| matches!((w[0], w[1]), (Some(p), Some(q)) if p > q));
    dim.push(Check::holds("estimates decrease in a", monotone, if monotone { 1.0 } else { 0.0 }));
    let empty = empty_above_four_check(&exp, 4.5, sizes.empty_reps, RngStream::new(cfg.seed, 9))?;
    let zero_reps = empty.counts.iter().filter(|c| c.iter().all(|&k| k == 0)).count();
    dim.push(Check::close(
        format!("replications with no 4.5-thick centers (of {})", sizes.empty_reps),
        zero_reps as f64,
        sizes.empty_reps as f64,
        0.0,
    ));
    Ok((tail, dim))
}

pub fn energy(cfg: VerifyConfig) -> Result<Vec<Check>> {
    let sizes = Sizes::of(cfg.profile);
    let params = LowerSchemeParams::new(0.25, 4)?;
    let opts = EnergyOptions { replications: sizes.energy_reps, pilot_paths: sizes.pilot_paths, ..Default::default() };
    let mut checks = Vec::new();
    let mut energies = Vec::new();
    for n in 1..=3 {
        let r = energy_scheme(&params, n, opts, RngStream::new(cfg.seed, 10).derive(&[n as u64]))?;
        checks.push(Check::close(format!("E[mu_{n}(J)]"), r.mass.mean, 1.0, 3.0 * r.mass_se_combined));
        energies.push(r.energy.mean);
    }
    let finite = energies.iter().all(|e| e.is_finite() && *e > 0.0);
    checks.push(Check::holds("energies finite", finite, energies.iter().copied().fold(0.0, f64::max)));
    let lo = energies.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = energies.iter().copied().fold(0.0, f64::max);
    checks.push(Check::at_most("max/min energy over n = 1..3", hi / lo, ENERGY_STABILITY_RATIO));
    for l in 1..=3 {
        let rng = RngStream::new(cfg.seed, 11).derive(&[l as u64]);
        let r = correlation_inequality_check(l, 2, &params, CorrelationOptions::default(), sizes.corr_draws, rng)?;
        checks.push(Check::holds(
            format!("correlation inequality at l = {l} (joint / C_l px py)"),
            r.holds,
            r.ratio / r.corr_constant,
        ));
    }
    Ok(checks)
}

fn run_numerical(cfg: VerifyConfig) -> Vec<CriterionResult> {
    let mut out = vec![
        CriterionResult::from_checks(1, TITLES[0], special_functions()),
        CriterionResult::from_checks(2, TITLES[1], green_asymptotics()),
        CriterionResult::from_checks(3, TITLES[2], bound_constants()),
        CriterionResult::from_checks(4, TITLES[3], covariance_consistency()),
        CriterionResult::from_checks(5, TITLES[4], sampling_exactness(cfg)),
        CriterionResult::from_checks(6, TITLES[5], liouville_moments(cfg)),
        CriterionResult::from_checks(7, TITLES[6], tilt_drift(cfg)),
    ];
    match upper_checks(cfg) {
        Ok((tail, dim)) => {
            out.push(CriterionResult::from_checks(8, TITLES[7], Ok(tail)));
            out.push(CriterionResult::from_checks(9, TITLES[8], Ok(dim)));
        }
        Err(e) => {
            out.push(CriterionResult::from_checks(8, TITLES[7], Err(e.clone())));
            out.push(CriterionResult::from_checks(9, TITLES[8], Err(e)));
        }
    }
    out.push(CriterionResult::from_checks(10, TITLES[9], energy(cfg)));
    out
}

/// Criteria 1–10, then a second identical pass compared byte for byte.
pub fn run_all(cfg: VerifyConfig) -> Summary {
    let first = run_numerical(cfg);
    let second = run_numerical(cfg);
    let (a, b) = (Summary::new(cfg, first.clone()).to_json(), Summary::new(cfg, second).to_json());
    let differing =
        a.lines().zip(b.lines()).filter(|(x, y)| x != y).count() + a.lines().count().abs_diff(b.lines().count());
    let mut criteria = first;
    criteria.push(CriterionResult::from_checks(
        11,
        TITLES[10],
        Ok(vec![Check::holds("second run JSON byte-identical", a == b, differing as f64)]),
    ));
    Summary::new(cfg, criteria)
}
