use gff4::covariance::{self, classify, green_g, kernel, KcSample, SphereSpec};
use gff4::liouville::{self, LiouvilleParams, TiltOptions};
use gff4::multifractal::{self, CorrelationOptions, EnergyOptions, LowerSchemeParams, UpperExperiment};
use gff4::sampler::{FieldGridSpec, HierarchicalSampler};
use gff4::specfun::{self, BesselOrder};
use gff4::verify::{self, VerifyConfig};
use gff4::RngStream;
use serde::Serialize;

use crate::config::{CommandKind, ExperimentConfig, LiouvilleMode};
use crate::error::CliError;
use crate::output::Outputs;

pub fn run(cmd: CommandKind, cfg: &ExperimentConfig) -> Result<Outputs, CliError> {
    let mut out = Outputs::default();
    match cmd {
        CommandKind::SpecfunTable => specfun_table(cfg, &mut out)?,
        CommandKind::CovTable => cov_table(cfg, &mut out)?,
        CommandKind::KcCheck => kc_check(cfg, &mut out)?,
        CommandKind::Sample => sample(cfg, &mut out)?,
        CommandKind::Liouville => liouville(cfg, &mut out)?,
        CommandKind::TiltCheck => tilt_check(cfg, &mut out)?,
        CommandKind::Dimension => dimension(cfg, &mut out)?,
        CommandKind::Energy => energy(cfg, &mut out)?,
        CommandKind::VerifyAll => verify_all(cfg, &mut out)?,
    }
    Ok(out)
}

#[derive(Serialize)]
struct SpecfunRow {
    x: f64,
    i0: f64,
    i1: f64,
    i2: f64,
    k0: f64,
    k1: f64,
    turan: f64,
    f1: f64,
    f2: f64,
    green: f64,
}

fn specfun_table(cfg: &ExperimentConfig, out: &mut Outputs) -> Result<(), CliError> {
    let s = &cfg.specfun;
    let rows = verify::oracle::log_grid(s.x_min, s.x_max, s.points)
        .into_iter()
        .map(|x| -> Result<SpecfunRow, CliError> {
            let (f1, f2) = specfun::f_coeffs(x)?;
            Ok(SpecfunRow {
                x,
                i0: specfun::bessel_i(BesselOrder::Zero, x)?,
                i1: specfun::bessel_i(BesselOrder::One, x)?,
                i2: specfun::bessel_i(BesselOrder::Two, x)?,
                k0: specfun::bessel_k(BesselOrder::Zero, x)?,
                k1: specfun::bessel_k(BesselOrder::One, x)?,
                turan: specfun::turan(x)?,
                f1,
                f2,
                green: green_g(x)?,
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    out.csv("specfun.csv", &rows)
}

#[derive(Serialize)]
struct CovRow {
    i: usize,
    j: usize,
    case: &'static str,
    kernel: f64,
}

#[derive(Serialize)]
struct CovSummary {
    size: usize,
    specs: Vec<SphereSpec<f64>>,
    min_eigenvalue_estimate: f64,
    jitter_applied: f64,
}

fn cov_table(cfg: &ExperimentConfig, out: &mut Outputs) -> Result<(), CliError> {
    let specs = if cfg.cov.spheres.is_empty() {
        verify::supported_configuration()?
    } else {
        cfg.cov.spheres.iter().map(|s| SphereSpec::new(s.center, s.radius)).collect::<Result<_, _>>()?
    };
    let mut rows = Vec::new();
    for (i, a) in specs.iter().enumerate() {
        for (j, b) in specs.iter().enumerate() {
            rows.push(CovRow { i, j, case: classify(a, b).name(), kernel: kernel(a, b)? });
        }
    }
    let mut cov = covariance::assemble(&specs)?;
    let min_eig = gff4::linalg::min_eigenvalue_estimate(cov.size(), cov.entries());
    cov.factorize()?;
    out.csv("cov.csv", &rows)?;
    out.json(
        "cov.json",
        &CovSummary { size: cov.size(), specs, min_eigenvalue_estimate: min_eig, jitter_applied: cov.jitter_applied() },
    )
}

fn kc_check(cfg: &ExperimentConfig, out: &mut Outputs) -> Result<(), CliError> {
    let k = &cfg.kc;
    let mut g = RngStream::new(cfg.seed, 0).generator();
    let mut samples = Vec::with_capacity(k.samples);
    for i in 0..k.samples {
        let x = [g.uniform(), g.uniform(), g.uniform(), g.uniform()];
        let mut dir = [0.0; 4];
        g.fill_normal(&mut dir);
        let norm = dir.iter().map(|d| d * d).sum::<f64>().sqrt();
        let offset = if i % 3 == 0 { 0.0 } else { g.uniform() * k.max_offset };
        let y = std::array::from_fn(|c| x[c] + offset * dir[c] / norm);
        let eps1 = (1.0 - g.uniform()) * k.max_radius;
        let eps2 = (1.0 - g.uniform()) * k.max_radius;
        samples.push(KcSample { x, y, eps1, eps2 });
    }
    let report = covariance::kc_difference_bound(&samples)?;
    out.json("kc.json", &report)
}

#[derive(Serialize)]
struct FieldRow {
    rep: usize,
    center: usize,
    x1: f64,
    x2: f64,
    x3: f64,
    x4: f64,
    level: usize,
    radius: f64,
    value: f64,
}

fn sample(cfg: &ExperimentConfig, out: &mut Outputs) -> Result<(), CliError> {
    let s = &cfg.sample;
    let spec = FieldGridSpec::lattice(s.k, s.levels.clone())?;
    let sampler = HierarchicalSampler::new(spec)?;
    let rng = RngStream::new(cfg.seed, 0);
    let mut rows = Vec::new();
    for rep in 0..cfg.replications {
        let g = sampler.sample(rng.derive(&[rep as u64]))?;
        for (c, x) in g.centers.iter().enumerate() {
            for (l, &radius) in g.levels.iter().enumerate() {
                rows.push(FieldRow {
                    rep,
                    center: c,
                    x1: x[0],
                    x2: x[1],
                    x3: x[2],
                    x4: x[3],
                    level: l,
                    radius,
                    value: g.value(c, l),
                });
            }
        }
    }
    out.csv("field.csv", &rows)
}

#[derive(Serialize)]
struct DifferenceRow {
    from_level: usize,
    mean_sq_diff: f64,
    se: f64,
    exact_sq_diff: f64,
    l2_diff: f64,
}

fn liouville(cfg: &ExperimentConfig, out: &mut Outputs) -> Result<(), CliError> {
    let l = &cfg.liouville;
    let params = LiouvilleParams::new(l.gamma, l.eps0, l.n_levels)?;
    let spec = liouville::liouville_grid(l.k, &params)?;
    let rng = RngStream::new(cfg.seed, 0);
    match l.mode {
        LiouvilleMode::Moments => {
            let reports = (0..l.n_levels)
                .map(|level| {
                    liouville::moment_check(&spec, level, &params, cfg.replications, rng.derive(&[level as u64]))
                })
                .collect::<Result<Vec<_>, _>>()?;
            out.json("moments.json", &reports)
        }
        LiouvilleMode::Convergence => {
            let r = liouville::convergence_diagnostic(&spec, &params, l.test_function, cfg.replications, rng)?;
            let rows: Vec<DifferenceRow> = r
                .differences
                .iter()
                .map(|d| DifferenceRow {
                    from_level: d.from_level,
                    mean_sq_diff: d.mean_sq_diff.mean,
                    se: d.mean_sq_diff.se,
                    exact_sq_diff: d.exact_sq_diff,
                    l2_diff: d.l2_diff,
                })
                .collect();
            out.csv("convergence.csv", &rows)?;
            out.json("convergence.json", &r)
        }
    }
}

#[derive(Serialize)]
struct TiltRow {
    probe_time: f64,
    target: f64,
    estimate: f64,
    se: f64,
    z: f64,
    passed: bool,
}

fn tilt_check(cfg: &ExperimentConfig, out: &mut Outputs) -> Result<(), CliError> {
    let t = &cfg.tilt;
    let params = LiouvilleParams::new(t.gamma, cfg.liouville.eps0, 1)?;
    let spec = SphereSpec::new([0.5; 4], t.radius)?;
    let opts = TiltOptions { eps: (t.eps > 0.0).then_some(t.eps), lambda: t.lambda };
    let rng = RngStream::new(cfg.seed, 0);
    let reports = t
        .probe_times
        .iter()
        .enumerate()
        .map(|(i, &time)| liouville::cm_tilt_check(&spec, time, &params, opts, t.draws, rng.derive(&[i as u64])))
        .collect::<Result<Vec<_>, _>>()?;
    let rows: Vec<TiltRow> = reports
        .iter()
        .map(|r| TiltRow {
            probe_time: r.probe_time,
            target: r.target,
            estimate: r.estimate.mean,
            se: r.estimate.se,
            z: r.z,
            passed: r.passed,
        })
        .collect();
    out.csv("tilt.csv", &rows)?;
    out.json("tilt.json", &reports)
}

#[derive(Serialize)]
struct LevelRow {
    a: f64,
    n: usize,
    radius: f64,
    delta: f64,
    threshold: f64,
    centers: usize,
    mean_count: f64,
    se: f64,
    tail_probability: f64,
    expected_count: f64,
    scaled_count: f64,
}

fn dimension(cfg: &ExperimentConfig, out: &mut Outputs) -> Result<(), CliError> {
    let params = cfg.upper_params()?;
    let exp = UpperExperiment::new(params, cfg.upper.k)?;
    let mut a_values = vec![cfg.upper.a];
    a_values.extend(&cfg.upper.extra_a);
    let mut reports = exp.run(&a_values, cfg.replications, RngStream::new(cfg.seed, 0))?;
    let rows: Vec<LevelRow> = reports
        .iter()
        .flat_map(|r| {
            r.levels.iter().map(move |l| LevelRow {
                a: r.a,
                n: l.n,
                radius: l.radius,
                delta: l.delta,
                threshold: l.threshold,
                centers: l.centers,
                mean_count: l.count.mean,
                se: l.count.se,
                tail_probability: l.tail_probability,
                expected_count: l.expected_count,
                scaled_count: l.scaled_count,
            })
        })
        .collect();
    out.csv("dimension.csv", &rows)?;
    let primary = reports.remove(0);
    out.json("dimension.json", &primary)?;
    if !reports.is_empty() {
        out.json("dimension-extra.json", &reports)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct EnergyRow {
    n: usize,
    cells: usize,
    p_hat: f64,
    p_hat_se: f64,
    mass: f64,
    mass_se_combined: f64,
    mass_second_moment: f64,
    energy: f64,
    energy_se: f64,
}

#[derive(Serialize)]
struct EnergyOutput {
    energy: Vec<multifractal::EnergyReport>,
    correlation: Vec<multifractal::CorrelationReport>,
}

fn energy(cfg: &ExperimentConfig, out: &mut Outputs) -> Result<(), CliError> {
    let l = &cfg.lower;
    let params = LowerSchemeParams::new(l.a, l.n_max)?;
    let opts = EnergyOptions {
        alpha: l.alpha,
        replications: cfg.replications,
        pilot_paths: l.pilot_paths,
        ..Default::default()
    };
    let rng = RngStream::new(cfg.seed, 0);
    let energy =
        l.n.iter()
            .map(|&n| multifractal::energy_scheme(&params, n, opts, rng.derive(&[n as u64])))
            .collect::<Result<Vec<_>, _>>()?;
    let corr_rng = RngStream::new(cfg.seed, 1);
    let correlation = l
        .correlation_l
        .iter()
        .map(|&dl| {
            multifractal::correlation_inequality_check(
                dl,
                l.correlation_n,
                &params,
                CorrelationOptions::default(),
                l.correlation_draws,
                corr_rng.derive(&[dl as u64]),
            )
        })
        .collect::<Result<Vec<_>, _>>()?;
    let rows: Vec<EnergyRow> = energy
        .iter()
        .map(|r| EnergyRow {
            n: r.n,
            cells: r.cells,
            p_hat: r.p_hat.mean,
            p_hat_se: r.p_hat.se,
            mass: r.mass.mean,
            mass_se_combined: r.mass_se_combined,
            mass_second_moment: r.mass_second_moment.mean,
            energy: r.energy.mean,
            energy_se: r.energy.se,
        })
        .collect();
    out.csv("energy.csv", &rows)?;
    out.json("energy.json", &EnergyOutput { energy, correlation })
}

fn verify_all(cfg: &ExperimentConfig, out: &mut Outputs) -> Result<(), CliError> {
    let summary = verify::run_all(VerifyConfig { seed: cfg.seed, profile: cfg.verify.profile });
    for c in &summary.criteria {
        println!("{}", c.line());
    }
    println!("{}/{} criteria passed", summary.passed, summary.total);
    out.csv("verify.csv", &summary.rows())?;
    out.raw("verify.json", summary.to_json().into_bytes());
    Ok(())
}
