use gff4::covariance::{assemble, SphereSpec};
use gff4::sampler::{hierarchical_sample, radial_bm, sample_joint, FieldGridSpec, HierarchicalSampler};
use gff4::{stats, Error, RngStream};
use statrs::distribution::{ContinuousCDF, Normal};

fn ks_statistic(mut xs: Vec<f64>, cdf: impl Fn(f64) -> f64) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max((i as f64 + 1.0) / n - f)
        })
        .fold(0.0, f64::max)
}

#[test]
fn radial_endpoint_is_gaussian() {
    let n = 20_000;
    let xs: Vec<f64> =
        (0..n).map(|i| radial_bm([0.0; 4], &[0.3, 1.0], RngStream::new(11, i)).unwrap().values[1]).collect();
    let normal = Normal::new(0.0, 1.0).unwrap();
    // 1% critical value
    assert!(ks_statistic(xs, |x| normal.cdf(x)) < 1.63 / (n as f64).sqrt());
}

#[test]
fn coarse_values_are_gaussian_with_green_variance() {
    let spec = FieldGridSpec::new(vec![[0.0; 4]], vec![0.25], vec![1.0]).unwrap();
    let sampler = HierarchicalSampler::new(spec).unwrap();
    let sd = gff4::covariance::green_g(0.25_f64).unwrap().sqrt();
    let xs: Vec<f64> = (0..10_000).map(|i| sampler.sample(RngStream::new(12, i)).unwrap().value(0, 0) / sd).collect();
    let normal = Normal::new(0.0, 1.0).unwrap();
    assert!(ks_statistic(xs, |x| normal.cdf(x)) < 1.63 / 100.0);
}

#[test]
fn joint_draws_reproduce_covariance() {
    let specs = [
        SphereSpec::new([0.0; 4], 0.5).unwrap(),
        SphereSpec::new([0.1, 0.0, 0.0, 0.0], 0.2).unwrap(),
        SphereSpec::new([2.0, 0.0, 0.0, 0.0], 0.4).unwrap(),
    ];
    let cov = assemble(&specs).unwrap();
    let draws = sample_joint(&cov, 200_000, RngStream::new(13, 0)).unwrap();
    let cols: Vec<Vec<f64>> = (0..3).map(|j| (0..draws.rows).map(|i| draws.get(i, j)).collect()).collect();
    for i in 0..3 {
        for j in i..3 {
            let e = stats::covariance(&cols[i], &cols[j]);
            assert!(e.within(cov.entry(i, j), 4.0), "({i}, {j}): {e:?} vs {}", cov.entry(i, j));
        }
    }
}

#[test]
fn unfactorized_matrix_is_a_state_error() {
    let cov = gff4::CovMatrix64::from_dense(1, vec![1.0]).unwrap();
    assert!(matches!(sample_joint(&cov, 1, RngStream::new(0, 0)), Err(Error::State { .. })));
}

#[test]
fn streams_replay_and_separate() {
    let spec = FieldGridSpec::<f64>::lattice(2, vec![0.2, 0.05, 0.01]).unwrap();
    let a = hierarchical_sample(&spec, RngStream::new(5, 1)).unwrap();
    let b = hierarchical_sample(&spec, RngStream::new(5, 1)).unwrap();
    let c = hierarchical_sample(&spec, RngStream::new(5, 2)).unwrap();
    assert_eq!(a.values, b.values);
    assert_ne!(a.values, c.values);
}

#[test]
fn crowded_centers_are_rejected() {
    let spec = FieldGridSpec::<f64>::lattice(4, vec![0.2]).unwrap();
    assert!(matches!(HierarchicalSampler::new(spec), Err(Error::Precondition { .. })));
}

#[test]
fn single_precision_sampling() {
    let spec = FieldGridSpec::<f32>::lattice(2, vec![0.2, 0.1]).unwrap();
    let g = hierarchical_sample(&spec, RngStream::new(1, 1)).unwrap();
    assert_eq!(g.values.len(), 32);
    assert!(g.values.iter().all(|v| v.is_finite()));
}
