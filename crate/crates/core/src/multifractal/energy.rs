//! The measures `μ_n = Σ 1{Y_ni = 1} λ(· ∩ S(x_ni, s_n)) / P(Eⁿ)` on the
//! `s_n`-partition of `[0,1]⁴` and their `α`-energies.

use rayon::prelude::*;
use serde::Serialize;

use super::lower::{event_grid, perfect_probability, simulate_perfect, GridOptions, LowerSchemeParams};
use crate::covariance::distance;
use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::sampler::FieldGridSpec;
use crate::stats::{self, Estimate};

/// `c_α = ∬_{[0,1]⁴×[0,1]⁴} |x−y|^{−α} dx dy` for `α < 4`.
///
/// The difference `z = x − y` has density `∏(1 − |zᵢ|)` on `[−1,1]⁴`; in
/// polar form over the positive orthant of `S³` the radial integral is
/// exact, leaving a midpoint rule in hyperspherical angles with
/// `resolution` nodes per angle.
pub fn cube_self_energy(alpha: f64, resolution: usize) -> Result<f64> {
    if !(alpha < 4.0) || !alpha.is_finite() {
        return Err(Error::domain("multifractal::cube_self_energy", format!("alpha = {alpha} must be < 4")));
    }
    let h = std::f64::consts::FRAC_PI_2 / resolution as f64;
    let p = 4.0 - alpha;
    let rows: Vec<f64> = (0..resolution)
        .into_par_iter()
        .map(|i| {
            let th1 = (i as f64 + 0.5) * h;
            let (s1, c1) = th1.sin_cos();
            let mut acc = 0.0;
            for j in 0..resolution {
                let th2 = (j as f64 + 0.5) * h;
                let (s2, c2) = th2.sin_cos();
                let jac = s1 * s1 * s2;
                for k in 0..resolution {
                    let ph = (k as f64 + 0.5) * h;
                    let (s3, c3) = ph.sin_cos();
                    let w = [c1, s1 * c2, s1 * s2 * c3, s1 * s2 * s3];
                    let rho = 1.0 / w.iter().copied().fold(0.0, f64::max);
                    // elementary symmetric polynomials of w
                    let mut e = [1.0, 0.0, 0.0, 0.0, 0.0];
                    for &wi in &w {
                        for q in (1..=4).rev() {
                            e[q] += e[q - 1] * wi;
                        }
                    }
                    let mut radial = 0.0;
                    for (q, eq) in e.iter().enumerate() {
                        let pw = p + q as f64;
                        let sign = if q % 2 == 0 { 1.0 } else { -1.0 };
                        radial += sign * eq * rho.powf(pw) / pw;
                    }
                    acc += jac * radial;
                }
            }
            acc
        })
        .collect();
    Ok(16.0 * rows.iter().sum::<f64>() * h * h * h)
}

/// Cross and self parts of `I_α` for cells of side `side` carrying masses
/// `weights` (uniformly spread): cross `= Σ_{i≠j} wᵢwⱼ/|xᵢ−xⱼ|^α`, self
/// `= Σ wᵢ² c_α side^{−α}`.
pub fn energy_of_weights(centers: &[[f64; 4]], weights: &[f64], side: f64, alpha: f64, c_alpha: f64) -> (f64, f64) {
    let occupied: Vec<usize> = (0..weights.len()).filter(|&i| weights[i] != 0.0).collect();
    let mut cross = 0.0;
    for (a, &i) in occupied.iter().enumerate() {
        for &j in &occupied[a + 1..] {
            cross += 2.0 * weights[i] * weights[j] / distance(&centers[i], &centers[j]).powf(alpha);
        }
    }
    let self_part = occupied.iter().map(|&i| weights[i] * weights[i]).sum::<f64>() * c_alpha * side.powf(-alpha);
    (cross, self_part)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MuNSample {
    pub occupied: usize,
    pub mass: f64,
    pub energy: f64,
    pub cross_energy: f64,
    pub self_energy: f64,
}

/// One draw of `μ_n`: each cell of the `s_n`-partition is occupied when an
/// independent radial path at its center is `n`-perfect. `p_hat` is the
/// estimated `P(Eⁿ)`.
pub fn mu_n_energy(
    params: &LowerSchemeParams,
    n: usize,
    alpha: f64,
    p_hat: f64,
    c_alpha: f64,
    opts: GridOptions,
    rng: RngStream,
) -> Result<MuNSample> {
    const OP: &str = "multifractal::mu_n_energy";
    if !(p_hat > 0.0) {
        return Err(Error::Degenerate { op: OP, msg: "estimated P(E^n) is zero".into() });
    }
    if !(alpha > 0.0 && alpha <= 4.0) {
        return Err(Error::domain(OP, format!("alpha = {alpha} must lie in (0, 4]")));
    }
    let grid = event_grid(params, n, opts)?;
    let side = params.s_m(n);
    let k = side.recip().round() as usize;
    let cells = FieldGridSpec::<f64>::lattice(k, vec![side])?;
    let occupancy: Vec<bool> = (0..cells.centers.len())
        .into_par_iter()
        .map(|i| simulate_perfect(params, &grid, &mut rng.derive(&[i as u64]).generator()))
        .collect();
    Ok(mu_n_from_occupancy(&cells.centers, side, &occupancy, p_hat, alpha, c_alpha))
}

/// `μ_n` from given occupancy flags: weight `side⁴/p_hat` per occupied cell.
pub fn mu_n_from_occupancy(
    centers: &[[f64; 4]],
    side: f64,
    occupancy: &[bool],
    p_hat: f64,
    alpha: f64,
    c_alpha: f64,
) -> MuNSample {
    let vol = side.powi(4);
    let weights: Vec<f64> = occupancy.iter().map(|&y| if y { vol / p_hat } else { 0.0 }).collect();
    let (cross_energy, self_energy) = energy_of_weights(centers, &weights, side, alpha, c_alpha);
    MuNSample {
        occupied: occupancy.iter().filter(|&&y| y).count(),
        mass: weights.iter().sum(),
        energy: cross_energy + self_energy,
        cross_energy,
        self_energy,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergyOptions {
    pub alpha: f64,
    pub replications: usize,
    pub pilot_paths: usize,
    pub grid: GridOptions,
    pub self_energy_resolution: usize,
}

impl Default for EnergyOptions {
    fn default() -> Self {
        Self {
            alpha: 3.5,
            replications: 2000,
            pilot_paths: 200_000,
            grid: GridOptions::default(),
            self_energy_resolution: 120,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnergyReport {
    pub n: usize,
    pub a: f64,
    pub alpha: f64,
    pub cells: usize,
    pub p_hat: Estimate,
    pub mass: Estimate,
    /// Mass SE combined with the relative error of `P̂`.
    pub mass_se_combined: f64,
    pub mass_second_moment: Estimate,
    pub energy: Estimate,
    pub c_alpha: f64,
}

impl EnergyReport {
    pub fn mass_consistent(&self, k: f64) -> bool {
        (self.mass.mean - 1.0).abs() <= k * self.mass_se_combined
    }
}

/// Pilot estimate of `P(Eⁿ)` followed by `replications` independent draws
/// of `μ_n`.
pub fn energy_scheme(
    params: &LowerSchemeParams,
    n: usize,
    opts: EnergyOptions,
    rng: RngStream,
) -> Result<EnergyReport> {
    let p_hat = perfect_probability(params, n, opts.grid, opts.pilot_paths, rng.derive(&[0]))?;
    if p_hat.mean == 0.0 {
        return Err(Error::Degenerate {
            op: "multifractal::energy_scheme",
            msg: format!("no n-perfect path among {} pilot paths", opts.pilot_paths),
        });
    }
    let c_alpha = cube_self_energy(opts.alpha, opts.self_energy_resolution)?;
    let draws: Vec<MuNSample> = (0..opts.replications)
        .map(|r| mu_n_energy(params, n, opts.alpha, p_hat.mean, c_alpha, opts.grid, rng.derive(&[1, r as u64])))
        .collect::<Result<_>>()?;
    let masses: Vec<f64> = draws.iter().map(|d| d.mass).collect();
    let squares: Vec<f64> = masses.iter().map(|m| m * m).collect();
    let energies: Vec<f64> = draws.iter().map(|d| d.energy).collect();
    let mass = stats::estimate(&masses);
    let rel = p_hat.se / p_hat.mean;
    Ok(EnergyReport {
        n,
        a: params.a,
        alpha: opts.alpha,
        cells: (params.s_m(n).recip().round() as usize).pow(4),
        p_hat,
        mass_se_combined: (mass.se * mass.se + (mass.mean * rel).powi(2)).sqrt(),
        mass,
        mass_second_moment: stats::estimate(&squares),
        energy: stats::estimate(&energies),
        c_alpha,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn self_energy_oracles() {
        // α = 0: total mass of the difference density; α = −2: E|x−y|² = 4/6
        assert!((cube_self_energy(0.0, 60).unwrap() - 1.0).abs() < 1e-3);
        assert!((cube_self_energy(-2.0, 60).unwrap() - 2.0 / 3.0).abs() < 1e-3);
        assert!(cube_self_energy(4.0, 10).is_err());
    }

    #[test]
    fn two_cell_cross_term() {
        let centers = [[0.0; 4], [0.5, 0.0, 0.0, 0.0]];
        let w = 0.3;
        let (cross, _) = energy_of_weights(&centers, &[w, w], 0.1, 3.5, 1.0);
        assert!((cross - 2.0 * w * w / 0.5_f64.powf(3.5)).abs() < 1e-12);
    }

    #[test]
    fn full_occupancy_has_unit_mass() {
        let cells = FieldGridSpec::<f64>::lattice(3, vec![1.0 / 3.0]).unwrap();
        let all = vec![true; cells.centers.len()];
        let m = mu_n_from_occupancy(&cells.centers, 1.0 / 3.0, &all, 1.0, 3.5, 1.0);
        assert!((m.mass - 1.0).abs() < 1e-12);
        assert_eq!(m.occupied, 81);
    }

    #[test]
    fn zero_probability_is_degenerate() {
        let p = LowerSchemeParams::new(0.25, 2).unwrap();
        let r = mu_n_energy(&p, 1, 3.5, 0.0, 1.0, GridOptions::default(), RngStream::new(0, 0));
        assert!(matches!(r, Err(Error::Degenerate { .. })));
    }
}
