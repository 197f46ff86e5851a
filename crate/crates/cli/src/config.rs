//! Experiment configuration: one TOML document with a section per command.

use std::f64::consts::PI;
use std::path::PathBuf;

use gff4::liouville::TestFunction;
use gff4::verify::Profile;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const DEFAULT_OUTPUT_DIR: &str = "gff4-out";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub output_dir: PathBuf,
    pub replications: usize,
    pub specfun: SpecfunSection,
    pub cov: CovSection,
    pub kc: KcSection,
    pub sample: SampleSection,
    pub liouville: LiouvilleSection,
    pub tilt: TiltSection,
    pub upper: UpperSection,
    pub lower: LowerSection,
    pub verify: VerifySection,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: gff4::verify::SHIPPED_SEED,
            output_dir: PathBuf::from(DEFAULT_OUTPUT_DIR),
            replications: 200,
            specfun: SpecfunSection::default(),
            cov: CovSection::default(),
            kc: KcSection::default(),
            sample: SampleSection::default(),
            liouville: LiouvilleSection::default(),
            tilt: TiltSection::default(),
            upper: UpperSection::default(),
            lower: LowerSection::default(),
            verify: VerifySection::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpecfunSection {
    pub x_min: f64,
    pub x_max: f64,
    pub points: usize,
}

impl Default for SpecfunSection {
    fn default() -> Self {
        Self { x_min: 1e-4, x_max: 30.0, points: 200 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sphere {
    pub center: [f64; 4],
    pub radius: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct CovSection {
    /// Empty means the built-in twelve-sphere configuration.
    pub spheres: Vec<Sphere>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KcSection {
    pub samples: usize,
    pub max_radius: f64,
    pub max_offset: f64,
}

impl Default for KcSection {
    fn default() -> Self {
        Self { samples: 2000, max_radius: 0.5, max_offset: 1.5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SampleSection {
    /// `k⁴` lattice centers on `[0,1]⁴`.
    pub k: usize,
    /// Strictly decreasing radii; the first is `ε₀`.
    pub levels: Vec<f64>,
}

impl Default for SampleSection {
    fn default() -> Self {
        Self { k: 4, levels: vec![0.1, 0.01, 0.001] }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum LiouvilleMode {
    #[default]
    Moments,
    Convergence,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LiouvilleSection {
    pub mode: LiouvilleMode,
    pub gamma: f64,
    pub eps0: f64,
    pub n_levels: usize,
    pub k: usize,
    pub test_function: TestFunction,
}

impl Default for LiouvilleSection {
    fn default() -> Self {
        Self {
            mode: LiouvilleMode::Moments,
            gamma: PI,
            eps0: 1.0 / 16.0,
            n_levels: 1,
            k: 6,
            test_function: TestFunction::Indicator,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TiltSection {
    pub gamma: f64,
    pub radius: f64,
    pub probe_times: Vec<f64>,
    pub lambda: f64,
    /// Cutoff of the tilting density; `0` uses `r(t)`.
    pub eps: f64,
    pub draws: usize,
}

impl Default for TiltSection {
    fn default() -> Self {
        Self { gamma: PI, radius: 1.0, probe_times: vec![1.0, 2.0], lambda: 0.75, eps: 0.0, draws: 200_000 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct UpperSection {
    pub a: f64,
    /// Extra thicknesses evaluated on the same draws.
    pub extra_a: Vec<f64>,
    pub eps_scheme: f64,
    pub zeta: f64,
    pub c_delta: f64,
    pub n_min: usize,
    pub n_max: usize,
    pub k: usize,
}

impl Default for UpperSection {
    fn default() -> Self {
        let p = gff4::multifractal::UpperSchemeParams::default();
        Self {
            a: p.a,
            extra_a: Vec::new(),
            eps_scheme: p.eps_scheme,
            zeta: p.zeta,
            c_delta: p.c_delta,
            n_min: p.n_min,
            n_max: p.n_max,
            k: 8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LowerSection {
    pub a: f64,
    pub n_max: usize,
    /// Levels `n` of the measures `μ_n`.
    pub n: Vec<usize>,
    pub alpha: f64,
    pub pilot_paths: usize,
    /// Distance classes for the correlation check (empty skips it).
    pub correlation_l: Vec<usize>,
    pub correlation_n: usize,
    pub correlation_draws: usize,
}

impl Default for LowerSection {
    fn default() -> Self {
        Self {
            a: 0.25,
            n_max: 4,
            n: vec![1, 2, 3],
            alpha: 3.5,
            pilot_paths: 200_000,
            correlation_l: vec![1, 2, 3],
            correlation_n: 2,
            correlation_draws: 10_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct VerifySection {
    pub profile: Profile,
}

/// Commands with their own parameter constraints.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CommandKind {
    SpecfunTable,
    CovTable,
    KcCheck,
    Sample,
    Liouville,
    TiltCheck,
    Dimension,
    Energy,
    VerifyAll,
}

fn reject(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

impl ExperimentConfig {
    /// Parses `text`, applies `overrides` (`section.key = TOML value`), and
    /// fills the remaining keys with defaults.
    pub fn parse(text: &str, overrides: &[(String, String)]) -> Result<Self, CliError> {
        let mut table: toml::Table = text.parse().map_err(|e| reject(format!("cannot parse config: {e}")))?;
        for (key, raw) in overrides {
            let value = parse_value(raw);
            let mut parts: Vec<&str> = key.split('.').collect();
            let last = parts
                .pop()
                .filter(|k| !k.is_empty())
                .ok_or_else(|| reject(format!("empty key in override `{key}`")))?;
            let mut cur = &mut table;
            for p in parts {
                cur = cur
                    .entry(p.to_string())
                    .or_insert_with(|| toml::Value::Table(toml::Table::new()))
                    .as_table_mut()
                    .ok_or_else(|| reject(format!("override `{key}`: `{p}` is not a section")))?;
            }
            cur.insert(last.to_string(), value);
        }
        toml::Value::Table(table).try_into().map_err(|e| reject(format!("invalid config: {e}")))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Rejects parameter combinations the command cannot run, naming the
    /// violated constraint.
    pub fn validate(&self, cmd: CommandKind) -> Result<(), CliError> {
        let two_pi2 = 2.0 * PI * PI;
        match cmd {
            CommandKind::SpecfunTable => {
                let s = &self.specfun;
                if !(s.x_min > 0.0 && s.x_max > s.x_min) || s.points < 2 {
                    return Err(reject("specfun: need 0 < x_min < x_max and points >= 2"));
                }
            }
            CommandKind::CovTable => {}
            CommandKind::KcCheck => {
                if self.kc.samples == 0 || !(self.kc.max_radius > 0.0) || !(self.kc.max_offset >= 0.0) {
                    return Err(reject("kc: need samples > 0, max_radius > 0, max_offset >= 0"));
                }
            }
            CommandKind::Sample => {
                let s = &self.sample;
                check_spacing("sample", s.k, s.levels.first().copied())?;
            }
            CommandKind::Liouville => {
                let l = &self.liouville;
                if l.mode == LiouvilleMode::Convergence && l.gamma * l.gamma >= two_pi2 {
                    return Err(reject(format!(
                        "liouville: convergence runs need gamma^2 < 2 pi^2 = {two_pi2:.6}, got gamma^2 = {:.6}",
                        l.gamma * l.gamma
                    )));
                }
                if !(l.eps0 > 0.0 && l.eps0 < 1.0) {
                    return Err(reject("liouville: need 0 < eps0 < 1"));
                }
                check_spacing("liouville", l.k, Some(l.eps0))?;
                self.require_replications("liouville")?;
            }
            CommandKind::TiltCheck => {
                let t = &self.tilt;
                if !(0.0..1.0).contains(&t.lambda) {
                    return Err(reject("tilt: lambda must lie in [0, 1)"));
                }
                if t.probe_times.is_empty() || t.probe_times.iter().any(|&x| !(x > 0.0)) || t.draws == 0 {
                    return Err(reject("tilt: need positive probe_times and draws > 0"));
                }
            }
            CommandKind::Dimension => {
                let u = &self.upper;
                let eps0 = self.upper_params()?.radius(u.n_min);
                check_spacing("upper", u.k, Some(eps0))?;
                self.require_replications("upper")?;
            }
            CommandKind::Energy => {
                let l = &self.lower;
                if l.n.is_empty() || l.n.iter().any(|&n| n == 0 || n > l.n_max) {
                    return Err(reject(format!("lower: every n must lie in 1..={}", l.n_max)));
                }
                if !(l.alpha > 0.0 && l.alpha < 4.0) {
                    return Err(reject("lower: alpha must lie in (0, 4)"));
                }
                if !l.correlation_l.is_empty() && (l.correlation_n == 0 || l.correlation_n > l.n_max) {
                    return Err(reject(format!("lower: correlation_n must lie in 1..={}", l.n_max)));
                }
                self.require_replications("lower")?;
            }
            CommandKind::VerifyAll => {}
        }
        Ok(())
    }

    fn require_replications(&self, section: &str) -> Result<(), CliError> {
        if self.replications == 0 {
            return Err(reject(format!("{section}: replications must be positive")));
        }
        Ok(())
    }

    pub fn upper_params(&self) -> Result<gff4::multifractal::UpperSchemeParams, CliError> {
        let u = &self.upper;
        let p = gff4::multifractal::UpperSchemeParams {
            a: u.a,
            eps_scheme: u.eps_scheme,
            zeta: u.zeta,
            c_delta: u.c_delta,
            n_min: u.n_min,
            n_max: u.n_max,
        };
        p.validate().map_err(|e| reject(format!("upper: {e}")))?;
        Ok(p)
    }
}

/// Lattice spacing `1/k` must exceed `2ε₀`.
fn check_spacing(section: &str, k: usize, eps0: Option<f64>) -> Result<(), CliError> {
    let eps0 = eps0.ok_or_else(|| reject(format!("{section}: at least one level is required")))?;
    if k == 0 {
        return Err(reject(format!("{section}: k must be positive")));
    }
    let spacing = 1.0 / k as f64;
    if k > 1 && !(spacing > 2.0 * eps0) {
        return Err(reject(format!("{section}: center spacing 1/k = {spacing} must exceed 2*eps0 = {}", 2.0 * eps0)));
    }
    Ok(())
}

/// A TOML literal, or a bare string when the text is not one.
fn parse_value(raw: &str) -> toml::Value {
    let doc = format!("v = {raw}");
    match doc.parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| toml::Value::String(raw.into())),
        Err(_) => toml::Value::String(raw.into()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let c = ExperimentConfig::default();
        let text = c.to_toml();
        let back = ExperimentConfig::parse(&text, &[]).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.to_toml(), text);
    }

    #[test]
    fn overrides_create_sections() {
        let c =
            ExperimentConfig::parse("", &[("upper.a".into(), "1.5".into()), ("verify.profile".into(), "quick".into())])
                .unwrap();
        assert_eq!(c.upper.a, 1.5);
        assert_eq!(c.verify.profile, Profile::Quick);
    }

    #[test]
    fn supercritical_convergence_is_rejected() {
        let c = ExperimentConfig::parse("[liouville]\nmode = \"convergence\"\ngamma = 4.5\n", &[]).unwrap();
        let e = c.validate(CommandKind::Liouville).unwrap_err();
        assert!(e.to_string().contains("gamma^2 < 2 pi^2"));
        assert!(c.validate(CommandKind::SpecfunTable).is_ok());
    }

    #[test]
    fn crowded_lattice_is_rejected() {
        let c = ExperimentConfig::parse("[sample]\nk = 6\nlevels = [0.1]\n", &[]).unwrap();
        assert!(c.validate(CommandKind::Sample).unwrap_err().to_string().contains("2*eps0"));
    }

    #[test]
    fn unknown_keys_fail() {
        assert!(ExperimentConfig::parse("[upper]\nalpha = 1\n", &[]).is_err());
    }
}
