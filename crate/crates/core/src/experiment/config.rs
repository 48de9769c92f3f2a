use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use super::center::CenterSpec;
use crate::error::{Error, Result};
use crate::symbolic::{BakerParams, Metric};
use crate::ulam::CoverKind;

/// Map parameters as written in a config.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsSpec {
    pub alpha: f64,
    pub gamma_a: f64,
    pub gamma_b: f64,
}

impl ParamsSpec {
    pub fn resolve(&self) -> Result<BakerParams> {
        BakerParams::new(self.alpha, self.gamma_a, self.gamma_b)
    }
}

impl From<BakerParams> for ParamsSpec {
    fn from(p: BakerParams) -> Self {
        Self {
            alpha: p.alpha(),
            gamma_a: p.gamma_a(),
            gamma_b: p.gamma_b(),
        }
    }
}

/// A single value or a list of values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T: Clone> OneOrMany<T> {
    pub fn to_vec(&self) -> Vec<T> {
        match self {
            Self::One(v) => vec![v.clone()],
            Self::Many(v) => v.clone(),
        }
    }

    fn is_empty(&self) -> bool {
        matches!(self, Self::Many(v) if v.is_empty())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StartSpec {
    Srb,
    Lebesgue,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GumbelConfig {
    pub command: String,
    pub params: OneOrMany<ParamsSpec>,
    pub centers: OneOrMany<CenterSpec>,
    pub metrics: OneOrMany<Metric>,
    pub taus: Vec<f64>,
    /// Block lengths.
    pub ns: Vec<u64>,
    pub n_samples: u64,
    pub seed: u64,
    /// Initial distributions; each gets its own cells.
    pub start: OneOrMany<StartSpec>,
    /// Required when a start is `lebesgue`.
    #[serde(default)]
    pub burn_in: Option<usize>,
    /// Overrides the extremal index reference derived from the center.
    #[serde(default)]
    pub theta_ref: Option<f64>,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

/// Raise `k_max` until the return-time tail is small; see
/// [`crate::evt::poincare_normalization`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoincareSpec {
    /// Return times are recorded up to this many steps.
    pub cap: u64,
    pub k_start: u64,
    pub tail_target: f64,
}

/// Block-maxima cross-check of the extremal index.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlockSpec {
    pub tau: f64,
    pub n: u64,
    pub n_samples: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EiConfig {
    pub command: String,
    pub params: OneOrMany<ParamsSpec>,
    pub centers: OneOrMany<CenterSpec>,
    pub metrics: OneOrMany<Metric>,
    pub radii: Vec<f64>,
    pub k_max: u64,
    pub n_samples: u64,
    pub seed: u64,
    #[serde(default)]
    pub poincare: Option<PoincareSpec>,
    #[serde(default)]
    pub block: Option<BlockSpec>,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VisitsConfig {
    pub command: String,
    pub params: OneOrMany<ParamsSpec>,
    pub centers: OneOrMany<CenterSpec>,
    pub metrics: OneOrMany<Metric>,
    pub radius: f64,
    pub ts: Vec<f64>,
    pub n_samples: u64,
    pub seed: u64,
    /// Extremal index of the compound Poisson reference; derived from the center
    /// when absent.
    #[serde(default)]
    pub theta: Option<f64>,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunLengthSpec {
    pub n_orbits: u64,
    pub length: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClusterConfig {
    pub command: String,
    pub params: OneOrMany<ParamsSpec>,
    pub centers: OneOrMany<CenterSpec>,
    pub metrics: OneOrMany<Metric>,
    pub radius: f64,
    /// Candidate period; defaults to the minimal period of a periodic center.
    #[serde(default)]
    pub period: Option<u64>,
    pub k_max: usize,
    pub n_samples: u64,
    pub seed: u64,
    #[serde(default)]
    pub run_length: Option<RunLengthSpec>,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoverSpec {
    Inner,
    Outer,
    Both,
}

impl CoverSpec {
    pub fn kinds(self) -> Vec<CoverKind> {
        match self {
            Self::Inner => vec![CoverKind::Inner],
            Self::Outer => vec![CoverKind::Outer],
            Self::Both => vec![CoverKind::Inner, CoverKind::Outer],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum HoleSpec {
    /// The closed operator.
    None,
    Ball {
        center: CenterSpec,
        metric: Metric,
        radius: f64,
        cover: CoverSpec,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UlamConfig {
    pub command: String,
    pub resolutions: Vec<u32>,
    pub holes: Vec<HoleSpec>,
    pub tol: f64,
    /// Step counts at which to report the surviving mass.
    #[serde(default)]
    pub survival_steps: Vec<u64>,
    /// Write each operator as a binary dump.
    #[serde(default)]
    pub dump: bool,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DimensionConfig {
    pub command: String,
    pub params: OneOrMany<ParamsSpec>,
    pub centers: OneOrMany<CenterSpec>,
    pub metrics: OneOrMany<Metric>,
    pub radii: Vec<f64>,
    pub n_samples: u64,
    pub seed: u64,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnnulusConfig {
    pub command: String,
    pub params: OneOrMany<ParamsSpec>,
    pub centers: OneOrMany<CenterSpec>,
    pub metrics: OneOrMany<Metric>,
    pub radii: Vec<f64>,
    /// Annulus width exponent: the ring is `r <= d < r + r^w`.
    pub w: f64,
    pub n_samples: u64,
    pub seed: u64,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryConfig {
    pub command: String,
    pub ps: Vec<u32>,
    pub ks: Vec<u32>,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConjugacyConfig {
    pub command: String,
    pub params: OneOrMany<ParamsSpec>,
    pub windows: u64,
    pub steps: usize,
    pub depth: usize,
    pub seed: u64,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum ExperimentConfig {
    Gumbel(GumbelConfig),
    Ei(EiConfig),
    Visits(VisitsConfig),
    Cluster(ClusterConfig),
    Ulam(UlamConfig),
    Dimension(DimensionConfig),
    Annulus(AnnulusConfig),
    Geometry(GeometryConfig),
    Conjugacy(ConjugacyConfig),
}

pub const COMMANDS: [&str; 9] = [
    "gumbel",
    "ei",
    "visits",
    "cluster",
    "ulam",
    "dimension",
    "annulus",
    "geometry",
    "conjugacy",
];

#[derive(Deserialize)]
struct Head {
    command: Option<serde_json::Value>,
}

fn json_error(e: serde_json::Error) -> Error {
    Error::Config {
        line: e.line().max(1),
        column: e.column().max(1),
        message: e.to_string(),
    }
}

/// 1-based line and column of the first occurrence of `"key"` in `text`.
fn locate_key(text: &str, key: &str) -> (usize, usize) {
    let needle = format!("\"{key}\"");
    let Some(offset) = text.find(&needle) else {
        return (1, 1);
    };
    let before = &text[..offset];
    let line = before.matches('\n').count() + 1;
    let column = before.len() - before.rfind('\n').map_or(0, |i| i + 1) + 1;
    (line, column)
}

fn field_error(text: &str, key: &str, message: String) -> Error {
    let (line, column) = locate_key(text, key);
    Error::Config {
        line,
        column,
        message: format!("{key}: {message}"),
    }
}

/// Parse a config. Structural errors carry the JSON position; semantic errors
/// point at the offending key.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    if text.trim().is_empty() {
        return Err(Error::Config {
            line: 1,
            column: 1,
            message: "empty config".into(),
        });
    }
    let head: Head = serde_json::from_str(text).map_err(json_error)?;
    let command = match head.command {
        Some(serde_json::Value::String(c)) => c,
        Some(other) => {
            return Err(field_error(
                text,
                "command",
                format!("expected a string, got {other}"),
            ))
        }
        None => {
            return Err(Error::Config {
                line: 1,
                column: 1,
                message: format!(
                    "missing \"command\"; expected one of {}",
                    COMMANDS.join(", ")
                ),
            })
        }
    };
    let cfg = match command.as_str() {
        "gumbel" => ExperimentConfig::Gumbel(serde_json::from_str(text).map_err(json_error)?),
        "ei" => ExperimentConfig::Ei(serde_json::from_str(text).map_err(json_error)?),
        "visits" => ExperimentConfig::Visits(serde_json::from_str(text).map_err(json_error)?),
        "cluster" => ExperimentConfig::Cluster(serde_json::from_str(text).map_err(json_error)?),
        "ulam" => ExperimentConfig::Ulam(serde_json::from_str(text).map_err(json_error)?),
        "dimension" => ExperimentConfig::Dimension(serde_json::from_str(text).map_err(json_error)?),
        "annulus" => ExperimentConfig::Annulus(serde_json::from_str(text).map_err(json_error)?),
        "geometry" => ExperimentConfig::Geometry(serde_json::from_str(text).map_err(json_error)?),
        "conjugacy" => ExperimentConfig::Conjugacy(serde_json::from_str(text).map_err(json_error)?),
        other => {
            return Err(field_error(
                text,
                "command",
                format!(
                    "unknown command {other:?}; expected one of {}",
                    COMMANDS.join(", ")
                ),
            ))
        }
    };
    cfg.validate()
        .map_err(|(key, msg)| field_error(text, key, msg))?;
    Ok(cfg)
}

type Check = std::result::Result<(), (&'static str, String)>;

fn require(ok: bool, key: &'static str, msg: impl Into<String>) -> Check {
    if ok {
        Ok(())
    } else {
        Err((key, msg.into()))
    }
}

fn check_params(params: &OneOrMany<ParamsSpec>) -> Check {
    require(!params.is_empty(), "params", "at least one parameter set")?;
    for p in params.to_vec() {
        p.resolve().map_err(|e| ("params", e.to_string()))?;
    }
    Ok(())
}

fn check_common<T: Clone>(
    params: &OneOrMany<ParamsSpec>,
    centers: &OneOrMany<CenterSpec>,
    metrics: &OneOrMany<T>,
    n_samples: u64,
) -> Check {
    check_params(params)?;
    require(!centers.is_empty(), "centers", "at least one center")?;
    for c in centers.to_vec() {
        c.check().map_err(|m| ("centers", m))?;
    }
    require(!metrics.is_empty(), "metrics", "at least one metric")?;
    require(n_samples > 0, "n_samples", "must be positive")
}

fn check_radii(key: &'static str, radii: &[f64]) -> Check {
    require(!radii.is_empty(), key, "at least one radius")?;
    require(
        radii.iter().all(|&r| r > 0.0 && r < 0.5),
        key,
        "radii must lie in (0, 1/2)",
    )
}

impl ExperimentConfig {
    pub fn command(&self) -> &'static str {
        match self {
            Self::Gumbel(_) => "gumbel",
            Self::Ei(_) => "ei",
            Self::Visits(_) => "visits",
            Self::Cluster(_) => "cluster",
            Self::Ulam(_) => "ulam",
            Self::Dimension(_) => "dimension",
            Self::Annulus(_) => "annulus",
            Self::Geometry(_) => "geometry",
            Self::Conjugacy(_) => "conjugacy",
        }
    }

    pub fn output(&self) -> Option<&PathBuf> {
        match self {
            Self::Gumbel(c) => c.output.as_ref(),
            Self::Ei(c) => c.output.as_ref(),
            Self::Visits(c) => c.output.as_ref(),
            Self::Cluster(c) => c.output.as_ref(),
            Self::Ulam(c) => c.output.as_ref(),
            Self::Dimension(c) => c.output.as_ref(),
            Self::Annulus(c) => c.output.as_ref(),
            Self::Geometry(c) => c.output.as_ref(),
            Self::Conjugacy(c) => c.output.as_ref(),
        }
    }

    pub fn seed(&self) -> Option<u64> {
        match self {
            Self::Gumbel(c) => Some(c.seed),
            Self::Ei(c) => Some(c.seed),
            Self::Visits(c) => Some(c.seed),
            Self::Cluster(c) => Some(c.seed),
            Self::Dimension(c) => Some(c.seed),
            Self::Annulus(c) => Some(c.seed),
            Self::Conjugacy(c) => Some(c.seed),
            Self::Ulam(_) | Self::Geometry(_) => None,
        }
    }

    /// Replace the seed; returns `false` for deterministic commands without one.
    pub fn set_seed(&mut self, seed: u64) -> bool {
        let slot = match self {
            Self::Gumbel(c) => &mut c.seed,
            Self::Ei(c) => &mut c.seed,
            Self::Visits(c) => &mut c.seed,
            Self::Cluster(c) => &mut c.seed,
            Self::Dimension(c) => &mut c.seed,
            Self::Annulus(c) => &mut c.seed,
            Self::Conjugacy(c) => &mut c.seed,
            Self::Ulam(_) | Self::Geometry(_) => return false,
        };
        *slot = seed;
        true
    }

    fn validate(&self) -> Check {
        match self {
            Self::Gumbel(c) => {
                check_common(&c.params, &c.centers, &c.metrics, c.n_samples)?;
                require(!c.taus.is_empty(), "taus", "at least one tau")?;
                require(
                    c.taus.iter().all(|&t| t >= 0.0 && t.is_finite()),
                    "taus",
                    "must be >= 0",
                )?;
                require(
                    !c.ns.is_empty() && c.ns.iter().all(|&n| n >= 2),
                    "ns",
                    "block lengths >= 2",
                )?;
                require(!c.start.is_empty(), "start", "at least one start")?;
                require(
                    c.start.to_vec().contains(&StartSpec::Lebesgue) == c.burn_in.is_some(),
                    "burn_in",
                    "required with start = lebesgue and only then",
                )?;
                if let Some(t) = c.theta_ref {
                    require(t > 0.0 && t <= 1.0, "theta_ref", "must lie in (0, 1]")?;
                }
                Ok(())
            }
            Self::Ei(c) => {
                check_common(&c.params, &c.centers, &c.metrics, c.n_samples)?;
                check_radii("radii", &c.radii)?;
                if let Some(p) = c.poincare {
                    require(
                        p.cap > c.k_max && p.k_start >= 1,
                        "poincare",
                        "need cap > k_max and k_start >= 1",
                    )?;
                    require(
                        p.tail_target > 0.0 && p.tail_target < 1.0,
                        "poincare",
                        "tail_target in (0, 1)",
                    )?;
                }
                if let Some(b) = c.block {
                    require(
                        b.tau > 0.0 && b.n >= 2 && b.n_samples > 0,
                        "block",
                        "need tau > 0, n >= 2, n_samples > 0",
                    )?;
                }
                Ok(())
            }
            Self::Visits(c) => {
                check_common(&c.params, &c.centers, &c.metrics, c.n_samples)?;
                check_radii("radius", &[c.radius])?;
                require(
                    !c.ts.is_empty() && c.ts.iter().all(|&t| t > 0.0),
                    "ts",
                    "positive times",
                )?;
                if let Some(t) = c.theta {
                    require(t > 0.0 && t <= 1.0, "theta", "must lie in (0, 1]")?;
                }
                Ok(())
            }
            Self::Cluster(c) => {
                check_common(&c.params, &c.centers, &c.metrics, c.n_samples)?;
                check_radii("radius", &[c.radius])?;
                require(c.k_max >= 1, "k_max", "must be >= 1")?;
                require(c.period != Some(0), "period", "must be >= 1")?;
                if let Some(r) = c.run_length {
                    require(
                        r.n_orbits > 0 && r.length > 0,
                        "run_length",
                        "positive n_orbits and length",
                    )?;
                }
                Ok(())
            }
            Self::Ulam(c) => {
                require(
                    !c.resolutions.is_empty(),
                    "resolutions",
                    "at least one resolution",
                )?;
                require(
                    c.resolutions
                        .iter()
                        .all(|&m| (1..=crate::ulam::MAX_RESOLUTION).contains(&m)),
                    "resolutions",
                    format!("must lie in 1..={}", crate::ulam::MAX_RESOLUTION),
                )?;
                require(
                    !c.holes.is_empty(),
                    "holes",
                    "at least one hole (kind none for the closed operator)",
                )?;
                for h in &c.holes {
                    if let HoleSpec::Ball { center, radius, .. } = h {
                        center.check().map_err(|m| ("holes", m))?;
                        check_radii("holes", &[*radius])?;
                    }
                }
                require(c.tol > 0.0, "tol", "must be positive")
            }
            Self::Dimension(c) => {
                check_common(&c.params, &c.centers, &c.metrics, c.n_samples)?;
                check_radii("radii", &c.radii)
            }
            Self::Annulus(c) => {
                check_common(&c.params, &c.centers, &c.metrics, c.n_samples)?;
                check_radii("radii", &c.radii)?;
                require(c.w > 1.0, "w", "must exceed 1")
            }
            Self::Geometry(c) => {
                require(
                    !c.ps.is_empty() && c.ps.iter().all(|&p| p >= 1),
                    "ps",
                    "periods >= 1",
                )?;
                require(!c.ks.is_empty(), "ks", "at least one k")
            }
            Self::Conjugacy(c) => {
                check_params(&c.params)?;
                require(c.windows > 0, "windows", "must be positive")?;
                require(c.steps > 0, "steps", "must be positive")?;
                require(c.depth > 0, "depth", "must be positive")
            }
        }
    }
}
