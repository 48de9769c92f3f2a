use serde::Serialize;

use super::center::Center;
use super::config::*;
use crate::error::{Error, Result};
use crate::evt::{
    first_return_times, gumbel_experiment, lebesgue_start_experiment, poincare_normalization,
    EiEstimate, EvtConfig, GumbelResult, PoincareCheck,
};
use crate::geometry::{constants_table, GeometryConstant};
use crate::measure::{
    annulus_schedule, dimension_formula, fit_annulus_exponent, local_dimension, AnnulusFit,
    EstimatorResult, LocalDimension, SrbSampler,
};
use crate::pointprocess::{
    estimate_cluster_law, geometric_cluster_test, gof_distance, run_length_law, visit_counts_multi,
    ClusterLaw, GeometricTest, ReferenceLaw, RunLengthLaw, VisitHistogram,
};
use crate::symbolic::{conjugacy_check, BakerParams, ConjugacyReport, Metric};
use crate::ulam::{
    build_ulam, encode_dump, leading_eigenvalue, punch_hole, survival_probability, CoverKind,
    SpectralResult, UlamRow,
};

/// One parameter set and center of a config.
#[derive(Debug, Clone, Serialize)]
pub struct Case {
    pub params: BakerParams,
    pub center: Center,
}

fn cases(
    params: &OneOrMany<ParamsSpec>,
    centers: &OneOrMany<super::CenterSpec>,
) -> Result<Vec<Case>> {
    let mut out = Vec::new();
    for p in params.to_vec() {
        let params = p.resolve()?;
        for c in centers.to_vec() {
            out.push(Case {
                params,
                center: c.resolve(&params)?,
            });
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize)]
pub struct GumbelCell {
    pub case: Case,
    pub result: GumbelResult,
}

#[derive(Debug, Clone, Serialize)]
pub struct EiCell {
    pub case: Case,
    pub metric: Metric,
    pub radius: f64,
    pub k_max: u64,
    pub estimate: EiEstimate,
    pub reference: Option<f64>,
    pub poincare: Option<PoincareCheck>,
    pub block: Option<GumbelResult>,
    pub rejected: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct VisitsCell {
    pub case: Case,
    pub metric: Metric,
    pub radius: f64,
    pub histogram: VisitHistogram,
    pub theta: Option<f64>,
    /// `-log(P(N = 0)) / t`.
    pub theta_hat: EstimatorResult,
    pub tv_poisson: f64,
    pub tv_polya_aeppli: Option<f64>,
}

impl VisitsCell {
    /// The reference law closer in total variation.
    pub fn verdict(&self) -> &'static str {
        match self.tv_polya_aeppli {
            Some(pa) if pa < self.tv_poisson => "polya_aeppli",
            _ => "poisson",
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ClusterCell {
    pub case: Case,
    pub metric: Metric,
    pub radius: f64,
    pub law: ClusterLaw,
    /// Requires `k_max >= 4`.
    pub test: Option<GeometricTest>,
    /// Predicted `hat alpha_{k+1}` for `k = 1 ..= k_max`.
    pub reference: Vec<Option<f64>>,
    pub run_length: Option<RunLengthLaw>,
}

#[derive(Debug, Clone, Serialize)]
pub struct UlamCell {
    pub row: UlamRow,
    pub cover: Option<CoverKind>,
    pub aligned: Option<bool>,
    pub spectral: SpectralResult,
    pub survival: Vec<(u64, f64)>,
    #[serde(skip)]
    pub dump: Option<Vec<u8>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct DimensionCell {
    pub case: Case,
    pub metric: Metric,
    pub dimension: LocalDimension,
    /// `(d_s, d)` from the closed form.
    pub formula: (f64, f64),
}

#[derive(Debug, Clone, Serialize)]
pub struct AnnulusCell {
    pub case: Case,
    pub metric: Metric,
    pub w: f64,
    pub points: Vec<(f64, EstimatorResult)>,
    pub fit: AnnulusFit,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConjugacyCell {
    pub params: BakerParams,
    pub report: ConjugacyReport,
}

/// Typed results of one config run.
#[derive(Debug, Clone, Serialize)]
#[serde(tag = "command", content = "cells", rename_all = "snake_case")]
pub enum RunResult {
    Gumbel(Vec<GumbelCell>),
    Ei(Vec<EiCell>),
    Visits(Vec<VisitsCell>),
    Cluster(Vec<ClusterCell>),
    Ulam(Vec<UlamCell>),
    Dimension(Vec<DimensionCell>),
    Annulus(Vec<AnnulusCell>),
    Geometry(Vec<GeometryConstant>),
    Conjugacy(Vec<ConjugacyCell>),
}

/// Run every cell of a config in order.
pub fn run(cfg: &ExperimentConfig) -> Result<RunResult> {
    match cfg {
        ExperimentConfig::Gumbel(c) => run_gumbel(c).map(RunResult::Gumbel),
        ExperimentConfig::Ei(c) => run_ei(c).map(RunResult::Ei),
        ExperimentConfig::Visits(c) => run_visits(c).map(RunResult::Visits),
        ExperimentConfig::Cluster(c) => run_cluster(c).map(RunResult::Cluster),
        ExperimentConfig::Ulam(c) => run_ulam(c).map(RunResult::Ulam),
        ExperimentConfig::Dimension(c) => run_dimension(c).map(RunResult::Dimension),
        ExperimentConfig::Annulus(c) => run_annulus(c).map(RunResult::Annulus),
        ExperimentConfig::Geometry(c) => constants_table(&c.ps, &c.ks).map(RunResult::Geometry),
        ExperimentConfig::Conjugacy(c) => run_conjugacy(c).map(RunResult::Conjugacy),
    }
}

fn run_gumbel(c: &GumbelConfig) -> Result<Vec<GumbelCell>> {
    let mut out = Vec::new();
    for case in cases(&c.params, &c.centers)? {
        for metric in c.metrics.to_vec() {
            let theta_ref = c
                .theta_ref
                .or_else(|| case.center.reference_theta(&case.params, metric))
                .unwrap_or(f64::NAN);
            for start in c.start.to_vec() {
                for &n in &c.ns {
                    for &tau in &c.taus {
                        let evt = EvtConfig {
                            params: case.params,
                            center: case.center.point,
                            metric,
                            tau,
                            n,
                            n_samples: c.n_samples,
                            seed: c.seed,
                        };
                        log::info!("gumbel {} {metric} n={n} tau={tau}", case.center.label);
                        let result = match (start, c.burn_in) {
                            (StartSpec::Lebesgue, Some(b)) => {
                                lebesgue_start_experiment(&evt, b, Some(theta_ref))?
                            }
                            _ => gumbel_experiment(&evt, Some(theta_ref))?,
                        };
                        out.push(GumbelCell {
                            case: case.clone(),
                            result,
                        });
                    }
                }
            }
        }
    }
    Ok(out)
}

fn run_ei(c: &EiConfig) -> Result<Vec<EiCell>> {
    let mut out = Vec::new();
    for case in cases(&c.params, &c.centers)? {
        let sampler = SrbSampler::new(case.params, c.seed);
        for metric in c.metrics.to_vec() {
            let reference = case.center.reference_theta(&case.params, metric);
            let block = c
                .block
                .map(|b| {
                    let evt = EvtConfig {
                        params: case.params,
                        center: case.center.point,
                        metric,
                        tau: b.tau,
                        n: b.n,
                        n_samples: b.n_samples,
                        seed: c.seed,
                    };
                    gumbel_experiment(&evt, Some(reference.unwrap_or(f64::NAN)))
                })
                .transpose()?;
            for &radius in &c.radii {
                log::info!("ei {} {metric} r={radius}", case.center.label);
                let ball = case.center.ball(radius, metric)?;
                let cap = c.poincare.map_or(c.k_max + 1, |p| p.cap.max(c.k_max + 1));
                let times = first_return_times(&ball, &sampler, c.n_samples, cap)?;
                out.push(EiCell {
                    case: case.clone(),
                    metric,
                    radius,
                    k_max: c.k_max,
                    estimate: times.estimate(c.k_max)?,
                    reference,
                    poincare: c
                        .poincare
                        .map(|p| poincare_normalization(&times, p.k_start, p.tail_target)),
                    block: block.clone(),
                    rejected: times.rejected,
                });
            }
        }
    }
    Ok(out)
}

fn run_visits(c: &VisitsConfig) -> Result<Vec<VisitsCell>> {
    let mut out = Vec::new();
    for case in cases(&c.params, &c.centers)? {
        let sampler = SrbSampler::new(case.params, c.seed);
        for metric in c.metrics.to_vec() {
            log::info!("visits {} {metric} r={}", case.center.label, c.radius);
            let theta = c
                .theta
                .or_else(|| case.center.reference_theta(&case.params, metric));
            let ball = case.center.ball(c.radius, metric)?;
            for histogram in visit_counts_multi(&ball, &c.ts, &sampler, c.n_samples)? {
                let t = histogram.t;
                let n = histogram.n_samples;
                let zero = histogram.counts.get(&0).copied().unwrap_or(0);
                let p0 = EstimatorResult::bernoulli(zero, n);
                let theta_hat = if zero == 0 {
                    EstimatorResult::new(f64::NAN, f64::NAN, n)
                } else {
                    EstimatorResult::new(-p0.estimate.ln() / t, p0.std_error / (p0.estimate * t), n)
                };
                let tv_poisson = gof_distance(&histogram, &ReferenceLaw::Poisson { t });
                let tv_polya_aeppli = theta
                    .map(|th| {
                        ReferenceLaw::polya_aeppli(th, t).map(|law| gof_distance(&histogram, &law))
                    })
                    .transpose()?;
                out.push(VisitsCell {
                    case: case.clone(),
                    metric,
                    radius: c.radius,
                    histogram,
                    theta,
                    theta_hat,
                    tv_poisson,
                    tv_polya_aeppli,
                });
            }
        }
    }
    Ok(out)
}

fn run_cluster(c: &ClusterConfig) -> Result<Vec<ClusterCell>> {
    let mut out = Vec::new();
    for case in cases(&c.params, &c.centers)? {
        let sampler = SrbSampler::new(case.params, c.seed);
        let period = c.period.or(case.center.period).ok_or_else(|| {
            Error::InvalidInput(format!(
                "center {} is not periodic; set \"period\" explicitly",
                case.center.label
            ))
        })?;
        for metric in c.metrics.to_vec() {
            log::info!("cluster {} {metric} p={period}", case.center.label);
            let ball = case.center.ball(c.radius, metric)?;
            let law = estimate_cluster_law(&ball, period, &sampler, c.n_samples, c.k_max)?;
            let test = (law.lambda.len() >= 3)
                .then(|| geometric_cluster_test(&law))
                .transpose()?;
            let reference = (1..=c.k_max as u32)
                .map(|k| {
                    (case.center.period == Some(period))
                        .then(|| case.center.reference_alpha_hat(&case.params, metric, k))
                        .flatten()
                })
                .collect();
            let run_length = c
                .run_length
                .map(|r| run_length_law(&ball, period, &sampler, r.n_orbits, r.length))
                .transpose()?;
            out.push(ClusterCell {
                case: case.clone(),
                metric,
                radius: c.radius,
                law,
                test,
                reference,
                run_length,
            });
        }
    }
    Ok(out)
}

fn run_ulam(c: &UlamConfig) -> Result<Vec<UlamCell>> {
    let classical = BakerParams::classical();
    let mut out = Vec::new();
    for &m in &c.resolutions {
        let closed = build_ulam(m)?;
        for hole in &c.holes {
            let ops = match hole {
                HoleSpec::None => vec![(closed.clone(), None)],
                HoleSpec::Ball {
                    center,
                    metric,
                    radius,
                    cover,
                } => {
                    let ball = center.resolve(&classical)?.ball(*radius, *metric)?;
                    cover
                        .kinds()
                        .into_iter()
                        .map(|k| punch_hole(&closed, &ball, k).map(|op| (op, Some(k))))
                        .collect::<Result<Vec<_>>>()?
                }
            };
            for (op, cover) in ops {
                log::info!("ulam m={m} hole {:?}", op.hole().map(|h| &h.label));
                let spectral = leading_eigenvalue(&op, c.tol)?;
                out.push(UlamCell {
                    row: UlamRow::new(&op, &spectral),
                    cover,
                    aligned: op.hole().map(|h| h.aligned()),
                    survival: c
                        .survival_steps
                        .iter()
                        .map(|&n| (n, survival_probability(&op, n)))
                        .collect(),
                    dump: c.dump.then(|| encode_dump(&op)),
                    spectral,
                });
            }
        }
    }
    Ok(out)
}

fn run_dimension(c: &DimensionConfig) -> Result<Vec<DimensionCell>> {
    let mut out = Vec::new();
    for case in cases(&c.params, &c.centers)? {
        let sampler = SrbSampler::new(case.params, c.seed);
        let formula = dimension_formula(&case.params)?;
        for metric in c.metrics.to_vec() {
            log::info!("dimension {} {metric}", case.center.label);
            out.push(DimensionCell {
                case: case.clone(),
                metric,
                dimension: local_dimension(
                    case.center.point,
                    metric,
                    &c.radii,
                    &sampler,
                    c.n_samples,
                )?,
                formula,
            });
        }
    }
    Ok(out)
}

fn run_annulus(c: &AnnulusConfig) -> Result<Vec<AnnulusCell>> {
    let mut out = Vec::new();
    for case in cases(&c.params, &c.centers)? {
        let sampler = SrbSampler::new(case.params, c.seed);
        for metric in c.metrics.to_vec() {
            log::info!("annulus {} {metric}", case.center.label);
            let points = annulus_schedule(
                case.center.point,
                metric,
                &c.radii,
                c.w,
                &sampler,
                c.n_samples,
            )?;
            out.push(AnnulusCell {
                case: case.clone(),
                metric,
                w: c.w,
                fit: fit_annulus_exponent(&points)?,
                points,
            });
        }
    }
    Ok(out)
}

fn run_conjugacy(c: &ConjugacyConfig) -> Result<Vec<ConjugacyCell>> {
    c.params
        .to_vec()
        .into_iter()
        .map(|p| {
            let params = p.resolve()?;
            Ok(ConjugacyCell {
                params,
                report: conjugacy_check(&params, c.windows, c.steps, c.depth, c.seed)?,
            })
        })
        .collect()
}
