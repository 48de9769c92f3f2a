use serde::Serialize;

use super::{Ball, ConditionalSampler, EstimatorResult, SrbSampler};
use crate::error::{Error, Result};
use crate::par;
use crate::symbolic::{BakerParams, Metric, Point};

const SALT_LOCAL: u64 = 0xD1;
const SALT_ANNULUS: u64 = 0xA2;

/// Transverse dimension `d_s = H(alpha) / log(1/gamma)` and the SRB dimension
/// `d = 1 + d_s`. Requires `gamma_a == gamma_b`.
pub fn dimension_formula(params: &BakerParams) -> Result<(f64, f64)> {
    if params.gamma_a() != params.gamma_b() {
        return Err(Error::Unsupported(format!(
            "dimension formula needs gamma_a = gamma_b, got {} and {}",
            params.gamma_a(),
            params.gamma_b()
        )));
    }
    let (a, b) = (params.alpha(), params.beta());
    let entropy = -(a * a.ln() + b * b.ln());
    let d_s = entropy / (1.0 / params.gamma_a()).ln();
    Ok((d_s, 1.0 + d_s))
}

/// Ordinary least squares fit `y = intercept + slope * x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    /// From the residual variance; infinite with fewer than three points.
    pub slope_se: f64,
    pub df: usize,
}

pub fn ols(x: &[f64], y: &[f64]) -> Result<LinearFit> {
    let n = x.len();
    if n != y.len() || n < 2 {
        return Err(Error::InvalidInput(format!(
            "least squares needs at least two paired points, got {} and {}",
            x.len(),
            y.len()
        )));
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidInput(
            "least squares on constant abscissae".into(),
        ));
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let df = n - 2;
    let slope_se = if df == 0 {
        f64::INFINITY
    } else {
        let ssr: f64 = x
            .iter()
            .zip(y)
            .map(|(a, b)| (b - intercept - slope * a).powi(2))
            .sum();
        (ssr / df as f64 / sxx).sqrt()
    };
    Ok(LinearFit {
        slope,
        intercept,
        slope_se,
        df,
    })
}

/// One-sided 95% quantile of Student's t distribution.
pub fn t_quantile_95(df: usize) -> f64 {
    const TABLE: [f64; 30] = [
        6.314, 2.920, 2.353, 2.132, 2.015, 1.943, 1.895, 1.860, 1.833, 1.812, 1.796, 1.782, 1.771,
        1.761, 1.753, 1.746, 1.740, 1.734, 1.729, 1.725, 1.721, 1.717, 1.714, 1.711, 1.708, 1.706,
        1.703, 1.701, 1.699, 1.697,
    ];
    match df {
        0 => f64::INFINITY,
        1..=30 => TABLE[df - 1],
        31..=40 => 1.697,
        41..=60 => 1.684,
        61..=120 => 1.671,
        _ => 1.658,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct LocalDimension {
    /// Fitted slope of `log mu(B(x, r))` against `log r`.
    pub slope: EstimatorResult,
    /// Radii that received hits, with the measure estimate at each.
    pub points: Vec<(f64, EstimatorResult)>,
}

fn check_schedule(radii: &[f64]) -> Result<()> {
    if radii.len() < 4 {
        return Err(Error::InvalidInput(format!(
            "radius schedule needs at least 4 radii, got {}",
            radii.len()
        )));
    }
    if radii.windows(2).any(|w| !(w[1] < w[0])) || radii.iter().any(|&r| !(r > 0.0)) {
        return Err(Error::InvalidInput(
            "radii must be positive and strictly decreasing".into(),
        ));
    }
    if radii[0] / radii[radii.len() - 1] < 4.0 {
        return Err(Error::InvalidInput(
            "radius schedule must span two octaves".into(),
        ));
    }
    Ok(())
}

/// Estimate `mu(B(center, r))` for each radius and fit the scaling exponent.
///
/// Each radius uses `n` samples from the SRB measure conditioned on the ball's
/// bounding box, whose mass is known exactly. Radii without hits are dropped
/// with a warning.
pub fn local_dimension(
    center: Point,
    metric: Metric,
    radii: &[f64],
    sampler: &SrbSampler,
    n: u64,
) -> Result<LocalDimension> {
    check_schedule(radii)?;
    let params = sampler.params();
    let mut points = Vec::new();
    for (i, &r) in radii.iter().enumerate() {
        let ball = Ball::new(center, r, metric)?;
        let cs = match ConditionalSampler::for_box(params, ball.bounding_box()) {
            Ok(cs) => cs,
            Err(Error::ZeroHits { .. }) => {
                log::warn!("radius {r}: bounding box has zero SRB mass, dropped");
                continue;
            }
            Err(e) => return Err(e),
        };
        let hits = par::map_blocks(n, par::BLOCK_SIZE, |b, k| {
            let mut src = sampler.source(sampler.rng(SALT_LOCAL + ((i as u64) << 8), b));
            Ok((0..k)
                .filter(|_| ball.contains(cs.sample_point(sampler.depth(), &mut src)))
                .count() as u64)
        })?;
        let hits: u64 = hits.iter().sum();
        if hits == 0 {
            log::warn!("radius {r}: no hits among {n} samples, dropped");
            continue;
        }
        points.push((r, EstimatorResult::bernoulli(hits, n).scaled(cs.box_mass())));
    }
    if points.len() < 2 {
        return Err(Error::ZeroHits {
            what: format!(
                "enough radii around ({}, {}) to fit a slope",
                center.x, center.y
            ),
        });
    }
    let lx: Vec<f64> = points.iter().map(|(r, _)| r.ln()).collect();
    let ly: Vec<f64> = points.iter().map(|(_, e)| e.estimate.ln()).collect();
    let fit = ols(&lx, &ly)?;
    Ok(LocalDimension {
        slope: EstimatorResult::new(fit.slope, fit.slope_se, n * points.len() as u64),
        points,
    })
}

/// Ratio `mu(B(x, r + r^w) \ B(x, r)) / mu(B(x, r))` from `n` samples of the SRB
/// measure conditioned on the outer ball's bounding box. The standard error is
/// `sqrt(R (1 + R) / hits_inner)`.
pub fn annulus_ratio(
    center: Point,
    metric: Metric,
    r: f64,
    w: f64,
    sampler: &SrbSampler,
    n: u64,
) -> Result<EstimatorResult> {
    if !(w > 1.0) {
        return Err(Error::InvalidInput(format!(
            "annulus exponent w = {w} must exceed 1"
        )));
    }
    let outer_r = r + r.powf(w);
    if !(outer_r < 0.5) {
        return Err(Error::InvalidInput(format!(
            "outer radius {outer_r} must be below 1/2"
        )));
    }
    let inner = Ball::new(center, r, metric)?;
    let outer = Ball::new(center, outer_r, metric)?;
    let cs = ConditionalSampler::for_box(sampler.params(), outer.bounding_box())?;
    let salt = SALT_ANNULUS ^ r.to_bits().rotate_left(17);
    let counts = par::map_blocks(n, par::BLOCK_SIZE, |b, k| {
        let mut src = sampler.source(sampler.rng(salt, b));
        let (mut ring, mut ball) = (0u64, 0u64);
        for _ in 0..k {
            let p = cs.sample_point(sampler.depth(), &mut src);
            if inner.contains(p) {
                ball += 1;
            } else if outer.contains(p) {
                ring += 1;
            }
        }
        Ok((ring, ball))
    })?;
    let (ring, ball) = counts.iter().fold((0, 0), |(a, b), &(x, y)| (a + x, b + y));
    if ball == 0 {
        return Err(Error::ZeroHits {
            what: format!("ball of radius {r} in annulus estimate"),
        });
    }
    let ratio = ring as f64 / ball as f64;
    Ok(EstimatorResult::new(
        ratio,
        (ratio * (1.0 + ratio) / ball as f64).sqrt(),
        n,
    ))
}

/// [`annulus_ratio`] over a radius schedule.
pub fn annulus_schedule(
    center: Point,
    metric: Metric,
    radii: &[f64],
    w: f64,
    sampler: &SrbSampler,
    n: u64,
) -> Result<Vec<(f64, EstimatorResult)>> {
    radii
        .iter()
        .map(|&r| annulus_ratio(center, metric, r, w, sampler, n).map(|e| (r, e)))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AnnulusFit {
    /// Fitted exponent in `ratio ~ r^delta`.
    pub delta: f64,
    pub std_error: f64,
    pub df: usize,
    /// One-sided 95% lower confidence bound.
    pub lower_95: f64,
}

impl AnnulusFit {
    pub fn positive_at_95(&self) -> bool {
        self.lower_95 > 0.0
    }
}

/// Fit `log ratio` against `log r`. Zero ratios are dropped with a warning.
pub fn fit_annulus_exponent(points: &[(f64, EstimatorResult)]) -> Result<AnnulusFit> {
    let kept: Vec<_> = points
        .iter()
        .filter(|(r, e)| {
            let ok = e.estimate > 0.0;
            if !ok {
                log::warn!("annulus ratio at r = {r} is zero, dropped from the fit");
            }
            ok
        })
        .collect();
    let lx: Vec<f64> = kept.iter().map(|(r, _)| r.ln()).collect();
    let ly: Vec<f64> = kept.iter().map(|(_, e)| e.estimate.ln()).collect();
    let fit = ols(&lx, &ly)?;
    Ok(AnnulusFit {
        delta: fit.slope,
        std_error: fit.slope_se,
        df: fit.df,
        lower_95: fit.slope - t_quantile_95(fit.df) * fit.slope_se,
    })
}
