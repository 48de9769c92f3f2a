use super::ifs::SelfSimilar;
use super::{Ball, EstimatorResult, SrbSampler};
use crate::error::{Error, Result};
use crate::par;
use crate::symbolic::{BakerParams, Metric};

const SALT: u64 = 0xBA11;

/// Relative cylinder width at which the chord is frozen away from the shadow's edge.
const INTERIOR_RESOLUTION: f64 = 1.0 / 1024.0;
/// Floor for cylinders within 16 widths of the edge, where the chord has a
/// square-root singularity.
const EDGE_RESOLUTION: f64 = 1.0 / (1u64 << 30) as f64;

/// SRB measure of `ball`, computed deterministically.
///
/// The SRB measure is the product of the horizontal self-similar measure and
/// Lebesgue measure in `y`. Sup balls are products of intervals. Euclidean balls
/// are integrated over horizontal cylinders, weighting each cylinder's mass by the
/// vertical chord at its barycenter; relative accuracy is about `1e-6`.
pub fn srb_ball_measure(params: &BakerParams, ball: &Ball) -> f64 {
    let h = SelfSimilar::horizontal(params);
    let (x_lo, x_hi, y_lo, y_hi) = ball.bounding_box();
    match ball.metric() {
        Metric::Sup => h.mass(x_lo, x_hi) * (y_hi - y_lo),
        Metric::Euclidean => {
            let c = ball.center();
            let r = ball.radius();
            let chord = |x: f64| {
                let half = (r * r - (x - c.x).powi(2)).max(0.0).sqrt();
                ((c.y + half).min(1.0) - (c.y - half).max(0.0)).max(0.0)
            };
            let mean = h.mean();
            let mut total = 0.0;
            let mut stack = vec![(0.0f64, 1.0f64, 1.0f64, 0u32)];
            while let Some((lo, width, mass, depth)) = stack.pop() {
                let hi = lo + width;
                if lo >= c.x + r || hi <= c.x - r || mass == 0.0 {
                    continue;
                }
                let edge_gap = (lo - (c.x - r)).min(c.x + r - hi);
                let smooth = edge_gap >= 16.0 * width && width <= r * INTERIOR_RESOLUTION;
                if smooth || width <= r * EDGE_RESOLUTION || depth >= 200 {
                    total += mass * chord(lo + width * mean);
                    continue;
                }
                for s in [0u8, 1] {
                    let (ratio, offset) = h.branch(s);
                    stack.push((
                        lo + width * offset,
                        width * ratio,
                        mass * params.symbol_weight(s),
                        depth + 1,
                    ));
                }
            }
            total
        }
    }
}

/// Hit frequency of `ball` among `n` SRB samples.
pub fn ball_measure(ball: &Ball, sampler: &SrbSampler, n: u64) -> Result<EstimatorResult> {
    if n < 1000 {
        return Err(Error::InvalidInput(format!(
            "ball_measure needs n >= 1000, got {n}"
        )));
    }
    let hits = par::map_blocks(n, par::BLOCK_SIZE, |b, k| {
        let mut src = sampler.source(sampler.rng(SALT, b));
        Ok((0..k)
            .filter(|_| ball.contains(sampler.sample_point(&mut src)))
            .count() as u64)
    })?;
    Ok(EstimatorResult::bernoulli(hits.iter().sum(), n))
}
