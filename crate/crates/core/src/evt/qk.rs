use serde::Serialize;

use crate::error::{Error, Result};
use crate::measure::{
    with_resampling, Ball, ConditionalSampler, EstimatorResult, OrbitRunner, SrbSampler,
};
use crate::par;

const SALT: u64 = 0x9C;

/// Censoring marker in [`ReturnTimes::times`].
pub const CENSORED: u64 = u64::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EiMethod {
    /// `1 - sum of q_k`.
    Qk,
    /// `1 - hat alpha_2` from the cluster law.
    AlphaHat,
    /// `-log P(M_n <= u_n) / tau` from block maxima.
    Block,
}

impl EiMethod {
    pub fn name(self) -> &'static str {
        match self {
            EiMethod::Qk => "qk",
            EiMethod::AlphaHat => "alpha_hat",
            EiMethod::Block => "block",
        }
    }
}

/// Extremal index estimate.
#[derive(Debug, Clone, Serialize)]
pub struct EiEstimate {
    /// `q_0 ..= q_{k_max}`; empty unless the method is [`EiMethod::Qk`].
    pub q: Vec<EstimatorResult>,
    pub theta: EstimatorResult,
    pub method: EiMethod,
}

impl EiEstimate {
    pub fn q_sum(&self) -> f64 {
        self.q.iter().map(|e| e.estimate).sum()
    }
}

/// First return times to a ball for orbits started from the SRB measure
/// conditioned on the ball.
#[derive(Debug, Clone)]
pub struct ReturnTimes {
    /// Return time per sample (>= 1), or [`CENSORED`] when beyond `cap`.
    pub times: Vec<u64>,
    pub cap: u64,
    pub rejected: u64,
}

impl ReturnTimes {
    pub fn n(&self) -> u64 {
        self.times.len() as u64
    }

    /// Samples that had not returned by step `t`.
    pub fn not_returned_by(&self, t: u64) -> u64 {
        self.times.iter().filter(|&&s| s > t).count() as u64
    }

    /// `q_k` for `k <= k_max` and `theta = 1 - sum q_k`. Requires `k_max < cap`.
    pub fn estimate(&self, k_max: u64) -> Result<EiEstimate> {
        if k_max >= self.cap {
            return Err(Error::InvalidInput(format!(
                "k_max = {k_max} needs return times up to {}, recorded up to {}",
                k_max + 1,
                self.cap
            )));
        }
        let n = self.n();
        let mut counts = vec![0u64; k_max as usize + 1];
        for &t in &self.times {
            if t >= 1 && t <= k_max + 1 {
                counts[t as usize - 1] += 1;
            }
        }
        Ok(EiEstimate {
            q: counts
                .iter()
                .map(|&c| EstimatorResult::bernoulli(c, n))
                .collect(),
            theta: EstimatorResult::bernoulli(self.not_returned_by(k_max + 1), n),
            method: EiMethod::Qk,
        })
    }
}

/// Sample `n` points of the SRB measure conditioned on `ball` and record when
/// each orbit first re-enters the ball, up to `cap` steps.
pub fn first_return_times(
    ball: &Ball,
    sampler: &SrbSampler,
    n: u64,
    cap: u64,
) -> Result<ReturnTimes> {
    if n == 0 || cap == 0 {
        return Err(Error::InvalidInput(
            "first_return_times needs n >= 1 and cap >= 1".into(),
        ));
    }
    let cs = ConditionalSampler::new(sampler.params(), ball)?;
    let chunk = (cap + 1).min(2048) as usize;
    let blocks = par::map_blocks(n, par::BLOCK_SIZE, |b, k| {
        let mut runner = OrbitRunner::new(sampler, sampler.rng(SALT, b), chunk);
        let mut rejected = 0;
        let mut times = Vec::with_capacity(k as usize);
        for _ in 0..k {
            let t = with_resampling(&mut rejected, || {
                runner.start_conditional(&cs)?;
                runner.next_point()?;
                for step in 1..=cap {
                    if ball.contains(runner.next_point()?) {
                        return Ok(step);
                    }
                }
                Ok(CENSORED)
            })?;
            times.push(t);
        }
        Ok((times, rejected))
    })?;
    let mut times = Vec::with_capacity(n as usize);
    let mut rejected = 0;
    for (t, r) in blocks {
        times.extend(t);
        rejected += r;
    }
    if rejected > 0 {
        log::info!("{rejected} conditioned orbits resampled near the discontinuity line");
    }
    Ok(ReturnTimes {
        times,
        cap,
        rejected,
    })
}

/// `q_k` for `k <= k_max` from `n` samples of the SRB measure conditioned on
/// `ball`: the fraction of orbits whose first return happens at step `k + 1`.
pub fn qk_estimator(ball: &Ball, k_max: u64, sampler: &SrbSampler, n: u64) -> Result<EiEstimate> {
    first_return_times(ball, sampler, n, k_max + 1)?.estimate(k_max)
}

/// Outcome of raising `k_max` until the partial sums of `q_k` reach 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PoincareCheck {
    /// First `k_max` on the doubling schedule with tail mass below the target.
    pub k_tail: Option<u64>,
    pub tail_at_k_tail: f64,
    /// First `k_max` at which `|1 - sum| <= 3 SE(sum)`.
    pub k_consistent: Option<u64>,
    /// `sum_{k <= k_max} q_k` at the last `k_max` examined.
    pub sum: EstimatorResult,
    pub k_last: u64,
}

impl PoincareCheck {
    pub fn passed(&self) -> bool {
        self.k_tail.is_some() && self.k_consistent.is_some()
    }
}

/// Double `k_max` from `k_start` (while below the recorded cap) until the tail
/// `1 - sum q_k` drops below `tail_target`, then keep doubling until the partial
/// sum is within three standard errors of 1.
pub fn poincare_normalization(
    times: &ReturnTimes,
    k_start: u64,
    tail_target: f64,
) -> PoincareCheck {
    let n = times.n();
    let mut k = k_start.max(1);
    let mut out = PoincareCheck {
        k_tail: None,
        tail_at_k_tail: f64::NAN,
        k_consistent: None,
        sum: EstimatorResult::new(f64::NAN, f64::NAN, n),
        k_last: k,
    };
    while k < times.cap {
        let tail = times.not_returned_by(k + 1);
        let sum = EstimatorResult::bernoulli(n - tail, n);
        out.sum = sum;
        out.k_last = k;
        let tail_frac = tail as f64 / n as f64;
        if out.k_tail.is_none() && tail_frac < tail_target {
            out.k_tail = Some(k);
            out.tail_at_k_tail = tail_frac;
        }
        if out.k_tail.is_some() && (1.0 - sum.estimate).abs() <= 3.0 * sum.std_error {
            out.k_consistent = Some(k);
            break;
        }
        k = k.saturating_mul(2);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbolic::{BakerParams, Metric, Point};

    fn sampler() -> SrbSampler {
        SrbSampler::new(BakerParams::classical(), 5)
    }

    #[test]
    fn fixed_point_returns_immediately_half_the_time() {
        let ball = Ball::new(Point::new(0.0, 0.0), 1.0 / 64.0, Metric::Sup).unwrap();
        let e = qk_estimator(&ball, 16, &sampler(), 40_000).unwrap();
        assert!(e.q[0].z_to(0.5) < 4.0, "{:?}", e.q[0]);
        assert!(e.q[1..].iter().all(|q| q.estimate < 0.01));
        assert!(e.theta.z_to(0.5) < 4.0 || (e.theta.estimate - 0.5).abs() < 0.02);
        let partial: Vec<f64> =
            e.q.iter()
                .scan(0.0, |s, q| {
                    *s += q.estimate;
                    Some(*s)
                })
                .collect();
        assert!(partial.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn period_two_returns_at_step_two() {
        let ball = Ball::new(Point::new(2.0 / 3.0, 1.0 / 3.0), 1.0 / 128.0, Metric::Sup).unwrap();
        let e = qk_estimator(&ball, 8, &sampler(), 40_000).unwrap();
        assert!(e.q[1].z_to(0.25) < 4.0, "{:?}", e.q[1]);
        assert_eq!(e.q[0].estimate, 0.0);
        assert!((e.theta.estimate - 0.75).abs() < 0.02);
    }

    #[test]
    fn estimate_needs_recorded_horizon() {
        let ball = Ball::new(Point::new(0.5, 0.5), 0.1, Metric::Sup).unwrap();
        let rt = first_return_times(&ball, &sampler(), 100, 4).unwrap();
        assert!(rt.estimate(3).is_ok());
        assert!(rt.estimate(4).is_err());
    }

    #[test]
    fn poincare_sums_reach_one() {
        let ball = Ball::new(Point::new(0.0, 0.0), 0.125, Metric::Sup).unwrap();
        let rt = first_return_times(&ball, &sampler(), 5000, 1 << 14).unwrap();
        let c = poincare_normalization(&rt, 16, 1e-3);
        assert!(c.passed(), "{c:?}");
    }
}
