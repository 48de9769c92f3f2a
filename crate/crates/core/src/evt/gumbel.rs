use serde::Serialize;

use super::{threshold_for_tau, Threshold};
use crate::error::{Error, Result};
use crate::measure::{with_resampling, Ball, EstimatorResult, OrbitRunner, SrbSampler};
use crate::par;
use crate::symbolic::{BakerParams, Metric, Point};

const SALT_SRB: u64 = 0x6B;
const SALT_LEBESGUE: u64 = 0x1EB;

/// One cell of a block-maxima experiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EvtConfig {
    pub params: BakerParams,
    pub center: Point,
    pub metric: Metric,
    pub tau: f64,
    /// Block length.
    pub n: u64,
    pub n_samples: u64,
    pub seed: u64,
}

impl EvtConfig {
    fn validate(&self) -> Result<()> {
        if !(self.tau >= 0.0) || !self.tau.is_finite() {
            return Err(Error::InvalidInput(format!(
                "tau = {} must be >= 0",
                self.tau
            )));
        }
        if self.n < 2 {
            return Err(Error::InvalidInput(format!(
                "block length n = {} must be >= 2",
                self.n
            )));
        }
        if self.n_samples == 0 {
            return Err(Error::InvalidInput("n_samples must be positive".into()));
        }
        Ok(())
    }
}

/// Distribution of the initial point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Start {
    Srb,
    /// Lebesgue measure on the square followed by `burn_in` discarded steps.
    Lebesgue {
        burn_in: usize,
    },
}

#[derive(Debug, Clone, Serialize)]
pub struct GumbelResult {
    pub config: EvtConfig,
    pub start: Start,
    /// `None` when `tau = 0`.
    pub threshold: Option<Threshold>,
    /// Empirical `P(M_n <= u_n)`.
    pub p_hat: EstimatorResult,
    /// `-log(p_hat) / tau`.
    pub theta_hat: EstimatorResult,
    pub theta_ref: f64,
    /// `exp(-theta_ref tau)`.
    pub reference: f64,
    /// Orbits resampled after touching the discontinuity line.
    pub rejected: u64,
}

impl GumbelResult {
    /// `|p_hat - reference|` in standard errors.
    pub fn z(&self) -> f64 {
        self.p_hat.z_to(self.reference)
    }
}

/// Extremal index from a survival probability, with the delta-method error.
pub(crate) fn theta_from_survival(p: &EstimatorResult, tau: f64) -> EstimatorResult {
    if tau == 0.0 || p.estimate <= 0.0 {
        return EstimatorResult::new(f64::NAN, f64::NAN, p.n_samples);
    }
    EstimatorResult::new(
        -p.estimate.ln() / tau,
        p.std_error / (p.estimate * tau),
        p.n_samples,
    )
}

/// Fraction of SRB-distributed orbits of length `n` that avoid the ball of
/// measure `tau / n` around the center.
///
/// `theta_ref` defaults to 1 (non-periodic center).
pub fn gumbel_experiment(cfg: &EvtConfig, theta_ref: Option<f64>) -> Result<GumbelResult> {
    run(cfg, Start::Srb, theta_ref.unwrap_or(1.0))
}

/// As [`gumbel_experiment`] with Lebesgue-distributed initial points and
/// `burn_in` discarded iterations.
pub fn lebesgue_start_experiment(
    cfg: &EvtConfig,
    burn_in: usize,
    theta_ref: Option<f64>,
) -> Result<GumbelResult> {
    run(cfg, Start::Lebesgue { burn_in }, theta_ref.unwrap_or(1.0))
}

fn run(cfg: &EvtConfig, start: Start, theta_ref: f64) -> Result<GumbelResult> {
    cfg.validate()?;
    let reference = (-theta_ref * cfg.tau).exp();
    if cfg.tau == 0.0 {
        let p_hat = EstimatorResult::new(1.0, 0.0, cfg.n_samples);
        return Ok(GumbelResult {
            config: *cfg,
            start,
            threshold: None,
            theta_hat: theta_from_survival(&p_hat, 0.0),
            p_hat,
            theta_ref,
            reference,
            rejected: 0,
        });
    }
    let threshold = threshold_for_tau(&cfg.params, cfg.center, cfg.metric, cfg.tau, cfg.n)?;
    let ball = Ball::new(cfg.center, threshold.radius, cfg.metric)?;
    let sampler = SrbSampler::new(cfg.params, cfg.seed);
    let salt = match start {
        Start::Srb => SALT_SRB,
        Start::Lebesgue { .. } => SALT_LEBESGUE,
    };
    let chunk = cfg.n.min(1024) as usize;
    let blocks = par::map_blocks(cfg.n_samples, par::BLOCK_SIZE, |b, k| {
        let mut runner = OrbitRunner::new(&sampler, sampler.rng(salt, b), chunk);
        let (mut survived, mut rejected) = (0u64, 0u64);
        for _ in 0..k {
            let hit = with_resampling(&mut rejected, || {
                match start {
                    Start::Srb => runner.start_srb(),
                    Start::Lebesgue { burn_in } => runner.start_lebesgue(burn_in)?,
                }
                for _ in 0..cfg.n {
                    if ball.contains(runner.next_point()?) {
                        return Ok(true);
                    }
                }
                Ok(false)
            })?;
            survived += u64::from(!hit);
        }
        Ok((survived, rejected))
    })?;
    let (survived, rejected) = blocks.iter().fold((0, 0), |(a, b), &(s, r)| (a + s, b + r));
    if rejected > 0 {
        log::info!("{rejected} orbits resampled near the discontinuity line");
    }
    let p_hat = EstimatorResult::bernoulli(survived, cfg.n_samples);
    Ok(GumbelResult {
        config: *cfg,
        start,
        threshold: Some(threshold),
        theta_hat: theta_from_survival(&p_hat, cfg.tau),
        p_hat,
        theta_ref,
        reference,
        rejected,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(center: Point, metric: Metric, tau: f64) -> EvtConfig {
        EvtConfig {
            params: BakerParams::classical(),
            center,
            metric,
            tau,
            n: 512,
            n_samples: 20_000,
            seed: 17,
        }
    }

    #[test]
    fn fixed_point_has_index_one_half() {
        let r = gumbel_experiment(&cfg(Point::new(0.0, 0.0), Metric::Sup, 1.0), Some(0.5)).unwrap();
        assert!(r.z() < 4.0, "{:?} vs {}", r.p_hat, r.reference);
    }

    #[test]
    fn generic_center_is_poisson() {
        let r = gumbel_experiment(
            &cfg(Point::new(0.3141, 0.5926), Metric::Euclidean, 1.0),
            None,
        )
        .unwrap();
        assert!((r.p_hat.estimate - (-1.0f64).exp()).abs() < 4.0 * r.p_hat.std_error + 0.01);
    }

    #[test]
    fn tau_zero_and_bad_configs() {
        let r = gumbel_experiment(&cfg(Point::new(0.5, 0.5), Metric::Sup, 0.0), None).unwrap();
        assert_eq!(r.p_hat.estimate, 1.0);
        let mut c = cfg(Point::new(0.5, 0.5), Metric::Sup, 1.0);
        c.n_samples = 0;
        assert!(gumbel_experiment(&c, None).is_err());
        assert!(lebesgue_start_experiment(&c, 3, None).is_err());
    }

    #[test]
    fn reproducible_and_thread_independent() {
        let c = cfg(Point::new(0.25, 0.4), Metric::Sup, 0.5);
        let a = gumbel_experiment(&c, None).unwrap();
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(3)
            .build()
            .unwrap();
        let b = pool.install(|| gumbel_experiment(&c, None).unwrap());
        assert_eq!(a.p_hat, b.p_hat);
    }

    #[test]
    fn survival_decreases_with_tau() {
        let p = |tau| {
            gumbel_experiment(&cfg(Point::new(0.7, 0.2), Metric::Sup, tau), None)
                .unwrap()
                .p_hat
                .estimate
        };
        assert!(p(0.5) > p(1.0) && p(1.0) > p(2.0));
    }
}
