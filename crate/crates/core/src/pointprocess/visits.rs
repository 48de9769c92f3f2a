use std::collections::BTreeMap;

use serde::Serialize;

use super::pmf::{poisson_pmf, polya_aeppli_pmf, tv_distance};
use crate::error::{Error, Result};
use crate::measure::{srb_ball_measure, with_resampling, Ball, OrbitRunner, SrbSampler};
use crate::par;

const SALT: u64 = 0x715;

/// Horizons beyond this many steps are refused.
pub const MAX_HORIZON: u64 = 1 << 36;

/// Distribution of `N = sum_{i=0}^{horizon} 1_U(T^i z)` over SRB-distributed `z`.
#[derive(Debug, Clone, Serialize)]
pub struct VisitHistogram {
    /// Visit count → number of samples.
    pub counts: BTreeMap<u64, u64>,
    pub n_samples: u64,
    pub t: f64,
    /// `floor(t / mu(U))`.
    pub horizon: u64,
    /// SRB measure of the ball used for the horizon.
    pub measure: f64,
    #[serde(skip)]
    pub ball: Option<Ball>,
    pub rejected: u64,
}

impl VisitHistogram {
    /// Empirical mass function on `0 ..= max observed count`.
    pub fn frequencies(&self) -> Vec<f64> {
        let len = self
            .counts
            .keys()
            .next_back()
            .map_or(0, |&k| k as usize + 1);
        let mut f = vec![0.0; len];
        for (&k, &c) in &self.counts {
            f[k as usize] = c as f64 / self.n_samples as f64;
        }
        f
    }

    pub fn mean(&self) -> f64 {
        self.counts
            .iter()
            .map(|(&k, &c)| (k * c) as f64)
            .sum::<f64>()
            / self.n_samples as f64
    }
}

/// Limit law for visit counts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum ReferenceLaw {
    Poisson { t: f64 },
    PolyaAeppli { theta: f64, t: f64 },
}

impl ReferenceLaw {
    pub fn polya_aeppli(theta: f64, t: f64) -> Result<Self> {
        polya_aeppli_pmf(theta, t, 0)?;
        Ok(Self::PolyaAeppli { theta, t })
    }

    pub fn pmf(&self, k: u64) -> f64 {
        match *self {
            Self::Poisson { t } => poisson_pmf(t, k),
            Self::PolyaAeppli { theta, t } => {
                polya_aeppli_pmf(theta, t, k).expect("parameters validated at construction")
            }
        }
    }
}

/// Total variation distance between the histogram and `law`, counting the law's
/// mass beyond the largest observed count.
pub fn gof_distance(hist: &VisitHistogram, law: &ReferenceLaw) -> f64 {
    let f = hist.frequencies();
    let reference: Vec<f64> = (0..f.len() as u64).map(|k| law.pmf(k)).collect();
    tv_distance(&f, &reference)
}

/// Visit counts to `ball` over the horizon `floor(t / mu(ball))`, for `n` SRB
/// samples.
///
/// The ball measure comes from the deterministic quadrature in
/// [`srb_ball_measure`], accurate to a relative `1e-6`, so the horizon carries no
/// sampling error.
pub fn visit_counts(ball: &Ball, t: f64, sampler: &SrbSampler, n: u64) -> Result<VisitHistogram> {
    Ok(visit_counts_multi(ball, &[t], sampler, n)?.remove(0))
}

/// As [`visit_counts`] for several `t`, sharing one orbit per sample.
pub fn visit_counts_multi(
    ball: &Ball,
    ts: &[f64],
    sampler: &SrbSampler,
    n: u64,
) -> Result<Vec<VisitHistogram>> {
    if ts.is_empty() || n == 0 {
        return Err(Error::InvalidInput(
            "visit counts need at least one t and n >= 1".into(),
        ));
    }
    let measure = srb_ball_measure(sampler.params(), ball);
    if !(measure > 0.0) {
        return Err(Error::ZeroHits {
            what: "ball (zero SRB measure)".into(),
        });
    }
    let horizons = ts
        .iter()
        .map(|&t| {
            if !(t > 0.0 && t.is_finite()) {
                return Err(Error::InvalidInput(format!("t = {t} must be positive")));
            }
            let h = (t / measure).floor();
            if h < 1.0 {
                return Err(Error::InvalidInput(format!(
                    "horizon floor(t / mu) = {h} for t = {t}, mu = {measure}; must be >= 1"
                )));
            }
            if h > MAX_HORIZON as f64 {
                return Err(Error::InvalidInput(format!(
                    "horizon {h} exceeds {MAX_HORIZON} steps; use a larger ball or smaller t"
                )));
            }
            Ok(h as u64)
        })
        .collect::<Result<Vec<u64>>>()?;
    let longest = *horizons.iter().max().expect("nonempty");
    let blocks = par::map_blocks(n, par::BLOCK_SIZE, |b, k| {
        let mut runner = OrbitRunner::new(sampler, sampler.rng(SALT, b), 2048);
        let mut counts = vec![BTreeMap::<u64, u64>::new(); horizons.len()];
        let mut rejected = 0;
        let mut hits = vec![0u64; horizons.len()];
        for _ in 0..k {
            with_resampling(&mut rejected, || {
                hits.iter_mut().for_each(|h| *h = 0);
                runner.start_srb();
                for i in 0..=longest {
                    if ball.contains(runner.next_point()?) {
                        for (h, &hz) in hits.iter_mut().zip(&horizons) {
                            *h += u64::from(i <= hz);
                        }
                    }
                }
                Ok(())
            })?;
            for (c, &h) in counts.iter_mut().zip(&hits) {
                *c.entry(h).or_default() += 1;
            }
        }
        Ok((counts, rejected))
    })?;
    let mut merged = vec![BTreeMap::<u64, u64>::new(); horizons.len()];
    let mut rejected = 0;
    for (counts, r) in blocks {
        rejected += r;
        for (m, c) in merged.iter_mut().zip(counts) {
            for (k, v) in c {
                *m.entry(k).or_default() += v;
            }
        }
    }
    Ok(merged
        .into_iter()
        .zip(ts.iter().zip(&horizons))
        .map(|(counts, (&t, &horizon))| VisitHistogram {
            counts,
            n_samples: n,
            t,
            horizon,
            measure,
            ball: Some(ball.clone()),
            rejected,
        })
        .collect())
}
