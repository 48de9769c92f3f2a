use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::measure::{
    with_resampling, Ball, ConditionalSampler, EstimatorResult, OrbitRunner, SrbSampler,
};
use crate::par;

const SALT_CLUSTER: u64 = 0xC1;
const SALT_RUNS: u64 = 0xC2;
const MIN_HITS: u64 = 100;

/// Deviation, in combined standard errors, above which clusters are declared
/// non-geometric.
pub const GEOMETRIC_Z_LIMIT: f64 = 5.0;

/// Cluster statistics at a candidate period `p`.
///
/// Index `i` of each vector holds the quantity with subscript `i + 1`.
#[derive(Debug, Clone, Serialize)]
pub struct ClusterLaw {
    pub period: u64,
    /// `hat alpha_1 ..= hat alpha_{k_max + 1}`: probability, given a point of the
    /// ball, that its next `k` iterates under `T^p` stay in the ball.
    pub alpha_hat: Vec<EstimatorResult>,
    /// `alpha_k = hat alpha_k - hat alpha_{k+1}` for `k = 1 ..= k_max`.
    pub alpha: Vec<EstimatorResult>,
    /// `lambda_k = (alpha_k - alpha_{k+1}) / alpha_1` for `k = 1 ..= k_max - 1`.
    pub lambda: Vec<EstimatorResult>,
    /// Extremal index `alpha_1`.
    pub theta: EstimatorResult,
    pub rejected: u64,
}

/// Estimate the cluster law from `n` points of the SRB measure conditioned on `ball`.
pub fn estimate_cluster_law(
    ball: &Ball,
    p: u64,
    sampler: &SrbSampler,
    n: u64,
    k_max: usize,
) -> Result<ClusterLaw> {
    if p == 0 || k_max == 0 {
        return Err(Error::InvalidInput(
            "cluster law needs p >= 1 and k_max >= 1".into(),
        ));
    }
    if n < MIN_HITS {
        return Err(Error::InvalidInput(format!(
            "cluster law needs at least {MIN_HITS} ball hits, got n = {n}"
        )));
    }
    let cs = ConditionalSampler::new(sampler.params(), ball)?;
    let chunk = (p as usize * k_max + 1).min(2048);
    let blocks = par::map_blocks(n, par::BLOCK_SIZE, |b, k| {
        let mut runner = OrbitRunner::new(sampler, sampler.rng(SALT_CLUSTER, b), chunk);
        // runs[j]: samples staying exactly j returns.
        let mut runs = vec![0u64; k_max + 1];
        let mut rejected = 0;
        for _ in 0..k {
            let j = with_resampling(&mut rejected, || {
                runner.start_conditional(&cs)?;
                runner.next_point()?;
                for j in 0..k_max {
                    for _ in 1..p {
                        runner.next_point()?;
                    }
                    if !ball.contains(runner.next_point()?) {
                        return Ok(j);
                    }
                }
                Ok(k_max)
            })?;
            runs[j] += 1;
        }
        Ok((runs, rejected))
    })?;
    let mut runs = vec![0u64; k_max + 1];
    let mut rejected = 0;
    for (r, rej) in blocks {
        runs.iter_mut().zip(&r).for_each(|(a, b)| *a += b);
        rejected += rej;
    }
    Ok(ClusterLaw::from_runs(p, &runs, rejected))
}

impl ClusterLaw {
    /// Build from the number of samples with exactly `j` consecutive returns,
    /// `j = 0 ..= k_max` (the last entry counting `k_max` or more).
    fn from_runs(period: u64, runs: &[u64], rejected: u64) -> Self {
        let n: u64 = runs.iter().sum();
        let k_max = runs.len() - 1;
        // at_least[k] = #{j >= k}
        let mut at_least = vec![0u64; k_max + 1];
        let mut acc = 0;
        for k in (0..=k_max).rev() {
            acc += runs[k];
            at_least[k] = acc;
        }
        let alpha_hat = at_least
            .iter()
            .map(|&c| EstimatorResult::bernoulli(c, n))
            .collect();
        let alpha: Vec<EstimatorResult> = runs[..k_max]
            .iter()
            .map(|&c| EstimatorResult::bernoulli(c, n))
            .collect();
        let theta = alpha[0];
        let nf = n as f64;
        let lambda = (0..k_max.saturating_sub(1))
            .map(|i| {
                let (a, b) = (runs[i] as f64 / nf, runs[i + 1] as f64 / nf);
                let mean = a - b;
                let var = (a + b - mean * mean).max(0.0);
                let se = (var / (nf - 1.0)).sqrt();
                EstimatorResult::new(mean / theta.estimate, se / theta.estimate, n)
            })
            .collect();
        Self {
            period,
            alpha_hat,
            alpha,
            lambda,
            theta,
            rejected,
        }
    }

    pub fn k_max(&self) -> usize {
        self.alpha.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Consistent,
    Violated,
}

impl Verdict {
    pub fn name(self) -> &'static str {
        match self {
            Verdict::Consistent => "consistent",
            Verdict::Violated => "violated",
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct GeometricTest {
    pub verdict: Verdict,
    /// `max_k |z_k|`.
    pub statistic: f64,
    /// `z_k` for `k = 2 ..= k_max`.
    pub z: Vec<f64>,
}

/// Test `hat alpha_{k+1} = (hat alpha_2)^k` for each `k >= 2`, i.e. geometric
/// cluster sizes. Each deviation is scaled by the combined standard error of both
/// sides; the law is rejected when any exceeds [`GEOMETRIC_Z_LIMIT`].
pub fn geometric_cluster_test(law: &ClusterLaw) -> Result<GeometricTest> {
    if law.lambda.len() < 3 {
        return Err(Error::InvalidInput(format!(
            "geometric test needs at least 3 lambda entries, got {}",
            law.lambda.len()
        )));
    }
    let a2 = law.alpha_hat[1];
    let z: Vec<f64> = (2..=law.k_max())
        .map(|k| {
            let ak = law.alpha_hat[k];
            let kf = k as f64;
            let dev = ak.estimate - a2.estimate.powi(k as i32);
            let se = ak
                .std_error
                .hypot(kf * a2.estimate.powi(k as i32 - 1) * a2.std_error);
            if dev == 0.0 {
                0.0
            } else {
                dev / se
            }
        })
        .collect();
    let statistic = z.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    Ok(GeometricTest {
        verdict: if statistic > GEOMETRIC_Z_LIMIT {
            Verdict::Violated
        } else {
            Verdict::Consistent
        },
        statistic,
        z,
    })
}

/// Cluster sizes read off stationary orbits: maximal chains of visits spaced
/// exactly `p` apart.
#[derive(Debug, Clone, Serialize)]
pub struct RunLengthLaw {
    pub period: u64,
    /// Cluster size → number of clusters.
    pub sizes: BTreeMap<u64, u64>,
    pub visits: u64,
    pub clusters: u64,
    /// `clusters / visits`.
    pub theta: EstimatorResult,
}

impl RunLengthLaw {
    /// Empirical cluster size distribution `lambda_k`, `k >= 1`.
    pub fn lambda(&self, k: u64) -> f64 {
        self.sizes.get(&k).copied().unwrap_or(0) as f64 / self.clusters as f64
    }
}

/// Run-length cross-check of [`estimate_cluster_law`] along `n_orbits` SRB orbits
/// of `length` steps.
pub fn run_length_law(
    ball: &Ball,
    p: u64,
    sampler: &SrbSampler,
    n_orbits: u64,
    length: u64,
) -> Result<RunLengthLaw> {
    if p == 0 || n_orbits == 0 || length == 0 {
        return Err(Error::InvalidInput(
            "run-length law needs p, n_orbits, length >= 1".into(),
        ));
    }
    let p = p as usize;
    let blocks = par::map_blocks(n_orbits, 16, |b, k| {
        let mut runner = OrbitRunner::new(sampler, sampler.rng(SALT_RUNS, b), 2048);
        let mut sizes: BTreeMap<u64, u64> = BTreeMap::new();
        let mut rejected = 0;
        for _ in 0..k {
            let local = with_resampling(&mut rejected, || {
                let mut local: BTreeMap<u64, u64> = BTreeMap::new();
                // chain[i % p]: length of the chain ending at the last step with that residue
                let mut chain = vec![0u64; p];
                runner.start_srb();
                for i in 0..length as usize {
                    let slot = &mut chain[i % p];
                    if ball.contains(runner.next_point()?) {
                        *slot += 1;
                    } else if *slot > 0 {
                        *local.entry(*slot).or_default() += 1;
                        *slot = 0;
                    }
                }
                for &c in chain.iter().filter(|&&c| c > 0) {
                    *local.entry(c).or_default() += 1;
                }
                Ok(local)
            })?;
            for (s, c) in local {
                *sizes.entry(s).or_default() += c;
            }
        }
        Ok(sizes)
    })?;
    let mut sizes: BTreeMap<u64, u64> = BTreeMap::new();
    for block in blocks {
        for (s, c) in block {
            *sizes.entry(s).or_default() += c;
        }
    }
    let clusters: u64 = sizes.values().sum();
    let visits: u64 = sizes.iter().map(|(s, c)| s * c).sum();
    if visits == 0 {
        return Err(Error::ZeroHits {
            what: "ball along the stationary orbits".into(),
        });
    }
    Ok(RunLengthLaw {
        period: p as u64,
        sizes,
        visits,
        clusters,
        theta: EstimatorResult::bernoulli(clusters, visits),
    })
}
