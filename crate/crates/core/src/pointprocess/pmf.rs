use std::sync::OnceLock;

use crate::error::{Error, Result};

const TABLE_LEN: usize = 1024;

fn ln_factorial_table() -> &'static [f64] {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut t = Vec::with_capacity(TABLE_LEN);
        t.push(0.0);
        for i in 1..TABLE_LEN {
            t.push(t[i - 1] + (i as f64).ln());
        }
        t
    })
}

/// `ln(n!)`; tabulated below 1024, Stirling series above.
pub fn ln_factorial(n: u64) -> f64 {
    if (n as usize) < TABLE_LEN {
        return ln_factorial_table()[n as usize];
    }
    let x = n as f64 + 1.0;
    (x - 0.5) * x.ln() - x + 0.5 * (2.0 * std::f64::consts::PI).ln() + 1.0 / (12.0 * x)
        - 1.0 / (360.0 * x.powi(3))
}

fn ln_binomial(n: u64, k: u64) -> f64 {
    ln_factorial(n) - ln_factorial(k) - ln_factorial(n - k)
}

/// `e^{-t} t^k / k!`.
pub fn poisson_pmf(t: f64, k: u64) -> f64 {
    if t == 0.0 {
        return if k == 0 { 1.0 } else { 0.0 };
    }
    if k <= 200 {
        (1..=k).fold((-t).exp(), |p, i| p * t / i as f64)
    } else {
        (-t + k as f64 * t.ln() - ln_factorial(k)).exp()
    }
}

/// Compound Poisson law with Poisson(`theta t`) clusters of geometric(`theta`) size:
/// `e^{-theta t} sum_{j=1}^k (1-theta)^{k-j} theta^{2j} t^j / j! C(k-1, j-1)`,
/// and `e^{-theta t}` at `k = 0`. Its mean is `t`; at `theta = 1` it is Poisson(`t`).
pub fn polya_aeppli_pmf(theta: f64, t: f64, k: u64) -> Result<f64> {
    if !(theta > 0.0 && theta <= 1.0) {
        return Err(Error::InvalidInput(format!(
            "theta = {theta} not in (0, 1]"
        )));
    }
    if !(t >= 0.0) {
        return Err(Error::InvalidInput(format!("t = {t} must be nonnegative")));
    }
    if theta == 1.0 {
        return Ok(poisson_pmf(t, k));
    }
    if k == 0 {
        return Ok((-theta * t).exp());
    }
    if t == 0.0 {
        return Ok(0.0);
    }
    let (l1, lt, lth) = ((1.0 - theta).ln(), t.ln(), theta.ln());
    let sum: f64 = (1..=k)
        .map(|j| {
            let jf = j as f64;
            ((k - j) as f64 * l1 + 2.0 * jf * lth + jf * lt - ln_factorial(j)
                + ln_binomial(k - 1, j - 1))
            .exp()
        })
        .sum();
    Ok((-theta * t).exp() * sum)
}

/// Total variation distance `1/2 sum |a_k - b_k|` between two mass functions given
/// on initial segments of the integers. Mass missing from a list is lumped into
/// one extra cell beyond both lists.
pub fn tv_distance(a: &[f64], b: &[f64]) -> f64 {
    let len = a.len().max(b.len());
    let get = |v: &[f64], k: usize| v.get(k).copied().unwrap_or(0.0);
    let body: f64 = (0..len).map(|k| (get(a, k) - get(b, k)).abs()).sum();
    let tail = |v: &[f64]| (1.0 - v.iter().sum::<f64>()).max(0.0);
    0.5 * (body + (tail(a) - tail(b)).abs())
}
