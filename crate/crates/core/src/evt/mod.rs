//! Block maxima of the log-distance observable.

mod gumbel;
mod qk;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::measure::{srb_ball_measure, Ball};
use crate::symbolic::{BakerParams, Metric, Orbit, Point, SymbolicPoint};

pub use gumbel::{gumbel_experiment, lebesgue_start_experiment, EvtConfig, GumbelResult, Start};
pub use qk::{
    first_return_times, poincare_normalization, qk_estimator, EiEstimate, EiMethod, PoincareCheck,
    ReturnTimes,
};

/// `-log d(p, center)`; infinite when `p == center`.
#[inline]
pub fn observable_phi(p: Point, center: Point, metric: Metric) -> f64 {
    -metric.distance(p, center).ln()
}

/// `max(phi(z), ..., phi(T^{n-1} z))` along the orbit of a stored point.
pub fn block_maximum(p: &SymbolicPoint, n: usize, center: Point, metric: Metric) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidInput("block length must be positive".into()));
    }
    let (mut orbit, mut src) = Orbit::from_point_for(p, n)?;
    let mut m = f64::NEG_INFINITY;
    for _ in 0..n {
        m = m.max(observable_phi(orbit.next_point(&mut src)?, center, metric));
    }
    Ok(m)
}

/// Threshold `u_n` with `n mu(B(z, e^{-u_n})) = tau`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Threshold {
    pub u: f64,
    pub radius: f64,
    /// SRB measure of the ball of that radius.
    pub measure: f64,
    /// Whether the classical closed form was used.
    pub closed_form: bool,
}

const BISECTION_LO: f64 = 1e-15;
const BISECTION_HI: f64 = 0.5 * (1.0 - 1e-12);

/// Solve `n mu(B(center, r)) = tau` for `r = e^{-u}`.
///
/// Interior balls of the classical map use the closed forms `4 r^2` (sup) and
/// `pi r^2` (Euclidean); otherwise `log r` is bisected against the
/// deterministic SRB ball measure.
pub fn threshold_for_tau(
    params: &BakerParams,
    center: Point,
    metric: Metric,
    tau: f64,
    n: u64,
) -> Result<Threshold> {
    if !(tau > 0.0) || n == 0 {
        return Err(Error::InvalidInput(format!(
            "threshold needs tau > 0 and n >= 1, got tau = {tau}, n = {n}"
        )));
    }
    let target = tau / n as f64;
    if target >= 1.0 {
        return Err(Error::InvalidInput(format!(
            "tau / n = {target} must be below 1"
        )));
    }
    if params.is_classical() {
        let area = match metric {
            Metric::Sup => 4.0,
            Metric::Euclidean => std::f64::consts::PI,
        };
        let r = (target / area).sqrt();
        if r < 0.5 && Ball::new(center, r, metric)?.is_interior() {
            return Ok(Threshold {
                u: -r.ln(),
                radius: r,
                measure: target,
                closed_form: true,
            });
        }
    }
    let measure = |r: f64| Ball::new(center, r, metric).map(|b| srb_ball_measure(params, &b));
    let (mut lo, mut hi) = (BISECTION_LO.ln(), BISECTION_HI.ln());
    let (f_lo, f_hi) = (measure(lo.exp())?, measure(hi.exp())?);
    if !(f_lo < target && f_hi >= target) {
        return Err(Error::NoBracket {
            target,
            lo: lo.exp(),
            hi: hi.exp(),
            f_lo,
            f_hi,
        });
    }
    while hi - lo > 1e-13 {
        let mid = 0.5 * (lo + hi);
        if measure(mid.exp())? < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let r = hi.exp();
    Ok(Threshold {
        u: -r.ln(),
        radius: r,
        measure: measure(r)?,
        closed_form: false,
    })
}
