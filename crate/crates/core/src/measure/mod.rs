//! SRB sampling and measure estimates.

mod ball_measure;
mod dimension;
mod ifs;
mod sampler;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::symbolic::{Metric, Point, SymbolicPoint};

pub use ball_measure::{ball_measure, srb_ball_measure};
pub use dimension::{
    annulus_ratio, annulus_schedule, dimension_formula, fit_annulus_exponent, local_dimension, ols,
    t_quantile_95, AnnulusFit, LinearFit, LocalDimension,
};
pub use ifs::{Cylinder, SelfSimilar, MAX_COVER_DEPTH};
pub use sampler::{
    sample_srb, with_resampling, ConditionalSampler, OrbitRunner, SrbSampler, MAX_RESAMPLES,
};

/// Point estimate with its Monte Carlo standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EstimatorResult {
    pub estimate: f64,
    pub std_error: f64,
    pub n_samples: u64,
}

impl EstimatorResult {
    pub fn new(estimate: f64, std_error: f64, n_samples: u64) -> Self {
        Self {
            estimate,
            std_error,
            n_samples,
        }
    }

    /// Frequency of `successes` among `n` trials; the standard error is the sample
    /// standard deviation of the indicators over `sqrt(n)`.
    pub fn bernoulli(successes: u64, n: u64) -> Self {
        if n == 0 {
            return Self::new(f64::NAN, f64::NAN, 0);
        }
        let p = successes as f64 / n as f64;
        let se = if n > 1 {
            (p * (1.0 - p) / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        Self::new(p, se, n)
    }

    /// Sample mean of values with running sums `sum` and `sum_sq`.
    pub fn from_moments(sum: f64, sum_sq: f64, n: u64) -> Self {
        if n == 0 {
            return Self::new(f64::NAN, f64::NAN, 0);
        }
        let nf = n as f64;
        let mean = sum / nf;
        let var = if n > 1 {
            ((sum_sq - nf * mean * mean) / (nf - 1.0)).max(0.0)
        } else {
            0.0
        };
        Self::new(mean, (var / nf).sqrt(), n)
    }

    /// Multiply estimate and error by a known constant.
    pub fn scaled(self, c: f64) -> Self {
        Self::new(self.estimate * c, self.std_error * c.abs(), self.n_samples)
    }

    /// Combined standard error with an independent estimate.
    pub fn combined_se(&self, other: &Self) -> f64 {
        self.std_error.hypot(other.std_error)
    }

    /// `|a - b|` in units of the combined standard error.
    pub fn z_against(&self, other: &Self) -> f64 {
        (self.estimate - other.estimate).abs() / self.combined_se(other)
    }

    /// `|estimate - value|` in standard errors.
    pub fn z_to(&self, value: f64) -> f64 {
        (self.estimate - value).abs() / self.std_error
    }
}

/// A ball in the unit square, open, intersected with the square.
#[derive(Debug, Clone)]
pub struct Ball {
    center: Point,
    radius: f64,
    metric: Metric,
    coding: Option<SymbolicPoint>,
}

impl Ball {
    pub fn new(center: Point, radius: f64, metric: Metric) -> Result<Self> {
        let in_unit = |v: f64| (0.0..=1.0).contains(&v);
        if !in_unit(center.x) || !in_unit(center.y) {
            return Err(Error::InvalidInput(format!(
                "center ({}, {}) outside the unit square",
                center.x, center.y
            )));
        }
        if !(radius > 0.0 && radius < 0.5) {
            return Err(Error::InvalidInput(format!(
                "radius {radius} not in (0, 1/2)"
            )));
        }
        let ball = Self {
            center,
            radius,
            metric,
            coding: None,
        };
        if !ball.is_interior() {
            log::debug!(
                "ball at ({}, {}) radius {radius} is clipped by the square",
                center.x,
                center.y
            );
        }
        Ok(ball)
    }

    /// Attach the symbolic coding of the center.
    pub fn with_coding(mut self, coding: SymbolicPoint) -> Self {
        self.coding = Some(coding);
        self
    }

    pub fn center(&self) -> Point {
        self.center
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn metric(&self) -> Metric {
        self.metric
    }

    pub fn coding(&self) -> Option<&SymbolicPoint> {
        self.coding.as_ref()
    }

    /// Same center and metric, new radius.
    pub fn with_radius(&self, radius: f64) -> Result<Self> {
        let mut b = Self::new(self.center, radius, self.metric)?;
        b.coding = self.coding.clone();
        Ok(b)
    }

    #[inline]
    pub fn contains(&self, p: Point) -> bool {
        self.metric.distance(p, self.center) < self.radius
    }

    /// Bounding box `(x_lo, x_hi, y_lo, y_hi)` clipped to the square.
    pub fn bounding_box(&self) -> (f64, f64, f64, f64) {
        let r = self.radius;
        (
            (self.center.x - r).max(0.0),
            (self.center.x + r).min(1.0),
            (self.center.y - r).max(0.0),
            (self.center.y + r).min(1.0),
        )
    }

    pub fn is_interior(&self) -> bool {
        let r = self.radius;
        let c = self.center;
        c.x - r >= 0.0 && c.x + r <= 1.0 && c.y - r >= 0.0 && c.y + r <= 1.0
    }

    /// Fraction of the ball's area lying outside the square.
    pub fn clipped_fraction(&self) -> f64 {
        if self.is_interior() {
            return 0.0;
        }
        let (x_lo, x_hi, y_lo, y_hi) = self.bounding_box();
        let r = self.radius;
        match self.metric {
            Metric::Sup => 1.0 - (x_hi - x_lo) * (y_hi - y_lo) / (4.0 * r * r),
            Metric::Euclidean => {
                let steps = 4096;
                let h = (x_hi - x_lo) / steps as f64;
                let inside: f64 = (0..steps)
                    .map(|i| {
                        let x = x_lo + (i as f64 + 0.5) * h;
                        let half = (r * r - (x - self.center.x).powi(2)).max(0.0).sqrt();
                        ((self.center.y + half).min(1.0) - (self.center.y - half).max(0.0)).max(0.0)
                    })
                    .sum::<f64>()
                    * h;
                (1.0 - inside / (std::f64::consts::PI * r * r)).max(0.0)
            }
        }
    }
}
