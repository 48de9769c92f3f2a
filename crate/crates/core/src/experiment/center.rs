use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{ellipse_disk_ratio, theta_sup, PeriodicGeometry};
use crate::measure::Ball;
use crate::par;
use crate::symbolic::{BakerParams, Metric, Point, SymbolicPoint, Word, DEFAULT_DEPTH};

const SALT_CENTER: u64 = 0xCE;

/// Draws of a typical center stay this far from the edges of the square.
pub const TYPICAL_MARGIN: f64 = 1.0 / 16.0;

/// A typical center must not come back within this horizontal distance of
/// itself during the first [`RECURRENCE_STEPS`] iterates.
pub const RECURRENCE_GAP: f64 = 1.0 / 256.0;
pub const RECURRENCE_STEPS: usize = 32;

const MAX_DRAWS: u64 = 10_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CenterSpec {
    /// A point drawn from the SRB measure with its own seed.
    SrbTypical { seed: u64 },
    /// The periodic point coded by the repetition of `word`.
    Periodic { word: Word },
    /// Explicit coordinates; treated as non-periodic.
    Coords { x: f64, y: f64 },
}

impl CenterSpec {
    pub(crate) fn check(&self) -> std::result::Result<(), String> {
        match self {
            Self::Coords { x, y } if !(0.0..=1.0).contains(x) || !(0.0..=1.0).contains(y) => {
                Err(format!("coords ({x}, {y}) outside the unit square"))
            }
            Self::Periodic { word } if word.len() > 64 => {
                Err(format!("periodic word of length {} exceeds 64", word.len()))
            }
            _ => Ok(()),
        }
    }

    pub fn resolve(&self, params: &BakerParams) -> Result<Center> {
        match self {
            Self::Coords { x, y } => Ok(Center {
                point: Point::new(*x, *y),
                period: None,
                word: None,
                label: format!("coords({x},{y})"),
            }),
            Self::Periodic { word } => {
                let pp = SymbolicPoint::periodic(*params, word);
                Ok(Center {
                    point: pp.point.coords()?,
                    period: Some(pp.minimal_period as u64),
                    word: Some(pp.word.clone()),
                    label: format!("periodic({})", pp.word),
                })
            }
            Self::SrbTypical { seed } => {
                let point = typical_point(params, *seed)?;
                Ok(Center {
                    point,
                    period: None,
                    word: None,
                    label: format!("srb_typical({seed})"),
                })
            }
        }
    }
}

/// Draw SRB points until one lies [`TYPICAL_MARGIN`] inside the square and
/// avoids short near-returns.
fn typical_point(params: &BakerParams, seed: u64) -> Result<Point> {
    let future_len = DEFAULT_DEPTH + RECURRENCE_STEPS;
    for draw in 0..MAX_DRAWS {
        let mut rng = par::block_rng(seed, SALT_CENTER, draw);
        let mut bits = |n: usize| -> Vec<u8> {
            (0..n)
                .map(|_| u8::from(rng.random_bool(params.beta())))
                .collect()
        };
        let past = bits(DEFAULT_DEPTH);
        let future = bits(future_len);
        let z = SymbolicPoint::from_symbols(*params, &past, &future)?;
        let p = z.coords()?;
        let inside = |v: f64| (TYPICAL_MARGIN..=1.0 - TYPICAL_MARGIN).contains(&v);
        if !inside(p.x) || !inside(p.y) {
            continue;
        }
        let mut recurrent = false;
        for k in 1..=RECURRENCE_STEPS {
            if (z.apply_shift(k)?.coords()?.x - p.x).abs() < RECURRENCE_GAP {
                recurrent = true;
                break;
            }
        }
        if !recurrent {
            return Ok(p);
        }
    }
    Err(Error::InvalidInput(format!(
        "no admissible typical center after {MAX_DRAWS} draws for seed {seed}"
    )))
}

/// A resolved ball center.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Center {
    pub point: Point,
    /// Minimal period for periodic centers.
    pub period: Option<u64>,
    pub word: Option<Word>,
    pub label: String,
}

impl Center {
    pub fn ball(&self, radius: f64, metric: Metric) -> Result<Ball> {
        Ball::new(self.point, radius, metric)
    }

    /// Extremal index predicted for small balls around this center, where known:
    /// 1 off periodic orbits, the strip formula for sup balls and the ellipse
    /// overlap for Euclidean balls of the classical map.
    pub fn reference_theta(&self, params: &BakerParams, metric: Metric) -> Option<f64> {
        let Some(word) = &self.word else {
            return Some(1.0);
        };
        match metric {
            Metric::Sup => Some(theta_sup(&PeriodicGeometry::new(*params, word))),
            Metric::Euclidean if params.is_classical() => ellipse_disk_ratio(word.len() as u32, 1)
                .ok()
                .map(|r| 1.0 - r),
            Metric::Euclidean => None,
        }
    }

    /// Predicted `hat alpha_{k+1}` at period `p`, where known.
    pub fn reference_alpha_hat(&self, params: &BakerParams, metric: Metric, k: u32) -> Option<f64> {
        let word = self.word.as_ref()?;
        match metric {
            Metric::Sup => Some(
                PeriodicGeometry::new(*params, word)
                    .y_factor()
                    .powi(k as i32),
            ),
            Metric::Euclidean if params.is_classical() => {
                ellipse_disk_ratio(word.len() as u32, k).ok()
            }
            Metric::Euclidean => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn periodic_and_coords() {
        let c = BakerParams::classical();
        let fixed = CenterSpec::Periodic {
            word: "00".parse().unwrap(),
        }
        .resolve(&c)
        .unwrap();
        assert_eq!(fixed.period, Some(1));
        assert_eq!(fixed.point, Point::new(0.0, 0.0));
        assert_eq!(fixed.reference_theta(&c, Metric::Sup), Some(0.5));
        let two = CenterSpec::Periodic {
            word: "01".parse().unwrap(),
        }
        .resolve(&c)
        .unwrap();
        assert!((two.point.x - 1.0 / 3.0).abs() < 1e-15 || (two.point.x - 2.0 / 3.0).abs() < 1e-15);
        let e = two.reference_theta(&c, Metric::Euclidean).unwrap();
        assert!(e > 0.5 && e < 1.0);
        let free = CenterSpec::Coords { x: 0.3, y: 0.7 }.resolve(&c).unwrap();
        assert_eq!(free.reference_theta(&c, Metric::Euclidean), Some(1.0));
        assert_eq!(free.reference_alpha_hat(&c, Metric::Sup, 1), None);
        let dissipative = BakerParams::symmetric(0.5, 0.25).unwrap();
        assert_eq!(fixed.reference_theta(&dissipative, Metric::Euclidean), None);
    }

    #[test]
    fn typical_centers_are_reproducible_and_admissible() {
        let c = BakerParams::classical();
        let spec = CenterSpec::SrbTypical { seed: 7 };
        let a = spec.resolve(&c).unwrap();
        assert_eq!(a, spec.resolve(&c).unwrap());
        assert!(a.point.x >= TYPICAL_MARGIN && a.point.y <= 1.0 - TYPICAL_MARGIN);
        assert_ne!(
            a.point,
            CenterSpec::SrbTypical { seed: 8 }
                .resolve(&c)
                .unwrap()
                .point
        );
    }
}
