//! Symbolic representation of the map and its orbits.

mod conjugacy;
mod orbit;
mod params;
mod point;
mod word;

use serde::{Deserialize, Serialize};

pub use conjugacy::{conjugacy_check, conjugacy_tolerance, ConjugacyReport};
pub use orbit::{Orbit, Prefixed, RandomSymbols, StoredSymbols, SymbolSource, SINGULARITY_TOL};
pub use params::BakerParams;
pub use point::{Padding, PeriodicPoint, SymbolicPoint, DEFAULT_DEPTH};
pub use word::{Word, MAX_WORD_LEN};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Euclidean,
    Sup,
}

impl Metric {
    #[inline]
    pub fn distance(self, a: Point, b: Point) -> f64 {
        let dx = (a.x - b.x).abs();
        let dy = (a.y - b.y).abs();
        match self {
            Metric::Euclidean => dx.hypot(dy),
            Metric::Sup => dx.max(dy),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Metric::Euclidean => "euclidean",
            Metric::Sup => "sup",
        }
    }
}

impl std::fmt::Display for Metric {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn distances() {
        let a = Point::new(0.0, 0.0);
        let b = Point::new(0.75, 0.25);
        assert_eq!(Metric::Sup.distance(a, b), 0.75);
        assert!((Metric::Euclidean.distance(a, b) - 10f64.sqrt() / 4.0).abs() < 1e-15);
        assert_eq!(Metric::Sup.distance(b, b), 0.0);
    }

    #[test]
    fn metric_serde_names() {
        assert_eq!(serde_json::to_string(&Metric::Sup).unwrap(), "\"sup\"");
        let m: Metric = serde_json::from_str("\"euclidean\"").unwrap();
        assert_eq!(m, Metric::Euclidean);
    }
}
