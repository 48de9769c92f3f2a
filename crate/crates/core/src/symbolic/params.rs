use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Parameters of the generalized baker's map.
///
/// Points with `y < alpha` take the lower branch (`x -> gamma_a x`,
/// `y -> y / alpha`), points with `y > alpha` the upper branch
/// (`x -> 1 - gamma_b + gamma_b x`, `y -> (y - alpha) / beta`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams", into = "RawParams")]
pub struct BakerParams {
    alpha: f64,
    gamma_a: f64,
    gamma_b: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawParams {
    alpha: f64,
    gamma_a: f64,
    gamma_b: f64,
}

impl TryFrom<RawParams> for BakerParams {
    type Error = Error;

    fn try_from(raw: RawParams) -> Result<Self> {
        BakerParams::new(raw.alpha, raw.gamma_a, raw.gamma_b)
    }
}

impl From<BakerParams> for RawParams {
    fn from(p: BakerParams) -> Self {
        RawParams {
            alpha: p.alpha,
            gamma_a: p.gamma_a,
            gamma_b: p.gamma_b,
        }
    }
}

impl BakerParams {
    pub fn new(alpha: f64, gamma_a: f64, gamma_b: f64) -> Result<Self> {
        let open_unit = |v: f64| v > 0.0 && v < 1.0;
        if !open_unit(alpha) {
            return Err(Error::InvalidParams(format!(
                "alpha = {alpha} not in (0,1)"
            )));
        }
        if !open_unit(gamma_a) || !open_unit(gamma_b) {
            return Err(Error::InvalidParams(format!(
                "contraction ratios ({gamma_a}, {gamma_b}) not in (0,1)"
            )));
        }
        if gamma_a + gamma_b > 1.0 {
            return Err(Error::InvalidParams(format!(
                "gamma_a + gamma_b = {} > 1: horizontal strips overlap",
                gamma_a + gamma_b
            )));
        }
        Ok(Self {
            alpha,
            gamma_a,
            gamma_b,
        })
    }

    /// The area-preserving map with every parameter equal to 1/2.
    pub const fn classical() -> Self {
        Self {
            alpha: 0.5,
            gamma_a: 0.5,
            gamma_b: 0.5,
        }
    }

    /// Equal contraction on both strips.
    pub fn symmetric(alpha: f64, gamma: f64) -> Result<Self> {
        Self::new(alpha, gamma, gamma)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        1.0 - self.alpha
    }

    pub fn gamma_a(&self) -> f64 {
        self.gamma_a
    }

    pub fn gamma_b(&self) -> f64 {
        self.gamma_b
    }

    pub fn is_classical(&self) -> bool {
        self.alpha == 0.5 && self.gamma_a == 0.5 && self.gamma_b == 0.5
    }

    /// Symbols are fair coin flips.
    pub fn is_fair(&self) -> bool {
        self.alpha == 0.5
    }

    /// Affine contraction `x -> offset + ratio * x` applied when a symbol moves into the past.
    #[inline]
    pub fn x_branch(&self, symbol: u8) -> (f64, f64) {
        if symbol == 0 {
            (self.gamma_a, 0.0)
        } else {
            (self.gamma_b, 1.0 - self.gamma_b)
        }
    }

    /// Inverse branch of the base map: `y -> offset + ratio * y`.
    #[inline]
    pub fn y_branch(&self, symbol: u8) -> (f64, f64) {
        if symbol == 0 {
            (self.alpha, 0.0)
        } else {
            (self.beta(), self.alpha)
        }
    }

    pub fn max_contraction(&self) -> f64 {
        self.gamma_a.max(self.gamma_b)
    }

    /// Largest inverse-branch ratio, `max(alpha, beta)`.
    pub fn max_y_ratio(&self) -> f64 {
        self.alpha.max(self.beta())
    }

    /// Probability of symbol `s` under the SRB measure.
    pub fn symbol_weight(&self, symbol: u8) -> f64 {
        if symbol == 0 {
            self.alpha
        } else {
            self.beta()
        }
    }

    /// Direct floating evaluation of one step of the map.
    pub fn apply_map_coords(&self, x: f64, y: f64) -> Result<(f64, f64)> {
        if !(0.0..=1.0).contains(&x) || !(0.0..=1.0).contains(&y) {
            return Err(Error::InvalidInput(format!(
                "({x}, {y}) outside the unit square"
            )));
        }
        if y < self.alpha {
            Ok((self.gamma_a * x, y / self.alpha))
        } else if y > self.alpha {
            Ok((
                1.0 - self.gamma_b + self.gamma_b * x,
                (y - self.alpha) / self.beta(),
            ))
        } else {
            Err(Error::OnSingularity {
                y,
                alpha: self.alpha,
            })
        }
    }

    /// Compact label used in CSV output.
    pub fn label(&self) -> String {
        format!(
            "alpha={};gamma_a={};gamma_b={}",
            self.alpha, self.gamma_a, self.gamma_b
        )
    }
}

impl Default for BakerParams {
    fn default() -> Self {
        Self::classical()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_parameters() {
        assert!(BakerParams::new(0.0, 0.5, 0.5).is_err());
        assert!(BakerParams::new(1.0, 0.5, 0.5).is_err());
        assert!(BakerParams::new(0.5, 0.6, 0.5).is_err());
        assert!(BakerParams::new(0.5, 0.0, 0.5).is_err());
        assert!(BakerParams::new(0.5, 0.25, 0.25).is_ok());
    }

    #[test]
    fn classical_predicate() {
        assert!(BakerParams::classical().is_classical());
        assert!(!BakerParams::symmetric(0.5, 0.25).unwrap().is_classical());
        assert!(!BakerParams::new(0.4, 0.5, 0.5).unwrap().is_classical());
    }

    #[test]
    fn map_examples() {
        let p = BakerParams::classical();
        assert_eq!(p.apply_map_coords(0.25, 0.25).unwrap(), (0.125, 0.5));
        assert_eq!(p.apply_map_coords(0.25, 0.75).unwrap(), (0.625, 0.5));
        assert_eq!(p.apply_map_coords(0.0, 0.0).unwrap(), (0.0, 0.0));
        let q = BakerParams::new(0.3, 0.2, 0.4).unwrap();
        assert_eq!(q.apply_map_coords(0.0, 0.0).unwrap(), (0.0, 0.0));
    }

    #[test]
    fn singular_line_is_an_error() {
        let p = BakerParams::classical();
        assert!(matches!(
            p.apply_map_coords(0.3, 0.5),
            Err(Error::OnSingularity { .. })
        ));
    }

    #[test]
    fn serde_validates() {
        let ok: BakerParams =
            serde_json::from_str(r#"{"alpha":0.5,"gamma_a":0.25,"gamma_b":0.25}"#).unwrap();
        assert_eq!(ok.gamma_a(), 0.25);
        assert!(serde_json::from_str::<BakerParams>(
            r#"{"alpha":0.5,"gamma_a":0.7,"gamma_b":0.7}"#
        )
        .is_err());
    }
}
