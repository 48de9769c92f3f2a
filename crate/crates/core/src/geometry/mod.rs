//! Geometric constants behind the extremal index at periodic points.

mod quadrature;

use std::f64::consts::PI;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::symbolic::{BakerParams, Word};

pub use quadrature::adaptive_simpson;

/// Default absolute tolerance for [`ellipse_disk_ratio`].
pub const QUADRATURE_TOL: f64 = 1e-6;

/// Oracle values of [`ellipse_disk_ratio`] for `p, k <= 4`, computed once at 30
/// significant digits.
pub const FROZEN_CONSTANTS: &str = include_str!("../../data/geometry_constants.csv");

/// Linearization of the map along one period of a periodic orbit.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicGeometry {
    params: BakerParams,
    word: Word,
}

impl PeriodicGeometry {
    /// `word` is reduced to its primitive root.
    pub fn new(params: BakerParams, word: &Word) -> Self {
        Self {
            params,
            word: word.primitive(),
        }
    }

    pub fn period(&self) -> usize {
        self.word.len()
    }

    pub fn word(&self) -> &Word {
        &self.word
    }

    /// Product of `alpha` (symbol 0) and `beta` (symbol 1) over one period: the
    /// vertical contraction of `T^{-p}`.
    pub fn y_factor(&self) -> f64 {
        self.word
            .symbols()
            .iter()
            .map(|&s| self.params.symbol_weight(s))
            .product()
    }

    /// Product of the inverse horizontal ratios over one period.
    pub fn x_expansion(&self) -> f64 {
        self.word
            .symbols()
            .iter()
            .map(|&s| 1.0 / self.params.x_branch(s).0)
            .product()
    }
}

/// Sup-metric extremal index `1 - y_factor` at a periodic point.
///
/// With `alpha = beta` this is `1 - alpha^p`. For unequal weights the word
/// product is used, an extension of the equal-weight formula.
pub fn theta_sup(geom: &PeriodicGeometry) -> f64 {
    1.0 - geom.y_factor()
}

/// Area of the strip `|y| < h` inside the unit disk, divided by the disk's area.
pub fn strip_bound(h: f64) -> f64 {
    let h = h.clamp(0.0, 1.0);
    2.0 * (h * (1.0 - h * h).sqrt() + h.asin()) / PI
}

/// Leading-order value `(4/pi) 2^{-kp}` of the ellipse-disk ratio.
pub fn leading_order(p: u32, k: u32) -> f64 {
    4.0 / PI * 2f64.powi(-((k * p) as i32))
}

/// `area(D ∩ E_1 ∩ ... ∩ E_k) / area(D)` where `D` is the unit disk and `E_i` its
/// image under the diagonal scaling `(2^{ip}, 2^{-ip})`, to absolute tolerance
/// [`QUADRATURE_TOL`].
///
/// The region is symmetric in both axes and vertically convex, so the area is
/// four times the integral of its upper boundary over `[0, 1]`, split at the
/// curve crossings.
pub fn ellipse_disk_ratio(p: u32, k: u32) -> Result<f64> {
    ellipse_disk_ratio_with_tol(p, k, QUADRATURE_TOL)
}

pub fn ellipse_disk_ratio_with_tol(p: u32, k: u32, tol: f64) -> Result<f64> {
    if p == 0 {
        return Err(Error::InvalidInput("period must be at least 1".into()));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidInput(format!(
            "tolerance {tol} must be positive"
        )));
    }
    if k == 0 {
        return Ok(1.0);
    }
    if u64::from(k) * u64::from(p) > 500 {
        return Err(Error::InvalidInput(format!(
            "k p = {} too large for double precision",
            u64::from(k) * u64::from(p)
        )));
    }
    // Boundary curves as semi-axes (A, B): the disk and each E_i.
    let curves: Vec<(f64, f64)> = std::iter::once((1.0, 1.0))
        .chain((1..=k).map(|i| {
            let a = 2f64.powi((i * p) as i32);
            (a, 1.0 / a)
        }))
        .collect();
    let height = |x: f64, (a, b): (f64, f64)| b * (1.0 - (x / a).powi(2)).max(0.0).sqrt();
    // Crossings of two ellipses x^2/A^2 + y^2/B^2 = 1.
    let mut breaks = vec![0.0, 1.0];
    for (i, &(a1, b1)) in curves.iter().enumerate() {
        for &(a2, b2) in &curves[i + 1..] {
            let den = (b1 / a1).powi(2) - (b2 / a2).powi(2);
            let x2 = (b1 * b1 - b2 * b2) / den;
            if den != 0.0 && x2 > 0.0 && x2 < 1.0 {
                breaks.push(x2.sqrt());
            }
        }
    }
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    // Between breakpoints the upper boundary is a single arc x = A cos t,
    // y = B sin t; in the angle variable the integrand A B sin^2 t is smooth
    // even where the arc meets the axis. Ratio = 4 * integral / pi.
    let piece_tol = tol * PI / 4.0 / (breaks.len() - 1) as f64;
    let mut integral = 0.0;
    for w in breaks.windows(2) {
        let mid = 0.5 * (w[0] + w[1]);
        let (a, b) = curves
            .iter()
            .copied()
            .min_by(|&c1, &c2| height(mid, c1).total_cmp(&height(mid, c2)))
            .expect("disk is always present");
        let t_hi = (w[0] / a).clamp(-1.0, 1.0).acos();
        let t_lo = (w[1] / a).clamp(-1.0, 1.0).acos();
        integral += adaptive_simpson(&|t: f64| a * b * t.sin().powi(2), t_lo, t_hi, piece_tol)?;
    }
    Ok(4.0 * integral / PI)
}

/// Reference values for the cluster ratio `hat alpha_{k+1}` at a period-`p`
/// point of the classical map under Euclidean balls.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HatAlphaReference {
    /// Quadrature value; exact for balls small enough to stay in one branch.
    pub ratio: f64,
    pub leading_order: f64,
}

pub fn hat_alpha_reference(p: u32, k: u32) -> Result<HatAlphaReference> {
    Ok(HatAlphaReference {
        ratio: ellipse_disk_ratio(p, k)?,
        leading_order: leading_order(p, k),
    })
}

/// One row of the geometry constants file.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryConstant {
    pub p: u32,
    pub k: u32,
    pub ratio: f64,
    pub leading_order: f64,
    pub quadrature_tol: f64,
}

/// Quadrature constants for every `(p, k)` pair.
pub fn constants_table(ps: &[u32], ks: &[u32]) -> Result<Vec<GeometryConstant>> {
    let mut rows = Vec::with_capacity(ps.len() * ks.len());
    for &p in ps {
        for &k in ks {
            rows.push(GeometryConstant {
                p,
                k,
                ratio: ellipse_disk_ratio(p, k)?,
                leading_order: leading_order(p, k),
                quadrature_tol: QUADRATURE_TOL,
            });
        }
    }
    Ok(rows)
}

pub fn write_constants<W: Write>(out: W, rows: &[GeometryConstant]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush().map_err(|e| Error::Csv(e.into()))?;
    Ok(())
}

/// Parse a constants file, checking every row for sane values.
pub fn parse_constants<R: Read>(input: R) -> Result<Vec<GeometryConstant>> {
    let mut rows = Vec::new();
    for rec in csv::Reader::from_reader(input).deserialize() {
        let row: GeometryConstant = rec?;
        let finite = row.ratio.is_finite() && row.leading_order.is_finite();
        if !finite || !(0.0..=1.0).contains(&row.ratio) || !(row.quadrature_tol > 0.0) {
            return Err(Error::Decode(format!("invalid constants row {row:?}")));
        }
        rows.push(row);
    }
    Ok(rows)
}

/// The frozen oracle table.
pub fn frozen_constants() -> Vec<GeometryConstant> {
    parse_constants(FROZEN_CONSTANTS.as_bytes()).expect("frozen constants file is valid")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn theta_sup_values() {
        let c = BakerParams::classical();
        let g = |w: &str| PeriodicGeometry::new(c, &w.parse().unwrap());
        assert_eq!(theta_sup(&g("0")), 0.5);
        assert_eq!(theta_sup(&g("01")), 0.75);
        assert_eq!(theta_sup(&g("0101")), 0.75);
        assert_eq!(g("0101").period(), 2);
        assert!(theta_sup(&g(&"01".repeat(30))) < 1.0);
        assert!(1.0 - theta_sup(&g("0110101011")) < 1e-3);
        assert_eq!(g("01").x_expansion(), 4.0);
    }

    #[test]
    fn matches_frozen_oracle() {
        for row in frozen_constants() {
            let v = ellipse_disk_ratio(row.p, row.k).unwrap();
            assert!((v - row.ratio).abs() <= row.quadrature_tol, "{row:?}: {v}");
            assert!((leading_order(row.p, row.k) - row.leading_order).abs() < 1e-15);
        }
    }

    fn closed_form(kp: u32) -> f64 {
        // Area under y = B sqrt(1 - x^2/A^2): (B/A)/2 (x sqrt(A^2-x^2) + A^2 asin(x/A)).
        let prim = |x: f64, a: f64, b: f64| {
            b / a * 0.5 * (x * (a * a - x * x).sqrt() + a * a * (x / a).asin())
        };
        let a = 2f64.powi(kp as i32);
        let xb = (a * a / (a * a + 1.0)).sqrt();
        let area = prim(xb, a, 1.0 / a) + prim(1.0, 1.0, 1.0) - prim(xb, 1.0, 1.0);
        4.0 * area / PI
    }

    #[test]
    fn matches_closed_form() {
        for p in 1..=5 {
            for k in 1..=5 {
                let v = ellipse_disk_ratio(p, k).unwrap();
                assert!((v - closed_form(k * p)).abs() < 1e-7, "p={p} k={k}");
            }
        }
    }

    #[test]
    fn decreasing_in_k_and_p() {
        for p in 1..=4 {
            for k in 1..=4 {
                let v = ellipse_disk_ratio(p, k).unwrap();
                assert!(v < ellipse_disk_ratio(p, k - 1).unwrap());
                assert!(ellipse_disk_ratio(p + 1, k).unwrap() < v);
                assert!(v <= strip_bound(2f64.powi(-((k * p) as i32))));
            }
        }
    }

    #[test]
    fn k_one_p_one_respects_strip_bound() {
        let v = ellipse_disk_ratio(1, 1).unwrap();
        assert!(v > 0.0 && v <= strip_bound(0.5));
        assert!((strip_bound(0.5) - 0.608_997_781_044_229_4).abs() < 1e-12);
    }

    #[test]
    fn discrepancy_shrinks_by_about_four() {
        let disc = |p| 1.0 - ellipse_disk_ratio(p, 1).unwrap() / leading_order(p, 1);
        let q = disc(1) / disc(2);
        assert!(q > 3.0 && q < 4.5, "{q}");
    }

    #[test]
    fn constants_round_trip() {
        let rows = constants_table(&[1, 2], &[0, 1]).unwrap();
        let mut buf = Vec::new();
        write_constants(&mut buf, &rows).unwrap();
        assert_eq!(parse_constants(buf.as_slice()).unwrap(), rows);
        assert!(parse_constants("p,k,ratio\n1,1,0.5\n".as_bytes()).is_err());
        assert!(parse_constants(
            "p,k,ratio,leading_order,quadrature_tol\n1,1,2.0,1,1e-6\n".as_bytes()
        )
        .is_err());
    }

    #[test]
    fn rejects_zero_period() {
        assert!(ellipse_disk_ratio(0, 1).is_err());
        assert_eq!(ellipse_disk_ratio(3, 0).unwrap(), 1.0);
    }
}
