//! Ulam discretization of the transfer operator of the classical map.
//!
//! Cells are the `2^m x 2^m` dyadic squares, indexed `cy * 2^m + cx`. The
//! operator acts on cell densities `v` as `v -> v P` with
//! `P_ij = area(C_i ∩ T^{-1} C_j) / area(C_i)`.

mod dump;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::measure::Ball;
use crate::symbolic::Metric;

pub use dump::{decode_dump, encode_dump, DUMP_MAGIC};

pub const MAX_RESOLUTION: u32 = 14;
pub const MAX_ITERATIONS: usize = 10_000;

#[derive(Debug, Clone, PartialEq)]
enum Storage {
    /// The classical map, evaluated on the fly.
    Baker,
    /// Explicit rows, as read from a dump.
    Csr {
        row_ptr: Vec<u64>,
        col: Vec<u64>,
        val: Vec<f64>,
    },
}

/// Which cell cover of a ball is removed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CoverKind {
    /// Cells contained in the closed ball.
    Inner,
    /// Cells meeting the open ball.
    Outer,
}

/// A set of removed cells.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Hole {
    #[serde(skip)]
    mask: Vec<u64>,
    pub cells: u64,
    /// `cells * 4^-m`.
    pub measure: f64,
    pub cover: CoverKind,
    /// Measures of the inner and outer covers of the ball.
    pub inner_measure: f64,
    pub outer_measure: f64,
    pub label: String,
}

impl Hole {
    #[inline]
    fn contains(&self, i: usize) -> bool {
        self.mask[i / 64] >> (i % 64) & 1 == 1
    }

    /// Whether the ball is a union of cells.
    pub fn aligned(&self) -> bool {
        self.inner_measure == self.outer_measure
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UlamOperator {
    m: u32,
    storage: Storage,
    hole: Option<Hole>,
}

/// Closed Ulam operator at resolution `m`.
///
/// Every cell maps onto two half cells: the lower half `(cx, cy)`,
/// `cy < 2^{m-1}`, onto column `cx / 2` and rows `2cy, 2cy + 1`; the upper half
/// onto column `2^{m-1} + cx / 2` and rows `2cy - 2^m, 2cy - 2^m + 1`. All weights are 1/2.
pub fn build_ulam(m: u32) -> Result<UlamOperator> {
    check_resolution(m)?;
    Ok(UlamOperator {
        m,
        storage: Storage::Baker,
        hole: None,
    })
}

fn check_resolution(m: u32) -> Result<()> {
    if m == 0 || m > MAX_RESOLUTION {
        return Err(Error::ResolutionTooLarge(m));
    }
    Ok(())
}

impl UlamOperator {
    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn side(&self) -> usize {
        1 << self.m
    }

    pub fn n_cells(&self) -> usize {
        1 << (2 * self.m)
    }

    pub fn hole(&self) -> Option<&Hole> {
        self.hole.as_ref()
    }

    /// Nonzero entries `(j, P_ij)` of row `i`, ignoring the hole.
    pub fn row(&self, i: usize) -> Vec<(usize, f64)> {
        match &self.storage {
            Storage::Baker => {
                let w = self.side();
                let (cx, cy) = (i % w, i / w);
                let (col, row) = if cy < w / 2 {
                    (cx >> 1, 2 * cy)
                } else {
                    (w / 2 + (cx >> 1), 2 * cy - w)
                };
                vec![(row * w + col, 0.5), ((row + 1) * w + col, 0.5)]
            }
            Storage::Csr { row_ptr, col, val } => {
                let (a, b) = (row_ptr[i] as usize, row_ptr[i + 1] as usize);
                (a..b).map(|k| (col[k] as usize, val[k])).collect()
            }
        }
    }

    /// Rows of the open operator; hole rows are empty.
    pub(crate) fn effective_row(&self, i: usize) -> Vec<(usize, f64)> {
        if self.hole.as_ref().is_some_and(|h| h.contains(i)) {
            Vec::new()
        } else {
            self.row(i)
        }
    }

    pub(crate) fn from_csr(m: u32, row_ptr: Vec<u64>, col: Vec<u64>, val: Vec<f64>) -> Self {
        Self {
            m,
            storage: Storage::Csr { row_ptr, col, val },
            hole: None,
        }
    }

    /// `out = (v 1_{H^c}) P`.
    fn apply(&self, v: &[f64], out: &mut [f64], masked: &mut Vec<f64>) {
        let src: &[f64] = match &self.hole {
            None => v,
            Some(h) => {
                masked.clear();
                masked.extend(
                    v.iter()
                        .enumerate()
                        .map(|(i, &x)| if h.contains(i) { 0.0 } else { x }),
                );
                masked
            }
        };
        match &self.storage {
            Storage::Baker => {
                let w = self.side();
                let half = w / 2;
                out.par_chunks_mut(w).enumerate().for_each(|(jy, row)| {
                    let lower = &src[(jy >> 1) * w..][..w];
                    let upper = &src[(half + (jy >> 1)) * w..][..w];
                    for jx in 0..half {
                        row[jx] = 0.5 * (lower[2 * jx] + lower[2 * jx + 1]);
                        row[half + jx] = 0.5 * (upper[2 * jx] + upper[2 * jx + 1]);
                    }
                });
            }
            Storage::Csr { row_ptr, col, val } => {
                out.iter_mut().for_each(|x| *x = 0.0);
                for (i, &x) in src.iter().enumerate() {
                    if x != 0.0 {
                        for k in row_ptr[i] as usize..row_ptr[i + 1] as usize {
                            out[col[k] as usize] += x * val[k];
                        }
                    }
                }
            }
        }
    }

    fn uniform(&self) -> Vec<f64> {
        vec![1.0 / self.n_cells() as f64; self.n_cells()]
    }

    /// Row sums of `P`, ignoring the hole.
    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.n_cells())
            .map(|i| self.row(i).iter().map(|e| e.1).sum())
            .collect()
    }

    /// Column sums of `P`, ignoring the hole.
    pub fn column_sums(&self) -> Vec<f64> {
        let mut s = vec![0.0; self.n_cells()];
        for i in 0..self.n_cells() {
            for (j, w) in self.row(i) {
                s[j] += w;
            }
        }
        s
    }
}

/// Deterministic total mass: per-row partial sums added in row order.
fn mass(v: &[f64], w: usize) -> f64 {
    v.par_chunks(w)
        .map(|c| c.iter().sum::<f64>())
        .collect::<Vec<f64>>()
        .iter()
        .sum()
}

/// Cell cover of `ball` at resolution `m`.
fn cover_mask(m: u32, ball: &Ball, kind: CoverKind) -> (Vec<u64>, u64) {
    let w = 1usize << m;
    let h = 1.0 / w as f64;
    let c = ball.center();
    let r = ball.radius();
    let mut mask = vec![0u64; (w * w).div_ceil(64)];
    let mut count = 0;
    let (x_lo, x_hi, y_lo, y_hi) = ball.bounding_box();
    let idx = |v: f64| ((v * w as f64).floor() as usize).min(w - 1);
    // Signed gaps from the center to the nearest and farthest point of [a, a + h].
    let near = |a: f64, z: f64| (a - z).max(z - a - h).max(0.0);
    let far = |a: f64, z: f64| (a - z).abs().max((a + h - z).abs());
    for cy in idx(y_lo)..=idx(y_hi) {
        let b = cy as f64 * h;
        for cx in idx(x_lo)..=idx(x_hi) {
            let a = cx as f64 * h;
            let hit = match (kind, ball.metric()) {
                (CoverKind::Inner, Metric::Sup) => far(a, c.x).max(far(b, c.y)) <= r,
                (CoverKind::Inner, Metric::Euclidean) => far(a, c.x).hypot(far(b, c.y)) <= r,
                (CoverKind::Outer, Metric::Sup) => near(a, c.x).max(near(b, c.y)) < r,
                (CoverKind::Outer, Metric::Euclidean) => near(a, c.x).hypot(near(b, c.y)) < r,
            };
            if hit {
                let i = cy * w + cx;
                mask[i / 64] |= 1 << (i % 64);
                count += 1;
            }
        }
    }
    (mask, count)
}

/// Remove the cells of `ball` (its inner or outer cover) from `op`.
///
/// For a sup ball with dyadic center and radius `>= 2^-m` the two covers agree
/// and the hole measure is exact.
pub fn punch_hole(op: &UlamOperator, ball: &Ball, kind: CoverKind) -> Result<UlamOperator> {
    let n = op.n_cells() as u64;
    let cell = 1.0 / n as f64;
    let (inner_mask, inner) = cover_mask(op.m, ball, CoverKind::Inner);
    let (outer_mask, outer) = cover_mask(op.m, ball, CoverKind::Outer);
    let (mask, cells) = match kind {
        CoverKind::Inner => (inner_mask, inner),
        CoverKind::Outer => (outer_mask, outer),
    };
    if cells == n {
        return Err(Error::InvalidInput(format!(
            "hole covers all {n} cells at m = {}",
            op.m
        )));
    }
    let c = ball.center();
    let mut out = op.clone();
    out.hole = Some(Hole {
        mask,
        cells,
        measure: cells as f64 * cell,
        cover: kind,
        inner_measure: inner as f64 * cell,
        outer_measure: outer as f64 * cell,
        label: format!("{}({}, {}; {})", ball.metric(), c.x, c.y, ball.radius()),
    });
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectralResult {
    pub lambda: f64,
    pub iterations: usize,
    /// Relative change of the mass ratio at the last step.
    pub residual: f64,
    pub hole_measure: f64,
    /// `(1 - lambda) / hole_measure`; `None` without a hole.
    pub theta_spectral: Option<f64>,
}

/// Leading eigenvalue by power iteration from the uniform density.
///
/// `lambda` is the per-step mass ratio; iteration stops once successive ratios
/// agree to `tol` relative, but not before `2m` steps, the time after which the
/// window of cell symbols has been fully renewed.
pub fn leading_eigenvalue(op: &UlamOperator, tol: f64) -> Result<SpectralResult> {
    if !(tol > 0.0) {
        return Err(Error::InvalidInput(format!("tol = {tol} must be positive")));
    }
    let w = op.side();
    let min_iter = 2 * op.m as usize;
    let mut v = op.uniform();
    let mut next = vec![0.0; v.len()];
    let mut scratch = Vec::new();
    let mut prev = f64::NAN;
    let mut residuals = Vec::new();
    for it in 1..=MAX_ITERATIONS {
        op.apply(&v, &mut next, &mut scratch);
        let rho = mass(&next, w);
        if rho == 0.0 {
            return Ok(spectral(op, 0.0, it, 0.0));
        }
        let residual = (rho - prev).abs() / rho;
        if residuals.len() == 10 {
            residuals.remove(0);
        }
        residuals.push(residual);
        if it >= min_iter && residual <= tol {
            return Ok(spectral(op, rho, it, residual));
        }
        prev = rho;
        let scale = 1.0 / rho;
        next.iter_mut().for_each(|x| *x *= scale);
        std::mem::swap(&mut v, &mut next);
    }
    Err(Error::NoConvergence {
        iterations: MAX_ITERATIONS,
        residuals,
    })
}

fn spectral(op: &UlamOperator, lambda: f64, iterations: usize, residual: f64) -> SpectralResult {
    let hole_measure = op.hole.as_ref().map_or(0.0, |h| h.measure);
    SpectralResult {
        lambda,
        iterations,
        residual,
        hole_measure,
        theta_spectral: (hole_measure > 0.0).then(|| (1.0 - lambda) / hole_measure),
    }
}

/// Mass left after `n` applications of the open operator to the uniform density.
pub fn survival_probability(op: &UlamOperator, n: u64) -> f64 {
    let mut v = op.uniform();
    let mut next = vec![0.0; v.len()];
    let mut scratch = Vec::new();
    for _ in 0..n {
        op.apply(&v, &mut next, &mut scratch);
        std::mem::swap(&mut v, &mut next);
    }
    mass(&v, op.side())
}

/// One row of the spectral CSV.
#[derive(Debug, Clone, Serialize)]
pub struct UlamRow {
    pub m: u32,
    pub hole_spec: String,
    pub hole_measure: f64,
    pub lambda: f64,
    pub residual: f64,
    pub theta_spectral: Option<f64>,
}

impl UlamRow {
    pub fn new(op: &UlamOperator, r: &SpectralResult) -> Self {
        Self {
            m: op.m,
            hole_spec: op.hole.as_ref().map_or_else(
                || "none".to_string(),
                |h| format!("{} [{:?}]", h.label, h.cover).to_lowercase(),
            ),
            hole_measure: r.hole_measure,
            lambda: r.lambda,
            residual: r.residual,
            theta_spectral: r.theta_spectral,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbolic::Point;

    fn corner(j: i32) -> Ball {
        Ball::new(Point::new(0.0, 0.0), 2f64.powi(-j), Metric::Sup).unwrap()
    }

    #[test]
    fn resolution_bounds() {
        assert!(matches!(build_ulam(0), Err(Error::ResolutionTooLarge(0))));
        assert!(matches!(build_ulam(15), Err(Error::ResolutionTooLarge(15))));
        assert!(build_ulam(14).is_ok());
    }

    #[test]
    fn m1_transitions() {
        let op = build_ulam(1).unwrap();
        // cells: 0 = (0,0), 1 = (1,0), 2 = (0,1), 3 = (1,1)
        assert_eq!(op.row(0), vec![(0, 0.5), (2, 0.5)]);
        assert_eq!(op.row(1), vec![(0, 0.5), (2, 0.5)]);
        assert_eq!(op.row(2), vec![(1, 0.5), (3, 0.5)]);
        assert_eq!(op.row(3), vec![(1, 0.5), (3, 0.5)]);
    }

    #[test]
    fn rows_follow_the_map() {
        // Cell centers land in the target cells.
        let op = build_ulam(4).unwrap();
        let w = op.side();
        let params = crate::symbolic::BakerParams::classical();
        for i in 0..op.n_cells() {
            let (cx, cy) = (i % w, i / w);
            let targets: Vec<usize> = op.row(i).iter().map(|e| e.0).collect();
            for qy in [0.25, 0.75] {
                let x = (cx as f64 + 0.5) / w as f64;
                let y = (cy as f64 + qy) / w as f64;
                let (tx, ty) = params.apply_map_coords(x, y).unwrap();
                let j = (ty * w as f64) as usize * w + (tx * w as f64) as usize;
                assert!(targets.contains(&j), "cell {i} -> {j} not in {targets:?}");
            }
        }
    }

    #[test]
    fn doubly_stochastic() {
        for m in 1..=6 {
            let op = build_ulam(m).unwrap();
            assert!(op.row_sums().iter().all(|&s| s == 1.0));
            assert!(op.column_sums().iter().all(|&s| s == 1.0));
        }
    }

    #[test]
    fn closed_eigenvalue_is_one() {
        let r = leading_eigenvalue(&build_ulam(8).unwrap(), 1e-14).unwrap();
        assert_eq!(r.lambda, 1.0);
        assert_eq!(r.theta_spectral, None);
    }

    #[test]
    fn corner_hole_is_exact() {
        let op = build_ulam(6).unwrap();
        let holed = punch_hole(&op, &corner(3), CoverKind::Outer).unwrap();
        let h = holed.hole().unwrap();
        assert_eq!(h.cells, 64);
        assert_eq!(h.measure, 1.0 / 64.0);
        assert!(h.aligned());
        assert_eq!(survival_probability(&holed, 0), 1.0);
        assert_eq!(survival_probability(&holed, 1), 1.0 - 1.0 / 64.0);
    }

    #[test]
    fn euclidean_covers_bracket() {
        let op = build_ulam(7).unwrap();
        let ball = Ball::new(Point::new(0.4, 0.6), 0.1, Metric::Euclidean).unwrap();
        let inner = punch_hole(&op, &ball, CoverKind::Inner).unwrap();
        let h = inner.hole().unwrap();
        let area = std::f64::consts::PI * 0.01;
        assert!(h.inner_measure < area && area < h.outer_measure);
        assert!(!h.aligned());
        let outer = punch_hole(&op, &ball, CoverKind::Outer).unwrap();
        let li = leading_eigenvalue(&inner, 1e-12).unwrap().lambda;
        let lo = leading_eigenvalue(&outer, 1e-12).unwrap().lambda;
        assert!(lo < li);
    }

    #[test]
    fn whole_grid_hole_is_refused() {
        let op = build_ulam(1).unwrap();
        let ball = Ball::new(Point::new(0.5, 0.5), 0.4, Metric::Sup).unwrap();
        assert!(punch_hole(&op, &ball, CoverKind::Outer).is_err());
    }

    #[test]
    fn corner_theta_near_half_and_resolution_free() {
        let t = |m, j| {
            let op = punch_hole(&build_ulam(m).unwrap(), &corner(j), CoverKind::Outer).unwrap();
            leading_eigenvalue(&op, 1e-13)
                .unwrap()
                .theta_spectral
                .unwrap()
        };
        let a = t(6, 4);
        assert!((a - 0.5).abs() < 0.03, "{a}");
        assert!((a - t(8, 4)).abs() < 1e-9);
    }

    #[test]
    fn survival_matches_eigenvalue_decay() {
        let op = punch_hole(&build_ulam(7).unwrap(), &corner(3), CoverKind::Outer).unwrap();
        let lambda = leading_eigenvalue(&op, 1e-13).unwrap().lambda;
        let s1 = survival_probability(&op, 200);
        let s2 = survival_probability(&op, 201);
        assert!((s2 / s1 - lambda).abs() < 1e-10);
        // Fixed-point hole with n mu = 1: survival near exp(-1/2).
        let s = survival_probability(&op, 64);
        assert!((s - (-0.5f64).exp()).abs() < 0.03, "{s}");
    }

    #[test]
    fn worker_count_does_not_change_lambda() {
        let op = punch_hole(&build_ulam(9).unwrap(), &corner(4), CoverKind::Outer).unwrap();
        let a = leading_eigenvalue(&op, 1e-13).unwrap();
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(3)
            .build()
            .unwrap();
        let b = pool.install(|| leading_eigenvalue(&op, 1e-13).unwrap());
        assert_eq!(a, b);
    }
}
