use rand::Rng;
use serde::Serialize;

use super::{BakerParams, SymbolicPoint, Word};
use crate::error::{Error, Result};
use crate::par;

const SALT: u64 = 0xC0;

/// Outcome of comparing the shift with the coordinate map on random windows.
#[derive(Debug, Clone, Serialize)]
pub struct ConjugacyReport {
    pub windows: u64,
    pub steps: usize,
    pub depth: usize,
    pub tolerance: f64,
    /// Largest sup-distance seen between the two evaluations.
    pub max_error: f64,
    pub failures: u64,
    /// Windows with an iterate within `tolerance` of the discontinuity line.
    pub skipped: u64,
    pub periodic_checked: u64,
    pub periodic_failures: u64,
}

impl ConjugacyReport {
    pub fn passed(&self) -> bool {
        self.failures == 0 && self.periodic_failures == 0
    }
}

/// Agreement tolerance for `steps` iterations at `depth` symbols per side.
///
/// Truncation leaves `max(gamma)^depth` in x and `max(alpha, beta)^depth` in y;
/// each step of the coordinate map divides the y error by at least
/// `min(alpha, beta)` and adds one rounding.
pub fn conjugacy_tolerance(params: &BakerParams, steps: usize, depth: usize) -> f64 {
    let ymin = params.alpha().min(params.beta());
    let growth = ymin.powi(-(steps as i32));
    params.max_contraction().powi(depth as i32)
        + (params.max_y_ratio().powi(depth as i32) + 4.0 * f64::EPSILON / (1.0 - ymin)) * growth
}

/// Draw `windows` random symbol windows (`depth` past symbols, `depth + steps`
/// future symbols) and check that shifting by `k` and evaluating agrees with `k`
/// applications of the coordinate map, for every `k <= steps`. Also checks that
/// periodic points of random words of length up to 12 come back bit for bit
/// after one period.
pub fn conjugacy_check(
    params: &BakerParams,
    windows: u64,
    steps: usize,
    depth: usize,
    seed: u64,
) -> Result<ConjugacyReport> {
    if windows == 0 || steps == 0 || depth == 0 {
        return Err(Error::InvalidInput(
            "windows, steps and depth must be positive".into(),
        ));
    }
    let tol = conjugacy_tolerance(params, steps, depth);
    let parts = par::map_blocks(windows, par::BLOCK_SIZE, |b, k| {
        let mut rng = par::block_rng(seed, SALT, b);
        let (mut max_err, mut failures, mut skipped) = (0.0f64, 0u64, 0u64);
        let (mut periodic_failures, mut past, mut future) = (0u64, Vec::new(), Vec::new());
        for _ in 0..k {
            past.clear();
            future.clear();
            past.extend((0..depth).map(|_| u8::from(rng.random_bool(params.beta()))));
            future.extend((0..depth + steps).map(|_| u8::from(rng.random_bool(params.beta()))));
            let p = SymbolicPoint::from_symbols(*params, &past, &future)?;
            let start = p.evaluate_coords(depth)?;
            let (mut x, mut y) = (start.x, start.y);
            let mut err = 0.0f64;
            let mut near_gamma = false;
            for step in 1..=steps {
                if (y - params.alpha()).abs() <= tol {
                    near_gamma = true;
                    break;
                }
                (x, y) = params.apply_map_coords(x, y)?;
                let s = p.apply_shift(step)?.evaluate_coords(depth)?;
                err = err.max((s.x - x).abs().max((s.y - y).abs()));
            }
            if near_gamma {
                skipped += 1;
                continue;
            }
            max_err = max_err.max(err);
            failures += u64::from(err > tol);

            let len = rng.random_range(1..=12);
            let word = Word::new((0..len).map(|_| u8::from(rng.random_bool(0.5))).collect())?;
            let pp = SymbolicPoint::periodic_with_capacity(*params, &word, depth, len);
            let a = pp.point.evaluate_coords(depth)?;
            let b = pp.point.apply_shift(len)?.evaluate_coords(depth)?;
            periodic_failures +=
                u64::from(a.x.to_bits() != b.x.to_bits() || a.y.to_bits() != b.y.to_bits());
        }
        Ok((max_err, failures, skipped, periodic_failures))
    })?;
    let mut report = ConjugacyReport {
        windows,
        steps,
        depth,
        tolerance: tol,
        max_error: 0.0,
        failures: 0,
        skipped: 0,
        periodic_checked: 0,
        periodic_failures: 0,
    };
    for (e, f, s, pf) in parts {
        report.max_error = report.max_error.max(e);
        report.failures += f;
        report.skipped += s;
        report.periodic_failures += pf;
    }
    report.periodic_checked = windows - report.skipped;
    Ok(report)
}
