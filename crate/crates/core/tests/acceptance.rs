//! Acceptance suite: runs each shipped config under `configs/acceptance` and
//! prints one pass/fail line per criterion.
//!
//! `cargo test --test acceptance -- 3 7` runs criteria 3 and 7 only.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use bakerevt_core::experiment::{parse_config, run, ExperimentConfig, RunResult};
use bakerevt_core::geometry::ellipse_disk_ratio;
use bakerevt_core::measure::dimension_formula;
use bakerevt_core::pointprocess::{poisson_pmf, polya_aeppli_pmf, Verdict};
use bakerevt_core::symbolic::{BakerParams, Metric};

type Outcome = Result<(bool, String), String>;

fn config(name: &str) -> Result<ExperimentConfig, String> {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../configs/acceptance")
        .join(name);
    let text = std::fs::read_to_string(&path).map_err(|e| format!("{}: {e}", path.display()))?;
    parse_config(&text).map_err(|e| format!("{name}: {e}"))
}

fn execute(name: &str) -> Result<RunResult, String> {
    run(&config(name)?).map_err(|e| format!("{name}: {e}"))
}

fn gumbel_tolerance(p: f64, n: u64) -> f64 {
    3.0 * (p * (1.0 - p) / n as f64).sqrt() + 0.005
}

fn c1() -> Outcome {
    let RunResult::Gumbel(cells) = execute("c01_gumbel_nonperiodic.json")? else {
        return Err("expected gumbel cells".into());
    };
    let mut ok = cells.len() == 6;
    let mut worst = 0.0f64;
    for c in &cells {
        let r = &c.result;
        let target = (-r.config.tau).exp();
        let ratio = (r.p_hat.estimate - target).abs() / gumbel_tolerance(target, r.config.n_samples);
        worst = worst.max(ratio);
        ok &= ratio <= 1.0;
    }
    Ok((ok, format!("{} cells, worst |p - e^-tau| / tol = {worst:.3}", cells.len())))
}

fn c2() -> Outcome {
    let RunResult::Gumbel(cells) = execute("c02_gumbel_periodic_sup.json")? else {
        return Err("expected gumbel cells".into());
    };
    let mut ok = cells.len() == 2;
    let mut parts = Vec::new();
    for c in &cells {
        let theta = match c.case.center.period {
            Some(1) => 0.5,
            Some(2) => 0.75,
            other => return Err(format!("unexpected period {other:?}")),
        };
        let target = (-theta * c.result.config.tau).exp();
        let dev = (c.result.p_hat.estimate - target).abs();
        let tol = gumbel_tolerance(target, c.result.config.n_samples);
        ok &= dev <= tol;
        parts.push(format!("p={}: |dev| {dev:.4} <= {tol:.4}", c.case.center.period.unwrap()));
    }
    Ok((ok, parts.join("; ")))
}

fn c3() -> Outcome {
    let RunResult::Ei(cells) = execute("c03_extremal_index_agreement.json")? else {
        return Err("expected ei cells".into());
    };
    let mut ok = cells.len() == 3;
    let mut parts = Vec::new();
    for c in &cells {
        let closed = match c.case.center.period {
            Some(1) => 0.5,
            Some(2) => 0.75,
            None => 1.0,
            other => return Err(format!("unexpected period {other:?}")),
        };
        let qk = c.estimate.theta;
        let block = c.block.as_ref().ok_or("block estimate missing")?.theta_hat;
        let agree = |a: (f64, f64), b: (f64, f64)| (a.0 - b.0).abs() <= 3.0 * a.1.hypot(b.1);
        let (q, b, k) = ((qk.estimate, qk.std_error), (block.estimate, block.std_error), (closed, 0.0));
        ok &= agree(q, b) && agree(q, k) && agree(b, k);
        let mut part = format!(
            "{}: qk {:.4}±{:.4} block {:.4}±{:.4} closed {closed}",
            c.case.center.label, q.0, q.1, b.0, b.1
        );
        if c.case.center.period.is_none() {
            let exceptions: u64 = c
                .estimate
                .q
                .iter()
                .take(17)
                .map(|e| (e.estimate * e.n_samples as f64).round() as u64)
                .sum();
            ok &= exceptions == 0 && c.estimate.q.len() == 17 && qk.n_samples >= 100_000;
            part += &format!(", {exceptions} returns for k <= 16 in {} hits", qk.n_samples);
        }
        parts.push(part);
    }
    Ok((ok, parts.join("; ")))
}

fn c4() -> Outcome {
    let RunResult::Ei(cells) = execute("c04_poincare_normalization.json")? else {
        return Err("expected ei cells".into());
    };
    let mut ok = cells.len() == 2;
    let mut parts = Vec::new();
    for c in &cells {
        let p = c.poincare.ok_or("poincare check missing")?;
        ok &= p.passed() && p.tail_at_k_tail < 1e-3;
        parts.push(format!(
            "{}: k_tail {:?} sum {:.5}±{:.5} at k {}",
            c.case.center.label, p.k_tail, p.sum.estimate, p.sum.std_error, p.k_last
        ));
    }
    Ok((ok, parts.join("; ")))
}

fn c5() -> Outcome {
    let RunResult::Visits(cells) = execute("c05_visits_nonperiodic.json")? else {
        return Err("expected visits cells".into());
    };
    let ok = cells.len() == 6 && cells.iter().all(|c| c.tv_poisson <= 0.02);
    let worst = cells.iter().map(|c| c.tv_poisson).fold(0.0, f64::max);
    Ok((ok, format!("{} cells, max TV to Poisson {worst:.4}", cells.len())))
}

fn c6() -> Outcome {
    let RunResult::Visits(cells) = execute("c06_visits_periodic_sup.json")? else {
        return Err("expected visits cells".into());
    };
    let c = cells.first().ok_or("no cells")?;
    let tv = c.tv_polya_aeppli.ok_or("no reference theta")?;
    let mut ok = cells.len() == 1 && c.theta == Some(0.5) && c.histogram.t == 1.0 && tv <= 0.02;
    let pmf = |theta, t, k| polya_aeppli_pmf(theta, t, k).map_err(|e| e.to_string());
    let mut worst_norm = 0.0f64;
    for t in [0.5, 1.0, 2.0] {
        let s: f64 = (0..=400).map(|k| pmf(0.5, t, k)).sum::<Result<f64, _>>()?;
        worst_norm = worst_norm.max((s - 1.0).abs());
        for k in 0..=60 {
            ok &= pmf(1.0, t, k)? == poisson_pmf(t, k);
        }
    }
    ok &= worst_norm <= 1e-10;
    Ok((
        ok,
        format!("TV to Polya-Aeppli {tv:.4} (Poisson {:.4}), |sum - 1| {worst_norm:.1e}", c.tv_poisson),
    ))
}

fn c7() -> Outcome {
    let RunResult::Cluster(cells) = execute("c07_euclidean_counterexample.json")? else {
        return Err("expected cluster cells".into());
    };
    let euclid = cells.iter().find(|c| c.metric == Metric::Euclidean).ok_or("no euclidean cell")?;
    let sup = cells.iter().find(|c| c.metric == Metric::Sup).ok_or("no sup cell")?;
    let mut ok = euclid.law.theta.n_samples >= 1_000_000 && euclid.case.center.period == Some(1);
    let mut parts = Vec::new();
    for k in 1..=2u32 {
        let est = euclid.law.alpha_hat[k as usize];
        let reference = ellipse_disk_ratio(1, k).map_err(|e| e.to_string())?;
        let allowance = reference * 2f64.powi(-2 * k as i32);
        let dev = (est.estimate - reference).abs();
        ok &= dev <= 3.0 * est.std_error + allowance;
        parts.push(format!(
            "alpha_hat_{} {:.5}±{:.5} vs {reference:.5}",
            k + 1,
            est.estimate,
            est.std_error
        ));
    }
    let et = euclid.test.as_ref().ok_or("euclidean test missing")?;
    let st = sup.test.as_ref().ok_or("sup test missing")?;
    ok &= et.verdict == Verdict::Violated && et.statistic >= 10.0;
    ok &= st.verdict == Verdict::Consistent;
    parts.push(format!(
        "euclidean {} (max z {:.1}), sup {} (max z {:.2})",
        et.verdict.name(),
        et.statistic,
        st.verdict.name(),
        st.statistic
    ));
    Ok((ok, parts.join("; ")))
}

fn c8() -> Outcome {
    let RunResult::Ulam(cells) = execute("c08_spectral_relation.json")? else {
        return Err("expected ulam cells".into());
    };
    // Per resolution: closed, corner j = 3..=6, generic.
    const PER_M: usize = 6;
    if cells.len() != 3 * PER_M {
        return Err(format!("expected {} cells, got {}", 3 * PER_M, cells.len()));
    }
    let by_m: Vec<&[_]> = cells.chunks(PER_M).collect();
    let theta = |m: usize, i: usize| by_m[m][i].row.theta_spectral.unwrap_or(f64::NAN);
    let mut ok = by_m.iter().all(|c| (c[0].row.lambda - 1.0).abs() <= 1e-12);
    let finest = by_m.len() - 1;
    for j in 1..=4 {
        for m in 1..by_m.len() {
            ok &= (theta(m, j) - 0.5).abs() <= (theta(m - 1, j) - 0.5).abs() + 1e-9;
        }
        if j > 1 {
            ok &= (theta(finest, j) - 0.5).abs() < (theta(finest, j - 1) - 0.5).abs();
        }
    }
    let corner = theta(finest, 4);
    let generic = theta(finest, 5);
    ok &= (corner - 0.5).abs() <= 0.05 && (generic - 1.0).abs() <= 0.05;
    let corners: Vec<String> = (1..=4).map(|j| format!("{:.4}", theta(finest, j))).collect();
    Ok((
        ok,
        format!(
            "m={}: corner j=3..6 [{}], generic {generic:.4}, max |closed lambda - 1| {:.1e}",
            by_m[finest][0].row.m,
            corners.join(", "),
            by_m.iter().map(|c| (c[0].row.lambda - 1.0).abs()).fold(0.0, f64::max)
        ),
    ))
}

fn c9() -> Outcome {
    let dissipative = BakerParams::symmetric(0.5, 0.25).map_err(|e| e.to_string())?;
    let (d_s, d) = dimension_formula(&dissipative).map_err(|e| e.to_string())?;
    let mut ok = d_s == 0.5 && d == 1.5;
    let RunResult::Dimension(cells) = execute("c09_dimension.json")? else {
        return Err("expected dimension cells".into());
    };
    let mut parts = vec![format!("d_s = {d_s}")];
    for c in &cells {
        let (target, tol) = if c.case.params.is_classical() { (2.0, 0.05) } else { (1.5, 0.1) };
        let s = c.dimension.slope;
        ok &= (s.estimate - target).abs() <= tol;
        parts.push(format!("slope {:.4}±{:.4} (target {target} ± {tol})", s.estimate, s.std_error));
    }
    ok &= cells.len() == 2;
    Ok((ok, parts.join("; ")))
}

fn c10() -> Outcome {
    let RunResult::Annulus(cells) = execute("c10_annulus.json")? else {
        return Err("expected annulus cells".into());
    };
    let mut ok = cells.len() == 4;
    let mut parts = Vec::new();
    for c in &cells {
        if c.case.params.is_classical() {
            if c.metric != Metric::Euclidean {
                continue;
            }
            let mut worst = 0.0f64;
            for (r, e) in &c.points {
                let leading = 2.0 * r.powf(c.w - 1.0);
                let allowance = r.powf(2.0 * c.w - 2.0);
                let ratio = (e.estimate - leading).abs() / (3.0 * e.std_error + allowance);
                worst = worst.max(ratio);
            }
            ok &= worst <= 1.0;
            parts.push(format!("classical euclidean worst |R - 2r| / tol {worst:.3}"));
        } else {
            ok &= c.fit.positive_at_95();
            parts.push(format!(
                "{}: delta {:.3}±{:.3}, lower 95% {:.3}",
                c.metric, c.fit.delta, c.fit.std_error, c.fit.lower_95
            ));
        }
    }
    Ok((ok, parts.join("; ")))
}

fn c11() -> Outcome {
    let RunResult::Gumbel(cells) = execute("c11_lebesgue_start.json")? else {
        return Err("expected gumbel cells".into());
    };
    if cells.len() != 2 {
        return Err(format!("expected 2 cells, got {}", cells.len()));
    }
    let (a, b) = (cells[0].result.p_hat, cells[1].result.p_hat);
    let dev = (a.estimate - b.estimate).abs();
    let tol = 3.0 * a.std_error.hypot(b.std_error);
    Ok((
        dev <= tol && cells[0].result.config.tau == 1.0,
        format!("srb {:.4}, lebesgue {:.4}, |dev| {dev:.4} <= {tol:.4}", a.estimate, b.estimate),
    ))
}

fn c12() -> Outcome {
    let RunResult::Conjugacy(cells) = execute("c12_conjugacy.json")? else {
        return Err("expected conjugacy cells".into());
    };
    let ok = !cells.is_empty()
        && cells
            .iter()
            .all(|c| {
                let r = &c.report;
                r.passed() && r.windows == 10_000 && r.steps == 20 && r.skipped * 100 <= r.windows
            });
    let parts: Vec<String> = cells
        .iter()
        .map(|c| {
            format!(
                "max err {:.1e} / tol {:.1e}, {} skipped, {} periodic",
                c.report.max_error, c.report.tolerance, c.report.skipped, c.report.periodic_checked
            )
        })
        .collect();
    Ok((ok, parts.join("; ")))
}

fn main() -> ExitCode {
    let criteria: [(u32, &str, fn() -> Outcome); 12] = [
        (1, "gumbel law, non-periodic center", c1),
        (2, "gumbel law, periodic centers, sup metric", c2),
        (3, "extremal index estimators agree", c3),
        (4, "return time normalization", c4),
        (5, "visit counts, non-periodic center", c5),
        (6, "visit counts, periodic center, sup metric", c6),
        (7, "euclidean cluster counterexample", c7),
        (8, "spectral relation on the Ulam operator", c8),
        (9, "local dimension", c9),
        (10, "annulus condition", c10),
        (11, "lebesgue start against srb start", c11),
        (12, "symbolic conjugacy", c12),
    ];
    let selected: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failures = 0;
    for (id, name, check) in criteria {
        if !selected.is_empty() && !selected.contains(&id) {
            continue;
        }
        let start = Instant::now();
        let (passed, detail) = match check() {
            Ok(v) => v,
            Err(e) => (false, format!("error: {e}")),
        };
        failures += u32::from(!passed);
        println!(
            "criterion {id:>2} {}  {name}: {detail} [{:.1}s]",
            if passed { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64()
        );
    }
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failures} criteria failed");
        ExitCode::FAILURE
    }
}
