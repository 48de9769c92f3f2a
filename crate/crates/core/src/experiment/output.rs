use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use sha2::{Digest, Sha256};

use super::config::ExperimentConfig;
use super::run::{Case, RunResult};
use crate::error::{Error, Result};
use crate::evt::Start;
use crate::geometry::write_constants;
use crate::pointprocess::ReferenceLaw;
use crate::symbolic::Metric;

/// Environment variable consulted for the output directory.
pub const OUT_DIR_ENV: &str = "BAKEREVT_OUT_DIR";
pub const DEFAULT_OUT_DIR: &str = "out";

/// A named output file.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub bytes: Vec<u8>,
}

fn csv_table<T: Serialize>(name: impl Into<String>, rows: &[T]) -> Result<Table> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| Error::Csv(e.into_error().into()))?;
    Ok(Table {
        name: name.into(),
        bytes,
    })
}

/// Two-column data for one figure.
fn plot_table(name: &str, header: (&str, &str), points: &[(f64, f64)]) -> Result<Table> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([header.0, header.1])?;
    for (a, b) in points {
        w.serialize((a, b))?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| Error::Csv(e.into_error().into()))?;
    Ok(Table {
        name: format!("plots/{}.csv", slug(name)),
        bytes,
    })
}

fn slug(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        if c.is_ascii_alphanumeric() || c == '.' || c == '-' {
            out.push(c);
        } else if !out.ends_with('_') {
            out.push('_');
        }
    }
    out.trim_matches('_').to_string()
}

fn case_slug(case: &Case, metric: Metric) -> String {
    let p = &case.params;
    format!(
        "{}_a{}_ga{}_gb{}_{}",
        case.center.label,
        p.alpha(),
        p.gamma_a(),
        p.gamma_b(),
        metric
    )
}

#[derive(Serialize)]
struct GumbelRow<'a> {
    experiment: &'a str,
    params: String,
    center: &'a str,
    metric: Metric,
    tau: f64,
    n: u64,
    n_samples: u64,
    p_hat: f64,
    stderr: f64,
    reference: f64,
    theta_hat: f64,
    theta_stderr: f64,
    method: &'a str,
    start: &'a str,
    seed: u64,
}

#[derive(Serialize)]
struct EiRow<'a> {
    experiment: &'a str,
    params: String,
    center: &'a str,
    metric: Metric,
    r: f64,
    k_max: u64,
    n_samples: u64,
    theta_hat: f64,
    stderr: f64,
    reference: Option<f64>,
    method: &'a str,
    seed: u64,
}

#[derive(Serialize)]
struct QkRow<'a> {
    params: String,
    center: &'a str,
    metric: Metric,
    r: f64,
    k: usize,
    q_hat: f64,
    stderr: f64,
}

#[derive(Serialize)]
struct PoincareRow<'a> {
    params: String,
    center: &'a str,
    metric: Metric,
    r: f64,
    k_tail: Option<u64>,
    tail_at_k_tail: f64,
    k_consistent: Option<u64>,
    k_last: u64,
    sum: f64,
    sum_stderr: f64,
    passed: bool,
}

#[derive(Serialize)]
struct VisitRow<'a> {
    params: String,
    center: &'a str,
    metric: Metric,
    r: f64,
    t: f64,
    k: u64,
    empirical_p: f64,
    poisson_p: f64,
    polya_aeppli_p: Option<f64>,
}

#[derive(Serialize)]
struct VisitSummaryRow<'a> {
    params: String,
    center: &'a str,
    metric: Metric,
    r: f64,
    t: f64,
    horizon: u64,
    ball_measure: f64,
    n_samples: u64,
    theta_ref: Option<f64>,
    theta_hat: f64,
    stderr: f64,
    tv_poisson: f64,
    tv_pa: Option<f64>,
    verdict: &'a str,
    seed: u64,
}

#[derive(Serialize)]
struct AlphaHatRow<'a> {
    params: String,
    center: &'a str,
    metric: Metric,
    r: f64,
    period: u64,
    k: usize,
    alpha_hat: f64,
    stderr: f64,
    reference: Option<f64>,
}

#[derive(Serialize)]
struct LambdaRow<'a> {
    params: String,
    center: &'a str,
    metric: Metric,
    r: f64,
    period: u64,
    k: usize,
    lambda: f64,
    stderr: f64,
    run_length_lambda: Option<f64>,
}

#[derive(Serialize)]
struct ClusterSummaryRow<'a> {
    params: String,
    center: &'a str,
    metric: Metric,
    r: f64,
    period: u64,
    k_max: usize,
    n_samples: u64,
    theta: f64,
    stderr: f64,
    verdict: Option<&'a str>,
    statistic: Option<f64>,
    run_length_theta: Option<f64>,
    seed: u64,
}

#[derive(Serialize)]
struct SurvivalRow<'a> {
    m: u32,
    hole_spec: &'a str,
    n: u64,
    survival: f64,
}

#[derive(Serialize)]
struct MeasureRow<'a> {
    quantity: &'a str,
    params: String,
    center_x: f64,
    center_y: f64,
    metric: Metric,
    r: Option<f64>,
    estimate: f64,
    std_error: f64,
    n_samples: u64,
    seed: u64,
}

#[derive(Serialize)]
struct ConjugacyRow {
    params: String,
    windows: u64,
    steps: usize,
    depth: usize,
    tolerance: f64,
    max_error: f64,
    failures: u64,
    skipped: u64,
    periodic_checked: u64,
    periodic_failures: u64,
    passed: bool,
}

impl RunResult {
    /// CSV tables and two-column plot files, in a fixed order.
    pub fn tables(&self, cfg: &ExperimentConfig) -> Result<Vec<Table>> {
        let seed = cfg.seed().unwrap_or(0);
        let mut out = Vec::new();
        match self {
            RunResult::Gumbel(cells) => {
                let rows: Vec<GumbelRow> = cells
                    .iter()
                    .map(|c| {
                        let r = &c.result;
                        GumbelRow {
                            experiment: "gumbel",
                            params: c.case.params.label(),
                            center: &c.case.center.label,
                            metric: r.config.metric,
                            tau: r.config.tau,
                            n: r.config.n,
                            n_samples: r.config.n_samples,
                            p_hat: r.p_hat.estimate,
                            stderr: r.p_hat.std_error,
                            reference: r.reference,
                            theta_hat: r.theta_hat.estimate,
                            theta_stderr: r.theta_hat.std_error,
                            method: "block",
                            start: match r.start {
                                Start::Srb => "srb",
                                Start::Lebesgue { .. } => "lebesgue",
                            },
                            seed: r.config.seed,
                        }
                    })
                    .collect();
                out.push(csv_table("gumbel.csv", &rows)?);
                let key_of = |c: &super::run::GumbelCell| {
                    let start = match c.result.start {
                        Start::Srb => "srb",
                        Start::Lebesgue { .. } => "lebesgue",
                    };
                    format!("{}_{start}", case_slug(&c.case, c.result.config.metric))
                };
                let mut keys: Vec<(String, u64)> = Vec::new();
                for c in cells {
                    let key = (key_of(c), c.result.config.n);
                    if !keys.contains(&key) {
                        keys.push(key);
                    }
                }
                for (key, n) in keys {
                    let pts: Vec<(f64, f64)> = cells
                        .iter()
                        .filter(|c| key_of(c) == key && c.result.config.n == n)
                        .map(|c| (c.result.config.tau, c.result.p_hat.estimate))
                        .collect();
                    out.push(plot_table(
                        &format!("gumbel_{key}_n{n}"),
                        ("tau", "p_hat"),
                        &pts,
                    )?);
                }
            }
            RunResult::Ei(cells) => {
                let mut rows = Vec::new();
                let mut qk = Vec::new();
                let mut poincare = Vec::new();
                for c in cells {
                    let params = c.case.params.label();
                    let center = c.case.center.label.as_str();
                    rows.push(EiRow {
                        experiment: "ei",
                        params: params.clone(),
                        center,
                        metric: c.metric,
                        r: c.radius,
                        k_max: c.k_max,
                        n_samples: c.estimate.theta.n_samples,
                        theta_hat: c.estimate.theta.estimate,
                        stderr: c.estimate.theta.std_error,
                        reference: c.reference,
                        method: c.estimate.method.name(),
                        seed,
                    });
                    if let Some(b) = &c.block {
                        rows.push(EiRow {
                            experiment: "ei",
                            params: params.clone(),
                            center,
                            metric: c.metric,
                            r: b.threshold.map_or(f64::NAN, |t| t.radius),
                            k_max: b.config.n,
                            n_samples: b.config.n_samples,
                            theta_hat: b.theta_hat.estimate,
                            stderr: b.theta_hat.std_error,
                            reference: c.reference,
                            method: "block",
                            seed,
                        });
                    }
                    for (k, q) in c.estimate.q.iter().enumerate() {
                        qk.push(QkRow {
                            params: params.clone(),
                            center,
                            metric: c.metric,
                            r: c.radius,
                            k,
                            q_hat: q.estimate,
                            stderr: q.std_error,
                        });
                    }
                    if let Some(p) = &c.poincare {
                        poincare.push(PoincareRow {
                            params: params.clone(),
                            center,
                            metric: c.metric,
                            r: c.radius,
                            k_tail: p.k_tail,
                            tail_at_k_tail: p.tail_at_k_tail,
                            k_consistent: p.k_consistent,
                            k_last: p.k_last,
                            sum: p.sum.estimate,
                            sum_stderr: p.sum.std_error,
                            passed: p.passed(),
                        });
                    }
                    let pts: Vec<(f64, f64)> = c
                        .estimate
                        .q
                        .iter()
                        .enumerate()
                        .map(|(k, q)| (k as f64, q.estimate))
                        .collect();
                    out.push(plot_table(
                        &format!("qk_{}_r{}", case_slug(&c.case, c.metric), c.radius),
                        ("k", "q_hat"),
                        &pts,
                    )?);
                }
                out.insert(0, csv_table("ei.csv", &rows)?);
                out.insert(1, csv_table("qk.csv", &qk)?);
                if !poincare.is_empty() {
                    out.insert(2, csv_table("poincare.csv", &poincare)?);
                }
            }
            RunResult::Visits(cells) => {
                let mut rows = Vec::new();
                let mut summary = Vec::new();
                let mut plots = Vec::new();
                for c in cells {
                    let h = &c.histogram;
                    let params = c.case.params.label();
                    let center = c.case.center.label.as_str();
                    let pa = c
                        .theta
                        .map(|th| ReferenceLaw::polya_aeppli(th, h.t))
                        .transpose()?;
                    let freq = h.frequencies();
                    for (k, &p) in freq.iter().enumerate() {
                        let k = k as u64;
                        rows.push(VisitRow {
                            params: params.clone(),
                            center,
                            metric: c.metric,
                            r: c.radius,
                            t: h.t,
                            k,
                            empirical_p: p,
                            poisson_p: ReferenceLaw::Poisson { t: h.t }.pmf(k),
                            polya_aeppli_p: pa.map(|law| law.pmf(k)),
                        });
                    }
                    summary.push(VisitSummaryRow {
                        params: params.clone(),
                        center,
                        metric: c.metric,
                        r: c.radius,
                        t: h.t,
                        horizon: h.horizon,
                        ball_measure: h.measure,
                        n_samples: h.n_samples,
                        theta_ref: c.theta,
                        theta_hat: c.theta_hat.estimate,
                        stderr: c.theta_hat.std_error,
                        tv_poisson: c.tv_poisson,
                        tv_pa: c.tv_polya_aeppli,
                        verdict: c.verdict(),
                        seed,
                    });
                    let pts: Vec<(f64, f64)> = freq
                        .iter()
                        .enumerate()
                        .map(|(k, &p)| (k as f64, p))
                        .collect();
                    plots.push(plot_table(
                        &format!("visits_{}_t{}", case_slug(&c.case, c.metric), h.t),
                        ("k", "empirical_p"),
                        &pts,
                    )?);
                }
                out.push(csv_table("visits.csv", &rows)?);
                out.push(csv_table("visits_summary.csv", &summary)?);
                out.extend(plots);
            }
            RunResult::Cluster(cells) => {
                let mut alpha_rows = Vec::new();
                let mut lambda_rows = Vec::new();
                let mut summary = Vec::new();
                let mut plots = Vec::new();
                for c in cells {
                    let params = c.case.params.label();
                    let center = c.case.center.label.as_str();
                    let law = &c.law;
                    for (i, a) in law.alpha_hat.iter().enumerate() {
                        alpha_rows.push(AlphaHatRow {
                            params: params.clone(),
                            center,
                            metric: c.metric,
                            r: c.radius,
                            period: law.period,
                            k: i + 1,
                            alpha_hat: a.estimate,
                            stderr: a.std_error,
                            reference: if i == 0 {
                                Some(1.0)
                            } else {
                                c.reference.get(i - 1).copied().flatten()
                            },
                        });
                    }
                    for (i, l) in law.lambda.iter().enumerate() {
                        lambda_rows.push(LambdaRow {
                            params: params.clone(),
                            center,
                            metric: c.metric,
                            r: c.radius,
                            period: law.period,
                            k: i + 1,
                            lambda: l.estimate,
                            stderr: l.std_error,
                            run_length_lambda: c
                                .run_length
                                .as_ref()
                                .map(|rl| rl.lambda(i as u64 + 1)),
                        });
                    }
                    summary.push(ClusterSummaryRow {
                        params: params.clone(),
                        center,
                        metric: c.metric,
                        r: c.radius,
                        period: law.period,
                        k_max: law.k_max(),
                        n_samples: law.theta.n_samples,
                        theta: law.theta.estimate,
                        stderr: law.theta.std_error,
                        verdict: c.test.as_ref().map(|t| t.verdict.name()),
                        statistic: c.test.as_ref().map(|t| t.statistic),
                        run_length_theta: c.run_length.as_ref().map(|rl| rl.theta.estimate),
                        seed,
                    });
                    let pts: Vec<(f64, f64)> = law
                        .alpha_hat
                        .iter()
                        .enumerate()
                        .map(|(i, a)| ((i + 1) as f64, a.estimate))
                        .collect();
                    plots.push(plot_table(
                        &format!("alpha_hat_{}", case_slug(&c.case, c.metric)),
                        ("k", "alpha_hat"),
                        &pts,
                    )?);
                }
                out.push(csv_table("cluster_alpha_hat.csv", &alpha_rows)?);
                out.push(csv_table("cluster_lambda.csv", &lambda_rows)?);
                out.push(csv_table("cluster_summary.csv", &summary)?);
                out.extend(plots);
            }
            RunResult::Ulam(cells) => {
                let rows: Vec<_> = cells.iter().map(|c| c.row.clone()).collect();
                out.push(csv_table("ulam.csv", &rows)?);
                let survival: Vec<SurvivalRow> = cells
                    .iter()
                    .flat_map(|c| {
                        c.survival.iter().map(|&(n, s)| SurvivalRow {
                            m: c.row.m,
                            hole_spec: &c.row.hole_spec,
                            n,
                            survival: s,
                        })
                    })
                    .collect();
                if !survival.is_empty() {
                    out.push(csv_table("ulam_survival.csv", &survival)?);
                }
                let mut specs: Vec<&str> = Vec::new();
                for c in cells {
                    if c.row.theta_spectral.is_some() && !specs.contains(&c.row.hole_spec.as_str())
                    {
                        specs.push(&c.row.hole_spec);
                    }
                }
                for spec in specs {
                    let pts: Vec<(f64, f64)> = cells
                        .iter()
                        .filter(|c| c.row.hole_spec == spec)
                        .filter_map(|c| c.row.theta_spectral.map(|t| (c.row.m as f64, t)))
                        .collect();
                    out.push(plot_table(
                        &format!("theta_spectral_{spec}"),
                        ("m", "theta_spectral"),
                        &pts,
                    )?);
                }
                for c in cells {
                    if let Some(bytes) = &c.dump {
                        out.push(Table {
                            name: format!("dumps/ulam_m{}_{}.bin", c.row.m, slug(&c.row.hole_spec)),
                            bytes: bytes.clone(),
                        });
                    }
                }
            }
            RunResult::Dimension(cells) => {
                let mut rows = Vec::new();
                for c in cells {
                    let p = c.case.center.point;
                    let row = |quantity, r, estimate, std_error, n_samples| MeasureRow {
                        quantity,
                        params: c.case.params.label(),
                        center_x: p.x,
                        center_y: p.y,
                        metric: c.metric,
                        r,
                        estimate,
                        std_error,
                        n_samples,
                        seed,
                    };
                    for (r, e) in &c.dimension.points {
                        rows.push(row(
                            "ball_measure",
                            Some(*r),
                            e.estimate,
                            e.std_error,
                            e.n_samples,
                        ));
                    }
                    let s = &c.dimension.slope;
                    rows.push(row(
                        "local_dimension",
                        None,
                        s.estimate,
                        s.std_error,
                        s.n_samples,
                    ));
                    rows.push(row("dimension_formula", None, c.formula.1, 0.0, 0));
                    let pts: Vec<(f64, f64)> = c
                        .dimension
                        .points
                        .iter()
                        .map(|(r, e)| (r.ln(), e.estimate.ln()))
                        .collect();
                    out.push(plot_table(
                        &format!("dimension_{}", case_slug(&c.case, c.metric)),
                        ("log_r", "log_measure"),
                        &pts,
                    )?);
                }
                out.insert(0, csv_table("measure.csv", &rows)?);
            }
            RunResult::Annulus(cells) => {
                let mut rows = Vec::new();
                for c in cells {
                    let p = c.case.center.point;
                    let row = |quantity, r, estimate, std_error, n_samples| MeasureRow {
                        quantity,
                        params: c.case.params.label(),
                        center_x: p.x,
                        center_y: p.y,
                        metric: c.metric,
                        r,
                        estimate,
                        std_error,
                        n_samples,
                        seed,
                    };
                    for (r, e) in &c.points {
                        rows.push(row(
                            "annulus_ratio",
                            Some(*r),
                            e.estimate,
                            e.std_error,
                            e.n_samples,
                        ));
                    }
                    let n = c.points.first().map_or(0, |(_, e)| e.n_samples);
                    rows.push(row(
                        "annulus_exponent",
                        None,
                        c.fit.delta,
                        c.fit.std_error,
                        n,
                    ));
                    rows.push(row(
                        "annulus_exponent_lower_95",
                        None,
                        c.fit.lower_95,
                        0.0,
                        n,
                    ));
                    let pts: Vec<(f64, f64)> = c
                        .points
                        .iter()
                        .filter(|(_, e)| e.estimate > 0.0)
                        .map(|(r, e)| (r.ln(), e.estimate.ln()))
                        .collect();
                    out.push(plot_table(
                        &format!("annulus_{}", case_slug(&c.case, c.metric)),
                        ("log_r", "log_ratio"),
                        &pts,
                    )?);
                }
                out.insert(0, csv_table("measure.csv", &rows)?);
            }
            RunResult::Geometry(rows) => {
                let mut bytes = Vec::new();
                write_constants(&mut bytes, rows)?;
                out.push(Table {
                    name: "geometry_constants.csv".into(),
                    bytes,
                });
            }
            RunResult::Conjugacy(cells) => {
                let rows: Vec<ConjugacyRow> = cells
                    .iter()
                    .map(|c| {
                        let r = &c.report;
                        ConjugacyRow {
                            params: c.params.label(),
                            windows: r.windows,
                            steps: r.steps,
                            depth: r.depth,
                            tolerance: r.tolerance,
                            max_error: r.max_error,
                            failures: r.failures,
                            skipped: r.skipped,
                            periodic_checked: r.periodic_checked,
                            periodic_failures: r.periodic_failures,
                            passed: r.passed(),
                        }
                    })
                    .collect();
                out.push(csv_table("conjugacy.csv", &rows)?);
            }
        }
        Ok(out)
    }
}

/// Output directory: explicit flag, then the config's `output`, then
/// [`OUT_DIR_ENV`], then [`DEFAULT_OUT_DIR`].
pub fn resolve_out_dir(flag: Option<&Path>, cfg: &ExperimentConfig) -> PathBuf {
    flag.map(Path::to_path_buf)
        .or_else(|| cfg.output().cloned())
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ManifestEntry {
    pub name: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Manifest {
    pub command: String,
    pub seed: Option<u64>,
    pub created_unix: u64,
    pub files: Vec<ManifestEntry>,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        context: path.to_path_buf(),
        source,
    }
}

fn write_file(dir: &Path, name: &str, bytes: &[u8]) -> Result<ManifestEntry> {
    let path = dir.join(name);
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(io_err(parent))?;
    }
    std::fs::write(&path, bytes).map_err(io_err(&path))?;
    Ok(ManifestEntry {
        name: name.to_string(),
        bytes: bytes.len() as u64,
        sha256: hex::encode(Sha256::digest(bytes)),
    })
}

#[derive(Serialize)]
struct Resolved<'a> {
    config: &'a ExperimentConfig,
    centers: Vec<ResolvedCenter>,
    version: &'static str,
}

#[derive(Serialize, PartialEq)]
struct ResolvedCenter {
    label: String,
    params: String,
    x: f64,
    y: f64,
    period: Option<u64>,
}

fn resolved_centers(result: &RunResult) -> Vec<ResolvedCenter> {
    let cases: Vec<&Case> = match result {
        RunResult::Gumbel(c) => c.iter().map(|c| &c.case).collect(),
        RunResult::Ei(c) => c.iter().map(|c| &c.case).collect(),
        RunResult::Visits(c) => c.iter().map(|c| &c.case).collect(),
        RunResult::Cluster(c) => c.iter().map(|c| &c.case).collect(),
        RunResult::Dimension(c) => c.iter().map(|c| &c.case).collect(),
        RunResult::Annulus(c) => c.iter().map(|c| &c.case).collect(),
        RunResult::Ulam(_) | RunResult::Geometry(_) | RunResult::Conjugacy(_) => Vec::new(),
    };
    let mut out: Vec<ResolvedCenter> = Vec::new();
    for case in cases {
        let rc = ResolvedCenter {
            label: case.center.label.clone(),
            params: case.params.label(),
            x: case.center.point.x,
            y: case.center.point.y,
            period: case.center.period,
        };
        if !out.contains(&rc) {
            out.push(rc);
        }
    }
    out
}

/// Write the tables, the resolved config and a manifest of checksums into `dir`.
pub fn write_outputs(dir: &Path, cfg: &ExperimentConfig, result: &RunResult) -> Result<Manifest> {
    std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut files = Vec::new();
    let resolved = Resolved {
        config: cfg,
        centers: resolved_centers(result),
        version: env!("CARGO_PKG_VERSION"),
    };
    let mut json = serde_json::to_vec_pretty(&resolved)?;
    json.push(b'\n');
    files.push(write_file(dir, "config.resolved.json", &json)?);
    for t in result.tables(cfg)? {
        files.push(write_file(dir, &t.name, &t.bytes)?);
    }
    let manifest = Manifest {
        command: cfg.command().to_string(),
        seed: cfg.seed(),
        created_unix: SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map_or(0, |d| d.as_secs()),
        files,
    };
    let mut json = serde_json::to_vec_pretty(&manifest)?;
    json.push(b'\n');
    let path = dir.join("manifest.json");
    std::fs::write(&path, json).map_err(io_err(&path))?;
    Ok(manifest)
}
