//! Visit counts, cluster laws and their Poisson-type limits.

mod cluster;
mod pmf;
mod visits;

pub use cluster::{
    estimate_cluster_law, geometric_cluster_test, run_length_law, ClusterLaw, GeometricTest,
    RunLengthLaw, Verdict, GEOMETRIC_Z_LIMIT,
};
pub use pmf::{ln_factorial, poisson_pmf, polya_aeppli_pmf, tv_distance};
pub use visits::{
    gof_distance, visit_counts, visit_counts_multi, ReferenceLaw, VisitHistogram, MAX_HORIZON,
};
