//! Config-driven experiment runs and their output files.

mod center;
mod config;
mod output;
mod run;

pub use center::{Center, CenterSpec, RECURRENCE_GAP, RECURRENCE_STEPS, TYPICAL_MARGIN};
pub use config::{
    parse_config, AnnulusConfig, BlockSpec, ClusterConfig, ConjugacyConfig, CoverSpec,
    DimensionConfig, EiConfig, ExperimentConfig, GeometryConfig, GumbelConfig, HoleSpec, OneOrMany,
    ParamsSpec, PoincareSpec, RunLengthSpec, StartSpec, UlamConfig, VisitsConfig, COMMANDS,
};
pub use output::{
    resolve_out_dir, write_outputs, Manifest, ManifestEntry, Table, DEFAULT_OUT_DIR, OUT_DIR_ENV,
};
pub use run::{
    run, AnnulusCell, Case, ClusterCell, ConjugacyCell, DimensionCell, EiCell, GumbelCell,
    RunResult, UlamCell, VisitsCell,
};
