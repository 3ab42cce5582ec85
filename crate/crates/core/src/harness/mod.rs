//! Seeded parallel Monte Carlo runs, rate fitting and persistence.

pub mod config;
pub mod export;
pub mod rate;
pub mod run;

pub use config::{default_z_grid, BaiSettings, Check, EnsembleConfig, ExpectationSource, Format, RunConfig};
pub use export::{export, read_csv, read_json, CsvTable, DeltaTable, DiagTable, Metadata, SpectraTable, Tabular};
pub use rate::{
    delta_n_estimate, rate_fit, summarize_deltas, DeltaSummary, RateFit, RATE_SLOPE_MAX, WITNESS_SPREAD_MAX,
};
pub use run::{
    replica_matrix, run_bai, run_diagnostics, run_replicas, DiagnosticCell, Replica, ReplicaSet, SizeRun,
};
