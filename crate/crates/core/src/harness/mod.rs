//! Experiment orchestration: configs and presets, seeded single runs and
//! parameter sweeps, ensemble aggregation, and result export.

pub mod config;
pub mod experiment;
pub mod export;
pub mod normalize;
pub mod rng;
pub mod sweep;

pub use config::{
    apply_parameter, preset, resolve_config, ExperimentConfig, HamiltonianProfile, SweepParameter,
    SweepSpec, PRESET_NAMES,
};
pub use experiment::{
    fetch_series, run_experiment, run_record, series_request, ResultRecord, SeriesRequest,
};
pub use export::{csv_string, export, read_json, write_csv, write_json, ExportFormat, CSV_COLUMNS};
pub use normalize::{aggregate, normalize_records, AggregatePoint, NormalizedPoint, Reference, Stat};
pub use rng::{derive_rng, derive_u64};
pub use sweep::run_sweep;
