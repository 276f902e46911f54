//! Configuration, field files, the result store and the experiment runner.

pub mod cache;
pub mod config;
pub mod field_file;
pub mod run;

pub use cache::{cache_key, Store, StoreExtractor};
pub use config::{ExperimentConfig, Kind};
pub use field_file::{FieldFile, FieldMeta};
pub use run::{run_experiment, RunOutcome};
