//! Experiment orchestration: configs, seeded runs, aggregation and output files.

pub mod aggregate;
pub mod config;
pub mod output;
pub mod plot;
pub mod simulate;

pub use aggregate::{aggregate, AggregateRow, AggregateSeries};
pub use config::{ExperimentConfig, InstanceSource, ValidatedConfig};
pub use output::{aggregate_dir, emit_outputs, plot_dir};
pub use simulate::{run_experiment, simulate_run, SimulationContext};
