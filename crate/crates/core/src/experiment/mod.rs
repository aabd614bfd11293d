//! Configuration, commands and file formats for experiment runs.

pub mod commands;
pub mod config;
pub mod metrics;
pub mod profiles;

pub use commands::{
    cmd_eval, cmd_plotdata, cmd_sweep, cmd_train, format_eval, SweepAxis, SweepRow, TrainReport,
    CHECKPOINT_FILE, METRICS_FILE, RUN_FILE, SWEEP_FILE,
};
pub use config::{ChannelSection, EnvSection, ExperimentConfig, GeometrySection, RunSection};
pub use metrics::{
    moving_average, plot_table, read_metrics, read_metrics_file, write_metrics, MetricsWriter,
    METRICS_HEADER, METRICS_SCHEMA,
};
