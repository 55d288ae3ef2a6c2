//! Batch front end: config parsing, command dispatch and report files.

mod commands;
mod config;
mod report;

pub use commands::{failed_checks, outer_hits, phase_sweep, run, sort_quantile, RunError, RunResult};
pub use config::{
    parse_config, parse_config_with, parse_document, parse_u64_text, Command, Config, ConfigError, ConfigResult,
    IntegrandChoice, MeasureSection, Overrides, PcgCheckSection, PortfolioSection, PrnSection, QaeSection,
    ResourcesSection, RunSection, RunSpec, VerifySection, DEFAULT_OUT_DIR, DEFAULT_SEED,
};
pub use report::{Category, DataTable, Line, Report, Value};
