//! Configuration files, orbit catalogs and sample exports.

mod catalog;
mod config;
mod json;
pub mod real;

pub use catalog::{
    read_orbit_csv, run_find, write_find_output, Catalog, CatalogOrbit, ClassReport, FindOutput, TOOL_NAME,
};
pub use config::{ConfigError, Resolved, RunConfig, DEFAULT_OUTPUT_DIR};
pub use json::to_canonical_json;
