pub mod config;
pub mod manifest;
pub mod plots;
pub mod run;
pub mod validate;

use std::path::{Path, PathBuf};

pub use config::{ExperimentConfig, ExperimentKind, OutputFormat};
pub use manifest::RunManifest;
pub use plots::emit_plots;
pub use run::run;

/// Environment variable that overrides the configured output directory.
pub const OUT_ENV: &str = "CONELAB_OUT";

/// `--out`, then `$CONELAB_OUT`, then `output.dir`, then
/// `conelab-out/<kind>`.
pub fn output_dir(flag: Option<&Path>, env: Option<&str>, config: &ExperimentConfig, kind: ExperimentKind) -> PathBuf {
    flag.map(Path::to_path_buf)
        .or_else(|| env.filter(|e| !e.is_empty()).map(PathBuf::from))
        .or_else(|| config.get("output.dir").map(PathBuf::from))
        .unwrap_or_else(|| Path::new("conelab-out").join(kind.as_str()))
}
