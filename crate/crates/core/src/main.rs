use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use conelab::cli::{emit_plots, output_dir, run, ExperimentConfig, ExperimentKind, OUT_ENV};
use conelab::{Error, Result};

#[derive(Parser)]
#[command(name = "conelab", version, about = "Waves, rays and diffraction on flat cones")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// experiment config (`key = value` lines); defaults apply without one
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// output directory (overrides $CONELAB_OUT and `output.dir`)
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// also write gnuplot column files and scripts under `plots/`
    #[arg(long, global = true)]
    plots: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// bicharacteristics vs the model-cone closed form
    Flow,
    /// developing map and near-miss deflection
    Geodesics,
    /// geometric continuations and the covering identity
    Relation,
    /// normal-form coordinates of a collar metric
    NormalForm,
    /// evolve projected initial data
    Solve,
    /// mollified fundamental solution with front loci
    Fundamental,
    /// sliding-window regularity scan at probe points
    Regularity,
    /// commutator residuals under grid refinement
    Commutators,
    /// the acceptance suite
    Validate {
        /// run only these criteria (comma separated)
        #[arg(long, value_delimiter = ',')]
        only: Vec<u32>,
    },
}

impl Command {
    fn kind(&self) -> ExperimentKind {
        match self {
            Command::Flow => ExperimentKind::Flow,
            Command::Geodesics => ExperimentKind::Geodesics,
            Command::Relation => ExperimentKind::Relation,
            Command::NormalForm => ExperimentKind::NormalForm,
            Command::Solve => ExperimentKind::Solve,
            Command::Fundamental => ExperimentKind::Fundamental,
            Command::Regularity => ExperimentKind::Regularity,
            Command::Commutators => ExperimentKind::Commutators,
            Command::Validate { .. } => ExperimentKind::Validate,
        }
    }
}

fn execute(cli: &Cli) -> Result<bool> {
    let kind = cli.command.kind();
    let mut config = match &cli.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::new(kind),
    };
    match config.get("kind") {
        None => config.set("kind", kind.as_str()),
        Some(k) if k != kind.as_str() => {
            return Err(Error::Config(format!("config is for `{k}`, not `{kind}`")));
        }
        Some(_) => {}
    }
    if let Some(f) = cli.format {
        config.set("output.format", if matches!(f, Format::Csv) { "csv" } else { "json" });
    }
    if let Command::Validate { only } = &cli.command {
        if !only.is_empty() {
            let ids: Vec<String> = only.iter().map(u32::to_string).collect();
            config.set("validate.criteria", &ids.join(","));
        }
    }
    let env = std::env::var(OUT_ENV).ok();
    let out = output_dir(cli.out.as_deref(), env.as_deref(), &config, kind);
    let manifest = run(&config, &out)?;
    for c in &manifest.criteria {
        let detail = c.detail.as_deref().map(|d| format!(" - {d}")).unwrap_or_default();
        println!("[{}] {}: {:e} ({:?}){detail}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.value, c.bound);
    }
    let mut files = manifest.files.len();
    if cli.plots {
        files += emit_plots(&out)?.len();
    }
    println!(
        "{files} files in {} ({:.1} s): {}",
        out.display(),
        manifest.wall_clock_seconds,
        if manifest.passed { "all checks passed" } else { "some checks FAILED" }
    );
    Ok(manifest.passed)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("conelab: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
