pub mod eval;
pub mod inspect;
pub mod serve;
pub mod simulate;

use std::path::Path;

use labelassist::synthetic::{self, SyntheticParams};
use labelassist::workbench::{Project, WorkbenchError};

pub const EXIT_INPUT: u8 = 2;
pub const EXIT_BIND: u8 = 3;

/// Failure of a subcommand with its process exit code and a machine code
/// printed in the diagnostic.
#[derive(Debug)]
pub struct CliError {
    pub exit: u8,
    pub code: &'static str,
    pub source: anyhow::Error,
}

impl CliError {
    pub fn input(code: &'static str, source: impl Into<anyhow::Error>) -> Self {
        Self {
            exit: EXIT_INPUT,
            code,
            source: source.into(),
        }
    }
}

impl From<WorkbenchError> for CliError {
    fn from(e: WorkbenchError) -> Self {
        Self::input(e.code(), e)
    }
}

pub type CliResult = Result<(), CliError>;

pub fn load_project(path: &Path) -> Result<Project, CliError> {
    Project::load(path).map_err(CliError::from)
}

pub fn export(project: &Path, out: &Path) -> CliResult {
    let p = load_project(project)?;
    let manifest = p.export_bundle(out)?;
    println!("exported {} labeled pairs to {}", manifest.count, out.display());
    Ok(())
}

pub fn gen_synthetic(out: &Path, params: SyntheticParams) -> CliResult {
    let ds = synthetic::write_dataset(out, &params).map_err(|e| CliError::input("storage_failure", e))?;
    println!(
        "wrote {} samples ({} scenes x {} frames) to {}",
        params.scenes * params.frames,
        params.scenes,
        params.frames,
        ds.root.display()
    );
    Ok(())
}
