use std::io;
use std::path::{Path, PathBuf};

use labelassist::imageio;
use labelassist::post_assist::{Inspector, InspectionMetric, InspectionMetricSpec};

use super::{CliError, CliResult, EXIT_INPUT};

#[derive(Debug, Clone, Copy)]
pub struct Targets {
    pub segments: u32,
    pub holes: u32,
    pub weight_segments: f64,
    pub weight_holes: f64,
    pub gamma0: f64,
}

/// Writes CSV `file,gamma_segments,gamma_holes,final,warning,error` in file
/// name order; the warning list and error count go to stderr.
pub fn run(dir: &Path, t: Targets, strict: bool) -> CliResult {
    let inspector = Inspector::new(
        vec![
            InspectionMetricSpec {
                metric: InspectionMetric::SegmentCount { target: t.segments },
                weight: t.weight_segments,
            },
            InspectionMetricSpec {
                metric: InspectionMetric::HoleCount { target: t.holes },
                weight: t.weight_holes,
            },
        ],
        t.gamma0,
    )
    .map_err(|e| CliError::input("invalid_arguments", e))?;

    let files = mask_files(dir)?;
    let mut w = csv::Writer::from_writer(io::stdout().lock());
    let out_err = |e: csv::Error| CliError::input("output", e);
    w.write_record(["file", "gamma_segments", "gamma_holes", "final", "warning", "error"])
        .map_err(out_err)?;
    let (mut warnings, mut errors, mut inspected) = (Vec::new(), Vec::new(), 0usize);
    for path in &files {
        let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        match imageio::load_mask(path) {
            Ok(mask) => {
                let r = inspector.inspect(&mask).map_err(|e| CliError::input("inspection_error", e))?;
                inspected += 1;
                if r.warning {
                    warnings.push(name.clone());
                }
                w.write_record([
                    name,
                    r.per_metric[0].gamma.to_string(),
                    r.per_metric[1].gamma.to_string(),
                    r.final_score.to_string(),
                    r.warning.to_string(),
                    String::new(),
                ])
                .map_err(out_err)?;
            }
            Err(e) => {
                w.write_record([name.clone(), String::new(), String::new(), String::new(), String::new(), e.to_string()])
                    .map_err(out_err)?;
                errors.push(name);
            }
        }
    }
    w.flush().map_err(|e| CliError::input("output", e))?;
    drop(w);

    eprintln!("{inspected} masks inspected, {} warnings, {} errors", warnings.len(), errors.len());
    for name in &warnings {
        eprintln!("warning: {name}");
    }
    for name in &errors {
        eprintln!("unreadable: {name}");
    }
    if inspected == 0 {
        return Err(CliError::input(
            "no_masks",
            anyhow::anyhow!("{} contains no decodable mask", dir.display()),
        ));
    }
    if strict && !(warnings.is_empty() && errors.is_empty()) {
        return Err(CliError {
            exit: EXIT_INPUT,
            code: "inspection_failed",
            source: anyhow::anyhow!("{} flagged, {} unreadable", warnings.len(), errors.len()),
        });
    }
    Ok(())
}

fn mask_files(dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let entries = std::fs::read_dir(dir).map_err(|e| {
        CliError::input("missing_directory", anyhow::anyhow!("{}: {e}", dir.display()))
    })?;
    let mut files = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| CliError::input("missing_directory", e))?.path();
        if path.is_file() && imageio::is_sample_file(&path) {
            files.push(path);
        }
    }
    files.sort();
    Ok(files)
}
