use std::collections::BTreeMap;
use std::io;
use std::path::{Path, PathBuf};

use labelassist::imageio;
use labelassist::imgcore::Mask;
use labelassist::pre_assist::{evaluate_prelabel, PrelabelEvaluation, PrelabelSpec};
use labelassist::selector::SampleId;
use labelassist::workbench::{Project, WorkbenchError};

use super::{load_project, CliError, CliResult};

#[derive(Debug, Clone, Copy)]
pub enum Choice {
    Otsu,
    PreviousLabel,
    External,
}

pub fn run(project: &Path, choice: Choice, labels: &Path, external_dir: Option<PathBuf>, csv: bool) -> CliResult {
    let p = load_project(project)?;
    let spec = match choice {
        Choice::Otsu => PrelabelSpec::Otsu,
        Choice::PreviousLabel => PrelabelSpec::PreviousLabel,
        Choice::External => {
            let dir = external_dir.or_else(|| p.config().prelabel.external_dir.clone()).ok_or_else(|| {
                CliError::input(
                    "invalid_config",
                    anyhow::anyhow!("strategy external needs --external-dir or prelabel.external_dir"),
                )
            })?;
            if !dir.is_dir() {
                return Err(WorkbenchError::MissingDirectory(dir).into());
            }
            PrelabelSpec::ExternalMasks { dir }
        }
    };
    let truth = load_ground_truth(&p, labels)?;
    if truth.is_empty() {
        return Err(CliError::input(
            "no_ground_truth",
            anyhow::anyhow!("{} holds no mask for any pool sample", labels.display()),
        ));
    }
    let eval = evaluate_prelabel(&spec, &truth, &p).map_err(WorkbenchError::from)?;
    if csv {
        write_csv(&eval).map_err(|e| CliError::input("output", e))?;
    } else {
        print_table(spec.name(), &eval);
    }
    Ok(())
}

/// Masks in `dir` named `<stem>.png` or `<stem>_label.png` for pool samples.
fn load_ground_truth(p: &Project, dir: &Path) -> Result<BTreeMap<SampleId, Mask>, CliError> {
    if !dir.is_dir() {
        return Err(WorkbenchError::MissingDirectory(dir.to_path_buf()).into());
    }
    let mut out = BTreeMap::new();
    for info in p.samples() {
        let candidates = [dir.join(format!("{}.png", info.id)), dir.join(format!("{}_label.png", info.id))];
        let Some(path) = candidates.iter().find(|c| c.is_file()) else {
            continue;
        };
        let mask = imageio::load_mask(path).map_err(|e| CliError::input("invalid_mask", e))?;
        if (mask.width(), mask.height()) != (info.width, info.height) {
            return Err(WorkbenchError::DimensionMismatch {
                sample: info.id.clone(),
                width: info.width,
                height: info.height,
                found_width: mask.width(),
                found_height: mask.height(),
            }
            .into());
        }
        out.insert(info.id.clone(), mask);
    }
    Ok(out)
}

fn write_csv(eval: &PrelabelEvaluation) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(io::stdout().lock());
    w.write_record(["sample_id", "dsc"])?;
    for (id, dsc) in &eval.per_sample {
        w.write_record([id.as_str(), &dsc.to_string()])?;
    }
    for id in &eval.skipped {
        w.write_record([id.as_str(), ""])?;
    }
    w.write_record(["mean", &eval.mean.to_string()])?;
    w.flush()?;
    Ok(())
}

fn print_table(name: &str, eval: &PrelabelEvaluation) {
    let width = eval
        .per_sample
        .keys()
        .chain(&eval.skipped)
        .map(|id| id.as_str().len())
        .max()
        .unwrap_or(0)
        .max(9);
    println!("{:<width$}  dsc", "sample_id");
    for (id, dsc) in &eval.per_sample {
        println!("{:<width$}  {dsc:.4}", id.as_str());
    }
    for id in &eval.skipped {
        println!("{:<width$}  (no pre-label)", id.as_str());
    }
    println!(
        "{name}: mean DSC {:.4} over {} samples ({} skipped)",
        eval.mean,
        eval.per_sample.len(),
        eval.skipped.len()
    );
}
