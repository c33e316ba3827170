use std::collections::BTreeMap;
use std::io;
use std::path::Path;

use labelassist::selector::{QueryStrategyId, SampleId, SelectorConfig};
use labelassist::workbench::{cluster_coverage, group_coverage, SimulationOutcome};

use super::{load_project, CliError, CliResult};

pub fn run(
    project: &Path,
    strategy: QueryStrategyId,
    budget: usize,
    seed: Option<u64>,
    scenes: Option<&Path>,
    csv: bool,
) -> CliResult {
    let p = load_project(project)?;
    let groups = scenes.map(read_groups).transpose()?;
    let cfg = SelectorConfig {
        seed: seed.unwrap_or(p.config().selector.seed),
        tie_break: p.config().selector.tie_break,
        ..SelectorConfig::single(strategy.clone())
    };
    let outcome = p.simulate_sampling(&cfg, budget)?;
    let clustering = p.clustering()?;
    let ids: Vec<SampleId> = outcome.selected.iter().map(|s| s.id.clone()).collect();

    let group_of = |id: &SampleId| {
        groups
            .as_ref()
            .and_then(|g| g.get(id).cloned())
            .unwrap_or_default()
    };
    if csv {
        write_csv(&outcome, |id| clustering.assignment[id], group_of).map_err(|e| CliError::input("output", e))?;
    } else {
        println!("rank  sample_id  score  cluster  group");
        for (rank, s) in outcome.selected.iter().enumerate() {
            println!(
                "{:>4}  {}  {:.4}  {}  {}",
                rank + 1,
                s.id,
                s.score,
                clustering.assignment[&s.id],
                group_of(&s.id)
            );
        }
    }

    let summary = if csv { |s: String| eprintln!("{s}") } else { |s: String| println!("{s}") };
    summary(format!(
        "strategy {strategy}: selected {} of {} requested",
        outcome.selected.len(),
        outcome.requested
    ));
    if outcome.capped {
        summary(format!("budget capped at the pool size {}", p.pool().len()));
    }
    let (covered, total) = cluster_coverage(&ids, clustering);
    summary(format!("cluster coverage: {covered}/{total}"));
    if let Some(groups) = &groups {
        let (covered, total) = group_coverage(&ids, groups);
        summary(format!("group coverage: {covered}/{total}"));
    }
    Ok(())
}

/// CSV `sample_id,<group>` with a header row.
fn read_groups(path: &Path) -> Result<BTreeMap<SampleId, String>, CliError> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| CliError::input("invalid_scenes", e))?;
    let mut out = BTreeMap::new();
    for row in reader.records() {
        let row = row.map_err(|e| CliError::input("invalid_scenes", e))?;
        match (row.get(0), row.get(1)) {
            (Some(id), Some(group)) => {
                out.insert(SampleId::new(id.trim()), group.trim().to_string());
            }
            _ => {
                return Err(CliError::input(
                    "invalid_scenes",
                    anyhow::anyhow!("{}: rows need sample_id and group columns", path.display()),
                ))
            }
        }
    }
    Ok(out)
}

fn write_csv(
    outcome: &SimulationOutcome,
    cluster: impl Fn(&SampleId) -> usize,
    group: impl Fn(&SampleId) -> String,
) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(io::stdout().lock());
    w.write_record(["rank", "sample_id", "score", "cluster", "group"])?;
    for (rank, s) in outcome.selected.iter().enumerate() {
        w.write_record([
            (rank + 1).to_string(),
            s.id.to_string(),
            s.score.to_string(),
            cluster(&s.id).to_string(),
            group(&s.id),
        ])?;
    }
    w.flush()?;
    Ok(())
}
