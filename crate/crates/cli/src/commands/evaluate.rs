use std::path::Path;

use steerdial_core::eval::evaluate_run;

use crate::artifacts;
use crate::config::RunConfig;
use crate::failure::Failure;

/// Scores a generation file and writes `report_<stem>.json` next to the other outputs.
pub fn run(cfg: &RunConfig, generations: &Path) -> Result<(), Failure> {
    if !generations.is_file() {
        return Err(Failure::data(format!(
            "generation file {} does not exist",
            generations.display()
        )));
    }
    let report = evaluate_run(generations, &cfg.strategies)?;
    let stem = generations
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("generations");
    let stem = stem.strip_prefix("generations_").unwrap_or(stem);
    artifacts::ensure_dir(&cfg.output_dir)?;
    let path = cfg.out(&format!("report_{stem}.json"));
    report.write_json(&path)?;
    println!("{}", report.table());
    println!("report -> {}", path.display());
    Ok(())
}
