use std::path::Path;

use csl_core::scenarios::{log_grid, scan, BoundCriterion, PerceptionScenario};
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::scenario::{load_scenario, CriterionFlags};
use crate::failure::Failure;
use crate::output::{json_report, num, Csv, Format, Provenance};

/// Grid flags; `lambda` bounds in s^-1, `r_c` values in cm.
#[derive(Debug, Clone)]
pub struct GridFlags {
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub lambda_count: usize,
    pub r_c: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanConfig {
    pub scenario: PerceptionScenario<f64>,
    pub criterion: BoundCriterion<f64>,
    pub lambdas: Vec<f64>,
    pub r_cs: Vec<f64>,
}

pub fn resolve(
    name: Option<&str>,
    input: Option<&Path>,
    flags: &CriterionFlags,
    grid: &GridFlags,
) -> Result<ScanConfig, Failure> {
    let mut scenario = load_scenario(name, input)?;
    if let Some(k) = flags.photons {
        scenario = scenario.with_photons(k);
    }
    scenario.validate()?;
    Ok(ScanConfig {
        scenario,
        criterion: flags.criterion()?,
        lambdas: log_grid(grid.lambda_min, grid.lambda_max, grid.lambda_count)?,
        r_cs: grid.r_c.clone(),
    })
}

pub fn run(config: &ScanConfig, provenance: &Provenance) -> Result<String, Failure> {
    let rows = scan(&config.lambdas, &config.r_cs, &config.scenario, &config.criterion)?;
    Ok(match provenance.format {
        Format::Json => json_report(provenance, json!({ "scenario": config.scenario.name, "rows": rows })),
        Format::Csv => {
            let mut csv = Csv::new(
                provenance,
                &["lambda", "r_c", "rate_sum", "collapse_time", "collapses", "clustering_caveat"],
            );
            for r in &rows {
                csv.row(&[
                    num(r.lambda),
                    num(r.r_c),
                    num(r.rate_sum),
                    num(r.collapse_time),
                    r.collapses.to_string(),
                    r.clustering_caveat.to_string(),
                ]);
            }
            if rows.iter().any(|r| r.clustering_caveat) {
                csv.comment("clustering_caveat: cluster counts were derived at r_c = 1e-5 cm and are held fixed");
            }
            csv.into_string()
        }
    })
}
