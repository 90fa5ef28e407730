use std::path::Path;

use csl_core::scenarios::{
    builtin_scenario, comparison_table, lambda_bound, scenario_rate_sum, BoundCriterion, PerceptionScenario,
    BUILTIN_NAMES,
};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::config::load;
use crate::failure::Failure;
use crate::output::{json_report, num, Csv, Format, Provenance};

/// Command-line overrides shared by `scenario` and `scan`.
#[derive(Debug, Clone, Default)]
pub struct CriterionFlags {
    pub photons: Option<u32>,
    pub threshold: Option<f64>,
    pub perception_time: Option<f64>,
    pub slack: Option<u32>,
}

impl CriterionFlags {
    pub fn criterion(&self) -> Result<BoundCriterion<f64>, Failure> {
        let d = BoundCriterion::default();
        let c = BoundCriterion {
            gamma_t_threshold: self.threshold.unwrap_or(d.gamma_t_threshold),
            perception_time: self.perception_time.unwrap_or(d.perception_time),
            slack_decades: self.slack.unwrap_or(d.slack_decades),
        };
        c.validate()?;
        Ok(c)
    }
}

/// A built-in name or a scenario file.
pub fn load_scenario(name: Option<&str>, input: Option<&Path>) -> Result<PerceptionScenario<f64>, Failure> {
    let s = match (name, input) {
        (Some(_), Some(_)) => return Err(Failure::parse("give a scenario name or --input, not both")),
        (Some(n), None) => builtin_scenario(n).ok_or_else(|| {
            Failure::parse(format!("unknown scenario `{n}`; available: {}", BUILTIN_NAMES.join(", ")))
        })?,
        (None, Some(p)) => load(p)?,
        (None, None) => {
            return Err(Failure::parse(format!(
                "no scenario given; available: {}",
                BUILTIN_NAMES.join(", ")
            )))
        }
    };
    s.validate()?;
    Ok(s)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub scenario: PerceptionScenario<f64>,
    pub criterion: BoundCriterion<f64>,
    pub compare: bool,
}

pub fn resolve(
    name: Option<&str>,
    input: Option<&Path>,
    flags: &CriterionFlags,
    compare: bool,
) -> Result<ScenarioConfig, Failure> {
    let mut scenario = load_scenario(name, input)?;
    if let Some(k) = flags.photons {
        scenario = scenario.with_photons(k);
    }
    scenario.validate()?;
    Ok(ScenarioConfig {
        scenario,
        criterion: flags.criterion()?,
        compare,
    })
}

pub fn run(config: &ScenarioConfig, provenance: &Provenance) -> Result<String, Failure> {
    let s = scenario_rate_sum(&config.scenario)?;
    let bound = lambda_bound(s, &config.criterion)?;
    let table = if config.compare {
        Some(comparison_table(&config.criterion, config.scenario.photon_count)?)
    } else {
        None
    };
    let stages: Vec<_> = config
        .scenario
        .stages
        .iter()
        .map(|st| (st, st.contribution(), st.contribution() * config.scenario.photon_count as f64 / s))
        .collect();

    Ok(match provenance.format {
        Format::Json => {
            let stage_json: Vec<_> = stages
                .iter()
                .map(|(st, c, share)| {
                    json!({"name": st.name, "n": st.n, "N": st.count, "f": st.f, "contribution": c, "share": share})
                })
                .collect();
            json_report(
                provenance,
                json!({
                    "scenario": config.scenario.name,
                    "photon_count": config.scenario.photon_count,
                    "stages": stage_json,
                    "rate_sum": s,
                    "lambda_bound": bound,
                    "comparison": table,
                }),
            )
        }
        Format::Csv => {
            let mut csv = Csv::new(provenance, &["quantity", "value"]);
            for (st, c, _) in &stages {
                csv.row(&[format!("contribution:{}", st.name), num(*c)]);
            }
            csv.row(&["rate_sum".into(), num(s)]);
            csv.row(&["lambda_bound".into(), num(bound.lambda)]);
            csv.row(&["lambda_low".into(), num(bound.low)]);
            csv.row(&["lambda_high".into(), num(bound.high)]);
            if let Some(rows) = table {
                for r in rows {
                    let (s_lo, s_hi) = r
                        .rate_sum
                        .map(|(a, b)| (num(a), num(b)))
                        .unwrap_or_default();
                    let tag = format!("{}:{}photon", r.label, r.photon_count);
                    csv.row(&[format!("compare:{tag}:rate_sum_low"), s_lo]);
                    csv.row(&[format!("compare:{tag}:rate_sum_high"), s_hi]);
                    csv.row(&[format!("compare:{tag}:lambda_upper"), num(r.lambda.0)]);
                    csv.row(&[format!("compare:{tag}:lambda_lower"), num(r.lambda.1)]);
                    csv.row(&[
                        format!("compare:{tag}:provenance"),
                        serde_json::to_value(r.provenance)
                            .ok()
                            .and_then(|v| v.as_str().map(str::to_string))
                            .unwrap_or_default(),
                    ]);
                }
            }
            csv.into_string()
        }
    })
}
