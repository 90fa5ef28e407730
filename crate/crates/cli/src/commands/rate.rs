use std::collections::BTreeMap;
use std::path::Path;

use csl_core::rate::{
    gamma_accelerated, gamma_exact, gamma_field, regime_classify, DecayRate, FieldGrid, RegimeThresholds,
    DEFAULT_CUTOFF,
};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::config::{load, InlineSuperposition, Params, ParamsSpec, SuperpositionSpec};
use crate::failure::Failure;
use crate::output::{json_report, num, Csv, Format, Provenance};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Engine {
    Exact,
    Accelerated,
    Field,
}

fn all_engines() -> Vec<Engine> {
    vec![Engine::Exact, Engine::Accelerated, Engine::Field]
}

fn default_cutoff() -> f64 {
    DEFAULT_CUTOFF
}

fn default_cell() -> f64 {
    0.25
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RateFile {
    params: ParamsSpec,
    superposition: SuperpositionSpec,
    #[serde(default)]
    species: BTreeMap<String, f64>,
    #[serde(default = "all_engines")]
    methods: Vec<Engine>,
    #[serde(default = "default_cutoff")]
    cutoff: f64,
    /// Field-quadrature cell in units of `r_C`.
    #[serde(default = "default_cell")]
    grid_cell: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RateConfig {
    pub params: Params,
    pub superposition: InlineSuperposition,
    pub methods: Vec<Engine>,
    pub cutoff: f64,
    pub grid_cell: f64,
}

pub fn resolve(input: &Path) -> Result<RateConfig, Failure> {
    let file: RateFile = load(input)?;
    let superposition = file.superposition.resolve(&file.species, Some(input))?;
    let params = file.params.resolve(Some(&superposition.build()?))?;
    if file.methods.is_empty() {
        return Err(Failure::parse("methods must not be empty"));
    }
    Ok(RateConfig {
        params,
        superposition,
        methods: file.methods,
        cutoff: file.cutoff,
        grid_cell: file.grid_cell,
    })
}

pub fn run(config: &RateConfig, provenance: &Provenance) -> Result<String, Failure> {
    let sup = config.superposition.build()?;
    let p = config.params.build()?;
    let mut results: Vec<DecayRate<f64>> = Vec::new();
    for m in &config.methods {
        results.push(match m {
            Engine::Exact => gamma_exact(&sup, &p)?,
            Engine::Accelerated => gamma_accelerated(&sup, &p, config.cutoff)?,
            Engine::Field => gamma_field(&sup, &p, &FieldGrid::with_cell(config.grid_cell))?,
        });
    }
    let reference = results.first().map(|r| r.rate).unwrap_or(0.0);
    let delta = |r: f64| {
        if reference > 0.0 {
            (r - reference) / reference
        } else {
            r - reference
        }
    };
    let regime = if sup.comp_a.is_empty() {
        None
    } else {
        Some(regime_classify(&sup, &p, &RegimeThresholds::default())?)
    };
    let lambda = p.lambda();
    let w = sup.comp_a.total_mass() / p.m_n();
    let mut notes = Vec::new();
    if results.iter().all(|r| r.rate == 0.0) {
        notes.push("zero-rate: the branches have identical smeared mass densities, so there is no collapse".to_string());
    }
    for r in results.iter().filter(|r| r.clamped) {
        notes.push(format!(
            "clamped: {} returned {:e} s^-1 from floating point cancellation, reported as 0",
            r.method, r.raw
        ));
    }

    Ok(match provenance.format {
        Format::Json => {
            let rates: Vec<_> = results
                .iter()
                .map(|r| {
                    json!({
                        "method": r.method.as_str(),
                        "rate": r.rate,
                        "rate_over_lambda": r.rate / lambda,
                        "raw": r.raw,
                        "clamped": r.clamped,
                        "error_bound": r.error_bound,
                        "relative_delta_vs_first": delta(r.rate),
                    })
                })
                .collect();
            let regime = regime.map(|g| {
                json!({
                    "regime": g.regime,
                    "leading_order": g.leading_order,
                    "witness": g.witness,
                })
            });
            json_report(
                provenance,
                json!({
                    "lambda": lambda,
                    "total_weight": w,
                    "rates": rates,
                    "regime": regime,
                    "notes": notes,
                }),
            )
        }
        Format::Csv => {
            let mut csv = Csv::new(
                provenance,
                &["method", "rate", "rate_over_lambda", "raw", "clamped", "error_bound", "relative_delta_vs_first"],
            );
            for r in &results {
                csv.row(&[
                    r.method.to_string(),
                    num(r.rate),
                    num(r.rate / lambda),
                    num(r.raw),
                    r.clamped.to_string(),
                    r.error_bound.map(num).unwrap_or_default(),
                    num(delta(r.rate)),
                ]);
            }
            if let Some(g) = regime {
                let lo = g.leading_order.map(num).unwrap_or_else(|| "none".into());
                csv.comment(&format!("regime: {:?}, leading order {lo}", g.regime));
            }
            for n in &notes {
                csv.comment(n);
            }
            csv.into_string()
        }
    })
}
