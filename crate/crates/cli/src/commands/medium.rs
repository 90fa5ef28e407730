use std::path::Path;

use csl_core::medium::{nearest_neighbor_mismatch, restrict_to_species};
use csl_core::model::Superposition;
use csl_core::rate::gamma_exact;
use csl_core::table::write_table;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::config::{load, MediumKind, MediumSpec, Params, ParamsSpec};
use crate::failure::Failure;
use crate::output::{json_report, num, Csv, Format, Provenance};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct MediumFile {
    medium: MediumSpec,
    /// Defaults to `lambda = 1 s^-1` at the medium's `r_c`, so rates read as `Gamma / lambda`.
    params: Option<ParamsSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MediumConfig {
    pub medium: MediumSpec,
    pub params: Params,
}

/// `seed` overrides the lattice seed in the file.
pub fn resolve(input: &Path, seed: Option<u64>) -> Result<MediumConfig, Failure> {
    let mut file: MediumFile = load(input)?;
    if let Some(s) = seed {
        file.medium.seed = s;
    }
    let sup = file.medium.generate()?;
    let spec = file.params.unwrap_or(ParamsSpec {
        r_c: file.medium.r_c,
        lambda: Some(1.0),
        gamma: None,
        target_rate: None,
    });
    Ok(MediumConfig {
        params: spec.resolve(Some(&sup))?,
        medium: file.medium,
    })
}

pub struct MediumReport {
    pub summary: String,
    pub superposition: Superposition<f64>,
}

pub fn run(config: &MediumConfig, provenance: &Provenance) -> Result<MediumReport, Failure> {
    let sup = config.medium.generate()?;
    let p = config.params.build()?;
    let tagged = &config.medium.solute.name;
    let all = gamma_exact(&sup, &p)?;
    let only = gamma_exact(&restrict_to_species(&sup, tagged)?, &p)?;
    let mismatch = nearest_neighbor_mismatch(&sup, p.r_c());
    let ratio = if only.rate > 0.0 { all.rate / only.rate } else { f64::NAN };
    let weight = sup.comp_a.total_mass() / p.m_n();
    let kind = match config.medium.kind {
        MediumKind::Swap => "swap",
        MediumKind::Displacement => "displacement",
    };

    let summary = match provenance.format {
        Format::Json => json_report(
            provenance,
            json!({
                "kind": kind,
                "particles_a": sup.comp_a.len(),
                "particles_b": sup.comp_b.len(),
                "total_weight": weight,
                "lambda": p.lambda(),
                "gamma_all": all.rate,
                "gamma_all_raw": all.raw,
                "gamma_all_clamped": all.clamped,
                "gamma_tagged_only": only.rate,
                "all_over_tagged": if ratio.is_finite() { Some(ratio) } else { None },
                "swap_bound": p.lambda() * weight * weight,
                "mismatch_r_c": mismatch,
            }),
        ),
        Format::Csv => {
            let mut csv = Csv::new(provenance, &["quantity", "value"]);
            for (k, v) in [
                ("particles_a", sup.comp_a.len() as f64),
                ("particles_b", sup.comp_b.len() as f64),
                ("total_weight", weight),
                ("lambda", p.lambda()),
                ("gamma_all", all.rate),
                ("gamma_all_raw", all.raw),
                ("gamma_tagged_only", only.rate),
                ("all_over_tagged", ratio),
                ("swap_bound", p.lambda() * weight * weight),
                ("mismatch_r_c", mismatch),
            ] {
                csv.row(&[k.to_string(), num(v)]);
            }
            csv.comment(&format!("kind: {kind}"));
            if all.clamped {
                csv.comment("clamped: gamma_all was floating point cancellation, reported as 0");
            }
            csv.into_string()
        }
    };
    Ok(MediumReport {
        summary,
        superposition: sup,
    })
}

/// A particle table for one branch with the provenance line after the header.
pub fn table_text(sup: &Superposition<f64>, branch: usize, provenance: &Provenance) -> String {
    let c = if branch == 0 { &sup.comp_a } else { &sup.comp_b };
    let body = write_table(c);
    let mut lines = body.splitn(2, '\n');
    let header = lines.next().unwrap_or_default();
    let rest = lines.next().unwrap_or_default();
    format!(
        "{header}\n{}# branch: {}\n{rest}",
        provenance.csv_line(),
        if branch == 0 { "a" } else { "b" }
    )
}
