//! Config-file loading and the pieces shared by several subcommands.
//!
//! Files are TOML unless the extension is `.json`. Every struct rejects unknown
//! keys. Each subcommand resolves its file into a self-contained value (tables
//! inlined, defaults filled in) which is what gets embedded in the output.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use csl_core::medium::{generate_displacement_scenario, generate_swap_scenario, MediumBox};
use csl_core::model::{CollapseParams, Configuration, Species, Superposition};
use csl_core::rate::gamma_exact;
use csl_core::table::{parse_table, SpeciesTable};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::failure::Failure;

pub fn load<T: DeserializeOwned>(path: &Path) -> Result<T, Failure> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))
        .map_err(Failure::Io)?;
    let is_json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
    let parsed = if is_json {
        serde_json::from_str(&text).map_err(anyhow::Error::from)
    } else {
        toml::from_str(&text).map_err(anyhow::Error::from)
    };
    parsed
        .with_context(|| format!("parsing {}", path.display()))
        .map_err(Failure::Parse)
}

fn base_dir(path: Option<&Path>) -> PathBuf {
    path.and_then(Path::parent)
        .map(Path::to_path_buf)
        .unwrap_or_default()
}

/// `[params]`: exactly one of `lambda`, `gamma` or `target_rate`, plus `r_c`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsSpec {
    /// Correlation length in cm.
    pub r_c: f64,
    /// Collapse rate in s^-1.
    pub lambda: Option<f64>,
    /// Coupling in cm^3 s^-1.
    pub gamma: Option<f64>,
    /// Rescale `lambda` so that the exact `Gamma` of the superposition equals this (s^-1).
    pub target_rate: Option<f64>,
}

/// Resolved parameters; the pair the core types are built from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    pub gamma: f64,
    pub r_c: f64,
}

impl Params {
    pub fn build(&self) -> Result<CollapseParams<f64>, Failure> {
        Ok(CollapseParams::new(self.gamma, self.r_c)?)
    }
}

impl ParamsSpec {
    pub fn resolve(&self, sup: Option<&Superposition<f64>>) -> Result<Params, Failure> {
        let given = [self.lambda.is_some(), self.gamma.is_some(), self.target_rate.is_some()];
        if given.iter().filter(|g| **g).count() != 1 {
            return Err(Failure::parse("[params] needs exactly one of lambda, gamma, target_rate"));
        }
        let p = if let Some(l) = self.lambda {
            CollapseParams::from_lambda(l, self.r_c)?
        } else if let Some(g) = self.gamma {
            CollapseParams::new(g, self.r_c)?
        } else {
            let target = self.target_rate.expect("checked above");
            let Some(sup) = sup else {
                return Err(Failure::parse("target_rate needs a superposition"));
            };
            let unit = CollapseParams::from_lambda(1.0, self.r_c)?;
            let g = gamma_exact(sup, &unit)?.rate;
            if !(g > 0.0) {
                return Err(Failure::parse("target_rate needs a superposition with non-zero Gamma"));
            }
            unit.scaled(target / g)?
        };
        Ok(Params {
            gamma: p.gamma(),
            r_c: p.r_c(),
        })
    }
}

/// One particle: species name and position in cm.
pub type Row = (String, f64, f64, f64);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpeciesSpec {
    pub name: String,
    /// Daltons.
    pub mass: f64,
}

impl SpeciesSpec {
    fn build(&self) -> Result<Species<f64>, Failure> {
        Ok(Species::new(self.name.clone(), self.mass)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MediumKind {
    Swap,
    Displacement,
}

/// Lattice generator settings; lengths in units of `r_C`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MediumSpec {
    pub kind: MediumKind,
    /// Correlation length in cm.
    pub r_c: f64,
    pub side: f64,
    #[serde(default = "default_spacing")]
    pub spacing: f64,
    #[serde(default)]
    pub jitter: f64,
    pub fluid: SpeciesSpec,
    pub solute: SpeciesSpec,
    /// Solute (swap) or tagged (displacement) particles.
    pub n_solutes: usize,
    pub n_fluid: Option<usize>,
    #[serde(default)]
    pub seed: u64,
}

fn default_spacing() -> f64 {
    0.2
}

impl MediumSpec {
    pub fn generate(&self) -> Result<Superposition<f64>, Failure> {
        let mut m = MediumBox::new(self.r_c, self.side, self.fluid.build()?, self.solute.build()?, self.seed);
        m.spacing = self.spacing;
        m.jitter = self.jitter;
        m.n_fluid = self.n_fluid;
        Ok(match self.kind {
            MediumKind::Swap => generate_swap_scenario(&m, self.n_solutes)?,
            MediumKind::Displacement => generate_displacement_scenario(&m, self.n_solutes)?,
        })
    }
}

/// `[superposition]`: particles inline (`a`, `b`), from tables (`table_a`,
/// `table_b`, relative to the config file) or from a lattice generator.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuperpositionSpec {
    /// `|amp_a|^2`; amplitudes are real and non-negative.
    #[serde(default = "half")]
    pub weight_a: f64,
    pub a: Option<Vec<Row>>,
    pub b: Option<Vec<Row>>,
    pub table_a: Option<PathBuf>,
    pub table_b: Option<PathBuf>,
    pub medium: Option<MediumSpec>,
}

fn half() -> f64 {
    0.5
}

/// A superposition with every particle written out, plus the species masses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InlineSuperposition {
    pub weight_a: f64,
    pub species: BTreeMap<String, f64>,
    pub a: Vec<Row>,
    pub b: Vec<Row>,
}

fn rows(c: &Configuration<f64>) -> Vec<Row> {
    c.iter().map(|(s, x)| (s.name.clone(), x[0], x[1], x[2])).collect()
}

fn from_rows(rows: &[Row], table: &SpeciesTable<f64>) -> Result<Configuration<f64>, Failure> {
    let mut c = Configuration::new();
    for (name, x, y, z) in rows {
        c.push(&table.get(name)?, [*x, *y, *z])?;
    }
    Ok(c)
}

impl InlineSuperposition {
    /// `weight_a` is kept as given rather than recomputed from the amplitude,
    /// so that rebuilding reproduces the amplitudes bit for bit.
    pub fn from_superposition(s: &Superposition<f64>, weight_a: f64) -> Self {
        let species = s
            .comp_a
            .species()
            .iter()
            .chain(s.comp_b.species())
            .map(|sp| (sp.name.clone(), sp.mass))
            .collect();
        Self {
            weight_a,
            species,
            a: rows(&s.comp_a),
            b: rows(&s.comp_b),
        }
    }

    pub fn build(&self) -> Result<Superposition<f64>, Failure> {
        let mut table = SpeciesTable::empty();
        for (name, mass) in &self.species {
            table.insert(name.clone(), *mass)?;
        }
        let a = from_rows(&self.a, &table)?;
        let b = from_rows(&self.b, &table)?;
        Ok(Superposition::with_weight(a, b, self.weight_a)?)
    }
}

impl SuperpositionSpec {
    pub fn resolve(
        &self,
        extra_species: &BTreeMap<String, f64>,
        config_path: Option<&Path>,
    ) -> Result<InlineSuperposition, Failure> {
        let mut table = SpeciesTable::default();
        for (name, mass) in extra_species {
            table.insert(name.clone(), *mass)?;
        }
        let dir = base_dir(config_path);
        let sources = [
            self.a.is_some() || self.b.is_some(),
            self.table_a.is_some() || self.table_b.is_some(),
            self.medium.is_some(),
        ];
        if sources.iter().filter(|s| **s).count() != 1 {
            return Err(Failure::parse(
                "[superposition] needs exactly one source: a/b, table_a/table_b or medium",
            ));
        }
        let (a, b) = if let Some(m) = &self.medium {
            let s = m.generate()?;
            (s.comp_a, s.comp_b)
        } else if self.a.is_some() || self.b.is_some() {
            let (Some(a), Some(b)) = (&self.a, &self.b) else {
                return Err(Failure::parse("inline superposition needs both a and b"));
            };
            (from_rows(a, &table)?, from_rows(b, &table)?)
        } else {
            let (Some(ta), Some(tb)) = (&self.table_a, &self.table_b) else {
                return Err(Failure::parse("table superposition needs both table_a and table_b"));
            };
            (read_table(&dir.join(ta), &table)?, read_table(&dir.join(tb), &table)?)
        };
        let sup = Superposition::with_weight(a, b, self.weight_a)?;
        Ok(InlineSuperposition::from_superposition(&sup, self.weight_a))
    }
}

pub fn read_table(path: &Path, table: &SpeciesTable<f64>) -> Result<Configuration<f64>, Failure> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))
        .map_err(Failure::Io)?;
    parse_table(&text, table).map_err(|e| Failure::Parse(anyhow::Error::new(e).context(format!("{}", path.display()))))
}

/// Parses `"1e-5,2e-5"` style lists.
pub fn parse_list(s: &str) -> anyhow::Result<Vec<f64>> {
    let out: Result<Vec<f64>, _> = s.split(',').map(|t| t.trim().parse::<f64>()).collect();
    let out = out.with_context(|| format!("`{s}` is not a comma-separated list of numbers"))?;
    if out.is_empty() {
        bail!("empty list");
    }
    Ok(out)
}
