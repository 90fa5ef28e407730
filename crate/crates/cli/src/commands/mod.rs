//! Subcommands. Each resolves its inputs into a self-contained config, which
//! is embedded in the output and is all that `replay` needs to re-run it.

pub mod medium;
pub mod rate;
pub mod scan;
pub mod scenario;
pub mod simulate;

use anyhow::Context;
use serde::Serialize;

use crate::failure::Failure;
use crate::output::{Format, Provenance};

#[derive(Debug, Clone, PartialEq)]
pub enum Resolved {
    Rate(rate::RateConfig),
    Scenario(scenario::ScenarioConfig),
    Simulate(simulate::SimulateConfig),
    Medium(medium::MediumConfig),
    Scan(scan::ScanConfig),
}

/// What a run produces: the main artifact and, for `medium`, the two branch tables.
pub struct Output {
    pub text: String,
    pub tables: Option<[String; 2]>,
}

impl Resolved {
    pub fn command(&self) -> &'static str {
        match self {
            Resolved::Rate(_) => "rate",
            Resolved::Scenario(_) => "scenario",
            Resolved::Simulate(_) => "simulate",
            Resolved::Medium(_) => "medium",
            Resolved::Scan(_) => "scan",
        }
    }

    /// The seed the run actually uses, for commands that own one.
    pub fn own_seed(&self) -> Option<u64> {
        match self {
            Resolved::Simulate(c) => Some(c.ensemble.seed),
            Resolved::Medium(c) => Some(c.medium.seed),
            _ => None,
        }
    }

    pub fn provenance(&self, seed: u64, workers: usize, format: Format) -> Provenance {
        fn p(cmd: &str, seed: u64, w: usize, f: Format, c: &impl Serialize) -> Provenance {
            Provenance::new(cmd, seed, w, f, c)
        }
        let cmd = self.command();
        match self {
            Resolved::Rate(c) => p(cmd, seed, workers, format, c),
            Resolved::Scenario(c) => p(cmd, seed, workers, format, c),
            Resolved::Simulate(c) => p(cmd, seed, workers, format, c),
            Resolved::Medium(c) => p(cmd, seed, workers, format, c),
            Resolved::Scan(c) => p(cmd, seed, workers, format, c),
        }
    }

    pub fn from_provenance(p: &Provenance) -> Result<Self, Failure> {
        fn de<T: serde::de::DeserializeOwned>(p: &Provenance) -> Result<T, Failure> {
            serde_json::from_value(p.config.clone())
                .with_context(|| format!("embedded {} config", p.command))
                .map_err(Failure::Parse)
        }
        Ok(match p.command.as_str() {
            "rate" => Resolved::Rate(de(p)?),
            "scenario" => Resolved::Scenario(de(p)?),
            "simulate" => Resolved::Simulate(de(p)?),
            "medium" => Resolved::Medium(de(p)?),
            "scan" => Resolved::Scan(de(p)?),
            other => return Err(Failure::parse(format!("unknown command `{other}` in provenance"))),
        })
    }

    pub fn run(&self, provenance: &Provenance) -> Result<Output, Failure> {
        let text = |t: String| Output { text: t, tables: None };
        Ok(match self {
            Resolved::Rate(c) => text(rate::run(c, provenance)?),
            Resolved::Scenario(c) => text(scenario::run(c, provenance)?),
            Resolved::Simulate(c) => text(simulate::run(c, provenance)?),
            Resolved::Scan(c) => text(scan::run(c, provenance)?),
            Resolved::Medium(c) => {
                let r = medium::run(c, provenance)?;
                Output {
                    text: r.summary,
                    tables: Some([0, 1].map(|b| medium::table_text(&r.superposition, b, provenance))),
                }
            }
        })
    }
}
