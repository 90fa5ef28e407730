//! Plain-text particle tables.
//!
//! ```text
//! # species x_cm y_cm z_cm
//! nucleon 0.0 0.0 0.0
//! Na 1e-5 0 0   # trailing comments are allowed
//! ```
//!
//! The header line is required and must come first; any later line starting
//! with `#` is a comment. Species names resolve through a [`SpeciesTable`].

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::str::FromStr;

use crate::error::{CslError, Result};
use crate::model::{Configuration, Species};
use crate::Real;

pub const HEADER: &str = "# species x_cm y_cm z_cm";

/// Name to mass (daltons) lookup used when reading tables.
#[derive(Debug, Clone, PartialEq)]
pub struct SpeciesTable<T> {
    masses: BTreeMap<String, T>,
}

impl<T: Real> Default for SpeciesTable<T> {
    /// `nucleon` (1 Da), `Na` (23 Da) and `water` (18 Da).
    fn default() -> Self {
        let masses = [("nucleon", 1.0), ("Na", 23.0), ("water", 18.0)]
            .into_iter()
            .map(|(n, m)| (n.to_string(), T::of(m)))
            .collect();
        Self { masses }
    }
}

impl<T: Real> SpeciesTable<T> {
    pub fn empty() -> Self {
        Self {
            masses: BTreeMap::new(),
        }
    }

    pub fn insert(&mut self, name: impl Into<String>, mass: T) -> Result<()> {
        let s = Species::new(name, mass)?;
        self.masses.insert(s.name, s.mass);
        Ok(())
    }

    pub fn get(&self, name: &str) -> Result<Species<T>> {
        self.masses
            .get(name)
            .map(|m| Species {
                name: name.to_string(),
                mass: *m,
            })
            .ok_or_else(|| CslError::UnknownSpecies(name.to_string()))
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.masses.keys().map(String::as_str)
    }
}

fn parse_error(line: usize, column: usize, message: impl Into<String>) -> CslError {
    CslError::Parse {
        line,
        column,
        message: message.into(),
    }
}

/// Splits a line into whitespace-separated tokens with 1-based columns,
/// stopping at a `#`.
fn tokens(line: &str) -> Vec<(usize, &str)> {
    let body = line.split('#').next().unwrap_or("");
    let mut out = Vec::new();
    let mut start = None;
    for (i, ch) in body.char_indices() {
        match (ch.is_whitespace(), start) {
            (false, None) => start = Some(i),
            (true, Some(s)) => {
                out.push((s + 1, &body[s..i]));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        out.push((s + 1, &body[s..]));
    }
    out
}

pub fn parse_table<T: Real + FromStr>(text: &str, species: &SpeciesTable<T>) -> Result<Configuration<T>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, first)) if first.split_whitespace().eq(HEADER.split_whitespace()) => {}
        Some(_) => return Err(parse_error(1, 1, format!("expected header `{HEADER}`"))),
        None => return Err(parse_error(1, 1, "empty table")),
    }
    let mut config = Configuration::new();
    for (idx, raw) in lines {
        let line = idx + 1;
        if raw.trim_start().starts_with('#') {
            continue;
        }
        let toks = tokens(raw);
        if toks.is_empty() {
            continue;
        }
        if toks.len() != 4 {
            let col = toks.get(4).map_or(raw.len() + 1, |t| t.0);
            return Err(parse_error(
                line,
                col,
                format!("expected 4 fields (species x y z), found {}", toks.len()),
            ));
        }
        let (scol, name) = toks[0];
        let s = species
            .get(name)
            .map_err(|_| parse_error(line, scol, format!("unknown species `{name}`")))?;
        let mut pos = [T::zero(); 3];
        for (a, (col, tok)) in toks[1..].iter().enumerate() {
            let v: T = tok
                .parse()
                .map_err(|_| parse_error(line, *col, format!("`{tok}` is not a number")))?;
            if !v.is_finite() {
                return Err(parse_error(line, *col, "coordinate must be finite"));
            }
            pos[a] = v;
        }
        config
            .push(&s, pos)
            .map_err(|e| parse_error(line, scol, e.to_string()))?;
    }
    Ok(config)
}

/// Writes a table that [`parse_table`] reads back exactly.
pub fn write_table<T: Real>(config: &Configuration<T>) -> String {
    let mut out = String::from(HEADER);
    out.push('\n');
    for (s, x) in config.iter() {
        writeln!(out, "{} {} {} {}", s.name, x[0], x[1], x[2]).expect("write to string");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let t = SpeciesTable::<f64>::default();
        let c = Configuration::new()
            .with(&t.get("Na").unwrap(), [1e-5, -2.5e-6, 0.1 + 0.2])
            .unwrap()
            .with(&t.get("nucleon").unwrap(), [0.0; 3])
            .unwrap();
        let text = write_table(&c);
        assert_eq!(parse_table(&text, &t).unwrap(), c);
    }

    #[test]
    fn comments_and_blank_lines() {
        let text = "# species x_cm y_cm z_cm\n\n# note\nnucleon 0 0 1e-5 # trailing\n";
        let c = parse_table::<f64>(text, &SpeciesTable::default()).unwrap();
        assert_eq!(c.len(), 1);
        assert_eq!(c.particles()[0].position, [0.0, 0.0, 1e-5]);
    }

    #[test]
    fn errors_carry_positions() {
        let t = SpeciesTable::<f64>::default();
        let e = parse_table("nucleon 0 0 0\n", &t).unwrap_err();
        assert_eq!(e, parse_error(1, 1, format!("expected header `{HEADER}`")));
        let e = parse_table("# species x_cm y_cm z_cm\nnucleon 0 abc 0\n", &t).unwrap_err();
        assert!(matches!(e, CslError::Parse { line: 2, column: 11, .. }), "{e:?}");
        let e = parse_table("# species x_cm y_cm z_cm\n  K 0 0 0\n", &t).unwrap_err();
        assert!(matches!(e, CslError::Parse { line: 2, column: 3, .. }), "{e:?}");
        let e = parse_table("# species x_cm y_cm z_cm\nNa 0 0\n", &t).unwrap_err();
        assert!(matches!(e, CslError::Parse { line: 2, .. }), "{e:?}");
        let e = parse_table("# species x_cm y_cm z_cm\nNa 0 0 inf\n", &t).unwrap_err();
        assert!(matches!(e, CslError::Parse { line: 2, column: 8, .. }), "{e:?}");
    }
}
