//! The photo-transduction cluster ledger and the collapse-rate bounds it implies.
//!
//! A scenario is a list of stages, each a set of `N` well-separated clusters of
//! `n` daltons, optionally scaled by an effective-mass factor `f`. Its rate
//! multiplier is `S = photons * sum_i f_i^2 n_i^2 N_i`, so that `Gamma = lambda * S`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, CslError, Result};
use crate::medium::{GMP_FACTOR, PROTEIN_FACTOR, SODIUM_FACTOR};
use crate::model::CollapseParams;
use crate::rate::{mass_cluster_rate, ClusterGroup, ClusterSpec};
use crate::Real;

/// Correlation length at which the stage clusterings were worked out, in cm.
pub const REFERENCE_R_C: f64 = 1e-5;

/// The earlier published lambda range `(upper, lower)` in s^-1. Stored as
/// quoted: its lower end cannot be rebuilt from the stage ledger.
pub const QUOTED_LAMBDA_RANGE: (f64, f64) = (5e-9, 2e-11);

pub const DEFAULT_PHOTONS: u32 = 6;

pub const BUILTIN_NAMES: [&str; 4] = [
    "most_likely",
    "extreme",
    "corrected_most_likely",
    "corrected_extreme",
];

fn one<T: Real>() -> T {
    T::one()
}

fn default_photons() -> u32 {
    DEFAULT_PHOTONS
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(
    deny_unknown_fields,
    bound(serialize = "T: Serialize", deserialize = "T: Real + Deserialize<'de>")
)]
pub struct PerceptionStage<T> {
    pub name: String,
    /// Daltons per coherent cluster.
    pub n: T,
    /// Number of mutually well-separated clusters.
    #[serde(rename = "N")]
    pub count: u64,
    /// Effective-mass factor; 1 is the vacuum treatment.
    #[serde(default = "one")]
    pub f: T,
}

impl<T: Real> PerceptionStage<T> {
    pub fn new(name: impl Into<String>, n: T, count: u64, f: T) -> Result<Self> {
        let s = Self {
            name: name.into(),
            n,
            count,
            f,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.n > T::zero() && self.n.is_finite()) {
            return Err(invalid("n", self.n.to_f64_lossy(), "must be positive and finite"));
        }
        if self.count == 0 {
            return Err(invalid("N", 0.0, "must be positive"));
        }
        if !self.f.is_finite() {
            return Err(invalid("f", self.f.to_f64_lossy(), "must be finite"));
        }
        Ok(())
    }

    /// `f^2 n^2 N`.
    pub fn contribution(&self) -> T {
        let m = self.f * self.n;
        m * m * T::of(self.count as f64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(
    deny_unknown_fields,
    bound(serialize = "T: Serialize", deserialize = "T: Real + Deserialize<'de>")
)]
pub struct PerceptionScenario<T> {
    pub name: String,
    #[serde(default = "default_photons")]
    pub photon_count: u32,
    pub stages: Vec<PerceptionStage<T>>,
}

impl<T: Real> PerceptionScenario<T> {
    pub fn validate(&self) -> Result<()> {
        if self.stages.is_empty() {
            return Err(CslError::Empty("scenario stages"));
        }
        if self.photon_count == 0 {
            return Err(invalid("photon_count", 0.0, "must be at least 1"));
        }
        self.stages.iter().try_for_each(PerceptionStage::validate)
    }

    pub fn with_photons(&self, photon_count: u32) -> Self {
        Self {
            photon_count,
            ..self.clone()
        }
    }

    /// Same ledger with the effective-mass factors replaced stage by stage.
    pub fn with_factors(&self, name: impl Into<String>, factors: &[T]) -> Result<Self> {
        if factors.len() != self.stages.len() {
            return Err(invalid(
                "factors",
                factors.len() as f64,
                "need one factor per stage",
            ));
        }
        let stages = self
            .stages
            .iter()
            .zip(factors)
            .map(|(s, f)| PerceptionStage { f: *f, ..s.clone() })
            .collect();
        Ok(Self {
            name: name.into(),
            photon_count: self.photon_count,
            stages,
        })
    }

    /// Equivalent cluster description: one group per stage with unit mass `f n`.
    pub fn cluster_spec(&self) -> Result<ClusterSpec<T>> {
        self.stages
            .iter()
            .map(|s| ClusterGroup::new(s.f.abs() * s.n, T::one(), s.count))
            .collect::<Result<Vec<_>>>()
            .map(ClusterSpec::new)
    }
}

fn stage<T: Real>(name: &str, n: f64, count: u64) -> PerceptionStage<T> {
    PerceptionStage {
        name: name.into(),
        n: T::of(n),
        count,
        f: T::one(),
    }
}

/// The four built-in ledgers: two vacuum hypotheses for the ion stage and
/// their effective-mass corrected versions.
pub fn bdf_builtin_scenarios<T: Real>() -> Vec<PerceptionScenario<T>> {
    let alpha = stage("transducin_alpha", 3.9e4, 20);
    let gmp = stage("gmp", 363.0, 2000);
    let ions_likely = stage("sodium_most_likely", 5.0 * 3.0 * 23.0, 60 * 333);
    let ions_extreme = stage("sodium_extreme", 5.0 * 1e3 * 23.0, 60);
    let factors = [T::of(PROTEIN_FACTOR), T::of(GMP_FACTOR), T::of(SODIUM_FACTOR)];
    let vacuum = |name: &str, ions: PerceptionStage<T>| PerceptionScenario {
        name: name.into(),
        photon_count: DEFAULT_PHOTONS,
        stages: vec![alpha.clone(), gmp.clone(), ions],
    };
    let likely = vacuum("most_likely", ions_likely);
    let extreme = vacuum("extreme", ions_extreme);
    let corrected_likely = likely
        .with_factors("corrected_most_likely", &factors)
        .expect("three stages");
    let corrected_extreme = extreme
        .with_factors("corrected_extreme", &factors)
        .expect("three stages");
    vec![likely, extreme, corrected_likely, corrected_extreme]
}

pub fn builtin_scenario<T: Real>(name: &str) -> Option<PerceptionScenario<T>> {
    bdf_builtin_scenarios().into_iter().find(|s| s.name == name)
}

/// `S = photons * sum_i f_i^2 n_i^2 N_i`, with `Gamma = lambda * S`.
pub fn scenario_rate_sum<T: Real>(scenario: &PerceptionScenario<T>) -> Result<T> {
    scenario.validate()?;
    let s: T = scenario.stages.iter().map(PerceptionStage::contribution).sum();
    Ok(T::of(scenario.photon_count as f64) * s)
}

/// The same sum routed through the mass-weighted cluster engine at `lambda = 1`.
pub fn scenario_rate_sum_via_clusters<T: Real>(scenario: &PerceptionScenario<T>) -> Result<T> {
    scenario.validate()?;
    let params = CollapseParams::from_lambda(T::one(), T::of(REFERENCE_R_C))?;
    let r = mass_cluster_rate(&scenario.cluster_spec()?, &params)?;
    Ok(T::of(scenario.photon_count as f64) * r.rate)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundCriterion<T> {
    /// `Gamma t` at which a superposition counts as collapsed.
    pub gamma_t_threshold: T,
    /// Seconds.
    pub perception_time: T,
    /// Decades of slack either side of the bound.
    pub slack_decades: u32,
}

impl<T: Real> Default for BoundCriterion<T> {
    fn default() -> Self {
        Self {
            gamma_t_threshold: T::of(100.0),
            perception_time: T::of(0.1),
            slack_decades: 1,
        }
    }
}

impl<T: Real> BoundCriterion<T> {
    pub fn validate(&self) -> Result<()> {
        let pos = |v: T| v > T::zero() && v.is_finite();
        if !pos(self.gamma_t_threshold) {
            return Err(invalid(
                "gamma_t_threshold",
                self.gamma_t_threshold.to_f64_lossy(),
                "must be positive",
            ));
        }
        if !pos(self.perception_time) {
            return Err(invalid(
                "perception_time",
                self.perception_time.to_f64_lossy(),
                "must be positive",
            ));
        }
        if self.slack_decades == 0 {
            return Err(invalid("slack_decades", 0.0, "must be positive"));
        }
        Ok(())
    }

    /// The rate `Gamma` needed for collapse within the perception time.
    pub fn required_rate(&self) -> T {
        self.gamma_t_threshold / self.perception_time
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LambdaBound<T> {
    /// Smallest `lambda` in s^-1 giving collapse within the perception time.
    pub lambda: T,
    /// `lambda * 10^-slack`.
    pub low: T,
    /// `lambda * 10^slack`.
    pub high: T,
}

pub fn lambda_bound<T: Real>(s: T, criterion: &BoundCriterion<T>) -> Result<LambdaBound<T>> {
    criterion.validate()?;
    if !(s > T::zero() && s.is_finite()) {
        return Err(invalid("S", s.to_f64_lossy(), "must be positive and finite"));
    }
    let lambda = criterion.required_rate() / s;
    let slack = T::of(10.0).powi(criterion.slack_decades as i32);
    Ok(LambdaBound {
        lambda,
        low: lambda / slack,
        high: lambda * slack,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    Computed,
    /// Reproduced verbatim; not re-derivable from the ledger.
    QuotedNotRederivable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow<T> {
    pub label: String,
    pub photon_count: u32,
    /// `(S_low, S_high)`; absent for quoted rows.
    pub rate_sum: Option<(T, T)>,
    /// `(lambda_high, lambda_low)`, matching the order the range is usually quoted in.
    pub lambda: (T, T),
    pub provenance: Provenance,
}

/// Computed vacuum and corrected ranges next to the quoted earlier range, for
/// the given photon count and for a single photon.
pub fn comparison_table<T: Real>(criterion: &BoundCriterion<T>, photon_count: u32) -> Result<Vec<ComparisonRow<T>>> {
    let all = bdf_builtin_scenarios::<T>();
    let pair = |lo: &PerceptionScenario<T>, hi: &PerceptionScenario<T>, label: &str, photons: u32| -> Result<ComparisonRow<T>> {
        let s_lo = scenario_rate_sum(&lo.with_photons(photons))?;
        let s_hi = scenario_rate_sum(&hi.with_photons(photons))?;
        Ok(ComparisonRow {
            label: label.into(),
            photon_count: photons,
            rate_sum: Some((s_lo, s_hi)),
            lambda: (lambda_bound(s_lo, criterion)?.lambda, lambda_bound(s_hi, criterion)?.lambda),
            provenance: Provenance::Computed,
        })
    };
    let mut rows = Vec::new();
    let mut photons = vec![photon_count];
    if photon_count != 1 {
        photons.push(1);
    }
    for (i, p) in photons.into_iter().enumerate() {
        rows.push(pair(&all[0], &all[1], "vacuum", p)?);
        rows.push(pair(&all[2], &all[3], "corrected", p)?);
        if i == 0 {
            rows.push(ComparisonRow {
                label: "earlier_quoted".into(),
                photon_count: DEFAULT_PHOTONS,
                rate_sum: None,
                lambda: (T::of(QUOTED_LAMBDA_RANGE.0), T::of(QUOTED_LAMBDA_RANGE.1)),
                provenance: Provenance::QuotedNotRederivable,
            });
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanRow<T> {
    pub lambda: T,
    pub r_c: T,
    pub rate_sum: T,
    /// `threshold / (lambda * S)` in seconds.
    pub collapse_time: T,
    /// `collapse_time <= perception_time`.
    pub collapses: bool,
    /// Set when `r_c` differs from the scale the cluster counts were derived at.
    pub clustering_caveat: bool,
}

/// Verdict grid over `lambda x r_C`, rows ordered lambda-major. The ledger's
/// cluster counts are held fixed across `r_C`.
pub fn scan<T: Real>(
    lambdas: &[T],
    r_cs: &[T],
    scenario: &PerceptionScenario<T>,
    criterion: &BoundCriterion<T>,
) -> Result<Vec<ScanRow<T>>> {
    criterion.validate()?;
    if lambdas.is_empty() || r_cs.is_empty() {
        return Err(CslError::Empty("scan grid"));
    }
    for l in lambdas {
        if !(*l > T::zero() && l.is_finite()) {
            return Err(invalid("lambda", l.to_f64_lossy(), "grid values must be positive"));
        }
    }
    for r in r_cs {
        if !(*r > T::zero() && r.is_finite()) {
            return Err(invalid("r_C", r.to_f64_lossy(), "grid values must be positive"));
        }
    }
    let s = scenario_rate_sum(scenario)?;
    let reference = T::of(REFERENCE_R_C);
    let cells: Vec<(T, T)> = lambdas
        .iter()
        .flat_map(|l| r_cs.iter().map(move |r| (*l, *r)))
        .collect();
    Ok(cells
        .into_par_iter()
        .map(|(lambda, r_c)| {
            let collapse_time = criterion.gamma_t_threshold / (lambda * s);
            ScanRow {
                lambda,
                r_c,
                rate_sum: s,
                collapse_time,
                collapses: collapse_time <= criterion.perception_time,
                clustering_caveat: (r_c - reference).abs() > reference * T::of(1e-9),
            }
        })
        .collect())
}

/// `count` points spaced evenly in `log10` from `lo` to `hi` inclusive.
pub fn log_grid<T: Real>(lo: T, hi: T, count: usize) -> Result<Vec<T>> {
    if !(lo > T::zero() && hi >= lo) || count == 0 {
        return Err(invalid("grid", lo.to_f64_lossy(), "need 0 < lo <= hi and count >= 1"));
    }
    if count == 1 {
        return Ok(vec![lo]);
    }
    let (a, b) = (lo.log10(), hi.log10());
    let step = (b - a) / T::of((count - 1) as f64);
    Ok((0..count)
        .map(|i| T::of(10.0).powf(a + step * T::of(i as f64)))
        .collect())
}
