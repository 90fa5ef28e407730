//! Classification of a superposition into the separation regimes where `Gamma`
//! has a simple leading-order form.

use serde::{Deserialize, Serialize};

use crate::error::{CslError, Result};
use crate::geom::{self, Vec3};
use crate::model::{CollapseParams, Superposition};
use crate::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    /// Every particle essentially at the same place in both branches.
    Negligible,
    /// Both branches tightly clustered, far apart: `Gamma ~ lambda W^2`.
    Quadratic,
    /// One branch clustered, the other spread out: `Gamma ~ lambda W^2 / 2`.
    HalfQuadratic,
    /// Everything mutually far apart: `Gamma ~ lambda sum_i w_i^2`.
    Linear,
    General,
}

/// Separation thresholds in units of `r_C`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegimeThresholds {
    /// Below this a separation counts as "much smaller than `r_C`".
    pub tight: f64,
    /// At or above this a separation counts as far.
    pub far: f64,
}

impl Default for RegimeThresholds {
    fn default() -> Self {
        Self {
            tight: 0.1,
            far: 3.0,
        }
    }
}

/// Extreme separations (units of `r_C`) the classification was based on.
/// Intra-branch entries are `None` for branches with fewer than two particles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegimeWitness<T> {
    pub intra_a: Option<(T, T)>,
    pub intra_b: Option<(T, T)>,
    /// Largest `|a_i - b_i|`.
    pub same_index_max: T,
    /// Smallest `|a_i - b_j|` over all pairs.
    pub cross_min: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegimeReport<T> {
    pub regime: Regime,
    pub witness: RegimeWitness<T>,
    /// Leading-order `Gamma` in s^-1, where the regime has one.
    pub leading_order: Option<T>,
}

fn intra<T: Real>(xs: &[Vec3<T>]) -> Option<(T, T)> {
    let mut out: Option<(T, T)> = None;
    for i in 0..xs.len() {
        for j in (i + 1)..xs.len() {
            let d = geom::dist(&xs[i], &xs[j]);
            out = Some(match out {
                None => (d, d),
                Some((lo, hi)) => (lo.min(d), hi.max(d)),
            });
        }
    }
    out
}

pub fn regime_classify<T: Real>(
    sup: &Superposition<T>,
    params: &CollapseParams<T>,
    thresholds: &RegimeThresholds,
) -> Result<RegimeReport<T>> {
    sup.check_species()?;
    if sup.comp_a.is_empty() {
        return Err(CslError::Empty("superposition components"));
    }
    let inv = T::one() / params.r_c();
    let a: Vec<Vec3<T>> = sup.comp_a.positions().map(|x| geom::scale(x, inv)).collect();
    let b: Vec<Vec3<T>> = sup.comp_b.positions().map(|x| geom::scale(x, inv)).collect();

    let same_index_max = a
        .iter()
        .zip(&b)
        .map(|(x, y)| geom::dist(x, y))
        .fold(T::zero(), T::max);
    let cross_min = a
        .iter()
        .flat_map(|x| b.iter().map(move |y| geom::dist(x, y)))
        .fold(T::infinity(), T::min);
    let witness = RegimeWitness {
        intra_a: intra(&a),
        intra_b: intra(&b),
        same_index_max,
        cross_min,
    };

    let tight = T::of(thresholds.tight);
    let far = T::of(thresholds.far);
    let clustered = |s: Option<(T, T)>| s.map_or(true, |(_, hi)| hi < tight);
    let spread = |s: Option<(T, T)>| s.map_or(true, |(lo, _)| lo >= far);
    let far_cross = cross_min >= far;

    let regime = if same_index_max < tight {
        Regime::Negligible
    } else if far_cross && clustered(witness.intra_a) && clustered(witness.intra_b) {
        Regime::Quadratic
    } else if far_cross
        && ((clustered(witness.intra_a) && spread(witness.intra_b))
            || (spread(witness.intra_a) && clustered(witness.intra_b)))
    {
        Regime::HalfQuadratic
    } else if far_cross && spread(witness.intra_a) && spread(witness.intra_b) {
        Regime::Linear
    } else {
        Regime::General
    };

    let lambda = params.lambda();
    let w: Vec<T> = sup.comp_a.masses().into_iter().map(|m| m / params.m_n()).collect();
    let total: T = w.iter().copied().sum();
    let leading_order = match regime {
        Regime::Negligible => Some(T::zero()),
        Regime::Quadratic => Some(lambda * total * total),
        Regime::HalfQuadratic => Some(lambda * total * total * T::of(0.5)),
        Regime::Linear => Some(lambda * w.iter().map(|x| *x * *x).sum::<T>()),
        Regime::General => None,
    };
    Ok(RegimeReport {
        regime,
        witness,
        leading_order,
    })
}
