//! Off-diagonal decay rate `Gamma` of a two-branch superposition.
//!
//! Every engine evaluates the same quantity,
//!
//! ```text
//! Gamma = (gamma / 2) * sum_{i,j} w_i w_j [G(a_i - a_j) + G(b_i - b_j) - 2 G(a_i - b_j)]
//!       = (gamma / 2) * Int (mu_a - mu_b)^2 d^3x
//! ```
//!
//! with `w_i = m_i / m_N` and `mu` the smeared mass density. Since
//! `gamma * G(x) = lambda * exp(-x^2 / 4 r_C^2)`, the pairwise form is computed
//! as `(lambda / 2) * sum_{p,q} q_p q_q exp(-|x_p - x_q|^2 / 4)` over signed
//! "charges" `q = +w` (branch A) and `q = -w` (branch B), with positions in
//! units of `r_C`.
//!
//! The mass weighting per pair is an extension of the equal-mass sum; in the
//! cluster limit it reduces to the mass-weighted cluster formula.

mod cell_list;
mod cluster;
mod field;
mod regime;

pub use cell_list::{accelerated_error_bound, gamma_accelerated, DEFAULT_CUTOFF, MIN_CUTOFF};
pub use cluster::{cluster_rate, mass_cluster_rate, ClusterGroup, ClusterSpec};
pub use field::{
    difference_norm, gamma_field, profile_gamma, rasterize, FieldGrid, GridGeometry, ProfileSet,
    MAX_CELL, MIN_PADDING,
};
pub use regime::{regime_classify, Regime, RegimeReport, RegimeThresholds, RegimeWitness};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{CslError, Result};
use crate::geom::{self, Vec3};
use crate::model::{CollapseParams, Superposition};
use crate::Real;

/// Relative tolerance on negative `Gamma` caused by cancellation, measured
/// against `lambda * (sum_i m_i / m_N)^2`.
pub const CLAMP_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    ExactPairwise,
    Accelerated,
    FieldQuadrature,
    ClusterLimit,
    MassClusterLimit,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::ExactPairwise => "exact-pairwise",
            Method::Accelerated => "accelerated",
            Method::FieldQuadrature => "field-quadrature",
            Method::ClusterLimit => "cluster-limit",
            Method::MassClusterLimit => "mass-cluster-limit",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayRate<T> {
    /// `Gamma` in s^-1, never negative.
    pub rate: T,
    pub method: Method,
    /// Value before clamping.
    pub raw: T,
    /// Set when `raw` was negative (floating point cancellation) and clamped to zero.
    pub clamped: bool,
    /// Absolute error bound in s^-1 where the method provides one.
    pub error_bound: Option<T>,
}

impl<T: Real> DecayRate<T> {
    pub(crate) fn exact(rate: T, method: Method) -> Self {
        Self {
            rate,
            method,
            raw: rate,
            clamped: false,
            error_bound: None,
        }
    }

    /// Clamps small negatives, rejecting anything beyond the tolerance.
    pub(crate) fn finalize(raw: T, scale: T, method: Method) -> Result<Self> {
        if raw >= T::zero() {
            return Ok(Self::exact(raw, method));
        }
        let tolerance = T::of(CLAMP_TOLERANCE).max(T::epsilon() * T::of(64.0)) * scale;
        if -raw > tolerance {
            return Err(CslError::NegativeRate {
                raw: raw.to_f64_lossy(),
                tolerance: tolerance.to_f64_lossy(),
            });
        }
        Ok(Self {
            rate: T::zero(),
            method,
            raw,
            clamped: true,
            error_bound: None,
        })
    }

    pub fn in_units_of_lambda(&self, params: &CollapseParams<T>) -> T {
        self.rate / params.lambda()
    }
}

/// Signed point weights of both branches, positions in units of `r_C`.
#[derive(Debug, Clone)]
pub(crate) struct Charges<T> {
    pub pos: Vec<Vec3<T>>,
    pub q: Vec<T>,
    /// Branch A occupies `pos[..n_a]`, branch B the rest.
    pub n_a: usize,
    /// `sum_i m_i / m_N` over one branch.
    pub total_weight: T,
}

impl<T: Real> Charges<T> {
    pub fn new(sup: &Superposition<T>, params: &CollapseParams<T>) -> Result<Self> {
        sup.check_species()?;
        let inv_r = T::one() / params.r_c();
        let m_n = params.m_n();
        let n = sup.comp_a.len() + sup.comp_b.len();
        let mut pos = Vec::with_capacity(n);
        let mut q = Vec::with_capacity(n);
        for (s, x) in sup.comp_a.iter() {
            pos.push(geom::scale(x, inv_r));
            q.push(s.mass / m_n);
        }
        for (s, x) in sup.comp_b.iter() {
            pos.push(geom::scale(x, inv_r));
            q.push(-s.mass / m_n);
        }
        let total_weight = sup.comp_a.total_mass() / m_n;
        Ok(Self {
            pos,
            q,
            n_a: sup.comp_a.len(),
            total_weight,
        })
    }

    pub fn len(&self) -> usize {
        self.q.len()
    }

    /// Scale used for the clamp tolerance, `lambda * W^2`.
    pub fn scale(&self, params: &CollapseParams<T>) -> T {
        params.lambda() * self.total_weight * self.total_weight
    }
}

/// `exp(-d^2 / 4)` with `d` in units of `r_C`: `gamma G(x) / lambda`.
#[inline]
pub(crate) fn kernel<T: Real>(d2: T) -> T {
    (-d2 * T::of(0.25)).exp()
}

/// Exact pairwise evaluation, O(N^2).
pub fn gamma_exact<T: Real>(
    sup: &Superposition<T>,
    params: &CollapseParams<T>,
) -> Result<DecayRate<T>> {
    let c = Charges::new(sup, params)?;
    let sum = pair_sum_naive(&c);
    let raw = params.lambda() * sum * T::of(0.5);
    DecayRate::finalize(raw, c.scale(params), Method::ExactPairwise)
}

/// `sum_{p,q} q_p q_q k(x_p - x_q)`, arranged so that each row `p` sums
/// `|q_q| [k(x_p - a_j) - k(x_p - b_j)]` pair by pair: identical branches
/// cancel term by term and give exactly zero. Rows are evaluated in parallel
/// and reduced in index order, so the result does not depend on the worker count.
pub(crate) fn pair_sum_naive<T: Real>(c: &Charges<T>) -> T {
    let n_a = c.n_a;
    let n = n_a.min(c.len() - n_a);
    let rows: Vec<T> = (0..c.len())
        .into_par_iter()
        .map(|p| {
            let xp = &c.pos[p];
            let mut acc = T::zero();
            for j in 0..n {
                let (ja, jb) = (j, n_a + j);
                acc += c.q[ja] * kernel(geom::dist2(xp, &c.pos[ja]))
                    + c.q[jb] * kernel(geom::dist2(xp, &c.pos[jb]));
            }
            c.q[p] * acc
        })
        .collect();
    rows.into_iter().sum()
}
