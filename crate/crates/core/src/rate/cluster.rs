//! Leading-order rates for tightly bound, mutually distant clusters.

use serde::{Deserialize, Serialize};

use super::{DecayRate, Method};
use crate::error::{invalid, CslError, Result};
use crate::model::CollapseParams;
use crate::Real;

/// `count` clusters, each holding `size` particles of mass `unit_mass` daltons.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClusterGroup<T> {
    pub unit_mass: T,
    /// Particles per cluster (`n_i`); need not be an integer.
    pub size: T,
    /// Number of such clusters (`N_i`).
    pub count: u64,
}

impl<T: Real> ClusterGroup<T> {
    pub fn new(unit_mass: T, size: T, count: u64) -> Result<Self> {
        let g = Self {
            unit_mass,
            size,
            count,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn nucleons(size: T, count: u64) -> Result<Self> {
        Self::new(T::one(), size, count)
    }

    fn validate(&self) -> Result<()> {
        if !(self.unit_mass > T::zero() && self.unit_mass.is_finite()) {
            return Err(invalid("unit_mass", self.unit_mass.to_f64_lossy(), "must be positive"));
        }
        if !(self.size > T::zero() && self.size.is_finite()) {
            return Err(invalid("size", self.size.to_f64_lossy(), "must be positive"));
        }
        if self.count == 0 {
            return Err(invalid("count", 0.0, "must be positive"));
        }
        Ok(())
    }

    /// `N_i (m_i / m_N)^2 n_i^2`.
    pub fn contribution(&self, m_n: T) -> T {
        let m = self.unit_mass / m_n * self.size;
        T::of(self.count as f64) * m * m
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ClusterSpec<T> {
    pub clusters: Vec<ClusterGroup<T>>,
}

impl<T: Real> ClusterSpec<T> {
    pub fn new(clusters: Vec<ClusterGroup<T>>) -> Self {
        Self { clusters }
    }

    fn validate(&self) -> Result<()> {
        if self.clusters.is_empty() {
            return Err(CslError::Empty("cluster spec"));
        }
        self.clusters.iter().try_for_each(ClusterGroup::validate)
    }
}

/// `Gamma = lambda * sum_i N_i n_i^2` for clusters of nucleons.
pub fn cluster_rate<T: Real>(spec: &ClusterSpec<T>, params: &CollapseParams<T>) -> Result<DecayRate<T>> {
    spec.validate()?;
    if let Some(g) = spec.clusters.iter().find(|g| g.unit_mass != params.m_n()) {
        return Err(CslError::NonUnitMass {
            mass: g.unit_mass.to_f64_lossy(),
        });
    }
    let s: T = spec.clusters.iter().map(|g| g.contribution(params.m_n())).sum();
    Ok(DecayRate::exact(params.lambda() * s, Method::ClusterLimit))
}

/// `Gamma = (lambda / m_N^2) * sum_i N_i m_i^2 n_i^2`.
pub fn mass_cluster_rate<T: Real>(
    spec: &ClusterSpec<T>,
    params: &CollapseParams<T>,
) -> Result<DecayRate<T>> {
    spec.validate()?;
    let s: T = spec.clusters.iter().map(|g| g.contribution(params.m_n())).sum();
    Ok(DecayRate::exact(params.lambda() * s, Method::MassClusterLimit))
}
