use rand::Rng;

use super::STABILITY_LIMIT;
use crate::error::{CslError, Result};
use crate::model::CollapseParams;
use crate::rate::{profile_gamma, GridGeometry, ProfileSet};
use crate::Real;

/// Coefficients of the reduced amplitude equation: the coupling, the Gram
/// matrix of density differences relative to component 0, its factor, and the
/// pairwise discrete rates.
#[derive(Debug, Clone)]
pub struct Drive<T> {
    kappa: T,
    k: usize,
    /// `C_ij = h^3 sum_c (mu_i - mu_0)(mu_j - mu_0)`, row-major `k x k`.
    gram: Vec<T>,
    /// Lower-triangular `L` with `L L^T = C`, row-major.
    chol: Vec<T>,
    /// `kappa / 2 * h^3 sum_c (mu_i - mu_j)^2`, row-major.
    rates: Vec<T>,
}

impl<T: Real> Drive<T> {
    pub fn from_profiles(set: &ProfileSet<T>, params: &CollapseParams<T>) -> Self {
        let k = set.len();
        let h3 = set.geometry.cell_volume();
        let mut gram = vec![T::zero(); k * k];
        for i in 1..k {
            for j in i..k {
                let s: T = set.profiles[i]
                    .iter()
                    .zip(&set.profiles[j])
                    .zip(&set.profiles[0])
                    .map(|((a, b), z)| (*a - *z) * (*b - *z))
                    .sum();
                gram[i * k + j] = s * h3;
                gram[j * k + i] = s * h3;
            }
        }
        let mut rates = vec![T::zero(); k * k];
        for i in 0..k {
            for j in (i + 1)..k {
                let g = profile_gamma(set, params, i, j);
                rates[i * k + j] = g;
                rates[j * k + i] = g;
            }
        }
        let chol = semidefinite_cholesky(&gram, k);
        Self {
            kappa: params.kappa(),
            k,
            gram,
            chol,
            rates,
        }
    }

    /// `gamma / r_C^3`.
    pub fn kappa(&self) -> T {
        self.kappa
    }

    pub fn components(&self) -> usize {
        self.k
    }

    pub fn gram(&self, i: usize, j: usize) -> T {
        self.gram[i * self.k + j]
    }

    /// Decay rate of the `(a, b)` coherence implied by the discretized densities.
    pub fn discrete_gamma(&self, a: usize, b: usize) -> T {
        self.rates[a * self.k + b]
    }

    pub fn max_rate(&self) -> T {
        self.rates.iter().copied().fold(T::zero(), T::max)
    }

    /// Largest stable step, `STABILITY_LIMIT / max_rate`; infinite when nothing decays.
    pub fn max_dt(&self) -> T {
        let r = self.max_rate();
        if r > T::zero() {
            T::of(STABILITY_LIMIT) / r
        } else {
            T::infinity()
        }
    }

    pub fn check_step(&self, dt: T) -> Result<()> {
        if !(dt > T::zero() && dt.is_finite()) {
            return Err(crate::error::invalid(
                "dt",
                dt.to_f64_lossy(),
                "must be positive and finite",
            ));
        }
        if dt * self.max_rate() > T::of(STABILITY_LIMIT) {
            return Err(CslError::UnstableStep {
                dt: dt.to_f64_lossy(),
                max_dt: self.max_dt().to_f64_lossy(),
            });
        }
        Ok(())
    }

    /// Draws `eta ~ N(0, dt C)` into `out`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, dt: T, z: &mut [T], out: &mut [T]) {
        let sd = dt.sqrt();
        for v in z.iter_mut().skip(1) {
            *v = T::standard_normal(rng);
        }
        out[0] = T::zero();
        for i in 1..self.k {
            let row = &self.chol[i * self.k..i * self.k + i + 1];
            out[i] = sd * (1..=i).map(|j| row[j] * z[j]).sum::<T>();
        }
    }
}

/// Cholesky factor of a positive semidefinite matrix; pivots at or below
/// rounding level are treated as exact zeros.
fn semidefinite_cholesky<T: Real>(a: &[T], k: usize) -> Vec<T> {
    let mut l = vec![T::zero(); k * k];
    let scale = (0..k).map(|i| a[i * k + i]).fold(T::zero(), T::max);
    let floor = scale * T::epsilon() * T::of(64.0);
    for j in 0..k {
        let d = a[j * k + j] - (0..j).map(|p| l[j * k + p] * l[j * k + p]).sum::<T>();
        if d <= floor {
            continue;
        }
        let ljj = d.sqrt();
        l[j * k + j] = ljj;
        for i in (j + 1)..k {
            let s = a[i * k + j] - (0..j).map(|p| l[i * k + p] * l[j * k + p]).sum::<T>();
            l[i * k + j] = s / ljj;
        }
    }
    l
}

/// Cell-level white noise on a raster: independent `N(0, dt / h^3)` per cell,
/// `h` in units of `r_C`.
#[derive(Debug, Clone, Copy)]
pub struct NoiseGrid<T> {
    pub geometry: GridGeometry<T>,
    pub dt: T,
}

impl<T: Real> NoiseGrid<T> {
    pub fn new(geometry: GridGeometry<T>, dt: T) -> Self {
        Self { geometry, dt }
    }

    pub fn variance(&self) -> T {
        self.dt / self.geometry.cell_volume()
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<T> {
        let sd = self.variance().sqrt();
        (0..self.geometry.n_cells())
            .map(|_| sd * T::standard_normal(rng))
            .collect()
    }

    /// `eta_k = h^3 sum_c (mu_k - mu_0) w_c`, so `eta_0 = 0`.
    pub fn project(&self, draw: &[T], set: &ProfileSet<T>) -> Vec<T> {
        let h3 = self.geometry.cell_volume();
        (0..set.len())
            .map(|k| {
                if k == 0 {
                    return T::zero();
                }
                let s: T = set.profiles[k]
                    .iter()
                    .zip(&set.profiles[0])
                    .zip(draw)
                    .map(|((a, z), w)| (*a - *z) * *w)
                    .sum();
                s * h3
            })
            .collect()
    }
}
