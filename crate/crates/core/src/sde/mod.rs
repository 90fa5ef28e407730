//! Euler-Maruyama integration of the CSL stochastic Schrödinger equation with
//! zero Hamiltonian, for superpositions of frozen configurations.
//!
//! Each configuration is an eigenstate of the smeared mass density, so the
//! state stays in the span of the K branches and only the amplitudes evolve:
//!
//! ```text
//! da_k = a_k [ sqrt(gamma) Int (mu_k - mu_bar) dW  -  (gamma/2) Int (mu_k - mu_bar)^2 dt ]
//! mu_bar = sum_j |a_j|^2 mu_j
//! ```
//!
//! followed by renormalization. The densities `mu_k` are rasterized on the same
//! grid as the field-quadrature rate engine, and the white noise `dW(x)` is a
//! grid of independent N(0, dt / h^3) cell increments. Only the projections
//! `Int (mu_k - mu_0) dW` enter the update; they are jointly Gaussian with
//! covariance `dt * C`, `C_kl = Int (mu_k - mu_0)(mu_l - mu_0)`, so
//! [`Drive::sample`] draws them directly from a Cholesky factor of `C` instead
//! of materializing the grid. [`NoiseGrid`] keeps the cell-level draw for
//! checking that reduction.

mod ensemble;
mod noise;

pub use ensemble::{
    run_ensemble, simulate_trajectory, CollapseStats, CurvePoint, EnsembleConfig,
    EnsembleDecayEstimate, EnsembleRun, TrajectorySample, MIN_TRAJECTORIES,
};
pub use noise::{Drive, NoiseGrid};

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, CslError, Result};
use crate::model::{CollapseParams, Superposition};
use crate::rate::{rasterize, FieldGrid, ProfileSet};
use crate::Real;

/// Largest accepted `dt * Gamma` per step.
pub const STABILITY_LIMIT: f64 = 0.01;

/// Tolerance on `sum_k |a_k|^2 = 1` for states handed to [`step`].
pub const STATE_NORM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AmplitudeState<T> {
    pub amplitudes: Vec<Complex<T>>,
    /// Seconds.
    pub time: T,
}

impl<T: Real> AmplitudeState<T> {
    pub fn from_superposition(sup: &Superposition<T>) -> Self {
        Self {
            amplitudes: vec![sup.amp_a, sup.amp_b],
            time: T::zero(),
        }
    }

    pub fn weights(&self) -> Vec<T> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }

    pub fn norm_sqr(&self) -> T {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    /// `a_0 conj(a_1)`: one trajectory's contribution to the off-diagonal of `rho`.
    pub fn coherence(&self) -> Complex<T> {
        self.amplitudes[0] * self.amplitudes[1].conj()
    }
}

/// Rasterizes both branches' smeared densities on the field-quadrature grid.
/// The grid must be at least `r_C / 2` fine with `6 r_C` padding.
pub fn reduce_to_amplitude_sde<T: Real>(
    sup: &Superposition<T>,
    params: &CollapseParams<T>,
    grid: &FieldGrid<T>,
) -> Result<ProfileSet<T>> {
    sup.check_species()?;
    rasterize(&[&sup.comp_a, &sup.comp_b], params, grid)
}

/// Reusable buffers for [`Stepper::advance`].
#[derive(Debug, Clone)]
pub struct Stepper<T> {
    weights: Vec<T>,
    centered: Vec<T>,
    mean_drift: Vec<T>,
}

impl<T: Real> Stepper<T> {
    pub fn new(k: usize) -> Self {
        Self {
            weights: vec![T::zero(); k],
            centered: vec![T::zero(); k],
            mean_drift: vec![T::zero(); k],
        }
    }

    /// One Euler-Maruyama step in place, then renormalization. `eta[k]` is
    /// `Int (mu_k - mu_0) dW` in `r_C` units (`eta[0] = 0`).
    pub fn advance(&mut self, amps: &mut [Complex<T>], drive: &Drive<T>, dt: T, eta: &[T]) {
        let k = amps.len();
        for (w, a) in self.weights.iter_mut().zip(amps.iter()) {
            *w = a.norm_sqr();
        }
        let mean_eta: T = (0..k).map(|j| self.weights[j] * eta[j]).sum();
        for i in 0..k {
            self.centered[i] = eta[i] - mean_eta;
            // sum_j p_j C_ij
            self.mean_drift[i] = (0..k).map(|j| self.weights[j] * drive.gram(i, j)).sum();
        }
        let pcp: T = (0..k).map(|i| self.weights[i] * self.mean_drift[i]).sum();
        let sqrt_kappa = drive.kappa().sqrt();
        let half_kappa_dt = drive.kappa() * T::of(0.5) * dt;
        for i in 0..k {
            let drift = drive.gram(i, i) - T::of(2.0) * self.mean_drift[i] + pcp;
            let factor = T::one() + sqrt_kappa * self.centered[i] - half_kappa_dt * drift;
            amps[i] = amps[i] * factor;
        }
        let norm = amps.iter().map(|a| a.norm_sqr()).sum::<T>().sqrt();
        if norm > T::zero() {
            for a in amps.iter_mut() {
                *a = *a / norm;
            }
        }
    }
}

/// Single step on an explicit projected noise draw; deterministic given `eta`.
pub fn step<T: Real>(
    state: &AmplitudeState<T>,
    drive: &Drive<T>,
    dt: T,
    eta: &[T],
) -> Result<AmplitudeState<T>> {
    let k = state.amplitudes.len();
    if drive.components() != k || eta.len() != k {
        return Err(invalid(
            "components",
            k as f64,
            "state, drive and noise must have matching component counts",
        ));
    }
    let norm = state.norm_sqr();
    if !((norm - T::one()).abs() <= T::of(STATE_NORM_TOLERANCE)) {
        return Err(CslError::NotNormalized {
            norm: norm.to_f64_lossy(),
        });
    }
    drive.check_step(dt)?;
    let mut amps = state.amplitudes.clone();
    Stepper::new(k).advance(&mut amps, drive, dt, eta);
    Ok(AmplitudeState {
        amplitudes: amps,
        time: state.time + dt,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Configuration, Species};
    use crate::rate::{gamma_field, profile_gamma};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn displaced(d: f64) -> Superposition<f64> {
        let n = Species::nucleon();
        let a = Configuration::new().with(&n, [0.0; 3]).unwrap();
        let b = Configuration::new().with(&n, [d, 0.0, 0.0]).unwrap();
        Superposition::with_weight(a, b, 0.3).unwrap()
    }

    fn unit() -> CollapseParams<f64> {
        CollapseParams::from_lambda(1.0, 1.0).unwrap()
    }

    #[test]
    fn profiles_of_empty_and_single() {
        let p = unit();
        let e = Configuration::<f64>::new();
        let set = reduce_to_amplitude_sde(&Superposition::balanced(e.clone(), e), &p, &FieldGrid::default()).unwrap();
        assert!(set.profiles.iter().all(|r| r.iter().all(|v| *v == 0.0)));

        let set = reduce_to_amplitude_sde(&displaced(5.0), &p, &FieldGrid::default()).unwrap();
        assert!((set.integral(0) - 1.0).abs() < 1e-6);
        assert!((set.integral(1) - 1.0).abs() < 1e-6);
    }

    #[test]
    fn coverage_violation_is_an_error() {
        let grid = FieldGrid {
            padding: 3.0,
            ..FieldGrid::default()
        };
        assert!(matches!(
            reduce_to_amplitude_sde(&displaced(5.0), &unit(), &grid),
            Err(CslError::PaddingTooSmall { .. })
        ));
    }

    #[test]
    fn discrete_rate_matches_field_engine_bitwise() {
        let p = unit();
        let s = displaced(3.0);
        let set = reduce_to_amplitude_sde(&s, &p, &FieldGrid::default()).unwrap();
        let drive = Drive::from_profiles(&set, &p);
        let field = gamma_field(&s, &p, &FieldGrid::default()).unwrap();
        assert_eq!(drive.discrete_gamma(0, 1), field.rate);
        assert_eq!(profile_gamma(&set, &p, 0, 1), field.rate);
    }

    #[test]
    fn identical_components_never_move() {
        let p = unit();
        let n = Species::nucleon();
        let a = Configuration::new().with(&n, [0.0; 3]).unwrap();
        let s = Superposition::with_weight(a.clone(), a, 0.3).unwrap();
        let set = reduce_to_amplitude_sde(&s, &p, &FieldGrid::default()).unwrap();
        let drive = Drive::from_profiles(&set, &p);
        let mut state = AmplitudeState::from_superposition(&s);
        let noise = NoiseGrid::new(set.geometry, 1e-3);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..5 {
            let eta = noise.project(&noise.draw(&mut rng), &set);
            let next = step(&state, &drive, 1e-3, &eta).unwrap();
            assert_eq!(next.amplitudes, state.amplitudes);
            state = next;
        }
    }

    #[test]
    fn zero_noise_drift_only() {
        let p = unit();
        let s = displaced(5.0);
        let set = reduce_to_amplitude_sde(&s, &p, &FieldGrid::default()).unwrap();
        let drive = Drive::from_profiles(&set, &p);
        let state = AmplitudeState::from_superposition(&s);
        let next = step(&state, &drive, 1e-3, &[0.0, 0.0]).unwrap();
        let again = step(&state, &drive, 1e-3, &[0.0, 0.0]).unwrap();
        assert_eq!(next, again);
        let w0 = state.weights();
        let w1 = next.weights();
        // The smaller branch carries the larger drift (p_other^2 * C) and loses weight.
        assert!(w1[0] < w0[0]);
        assert!(w1[0] < w1[1]);
        assert!((next.norm_sqr() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn rejects_unstable_dt_and_bad_state() {
        let p = CollapseParams::from_lambda(100.0, 1.0).unwrap();
        let s = displaced(5.0);
        let set = reduce_to_amplitude_sde(&s, &p, &FieldGrid::default()).unwrap();
        let drive = Drive::from_profiles(&set, &p);
        let state = AmplitudeState::from_superposition(&s);
        match step(&state, &drive, 1e-3, &[0.0, 0.0]) {
            Err(CslError::UnstableStep { max_dt, .. }) => assert!((max_dt - 1e-4).abs() < 1e-6),
            other => panic!("expected instability, got {other:?}"),
        }
        let mut bad = state.clone();
        bad.amplitudes[0] = Complex::new(1.0, 0.0);
        assert!(matches!(
            step(&bad, &drive, 1e-5, &[0.0, 0.0]),
            Err(CslError::NotNormalized { .. })
        ));
    }
}
