use num_complex::Complex;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{reduce_to_amplitude_sde, AmplitudeState, Drive, Stepper};
use crate::error::{invalid, CslError, Result};
use crate::model::{CollapseParams, Superposition};
use crate::rate::FieldGrid;
use crate::Real;

/// Minimum ensemble size accepted by [`run_ensemble`].
pub const MIN_TRAJECTORIES: usize = 100;

/// Target number of recorded curve points when `record_every` is 0.
const AUTO_RECORDS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(
    deny_unknown_fields,
    bound(serialize = "T: Serialize", deserialize = "T: Real + Deserialize<'de>")
)]
pub struct EnsembleConfig<T> {
    /// Step in seconds.
    pub dt: T,
    /// Horizon in seconds.
    pub t_max: T,
    pub n_traj: usize,
    pub seed: u64,
    /// Steps between recorded curve points; 0 picks about 200 points.
    #[serde(default)]
    pub record_every: usize,
    /// A trajectory counts as collapsed once `ln(p_max / p_min)` reaches this.
    #[serde(default = "default_collapse_log_ratio")]
    pub collapse_log_ratio: T,
    /// Jackknife batches for the rate standard error.
    #[serde(default = "default_batches")]
    pub batches: usize,
}

fn default_collapse_log_ratio<T: Real>() -> T {
    T::of(100.0)
}

fn default_batches() -> usize {
    20
}

impl<T: Real> EnsembleConfig<T> {
    pub fn new(dt: T, t_max: T, n_traj: usize, seed: u64) -> Self {
        Self {
            dt,
            t_max,
            n_traj,
            seed,
            record_every: 0,
            collapse_log_ratio: default_collapse_log_ratio(),
            batches: default_batches(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > T::zero() && self.dt.is_finite()) {
            return Err(invalid("dt", self.dt.to_f64_lossy(), "must be positive and finite"));
        }
        if !(self.t_max >= self.dt && self.t_max.is_finite()) {
            return Err(invalid("t_max", self.t_max.to_f64_lossy(), "must be finite and at least dt"));
        }
        if self.n_traj < MIN_TRAJECTORIES {
            return Err(invalid("n_traj", self.n_traj as f64, "at least 100 trajectories are required"));
        }
        if self.batches < 2 || self.batches > self.n_traj {
            return Err(invalid("batches", self.batches as f64, "must lie in [2, n_traj]"));
        }
        if !(self.collapse_log_ratio > T::zero()) {
            return Err(invalid(
                "collapse_log_ratio",
                self.collapse_log_ratio.to_f64_lossy(),
                "must be positive",
            ));
        }
        Ok(())
    }

    pub fn n_steps(&self) -> usize {
        (self.t_max / self.dt).round().to_usize().unwrap_or(0).max(1)
    }

    pub fn record_stride(&self) -> usize {
        if self.record_every > 0 {
            self.record_every
        } else {
            self.n_steps().div_ceil(AUTO_RECORDS).max(1)
        }
    }

    /// Step indices at which the state is recorded, starting at 0.
    pub fn record_steps(&self) -> Vec<usize> {
        (0..=self.n_steps()).step_by(self.record_stride()).collect()
    }
}

/// One trajectory's recorded history and collapse outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySample<T> {
    /// `a_0 conj(a_1)` at each recorded step.
    pub coherence: Vec<Complex<T>>,
    /// `|a_0|^2` at each recorded step.
    pub weight_a: Vec<T>,
    /// Component the trajectory collapsed to.
    pub outcome: usize,
    /// Time the collapse criterion was first met; `None` if decided at the horizon.
    pub collapse_time: Option<T>,
    pub final_state: AmplitudeState<T>,
}

/// Integrates one trajectory. Trajectory `index` draws from stream `index` of
/// a ChaCha8 generator seeded with `config.seed`.
pub fn simulate_trajectory<T: Real>(
    initial: &AmplitudeState<T>,
    drive: &Drive<T>,
    config: &EnsembleConfig<T>,
    index: u64,
) -> TrajectorySample<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(index);
    let k = initial.amplitudes.len();
    let n_steps = config.n_steps();
    let stride = config.record_stride();
    let threshold = (-config.collapse_log_ratio).exp();

    let mut amps = initial.amplitudes.clone();
    let mut stepper = Stepper::new(k);
    let mut z = vec![T::zero(); k];
    let mut eta = vec![T::zero(); k];
    let mut coherence = Vec::with_capacity(n_steps / stride + 1);
    let mut weight_a = Vec::with_capacity(n_steps / stride + 1);
    let mut decided: Option<(usize, T)> = None;

    for s in 0..=n_steps {
        if s > 0 {
            drive.sample(&mut rng, config.dt, &mut z, &mut eta);
            stepper.advance(&mut amps, drive, config.dt, &eta);
        }
        if s % stride == 0 {
            coherence.push(amps[0] * amps[1].conj());
            weight_a.push(amps[0].norm_sqr());
        }
        if decided.is_none() {
            let (imax, pmax) = argmax_weight(&amps);
            let pmin = amps
                .iter()
                .map(|a| a.norm_sqr())
                .fold(T::infinity(), T::min);
            if pmin <= pmax * threshold {
                decided = Some((imax, config.dt * T::of(s as f64)));
            }
        }
    }
    let (outcome, collapse_time) = match decided {
        Some((i, t)) => (i, Some(t)),
        None => (argmax_weight(&amps).0, None),
    };
    TrajectorySample {
        coherence,
        weight_a,
        outcome,
        collapse_time,
        final_state: AmplitudeState {
            amplitudes: amps,
            time: config.dt * T::of(n_steps as f64),
        },
    }
}

fn argmax_weight<T: Real>(amps: &[Complex<T>]) -> (usize, T) {
    let mut best = (0, amps[0].norm_sqr());
    for (i, a) in amps.iter().enumerate().skip(1) {
        let w = a.norm_sqr();
        if w > best.1 {
            best = (i, w);
        }
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint<T> {
    pub t: T,
    /// Ensemble mean of `a_0 conj(a_1)`.
    pub mean: Complex<T>,
    /// Standard error of the real part of `mean`.
    pub stderr: T,
    /// Ensemble mean of `|a_0|^2`.
    pub weight_mean: T,
    pub weight_stderr: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollapseStats {
    /// Trajectories ending in each component.
    pub counts: Vec<u64>,
    /// Of those, the ones that met the weight-ratio criterion before the horizon.
    pub by_criterion: Vec<u64>,
    /// Of those, the ones decided by the larger weight at the horizon.
    pub at_horizon: Vec<u64>,
}

impl CollapseStats {
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn frequency(&self, k: usize) -> f64 {
        self.counts[k] as f64 / self.total() as f64
    }

    /// Binomial standard error of [`CollapseStats::frequency`] around `p`.
    pub fn binomial_stderr(&self, p: f64) -> f64 {
        (p * (1.0 - p) / self.total() as f64).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnsembleDecayEstimate<T> {
    /// Fitted decay rate of `E[a_0 conj(a_1)]` in s^-1.
    pub rate: T,
    /// Delete-one-batch jackknife standard error.
    pub stderr: T,
    pub ensemble_size: usize,
    pub trajectories_used: usize,
    pub fit_points: usize,
    /// `[t_first, t_last]` of the fitted points.
    pub window: (T, T),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Serialize", deserialize = "T: Real + Deserialize<'de>"))]
pub struct EnsembleRun<T> {
    pub estimate: EnsembleDecayEstimate<T>,
    /// `Gamma` implied by the rasterized densities, the oracle for `estimate.rate`.
    pub discrete_rate: T,
    pub curve: Vec<CurvePoint<T>>,
    pub collapse: CollapseStats,
    pub config: EnsembleConfig<T>,
}

/// Per-batch sums over recorded points.
#[derive(Debug, Clone)]
struct Moments<T> {
    n: usize,
    re: Vec<T>,
    im: Vec<T>,
    re2: Vec<T>,
    w: Vec<T>,
    w2: Vec<T>,
    counts: Vec<u64>,
    by_criterion: Vec<u64>,
}

impl<T: Real> Moments<T> {
    fn new(points: usize, k: usize) -> Self {
        let z = vec![T::zero(); points];
        Self {
            n: 0,
            re: z.clone(),
            im: z.clone(),
            re2: z.clone(),
            w: z.clone(),
            w2: z,
            counts: vec![0; k],
            by_criterion: vec![0; k],
        }
    }

    fn add(&mut self, s: &TrajectorySample<T>) {
        self.n += 1;
        for (i, c) in s.coherence.iter().enumerate() {
            self.re[i] += c.re;
            self.im[i] += c.im;
            self.re2[i] += c.re * c.re;
            self.w[i] += s.weight_a[i];
            self.w2[i] += s.weight_a[i] * s.weight_a[i];
        }
        self.counts[s.outcome] += 1;
        if s.collapse_time.is_some() {
            self.by_criterion[s.outcome] += 1;
        }
    }

    fn merge(&mut self, o: &Self) {
        self.n += o.n;
        for (a, b) in [
            (&mut self.re, &o.re),
            (&mut self.im, &o.im),
            (&mut self.re2, &o.re2),
            (&mut self.w, &o.w),
            (&mut self.w2, &o.w2),
        ] {
            for (x, y) in a.iter_mut().zip(b) {
                *x += *y;
            }
        }
        for (x, y) in self.counts.iter_mut().zip(&o.counts) {
            *x += y;
        }
        for (x, y) in self.by_criterion.iter_mut().zip(&o.by_criterion) {
            *x += y;
        }
    }

    fn mean_re(&self) -> Vec<T> {
        let n = T::of(self.n as f64);
        self.re.iter().map(|v| *v / n).collect()
    }
}

fn stderr_of<T: Real>(sum: T, sum2: T, n: usize) -> T {
    let nf = T::of(n as f64);
    let mean = sum / nf;
    let var = ((sum2 - nf * mean * mean) / T::of((n - 1) as f64)).max(T::zero());
    (var / nf).sqrt()
}

/// Ordinary least squares slope of `ln y` against `t`.
fn log_slope<T: Real>(t: &[T], y: &[T]) -> Option<T> {
    let n = T::of(t.len() as f64);
    if y.iter().any(|v| !(*v > T::zero())) {
        return None;
    }
    let ly: Vec<T> = y.iter().map(|v| v.ln()).collect();
    let tm = t.iter().copied().sum::<T>() / n;
    let lm = ly.iter().copied().sum::<T>() / n;
    let sxx: T = t.iter().map(|x| (*x - tm) * (*x - tm)).sum();
    let sxy: T = t.iter().zip(&ly).map(|(x, l)| (*x - tm) * (*l - lm)).sum();
    (sxx > T::zero()).then(|| sxy / sxx)
}

/// Simulates `n_traj` trajectories of the reduced equation, fits the decay of
/// `E[a_0 conj(a_1)]` and tallies collapse outcomes.
///
/// Trajectories are split into `batches` contiguous blocks; blocks run in
/// parallel and are reduced in block order, so results are bitwise
/// reproducible for a given seed whatever the worker count.
pub fn run_ensemble<T: Real>(
    sup: &Superposition<T>,
    params: &CollapseParams<T>,
    grid: &FieldGrid<T>,
    config: &EnsembleConfig<T>,
) -> Result<EnsembleRun<T>> {
    config.validate()?;
    let set = reduce_to_amplitude_sde(sup, params, grid)?;
    let drive = Drive::from_profiles(&set, params);
    drive.check_step(config.dt)?;
    let initial = AmplitudeState::from_superposition(sup);

    let steps = config.record_steps();
    let times: Vec<T> = steps
        .iter()
        .map(|s| config.dt * T::of(*s as f64))
        .collect();
    let k = initial.amplitudes.len();
    let b = config.batches;
    let n = config.n_traj;

    let batches: Vec<Moments<T>> = (0..b)
        .into_par_iter()
        .map(|j| {
            let mut m = Moments::new(times.len(), k);
            for i in (j * n / b)..((j + 1) * n / b) {
                m.add(&simulate_trajectory(&initial, &drive, config, i as u64));
            }
            m
        })
        .collect();
    let mut total = Moments::new(times.len(), k);
    for m in &batches {
        total.merge(m);
    }

    let nf = T::of(n as f64);
    let curve: Vec<CurvePoint<T>> = (0..times.len())
        .map(|i| CurvePoint {
            t: times[i],
            mean: Complex::new(total.re[i] / nf, total.im[i] / nf),
            stderr: stderr_of(total.re[i], total.re2[i], n),
            weight_mean: total.w[i] / nf,
            weight_stderr: stderr_of(total.w[i], total.w2[i], n),
        })
        .collect();
    let collapse = CollapseStats {
        at_horizon: total
            .counts
            .iter()
            .zip(&total.by_criterion)
            .map(|(c, b)| c - b)
            .collect(),
        counts: total.counts.clone(),
        by_criterion: total.by_criterion.clone(),
    };

    let raw_curve = || {
        curve
            .iter()
            .map(|p| (p.t.to_f64_lossy(), p.mean.re.to_f64_lossy()))
            .collect::<Vec<_>>()
    };
    let fail = |reason: &str| CslError::FitFailure {
        reason: reason.to_string(),
        curve: raw_curve(),
    };

    // Fit window: the leading run of points resolved at 10 standard errors.
    let ten = T::of(10.0);
    let window = curve
        .iter()
        .take_while(|p| p.mean.re > ten * p.stderr)
        .count();
    if window < 3 {
        return Err(fail("fewer than 3 points resolved above 10 standard errors"));
    }
    let t = &times[..window];
    let slope = log_slope(t, &total.mean_re()[..window])
        .ok_or_else(|| fail("degenerate fit window"))?;
    if !(slope < T::zero()) {
        return Err(fail("signal does not decay"));
    }

    // Delete-one-batch jackknife on the same window.
    let mut thetas = Vec::with_capacity(b);
    for m in &batches {
        let mut rest = total.clone();
        rest.n -= m.n;
        for (x, y) in rest.re.iter_mut().zip(&m.re) {
            *x -= *y;
        }
        let theta = log_slope(t, &rest.mean_re()[..window])
            .ok_or_else(|| fail("jackknife replicate not positive in the fit window"))?;
        thetas.push(-theta);
    }
    let bf = T::of(b as f64);
    let tbar = thetas.iter().copied().sum::<T>() / bf;
    let jk_var = (bf - T::one()) / bf * thetas.iter().map(|v| (*v - tbar) * (*v - tbar)).sum::<T>();

    Ok(EnsembleRun {
        estimate: EnsembleDecayEstimate {
            rate: -slope,
            stderr: jk_var.sqrt(),
            ensemble_size: n,
            trajectories_used: total.n,
            fit_points: window,
            window: (t[0], t[window - 1]),
        },
        discrete_rate: drive.discrete_gamma(0, 1),
        curve,
        collapse,
        config: *config,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Configuration, Species};
    use crate::sde::step;

    fn displaced(d: f64, p_a: f64) -> Superposition<f64> {
        let n = Species::nucleon();
        let a = Configuration::new().with(&n, [0.0; 3]).unwrap();
        let b = Configuration::new().with(&n, [d, 0.0, 0.0]).unwrap();
        Superposition::with_weight(a, b, p_a).unwrap()
    }

    fn coarse() -> FieldGrid<f64> {
        FieldGrid::with_cell(0.5)
    }

    #[test]
    fn config_validation() {
        let c = EnsembleConfig::new(1e-3, 1.0, 99, 0);
        assert!(matches!(c.validate(), Err(CslError::InvalidParameter { name: "n_traj", .. })));
        let c = EnsembleConfig::new(1e-3, 1.0, 1000, 0);
        assert_eq!(c.n_steps(), 1000);
        assert_eq!(c.record_stride(), 5);
        assert_eq!(c.record_steps().len(), 201);
    }

    #[test]
    fn step_is_a_martingale_in_the_weights() {
        let p = CollapseParams::from_lambda(1.0, 1.0).unwrap();
        let s = displaced(2.0, 0.3);
        let set = reduce_to_amplitude_sde(&s, &p, &coarse()).unwrap();
        let drive = Drive::from_profiles(&set, &p);
        let state = AmplitudeState::from_superposition(&s);
        let dt = 0.01;
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (mut z, mut eta) = (vec![0.0; 2], vec![0.0; 2]);
        let n = 100_000;
        let (mut s1, mut s2) = (0.0, 0.0);
        for _ in 0..n {
            drive.sample(&mut rng, dt, &mut z, &mut eta);
            let w = step(&state, &drive, dt, &eta).unwrap().weights()[1];
            s1 += w;
            s2 += w * w;
        }
        let se = stderr_of(s1, s2, n);
        assert!((s1 / n as f64 - 0.7).abs() < 3.0 * se, "mean {} se {se}", s1 / n as f64);
    }

    #[test]
    fn deterministic_given_seed() {
        let p = CollapseParams::from_lambda(1.0, 1.0).unwrap();
        let s = displaced(3.0, 0.5);
        let c = EnsembleConfig::new(1e-2, 1.0, 100, 42);
        let r1 = run_ensemble(&s, &p, &coarse(), &c).unwrap();
        let r2 = run_ensemble(&s, &p, &coarse(), &c).unwrap();
        assert_eq!(r1, r2);
        let other = EnsembleConfig { seed: 43, ..c };
        assert_ne!(run_ensemble(&s, &p, &coarse(), &other).unwrap().curve, r1.curve);
    }

    #[test]
    fn fit_failure_carries_curve() {
        let p = CollapseParams::from_lambda(1.0, 1.0).unwrap();
        let n = Species::nucleon();
        let a = Configuration::new().with(&n, [0.0; 3]).unwrap();
        let s = Superposition::balanced(a.clone(), a);
        let c = EnsembleConfig::new(1e-2, 0.5, 100, 1);
        match run_ensemble(&s, &p, &coarse(), &c) {
            Err(CslError::FitFailure { curve, .. }) => assert_eq!(curve.len(), 51),
            other => panic!("expected fit failure, got {other:?}"),
        }
    }

    #[test]
    fn fitted_rate_tracks_discrete_rate() {
        let p = CollapseParams::from_lambda(1.0, 1.0).unwrap();
        let s = displaced(5.0, 0.5);
        let c = EnsembleConfig::new(2e-3, 2.0, 2000, 7);
        let r = run_ensemble(&s, &p, &coarse(), &c).unwrap();
        let e = r.estimate;
        assert!(e.stderr > 0.0);
        assert!(
            (e.rate - r.discrete_rate).abs() < 4.0 * e.stderr + 0.02,
            "rate {} +- {} vs {}",
            e.rate,
            e.stderr,
            r.discrete_rate
        );
        assert_eq!(r.collapse.total(), 2000);
        for pt in &r.curve {
            assert!((pt.weight_mean - 0.5).abs() < 4.0 * pt.weight_stderr + 1e-12);
        }
    }
}
