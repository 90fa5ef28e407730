use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use csl_core::rate::{gamma_exact, FieldGrid};
use csl_core::sde::{
    reduce_to_amplitude_sde, run_ensemble, simulate_trajectory, AmplitudeState, Drive, EnsembleConfig, TrajectorySample, MIN_TRAJECTORIES,
};
use csl_core::CslError;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::config::{load, InlineSuperposition, Params, ParamsSpec, SuperpositionSpec};
use crate::failure::Failure;
use crate::output::{json_report, num, Csv, Format, Provenance};

fn default_cell() -> f64 {
    0.25
}

fn default_batches() -> usize {
    20
}

fn default_log_ratio() -> f64 {
    100.0
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct EnsembleSpec {
    dt: f64,
    t_max: f64,
    n_traj: usize,
    seed: Option<u64>,
    #[serde(default)]
    record_every: usize,
    #[serde(default = "default_log_ratio")]
    collapse_log_ratio: f64,
    #[serde(default = "default_batches")]
    batches: usize,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SimulateFile {
    params: ParamsSpec,
    superposition: SuperpositionSpec,
    #[serde(default)]
    species: BTreeMap<String, f64>,
    /// Noise-grid cell in units of `r_C`.
    #[serde(default = "default_cell")]
    grid_cell: f64,
    ensemble: EnsembleSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    pub params: Params,
    pub superposition: InlineSuperposition,
    pub grid_cell: f64,
    pub ensemble: EnsembleConfig<f64>,
}

/// `seed` overrides the file's seed, which itself defaults to 0.
pub fn resolve(input: &Path, seed: Option<u64>) -> Result<SimulateConfig, Failure> {
    let file: SimulateFile = load(input)?;
    let superposition = file.superposition.resolve(&file.species, Some(input))?;
    let params = file.params.resolve(Some(&superposition.build()?))?;
    let e = file.ensemble;
    let batches = if e.n_traj < MIN_TRAJECTORIES {
        e.batches.min(e.n_traj.max(1))
    } else {
        e.batches
    };
    Ok(SimulateConfig {
        params,
        superposition,
        grid_cell: file.grid_cell,
        ensemble: EnsembleConfig {
            dt: e.dt,
            t_max: e.t_max,
            n_traj: e.n_traj,
            seed: seed.or(e.seed).unwrap_or(0),
            record_every: e.record_every,
            collapse_log_ratio: e.collapse_log_ratio,
            batches,
        },
    })
}

pub fn run(config: &SimulateConfig, provenance: &Provenance) -> Result<String, Failure> {
    if config.ensemble.n_traj == 0 {
        return Err(Failure::parse("n_traj must be at least 1"));
    }
    if config.ensemble.n_traj < MIN_TRAJECTORIES {
        trajectories(config, provenance)
    } else {
        ensemble(config, provenance)
    }
}

fn with_curve(e: CslError) -> Failure {
    if let CslError::FitFailure { curve, .. } = &e {
        let mut listing = String::from("raw curve (t, Re mean):");
        for (t, re) in curve {
            let _ = write!(listing, "\n  {t:e} {re:e}");
        }
        return Failure::Numerical(anyhow::Error::new(e.clone()).context(listing));
    }
    e.into()
}

fn ensemble(config: &SimulateConfig, provenance: &Provenance) -> Result<String, Failure> {
    let sup = config.superposition.build()?;
    let p = config.params.build()?;
    let grid = FieldGrid::with_cell(config.grid_cell);
    let run = run_ensemble(&sup, &p, &grid, &config.ensemble).map_err(with_curve)?;
    let analytic = gamma_exact(&sup, &p)?.rate;
    let est = run.estimate;
    let z_analytic = (est.rate - analytic) / est.stderr;
    let z_discrete = (est.rate - run.discrete_rate) / est.stderr;
    let weight_a = sup.amp_a.norm_sqr();
    let freq_a = run.collapse.frequency(0);
    let born_z = (freq_a - weight_a) / run.collapse.binomial_stderr(weight_a);

    Ok(match provenance.format {
        Format::Json => json_report(
            provenance,
            json!({
                "fitted_rate": est.rate,
                "fitted_stderr": est.stderr,
                "analytic_rate": analytic,
                "discrete_rate": run.discrete_rate,
                "z_analytic": z_analytic,
                "z_discrete": z_discrete,
                "relative_error": (est.rate - analytic) / analytic,
                "fit_points": est.fit_points,
                "fit_window": est.window,
                "collapse": run.collapse,
                "born_frequency_a": freq_a,
                "born_z": born_z,
                "curve": run.curve,
            }),
        ),
        Format::Csv => {
            let mut csv = Csv::new(provenance, &["t", "re", "im", "stderr", "weight_a", "weight_a_stderr"]);
            for c in &run.curve {
                csv.row(&[
                    num(c.t),
                    num(c.mean.re),
                    num(c.mean.im),
                    num(c.stderr),
                    num(c.weight_mean),
                    num(c.weight_stderr),
                ]);
            }
            csv.comment(&format!(
                "fitted_rate {} +- {} over {} points; analytic {}; discrete {}; z {:.3}",
                num(est.rate),
                num(est.stderr),
                est.fit_points,
                num(analytic),
                num(run.discrete_rate),
                z_analytic
            ));
            csv.comment(&format!(
                "collapse counts {:?} (by criterion {:?}); born frequency {:.4}, z {:.3}",
                run.collapse.counts, run.collapse.by_criterion, freq_a, born_z
            ));
            csv.into_string()
        }
    })
}

/// Per-trajectory output for small runs, where no fit is attempted.
fn trajectories(config: &SimulateConfig, provenance: &Provenance) -> Result<String, Failure> {
    let mut probe = config.ensemble.clone();
    probe.n_traj = MIN_TRAJECTORIES;
    probe.batches = 2;
    probe.validate()?;
    let cfg = &config.ensemble;

    let sup = config.superposition.build()?;
    let p = config.params.build()?;
    let set = reduce_to_amplitude_sde(&sup, &p, &FieldGrid::with_cell(config.grid_cell))?;
    let drive = Drive::from_profiles(&set, &p);
    drive.check_step(cfg.dt)?;
    let initial = AmplitudeState::from_superposition(&sup);
    let samples: Vec<TrajectorySample<f64>> = (0..cfg.n_traj as u64)
        .map(|i| simulate_trajectory(&initial, &drive, cfg, i))
        .collect();
    let times: Vec<f64> = cfg.record_steps().iter().map(|s| cfg.dt * *s as f64).collect();

    Ok(match provenance.format {
        Format::Json => {
            let list: Vec<_> = samples
                .iter()
                .enumerate()
                .map(|(i, s)| {
                    json!({
                        "trajectory": i,
                        "outcome": s.outcome,
                        "collapse_time": s.collapse_time,
                        "coherence": s.coherence,
                        "weight_a": s.weight_a,
                    })
                })
                .collect();
            json_report(
                provenance,
                json!({"discrete_rate": drive.discrete_gamma(0, 1), "t": times, "trajectories": list}),
            )
        }
        Format::Csv => {
            let mut csv = Csv::new(provenance, &["trajectory", "t", "re", "im", "weight_a"]);
            for (i, s) in samples.iter().enumerate() {
                for (j, t) in times.iter().enumerate() {
                    csv.row(&[
                        i.to_string(),
                        num(*t),
                        num(s.coherence[j].re),
                        num(s.coherence[j].im),
                        num(s.weight_a[j]),
                    ]);
                }
            }
            for (i, s) in samples.iter().enumerate() {
                let when = s.collapse_time.map(num).unwrap_or_else(|| "horizon".into());
                csv.comment(&format!("trajectory {i}: outcome {} at {when}", s.outcome));
            }
            csv.into_string()
        }
    })
}
