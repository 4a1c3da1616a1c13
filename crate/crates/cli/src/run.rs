use std::path::Path;

use anyhow::{Context, Result};
use fpmix_core::config::{PairValidation, SimulationConfig};
use fpmix_core::diagnostics::{
    entropy_dissipation_report, relaxation_rate_fit, temperature_relaxation_rate, velocity_relaxation_rate,
    EntropyReport, ExchangeReport, Quantity, RateFit,
};
use fpmix_core::kinetics::write_snapshot_csv;
use fpmix_core::timeloop::{write_series_csv, write_spatial_series_csv, RelaxationSeries};
use fpmix_core::{run_1x1v, run_relaxation, MixtureSystem, Tier};
use serde::Serialize;

use crate::output::{artifact_version, config_hash, now, OutputDir, RunManifest};
use crate::{validate, EXIT_RUN_FAILURE, EXIT_VIOLATION};

#[derive(Serialize)]
pub struct FitOutcome {
    pub fit: Option<RateFit>,
    pub predicted: f64,
    pub error: Option<String>,
}

#[derive(Serialize)]
pub struct PairRates {
    pub first: String,
    pub second: String,
    pub velocity: FitOutcome,
    pub temperature: FitOutcome,
}

#[derive(Serialize)]
struct Drift {
    momentum_initial: f64,
    momentum_final: f64,
    momentum_relative: f64,
    energy_initial: f64,
    energy_final: f64,
    energy_relative: f64,
    max_entropy_increase: f64,
}

#[derive(Serialize)]
struct Diagnostics {
    tier: Tier,
    steps: usize,
    reached_equilibrium: bool,
    drift: Drift,
    exchange_final: Vec<ExchangeReport>,
    entropy_initial: EntropyReport,
    entropy_final: EntropyReport,
    rates: Vec<PairRates>,
}

fn fit_outcome(series: &[(f64, fpmix_core::Moments, fpmix_core::Moments)], q: Quantity, predicted: f64) -> FitOutcome {
    match relaxation_rate_fit(series, q) {
        Ok(fit) => FitOutcome { fit: Some(fit), predicted, error: None },
        Err(e) => FitOutcome { fit: None, predicted, error: Some(e.to_string()) },
    }
}

/// Fitted and predicted relaxation rates of every pair, using the orientation
/// fixed at validation time.
pub fn pair_rates(series: &RelaxationSeries, system: &MixtureSystem, validations: &[PairValidation]) -> Vec<PairRates> {
    let initial = &series.samples[0].moments;
    validations
        .iter()
        .filter_map(|v| {
            let (a, b) = (v.pair.first, v.pair.second);
            let (ma, mb) = (initial[a]?, initial[b]?);
            let masses = (system.mass(a), system.mass(b));
            let densities = (ma.n, mb.n);
            let pts = series.pair_series(a, b);
            Some(PairRates {
                first: series.labels[a].clone(),
                second: series.labels[b].clone(),
                velocity: fit_outcome(
                    &pts,
                    Quantity::VelocityGap,
                    velocity_relaxation_rate(&v.pair.params, masses, densities),
                ),
                temperature: fit_outcome(
                    &pts,
                    Quantity::TemperatureGap,
                    temperature_relaxation_rate(&v.pair.params, densities),
                ),
            })
        })
        .collect()
}

fn relative(a: f64, b: f64) -> f64 {
    (b - a).abs() / a.abs().max(f64::MIN_POSITIVE)
}

fn report_failure(e: &fpmix_core::Error) -> u8 {
    match e.step() {
        Some(_) => eprintln!("error: {e}"),
        None => eprintln!("error: step 0 failed: {e}"),
    }
    EXIT_RUN_FAILURE
}

pub fn cmd_run(config: &Path, out: &Path, tier: Option<Tier>, correct_moments: bool) -> Result<u8> {
    let started = now();
    let bytes = std::fs::read(config).with_context(|| format!("reading {}", config.display()))?;
    let text = std::str::from_utf8(&bytes).context("config is not UTF-8")?;
    let mut cfg = SimulationConfig::from_toml_str(text)?;
    if correct_moments {
        cfg.run.correct_moments = true;
    }
    let required = tier.unwrap_or(cfg.run.tier);
    let validations = cfg.validate_pairs()?;
    if !validate::report(&cfg, &validations, required) {
        return Ok(EXIT_VIOLATION);
    }

    let system = cfg.system()?;
    let opts = cfg.run_options();
    let labels = system.labels();
    let hash = config_hash(&bytes);
    let mut dir = OutputDir::create(out, &hash)?;

    if let Some((xgrid, initial)) = cfg.spatial()? {
        let series = match run_1x1v(&initial, &system, &xgrid, &opts) {
            Ok(s) => s,
            Err(e) => return Ok(report_failure(&e)),
        };
        dir.csv("series.csv", |mut w| write_spatial_series_csv(&mut w, &series, &labels))?;
        if opts.snapshot_every > 0 {
            for (c, cell) in series.final_state.cells.iter().enumerate() {
                dir.csv(&format!("snapshots/final_cell{c:04}.csv"), |w| {
                    write_snapshot_csv(w, system.grid(), &labels, cell)
                })?;
            }
        }
        let first = &series.samples[0];
        let last = series.samples.last().expect("run produces samples");
        #[derive(Serialize)]
        struct SpatialDiagnostics<'a> {
            tier: Tier,
            steps: usize,
            drift: Drift,
            masses_final: Option<&'a Vec<f64>>,
        }
        dir.json(
            "diagnostics.json",
            &SpatialDiagnostics {
                tier: required,
                steps: last.step,
                drift: Drift {
                    momentum_initial: first.total_momentum,
                    momentum_final: last.total_momentum,
                    momentum_relative: relative(first.total_momentum, last.total_momentum),
                    energy_initial: first.total_energy,
                    energy_final: last.total_energy,
                    energy_relative: relative(first.total_energy, last.total_energy),
                    max_entropy_increase: series
                        .samples
                        .windows(2)
                        .map(|p| p[1].entropy - p[0].entropy)
                        .fold(0.0, f64::max),
                },
                masses_final: series.masses.last(),
            },
        )?;
    } else {
        let initial = cfg.initial_state()?;
        let series = match run_relaxation(&initial, &system, &opts) {
            Ok(s) => s,
            Err(e) => return Ok(report_failure(&e)),
        };
        dir.csv("series.csv", |mut w| write_series_csv(&mut w, &series))?;
        for snap in &series.snapshots {
            let step = (snap.time / opts.step.dt).round() as usize;
            dir.csv(&format!("snapshots/step{step:08}.csv"), |w| {
                write_snapshot_csv(w, system.grid(), &labels, snap)
            })?;
        }
        let first = &series.samples[0];
        let last = series.samples.last().expect("run produces samples");
        let entropy_initial = entropy_dissipation_report(&initial, &system, None)?;
        let entropy_final = entropy_dissipation_report(&series.final_state, &system, None)?;
        let diagnostics = Diagnostics {
            tier: required,
            steps: series.steps,
            reached_equilibrium: series.reached_equilibrium,
            drift: Drift {
                momentum_initial: first.total_momentum,
                momentum_final: last.total_momentum,
                momentum_relative: relative(first.total_momentum, last.total_momentum),
                energy_initial: first.total_energy,
                energy_final: last.total_energy,
                energy_relative: relative(first.total_energy, last.total_energy),
                max_entropy_increase: series.max_entropy_increase,
            },
            exchange_final: last.exchange.clone(),
            entropy_initial,
            entropy_final,
            rates: pair_rates(&series, &system, &validations),
        };
        dir.json("diagnostics.json", &diagnostics)?;
    }

    dir.finish(RunManifest {
        command: "run".into(),
        config_path: config.display().to_string(),
        config_hash: hash,
        started,
        finished: now(),
        version: artifact_version(),
        outputs: Vec::new(),
        status: "ok".into(),
    })?;
    Ok(0)
}
