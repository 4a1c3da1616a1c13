//! TOML run configuration.
//!
//! ```toml
//! [grid]
//! v_min = -12.0
//! v_max = 12.0
//! n_cells = 256
//!
//! [[species]]
//! label = "heavy"
//! mass = 2.0
//! c_self = 1.0
//! initial = { density = 1.0, velocity = 0.5, temperature = 1.0 }
//!
//! [[pairs]]
//! i = 0
//! j = 1
//! c_ij = 0.5
//! c_ji = 1.0
//! preset = "symmetric7"   # or delta/alpha/gamma
//!
//! [run]
//! dt = 0.01
//! t_end = 40.0
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kinetics::{maxwellian, DistributionState, VelocityGrid};
use crate::nspecies::{MixtureSystem, OrientedPair, PairEntry, PairSpec, SpeciesEntry};
use crate::params::{PairParameters, Preset, SpeciesSpec, Tier, ValidationReport};
use crate::timeloop::{RunOptions, SpatialGrid, SpatialState, StepOptions};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub v_min: f64,
    pub v_max: f64,
    pub n_cells: usize,
    #[serde(default = "one")]
    pub dim: usize,
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialMaxwellian {
    pub density: f64,
    pub velocity: f64,
    pub temperature: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpeciesConfig {
    pub label: String,
    pub mass: f64,
    #[serde(default)]
    pub c_self: f64,
    pub initial: InitialMaxwellian,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairConfig {
    pub i: usize,
    pub j: usize,
    pub c_ij: f64,
    pub c_ji: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<Preset>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
}

impl PairConfig {
    pub fn spec(&self) -> Result<PairSpec> {
        match (self.preset, self.delta, self.alpha, self.gamma) {
            (Some(preset), None, None, None) => Ok(PairSpec::Preset {
                preset,
                c_ij: self.c_ij,
                c_ji: self.c_ji,
            }),
            (None, Some(delta), Some(alpha), Some(gamma)) => Ok(PairSpec::Explicit(PairParameters::new(
                self.c_ij, self.c_ji, delta, alpha, gamma,
            ))),
            _ => Err(Error::Config(format!(
                "pair ({}, {}): give either `preset` or all of `delta`, `alpha`, `gamma`",
                self.i, self.j
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub dt: f64,
    pub t_end: f64,
    #[serde(default = "one")]
    pub output_every: usize,
    #[serde(default)]
    pub snapshot_every: usize,
    #[serde(default)]
    pub correct_moments: bool,
    #[serde(default = "yes")]
    pub calibrate_targets: bool,
    #[serde(default = "conservation")]
    pub tier: Tier,
    /// Zero disables the equilibrium stop.
    #[serde(default = "default_threshold")]
    pub equilibrium_threshold: f64,
}

fn yes() -> bool {
    true
}

fn conservation() -> Tier {
    Tier::ConservationOnly
}

fn default_threshold() -> f64 {
    1e-10
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceConfig {
    pub n_cells: usize,
    pub length: f64,
    /// Species densities are modulated by `1 + amplitude sin(2 pi x / length)`.
    #[serde(default)]
    pub density_amplitude: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationConfig {
    pub grid: GridConfig,
    pub species: Vec<SpeciesConfig>,
    #[serde(default)]
    pub pairs: Vec<PairConfig>,
    pub run: RunConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub space: Option<SpaceConfig>,
}

/// Validation outcome of one configured pair.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairValidation {
    pub i: usize,
    pub j: usize,
    pub pair: OrientedPair,
    pub report: ValidationReport,
}

impl SimulationConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.check()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    fn check(&self) -> Result<()> {
        if self.grid.dim != 1 {
            return Err(Error::Config(format!("only dim = 1 velocity grids are implemented, got {}", self.grid.dim)));
        }
        if !(self.run.dt > 0.0) {
            return Err(Error::Config(format!("dt must be positive, got {}", self.run.dt)));
        }
        if !(self.run.t_end >= 0.0) {
            return Err(Error::Config(format!("t_end must be non-negative, got {}", self.run.t_end)));
        }
        for s in &self.species {
            let init = &s.initial;
            if !(init.density >= 0.0 && init.temperature > 0.0) {
                return Err(Error::Config(format!(
                    "species `{}`: initial density must be >= 0 and temperature > 0",
                    s.label
                )));
            }
        }
        for p in &self.pairs {
            p.spec()?;
        }
        Ok(())
    }

    pub fn velocity_grid(&self) -> Result<VelocityGrid> {
        VelocityGrid::new(self.grid.v_min, self.grid.v_max, self.grid.n_cells)
    }

    pub fn system(&self) -> Result<MixtureSystem> {
        let species = self
            .species
            .iter()
            .map(|s| {
                Ok(SpeciesEntry {
                    spec: SpeciesSpec::new(s.label.clone(), s.mass)?,
                    c_self: s.c_self,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let pairs = self
            .pairs
            .iter()
            .map(|p| Ok(PairEntry { i: p.i, j: p.j, spec: p.spec()? }))
            .collect::<Result<Vec<_>>>()?;
        MixtureSystem::new(species, pairs, self.velocity_grid()?)
    }

    pub fn initial_state(&self) -> Result<DistributionState> {
        let grid = self.velocity_grid()?;
        Ok(DistributionState::new(
            self.species
                .iter()
                .map(|s| {
                    let i = s.initial;
                    maxwellian(i.density, i.velocity, i.temperature, s.mass, &grid)
                })
                .collect(),
            0.0,
        ))
    }

    pub fn run_options(&self) -> RunOptions {
        let r = &self.run;
        RunOptions {
            step: StepOptions {
                dt: r.dt,
                calibrate_targets: r.calibrate_targets,
                correct_moments: r.correct_moments,
            },
            t_end: r.t_end,
            output_every: r.output_every,
            snapshot_every: r.snapshot_every,
            equilibrium_threshold: (r.equilibrium_threshold > 0.0).then_some(r.equilibrium_threshold),
        }
    }

    /// Spatial mesh and initial 1x1v state, when a `[space]` section is present.
    pub fn spatial(&self) -> Result<Option<(SpatialGrid, SpatialState)>> {
        let Some(space) = &self.space else {
            return Ok(None);
        };
        let xgrid = SpatialGrid::new(space.n_cells, space.length)?;
        let grid = self.velocity_grid()?;
        let cells = (0..space.n_cells)
            .map(|c| {
                let x = xgrid.center(c);
                let factor = 1.0 + space.density_amplitude * (2.0 * std::f64::consts::PI * x / space.length).sin();
                DistributionState::new(
                    self.species
                        .iter()
                        .map(|s| {
                            let i = s.initial;
                            maxwellian(i.density * factor, i.velocity, i.temperature, s.mass, &grid)
                        })
                        .collect(),
                    0.0,
                )
            })
            .collect();
        Ok(Some((xgrid, SpatialState { cells, time: 0.0 })))
    }

    /// Every configured pair validated at the initial densities.
    pub fn validate_pairs(&self) -> Result<Vec<PairValidation>> {
        let system = self.system()?;
        let densities: Vec<f64> = self.species.iter().map(|s| s.initial.density).collect();
        Ok(system
            .validate_pairs(&densities)?
            .into_iter()
            .zip(&self.pairs)
            .map(|((pair, report), p)| PairValidation { i: p.i, j: p.j, pair, report })
            .collect())
    }
}
