//! Pairwise assembly of an N-species mixture.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kinetics::{entropy, try_moments, DistributionState, Moments, VelocityGrid};
use crate::operator::{build_context, fokker_planck_rhs, CollisionContext, Interaction, Role};
use crate::params::{preset, PairParameters, Preset, SpeciesSpec, ValidationReport};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeciesEntry {
    pub spec: SpeciesSpec,
    /// Intra-species friction `c_ii`.
    pub c_self: f64,
}

/// How the parameters of one unordered pair are obtained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum PairSpec {
    /// Fixed parameters for the orientation `(i, j)` as listed. Never reoriented.
    Explicit(PairParameters),
    /// Re-evaluated from the current moments every step.
    Preset { preset: Preset, c_ij: f64, c_ji: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairEntry {
    pub i: usize,
    pub j: usize,
    pub spec: PairSpec,
}

/// Pair parameters in the orientation they apply to.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrientedPair {
    pub first: usize,
    pub second: usize,
    pub params: PairParameters,
    /// The stored orientation is the reverse of the configured one.
    pub swapped: bool,
}

impl OrientedPair {
    /// Role of species `s` in this pair and its partner.
    pub fn role_of(&self, s: usize) -> Option<(Role, usize)> {
        if s == self.first {
            Some((Role::First, self.second))
        } else if s == self.second {
            Some((Role::Second, self.first))
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureSystem {
    species: Vec<SpeciesEntry>,
    pairs: Vec<PairEntry>,
    grid: VelocityGrid,
}

impl MixtureSystem {
    /// Every unordered pair of distinct species must be listed exactly once.
    pub fn new(species: Vec<SpeciesEntry>, pairs: Vec<PairEntry>, grid: VelocityGrid) -> Result<Self> {
        let n = species.len();
        if n == 0 {
            return Err(Error::Config("at least one species is required".into()));
        }
        for s in &species {
            if !(s.c_self >= 0.0 && s.c_self.is_finite()) {
                return Err(Error::Config(format!(
                    "species `{}`: c_self must be non-negative, got {}",
                    s.spec.label, s.c_self
                )));
            }
        }
        let mut seen = vec![vec![false; n]; n];
        for p in &pairs {
            if p.i >= n || p.j >= n || p.i == p.j {
                return Err(Error::Config(format!("pair ({}, {}) is not a pair of distinct species", p.i, p.j)));
            }
            let (a, b) = (p.i.min(p.j), p.i.max(p.j));
            if seen[a][b] {
                return Err(Error::Config(format!("pair ({a}, {b}) listed twice")));
            }
            seen[a][b] = true;
        }
        for a in 0..n {
            for b in a + 1..n {
                if !seen[a][b] {
                    return Err(Error::Config(format!("pair ({a}, {b}) has no parameters")));
                }
            }
        }
        Ok(Self { species, pairs, grid })
    }

    pub fn n_species(&self) -> usize {
        self.species.len()
    }

    pub fn species(&self) -> &[SpeciesEntry] {
        &self.species
    }

    pub fn pairs(&self) -> &[PairEntry] {
        &self.pairs
    }

    pub fn grid(&self) -> &VelocityGrid {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.grid.dim()
    }

    pub fn mass(&self, s: usize) -> f64 {
        self.species[s].spec.mass
    }

    pub fn labels(&self) -> Vec<String> {
        self.species.iter().map(|s| s.spec.label.clone()).collect()
    }

    /// Moments of every species; `None` marks a vacuum species.
    pub fn moments(&self, state: &DistributionState) -> Vec<Option<Moments>> {
        state
            .species
            .iter()
            .enumerate()
            .map(|(s, f)| try_moments(f, &self.grid, self.mass(s)))
            .collect()
    }

    /// Orient one configured pair at the given densities.
    pub fn orient(&self, entry: &PairEntry, densities: (f64, f64)) -> Result<OrientedPair> {
        let (i, j) = (entry.i, entry.j);
        match entry.spec {
            PairSpec::Explicit(params) => Ok(OrientedPair {
                first: i,
                second: j,
                params,
                swapped: false,
            }),
            PairSpec::Preset { preset: name, c_ij, c_ji } => {
                let out = preset(name, (c_ij, c_ji), (self.mass(i), self.mass(j)), densities, self.dim())
                    .map_err(|e| match e {
                        Error::Config(message) => Error::InvalidParameters { i, j, message },
                        other => other,
                    })?;
                let (first, second) = if out.swapped { (j, i) } else { (i, j) };
                Ok(OrientedPair {
                    first,
                    second,
                    params: out.params,
                    swapped: out.swapped,
                })
            }
        }
    }

    /// Pairs oriented for the current moments. Pairs with a vacuum member are `None`.
    pub fn resolve_pairs(&self, moments: &[Option<Moments>]) -> Result<Vec<Option<OrientedPair>>> {
        self.pairs
            .iter()
            .map(|p| match (moments[p.i], moments[p.j]) {
                (Some(a), Some(b)) => self.orient(p, (a.n, b.n)).map(Some),
                _ => Ok(None),
            })
            .collect()
    }

    /// Validation report of each configured pair at unit densities (or the
    /// given densities for density-dependent presets).
    pub fn validate_pairs(&self, densities: &[f64]) -> Result<Vec<(OrientedPair, ValidationReport)>> {
        self.pairs
            .iter()
            .map(|p| {
                let o = self.orient(p, (densities[p.i], densities[p.j]))?;
                let report = o.params.validate(self.mass(o.first), self.mass(o.second), self.dim());
                Ok((o, report))
            })
            .collect()
    }

    /// Operator coefficients of species `s` against the partner in `pair`.
    pub fn inter_context(&self, pair: &OrientedPair, s: usize, moments: &[Option<Moments>]) -> Result<CollisionContext> {
        let (role, partner) = pair
            .role_of(s)
            .unwrap_or_else(|| panic!("species {s} is not part of pair ({}, {})", pair.first, pair.second));
        let own = moments[s].ok_or(Error::ZeroDensity { mass: 0.0 })?;
        let other = moments[partner].ok_or(Error::ZeroDensity { mass: 0.0 })?;
        let kind = Interaction::Inter {
            pair: &pair.params,
            role,
            dim: self.dim(),
        };
        build_context(&kind, &own, &other, (self.mass(s), self.mass(partner))).map_err(|e| match e {
            Error::InvalidParameters { message, .. } => Error::InvalidParameters {
                i: pair.first,
                j: pair.second,
                message,
            },
            other => other,
        })
    }

    pub fn intra_context(&self, s: usize, own: &Moments) -> Result<CollisionContext> {
        build_context(&Interaction::Intra { c_self: self.species[s].c_self }, own, own, (self.mass(s), self.mass(s)))
    }

    /// Pairs involving species `s`, ordered by partner index.
    pub fn partners_of<'a>(&self, s: usize, pairs: &'a [Option<OrientedPair>]) -> Vec<&'a OrientedPair> {
        let mut out: Vec<(usize, &OrientedPair)> = pairs
            .iter()
            .flatten()
            .filter_map(|p| p.role_of(s).map(|(_, partner)| (partner, p)))
            .collect();
        out.sort_by_key(|(partner, _)| *partner);
        out.into_iter().map(|(_, p)| p).collect()
    }
}

/// `df_i/dt` of every species: intra operator plus one inter operator per partner.
pub fn assemble_rhs(state: &DistributionState, system: &MixtureSystem) -> Result<Vec<Vec<f64>>> {
    state.check(system.grid())?;
    let moments = system.moments(state);
    let pairs = system.resolve_pairs(&moments)?;
    let grid = system.grid();
    (0..system.n_species())
        .into_par_iter()
        .map(|s| {
            let f = &state.species[s];
            let mut total = vec![0.0; f.len()];
            let Some(own) = moments[s] else {
                return Ok(total);
            };
            let mut add = |ctx: &CollisionContext| {
                for (t, r) in total.iter_mut().zip(fokker_planck_rhs(f, ctx, grid)) {
                    *t += r;
                }
            };
            add(&system.intra_context(s, &own)?);
            for pair in system.partners_of(s, &pairs) {
                add(&system.inter_context(pair, s, &moments)?);
            }
            Ok(total)
        })
        .collect()
}

/// `sum_i sum_k f_ik ln f_ik dv`.
pub fn total_entropy(state: &DistributionState, system: &MixtureSystem) -> f64 {
    state.species.iter().map(|f| entropy(f, system.grid())).sum()
}
