//! Shared fixtures for the benchmarks.

use fpmix_core::timeloop::{SpatialGrid, SpatialState};
use fpmix_core::{
    maxwellian, DistributionState, MixtureSystem, PairEntry, PairSpec, Preset, SpeciesEntry, SpeciesSpec,
    VelocityGrid,
};

/// Heavy/light pair coupled through the symmetric preset on `n_cells` velocity cells.
pub fn two_species(n_cells: usize) -> (MixtureSystem, DistributionState) {
    let grid = VelocityGrid::symmetric(12.0, n_cells).expect("grid");
    let species = vec![
        SpeciesEntry { spec: SpeciesSpec::new("heavy", 2.0).unwrap(), c_self: 1.0 },
        SpeciesEntry { spec: SpeciesSpec::new("light", 1.0).unwrap(), c_self: 1.0 },
    ];
    let pairs = vec![PairEntry {
        i: 0,
        j: 1,
        spec: PairSpec::Preset { preset: Preset::Symmetric7, c_ij: 0.5, c_ji: 1.0 },
    }];
    let state = DistributionState::new(
        vec![maxwellian(1.0, 0.5, 1.0, 2.0, &grid), maxwellian(1.0, -0.5, 2.0, 1.0, &grid)],
        0.0,
    );
    let system = MixtureSystem::new(species, pairs, grid).expect("system");
    (system, state)
}

/// `x_cells` copies of the two-species state on a periodic box of length 20.
pub fn spatial(n_cells: usize, x_cells: usize) -> (MixtureSystem, SpatialGrid, SpatialState) {
    let (system, cell) = two_species(n_cells);
    let xgrid = SpatialGrid::new(x_cells, 20.0).expect("x grid");
    let state = SpatialState::uniform(&cell, x_cells);
    (system, xgrid, state)
}
