//! Homogeneous relaxation driver and 1x1v transport by splitting.
//!
//! A collision step freezes every operator coefficient at the moments of the
//! step's start. The moment change owed to each pair is taken from a backward
//! Euler step of the pair's macroscopic exchange equations, which moves the
//! two species' momentum and energy by exactly opposite amounts. With
//! `calibrate_targets` each kinetic substep is then solved with the drift and
//! diffusion coefficients nudged so that the distribution lands on those
//! moments; without it the kinetic substeps run with the frozen coefficients
//! and carry the discretization's moment defect.

use std::io::{self, Write};

use nalgebra::{Matrix3, Vector3};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::diagnostics::{exchange_report, ExchangeReport};
use crate::error::{Error, Result};
use crate::fmt_f64;
use crate::kinetics::{moments, DistributionState, Moments, VelocityGrid};
use crate::nspecies::{total_entropy, MixtureSystem};
use crate::operator::{implicit_collision_step, moment_consistent_step, CollisionContext};
use crate::params::PairParameters;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepOptions {
    pub dt: f64,
    pub calibrate_targets: bool,
    pub correct_moments: bool,
}

impl StepOptions {
    pub fn new(dt: f64) -> Self {
        Self {
            dt,
            calibrate_targets: true,
            correct_moments: false,
        }
    }
}

/// Momentum and energy gained by the first species of a pair over one step.
/// The second species gains the negatives.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairTransfer {
    pub momentum: f64,
    pub energy: f64,
}

/// Backward Euler step of the pair's momentum and energy exchange equations.
pub fn pair_transfer(
    pair: &PairParameters,
    masses: (f64, f64),
    first: &Moments,
    second: &Moments,
    dim: usize,
    dt: f64,
) -> PairTransfer {
    let d = dim as f64;
    let (m1, m2) = masses;
    let (n1, n2) = (first.n, second.n);
    let omd = 1.0 - pair.delta;
    let a = dt * pair.c_ij * n2 * omd;
    let b = dt * pair.c_ji * n1 * omd * pair.epsilon() * m1 / m2;
    let gap = (second.u - first.u) / (1.0 + a + b);
    let u1 = first.u + a * gap;
    let u2 = second.u - b * gap;

    let k = pair.c_ij * n1 * n2;
    let heating = m1 * omd * u1 * gap + d * pair.gamma * gap * gap;
    // temperatures each species would have if only its kinetic energy changed
    let p1 = first.t + m1 / d * (first.u * first.u - u1 * u1);
    let p2 = second.t + m2 / d * (second.u * second.u - u2 * u2);
    let one_m_alpha = 1.0 - pair.alpha;
    let energy = dt * k * (heating + d * one_m_alpha * (p2 - p1))
        / (1.0 + 2.0 * dt * k * one_m_alpha * (1.0 / n1 + 1.0 / n2));
    PairTransfer {
        momentum: m1 * n1 * a * gap,
        energy,
    }
}

fn conserved(m: &Moments, mass: f64, dim: usize) -> (f64, f64) {
    (m.momentum(mass), m.energy(mass, dim))
}

/// Reweight `f` by `1 + a + b xi + c xi^2` so its `(n, u, T)` equal `target`.
pub fn correct_to_moments(f: &[f64], grid: &VelocityGrid, mass: f64, target: &Moments) -> Result<Vec<f64>> {
    let mut g = f.to_vec();
    for _ in 0..3 {
        let cur = moments(&g, grid, mass)?;
        let scale = (cur.t / mass).sqrt();
        let dv = grid.cell_width();
        let mut mom = [0.0; 5];
        for (gk, v) in g.iter().zip(grid.centers()) {
            let xi = (v - cur.u) / scale;
            let mut p = gk * dv;
            for m in mom.iter_mut() {
                *m += p;
                p *= xi;
            }
        }
        // required raw moments of xi^0..2 after reweighting
        let mu = (target.u - cur.u) / scale;
        let want = Vector3::new(
            target.n,
            target.n * mu,
            target.n * (mu * mu + grid.dim() as f64 * target.t / cur.t),
        );
        let have = Vector3::new(mom[0], mom[1], mom[2]);
        let a = Matrix3::new(
            mom[0], mom[1], mom[2], //
            mom[1], mom[2], mom[3], //
            mom[2], mom[3], mom[4],
        );
        let coef = a
            .lu()
            .solve(&(want - have))
            .ok_or_else(|| Error::SolverFailure("singular moment-correction system".into()))?;
        let mut clipped = false;
        for (gk, v) in g.iter_mut().zip(grid.centers()) {
            let xi = (v - cur.u) / scale;
            *gk *= 1.0 + coef[0] + coef[1] * xi + coef[2] * xi * xi;
            if *gk < 0.0 {
                *gk = 0.0;
                clipped = true;
            }
        }
        if !clipped {
            break;
        }
    }
    // a pure rescale leaves u and T alone and removes the solve's residue in n
    let n = moments(&g, grid, mass)?.n;
    let scale = target.n / n;
    g.iter_mut().for_each(|x| *x *= scale);
    Ok(g)
}

fn substep(
    f: &[f64],
    ctx: &CollisionContext,
    grid: &VelocityGrid,
    opts: &StepOptions,
    target: impl FnOnce(&Moments) -> Moments,
) -> Result<Vec<f64>> {
    if ctx.rate == 0.0 {
        return Ok(f.to_vec());
    }
    if opts.calibrate_targets {
        let cur = moments(f, grid, ctx.mass)?;
        let goal = target(&cur);
        if !(goal.t > 0.0) {
            return Err(Error::SolverFailure(format!("pair update drove a temperature to {}", goal.t)));
        }
        Ok(moment_consistent_step(f, ctx, grid, opts.dt, &goal)?.f)
    } else {
        implicit_collision_step(f, ctx, grid, opts.dt)
    }
}

/// Advance every species by one collision step of length `opts.dt`.
pub fn step_homogeneous(state: &DistributionState, system: &MixtureSystem, opts: &StepOptions) -> Result<DistributionState> {
    assert!(opts.dt > 0.0, "dt must be positive");
    let grid = system.grid();
    let dim = system.dim();
    let start = system.moments(state);
    let pairs = system.resolve_pairs(&start)?;
    let transfers: Vec<Option<PairTransfer>> = pairs
        .iter()
        .map(|p| {
            p.map(|p| {
                let (a, b) = (p.first, p.second);
                pair_transfer(
                    &p.params,
                    (system.mass(a), system.mass(b)),
                    &start[a].unwrap(),
                    &start[b].unwrap(),
                    dim,
                    opts.dt,
                )
            })
        })
        .collect();

    let species = (0..system.n_species())
        .into_par_iter()
        .map(|s| -> Result<Vec<f64>> {
            let Some(own) = start[s] else {
                return Ok(state.species[s].clone());
            };
            let mass = system.mass(s);
            let mut f = substep(&state.species[s], &system.intra_context(s, &own)?, grid, opts, |cur| *cur)?;
            let (mut p_goal, mut e_goal) = conserved(&own, mass, dim);
            for pair in system.partners_of(s, &pairs) {
                let idx = pairs.iter().position(|q| q.as_ref() == Some(pair)).unwrap();
                let tr = transfers[idx].unwrap();
                let sign = if pair.first == s { 1.0 } else { -1.0 };
                let (dp, de) = (sign * tr.momentum, sign * tr.energy);
                p_goal += dp;
                e_goal += de;
                let ctx = system.inter_context(pair, s, &start)?;
                f = substep(&f, &ctx, grid, opts, |cur| {
                    let (p, e) = conserved(cur, mass, dim);
                    Moments::from_conserved(cur.n, p + dp, e + de, mass, dim)
                })?;
            }
            if opts.correct_moments {
                let target = Moments::from_conserved(own.n, p_goal, e_goal, mass, dim);
                f = correct_to_moments(&f, grid, mass, &target)?;
            }
            Ok(f)
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(DistributionState::new(species, state.time + opts.dt))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunOptions {
    pub step: StepOptions,
    pub t_end: f64,
    /// Emit a sample every this many steps (the first and last step always are).
    pub output_every: usize,
    /// Store a snapshot every this many steps; 0 disables snapshots.
    pub snapshot_every: usize,
    /// Stop once `L1(f^{k+1} - f^k) / dt` falls below this value.
    pub equilibrium_threshold: Option<f64>,
}

impl RunOptions {
    pub fn new(dt: f64, t_end: f64) -> Self {
        Self {
            step: StepOptions::new(dt),
            t_end,
            output_every: 1,
            snapshot_every: 0,
            equilibrium_threshold: Some(1e-10),
        }
    }

    pub fn n_steps(&self) -> usize {
        (self.t_end / self.step.dt - 1e-9).ceil().max(0.0) as usize
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub step: usize,
    pub t: f64,
    /// `None` for vacuum species.
    pub moments: Vec<Option<Moments>>,
    pub total_momentum: f64,
    pub total_energy: f64,
    pub entropy: f64,
    pub exchange: Vec<ExchangeReport>,
    /// `L1(f^k - f^{k-1}) / dt` summed over species; zero at step 0.
    pub step_distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelaxationSeries {
    pub labels: Vec<String>,
    pub samples: Vec<Sample>,
    pub snapshots: Vec<DistributionState>,
    pub final_state: DistributionState,
    pub steps: usize,
    pub reached_equilibrium: bool,
    /// Largest entropy increase between consecutive steps (over every step, not only samples).
    pub max_entropy_increase: f64,
}

impl RelaxationSeries {
    /// `(t, moments of a, moments of b)` for rate fits.
    pub fn pair_series(&self, a: usize, b: usize) -> Vec<(f64, Moments, Moments)> {
        self.samples
            .iter()
            .filter_map(|s| Some((s.t, s.moments[a]?, s.moments[b]?)))
            .collect()
    }
}

pub fn sample(system: &MixtureSystem, state: &DistributionState, step: usize, step_distance: f64) -> Result<Sample> {
    let moments = system.moments(state);
    let pairs = system.resolve_pairs(&moments)?;
    let dim = system.dim();
    let (mut p, mut e) = (0.0, 0.0);
    for (s, m) in moments.iter().enumerate() {
        if let Some(m) = m {
            p += m.momentum(system.mass(s));
            e += m.energy(system.mass(s), dim);
        }
    }
    let exchange = pairs
        .iter()
        .flatten()
        .map(|pair| exchange_report(system, state, pair, &moments))
        .collect::<Result<Vec<_>>>()?;
    Ok(Sample {
        step,
        t: state.time,
        moments,
        total_momentum: p,
        total_energy: e,
        entropy: total_entropy(state, system),
        exchange,
        step_distance,
    })
}

/// Iterate [`step_homogeneous`] until `t_end` or equilibrium.
pub fn run_relaxation(initial: &DistributionState, system: &MixtureSystem, opts: &RunOptions) -> Result<RelaxationSeries> {
    initial.check(system.grid())?;
    let n_steps = opts.n_steps();
    let every = opts.output_every.max(1);
    let mut state = initial.clone();
    let mut samples = vec![sample(system, &state, 0, 0.0)?];
    let mut snapshots = Vec::new();
    if opts.snapshot_every > 0 {
        snapshots.push(state.clone());
    }
    let mut h = total_entropy(&state, system);
    let mut max_entropy_increase = f64::NEG_INFINITY;
    let mut reached_equilibrium = false;
    let mut steps = 0;

    for k in 1..=n_steps {
        let next = step_homogeneous(&state, system, &opts.step).map_err(|e| e.at_step(k))?;
        next.check(system.grid()).map_err(|e| e.at_step(k))?;
        let distance = state.l1_distance(&next, system.grid()) / opts.step.dt;
        let h_next = total_entropy(&next, system);
        max_entropy_increase = max_entropy_increase.max(h_next - h);
        h = h_next;
        state = next;
        steps = k;
        reached_equilibrium = opts.equilibrium_threshold.is_some_and(|thr| distance < thr);
        let last = k == n_steps || reached_equilibrium;
        if k % every == 0 || last {
            samples.push(sample(system, &state, k, distance).map_err(|e| e.at_step(k))?);
        }
        if opts.snapshot_every > 0 && (k % opts.snapshot_every == 0 || last) {
            snapshots.push(state.clone());
        }
        if reached_equilibrium {
            log::info!("equilibrium reached at step {k}, t = {}", state.time);
            break;
        }
    }

    Ok(RelaxationSeries {
        labels: system.labels(),
        samples,
        snapshots,
        final_state: state,
        steps,
        reached_equilibrium,
        max_entropy_increase: if steps == 0 { 0.0 } else { max_entropy_increase },
    })
}

/// Time-series CSV: one row per sample.
pub fn write_series_csv<W: Write>(out: &mut W, series: &RelaxationSeries) -> io::Result<()> {
    let mut header = vec!["step".to_string(), "t".to_string()];
    for l in &series.labels {
        header.extend([format!("n_{l}"), format!("u_{l}"), format!("T_{l}")]);
    }
    header.extend(["total_momentum", "total_energy", "entropy", "step_distance"].map(String::from));
    if let Some(first) = series.samples.first() {
        for x in &first.exchange {
            let tag = format!("{}_{}", series.labels[x.first], series.labels[x.second]);
            header.extend([
                format!("fm_analytic_{tag}"),
                format!("fm_numeric_{tag}"),
                format!("FE_analytic_{tag}"),
                format!("FE_numeric_{tag}"),
            ]);
        }
    }
    writeln!(out, "{}", header.join(","))?;
    for s in &series.samples {
        let mut row = vec![s.step.to_string(), fmt_f64(s.t)];
        for m in &s.moments {
            match m {
                Some(m) => row.extend([fmt_f64(m.n), fmt_f64(m.u), fmt_f64(m.t)]),
                None => row.extend(["0".to_string(), String::new(), String::new()]),
            }
        }
        row.extend([s.total_momentum, s.total_energy, s.entropy, s.step_distance].map(fmt_f64));
        for x in &s.exchange {
            row.extend(
                [x.momentum_analytic, x.first_numeric.momentum, x.energy_analytic, x.first_numeric.energy].map(fmt_f64),
            );
        }
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}

/// Periodic uniform mesh in x.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpatialGrid {
    pub n_cells: usize,
    pub length: f64,
}

impl SpatialGrid {
    pub fn new(n_cells: usize, length: f64) -> Result<Self> {
        if n_cells == 0 || !(length > 0.0 && length.is_finite()) {
            return Err(Error::InvalidGrid(format!("spatial grid needs cells and a positive length, got {n_cells} x {length}")));
        }
        Ok(Self { n_cells, length })
    }

    pub fn dx(&self) -> f64 {
        self.length / self.n_cells as f64
    }

    pub fn center(&self, i: usize) -> f64 {
        (i as f64 + 0.5) * self.dx()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpatialState {
    pub cells: Vec<DistributionState>,
    pub time: f64,
}

impl SpatialState {
    pub fn uniform(cell: &DistributionState, n_cells: usize) -> Self {
        Self {
            cells: vec![cell.clone(); n_cells],
            time: cell.time,
        }
    }
}

pub fn courant_number(vgrid: &VelocityGrid, xgrid: &SpatialGrid, dt: f64) -> f64 {
    vgrid.max_abs_velocity() * dt / xgrid.dx()
}

/// First-order upwind advection `f_t + v f_x = 0`, periodic in x.
pub fn step_transport(state: &SpatialState, vgrid: &VelocityGrid, xgrid: &SpatialGrid, dt: f64) -> Result<SpatialState> {
    let courant = courant_number(vgrid, xgrid, dt);
    if courant > 1.0 + 1e-12 {
        return Err(Error::CflViolation { courant });
    }
    let nx = state.cells.len();
    assert_eq!(nx, xgrid.n_cells);
    let lam = dt / xgrid.dx();
    let velocities: Vec<f64> = vgrid.centers().collect();
    let cells = (0..nx)
        .into_par_iter()
        .map(|i| {
            let here = &state.cells[i];
            let left = &state.cells[(i + nx - 1) % nx];
            let right = &state.cells[(i + 1) % nx];
            let species = here
                .species
                .iter()
                .enumerate()
                .map(|(s, f)| {
                    f.iter()
                        .enumerate()
                        .map(|(k, &fk)| {
                            let v = velocities[k];
                            if v > 0.0 {
                                fk - lam * v * (fk - left.species[s][k])
                            } else {
                                fk - lam * v * (right.species[s][k] - fk)
                            }
                        })
                        .collect()
                })
                .collect();
            DistributionState::new(species, here.time + dt)
        })
        .collect();
    Ok(SpatialState {
        cells,
        time: state.time + dt,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpatialSample {
    pub step: usize,
    pub t: f64,
    pub total_momentum: f64,
    pub total_energy: f64,
    /// `sum_x dx sum_i int f_i ln f_i dv`.
    pub entropy: f64,
    /// Cumulative entropy change caused by the transport stages.
    pub transport_entropy_change: f64,
    /// Cumulative entropy change caused by the collision stages.
    pub collision_entropy_change: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpatialSeries {
    pub samples: Vec<SpatialSample>,
    /// x-integrated mass of each species per sample.
    pub masses: Vec<Vec<f64>>,
    pub final_state: SpatialState,
}

fn spatial_totals(state: &SpatialState, system: &MixtureSystem, dx: f64) -> (Vec<f64>, f64, f64, f64) {
    let grid = system.grid();
    let mut mass = vec![0.0; system.n_species()];
    let (mut p, mut e, mut h) = (0.0, 0.0, 0.0);
    for cell in &state.cells {
        for (s, f) in cell.species.iter().enumerate() {
            let m = system.mass(s);
            let mut m0 = 0.0;
            let mut m1 = 0.0;
            let mut m2 = 0.0;
            for (fk, v) in f.iter().zip(grid.centers()) {
                m0 += fk;
                m1 += fk * v;
                m2 += fk * v * v;
            }
            let dv = grid.cell_width();
            mass[s] += m0 * dv * dx;
            p += m * m1 * dv * dx;
            e += 0.5 * m * m2 * dv * dx;
        }
        h += total_entropy(cell, system) * dx;
    }
    (mass, p, e, h)
}

fn collide_all(state: &SpatialState, system: &MixtureSystem, opts: &StepOptions) -> Result<SpatialState> {
    let cells = state
        .cells
        .par_iter()
        .map(|c| step_homogeneous(c, system, opts))
        .collect::<Result<Vec<_>>>()?;
    Ok(SpatialState {
        cells,
        time: state.time + opts.dt,
    })
}

/// Strang splitting: half transport, full collision, half transport.
pub fn run_1x1v(initial: &SpatialState, system: &MixtureSystem, xgrid: &SpatialGrid, opts: &RunOptions) -> Result<SpatialSeries> {
    let vgrid = system.grid();
    let dt = opts.step.dt;
    let courant = courant_number(vgrid, xgrid, dt);
    if courant > 1.0 + 1e-12 {
        return Err(Error::CflViolation { courant }.at_step(0));
    }
    for c in &initial.cells {
        c.check(vgrid)?;
    }
    let dx = xgrid.dx();
    let every = opts.output_every.max(1);
    let n_steps = opts.n_steps();
    let mut state = initial.clone();
    let (m0, p0, e0, h0) = spatial_totals(&state, system, dx);
    let mut samples = vec![SpatialSample {
        step: 0,
        t: state.time,
        total_momentum: p0,
        total_energy: e0,
        entropy: h0,
        transport_entropy_change: 0.0,
        collision_entropy_change: 0.0,
    }];
    let mut masses = vec![m0];
    let (mut dh_transport, mut dh_collision) = (0.0, 0.0);
    let mut h = h0;

    for k in 1..=n_steps {
        let mut run = || -> Result<SpatialState> {
            let a = step_transport(&state, vgrid, xgrid, 0.5 * dt)?;
            let ha = spatial_totals(&a, system, dx).3;
            let mut b = collide_all(&SpatialState { time: state.time, ..a }, system, &opts.step)?;
            let hb = spatial_totals(&b, system, dx).3;
            b.time = state.time + 0.5 * dt;
            let mut c = step_transport(&b, vgrid, xgrid, 0.5 * dt)?;
            let hc = spatial_totals(&c, system, dx).3;
            dh_transport += (ha - h) + (hc - hb);
            dh_collision += hb - ha;
            c.time = state.time + dt;
            for cell in c.cells.iter_mut() {
                cell.time = state.time + dt;
            }
            Ok(c)
        };
        let next = run().map_err(|e| e.at_step(k))?;
        state = next;
        let (m, p, e, hn) = spatial_totals(&state, system, dx);
        h = hn;
        if k % every == 0 || k == n_steps {
            samples.push(SpatialSample {
                step: k,
                t: state.time,
                total_momentum: p,
                total_energy: e,
                entropy: hn,
                transport_entropy_change: dh_transport,
                collision_entropy_change: dh_collision,
            });
            masses.push(m);
        }
    }
    Ok(SpatialSeries {
        samples,
        masses,
        final_state: state,
    })
}

pub fn write_spatial_series_csv<W: Write>(out: &mut W, series: &SpatialSeries, labels: &[String]) -> io::Result<()> {
    let mut header = vec!["step".to_string(), "t".to_string()];
    header.extend(labels.iter().map(|l| format!("mass_{l}")));
    header.extend(
        ["total_momentum", "total_energy", "entropy", "transport_entropy_change", "collision_entropy_change"].map(String::from),
    );
    writeln!(out, "{}", header.join(","))?;
    for (s, m) in series.samples.iter().zip(&series.masses) {
        let mut row = vec![s.step.to_string(), fmt_f64(s.t)];
        row.extend(m.iter().map(|x| fmt_f64(*x)));
        row.extend(
            [s.total_momentum, s.total_energy, s.entropy, s.transport_entropy_change, s.collision_entropy_change].map(fmt_f64),
        );
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}
