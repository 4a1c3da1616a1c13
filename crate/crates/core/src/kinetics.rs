//! Velocity grid, distribution storage and velocity moments.
//!
//! All integrals use the midpoint rule on cell centers. Only `d = 1` velocity
//! grids are implemented; formulas that involve the dimension keep it as a
//! parameter.

use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fmt_f64;

/// Integrated mass below which a distribution is treated as vacuum.
pub const VACUUM_THRESHOLD: f64 = 1e-200;

/// Uniform cell-centered grid on `[v_min, v_max]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VelocityGrid {
    v_min: f64,
    v_max: f64,
    n_cells: usize,
    dim: usize,
}

impl VelocityGrid {
    pub fn new(v_min: f64, v_max: f64, n_cells: usize) -> Result<Self> {
        if !(v_min.is_finite() && v_max.is_finite() && v_min < v_max) {
            return Err(Error::InvalidGrid(format!(
                "need finite v_min < v_max, got [{v_min}, {v_max}]"
            )));
        }
        if n_cells < 3 {
            return Err(Error::InvalidGrid(format!("need at least 3 cells, got {n_cells}")));
        }
        Ok(Self {
            v_min,
            v_max,
            n_cells,
            dim: 1,
        })
    }

    /// Symmetric grid `[-half_width, half_width]`.
    pub fn symmetric(half_width: f64, n_cells: usize) -> Result<Self> {
        Self::new(-half_width, half_width, n_cells)
    }

    pub fn v_min(&self) -> f64 {
        self.v_min
    }

    pub fn v_max(&self) -> f64 {
        self.v_max
    }

    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn cell_width(&self) -> f64 {
        (self.v_max - self.v_min) / self.n_cells as f64
    }

    pub fn center(&self, k: usize) -> f64 {
        self.v_min + (k as f64 + 0.5) * self.cell_width()
    }

    /// Face `k` sits between cells `k - 1` and `k`; face 0 is `v_min`.
    pub fn face(&self, k: usize) -> f64 {
        self.v_min + k as f64 * self.cell_width()
    }

    pub fn centers(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n_cells).map(move |k| self.center(k))
    }

    pub fn max_abs_velocity(&self) -> f64 {
        self.center(0).abs().max(self.center(self.n_cells - 1).abs())
    }
}

/// Cell-averaged distribution values for every species at one instant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionState {
    pub species: Vec<Vec<f64>>,
    pub time: f64,
}

impl DistributionState {
    pub fn new(species: Vec<Vec<f64>>, time: f64) -> Self {
        Self { species, time }
    }

    pub fn n_species(&self) -> usize {
        self.species.len()
    }

    /// Checks shape, finiteness and non-negativity.
    pub fn check(&self, grid: &VelocityGrid) -> Result<()> {
        for (i, f) in self.species.iter().enumerate() {
            if f.len() != grid.n_cells() {
                return Err(Error::Config(format!(
                    "species {i} has {} cells, grid has {}",
                    f.len(),
                    grid.n_cells()
                )));
            }
            if let Some(k) = f.iter().position(|x| !(x.is_finite() && *x >= 0.0)) {
                return Err(Error::Config(format!(
                    "species {i} has invalid value {} in cell {k}",
                    f[k]
                )));
            }
        }
        Ok(())
    }

    /// `sum_i sum_k |f_i - g_i| dv`.
    pub fn l1_distance(&self, other: &Self, grid: &VelocityGrid) -> f64 {
        let dv = grid.cell_width();
        self.species
            .iter()
            .zip(&other.species)
            .map(|(a, b)| l1_distance(a, b, dv))
            .sum()
    }
}

pub fn l1_distance(a: &[f64], b: &[f64], dv: f64) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>() * dv
}

/// Number density, mean velocity and temperature of one species.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub n: f64,
    pub u: f64,
    pub t: f64,
}

impl Moments {
    pub fn new(n: f64, u: f64, t: f64) -> Self {
        Self { n, u, t }
    }

    /// `m n u`.
    pub fn momentum(&self, mass: f64) -> f64 {
        mass * self.n * self.u
    }

    /// `m n |u|^2 / 2 + d n T / 2`.
    pub fn energy(&self, mass: f64, dim: usize) -> f64 {
        0.5 * mass * self.n * self.u * self.u + 0.5 * dim as f64 * self.n * self.t
    }

    /// Inverse of [`Self::momentum`] and [`Self::energy`] at fixed density.
    pub fn from_conserved(n: f64, momentum: f64, energy: f64, mass: f64, dim: usize) -> Self {
        let u = momentum / (mass * n);
        let t = 2.0 * (energy - 0.5 * mass * n * u * u) / (dim as f64 * n);
        Self { n, u, t }
    }
}

/// Midpoint-rule moments of `f`.
pub fn moments(f: &[f64], grid: &VelocityGrid, mass: f64) -> Result<Moments> {
    let dv = grid.cell_width();
    let n = f.iter().sum::<f64>() * dv;
    if !(n > VACUUM_THRESHOLD) {
        return Err(Error::ZeroDensity { mass: n });
    }
    let flux: f64 = f.iter().zip(grid.centers()).map(|(fk, v)| v * fk).sum::<f64>() * dv;
    let u = flux / n;
    let spread: f64 = f
        .iter()
        .zip(grid.centers())
        .map(|(fk, v)| (v - u) * (v - u) * fk)
        .sum::<f64>()
        * dv;
    let t = mass * spread / (grid.dim() as f64 * n);
    Ok(Moments { n, u, t })
}

/// `None` for vacuum, moments otherwise.
pub fn try_moments(f: &[f64], grid: &VelocityGrid, mass: f64) -> Option<Moments> {
    moments(f, grid, mass).ok()
}

/// Maxwellian sampled at cell centers.
pub fn maxwellian(n: f64, u: f64, t: f64, mass: f64, grid: &VelocityGrid) -> Vec<f64> {
    assert!(n >= 0.0 && t > 0.0, "maxwellian needs n >= 0 and T > 0");
    let theta = t / mass;
    let sigma = theta.sqrt();
    if u - 6.0 * sigma < grid.v_min() || u + 6.0 * sigma > grid.v_max() {
        log::warn!(
            "maxwellian (u = {u}, T/m = {theta}) extends past the velocity grid [{}, {}]; \
             truncation will break conservation",
            grid.v_min(),
            grid.v_max()
        );
    }
    let norm = n / (2.0 * std::f64::consts::PI * theta).powf(grid.dim() as f64 / 2.0);
    grid.centers()
        .map(|v| norm * (-(v - u) * (v - u) / (2.0 * theta)).exp())
        .collect()
}

pub fn maxwellian_from(m: &Moments, mass: f64, grid: &VelocityGrid) -> Vec<f64> {
    maxwellian(m.n, m.u, m.t, mass, grid)
}

/// `sum f ln f dv` with `0 ln 0 = 0`.
pub fn entropy(f: &[f64], grid: &VelocityGrid) -> f64 {
    f.iter()
        .filter(|x| **x > 0.0)
        .map(|x| x * x.ln())
        .sum::<f64>()
        * grid.cell_width()
}

/// Write `v, f_<label>...` rows.
pub fn write_snapshot_csv<W: Write>(
    mut out: W,
    grid: &VelocityGrid,
    labels: &[String],
    state: &DistributionState,
) -> io::Result<()> {
    write!(out, "v")?;
    for label in labels {
        write!(out, ",f_{label}")?;
    }
    writeln!(out)?;
    for (k, v) in grid.centers().enumerate() {
        write!(out, "{}", fmt_f64(v))?;
        for f in &state.species {
            write!(out, ",{}", fmt_f64(f[k]))?;
        }
        writeln!(out)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn unit_grid() -> VelocityGrid {
        VelocityGrid::symmetric(8.0, 256).unwrap()
    }

    #[test]
    fn grid_rejects_bad_bounds() {
        assert!(VelocityGrid::new(1.0, 1.0, 10).is_err());
        assert!(VelocityGrid::new(0.0, 1.0, 2).is_err());
        let g = VelocityGrid::new(-1.0, 3.0, 8).unwrap();
        assert_eq!(g.cell_width(), 0.5);
        assert_eq!(g.center(0), -0.75);
        assert_eq!(g.face(8), 3.0);
    }

    #[test]
    fn unit_maxwellian_moments() {
        let g = unit_grid();
        let f = maxwellian(1.0, 0.0, 1.0, 1.0, &g);
        let m = moments(&f, &g, 1.0).unwrap();
        assert!((m.n - 1.0).abs() < 1e-10);
        assert!(m.u.abs() < 1e-10);
        assert!((m.t - 1.0).abs() < 1e-10);
    }

    #[test]
    fn unit_maxwellian_peak() {
        let g = VelocityGrid::symmetric(8.0, 257).unwrap();
        let f = maxwellian(1.0, 0.0, 1.0, 1.0, &g);
        assert_relative_eq!(f[128], 1.0 / (2.0 * std::f64::consts::PI).sqrt(), max_relative = 1e-15);
        assert_relative_eq!(f[128], 0.39894, max_relative = 1e-5);
    }

    #[test]
    fn peak_scales_with_inverse_sqrt_temperature() {
        let g = VelocityGrid::symmetric(20.0, 257).unwrap();
        let a = maxwellian(1.0, 0.0, 1.0, 1.0, &g)[128];
        let b = maxwellian(1.0, 0.0, 4.0, 1.0, &g)[128];
        assert_relative_eq!(a / b, 2.0, max_relative = 1e-14);
    }

    #[test]
    fn scaling_only_changes_density() {
        let g = unit_grid();
        let f = maxwellian(1.0, 0.3, 0.8, 2.0, &g);
        let scaled: Vec<f64> = f.iter().map(|x| 3.5 * x).collect();
        let a = moments(&f, &g, 2.0).unwrap();
        let b = moments(&scaled, &g, 2.0).unwrap();
        assert_relative_eq!(b.n, 3.5 * a.n, max_relative = 1e-14);
        assert_relative_eq!(b.u, a.u, max_relative = 1e-13);
        assert_relative_eq!(b.t, a.t, max_relative = 1e-13);
    }

    #[test]
    fn shifting_by_one_cell_shifts_velocity() {
        let g = unit_grid();
        let f = maxwellian(1.0, 0.0, 1.0, 1.0, &g);
        let mut shifted = vec![0.0; f.len()];
        shifted[1..].copy_from_slice(&f[..f.len() - 1]);
        let a = moments(&f, &g, 1.0).unwrap();
        let b = moments(&shifted, &g, 1.0).unwrap();
        assert!((b.u - a.u - g.cell_width()).abs() < 1e-12);
        assert!((b.n - a.n).abs() < 1e-12);
        assert!((b.t - a.t).abs() < 1e-12);
    }

    #[test]
    fn vacuum_is_zero_density() {
        let g = unit_grid();
        let f = vec![0.0; g.n_cells()];
        assert!(matches!(moments(&f, &g, 1.0), Err(Error::ZeroDensity { .. })));
        assert_eq!(entropy(&f, &g), 0.0);
    }

    #[test]
    fn unit_maxwellian_entropy() {
        // n (ln(n / sqrt(2 pi T/m)) - 1/2)
        let g = unit_grid();
        let f = maxwellian(1.0, 0.0, 1.0, 1.0, &g);
        let exact = -(2.0 * std::f64::consts::PI).sqrt().ln() - 0.5;
        assert!((entropy(&f, &g) - exact).abs() < 1e-10);
        assert_relative_eq!(exact, -1.41894, max_relative = 1e-5);
    }

    #[test]
    fn hotter_maxwellian_has_lower_h() {
        let g = VelocityGrid::symmetric(16.0, 512).unwrap();
        let cold = entropy(&maxwellian(1.0, 0.0, 1.0, 1.0, &g), &g);
        let hot = entropy(&maxwellian(1.0, 0.0, 2.0, 1.0, &g), &g);
        assert!(-hot > -cold);
        assert!((cold - hot - 0.5 * 2f64.ln()).abs() < 1e-10);
    }

    #[test]
    fn snapshot_csv_layout() {
        let g = VelocityGrid::new(0.0, 1.0, 4).unwrap();
        let state = DistributionState::new(vec![vec![1.0; 4], vec![0.5; 4]], 0.0);
        let mut buf = Vec::new();
        write_snapshot_csv(&mut buf, &g, &["a".into(), "b".into()], &state).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "v,f_a,f_b");
        assert_eq!(lines.len(), 5);
        let row: Vec<f64> = lines[1].split(',').map(|x| x.parse().unwrap()).collect();
        assert_eq!(row, vec![0.125, 1.0, 0.5]);
    }

    /// Remove the components of `phi` along 1, v, v^2 in the M-weighted discrete inner product.
    fn project_out_collision_invariants(phi: &mut [f64], m: &[f64], grid: &VelocityGrid) {
        let basis: Vec<Vec<f64>> = (0..3)
            .map(|p| grid.centers().map(|v| v.powi(p)).collect())
            .collect();
        // Gram-Schmidt on the basis
        let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).zip(m).map(|((x, y), w)| x * y * w).sum::<f64>();
        let mut ortho: Vec<Vec<f64>> = Vec::new();
        for b in basis {
            let mut e = b.clone();
            for q in &ortho {
                let c = dot(&e, q) / dot(q, q);
                e.iter_mut().zip(q).for_each(|(x, y)| *x -= c * y);
            }
            ortho.push(e);
        }
        for q in &ortho {
            let c = dot(phi, q) / dot(q, q);
            phi.iter_mut().zip(q).for_each(|(x, y)| *x -= c * y);
        }
    }

    proptest! {
        #[test]
        fn maxwellian_round_trip(n in 0.1f64..10.0, u in -1.0f64..1.0, t in 0.2f64..2.0, mass in 0.5f64..3.0) {
            let g = VelocityGrid::symmetric(12.0, 256).unwrap();
            prop_assume!(u.abs() + 6.0 * (t / mass).sqrt() <= g.v_max());
            let m = moments(&maxwellian(n, u, t, mass, &g), &g, mass).unwrap();
            prop_assert!((m.n - n).abs() <= 1e-8 * n);
            prop_assert!((m.u - u).abs() <= 1e-8 * (u.abs() + (t / mass).sqrt()));
            // one-sided 6-sigma truncation removes up to ~4e-8 of the second moment
            let support = (g.v_max() - u.abs()) / (t / mass).sqrt();
            let tol = if support >= 6.5 { 1e-8 } else { 1e-7 };
            prop_assert!((m.t - t).abs() <= tol * t);
        }

        #[test]
        fn maxwellian_minimizes_entropy(seed in any::<u64>(), amp in 0.01f64..0.3) {
            use rand::{Rng, SeedableRng};
            let g = VelocityGrid::symmetric(10.0, 200).unwrap();
            let m = maxwellian(1.0, 0.2, 1.3, 1.0, &g);
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let mut phi: Vec<f64> = (0..g.n_cells()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            project_out_collision_invariants(&mut phi, &m, &g);
            let scale = phi.iter().fold(0f64, |a, x| a.max(x.abs()));
            let f: Vec<f64> = m.iter().zip(&phi).map(|(mk, p)| mk * (1.0 + amp * p / scale)).collect();
            let (a, b) = (moments(&m, &g, 1.0).unwrap(), moments(&f, &g, 1.0).unwrap());
            prop_assert!((a.n - b.n).abs() < 1e-12 && (a.u - b.u).abs() < 1e-12 && (a.t - b.t).abs() < 1e-11);
            prop_assert!(entropy(&f, &g) > entropy(&m, &g));
        }
    }
}
