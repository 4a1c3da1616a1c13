//! Exchange terms, entropy production, rate fits and sampled inequality suites.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kinetics::{maxwellian_from, DistributionState, Moments, VelocityGrid};
use crate::nspecies::{MixtureSystem, OrientedPair};
use crate::operator::fokker_planck_rhs;
use crate::params::sampling::{
    closure_energy_residual, closure_momentum_residual, sample_pair_seeded,
};
use crate::params::{lemma_checks, LemmaCheck, PairParameters, Tier};

/// Momentum gained by the first species, `m_1 c_12 n_1 n_2 (1 - delta)(u_2 - u_1)`.
pub fn exchange_momentum_analytic(pair: &PairParameters, first: &Moments, second: &Moments, masses: (f64, f64)) -> f64 {
    masses.0 * pair.c_ij * first.n * second.n * (1.0 - pair.delta) * (second.u - first.u)
}

/// Energy gained by the first species.
pub fn exchange_energy_analytic(
    pair: &PairParameters,
    first: &Moments,
    second: &Moments,
    masses: (f64, f64),
    dim: usize,
) -> f64 {
    let d = dim as f64;
    let du = second.u - first.u;
    pair.c_ij
        * first.n
        * second.n
        * (masses.0 * (1.0 - pair.delta) * first.u * du + d * pair.gamma * du * du + d * (1.0 - pair.alpha) * (second.t - first.t))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentRates {
    pub mass: f64,
    pub momentum: f64,
    pub energy: f64,
}

/// Quadrature moments `(1, m v, m v^2 / 2)` of a right-hand side.
pub fn exchange_numeric(rhs: &[f64], grid: &VelocityGrid, mass: f64) -> MomentRates {
    let dv = grid.cell_width();
    let (mut m0, mut m1, mut m2) = (0.0, 0.0, 0.0);
    for (r, v) in rhs.iter().zip(grid.centers()) {
        m0 += r;
        m1 += r * v;
        m2 += r * v * v;
    }
    MomentRates {
        mass: m0 * dv,
        momentum: mass * m1 * dv,
        energy: 0.5 * mass * m2 * dv,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExchangeReport {
    pub first: usize,
    pub second: usize,
    pub momentum_analytic: f64,
    pub energy_analytic: f64,
    /// Inter-operator moments of the first species.
    pub first_numeric: MomentRates,
    /// Inter-operator moments of the second species.
    pub second_numeric: MomentRates,
    pub momentum_residual: f64,
    pub energy_residual: f64,
    /// Sum of both species' numeric momentum rates.
    pub momentum_balance: f64,
    pub energy_balance: f64,
}

pub fn exchange_report(
    system: &MixtureSystem,
    state: &DistributionState,
    pair: &OrientedPair,
    moments: &[Option<Moments>],
) -> Result<ExchangeReport> {
    let (a, b) = (pair.first, pair.second);
    let grid = system.grid();
    let ma = moments[a].ok_or(Error::ZeroDensity { mass: 0.0 })?;
    let mb = moments[b].ok_or(Error::ZeroDensity { mass: 0.0 })?;
    let masses = (system.mass(a), system.mass(b));
    let numeric = |s: usize| -> Result<MomentRates> {
        let ctx = system.inter_context(pair, s, moments)?;
        Ok(exchange_numeric(&fokker_planck_rhs(&state.species[s], &ctx, grid), grid, system.mass(s)))
    };
    let first_numeric = numeric(a)?;
    let second_numeric = numeric(b)?;
    let momentum_analytic = exchange_momentum_analytic(&pair.params, &ma, &mb, masses);
    let energy_analytic = exchange_energy_analytic(&pair.params, &ma, &mb, masses, system.dim());
    Ok(ExchangeReport {
        first: a,
        second: b,
        momentum_analytic,
        energy_analytic,
        first_numeric,
        second_numeric,
        momentum_residual: first_numeric.momentum - momentum_analytic,
        energy_residual: first_numeric.energy - energy_analytic,
        momentum_balance: first_numeric.momentum + second_numeric.momentum,
        energy_balance: first_numeric.energy + second_numeric.energy,
    })
}

/// Sign each term is expected to carry in the entropy estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SignRole {
    /// Non-positive for every state.
    NonPositive,
    /// Non-positive only in combination with its partner term under the strict tier.
    PairedNonPositive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DissipationTerm {
    pub label: String,
    pub role: SignRole,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EntropyReport {
    pub entropy: f64,
    /// `(H - H_prev) / dt` when a previous value was supplied.
    pub dh_dt_numeric: Option<f64>,
    /// Per pair: two relative Fisher informations and two moment terms.
    pub dissipation_terms: Vec<DissipationTerm>,
    /// Intra-species relative Fisher informations.
    pub intra_terms: Vec<DissipationTerm>,
    pub lemma_checks: Vec<LemmaCheck>,
    /// Sum of the two moment terms per pair; non-positive under the strict tier.
    pub moment_sums: Vec<f64>,
    pub tiers: Vec<Tier>,
}

impl EntropyReport {
    pub fn lemma_violations(&self) -> Vec<&LemmaCheck> {
        self.lemma_checks.iter().filter(|c| !c.holds()).collect()
    }

    /// Sum of all terms: the predicted `dH/dt` of the continuous model at this state.
    pub fn predicted_dh_dt(&self) -> f64 {
        self.dissipation_terms.iter().chain(&self.intra_terms).map(|t| t.value).sum()
    }
}

/// `-rate (T/m) sum_faces f_face |d ln(f/M)/dv|^2 dv` with `M` the sampled
/// Maxwellian of the context.
fn relative_fisher(f: &[f64], target: &Moments, mass: f64, rate: f64, grid: &VelocityGrid) -> f64 {
    let m = maxwellian_from(target, mass, grid);
    let dv = grid.cell_width();
    let mut acc = 0.0;
    for k in 0..f.len() - 1 {
        if f[k] <= 0.0 || f[k + 1] <= 0.0 || m[k] <= 0.0 || m[k + 1] <= 0.0 {
            continue;
        }
        let g = ((f[k + 1] / m[k + 1]).ln() - (f[k] / m[k]).ln()) / dv;
        acc += 0.5 * (f[k] + f[k + 1]) * g * g * dv;
    }
    -rate * target.t / mass * acc
}

/// Entropy production decomposition at `state`.
pub fn entropy_dissipation_report(
    state: &DistributionState,
    system: &MixtureSystem,
    previous: Option<(f64, f64)>,
) -> Result<EntropyReport> {
    let grid = system.grid();
    let moments = system.moments(state);
    let pairs = system.resolve_pairs(&moments)?;
    let d = system.dim() as f64;
    let h = crate::nspecies::total_entropy(state, system);
    let labels = system.labels();

    let mut intra_terms = Vec::new();
    for (s, m) in moments.iter().enumerate() {
        if let Some(m) = m {
            let ctx = system.intra_context(s, m)?;
            intra_terms.push(DissipationTerm {
                label: format!("relative_fisher_{}", labels[s]),
                role: SignRole::NonPositive,
                value: relative_fisher(&state.species[s], m, system.mass(s), ctx.rate, grid),
            });
        }
    }

    let mut dissipation_terms = Vec::new();
    let mut checks = Vec::new();
    let mut moment_sums = Vec::new();
    let mut tiers = Vec::new();
    for pair in pairs.iter().flatten() {
        let (a, b) = (pair.first, pair.second);
        let (ma, mb) = (moments[a].unwrap(), moments[b].unwrap());
        let (m1, m2) = (system.mass(a), system.mass(b));
        let p = &pair.params;
        let tag = format!("{}_{}", labels[a], labels[b]);
        let rev = format!("{}_{}", labels[b], labels[a]);
        let w = (ma.u - mb.u).powi(2);
        let q = p.derived_quantities(m1, m2, system.dim());
        let ca = system.inter_context(pair, a, &moments)?;
        let cb = system.inter_context(pair, b, &moments)?;
        let ta = Moments::new(ma.n, ca.target_u, ca.target_t);
        let tb = Moments::new(mb.n, cb.target_u, cb.target_t);
        let moment_a = p.c_ij * ma.n * mb.n * d * ((ma.t + q.gamma1 * w) / ca.target_t - 1.0);
        let moment_b = p.c_ji * ma.n * mb.n * d * ((mb.t + q.gamma2 * w) / cb.target_t - 1.0);
        dissipation_terms.extend([
            DissipationTerm {
                label: format!("relative_fisher_{tag}"),
                role: SignRole::NonPositive,
                value: relative_fisher(&state.species[a], &ta, m1, ca.rate, grid),
            },
            DissipationTerm {
                label: format!("relative_fisher_{rev}"),
                role: SignRole::NonPositive,
                value: relative_fisher(&state.species[b], &tb, m2, cb.rate, grid),
            },
            DissipationTerm {
                label: format!("moment_term_{tag}"),
                role: SignRole::PairedNonPositive,
                value: moment_a,
            },
            DissipationTerm {
                label: format!("moment_term_{rev}"),
                role: SignRole::PairedNonPositive,
                value: moment_b,
            },
        ]);
        moment_sums.push(moment_a + moment_b);
        checks.extend(lemma_checks(p, m1, m2, system.dim(), ma.t, mb.t, w));
        tiers.push(p.validate(m1, m2, system.dim()).tier);
    }

    Ok(EntropyReport {
        entropy: h,
        dh_dt_numeric: previous.map(|(h_prev, dt)| (h - h_prev) / dt),
        dissipation_terms,
        intra_terms,
        lemma_checks: checks,
        moment_sums,
        tiers,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Quantity {
    VelocityGap,
    TemperatureGap,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub rate: f64,
    pub intercept: f64,
    pub points: usize,
    pub t_start: f64,
    pub t_end: f64,
    /// Decades of decay covered by the fitted window.
    pub decades: f64,
}

/// Least-squares decay rate of `|q_1 - q_2|` over the monotone tail of the
/// series, skipping the first 5% of the time window.
///
/// `series` holds `(t, moments of the first species, moments of the second)`.
pub fn relaxation_rate_fit(series: &[(f64, Moments, Moments)], quantity: Quantity) -> Result<RateFit> {
    if series.len() < 3 {
        return Err(Error::FitDegenerate(format!("{} samples are too few", series.len())));
    }
    let pick = |m: &Moments| match quantity {
        Quantity::VelocityGap => m.u,
        Quantity::TemperatureGap => m.t,
    };
    let t0 = series[0].0;
    let t1 = series[series.len() - 1].0;
    let cut = t0 + 0.05 * (t1 - t0);
    let window: Vec<(f64, f64, f64)> = series
        .iter()
        .filter(|(t, _, _)| *t >= cut)
        .map(|(t, a, b)| {
            let (x, y) = (pick(a), pick(b));
            (*t, (x - y).abs(), x.abs().max(y.abs()))
        })
        .collect();
    let noise = |scale: f64| 1e6 * f64::EPSILON * scale.max(f64::MIN_POSITIVE);
    let Some(&(_, g0, s0)) = window.first() else {
        return Err(Error::FitDegenerate("empty fit window".into()));
    };
    if g0 <= noise(s0) {
        return Err(Error::FitDegenerate(format!("gap {g0:e} is at the noise floor at the start of the window")));
    }

    let mut pts: Vec<(f64, f64)> = Vec::new();
    let mut last = f64::INFINITY;
    for &(t, g, s) in &window {
        if g <= noise(s) || g > last * (1.0 + 1e-12) {
            break;
        }
        pts.push((t, g.ln()));
        last = g;
    }
    if pts.len() < 3 {
        return Err(Error::FitDegenerate(format!("monotone tail has {} points", pts.len())));
    }
    let n = pts.len() as f64;
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mt) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mt).powi(2)).sum();
    let slope = sxy / sxx;
    Ok(RateFit {
        rate: -slope,
        intercept: my - slope * mt,
        points: pts.len(),
        t_start: pts[0].0,
        t_end: pts[pts.len() - 1].0,
        decades: (pts[0].1 - pts[pts.len() - 1].1) / std::f64::consts::LN_10,
    })
}

/// `lambda_u = c_12 (1 - delta)(n_2 + (m_1/m_2) n_1)`.
pub fn velocity_relaxation_rate(pair: &PairParameters, masses: (f64, f64), densities: (f64, f64)) -> f64 {
    pair.c_ij * (1.0 - pair.delta) * (densities.1 + masses.0 / masses.1 * densities.0)
}

/// `lambda_T = 2 c_12 (1 - alpha)(n_1 + n_2)`.
pub fn temperature_relaxation_rate(pair: &PairParameters, densities: (f64, f64)) -> f64 {
    2.0 * pair.c_ij * (1.0 - pair.alpha) * (densities.0 + densities.1)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LemmaFailure {
    pub seed: u64,
    pub check: LemmaCheck,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LemmaSuiteReport {
    pub samples: usize,
    pub base_seed: u64,
    pub failures: Vec<LemmaFailure>,
    /// Smallest relative slack seen per lemma.
    pub min_relative_slack: [f64; 3],
}

/// Evaluate the three entropy inequalities on `samples` strict-tier draws.
/// Sample `k` uses seed `base_seed + k`.
pub fn lemma_suite(samples: usize, base_seed: u64) -> LemmaSuiteReport {
    let per: Vec<([LemmaCheck; 3], u64)> = (0..samples as u64)
        .into_par_iter()
        .map(|k| {
            let seed = base_seed.wrapping_add(k);
            let s = sample_pair_seeded(seed, Tier::HTheorem);
            let w = (s.first.u - s.second.u).powi(2);
            (lemma_checks(&s.params, s.masses.0, s.masses.1, s.dim, s.first.t, s.second.t, w), seed)
        })
        .collect();
    let mut failures = Vec::new();
    let mut min_relative_slack = [f64::INFINITY; 3];
    for (checks, seed) in per {
        for (i, c) in checks.iter().enumerate() {
            let scale = c.lhs.abs().max(c.rhs.abs());
            if scale > 0.0 {
                min_relative_slack[i] = min_relative_slack[i].min(c.slack() / scale);
            }
            if !c.holds() {
                failures.push(LemmaFailure { seed, check: *c });
            }
        }
    }
    LemmaSuiteReport {
        samples,
        base_seed,
        failures,
        min_relative_slack,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClosureSuiteReport {
    pub samples: usize,
    pub base_seed: u64,
    pub tier: Tier,
    pub max_momentum_relative: f64,
    pub max_energy_relative: f64,
    pub worst_momentum_seed: u64,
    pub worst_energy_seed: u64,
    /// Seeds where a mixture temperature came out non-positive.
    pub positivity_failures: Vec<u64>,
}

/// Closure identities and mixture-temperature signs on `samples` draws at `tier`.
pub fn closure_suite(samples: usize, base_seed: u64, tier: Tier) -> ClosureSuiteReport {
    let per: Vec<(u64, f64, f64, bool)> = (0..samples as u64)
        .into_par_iter()
        .map(|k| {
            let seed = base_seed.wrapping_add(k);
            let s = sample_pair_seeded(seed, tier);
            let (a, b) = (s.first, s.second);
            let p = &s.params;
            let t12 = p.mixture_temperature_12(a.t, b.t, a.u, b.u);
            let t21 = p.mixture_temperature_21(s.masses.0, s.masses.1, s.dim, a.t, b.t, a.u, b.u);
            (
                seed,
                closure_momentum_residual(&s).relative(),
                closure_energy_residual(&s).relative(),
                t12 > 0.0 && t21 > 0.0,
            )
        })
        .collect();
    let mut report = ClosureSuiteReport {
        samples,
        base_seed,
        tier,
        max_momentum_relative: 0.0,
        max_energy_relative: 0.0,
        worst_momentum_seed: base_seed,
        worst_energy_seed: base_seed,
        positivity_failures: Vec::new(),
    };
    for (seed, rm, re, positive) in per {
        if rm > report.max_momentum_relative {
            report.max_momentum_relative = rm;
            report.worst_momentum_seed = seed;
        }
        if re > report.max_energy_relative {
            report.max_energy_relative = re;
            report.worst_energy_seed = seed;
        }
        if !positive {
            report.positivity_failures.push(seed);
        }
    }
    report
}
