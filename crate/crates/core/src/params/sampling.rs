//! Reproducible random sampling of admissible pair parameters and moments.
//!
//! Every sample is drawn from its own `ChaCha8Rng` seeded with a single `u64`,
//! so a failing sample can be regenerated from its seed alone.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{PairParameters, Tier};
use crate::kinetics::Moments;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairSample {
    pub seed: u64,
    pub dim: usize,
    pub masses: (f64, f64),
    pub params: PairParameters,
    pub first: Moments,
    pub second: Moments,
}

fn log_uniform<R: Rng>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    (rng.gen_range(lo.ln()..=hi.ln())).exp()
}

/// Draw parameters that satisfy every constraint of `tier` (and all weaker ones).
pub fn sample_pair<R: Rng>(rng: &mut R, tier: Tier, seed: u64) -> PairSample {
    let dim = rng.gen_range(1..=3usize);
    let d = dim as f64;
    let mi = log_uniform(rng, 0.1, 10.0);
    let mj = log_uniform(rng, 0.1, 10.0);
    let c_ji = log_uniform(rng, 0.05, 5.0);
    let eps_max = (mj / mi).min(1.0);
    let eps = eps_max * rng.gen_range(1e-3..=1.0);
    let c_ij = eps * c_ji;
    let eps = c_ij / c_ji;
    let h = eps / (1.0 + eps);

    let (delta, alpha, gamma) = match tier {
        Tier::Invalid | Tier::ConservationOnly => {
            let delta = rng.gen_range(-1.0..=2.0);
            (delta, rng.gen_range(0.0..=1.0), rng.gen_range(0.0..=2.0 * mi / d))
        }
        Tier::Positivity => {
            let delta: f64 = rng.gen_range(-1.0..=1.0);
            let bound = mi / d * (1.0 - delta);
            (delta, rng.gen_range(0.0..=1.0), rng.gen_range(0.0..=bound))
        }
        Tier::HTheorem => {
            // The gamma band is non-empty only for delta >= 1/(1 + eps) >= eps/(1 + eps).
            let delta: f64 = rng.gen_range((1.0 / (1.0 + eps))..=1.0);
            let lo = (1.0 - delta).powi(2) * mi / d;
            let hi = (1.0 - delta) * mi / d * h;
            let gamma = if hi > lo { rng.gen_range(lo..=hi) } else { lo };
            (delta, rng.gen_range(h..=1.0), gamma)
        }
    };

    let mut moments = || Moments {
        n: log_uniform(rng, 0.1, 10.0),
        u: rng.gen_range(-5.0..=5.0),
        t: log_uniform(rng, 0.05, 10.0),
    };
    let first = moments();
    let second = moments();

    PairSample {
        seed,
        dim,
        masses: (mi, mj),
        params: PairParameters::new(c_ij, c_ji, delta, alpha, gamma),
        first,
        second,
    }
}

pub fn sample_pair_seeded(seed: u64, tier: Tier) -> PairSample {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample_pair(&mut rng, tier, seed)
}

/// Residual of an identity that should vanish, with the magnitude of the
/// summands it was computed from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClosureResidual {
    pub residual: f64,
    pub scale: f64,
}

impl ClosureResidual {
    pub fn relative(&self) -> f64 {
        if self.scale > 0.0 {
            self.residual.abs() / self.scale
        } else {
            self.residual.abs()
        }
    }
}

/// `m_i c_ij n_i n_j (u_ij - u_i) + m_j c_ji n_i n_j (u_ji - u_j)`.
pub fn closure_momentum_residual(s: &PairSample) -> ClosureResidual {
    let p = &s.params;
    let (mi, mj) = s.masses;
    let (a, b) = (s.first, s.second);
    let nn = a.n * b.n;
    let u12 = p.mixture_velocity_12(a.u, b.u);
    let u21 = p.mixture_velocity_21(mi, mj, a.u, b.u);
    let k1 = mi * p.c_ij * nn;
    let k2 = mj * p.c_ji * nn;
    ClosureResidual {
        residual: k1 * (u12 - a.u) + k2 * (u21 - b.u),
        scale: k1 * (u12.abs() + a.u.abs()) + k2 * (u21.abs() + b.u.abs()),
    }
}

/// Sum of both species' energy exchange written from the closure values.
pub fn closure_energy_residual(s: &PairSample) -> ClosureResidual {
    let p = &s.params;
    let (mi, mj) = s.masses;
    let d = s.dim as f64;
    let (a, b) = (s.first, s.second);
    let nn = a.n * b.n;
    let u12 = p.mixture_velocity_12(a.u, b.u);
    let u21 = p.mixture_velocity_21(mi, mj, a.u, b.u);
    let t12 = p.mixture_temperature_12(a.t, b.t, a.u, b.u);
    let t21 = p.mixture_temperature_21(mi, mj, s.dim, a.t, b.t, a.u, b.u);

    let r1 = p.c_ij * nn;
    let r2 = p.c_ji * nn;
    let residual = d * (t12 - a.t) * r1
        + mi * r1 * a.u * (u12 - a.u)
        + d * (t21 - b.t) * r2
        + mj * r2 * b.u * (u21 - b.u);

    // T_21 may carry a negative heating coefficient below the positivity tier,
    // so its round-off scale is that of its constituents.
    let eps = p.epsilon();
    let w = (a.u - b.u).powi(2);
    let heating = (eps * mi * (1.0 - p.delta) / d - eps * p.gamma).abs() * w;
    let swap = eps * (1.0 - p.alpha);
    let t21_parts = heating + swap.abs() * a.t + (1.0 - swap).abs() * b.t;
    let scale = r1 * (d * (t12 + a.t) + mi * a.u.abs() * (u12.abs() + a.u.abs()))
        + r2 * (d * (t21_parts + b.t) + mj * b.u.abs() * (u21.abs() + b.u.abs()));
    ClosureResidual { residual, scale }
}
