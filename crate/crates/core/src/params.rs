//! Free parameters of the interspecies closure.
//!
//! A [`PairParameters`] value describes one *oriented* pair: the first species
//! relaxes toward the mixture Maxwellian `(u_12, T_12)` with friction `c_ij`,
//! the second toward `(u_21, T_21)` with friction `c_ji`. The closure for the
//! second species is never stored; it is derived from the first so that total
//! momentum and energy are conserved by construction.
//!
//! Validation is layered. [`Tier::ConservationOnly`] admits the closure at all,
//! [`Tier::Positivity`] additionally guarantees positive mixture temperatures,
//! and [`Tier::HTheorem`] adds the bounds under which the total entropy is
//! non-increasing.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub mod sampling;

/// Relative slack absorbed by every inequality check.
pub const CONSTRAINT_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeciesSpec {
    pub label: String,
    pub mass: f64,
}

impl SpeciesSpec {
    pub fn new(label: impl Into<String>, mass: f64) -> Result<Self> {
        if !(mass > 0.0 && mass.is_finite()) {
            return Err(Error::Config(format!("species mass must be positive, got {mass}")));
        }
        Ok(Self {
            label: label.into(),
            mass,
        })
    }
}

/// Free parameters for one ordered species pair `(i, j)`.
///
/// `epsilon` is always derived as `c_ij / c_ji`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairParameters {
    pub c_ij: f64,
    pub c_ji: f64,
    pub delta: f64,
    pub alpha: f64,
    pub gamma: f64,
}

/// Nested admissibility levels, weakest first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Tier {
    #[serde(rename = "invalid")]
    Invalid,
    #[serde(rename = "conservation")]
    ConservationOnly,
    #[serde(rename = "positivity")]
    Positivity,
    #[serde(rename = "h-theorem")]
    HTheorem,
}

impl Tier {
    pub fn as_str(self) -> &'static str {
        match self {
            Tier::Invalid => "invalid",
            Tier::ConservationOnly => "conservation",
            Tier::Positivity => "positivity",
            Tier::HTheorem => "h-theorem",
        }
    }
}

impl std::fmt::Display for Tier {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Tier {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "conservation" | "conservation-only" => Ok(Tier::ConservationOnly),
            "positivity" => Ok(Tier::Positivity),
            "h-theorem" | "htheorem" => Ok(Tier::HTheorem),
            other => Err(Error::Config(format!("unknown tier `{other}`"))),
        }
    }
}

/// One evaluated inequality `lhs <= rhs`, reported as signed slack `rhs - lhs`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConstraintCheck {
    pub id: &'static str,
    pub tier: Tier,
    pub slack: f64,
    pub satisfied: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub id: &'static str,
    pub message: String,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub tier: Tier,
    pub checks: Vec<ConstraintCheck>,
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn reaches(&self, tier: Tier) -> bool {
        self.tier >= tier
    }
}

/// Quantities used by the entropy estimates.
///
/// The barred temperatures are affine in `(T_i, T_j)` and are stored as
/// coefficient pairs `(a, b)` meaning `a * T_i + b * T_j`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedPairQuantities {
    pub gamma1: f64,
    pub gamma2: f64,
    pub gamma_tilde: f64,
    pub tbar_ij: (f64, f64),
    pub tbar_ji: (f64, f64),
}

impl DerivedPairQuantities {
    pub fn tbar_ij(&self, t1: f64, t2: f64) -> f64 {
        self.tbar_ij.0 * t1 + self.tbar_ij.1 * t2
    }

    pub fn tbar_ji(&self, t1: f64, t2: f64) -> f64 {
        self.tbar_ji.0 * t1 + self.tbar_ji.1 * t2
    }
}

fn inequality(id: &'static str, tier: Tier, lhs: f64, rhs: f64) -> ConstraintCheck {
    let slack = rhs - lhs;
    let scale = 1f64.max(lhs.abs()).max(rhs.abs());
    ConstraintCheck {
        id,
        tier,
        slack,
        satisfied: slack.is_finite() && slack >= -CONSTRAINT_TOLERANCE * scale,
    }
}

fn describe(id: &str) -> &'static str {
    match id {
        "friction_nonneg" => "friction constants must be non-negative",
        "epsilon_finite" => "c_ji = 0 while c_ij > 0 makes epsilon infinite",
        "epsilon_le_one" => "epsilon = c_ij/c_ji must not exceed 1",
        "epsilon_mass_ratio_le_one" => "epsilon * m_i/m_j must not exceed 1",
        "alpha_ge_zero" => "alpha must be non-negative",
        "alpha_le_one" => "alpha must not exceed 1",
        "gamma_nonneg" => "gamma must be non-negative",
        "gamma_le_positivity_bound" => "gamma must not exceed (m_i/d)(1 - delta)",
        "delta_le_one" => "delta must not exceed 1",
        "alpha_ge_h_bound" => "alpha must be at least epsilon/(1 + epsilon)",
        "delta_ge_h_bound" => "delta must be at least epsilon/(1 + epsilon)",
        "gamma_ge_h_lower" => "gamma must be at least (1 - delta)^2 m_i/d",
        "gamma_le_h_upper" => "gamma must not exceed (1 - delta)(m_i/d) epsilon/(1 + epsilon)",
        _ => "constraint violated",
    }
}

impl PairParameters {
    pub fn new(c_ij: f64, c_ji: f64, delta: f64, alpha: f64, gamma: f64) -> Self {
        Self {
            c_ij,
            c_ji,
            delta,
            alpha,
            gamma,
        }
    }

    /// `c_ij / c_ji`. A pair without any interspecies friction has `epsilon = 0`;
    /// `c_ji = 0` with `c_ij > 0` yields `+inf`.
    pub fn epsilon(&self) -> f64 {
        if self.c_ji > 0.0 {
            self.c_ij / self.c_ji
        } else if self.c_ij == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    }

    /// Evaluate every constraint and return the strongest tier whose full set holds.
    pub fn validate(&self, mi: f64, mj: f64, dim: usize) -> ValidationReport {
        assert!(mi > 0.0 && mj > 0.0, "masses must be positive");
        assert!((1..=3).contains(&dim), "dimension must be 1, 2 or 3");
        let d = dim as f64;
        let eps = self.epsilon();
        let h = if eps.is_finite() { eps / (1.0 + eps) } else { 1.0 };
        let one_minus_delta = 1.0 - self.delta;

        use Tier::*;
        let checks = vec![
            inequality("friction_nonneg", ConservationOnly, 0.0, self.c_ij.min(self.c_ji)),
            ConstraintCheck {
                id: "epsilon_finite",
                tier: ConservationOnly,
                slack: if eps.is_finite() { 0.0 } else { f64::NEG_INFINITY },
                satisfied: eps.is_finite(),
            },
            inequality("epsilon_le_one", ConservationOnly, eps, 1.0),
            inequality("epsilon_mass_ratio_le_one", ConservationOnly, eps * mi / mj, 1.0),
            inequality("alpha_ge_zero", ConservationOnly, 0.0, self.alpha),
            inequality("alpha_le_one", ConservationOnly, self.alpha, 1.0),
            inequality("gamma_nonneg", ConservationOnly, 0.0, self.gamma),
            inequality(
                "gamma_le_positivity_bound",
                Positivity,
                self.gamma,
                mi / d * one_minus_delta,
            ),
            inequality("delta_le_one", Positivity, self.delta, 1.0),
            inequality("alpha_ge_h_bound", HTheorem, h, self.alpha),
            inequality("delta_ge_h_bound", HTheorem, h, self.delta),
            inequality(
                "gamma_ge_h_lower",
                HTheorem,
                one_minus_delta * one_minus_delta * mi / d,
                self.gamma,
            ),
            inequality(
                "gamma_le_h_upper",
                HTheorem,
                self.gamma,
                one_minus_delta * mi / d * h,
            ),
        ];

        let holds = |tier: Tier| checks.iter().filter(|c| c.tier == tier).all(|c| c.satisfied);
        let tier = if !holds(ConservationOnly) {
            Invalid
        } else if !holds(Positivity) {
            ConservationOnly
        } else if !holds(HTheorem) {
            Positivity
        } else {
            HTheorem
        };

        let violations = checks
            .iter()
            .filter(|c| !c.satisfied)
            .map(|c| Violation {
                id: c.id,
                message: describe(c.id).to_string(),
                residual: c.slack,
            })
            .collect();

        ValidationReport {
            tier,
            checks,
            violations,
        }
    }

    /// `u_12 = delta u_1 + (1 - delta) u_2`.
    pub fn mixture_velocity_12(&self, u1: f64, u2: f64) -> f64 {
        self.delta * u1 + (1.0 - self.delta) * u2
    }

    /// `u_21 = u_2 - (1 - delta) epsilon (m_i/m_j) (u_2 - u_1)`; the momentum
    /// balancing partner of [`Self::mixture_velocity_12`].
    pub fn mixture_velocity_21(&self, mi: f64, mj: f64, u1: f64, u2: f64) -> f64 {
        u2 - (1.0 - self.delta) * self.epsilon() * (mi / mj) * (u2 - u1)
    }

    /// `T_12 = alpha T_1 + (1 - alpha) T_2 + gamma |u_1 - u_2|^2`.
    pub fn mixture_temperature_12(&self, t1: f64, t2: f64, u1: f64, u2: f64) -> f64 {
        let du = u1 - u2;
        self.alpha * t1 + (1.0 - self.alpha) * t2 + self.gamma * du * du
    }

    /// Energy-balancing partner of [`Self::mixture_temperature_12`].
    #[allow(clippy::too_many_arguments)]
    pub fn mixture_temperature_21(
        &self,
        mi: f64,
        _mj: f64,
        dim: usize,
        t1: f64,
        t2: f64,
        u1: f64,
        u2: f64,
    ) -> f64 {
        let eps = self.epsilon();
        let du = u1 - u2;
        let heating = eps * mi * (1.0 - self.delta) / dim as f64 - eps * self.gamma;
        let swap = eps * (1.0 - self.alpha);
        heating * du * du + swap * t1 + (1.0 - swap) * t2
    }

    pub fn derived_quantities(&self, mi: f64, mj: f64, dim: usize) -> DerivedPairQuantities {
        let d = dim as f64;
        let eps = self.epsilon();
        let omd = 1.0 - self.delta;
        let ratio = mi / mj;
        let swap = eps * (1.0 - self.alpha);
        DerivedPairQuantities {
            gamma1: omd * omd * mi / d,
            gamma2: omd * omd * (mj / d) * eps * eps * ratio * ratio,
            gamma_tilde: mi / d * eps * omd - eps * self.gamma,
            tbar_ij: (self.alpha, 1.0 - self.alpha),
            tbar_ji: (swap, 1.0 - swap),
        }
    }
}

/// Left and right side of one entropy-estimate inequality `lhs <= rhs`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LemmaCheck {
    pub name: &'static str,
    pub lhs: f64,
    pub rhs: f64,
}

impl LemmaCheck {
    pub fn slack(&self) -> f64 {
        self.rhs - self.lhs
    }

    pub fn holds(&self) -> bool {
        let scale = 1f64.max(self.lhs.abs()).max(self.rhs.abs());
        self.slack() >= -CONSTRAINT_TOLERANCE * scale
    }
}

/// The three inequalities whose sum bounds the interspecies entropy production.
///
/// `w` is `|u_1 - u_2|^2`. Under H-theorem tier parameters all three hold for
/// every positive `t1`, `t2` and non-negative `w`.
pub fn lemma_checks(
    pair: &PairParameters,
    mi: f64,
    mj: f64,
    dim: usize,
    t1: f64,
    t2: f64,
    w: f64,
) -> [LemmaCheck; 3] {
    let eps = pair.epsilon();
    let q = pair.derived_quantities(mi, mj, dim);
    let tb12 = q.tbar_ij(t1, t2);
    let tb21 = q.tbar_ji(t1, t2);
    let g = pair.gamma;
    [
        LemmaCheck {
            name: "barred_temperatures",
            lhs: eps * t1 * tb21 + tb12 * t2,
            rhs: (1.0 + eps) * tb12 * tb21,
        },
        LemmaCheck {
            name: "heating_coefficients",
            lhs: eps * q.gamma1 * q.gamma_tilde + g * q.gamma2,
            rhs: (1.0 + eps) * g * q.gamma_tilde,
        },
        LemmaCheck {
            name: "cross_terms",
            lhs: eps * t1 * q.gamma_tilde * w
                + eps * q.gamma1 * w * tb21
                + tb12 * q.gamma2 * w
                + g * w * t2,
            rhs: (1.0 + eps) * tb12 * q.gamma_tilde * w + (1.0 + eps) * g * w * tb21,
        },
    ]
}

/// Literature parameter choices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    /// Common mixture velocity at the midpoint and a mass-weighted common temperature.
    Symmetric7,
    /// Collision-frequency weighted common mixture velocity and temperature.
    Hu,
    /// Each species relaxes toward the other species' velocity and temperature.
    Gorji,
}

impl Preset {
    pub const ALL: [Preset; 3] = [Preset::Symmetric7, Preset::Hu, Preset::Gorji];

    pub fn as_str(self) -> &'static str {
        match self {
            Preset::Symmetric7 => "symmetric7",
            Preset::Hu => "hu",
            Preset::Gorji => "gorji",
        }
    }
}

impl std::str::FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "symmetric7" => Ok(Preset::Symmetric7),
            "hu" => Ok(Preset::Hu),
            "gorji" => Ok(Preset::Gorji),
            other => Err(Error::Config(format!("unknown preset `{other}`"))),
        }
    }
}

/// Parameters produced by [`preset`]. When `swapped` is set they apply to the
/// orientation `(j, i)` instead of the `(i, j)` the caller asked for.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PresetPair {
    pub params: PairParameters,
    pub swapped: bool,
}

/// Evaluate a preset for the pair `(i, j)`.
///
/// `friction` is `(c_ij, c_ji)` in the caller's orientation. The orientation is
/// normalized so the stored pair satisfies `epsilon <= 1` and
/// `epsilon m_1/m_2 <= 1` whenever one orientation does. For
/// [`Preset::Symmetric7`] the heavier species comes first and its friction is
/// rederived as `(m_light/m_heavy) c_light`, which is what makes `T_12 = T_21`.
pub fn preset(
    name: Preset,
    friction: (f64, f64),
    masses: (f64, f64),
    densities: (f64, f64),
    dim: usize,
) -> Result<PresetPair> {
    let d = dim as f64;
    match name {
        Preset::Symmetric7 => {
            let swapped = masses.1 > masses.0;
            let (m1, m2, c_light) = if swapped {
                (masses.1, masses.0, friction.0)
            } else {
                (masses.0, masses.1, friction.1)
            };
            let eps = m2 / m1;
            let params = PairParameters {
                c_ij: eps * c_light,
                c_ji: c_light,
                delta: 0.5,
                alpha: m2 / (m1 + m2),
                gamma: m1 * m2 / (2.0 * d * (m1 + m2)),
            };
            Ok(PresetPair { params, swapped })
        }
        Preset::Hu => {
            if !(densities.0 > 0.0 && densities.1 > 0.0) {
                return Err(Error::Config(format!(
                    "hu preset needs positive densities, got ({}, {})",
                    densities.0, densities.1
                )));
            }
            let swapped = !orientation_admissible(friction, masses)
                && orientation_admissible((friction.1, friction.0), masses);
            let (c12, c21, m1, m2, n1, n2) = if swapped {
                (friction.1, friction.0, masses.1, masses.0, densities.1, densities.0)
            } else {
                (friction.0, friction.1, masses.0, masses.1, densities.0, densities.1)
            };
            // Collision frequency felt by each species: c_12 n_2 and c_21 n_1.
            let w1 = n1 * c12 * n2;
            let w2 = n2 * c21 * n1;
            let p1 = m1 * w1;
            let p2 = m2 * w2;
            let params = PairParameters {
                c_ij: c12,
                c_ji: c21,
                delta: p1 / (p1 + p2),
                alpha: w1 / (w1 + w2),
                gamma: p1 * p2 / (d * (w1 + w2) * (p1 + p2)),
            };
            Ok(PresetPair { params, swapped })
        }
        Preset::Gorji => {
            let swapped = !orientation_admissible(friction, masses)
                && orientation_admissible((friction.1, friction.0), masses);
            let (c12, c21) = if swapped {
                (friction.1, friction.0)
            } else {
                friction
            };
            let params = PairParameters {
                c_ij: c12,
                c_ji: c21,
                delta: 0.0,
                alpha: 0.0,
                gamma: 0.0,
            };
            Ok(PresetPair { params, swapped })
        }
    }
}

fn orientation_admissible(friction: (f64, f64), masses: (f64, f64)) -> bool {
    let eps = PairParameters::new(friction.0, friction.1, 1.0, 1.0, 0.0).epsilon();
    eps <= 1.0 && eps * masses.0 / masses.1 <= 1.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn pair(eps: f64, delta: f64, alpha: f64, gamma: f64) -> PairParameters {
        PairParameters::new(eps, 1.0, delta, alpha, gamma)
    }

    #[test]
    fn gamma_below_h_lower_bound_stops_at_positivity() {
        let report = pair(1.0, 0.5, 0.5, 0.0).validate(1.0, 1.0, 1);
        assert_eq!(report.tier, Tier::Positivity);
        assert_eq!(report.violations.len(), 1);
        assert_eq!(report.violations[0].id, "gamma_ge_h_lower");
        assert_relative_eq!(report.violations[0].residual, -0.25);
    }

    #[test]
    fn collapsed_h_band_is_admissible() {
        let report = pair(1.0, 0.5, 0.5, 0.25).validate(1.0, 1.0, 1);
        assert_eq!(report.tier, Tier::HTheorem);
        assert!(report.violations.is_empty());
    }

    #[test]
    fn epsilon_above_one_is_invalid() {
        let report = pair(2.0, 0.5, 0.5, 0.0).validate(1.0, 1.0, 1);
        assert_eq!(report.tier, Tier::Invalid);
        assert!(report.violations.iter().any(|v| v.id == "epsilon_le_one"));
    }

    #[test]
    fn infinite_epsilon_is_invalid() {
        let p = PairParameters::new(1.0, 0.0, 1.0, 1.0, 0.0);
        assert!(p.epsilon().is_infinite());
        let report = p.validate(1.0, 1.0, 1);
        assert_eq!(report.tier, Tier::Invalid);
        assert!(report.violations.iter().any(|v| v.id == "epsilon_finite"));
    }

    #[test]
    fn decoupled_pair_has_zero_epsilon() {
        let p = PairParameters::new(0.0, 0.0, 1.0, 1.0, 0.0);
        assert_eq!(p.epsilon(), 0.0);
        assert!(p.validate(1.0, 3.0, 2).reaches(Tier::ConservationOnly));
    }

    #[test]
    fn mass_ratio_constraint() {
        // epsilon = 1 but m_i/m_j = 2
        let report = pair(1.0, 0.5, 0.5, 0.0).validate(2.0, 1.0, 1);
        assert_eq!(report.tier, Tier::Invalid);
        assert_eq!(report.violations[0].id, "epsilon_mass_ratio_le_one");
    }

    #[test]
    fn positivity_bound_tolerates_roundoff() {
        let mut p = pair(1.0, 0.3, 0.5, 0.7 / 3.0);
        p.gamma *= 1.0 + 1e-15;
        assert!(p.validate(1.0, 1.0, 3).reaches(Tier::Positivity));
        p.gamma *= 1.0 + 1e-9;
        assert!(!p.validate(1.0, 1.0, 3).reaches(Tier::Positivity));
    }

    #[test]
    fn mixture_velocity_12_examples() {
        assert_eq!(pair(1.0, 1.0, 1.0, 0.0).mixture_velocity_12(3.0, -7.0), 3.0);
        assert_eq!(pair(1.0, 0.5, 1.0, 0.0).mixture_velocity_12(1.0, 0.0), 0.5);
        assert_eq!(pair(1.0, 0.25, 1.0, 0.0).mixture_velocity_12(2.0, -2.0), -1.0);
    }

    #[test]
    fn mixture_velocity_21_examples() {
        assert_eq!(pair(0.3, 1.0, 1.0, 0.0).mixture_velocity_21(2.0, 5.0, 4.0, -1.5), -1.5);
        assert_relative_eq!(pair(0.5, 0.5, 1.0, 0.0).mixture_velocity_21(2.0, 1.0, 0.0, 1.0), 0.5);
        assert_relative_eq!(pair(1.0, 0.0, 1.0, 0.0).mixture_velocity_21(1.5, 1.5, 0.7, -2.0), 0.7);
    }

    #[test]
    fn mixture_velocity_21_matches_rewritten_form() {
        let p = pair(0.4, 0.3, 1.0, 0.0);
        let (mi, mj, u1, u2) = (1.3, 2.1, 0.9, -0.4);
        let dt = 1.0 - (mi / mj) * p.epsilon() * (1.0 - p.delta);
        assert_relative_eq!(
            p.mixture_velocity_21(mi, mj, u1, u2),
            dt * u2 + (1.0 - dt) * u1,
            max_relative = 1e-14
        );
    }

    #[test]
    fn mixture_temperature_12_examples() {
        assert_eq!(pair(1.0, 0.5, 1.0, 0.0).mixture_temperature_12(2.5, 4.0, 1.0, 0.0), 2.5);
        assert_eq!(pair(1.0, 0.5, 0.5, 0.0).mixture_temperature_12(2.0, 4.0, 0.0, 0.0), 3.0);
        assert_relative_eq!(
            pair(1.0, 0.5, 0.5, 0.1).mixture_temperature_12(2.0, 4.0, 3.0, 0.0),
            3.9,
            max_relative = 1e-15
        );
    }

    #[test]
    fn mixture_temperature_21_examples() {
        // equal velocities, full swap
        let p = pair(1.0, 0.5, 0.0, 0.1);
        assert_relative_eq!(p.mixture_temperature_21(1.0, 1.0, 1, 2.0, 5.0, 0.3, 0.3), 2.0);

        // gamma at positivity bound kills the heating term
        let (mi, d, delta) = (1.7, 2, 0.2);
        let p = pair(1.0, delta, 0.4, mi / d as f64 * (1.0 - delta));
        let t21 = p.mixture_temperature_21(mi, 1.7, d, 1.0, 3.0, 2.0, -1.0);
        let swap = 1.0 - 0.4;
        assert_relative_eq!(t21, swap * 1.0 + (1.0 - swap) * 3.0, max_relative = 1e-14);
    }

    #[test]
    fn symmetric7_preset_equal_mixture_temperatures() {
        for (m1, m2, d) in [(2.0, 1.0, 1), (5.0, 0.3, 3), (1.0, 1.0, 2)] {
            let p = preset(Preset::Symmetric7, (0.7, 1.3), (m1, m2), (1.0, 1.0), d)
                .unwrap()
                .params;
            for (t1, t2, u1, u2) in [(1.0, 2.0, 0.5, -0.5), (0.3, 7.0, 2.0, 2.0), (4.0, 0.1, -3.0, 1.0)] {
                let t12 = p.mixture_temperature_12(t1, t2, u1, u2);
                let t21 = p.mixture_temperature_21(m1, m2, d, t1, t2, u1, u2);
                assert_relative_eq!(t12, t21, max_relative = 1e-14);
            }
        }
    }

    #[test]
    fn symmetric7_preset_values() {
        let m = 1.7;
        let out = preset(Preset::Symmetric7, (1.0, 1.0), (m, m), (1.0, 1.0), 3).unwrap();
        assert!(!out.swapped);
        assert_relative_eq!(out.params.alpha, 0.5);
        assert_relative_eq!(out.params.delta, 0.5);
        assert_relative_eq!(out.params.gamma, m / 12.0, max_relative = 1e-15);
        assert_relative_eq!(out.params.epsilon(), 1.0);
    }

    #[test]
    fn symmetric7_normalizes_heavier_first() {
        let out = preset(Preset::Symmetric7, (2.0, 3.0), (1.0, 4.0), (1.0, 1.0), 1).unwrap();
        assert!(out.swapped);
        // the lighter species keeps its friction, the heavier one is rescaled
        assert_eq!(out.params.c_ji, 2.0);
        assert_relative_eq!(out.params.epsilon(), 0.25);
        assert!(out.params.validate(4.0, 1.0, 1).reaches(Tier::Positivity));
    }

    #[test]
    fn gorji_preset_targets_other_species_velocity() {
        let out = preset(Preset::Gorji, (1.0, 2.0), (2.0, 1.0), (1.0, 1.0), 1).unwrap();
        assert_eq!(out.params.delta, 0.0);
        assert_eq!(out.params.mixture_velocity_12(3.0, -1.0), -1.0);
        // c_12 m_1 = c_21 m_2 here, so u_21 is exactly the first species' velocity
        assert_relative_eq!(out.params.mixture_velocity_21(2.0, 1.0, 3.0, -1.0), 3.0);
    }

    #[test]
    fn hu_preset_equal_frictions_and_densities() {
        let out = preset(Preset::Hu, (1.5, 1.5), (1.0, 3.0), (2.0, 2.0), 1).unwrap();
        assert_relative_eq!(out.params.alpha, 0.5);
    }

    #[test]
    fn hu_preset_rejects_zero_density() {
        assert!(preset(Preset::Hu, (1.0, 1.0), (1.0, 1.0), (0.0, 1.0), 1).is_err());
    }

    #[test]
    fn hu_preset_produces_common_targets() {
        let (m1, m2, d) = (3.0, 1.2, 2);
        let out = preset(Preset::Hu, (0.4, 0.9), (m1, m2), (0.7, 2.5), d).unwrap();
        assert!(!out.swapped);
        let p = out.params;
        let (u1, u2, t1, t2) = (1.1, -0.6, 0.8, 2.3);
        assert_relative_eq!(
            p.mixture_velocity_12(u1, u2),
            p.mixture_velocity_21(m1, m2, u1, u2),
            max_relative = 1e-14
        );
        assert_relative_eq!(
            p.mixture_temperature_12(t1, t2, u1, u2),
            p.mixture_temperature_21(m1, m2, d, t1, t2, u1, u2),
            max_relative = 1e-14
        );
        // momentum-weighted common velocity
        let (n1, n2) = (0.7, 2.5);
        let w1 = m1 * 0.4 * n1 * n2;
        let w2 = m2 * 0.9 * n1 * n2;
        assert_relative_eq!(
            p.mixture_velocity_12(u1, u2),
            (w1 * u1 + w2 * u2) / (w1 + w2),
            max_relative = 1e-14
        );
    }

    #[test]
    fn derived_quantities_examples() {
        let q = pair(1.0, 1.0, 0.5, 0.0).derived_quantities(1.0, 2.0, 1);
        assert_eq!(q.gamma1, 0.0);
        assert_eq!(q.gamma2, 0.0);
        assert_eq!(q.gamma_tilde, 0.0);

        let g = 0.1;
        let q = pair(1.0, 0.5, 0.5, g).derived_quantities(1.0, 1.0, 1);
        assert_relative_eq!(q.gamma1, 0.25);
        assert_relative_eq!(q.gamma2, 0.25);
        assert_relative_eq!(q.gamma_tilde, 0.5 - g);
    }

    #[test]
    fn tbar_coefficients_are_convex() {
        let q = pair(0.6, 0.9, 0.7, 0.0).derived_quantities(1.0, 1.0, 1);
        assert_relative_eq!(q.tbar_ji.0, 0.6 * 0.3);
        assert_relative_eq!(q.tbar_ji.0 + q.tbar_ji.1, 1.0);
        assert_relative_eq!(q.tbar_ij(2.0, 4.0), 0.7 * 2.0 + 0.3 * 4.0);
    }

    #[test]
    fn lemmas_tight_at_equal_temperatures_without_drift() {
        let p = pair(1.0, 0.5, 0.5, 0.25);
        for check in lemma_checks(&p, 1.0, 1.0, 1, 1.3, 1.3, 0.0) {
            assert!(check.holds(), "{check:?}");
        }
    }

    proptest! {
        #[test]
        fn h_tier_orders_heating_coefficients(seed in any::<u64>()) {
            let s = sampling::sample_pair_seeded(seed, Tier::HTheorem);
            let q = s.params.derived_quantities(s.masses.0, s.masses.1, s.dim);
            let tol = 1e-12 * s.params.gamma.max(1.0);
            prop_assert!(q.gamma1 <= s.params.gamma + tol);
            prop_assert!(q.gamma2 <= s.params.gamma + tol);
            prop_assert!(q.gamma_tilde >= s.params.gamma - tol);
        }

        #[test]
        fn sampled_tiers_validate(seed in any::<u64>()) {
            for tier in [Tier::ConservationOnly, Tier::Positivity, Tier::HTheorem] {
                let s = sampling::sample_pair_seeded(seed, tier);
                let report = s.params.validate(s.masses.0, s.masses.1, s.dim);
                prop_assert!(report.reaches(tier), "{:?} {:?}", tier, report.violations);
            }
        }

        #[test]
        fn positivity_tier_keeps_mixture_temperatures_positive(seed in any::<u64>()) {
            let s = sampling::sample_pair_seeded(seed, Tier::Positivity);
            let (mi, mj) = s.masses;
            let (a, b) = (s.first, s.second);
            prop_assert!(s.params.mixture_temperature_12(a.t, b.t, a.u, b.u) > 0.0);
            prop_assert!(s.params.mixture_temperature_21(mi, mj, s.dim, a.t, b.t, a.u, b.u) > 0.0);
        }

        #[test]
        fn lemmas_hold_at_h_tier(seed in any::<u64>()) {
            let s = sampling::sample_pair_seeded(seed, Tier::HTheorem);
            let w = (s.first.u - s.second.u).powi(2);
            for check in lemma_checks(&s.params, s.masses.0, s.masses.1, s.dim, s.first.t, s.second.t, w) {
                prop_assert!(check.holds(), "{:?}", check);
            }
        }

        #[test]
        fn closure_identities_balance(seed in any::<u64>()) {
            let s = sampling::sample_pair_seeded(seed, Tier::ConservationOnly);
            let m = sampling::closure_momentum_residual(&s);
            let e = sampling::closure_energy_residual(&s);
            prop_assert!(m.relative() <= 1e-13, "{:?}", m);
            prop_assert!(e.relative() <= 1e-13, "{:?}", e);
        }
    }
}
