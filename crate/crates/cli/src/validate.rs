use std::path::Path;

use anyhow::{Context, Result};
use fpmix_core::config::{PairValidation, SimulationConfig};
use fpmix_core::Tier;
use serde::Serialize;

use crate::EXIT_VIOLATION;

#[derive(Serialize)]
struct ViolationRecord<'a> {
    i: usize,
    j: usize,
    tier: Tier,
    required: Tier,
    id: &'a str,
    message: &'a str,
    residual: f64,
}

/// Print the per-constraint table; returns true when every pair reaches `required`.
pub fn report(cfg: &SimulationConfig, validations: &[PairValidation], required: Tier) -> bool {
    let labels: Vec<&str> = cfg.species.iter().map(|s| s.label.as_str()).collect();
    let mut ok = true;
    let mut records = Vec::new();
    for v in validations {
        if v.pair.swapped {
            eprintln!(
                "warning: pair ({}, {}): species order normalized to ({}, {}) so that epsilon <= 1",
                labels[v.i], labels[v.j], labels[v.pair.first], labels[v.pair.second]
            );
        }
        let p = &v.pair.params;
        println!(
            "pair {} -> {}: tier {}  (c_ij {} c_ji {} epsilon {} delta {} alpha {} gamma {})",
            labels[v.pair.first],
            labels[v.pair.second],
            v.report.tier,
            p.c_ij,
            p.c_ji,
            p.epsilon(),
            p.delta,
            p.alpha,
            p.gamma
        );
        for c in &v.report.checks {
            println!(
                "  {:<28} {:<12} slack {:>+.6e} {}",
                c.id,
                c.tier.as_str(),
                c.slack,
                if c.satisfied { "ok" } else { "VIOLATED" }
            );
        }
        if !v.report.reaches(required) {
            ok = false;
            for viol in &v.report.violations {
                let tier_of = v.report.checks.iter().find(|c| c.id == viol.id).map(|c| c.tier);
                if tier_of.is_some_and(|t| t <= required) {
                    records.push(ViolationRecord {
                        i: v.pair.first,
                        j: v.pair.second,
                        tier: v.report.tier,
                        required,
                        id: viol.id,
                        message: &viol.message,
                        residual: viol.residual,
                    });
                }
            }
        }
    }
    println!("required tier: {required}");
    if !ok {
        eprintln!("{}", serde_json::to_string(&records).expect("violations serialize"));
    }
    ok
}

pub fn cmd_validate(path: &Path, tier: Option<Tier>) -> Result<u8> {
    let cfg = SimulationConfig::load(path).with_context(|| format!("loading {}", path.display()))?;
    let required = tier.unwrap_or(cfg.run.tier);
    let validations = cfg.validate_pairs()?;
    Ok(if report(&cfg, &validations, required) { 0 } else { EXIT_VIOLATION })
}
