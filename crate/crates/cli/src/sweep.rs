use std::fmt;
use std::io::Write;
use std::str::FromStr;

use anyhow::{bail, Context, Result};
use fpmix_core::config::{PairConfig, SimulationConfig};
use fpmix_core::{fmt_f64, run_relaxation, Tier};
use rayon::prelude::*;

use crate::output::{artifact_version, config_hash, now, OutputDir, RunManifest};
use crate::run::pair_rates;
use crate::SweepArgs;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Param {
    Delta,
    Alpha,
    Gamma,
    CIj,
    CJi,
}

impl Param {
    fn as_str(self) -> &'static str {
        match self {
            Param::Delta => "delta",
            Param::Alpha => "alpha",
            Param::Gamma => "gamma",
            Param::CIj => "c_ij",
            Param::CJi => "c_ji",
        }
    }

    fn apply(self, pair: &mut PairConfig, value: f64) {
        match self {
            Param::Delta => pair.delta = Some(value),
            Param::Alpha => pair.alpha = Some(value),
            Param::Gamma => pair.gamma = Some(value),
            Param::CIj => pair.c_ij = value,
            Param::CJi => pair.c_ji = value,
        }
    }
}

impl FromStr for Param {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Ok(match s {
            "delta" => Param::Delta,
            "alpha" => Param::Alpha,
            "gamma" => Param::Gamma,
            "c_ij" => Param::CIj,
            "c_ji" => Param::CJi,
            _ => return Err(format!("unknown parameter {s:?}; expected delta, alpha, gamma, c_ij or c_ji")),
        })
    }
}

impl fmt::Display for Param {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// `start:end:count`; both ends included, `count = 0` is an empty sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Range {
    pub start: f64,
    pub end: f64,
    pub count: usize,
}

impl Range {
    pub fn values(&self) -> Vec<f64> {
        match self.count {
            0 => Vec::new(),
            1 => vec![self.start],
            n => (0..n)
                .map(|k| {
                    if k == n - 1 {
                        self.end
                    } else {
                        self.start + (self.end - self.start) * k as f64 / (n - 1) as f64
                    }
                })
                .collect(),
        }
    }
}

impl FromStr for Range {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let parts: Vec<&str> = s.split(':').collect();
        let [a, b, k] = parts.as_slice() else {
            return Err(format!("range {s:?} must look like start:end:count"));
        };
        let num = |x: &str| x.trim().parse::<f64>().map_err(|e| format!("{x:?}: {e}"));
        let (start, end) = (num(a)?, num(b)?);
        if !start.is_finite() || !end.is_finite() {
            return Err(format!("range {s:?} has a non-finite end"));
        }
        let count = k.trim().parse::<usize>().map_err(|e| format!("{k:?}: {e}"))?;
        Ok(Range { start, end, count })
    }
}

struct Row {
    value: f64,
    status: String,
    violations: Vec<&'static str>,
    lambda_u: Option<(Option<f64>, f64)>,
    lambda_t: Option<(Option<f64>, f64)>,
    notes: Vec<String>,
    entropy: Option<(f64, f64)>,
    steps: usize,
}

impl Row {
    fn empty(value: f64, status: impl Into<String>) -> Self {
        Row {
            value,
            status: status.into(),
            violations: Vec::new(),
            lambda_u: None,
            lambda_t: None,
            notes: Vec::new(),
            entropy: None,
            steps: 0,
        }
    }
}

/// The swept pair with any preset replaced by its values at the initial densities.
fn explicit_base(cfg: &SimulationConfig, index: usize) -> Result<SimulationConfig> {
    if index >= cfg.pairs.len() {
        bail!("pair index {index} out of range ({} pairs configured)", cfg.pairs.len());
    }
    let mut out = cfg.clone();
    if cfg.pairs[index].preset.is_some() {
        let v = &cfg.validate_pairs()?[index];
        let p = v.pair.params;
        out.pairs[index] = PairConfig {
            i: v.pair.first,
            j: v.pair.second,
            c_ij: p.c_ij,
            c_ji: p.c_ji,
            preset: None,
            delta: Some(p.delta),
            alpha: Some(p.alpha),
            gamma: Some(p.gamma),
        };
    }
    Ok(out)
}

fn run_sample(base: &SimulationConfig, args: &SweepArgs, required: Tier, value: f64) -> Row {
    let mut cfg = base.clone();
    args.param.apply(&mut cfg.pairs[args.pair], value);
    if args.correct_moments {
        cfg.run.correct_moments = true;
    }
    let validations = match cfg.validate_pairs() {
        Ok(v) => v,
        Err(e) => return Row::empty(value, format!("invalid: {e}")),
    };
    let mut violations = Vec::new();
    for v in &validations {
        if !v.report.reaches(required) {
            for c in &v.report.checks {
                if !c.satisfied && c.tier <= required {
                    violations.push(c.id);
                }
            }
        }
    }
    if !violations.is_empty() {
        let mut row = Row::empty(value, "inadmissible");
        row.violations = violations;
        return row;
    }
    let result = cfg
        .system()
        .and_then(|system| Ok((cfg.initial_state()?, system)))
        .and_then(|(initial, system)| Ok((run_relaxation(&initial, &system, &cfg.run_options())?, system)));
    let (series, system) = match result {
        Ok(x) => x,
        Err(e) => return Row::empty(value, format!("failed: {e}")),
    };
    let rates = pair_rates(&series, &system, &validations[args.pair..=args.pair]);
    let entropy_min = series.samples.iter().map(|s| s.entropy).fold(f64::INFINITY, f64::min);
    let entropy_final = series.samples.last().map_or(f64::NAN, |s| s.entropy);
    let mut row = Row::empty(value, "ok");
    if let Some(r) = rates.first() {
        row.lambda_u = Some((r.velocity.fit.map(|f| f.rate), r.velocity.predicted));
        row.lambda_t = Some((r.temperature.fit.map(|f| f.rate), r.temperature.predicted));
        for (name, outcome) in [("lambda_u", &r.velocity), ("lambda_T", &r.temperature)] {
            if let Some(e) = &outcome.error {
                row.notes.push(format!("{name}: {e}"));
            }
        }
    }
    row.entropy = Some((entropy_min, entropy_final));
    row.steps = series.steps;
    row
}

const HEADER: &str = "index,param,value,status,violations,lambda_u_fit,lambda_u_predicted,lambda_T_fit,lambda_T_predicted,entropy_min,entropy_final,steps,notes";

fn write_rows(w: &mut dyn Write, param: Param, rows: &[Row]) -> std::io::Result<()> {
    writeln!(w, "{HEADER}")?;
    let fit = |x: Option<(Option<f64>, f64)>| match x {
        Some((a, b)) => [a.map(fmt_f64).unwrap_or_default(), fmt_f64(b)],
        None => [String::new(), String::new()],
    };
    for (k, r) in rows.iter().enumerate() {
        let [uf, up] = fit(r.lambda_u);
        let [tf, tp] = fit(r.lambda_t);
        let [hmin, hfin] = match r.entropy {
            Some((a, b)) => [fmt_f64(a), fmt_f64(b)],
            None => [String::new(), String::new()],
        };
        // free text must stay one CSV field
        let field = |t: &str| t.replace([',', '\n'], ";");
        writeln!(
            w,
            "{k},{param},{},{},{},{uf},{up},{tf},{tp},{hmin},{hfin},{},{}",
            fmt_f64(r.value),
            field(&r.status),
            r.violations.join(";"),
            r.steps,
            field(&r.notes.join("; "))
        )?;
    }
    Ok(())
}

pub fn cmd_sweep(args: &SweepArgs) -> Result<u8> {
    let started = now();
    let bytes = std::fs::read(&args.config).with_context(|| format!("reading {}", args.config.display()))?;
    let cfg = SimulationConfig::from_toml_str(std::str::from_utf8(&bytes).context("config is not UTF-8")?)?;
    if cfg.space.is_some() {
        bail!("sweep runs homogeneous relaxations; remove the [space] section");
    }
    let required = args.tier.unwrap_or(cfg.run.tier);
    let base = explicit_base(&cfg, args.pair)?;
    let values = args.range.values();
    let rows: Vec<Row> = values.par_iter().map(|&v| run_sample(&base, args, required, v)).collect();
    for r in &rows {
        log::info!("{} = {}: {}", args.param, r.value, r.status);
    }

    let hash = config_hash(&bytes);
    let mut dir = OutputDir::create(&args.out, &hash)?;
    dir.csv("sweep.csv", |w| write_rows(w, args.param, &rows))?;
    dir.finish(RunManifest {
        command: format!("sweep {} {}:{}:{}", args.param, args.range.start, args.range.end, args.range.count),
        config_path: args.config.display().to_string(),
        config_hash: hash,
        started,
        finished: now(),
        version: artifact_version(),
        outputs: Vec::new(),
        status: "ok".into(),
    })?;
    let ok = rows.iter().filter(|r| r.status == "ok").count();
    println!("{ok} of {} samples ran; summary in {}", rows.len(), args.out.join("sweep.csv").display());
    Ok(0)
}
