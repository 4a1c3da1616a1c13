use anyhow::{bail, Result};
use clap::Args;
use fpmix_core::params::{preset, Preset};

#[derive(Args)]
pub struct PresetArgs {
    /// `m1,m2`
    #[arg(long, value_delimiter = ',', default_values_t = [1.0, 1.0])]
    masses: Vec<f64>,
    /// `n1,n2`; only the hu preset depends on them.
    #[arg(long, value_delimiter = ',', default_values_t = [1.0, 1.0])]
    densities: Vec<f64>,
    /// `c12,c21`
    #[arg(long, value_delimiter = ',', default_values_t = [1.0, 1.0])]
    friction: Vec<f64>,
    #[arg(long, default_value_t = 1)]
    dim: usize,
}

pub fn cmd_presets(args: &PresetArgs) -> Result<u8> {
    let [m1, m2] = args.masses[..] else { bail!("--masses takes two values") };
    let [n1, n2] = args.densities[..] else { bail!("--densities takes two values") };
    let [c12, c21] = args.friction[..] else { bail!("--friction takes two values") };
    println!(
        "{:<11} {:>5} {:>24} {:>24} {:>24} {:>24} {:>24} {:>24}  tier",
        "preset", "order", "c_ij", "c_ji", "epsilon", "delta", "alpha", "gamma"
    );
    for name in Preset::ALL {
        match preset(name, (c12, c21), (m1, m2), (n1, n2), args.dim) {
            Ok(pp) => {
                let p = pp.params;
                let (mi, mj) = if pp.swapped { (m2, m1) } else { (m1, m2) };
                let tier = p.validate(mi, mj, args.dim).tier;
                println!(
                    "{:<11} {:>5} {:>24.16e} {:>24.16e} {:>24.16e} {:>24.16e} {:>24.16e} {:>24.16e}  {tier}",
                    name.as_str(),
                    if pp.swapped { "2,1" } else { "1,2" },
                    p.c_ij,
                    p.c_ji,
                    p.epsilon(),
                    p.delta,
                    p.alpha,
                    p.gamma
                );
            }
            Err(e) => println!("{:<11} unavailable: {e}", name.as_str()),
        }
    }
    Ok(0)
}
