//! Sweeps every pause time for one scenario over a few seeds and prints
//! mean drops, delivered bundles and overhead per pause time.
//!
//! `cargo run --release --example pause_sweep -- [scenario] [seeds]`

use dtnsim::metrics::{format_truncated, lambda2, Delta, RunMetrics};
use dtnsim::scenario::{HORIZON, PAUSE_TIMES};
use dtnsim::{Catalog, ModelParams, SimConfig, Simulation};
use rayon::prelude::*;

fn main() -> dtnsim::Result<()> {
    let mut args = std::env::args()
        .skip(1)
        .map(|a| a.parse::<u64>().expect("numeric argument"));
    let n = args.next().unwrap_or(6) as u32;
    let seeds = args.next().unwrap_or(3);

    let catalog = Catalog::builtin();
    let cells: Vec<(u32, u64)> = PAUSE_TIMES
        .iter()
        .flat_map(|&p| (1..=seeds).map(move |s| (p, s)))
        .collect();
    let runs = cells
        .par_iter()
        .map(|&(pause, seed)| {
            let spec = catalog.build(n, pause, seed, Default::default())?;
            let mut sim = Simulation::new(
                SimConfig::from_scenario(&spec, ModelParams::default()),
                RunMetrics::new(HORIZON),
            )?;
            let stats = sim.run()?;
            Ok((pause, seed, stats.delivered, sim.into_sink()))
        })
        .collect::<dtnsim::Result<Vec<_>>>()?;

    println!("scenario {n}, seeds 1..={seeds}");
    println!("pause   drops  delivered  overhead%");
    for p in PAUSE_TIMES {
        let here: Vec<_> = runs.iter().filter(|r| r.0 == p).collect();
        let k = here.len() as f64;
        let drops = here.iter().map(|r| r.3.counts.drop as f64).sum::<f64>() / k;
        let delivered = here.iter().map(|r| r.2 as f64).sum::<f64>() / k;
        let overhead = here
            .iter()
            .map(|r| r.3.windows.mean_overhead())
            .sum::<f64>()
            / k;
        println!("{p:>5} {drops:>7.1} {delivered:>10.0} {overhead:>10.1}");
    }
    let d = Delta::from(catalog.delta_params(n).expect("catalog scenario")).truncated();
    for s in 1..=seeds {
        let total: u64 = runs
            .iter()
            .filter(|r| r.1 == s)
            .map(|r| r.3.counts.drop)
            .sum();
        println!(
            "seed {s}: drop total {total}, lambda2 {}",
            format_truncated(lambda2(total, d), 3)
        );
    }
    Ok(())
}
