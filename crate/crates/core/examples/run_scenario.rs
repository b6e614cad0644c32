//! Runs one catalog scenario and prints its table row and run statistics.
//!
//! `cargo run --release --example run_scenario -- [scenario] [pause] [seed]`

use dtnsim::metrics::RunMetrics;
use dtnsim::scenario::HORIZON;
use dtnsim::{build_scenario, ModelParams, SimConfig, Simulation};

fn main() -> dtnsim::Result<()> {
    let mut args = std::env::args()
        .skip(1)
        .map(|a| a.parse::<u64>().expect("numeric argument"));
    let n = args.next().unwrap_or(1) as u32;
    let pause = args.next().unwrap_or(20) as u32;
    let seed = args.next().unwrap_or(1);

    let spec = build_scenario(n, pause, seed)?;
    let mut sim = Simulation::new(
        SimConfig::from_scenario(&spec, ModelParams::default()),
        RunMetrics::new(HORIZON),
    )?;
    let stats = sim.run()?;
    let m = sim.into_sink();
    let c = m.counts;

    println!("scenario {n}, pause {pause}, seed {seed}");
    println!(
        "dtn {}  overall {}  received {}  send {}  drop {}",
        c.dtn, c.overall, c.received, c.send, c.drop
    );
    println!(
        "bundles created {}  delivered {}  stored {}  retries {}  duplicates {}",
        stats.created, stats.delivered, stats.stored_at_horizon, stats.retries, stats.duplicates
    );
    println!(
        "mean throughput {:.0} bit/s  mean overhead {:.1}%",
        m.windows.mean_throughput(),
        m.windows.mean_overhead()
    );
    let mut kinds: Vec<_> = stats.by_kind.iter().collect();
    kinds.sort_by_key(|(k, _)| k.name());
    for (k, v) in kinds {
        println!("  {:<16} {v}", k.name());
    }
    Ok(())
}
