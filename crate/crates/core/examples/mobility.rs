//! Generates random-waypoint plans for one scenario and samples positions
//! and gateway contacts once a second.
//!
//! `cargo run --example mobility -- [pause] [seed]`

use dtnsim::topology::{Cluster, Topology, TopologyParams};
use dtnsim::{NodeId, SimTime};

fn main() -> dtnsim::Result<()> {
    let mut args = std::env::args().skip(1);
    let pause: f64 = args.next().and_then(|a| a.parse().ok()).unwrap_or(20.0);
    let seed: u64 = args.next().and_then(|a| a.parse().ok()).unwrap_or(1);

    let topo = Topology::generate(
        TopologyParams::default(),
        10,
        seed,
        pause,
        SimTime::from_secs(100),
        None,
    )?;
    let node = NodeId::Mobile(0);
    let gw = Cluster::One.gateway();
    println!("time      x       y   dist to {gw}  in range");
    for s in (0..=100).step_by(5) {
        let t = SimTime::from_secs(s);
        let p = topo.position_at(node, t);
        println!(
            "{t:>10} {:7.1} {:7.1} {:10.1}  {}",
            p.x,
            p.y,
            topo.distance_at(node, gw, t),
            topo.in_range(node, gw, t)
        );
    }
    println!("\nwaypoints for {node}:");
    for line in topo.plan(node).expect("mobile exists").export_lines() {
        println!("  {line}");
    }
    Ok(())
}
