//! A bundle's custody chain on a fixed topology: the destination sits out of
//! the gateway's reach and a parked relay bridges the gap.

use dtnsim::bundle::BundleKey;
use dtnsim::scenario::FtpConnection;
use dtnsim::topology::{Cluster, Position, Topology, TopologyParams, WaypointPlan};
use dtnsim::trace::TraceEvent;
use dtnsim::{ModelParams, NodeId, SimConfig, SimTime, Simulation, TraceRecord};

fn main() -> dtnsim::Result<()> {
    // B0 is at (200, 400). M0 is 400 m away and M1 sits halfway;
    // M2 and M3 belong to the other cluster and stay out of the picture.
    let spots = [
        (200.0, 800.0),
        (200.0, 600.0),
        (700.0, 700.0),
        (700.0, 100.0),
    ];
    let plans = spots
        .iter()
        .enumerate()
        .map(|(i, &(x, y))| WaypointPlan::stationary(NodeId::Mobile(i as u32), Position { x, y }))
        .collect();
    let topo = Topology::from_plans(TopologyParams::default(), plans)?;

    let cfg = SimConfig {
        mobiles: 4,
        connections: vec![FtpConnection {
            index: 0,
            ftp: 0,
            src: NodeId::Wired(0),
            dst: NodeId::Mobile(0),
            cluster: Cluster::One,
            start: SimTime::from_secs(1),
            stop: SimTime::from_secs(20),
            bytes: 5 * 1460,
        }],
        pause_time: 1000.0,
        seed: 1,
        horizon: SimTime::from_secs(30),
        model: ModelParams::default(),
        initial_positions: None,
        audit: true,
    };
    let mut sim = Simulation::with_topology(cfg, topo, Vec::<TraceRecord>::new())?;
    let stats = sim.run()?;

    for seq in 0..sim.segment_count(0) as u32 {
        let b = sim.bundle(BundleKey::new(0, seq)).expect("created");
        let chain: Vec<String> = b.custody_chain.iter().map(ToString::to_string).collect();
        println!("bundle {seq}: {:?} via {}", b.state, chain.join(" -> "));
    }
    let first_hops: Vec<_> = sim
        .sink()
        .iter()
        .filter(|r| r.pkt_id < 40 && r.event != TraceEvent::Drop)
        .take(12)
        .collect();
    println!("\nfirst trace lines:");
    for r in first_hops {
        println!("  {r}");
    }
    println!(
        "\ncreated {} delivered {} violations {}",
        stats.created, stats.delivered, stats.violation_count
    );
    Ok(())
}
