#![allow(dead_code)]

use dtnsim::scenario::FtpConnection;
use dtnsim::stack::SEGMENT_PAYLOAD_BYTES;
use dtnsim::topology::{Cluster, NodeId, Position};
use dtnsim::{ModelParams, SimConfig, SimTime};
use rand::Rng;

pub const MAX_SMALL_NODES: usize = 10;
pub const MAX_SMALL_BUNDLES: u64 = 200;

/// A random scenario with at most 10 nodes and 200 bundles, audited.
pub fn small_config(rng: &mut impl Rng) -> SimConfig {
    let mobiles = rng.gen_range(1..=MAX_SMALL_NODES - 4);
    let flows = rng.gen_range(1..=3u32);
    let per_flow = MAX_SMALL_BUNDLES / u64::from(flows);
    let payload = u64::from(SEGMENT_PAYLOAD_BYTES);
    let connections = (0..flows)
        .map(|index| {
            let dst = rng.gen_range(0..mobiles as u32);
            let segments = rng.gen_range(1..=per_flow);
            let bytes = segments * payload - rng.gen_range(0..payload);
            let start = rng.gen_range(0..10u64);
            let stop = start + rng.gen_range(5..=30u64);
            FtpConnection {
                index,
                ftp: index,
                src: if rng.gen_bool(0.5) {
                    NodeId::Wired(0)
                } else {
                    NodeId::Wired(1)
                },
                dst: NodeId::Mobile(dst),
                cluster: Cluster::of_mobile(dst, mobiles),
                start: SimTime::from_secs(start),
                stop: SimTime::from_secs(stop),
                bytes,
            }
        })
        .collect();
    SimConfig {
        mobiles,
        connections,
        pause_time: f64::from(rng.gen_range(0..=50u32)),
        seed: rng.gen(),
        horizon: SimTime::from_secs(40),
        model: ModelParams::default(),
        initial_positions: None,
        audit: true,
    }
}

/// One mobile parked next to its gateway (a lone mobile belongs to cluster 2), never moving.
pub fn static_single_flow(bytes: u64) -> SimConfig {
    SimConfig {
        mobiles: 1,
        connections: vec![FtpConnection {
            index: 0,
            ftp: 0,
            src: NodeId::Wired(0),
            dst: NodeId::Mobile(0),
            cluster: Cluster::Two,
            start: SimTime::from_secs(1),
            stop: SimTime::from_secs(50),
            bytes,
        }],
        pause_time: 1000.0,
        seed: 1,
        horizon: SimTime::from_secs(60),
        model: ModelParams::default(),
        initial_positions: Some(vec![Position { x: 700.0, y: 400.0 }]),
        audit: true,
    }
}
