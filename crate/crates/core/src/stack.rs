//! Layers below the bundle agent: packets, the drop-tail interface queue and
//! gateway routing toward mobile destinations.

use std::collections::VecDeque;

use crate::bundle::BundleKey;
use crate::time::{SimTime, MICROS_PER_SEC};
use crate::topology::{Cluster, NodeId, Topology};

pub const SEGMENT_PAYLOAD_BYTES: u32 = 1460;
pub const BUNDLE_HEADER_BYTES: u32 = 80;
/// Payload plus bundle header.
pub const DTN_PACKET_BYTES: u32 = SEGMENT_PAYLOAD_BYTES + BUNDLE_HEADER_BYTES;
pub const CUSTODY_ACK_BYTES: u32 = 40;
pub const DELIVERY_REPORT_BYTES: u32 = 64;
pub const ROUTING_CONTROL_BYTES: u32 = 48;

pub const DEFAULT_QUEUE_CAPACITY: usize = 100;
pub const DEFAULT_SERVICE_RATE_BPS: u64 = 11_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PacketId(pub u64);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PacketType {
    DtnData,
    /// Hop-by-hop custody acknowledgment to the previous custodian.
    CustodyAck,
    /// End-to-end delivery report from destination to source.
    DeliveryReport,
    RoutingControl,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Packet {
    pub id: PacketId,
    pub flow: u32,
    pub ptype: PacketType,
    pub size_bytes: u32,
    /// Transmitting node of this hop.
    pub src: NodeId,
    /// Receiving node of this hop; for routing control, the route target.
    pub dst: NodeId,
    pub created_at: SimTime,
    pub bundle: Option<BundleKey>,
    /// Bundles covered by a delivery report.
    pub covers: u32,
}

/// Serialization time of `size_bytes` at `rate_bps`, rounded to the nearest µs.
pub fn service_time(size_bytes: u32, rate_bps: u64) -> SimTime {
    let bits = u64::from(size_bytes) * 8;
    SimTime::from_micros((bits * MICROS_PER_SEC + rate_bps / 2) / rate_bps)
}

#[derive(Debug, PartialEq)]
pub enum Admission {
    /// Enqueued. When the queue was idle, carries the time the new packet
    /// finishes service so the caller can schedule it.
    Accepted {
        service_done: Option<SimTime>,
    },
    Dropped(Packet),
}

/// Drop-tail interface queue served at a fixed bit rate, with a priority
/// lane: control packets (acks, reports, routing control) are served before
/// queued data. The packet in service counts toward occupancy.
#[derive(Debug, Clone)]
pub struct DropTailQueue {
    capacity: usize,
    rate_bps: u64,
    in_service: Option<Packet>,
    control: VecDeque<Packet>,
    data: VecDeque<Packet>,
}

impl DropTailQueue {
    pub fn new(capacity: usize, rate_bps: u64) -> Self {
        DropTailQueue {
            capacity,
            rate_bps,
            in_service: None,
            control: VecDeque::new(),
            data: VecDeque::new(),
        }
    }

    pub fn occupancy(&self) -> usize {
        usize::from(self.in_service.is_some()) + self.control.len() + self.data.len()
    }

    /// Data packets queued or in service.
    pub fn data_len(&self) -> usize {
        let serving = self
            .in_service
            .as_ref()
            .is_some_and(|p| p.ptype == PacketType::DtnData);
        self.data.len() + usize::from(serving)
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn is_full(&self) -> bool {
        self.occupancy() >= self.capacity
    }

    pub fn is_empty(&self) -> bool {
        self.in_service.is_none()
    }

    /// In service order.
    pub fn iter(&self) -> impl Iterator<Item = &Packet> {
        self.in_service
            .iter()
            .chain(&self.control)
            .chain(&self.data)
    }

    pub fn offer(&mut self, packet: Packet, now: SimTime) -> Admission {
        if self.is_full() {
            return Admission::Dropped(packet);
        }
        self.admit(packet, now)
    }

    /// Admits regardless of capacity.
    pub fn force(&mut self, packet: Packet, now: SimTime) -> Admission {
        self.admit(packet, now)
    }

    fn admit(&mut self, packet: Packet, now: SimTime) -> Admission {
        if self.in_service.is_none() {
            let done = now + service_time(packet.size_bytes, self.rate_bps);
            self.in_service = Some(packet);
            return Admission::Accepted {
                service_done: Some(done),
            };
        }
        match packet.ptype {
            PacketType::DtnData => self.data.push_back(packet),
            _ => self.control.push_back(packet),
        }
        Admission::Accepted { service_done: None }
    }

    /// Finishes the packet in service. Returns it with the completion time of
    /// the next packet, if any.
    pub fn complete(&mut self, now: SimTime) -> Option<(Packet, Option<SimTime>)> {
        let done = self.in_service.take()?;
        self.in_service = self.control.pop_front().or_else(|| self.data.pop_front());
        let next = self
            .in_service
            .as_ref()
            .map(|p| now + service_time(p.size_bytes, self.rate_bps));
        Some((done, next))
    }
}

/// Gateway a destination is reached through, if it is a mobile.
pub fn gateway_for(topo: &Topology, dst: NodeId) -> Option<NodeId> {
    match dst {
        NodeId::Mobile(_) => topo.cluster_of(dst).map(Cluster::gateway),
        _ => None,
    }
}

/// True when choosing the next hop at `current` means picking a radio
/// neighbour, i.e. the decision needs route discovery on the wireless side.
pub fn decides_wireless_hop(topo: &Topology, current: NodeId, dst: NodeId) -> bool {
    match current {
        NodeId::Mobile(_) => true,
        NodeId::BaseStation(_) => gateway_for(topo, dst) == Some(current),
        NodeId::Wired(_) => false,
    }
}

/// Next hop from `current` toward `dst` at time `t`, or `None` when the bundle
/// must wait in storage.
///
/// Backbone nodes forward over wired links to the destination's gateway. The
/// gateway and mobiles deliver directly when in range, otherwise hand off to
/// the in-range mobile of the destination's cluster that is strictly closer
/// to the destination, choosing the closest (lowest index on ties).
pub fn route_next_hop(topo: &Topology, current: NodeId, dst: NodeId, t: SimTime) -> Option<NodeId> {
    if current == dst {
        return None;
    }
    let gateway = match gateway_for(topo, dst) {
        Some(g) => g,
        // backbone destination
        None => {
            if current.on_backbone() {
                return Some(dst);
            }
            let gw = topo.cluster_of(current).map(Cluster::gateway)?;
            return greedy_toward(topo, current, gw, t);
        }
    };
    if current.on_backbone() && current != gateway {
        return Some(gateway);
    }
    greedy_toward(topo, current, dst, t)
}

fn greedy_toward(topo: &Topology, current: NodeId, target: NodeId, t: SimTime) -> Option<NodeId> {
    if topo.in_range(current, target, t) {
        return Some(target);
    }
    let cluster = topo
        .cluster_of(target)
        .or_else(|| topo.cluster_of(current))?;
    let here = topo.distance_at(current, target, t);
    let mut best: Option<(f64, NodeId)> = None;
    for i in 0..topo.mobiles() as u32 {
        let cand = NodeId::Mobile(i);
        if cand == current || topo.cluster_of(cand) != Some(cluster) {
            continue;
        }
        if !topo.in_range(current, cand, t) {
            continue;
        }
        let d = topo.distance_at(cand, target, t);
        if d < here && best.is_none_or(|(bd, _)| d < bd) {
            best = Some((d, cand));
        }
    }
    best.map(|(_, n)| n)
}
