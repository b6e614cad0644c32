//! The simulator: custody-transfer bundle forwarding over the mobility and
//! queueing models, driven by the event engine and reported as trace records.

use std::collections::{BTreeMap, HashMap};

use crate::bundle::{segment_message, Awaiting, Bundle, BundleKey, BundleState, CustodyStore};
use crate::engine::{Scheduled, Scheduler};
use crate::error::{Error, Result};
use crate::scenario::{FtpConnection, ScenarioSpec, HORIZON};
use crate::stack::{
    decides_wireless_hop, route_next_hop, Admission, DropTailQueue, Packet, PacketId, PacketType,
    CUSTODY_ACK_BYTES, DEFAULT_QUEUE_CAPACITY, DEFAULT_SERVICE_RATE_BPS, DELIVERY_REPORT_BYTES,
    DTN_PACKET_BYTES, ROUTING_CONTROL_BYTES,
};
use crate::time::SimTime;
use crate::topology::{NodeId, Position, Topology, TopologyParams};
use crate::trace::{Layer, TraceEvent, TraceRecord, TraceSink, TraceType};

/// Model constants shared by every run of a sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelParams {
    pub topology: TopologyParams,
    pub queue_capacity: usize,
    pub service_rate_bps: u64,
    pub propagation: SimTime,
    /// First custody retransmission timeout; doubles per attempt up to `retry_cap`.
    pub retry_initial: SimTime,
    pub retry_cap: SimTime,
    /// Bundles a source may have outstanding before a delivery report frees room.
    pub window: u32,
    /// Data packets a node keeps in its interface queue; the rest wait in storage.
    pub forward_queue_limit: usize,
    pub mobility_tick: SimTime,
    /// A destination sends its cumulative delivery report at this interval.
    pub report_interval: SimTime,
    pub flush_interval: SimTime,
}

impl Default for ModelParams {
    fn default() -> Self {
        ModelParams {
            topology: TopologyParams::default(),
            queue_capacity: DEFAULT_QUEUE_CAPACITY,
            service_rate_bps: DEFAULT_SERVICE_RATE_BPS,
            propagation: SimTime::from_micros(2),
            retry_initial: SimTime::from_secs(2),
            retry_cap: SimTime::from_secs(16),
            window: 100,
            forward_queue_limit: 50,
            mobility_tick: SimTime::from_millis(100),
            report_interval: SimTime::from_secs(1),
            flush_interval: SimTime::from_secs(10),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimConfig {
    pub mobiles: usize,
    pub connections: Vec<FtpConnection>,
    /// Seconds.
    pub pause_time: f64,
    pub seed: u64,
    pub horizon: SimTime,
    pub model: ModelParams,
    /// Replaces the random start positions, one per mobile.
    pub initial_positions: Option<Vec<Position>>,
    /// Check custody invariants after every event (slow; meant for tests).
    pub audit: bool,
}

impl SimConfig {
    pub fn from_scenario(spec: &ScenarioSpec, model: ModelParams) -> SimConfig {
        SimConfig {
            mobiles: spec.mobile_nodes,
            connections: spec.connections.clone(),
            pause_time: f64::from(spec.pause_time),
            seed: spec.seed,
            horizon: HORIZON,
            model,
            initial_positions: None,
            audit: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Event {
    MobilityUpdate,
    PacketArrival(Packet),
    QueueService {
        node: NodeId,
    },
    CustodyTimer {
        node: NodeId,
        bundle: BundleKey,
        attempt: u32,
    },
    TrafficStart {
        flow: u32,
    },
    TrafficStop {
        flow: u32,
    },
    TraceFlush,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum EventKind {
    MobilityUpdate,
    PacketArrival,
    QueueService,
    CustodyTimer,
    TrafficStart,
    TrafficStop,
    TraceFlush,
}

impl EventKind {
    pub const ALL: [EventKind; 7] = [
        EventKind::MobilityUpdate,
        EventKind::PacketArrival,
        EventKind::QueueService,
        EventKind::CustodyTimer,
        EventKind::TrafficStart,
        EventKind::TrafficStop,
        EventKind::TraceFlush,
    ];

    pub fn name(self) -> &'static str {
        match self {
            EventKind::MobilityUpdate => "mobility-update",
            EventKind::PacketArrival => "packet-arrival",
            EventKind::QueueService => "queue-service",
            EventKind::CustodyTimer => "custody-timer",
            EventKind::TrafficStart => "traffic-start",
            EventKind::TrafficStop => "traffic-stop",
            EventKind::TraceFlush => "trace-flush",
        }
    }
}

impl Event {
    pub fn kind(&self) -> EventKind {
        match self {
            Event::MobilityUpdate => EventKind::MobilityUpdate,
            Event::PacketArrival(_) => EventKind::PacketArrival,
            Event::QueueService { .. } => EventKind::QueueService,
            Event::CustodyTimer { .. } => EventKind::CustodyTimer,
            Event::TrafficStart { .. } => EventKind::TrafficStart,
            Event::TrafficStop { .. } => EventKind::TrafficStop,
            Event::TraceFlush => EventKind::TraceFlush,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ViolationKind {
    CustodySafety,
    ChainValidity,
    Conservation,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Violation {
    pub at: SimTime,
    pub kind: ViolationKind,
    pub detail: String,
}

const MAX_KEPT_VIOLATIONS: usize = 32;

#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunStats {
    pub dispatched: u64,
    pub final_clock: SimTime,
    pub by_kind: HashMap<EventKind, u64>,
    pub records: u64,
    pub created: u64,
    pub delivered: u64,
    /// Undelivered bundles held by their custodian at the horizon.
    pub stored_at_horizon: u64,
    pub data_sends: u64,
    pub mac_drops: u64,
    pub rtr_drops: u64,
    pub retries: u64,
    pub duplicates: u64,
    /// Packets still in interface queues (including in service) at the horizon.
    pub queued_at_horizon: u64,
    pub violation_count: u64,
    /// The first few violations found.
    pub violations: Vec<Violation>,
}

impl RunStats {
    pub fn count(&self, kind: EventKind) -> u64 {
        self.by_kind.get(&kind).copied().unwrap_or(0)
    }
}

struct NodeState {
    id: NodeId,
    queue: DropTailQueue,
    store: CustodyStore,
    /// Delivery reports waiting for a route: flow -> bundles covered.
    reports: BTreeMap<u32, u32>,
}

struct FlowState {
    conn: FtpConnection,
    bundles: Vec<Bundle>,
    created: u32,
    active: bool,
    /// Highest delivered count the source has heard of.
    reported: u32,
    delivered: u32,
    last_report: Option<(SimTime, u32)>,
}

pub struct Simulation<S: TraceSink> {
    cfg: SimConfig,
    topo: Topology,
    sched: Scheduler<Event>,
    sink: S,
    nodes: Vec<NodeState>,
    flows: Vec<FlowState>,
    route_cache: HashMap<(usize, NodeId), (u64, Option<NodeId>)>,
    tick: u64,
    tick_time: SimTime,
    next_pkt: u64,
    started: bool,
    stats: RunStats,
}

impl<S: TraceSink> Simulation<S> {
    /// Generates the mobility from the configuration's seed and pause time.
    pub fn new(cfg: SimConfig, sink: S) -> Result<Self> {
        let topo = Topology::generate(
            cfg.model.topology.clone(),
            cfg.mobiles,
            cfg.seed,
            cfg.pause_time,
            cfg.horizon,
            cfg.initial_positions.as_deref(),
        )?;
        Self::with_topology(cfg, topo, sink)
    }

    pub fn with_topology(cfg: SimConfig, topo: Topology, sink: S) -> Result<Self> {
        if topo.mobiles() != cfg.mobiles {
            return Err(Error::config(format!(
                "topology has {} mobiles, configuration {}",
                topo.mobiles(),
                cfg.mobiles
            )));
        }
        let m = &cfg.model;
        if m.mobility_tick == SimTime::ZERO || m.flush_interval == SimTime::ZERO {
            return Err(Error::config(
                "mobility tick and flush interval must be positive",
            ));
        }
        if m.forward_queue_limit == 0 || m.forward_queue_limit > m.queue_capacity || m.window == 0 {
            return Err(Error::config(
                "forward queue limit must be within 1..=queue capacity and the window positive",
            ));
        }
        let mut flows = Vec::with_capacity(cfg.connections.len());
        for (i, c) in cfg.connections.iter().enumerate() {
            if c.index as usize != i {
                return Err(Error::config(format!(
                    "connection {i} carries index {}",
                    c.index
                )));
            }
            if !topo.contains(c.src) || !topo.contains(c.dst) || c.src == c.dst {
                return Err(Error::config(format!(
                    "FTP({}): bad endpoints {} -> {}",
                    c.ftp, c.src, c.dst
                )));
            }
            if c.start >= c.stop {
                return Err(Error::config(format!(
                    "FTP({}): start must precede stop",
                    c.ftp
                )));
            }
            flows.push(FlowState {
                conn: c.clone(),
                bundles: segment_message(c.index, c.bytes)?,
                created: 0,
                active: false,
                reported: 0,
                delivered: 0,
                last_report: None,
            });
        }
        let nodes = (0..topo.node_count())
            .map(|slot| NodeState {
                id: NodeId::from_slot(slot),
                queue: DropTailQueue::new(m.queue_capacity, m.service_rate_bps),
                store: CustodyStore::default(),
                reports: BTreeMap::new(),
            })
            .collect();
        Ok(Simulation {
            cfg,
            topo,
            sched: Scheduler::new(),
            sink,
            nodes,
            flows,
            route_cache: HashMap::new(),
            tick: 0,
            tick_time: SimTime::ZERO,
            next_pkt: 0,
            started: false,
            stats: RunStats::default(),
        })
    }

    pub fn topology(&self) -> &Topology {
        &self.topo
    }

    pub fn config(&self) -> &SimConfig {
        &self.cfg
    }

    pub fn stats(&self) -> &RunStats {
        &self.stats
    }

    pub fn sink(&self) -> &S {
        &self.sink
    }

    pub fn into_sink(self) -> S {
        self.sink
    }

    pub fn bundle(&self, key: BundleKey) -> Option<&Bundle> {
        self.flows
            .get(key.flow as usize)?
            .bundles
            .get(key.seq as usize)
    }

    /// Sequence numbers of the bundles of `flow` that reached the destination.
    pub fn delivered_segments(&self, flow: u32) -> Vec<u32> {
        self.flows
            .get(flow as usize)
            .map(|f| {
                f.bundles
                    .iter()
                    .filter(|b| b.state == BundleState::Delivered)
                    .map(|b| b.key.seq)
                    .collect()
            })
            .unwrap_or_default()
    }

    pub fn segment_count(&self, flow: u32) -> usize {
        self.flows.get(flow as usize).map_or(0, |f| f.bundles.len())
    }

    /// Runs to the horizon. A simulation can only be run once.
    pub fn run(&mut self) -> Result<RunStats> {
        if self.started {
            return Err(Error::config("simulation already ran"));
        }
        self.started = true;
        let horizon = self.cfg.horizon;
        self.sched.schedule(SimTime::ZERO, Event::MobilityUpdate)?;
        self.sched.schedule(
            SimTime::ZERO + self.cfg.model.flush_interval,
            Event::TraceFlush,
        )?;
        for f in &self.flows {
            let flow = f.conn.index;
            self.sched
                .schedule(f.conn.start, Event::TrafficStart { flow })?;
            self.sched
                .schedule(f.conn.stop, Event::TrafficStop { flow })?;
        }
        while let Some(ev) = self.sched.pop_next(horizon) {
            self.dispatch(ev)?;
            if self.cfg.audit {
                self.audit_custody();
            }
        }
        self.sink.flush().map_err(Error::TraceOutput)?;
        self.finish();
        Ok(self.stats.clone())
    }

    fn now(&self) -> SimTime {
        self.sched.now()
    }

    fn dispatch(&mut self, ev: Scheduled<Event>) -> Result<()> {
        *self.stats.by_kind.entry(ev.payload.kind()).or_default() += 1;
        match ev.payload {
            Event::MobilityUpdate => self.on_tick(),
            Event::PacketArrival(p) => self.on_arrival(p),
            Event::QueueService { node } => self.on_service(node),
            Event::CustodyTimer {
                node,
                bundle,
                attempt,
            } => self.on_timer(node, bundle, attempt),
            Event::TrafficStart { flow } => {
                self.flows[flow as usize].active = true;
                self.create_bundles(flow);
                self.try_forward(self.flows[flow as usize].conn.src.slot())
            }
            Event::TrafficStop { flow } => {
                self.flows[flow as usize].active = false;
                Ok(())
            }
            Event::TraceFlush => {
                self.sink.flush().map_err(Error::TraceOutput)?;
                let next = self.now() + self.cfg.model.flush_interval;
                if next <= self.cfg.horizon {
                    self.sched.schedule(next, Event::TraceFlush)?;
                }
                Ok(())
            }
        }
    }

    fn on_tick(&mut self) -> Result<()> {
        let now = self.now();
        self.tick += 1;
        self.tick_time = now;
        let next = now + self.cfg.model.mobility_tick;
        if next <= self.cfg.horizon {
            self.sched.schedule(next, Event::MobilityUpdate)?;
        }
        let interval = self.cfg.model.report_interval;
        let refresh = self.cfg.model.flush_interval;
        for f in &mut self.flows {
            // unchanged reports are only repeated occasionally, in case one was lost
            let due = f.delivered > 0
                && match f.last_report {
                    None => true,
                    Some((at, n)) if n < f.delivered => now >= at + interval,
                    Some((at, _)) => now >= at + refresh,
                };
            if due {
                let slot = f.conn.dst.slot();
                let pending = self.nodes[slot].reports.entry(f.conn.index).or_default();
                *pending = (*pending).max(f.delivered);
                f.last_report = Some((now, f.delivered));
            }
        }
        for slot in 0..self.nodes.len() {
            let n = &self.nodes[slot];
            if n.store.held_len() > 0 || !n.reports.is_empty() {
                self.try_forward(slot)?;
            }
        }
        Ok(())
    }

    fn create_bundles(&mut self, flow: u32) {
        let now = self.now();
        let window = self.cfg.model.window;
        let f = &mut self.flows[flow as usize];
        let src = f.conn.src.slot();
        while f.active && (f.created as usize) < f.bundles.len() && f.created - f.reported < window
        {
            let b = &mut f.bundles[f.created as usize];
            b.state = BundleState::InCustody;
            b.created_at = Some(now);
            b.custody_chain = vec![f.conn.src];
            self.nodes[src].store.hold(b.key, 0);
            f.created += 1;
            self.stats.created += 1;
        }
    }

    fn packet(
        &mut self,
        flow: u32,
        ptype: PacketType,
        src: NodeId,
        dst: NodeId,
        bundle: Option<BundleKey>,
        covers: u32,
    ) -> Packet {
        let id = PacketId(self.next_pkt);
        self.next_pkt += 1;
        let size_bytes = match ptype {
            PacketType::DtnData => DTN_PACKET_BYTES,
            PacketType::CustodyAck => CUSTODY_ACK_BYTES,
            PacketType::DeliveryReport => DELIVERY_REPORT_BYTES,
            PacketType::RoutingControl => ROUTING_CONTROL_BYTES,
        };
        Packet {
            id,
            flow,
            ptype,
            size_bytes,
            src,
            dst,
            created_at: self.now(),
            bundle,
            covers,
        }
    }

    fn emit(&mut self, event: TraceEvent, node: NodeId, layer: Layer, pkt: &Packet) -> Result<()> {
        let rec = TraceRecord {
            event,
            time: self.now(),
            node,
            layer,
            pkt_id: pkt.id.0,
            ptype: match pkt.ptype {
                PacketType::DtnData => TraceType::Dtn,
                PacketType::CustodyAck | PacketType::DeliveryReport => TraceType::Ack,
                PacketType::RoutingControl => TraceType::Rtc,
            },
            size_bytes: pkt.size_bytes,
            flow: pkt.flow,
        };
        self.stats.records += 1;
        self.sink.record(&rec).map_err(Error::TraceOutput)
    }

    /// Hands a packet to the node's interface queue. Returns false on a
    /// drop-tail overflow.
    fn enqueue(&mut self, slot: usize, pkt: Packet, layer: Layer, lossless: bool) -> Result<bool> {
        let node = self.nodes[slot].id;
        let now = self.now();
        self.emit(TraceEvent::Send, node, layer, &pkt)?;
        let q = &mut self.nodes[slot].queue;
        let admission = if lossless {
            q.force(pkt, now)
        } else {
            q.offer(pkt, now)
        };
        match admission {
            Admission::Accepted { service_done } => {
                if let Some(t) = service_done {
                    self.sched.schedule(t, Event::QueueService { node })?;
                }
                Ok(true)
            }
            Admission::Dropped(p) => {
                self.stats.mac_drops += 1;
                self.emit(TraceEvent::Drop, node, Layer::Mac, &p)?;
                Ok(false)
            }
        }
    }

    /// Next hop from `slot` toward `target` as seen at the last mobility
    /// update; contacts are sampled once per tick. Each wireless route
    /// computation costs one routing-control broadcast.
    fn route(&mut self, slot: usize, target: NodeId, flow: u32) -> Result<Option<NodeId>> {
        if let Some(&(tick, hop)) = self.route_cache.get(&(slot, target)) {
            if tick == self.tick {
                return Ok(hop);
            }
        }
        let node = self.nodes[slot].id;
        let hop = route_next_hop(&self.topo, node, target, self.tick_time);
        self.route_cache.insert((slot, target), (self.tick, hop));
        if decides_wireless_hop(&self.topo, node, target) {
            let rtc = self.packet(flow, PacketType::RoutingControl, node, target, None, 0);
            self.enqueue(slot, rtc, Layer::Rtr, false)?;
        }
        Ok(hop)
    }

    fn try_forward(&mut self, slot: usize) -> Result<()> {
        let node = self.nodes[slot].id;
        if !self.nodes[slot].reports.is_empty() {
            let pending: Vec<u32> = self.nodes[slot].reports.keys().copied().collect();
            for flow in pending {
                let conn = &self.flows[flow as usize].conn;
                let (target, origin) = (conn.src, conn.dst);
                let Some(next) = self.route(slot, target, flow)? else {
                    continue;
                };
                let covers = self.nodes[slot].reports.remove(&flow).expect("listed");
                let layer = if node == origin {
                    Layer::Agt
                } else {
                    Layer::Rtr
                };
                let pkt = self.packet(flow, PacketType::DeliveryReport, node, next, None, covers);
                self.enqueue(slot, pkt, layer, false)?;
            }
        }
        let limit = self.cfg.model.forward_queue_limit;
        for flow in self.nodes[slot].store.flows_with_held() {
            if self.nodes[slot].queue.data_len() >= limit {
                break;
            }
            let dst = self.flows[flow as usize].conn.dst;
            let Some(next) = self.route(slot, dst, flow)? else {
                continue;
            };
            while self.nodes[slot].queue.data_len() < limit {
                let Some((key, attempt)) = self.nodes[slot].store.next_held(flow) else {
                    break;
                };
                if !self.transmit(slot, key, attempt, next)? {
                    return Ok(());
                }
            }
        }
        Ok(())
    }

    fn backoff(&self, attempt: u32) -> SimTime {
        let m = &self.cfg.model;
        let factor = 1u64 << attempt.min(20);
        SimTime::from_micros(
            m.retry_initial
                .as_micros()
                .saturating_mul(factor)
                .min(m.retry_cap.as_micros()),
        )
    }

    fn transmit(
        &mut self,
        slot: usize,
        key: BundleKey,
        attempt: u32,
        next: NodeId,
    ) -> Result<bool> {
        let node = self.nodes[slot].id;
        let pkt = self.packet(key.flow, PacketType::DtnData, node, next, Some(key), 0);
        self.stats.data_sends += 1;
        if !self.enqueue(slot, pkt, Layer::Agt, false)? {
            return Ok(false);
        }
        let at = self.now() + self.backoff(attempt);
        let timer = self.sched.schedule(
            at,
            Event::CustodyTimer {
                node,
                bundle: key,
                attempt,
            },
        )?;
        self.nodes[slot].store.mark_forwarded(
            key,
            Awaiting {
                to: next,
                attempt,
                timer,
            },
        );
        self.flows[key.flow as usize].bundles[key.seq as usize].state =
            BundleState::ForwardedAwaitingAck;
        Ok(true)
    }

    fn on_service(&mut self, node: NodeId) -> Result<()> {
        let slot = node.slot();
        let now = self.now();
        let Some((pkt, next)) = self.nodes[slot].queue.complete(now) else {
            return Ok(());
        };
        if let Some(t) = next {
            self.sched.schedule(t, Event::QueueService { node })?;
        }
        let was_data = pkt.ptype == PacketType::DtnData;
        match pkt.ptype {
            // broadcast; nobody answers
            PacketType::RoutingControl => {}
            // sent on the contact that just delivered the bundle
            PacketType::CustodyAck => {
                self.sched
                    .schedule(now + self.cfg.model.propagation, Event::PacketArrival(pkt))?;
            }
            PacketType::DtnData | PacketType::DeliveryReport => {
                if self.topo.in_range(node, pkt.dst, now) {
                    self.sched
                        .schedule(now + self.cfg.model.propagation, Event::PacketArrival(pkt))?;
                } else {
                    self.stats.rtr_drops += 1;
                    self.emit(TraceEvent::Drop, node, Layer::Rtr, &pkt)?;
                    // link-layer failure: stop using this hop until the next sample
                    let conn = &self.flows[pkt.flow as usize].conn;
                    let target = if was_data { conn.dst } else { conn.src };
                    self.route_cache.insert((slot, target), (self.tick, None));
                }
            }
        }
        if was_data {
            self.try_forward(slot)?;
        }
        Ok(())
    }

    fn on_arrival(&mut self, pkt: Packet) -> Result<()> {
        match pkt.ptype {
            PacketType::DtnData => self.on_bundle(pkt),
            PacketType::CustodyAck => {
                let node = pkt.dst;
                self.emit(TraceEvent::Receive, node, Layer::Agt, &pkt)?;
                let key = pkt.bundle.expect("acks name a bundle");
                let store = &mut self.nodes[node.slot()].store;
                if store.awaiting(key).is_some_and(|a| a.to == pkt.src) {
                    let a = store.release(key).expect("awaiting");
                    self.sched.cancel_pending(a.timer);
                }
                Ok(())
            }
            PacketType::DeliveryReport => {
                let node = pkt.dst;
                let flow = pkt.flow as usize;
                if node == self.flows[flow].conn.src {
                    self.emit(TraceEvent::Receive, node, Layer::Agt, &pkt)?;
                    let f = &mut self.flows[flow];
                    f.reported = f.reported.max(pkt.covers);
                    self.create_bundles(pkt.flow);
                } else {
                    self.emit(TraceEvent::Receive, node, Layer::Rtr, &pkt)?;
                    let pending = self.nodes[node.slot()].reports.entry(pkt.flow).or_default();
                    *pending = (*pending).max(pkt.covers);
                }
                self.try_forward(node.slot())
            }
            PacketType::RoutingControl => Ok(()),
        }
    }

    fn on_bundle(&mut self, pkt: Packet) -> Result<()> {
        let node = pkt.dst;
        let slot = node.slot();
        let now = self.now();
        let key = pkt.bundle.expect("data packets carry a bundle");
        let is_dst = node == self.flows[key.flow as usize].conn.dst;
        let layer = if is_dst { Layer::Agt } else { Layer::Rtr };
        self.emit(TraceEvent::Receive, node, layer, &pkt)?;
        let prev = pkt.src;
        let b = &mut self.flows[key.flow as usize].bundles[key.seq as usize];
        if b.custodian() == Some(prev) && b.state != BundleState::Delivered {
            let handoff = now.saturating_sub(self.cfg.model.propagation);
            if self.cfg.audit && !self.topo.in_range(prev, node, handoff) {
                let detail = format!(
                    "bundle {}.{} handed {prev} -> {node} out of contact",
                    key.flow, key.seq
                );
                record_violation(&mut self.stats, now, ViolationKind::ChainValidity, detail);
            }
            b.custody_chain.push(node);
            if is_dst {
                b.state = BundleState::Delivered;
                b.delivered_at = Some(now);
                self.flows[key.flow as usize].delivered += 1;
                self.stats.delivered += 1;
            } else {
                b.state = BundleState::InCustody;
                let store = &mut self.nodes[slot].store;
                // the bundle came back before our own ack did
                if let Some(a) = store.release(key) {
                    self.sched.cancel_pending(a.timer);
                }
                store.hold(key, 0);
            }
        } else {
            self.stats.duplicates += 1;
        }
        let ack = self.packet(key.flow, PacketType::CustodyAck, node, prev, Some(key), 0);
        self.enqueue(slot, ack, Layer::Agt, true)?;
        if !is_dst {
            self.try_forward(slot)?;
        }
        Ok(())
    }

    fn on_timer(&mut self, node: NodeId, key: BundleKey, attempt: u32) -> Result<()> {
        let slot = node.slot();
        let Some(a) = self.nodes[slot].store.awaiting(key).copied() else {
            return Ok(());
        };
        if a.attempt != attempt {
            return Ok(());
        }
        let b = &mut self.flows[key.flow as usize].bundles[key.seq as usize];
        if b.custodian() != Some(node) {
            // custody moved on; the ack is still on its way
            self.nodes[slot].store.release(key);
            return Ok(());
        }
        b.state = BundleState::InCustody;
        self.nodes[slot].store.requeue(key);
        self.stats.retries += 1;
        self.try_forward(slot)
    }

    fn finish(&mut self) {
        self.stats.dispatched = self.sched.dispatched();
        self.stats.final_clock = self.now();
        self.stats.queued_at_horizon = self.nodes.iter().map(|n| n.queue.occupancy() as u64).sum();
        let mut stored = 0;
        for f in &self.flows {
            for b in &f.bundles[..f.created as usize] {
                if b.state == BundleState::Delivered {
                    continue;
                }
                let c = b.custodian().expect("created bundles have a custodian");
                if self.nodes[c.slot()].store.contains(b.key) {
                    stored += 1;
                }
            }
        }
        self.stats.stored_at_horizon = stored;
        if self.stats.created != self.stats.delivered + stored {
            let detail = format!(
                "created {} != delivered {} + stored {}",
                self.stats.created, self.stats.delivered, stored
            );
            let now = self.now();
            record_violation(&mut self.stats, now, ViolationKind::Conservation, detail);
        }
    }

    /// Every undelivered bundle has exactly one responsible node: the last
    /// entry of its custody chain, which must store it. Any other node may
    /// only keep an unacknowledged copy, and only if it is earlier in the chain.
    fn audit_custody(&mut self) {
        let now = self.now();
        let mut found = Vec::new();
        for f in &self.flows {
            for b in &f.bundles[..f.created as usize] {
                if b.state == BundleState::Delivered {
                    continue;
                }
                match b.custodian() {
                    Some(c) if self.nodes[c.slot()].store.contains(b.key) => {}
                    c => found.push(format!(
                        "bundle {}.{}: custodian {c:?} does not store it",
                        b.key.flow, b.key.seq
                    )),
                }
            }
        }
        for n in &self.nodes {
            for key in n.store.held_keys() {
                let b = &self.flows[key.flow as usize].bundles[key.seq as usize];
                if b.state == BundleState::Delivered || b.custodian() != Some(n.id) {
                    found.push(format!(
                        "{} holds bundle {}.{} without custody",
                        n.id, key.flow, key.seq
                    ));
                }
            }
            for (key, _) in n.store.awaiting_entries() {
                let b = &self.flows[key.flow as usize].bundles[key.seq as usize];
                if b.custodian() != Some(n.id) && !b.custody_chain.contains(&n.id) {
                    found.push(format!(
                        "{} keeps bundle {}.{} it never had",
                        n.id, key.flow, key.seq
                    ));
                }
            }
        }
        for detail in found {
            record_violation(&mut self.stats, now, ViolationKind::CustodySafety, detail);
        }
    }
}

fn record_violation(stats: &mut RunStats, at: SimTime, kind: ViolationKind, detail: String) {
    stats.violation_count += 1;
    if stats.violations.len() < MAX_KEPT_VIOLATIONS {
        stats.violations.push(Violation { at, kind, detail });
    }
}
