//! Node inventory, cluster membership, random-waypoint mobility and the disk
//! connectivity model.

use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::engine::RngStream;
use crate::error::{Error, Result};
use crate::time::SimTime;

pub const WIRED_NODES: u32 = 2;
pub const BASE_STATIONS: u32 = 2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum NodeId {
    Wired(u32),
    BaseStation(u32),
    Mobile(u32),
}

impl NodeId {
    /// Dense index: wired nodes first, then base stations, then mobiles.
    pub fn slot(self) -> usize {
        match self {
            NodeId::Wired(i) => i as usize,
            NodeId::BaseStation(i) => (WIRED_NODES + i) as usize,
            NodeId::Mobile(i) => (WIRED_NODES + BASE_STATIONS + i) as usize,
        }
    }

    pub fn from_slot(slot: usize) -> NodeId {
        let s = slot as u32;
        if s < WIRED_NODES {
            NodeId::Wired(s)
        } else if s < WIRED_NODES + BASE_STATIONS {
            NodeId::BaseStation(s - WIRED_NODES)
        } else {
            NodeId::Mobile(s - WIRED_NODES - BASE_STATIONS)
        }
    }

    pub fn is_mobile(self) -> bool {
        matches!(self, NodeId::Mobile(_))
    }

    /// Wired nodes and base stations share the static wired backbone.
    pub fn on_backbone(self) -> bool {
        !self.is_mobile()
    }

    /// RNG stream for this node's draws; stream 0 is the scenario stream.
    pub fn rng_stream(self) -> u64 {
        1 + self.slot() as u64
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NodeId::Wired(i) => write!(f, "W{i}"),
            NodeId::BaseStation(i) => write!(f, "B{i}"),
            NodeId::Mobile(i) => write!(f, "M{i}"),
        }
    }
}

impl FromStr for NodeId {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let bad = || format!("invalid node id {s:?} (expected W<i>, B<i> or M<i>)");
        let mut chars = s.chars();
        let kind = chars.next().ok_or_else(bad)?;
        let digits = chars.as_str();
        if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        let idx: u32 = digits.parse().map_err(|_| bad())?;
        match kind {
            'W' => Ok(NodeId::Wired(idx)),
            'B' => Ok(NodeId::BaseStation(idx)),
            'M' => Ok(NodeId::Mobile(idx)),
            _ => Err(bad()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Position {
    pub x: f64,
    pub y: f64,
}

impl Position {
    pub const fn new(x: f64, y: f64) -> Self {
        Position { x, y }
    }

    pub fn distance(self, other: Position) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn lerp(self, to: Position, frac: f64) -> Position {
        Position {
            x: self.x + (to.x - self.x) * frac,
            y: self.y + (to.y - self.y) * frac,
        }
    }
}

/// Axis-aligned rectangle, inclusive bounds.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Area {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl Area {
    pub fn contains(&self, p: Position) -> bool {
        p.x >= self.x_min && p.x <= self.x_max && p.y >= self.y_min && p.y <= self.y_max
    }

    fn sample<R: Rng>(&self, rng: &mut R) -> Position {
        Position {
            x: rng.gen_range(self.x_min..=self.x_max),
            y: rng.gen_range(self.y_min..=self.y_max),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Cluster {
    One,
    Two,
}

impl Cluster {
    pub fn gateway(self) -> NodeId {
        match self {
            Cluster::One => NodeId::BaseStation(0),
            Cluster::Two => NodeId::BaseStation(1),
        }
    }

    pub fn number(self) -> u8 {
        match self {
            Cluster::One => 1,
            Cluster::Two => 2,
        }
    }

    pub fn from_number(n: u8) -> Option<Cluster> {
        match n {
            1 => Some(Cluster::One),
            2 => Some(Cluster::Two),
            _ => None,
        }
    }

    /// Mobiles below `mobiles / 2` attach to base station 0, the rest to 1.
    pub fn of_mobile(index: u32, mobiles: usize) -> Cluster {
        if (index as usize) < mobiles / 2 {
            Cluster::One
        } else {
            Cluster::Two
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TopologyParams {
    pub width_m: f64,
    pub height_m: f64,
    pub range_m: f64,
    pub speed_min: f64,
    pub speed_max: f64,
    pub wired_positions: [Position; 2],
    pub base_positions: [Position; 2],
}

impl Default for TopologyParams {
    fn default() -> Self {
        TopologyParams {
            width_m: 800.0,
            height_m: 800.0,
            range_m: 250.0,
            speed_min: 1.0,
            speed_max: 20.0,
            wired_positions: [Position::new(200.0, 0.0), Position::new(600.0, 0.0)],
            base_positions: [Position::new(200.0, 400.0), Position::new(600.0, 400.0)],
        }
    }
}

impl TopologyParams {
    pub fn area(&self) -> Area {
        Area {
            x_min: 0.0,
            x_max: self.width_m,
            y_min: 0.0,
            y_max: self.height_m,
        }
    }

    /// Cluster 1 roams the left half, cluster 2 the right half.
    pub fn cluster_area(&self, cluster: Cluster) -> Area {
        let half = self.width_m / 2.0;
        let (x_min, x_max) = match cluster {
            Cluster::One => (0.0, half),
            Cluster::Two => (half, self.width_m),
        };
        Area {
            x_min,
            x_max,
            y_min: 0.0,
            y_max: self.height_m,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.width_m > 0.0 && self.height_m > 0.0) {
            return Err(Error::config("topography must have positive size"));
        }
        if !(self.range_m >= 0.0) {
            return Err(Error::config("transmission range must be non-negative"));
        }
        if !(self.speed_min > 0.0 && self.speed_max >= self.speed_min) {
            return Err(Error::config(format!(
                "speed bounds must satisfy 0 < min <= max (got {}..{})",
                self.speed_min, self.speed_max
            )));
        }
        let area = self.area();
        for p in self.wired_positions.iter().chain(&self.base_positions) {
            if !area.contains(*p) {
                return Err(Error::config("fixed node placed outside the topography"));
            }
        }
        Ok(())
    }
}

/// One movement: leave `from` at `depart`, reach `to` at `arrive`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Leg {
    pub depart: SimTime,
    pub arrive: SimTime,
    pub from: Position,
    pub to: Position,
    pub speed: f64,
}

/// Random-waypoint trajectory: pause, travel, pause, ... until the horizon.
#[derive(Clone, Debug, PartialEq)]
pub struct WaypointPlan {
    pub node: NodeId,
    pub initial: Position,
    pub pause: SimTime,
    pub legs: Vec<Leg>,
}

impl WaypointPlan {
    /// A node that never moves.
    pub fn stationary(node: NodeId, at: Position) -> Self {
        WaypointPlan {
            node,
            initial: at,
            pause: SimTime::ZERO,
            legs: Vec::new(),
        }
    }

    pub fn position_at(&self, t: SimTime) -> Position {
        let idx = self.legs.partition_point(|l| l.depart <= t);
        if idx == 0 {
            return self.initial;
        }
        let leg = &self.legs[idx - 1];
        if t >= leg.arrive {
            return leg.to;
        }
        let span = (leg.arrive - leg.depart).as_micros() as f64;
        let frac = (t - leg.depart).as_micros() as f64 / span;
        leg.from.lerp(leg.to, frac)
    }

    /// Time at which the plan stops describing new motion (last arrival plus pause).
    pub fn covered_until(&self) -> SimTime {
        match self.legs.last() {
            Some(l) => l.arrive + self.pause,
            None => self.pause,
        }
    }

    /// `node t_arrive x y speed pause`, one line per waypoint, initial first.
    pub fn export_lines(&self) -> Vec<String> {
        let pause = self.pause.as_secs_f64();
        let mut out = vec![format!(
            "{} {} {:.6} {:.6} {:.6} {:.6}",
            self.node,
            SimTime::ZERO,
            self.initial.x,
            self.initial.y,
            0.0,
            pause
        )];
        for l in &self.legs {
            out.push(format!(
                "{} {} {:.6} {:.6} {:.6} {:.6}",
                self.node, l.arrive, l.to.x, l.to.y, l.speed, pause
            ));
        }
        out
    }
}

/// Draws a random-waypoint plan. The initial position is the first draw of
/// `rng`; each waypoint is uniform in `area` and each speed uniform in
/// `[speed_min, speed_max]`.
pub fn generate_waypoints(
    node: NodeId,
    rng: &mut RngStream,
    area: Area,
    params: &TopologyParams,
    pause_time: f64,
    horizon: SimTime,
) -> Result<WaypointPlan> {
    let initial = area.sample(rng);
    generate_waypoints_from(node, initial, rng, area, params, pause_time, horizon)
}

pub fn generate_waypoints_from(
    node: NodeId,
    initial: Position,
    rng: &mut RngStream,
    area: Area,
    params: &TopologyParams,
    pause_time: f64,
    horizon: SimTime,
) -> Result<WaypointPlan> {
    if !node.is_mobile() {
        return Err(Error::config(format!("{node} is not a mobile node")));
    }
    if !(pause_time >= 0.0) {
        return Err(Error::config(format!(
            "pause time must be non-negative, got {pause_time}"
        )));
    }
    if !(params.speed_min > 0.0 && params.speed_max >= params.speed_min) {
        return Err(Error::config("speeds must be strictly positive"));
    }
    let pause = SimTime::from_secs_f64(pause_time);
    let mut legs = Vec::new();
    let mut here = initial;
    let mut t = SimTime::ZERO;
    loop {
        t += pause;
        if t >= horizon {
            break;
        }
        let to = area.sample(rng);
        let speed = if params.speed_max > params.speed_min {
            rng.gen_range(params.speed_min..=params.speed_max)
        } else {
            params.speed_min
        };
        // at least 1 µs per leg so time always advances
        let travel = SimTime::from_secs_f64(here.distance(to) / speed).max(SimTime::from_micros(1));
        let arrive = t + travel;
        legs.push(Leg {
            depart: t,
            arrive,
            from: here,
            to,
            speed,
        });
        here = to;
        t = arrive;
        if t >= horizon {
            break;
        }
    }
    Ok(WaypointPlan {
        node,
        initial,
        pause,
        legs,
    })
}

/// Static node inventory plus mobile trajectories for one run.
#[derive(Clone, Debug)]
pub struct Topology {
    params: TopologyParams,
    plans: Vec<WaypointPlan>,
}

impl Topology {
    /// Draws one plan per mobile from its own RNG stream. `initial` overrides
    /// the random start positions.
    pub fn generate(
        params: TopologyParams,
        mobiles: usize,
        seed: u64,
        pause_time: f64,
        horizon: SimTime,
        initial: Option<&[Position]>,
    ) -> Result<Topology> {
        params.validate()?;
        if let Some(init) = initial {
            if init.len() != mobiles {
                return Err(Error::config(format!(
                    "{} initial positions given for {mobiles} mobiles",
                    init.len()
                )));
            }
        }
        let mut plans = Vec::with_capacity(mobiles);
        for i in 0..mobiles as u32 {
            let node = NodeId::Mobile(i);
            let area = params.cluster_area(Cluster::of_mobile(i, mobiles));
            let mut rng = RngStream::new(seed, node.rng_stream());
            let plan = match initial {
                Some(init) => {
                    let p = init[i as usize];
                    if !params.area().contains(p) {
                        return Err(Error::config(format!(
                            "{node} starts outside the topography"
                        )));
                    }
                    generate_waypoints_from(node, p, &mut rng, area, &params, pause_time, horizon)?
                }
                None => generate_waypoints(node, &mut rng, area, &params, pause_time, horizon)?,
            };
            plans.push(plan);
        }
        Ok(Topology { params, plans })
    }

    pub fn from_plans(params: TopologyParams, plans: Vec<WaypointPlan>) -> Result<Topology> {
        params.validate()?;
        for (i, p) in plans.iter().enumerate() {
            if p.node != NodeId::Mobile(i as u32) {
                return Err(Error::config(format!("plan {i} belongs to {}", p.node)));
            }
        }
        Ok(Topology { params, plans })
    }

    pub fn params(&self) -> &TopologyParams {
        &self.params
    }

    pub fn mobiles(&self) -> usize {
        self.plans.len()
    }

    pub fn node_count(&self) -> usize {
        (WIRED_NODES + BASE_STATIONS) as usize + self.plans.len()
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        (0..self.node_count()).map(NodeId::from_slot)
    }

    pub fn contains(&self, node: NodeId) -> bool {
        match node {
            NodeId::Wired(i) => i < WIRED_NODES,
            NodeId::BaseStation(i) => i < BASE_STATIONS,
            NodeId::Mobile(i) => (i as usize) < self.plans.len(),
        }
    }

    pub fn plan(&self, node: NodeId) -> Option<&WaypointPlan> {
        match node {
            NodeId::Mobile(i) => self.plans.get(i as usize),
            _ => None,
        }
    }

    pub fn plans(&self) -> &[WaypointPlan] {
        &self.plans
    }

    pub fn cluster_of(&self, node: NodeId) -> Option<Cluster> {
        match node {
            NodeId::Mobile(i) => Some(Cluster::of_mobile(i, self.plans.len())),
            NodeId::BaseStation(0) => Some(Cluster::One),
            NodeId::BaseStation(1) => Some(Cluster::Two),
            _ => None,
        }
    }

    pub fn position_at(&self, node: NodeId, t: SimTime) -> Position {
        match node {
            NodeId::Wired(i) => self.params.wired_positions[i as usize],
            NodeId::BaseStation(i) => self.params.base_positions[i as usize],
            NodeId::Mobile(i) => self.plans[i as usize].position_at(t),
        }
    }

    /// Static wired backbone: every wired node and base station are linked.
    pub fn wired_link(&self, a: NodeId, b: NodeId) -> bool {
        a != b && a.on_backbone() && b.on_backbone()
    }

    /// Disk model for radio pairs; backbone pairs are always connected.
    /// Wired nodes have no radio.
    pub fn in_range(&self, a: NodeId, b: NodeId, t: SimTime) -> bool {
        if a == b {
            return true;
        }
        if self.wired_link(a, b) {
            return true;
        }
        if matches!(a, NodeId::Wired(_)) || matches!(b, NodeId::Wired(_)) {
            return false;
        }
        self.position_at(a, t).distance(self.position_at(b, t)) <= self.params.range_m
    }

    pub fn distance_at(&self, a: NodeId, b: NodeId, t: SimTime) -> f64 {
        self.position_at(a, t).distance(self.position_at(b, t))
    }
}
