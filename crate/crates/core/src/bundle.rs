//! Bundles, segmentation and per-node custody storage.

use std::collections::BTreeMap;

use crate::engine::EventHandle;
use crate::error::{Error, Result};
use crate::stack::SEGMENT_PAYLOAD_BYTES;
use crate::time::SimTime;
use crate::topology::NodeId;

/// How "MB" in a message size is read.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MbConvention {
    #[default]
    Decimal,
    Binary,
}

impl MbConvention {
    pub fn bytes(self, megabytes: u64) -> u64 {
        match self {
            MbConvention::Decimal => megabytes * 1_000_000,
            MbConvention::Binary => megabytes * 1_048_576,
        }
    }
}

impl std::str::FromStr for MbConvention {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "decimal" => Ok(MbConvention::Decimal),
            "binary" => Ok(MbConvention::Binary),
            _ => Err(format!("unknown MB convention {s:?} (decimal|binary)")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BundleKey {
    pub flow: u32,
    pub seq: u32,
}

impl BundleKey {
    pub fn new(flow: u32, seq: u32) -> Self {
        BundleKey { flow, seq }
    }

    /// Run-unique numeric id.
    pub fn id(self) -> u64 {
        (u64::from(self.flow) << 32) | u64::from(self.seq)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BundleState {
    Created,
    InCustody,
    ForwardedAwaitingAck,
    Delivered,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Bundle {
    pub key: BundleKey,
    pub payload_bytes: u32,
    pub state: BundleState,
    /// Every node that accepted custody, source first.
    pub custody_chain: Vec<NodeId>,
    pub created_at: Option<SimTime>,
    pub delivered_at: Option<SimTime>,
}

impl Bundle {
    pub fn bundle_id(&self) -> u64 {
        self.key.id()
    }

    pub fn custodian(&self) -> Option<NodeId> {
        self.custody_chain.last().copied()
    }
}

/// Splits a message into `ceil(bytes / 1460)` bundles; the last may be short.
pub fn segment_message(flow: u32, message_bytes: u64) -> Result<Vec<Bundle>> {
    if message_bytes == 0 {
        return Err(Error::config("message size must be positive"));
    }
    let seg = u64::from(SEGMENT_PAYLOAD_BYTES);
    let count = message_bytes.div_ceil(seg);
    let count = u32::try_from(count).map_err(|_| Error::config("message too large"))?;
    Ok((0..count)
        .map(|seq| {
            let sent = u64::from(seq) * seg;
            Bundle {
                key: BundleKey::new(flow, seq),
                payload_bytes: (message_bytes - sent).min(seg) as u32,
                state: BundleState::Created,
                custody_chain: Vec::new(),
                created_at: None,
                delivered_at: None,
            }
        })
        .collect())
}

/// A forwarded bundle whose custody ack has not come back yet.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Awaiting {
    pub to: NodeId,
    pub attempt: u32,
    pub timer: EventHandle,
}

/// Bundles a node is responsible for: `held` ones wait for an opportunity,
/// `awaiting` ones were handed to the next hop and are kept until acked.
#[derive(Clone, Debug, Default)]
pub struct CustodyStore {
    held: BTreeMap<BundleKey, u32>,
    awaiting: BTreeMap<BundleKey, Awaiting>,
    held_per_flow: BTreeMap<u32, usize>,
    awaiting_per_flow: BTreeMap<u32, usize>,
}

impl CustodyStore {
    pub fn contains(&self, key: BundleKey) -> bool {
        self.held.contains_key(&key) || self.awaiting.contains_key(&key)
    }

    pub fn is_held(&self, key: BundleKey) -> bool {
        self.held.contains_key(&key)
    }

    pub fn awaiting(&self, key: BundleKey) -> Option<&Awaiting> {
        self.awaiting.get(&key)
    }

    pub fn held_len(&self) -> usize {
        self.held.len()
    }

    pub fn awaiting_len(&self) -> usize {
        self.awaiting.len()
    }

    pub fn is_empty(&self) -> bool {
        self.held.is_empty() && self.awaiting.is_empty()
    }

    pub fn held_in_flow(&self, flow: u32) -> usize {
        self.held_per_flow.get(&flow).copied().unwrap_or(0)
    }

    pub fn awaiting_in_flow(&self, flow: u32) -> usize {
        self.awaiting_per_flow.get(&flow).copied().unwrap_or(0)
    }

    /// Flows with at least one held bundle, ascending.
    pub fn flows_with_held(&self) -> Vec<u32> {
        self.held_per_flow.keys().copied().collect()
    }

    /// Oldest held bundle of `flow` (FIFO by sequence number).
    pub fn next_held(&self, flow: u32) -> Option<(BundleKey, u32)> {
        self.held
            .range(BundleKey::new(flow, 0)..=BundleKey::new(flow, u32::MAX))
            .next()
            .map(|(k, a)| (*k, *a))
    }

    pub fn held_keys(&self) -> impl Iterator<Item = BundleKey> + '_ {
        self.held.keys().copied()
    }

    pub fn awaiting_entries(&self) -> impl Iterator<Item = (BundleKey, &Awaiting)> + '_ {
        self.awaiting.iter().map(|(k, a)| (*k, a))
    }

    /// Returns false if the bundle was already stored here.
    pub fn hold(&mut self, key: BundleKey, attempt: u32) -> bool {
        if self.contains(key) {
            return false;
        }
        self.held.insert(key, attempt);
        *self.held_per_flow.entry(key.flow).or_default() += 1;
        true
    }

    pub fn mark_forwarded(&mut self, key: BundleKey, awaiting: Awaiting) -> bool {
        if self.held.remove(&key).is_none() {
            return false;
        }
        dec(&mut self.held_per_flow, key.flow);
        self.awaiting.insert(key, awaiting);
        *self.awaiting_per_flow.entry(key.flow).or_default() += 1;
        true
    }

    /// Drops the copy after a custody ack.
    pub fn release(&mut self, key: BundleKey) -> Option<Awaiting> {
        let a = self.awaiting.remove(&key)?;
        dec(&mut self.awaiting_per_flow, key.flow);
        Some(a)
    }

    /// Puts an unacknowledged bundle back in the held set for another try.
    pub fn requeue(&mut self, key: BundleKey) -> Option<Awaiting> {
        let a = self.release(key)?;
        self.held.insert(key, a.attempt + 1);
        *self.held_per_flow.entry(key.flow).or_default() += 1;
        Some(a)
    }
}

fn dec(map: &mut BTreeMap<u32, usize>, flow: u32) {
    if let Some(n) = map.get_mut(&flow) {
        *n -= 1;
        if *n == 0 {
            map.remove(&flow);
        }
    }
}
