//! Adversary instrumentation: which entities are compromised, which
//! interfaces are tapped, and the packet observations collected during a
//! run.
//!
//! Compromising a node implies tapping all of its interfaces; conversely a
//! router whose every interface is tapped is treated as compromised (its
//! keys count as known). State recovered from a node compromised mid-run
//! covers only packets it handles from the compromise instant onward.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::topology::{Role, Topology};

/// Static adversary specification, as found in scenario files.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct Adversary {
    #[serde(default)]
    pub producers: BTreeSet<String>,
    #[serde(default)]
    pub consumers: BTreeSet<String>,
    #[serde(default)]
    pub routers: BTreeSet<String>,
    /// Additional tapped interfaces as (node, iface) pairs.
    #[serde(default)]
    pub interfaces: BTreeSet<(String, u32)>,
}

impl Adversary {
    pub fn none() -> Self {
        Adversary::default()
    }

    pub fn tap(mut self, node: &str, iface: u32) -> Self {
        self.interfaces.insert((node.to_string(), iface));
        self
    }

    pub fn compromise_router(mut self, node: &str) -> Self {
        self.routers.insert(node.to_string());
        self
    }

    pub fn compromise_consumer(mut self, node: &str) -> Self {
        self.consumers.insert(node.to_string());
        self
    }

    pub fn compromise_producer(mut self, node: &str) -> Self {
        self.producers.insert(node.to_string());
        self
    }

    /// Applies the closure rules against a topology: compromised nodes tap
    /// all their interfaces; fully-tapped routers become compromised.
    pub fn normalize(&self, topology: &Topology) -> Adversary {
        let mut out = self.clone();
        let mut node_ifaces: BTreeMap<String, BTreeSet<u32>> = BTreeMap::new();
        for (node, iface) in topology.interfaces() {
            node_ifaces.entry(node).or_default().insert(iface);
        }
        loop {
            let mut changed = false;
            for node in out
                .producers
                .iter()
                .chain(out.consumers.iter())
                .chain(out.routers.iter())
                .cloned()
                .collect::<Vec<_>>()
            {
                for iface in node_ifaces.get(&node).into_iter().flatten() {
                    if out.interfaces.insert((node.clone(), *iface)) {
                        changed = true;
                    }
                }
            }
            for spec in &topology.nodes {
                if matches!(spec.role, Role::Router | Role::Ar) && !out.routers.contains(&spec.id) {
                    let ifaces = node_ifaces.get(&spec.id);
                    let all_tapped = ifaces.is_some_and(|set| {
                        !set.is_empty()
                            && set
                                .iter()
                                .all(|i| out.interfaces.contains(&(spec.id.clone(), *i)))
                    });
                    if all_tapped {
                        out.routers.insert(spec.id.clone());
                        changed = true;
                    }
                }
            }
            if !changed {
                return out;
            }
        }
    }

    pub fn is_router_compromised(&self, node: &str) -> bool {
        self.routers.contains(node)
    }

    pub fn is_consumer_compromised(&self, node: &str) -> bool {
        self.consumers.contains(node)
    }

    pub fn is_tapped(&self, node: &str, iface: u32) -> bool {
        self.interfaces.contains(&(node.to_string(), iface))
    }
}

/// One packet seen at a tapped interface.
#[derive(Debug, Clone)]
pub struct Observation {
    pub time_us: u64,
    pub node: String,
    pub iface: u32,
    pub bytes: Vec<u8>,
}

/// Mutable adversary state inside a running simulation: the normalized
/// specification, scheduled mid-run compromises, and collected packets.
#[derive(Debug, Default)]
pub struct AdversaryState {
    pub base: Adversary,
    /// Node id -> instant it becomes compromised.
    pub scheduled: BTreeMap<String, u64>,
    pub observations: Vec<Observation>,
}

impl AdversaryState {
    pub fn new(base: Adversary) -> Self {
        AdversaryState {
            base,
            scheduled: BTreeMap::new(),
            observations: Vec::new(),
        }
    }

    /// Is the interface observed at `now`, considering mid-run compromises?
    pub fn observes(&self, node: &str, iface: u32, now_us: u64) -> bool {
        self.base.is_tapped(node, iface)
            || self
                .scheduled
                .get(node)
                .is_some_and(|at| now_us >= *at)
    }

    pub fn router_compromised_at(&self, node: &str, now_us: u64) -> bool {
        self.base.is_router_compromised(node)
            || self
                .scheduled
                .get(node)
                .is_some_and(|at| now_us >= *at)
    }

    pub fn record(&mut self, time_us: u64, node: &str, iface: u32, bytes: &[u8]) {
        self.observations.push(Observation {
            time_us,
            node: node.to_string(),
            iface,
            bytes: bytes.to_vec(),
        });
    }

    /// Most recent observation at a tapped point whose decoded interest name
    /// starts with `prefix`, seen at or before `now`.
    pub fn find_observed_interest(
        &self,
        prefix: &andana_core::names::Name,
        now_us: u64,
    ) -> Option<&Observation> {
        self.observations.iter().rev().find(|o| {
            o.time_us <= now_us
                && andana_core::packets::Interest::decode(&o.bytes)
                    .map(|i| prefix.is_prefix_of(&i.name))
                    .unwrap_or(false)
        })
    }
}
