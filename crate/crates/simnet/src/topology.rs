//! Network description loaded from JSON.
//!
//! ```json
//! {
//!   "nodes": [{"id": "c1", "role": "consumer"},
//!             {"id": "a1", "role": "ar", "namespace": "/andana/a1",
//!              "organization": "org-a1"}],
//!   "links": [{"a": "c1", "ai": 0, "b": "a1", "bi": 0,
//!              "latency_ms": 1, "bw_bps": 125000000}],
//!   "fibs":  {"c1": [{"prefix": "/andana", "iface": 0}]}
//! }
//! ```
//!
//! Links are bidirectional; `bw_bps` is bytes per second. Namespace and
//! organization default from the node id for anonymizing routers, producers
//! and the directory.

use std::collections::{BTreeMap, BTreeSet};

use andana_core::names::Name;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ConfigError {
    #[error("config error: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Consumer,
    Router,
    Ar,
    Producer,
    Directory,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NodeSpec {
    pub id: String,
    pub role: Role,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub namespace: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub organization: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LinkSpec {
    pub a: String,
    pub ai: u32,
    pub b: String,
    pub bi: u32,
    pub latency_ms: u64,
    pub bw_bps: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FibRule {
    pub prefix: String,
    pub iface: u32,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Topology {
    pub nodes: Vec<NodeSpec>,
    pub links: Vec<LinkSpec>,
    #[serde(default)]
    pub fibs: BTreeMap<String, Vec<FibRule>>,
}

impl Topology {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let topo: Topology =
            serde_json::from_str(text).map_err(|e| ConfigError::Invalid(e.to_string()))?;
        topo.validate()?;
        Ok(topo)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("topology serialization")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let mut ids = BTreeSet::new();
        for n in &self.nodes {
            if !ids.insert(n.id.clone()) {
                return Err(ConfigError::Invalid(format!("duplicate node id {}", n.id)));
            }
        }
        let mut ifaces: BTreeSet<(String, u32)> = BTreeSet::new();
        for l in &self.links {
            for (node, iface) in [(&l.a, l.ai), (&l.b, l.bi)] {
                if !ids.contains(node) {
                    return Err(ConfigError::Invalid(format!("unknown node {node} in link")));
                }
                if !ifaces.insert((node.clone(), iface)) {
                    return Err(ConfigError::Invalid(format!(
                        "interface {iface} reused on node {node}"
                    )));
                }
            }
            if l.latency_ms == 0 {
                return Err(ConfigError::Invalid(format!(
                    "link {}-{} must have positive latency",
                    l.a, l.b
                )));
            }
            if l.bw_bps == 0 {
                return Err(ConfigError::Invalid(format!(
                    "link {}-{} must have positive bandwidth",
                    l.a, l.b
                )));
            }
        }
        for (node, rules) in &self.fibs {
            if !ids.contains(node) {
                return Err(ConfigError::Invalid(format!("fib for unknown node {node}")));
            }
            for rule in rules {
                Name::parse(&rule.prefix)
                    .map_err(|e| ConfigError::Invalid(format!("bad fib prefix: {e}")))?;
                if !ifaces.contains(&(node.clone(), rule.iface)) {
                    return Err(ConfigError::Invalid(format!(
                        "fib on {node} references missing interface {}",
                        rule.iface
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn node(&self, id: &str) -> Option<&NodeSpec> {
        self.nodes.iter().find(|n| n.id == id)
    }

    /// Effective namespace of a node, defaulted from its role and id.
    pub fn namespace_of(&self, spec: &NodeSpec) -> Option<Name> {
        if let Some(ns) = &spec.namespace {
            return Name::parse(ns).ok();
        }
        match spec.role {
            Role::Ar => Name::parse(&format!("/andana/{}", spec.id)).ok(),
            Role::Producer => Name::parse(&format!("/data/{}", spec.id)).ok(),
            Role::Directory => Name::parse("/andana/directory").ok(),
            _ => None,
        }
    }

    pub fn organization_of(&self, spec: &NodeSpec) -> String {
        spec.organization
            .clone()
            .unwrap_or_else(|| format!("org-{}", spec.id))
    }

    /// All interfaces in the network as (node, iface) pairs.
    pub fn interfaces(&self) -> Vec<(String, u32)> {
        let mut out = Vec::new();
        for l in &self.links {
            out.push((l.a.clone(), l.ai));
            out.push((l.b.clone(), l.bi));
        }
        out.sort();
        out
    }

    /// A convenience line topology: consumer, two anonymizing routers and a
    /// producer in a row.
    pub fn line4() -> Self {
        let text = r#"{
  "nodes": [
    {"id": "c1", "role": "consumer"},
    {"id": "a1", "role": "ar", "organization": "org-a1"},
    {"id": "a2", "role": "ar", "organization": "org-a2"},
    {"id": "p1", "role": "producer"}
  ],
  "links": [
    {"a": "c1", "ai": 0, "b": "a1", "bi": 0, "latency_ms": 1, "bw_bps": 125000000},
    {"a": "a1", "ai": 1, "b": "a2", "bi": 0, "latency_ms": 1, "bw_bps": 125000000},
    {"a": "a2", "ai": 1, "b": "p1", "bi": 0, "latency_ms": 1, "bw_bps": 125000000}
  ],
  "fibs": {
    "c1": [{"prefix": "/", "iface": 0}],
    "a1": [{"prefix": "/andana/a2", "iface": 1}, {"prefix": "/data", "iface": 1}],
    "a2": [{"prefix": "/andana/a1", "iface": 0}, {"prefix": "/data", "iface": 1}]
  }
}"#;
        Topology::from_json(text).expect("built-in topology is valid")
    }
}
