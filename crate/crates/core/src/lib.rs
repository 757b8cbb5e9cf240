//! Core data plane for an anonymizing overlay on named-data networking.
//!
//! The crate is split along the protocol's layers:
//!
//! - [`names`]: hierarchical content names and their canonical TLV encoding.
//! - [`packets`]: the two packet types (interest and data), their wire codec
//!   and the signature envelope carried by every data packet.
//! - [`crypto`]: key material, CCA-secure hybrid public-key encryption,
//!   authenticated symmetric encryption, Diffie-Hellman agreement and key
//!   fingerprints.
//! - [`forwarder`]: a name-based forwarding node (FIB, PIT with interest
//!   collapsing, content store with freshness and LRU eviction).
//! - [`directory`]: the registry of anonymizing-router advertisements.
//! - [`consumer`]: ephemeral circuit selection, layered interest encryption
//!   (asymmetric and session-based) and content decapsulation.
//! - [`router`]: the anonymizing-router side — decrypt-and-forward of
//!   encrypted interests, content encapsulation, key rotation and the
//!   session handshake.
//!
//! Everything here is deterministic given the caller-supplied RNG; the crate
//! never touches a wall clock. Time is a plain `u64` of milliseconds supplied
//! by the embedding environment (a simulator in the reference tooling).

pub mod consumer;
pub mod crypto;
pub mod directory;
pub mod forwarder;
pub mod names;
pub mod packets;
pub mod router;
pub mod tlv;

pub use names::Name;
pub use packets::{Data, Interest};
