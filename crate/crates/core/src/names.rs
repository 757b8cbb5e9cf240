//! Hierarchical content names.
//!
//! A name is an ordered sequence of byte-string components that are opaque to
//! the network. The text form delimits components with `/` and
//! percent-escapes anything that is not URI-unreserved, so arbitrary bytes
//! (including `/` and NUL) survive a round trip through logs and config
//! files. The wire form is the TLV grammar
//! `NAME := T_NAME LEN (COMPONENT)*`, `COMPONENT := T_COMP LEN bytes`.

use std::fmt;

use thiserror::Error;

use crate::tlv::{self, Reader, TlvError};

pub const TYPE_NAME: u16 = 0x0001;
pub const TYPE_COMPONENT: u16 = 0x0002;

/// Hard bounds keeping forwarding-table keys sane.
pub const MAX_COMPONENTS: usize = 64;
pub const MAX_COMPONENT_LEN: usize = 65_535;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum NameError {
    #[error("malformed name: {0}")]
    Malformed(String),
    #[error("name exceeds {MAX_COMPONENTS} components")]
    TooLong,
    #[error("component exceeds {MAX_COMPONENT_LEN} bytes")]
    ComponentTooLong,
    #[error("bad wire encoding: {0}")]
    Wire(#[from] TlvError),
}

/// Hierarchical name: an immutable, ordered sequence of opaque components.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Name {
    components: Vec<Vec<u8>>,
}

impl Name {
    /// The zero-component root name, written `/`.
    pub fn root() -> Self {
        Name { components: Vec::new() }
    }

    pub fn from_components<I, C>(components: I) -> Result<Self, NameError>
    where
        I: IntoIterator<Item = C>,
        C: Into<Vec<u8>>,
    {
        let components: Vec<Vec<u8>> = components.into_iter().map(Into::into).collect();
        if components.len() > MAX_COMPONENTS {
            return Err(NameError::TooLong);
        }
        if components.iter().any(|c| c.len() > MAX_COMPONENT_LEN) {
            return Err(NameError::ComponentTooLong);
        }
        Ok(Name { components })
    }

    /// Parses the text form. The text must start with `/`; `/` alone is the
    /// root. Percent escapes decode to raw bytes inside a component.
    pub fn parse(text: &str) -> Result<Self, NameError> {
        let rest = text
            .strip_prefix('/')
            .ok_or_else(|| NameError::Malformed("name must start with '/'".into()))?;
        if text == "/" {
            return Ok(Name::root());
        }
        let mut components = Vec::new();
        for segment in rest.split('/') {
            // "..." is the canonical text form of the empty component.
            if segment == "..." {
                components.push(Vec::new());
            } else {
                components.push(decode_segment(segment)?);
            }
        }
        Name::from_components(components)
    }

    pub fn components(&self) -> &[Vec<u8>] {
        &self.components
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn component(&self, i: usize) -> Option<&[u8]> {
        self.components.get(i).map(Vec::as_slice)
    }

    /// True iff `self` is a leading subsequence of `other`, component-wise.
    pub fn is_prefix_of(&self, other: &Name) -> bool {
        self.components.len() <= other.components.len()
            && self
                .components
                .iter()
                .zip(&other.components)
                .all(|(a, b)| a == b)
    }

    /// Returns a new name with one component appended; `self` is unchanged.
    pub fn append(&self, component: impl Into<Vec<u8>>) -> Result<Name, NameError> {
        let component = component.into();
        if self.components.len() + 1 > MAX_COMPONENTS {
            return Err(NameError::TooLong);
        }
        if component.len() > MAX_COMPONENT_LEN {
            return Err(NameError::ComponentTooLong);
        }
        let mut components = self.components.clone();
        components.push(component);
        Ok(Name { components })
    }

    /// Concatenates another name's components onto this one.
    pub fn join(&self, suffix: &Name) -> Result<Name, NameError> {
        if self.components.len() + suffix.components.len() > MAX_COMPONENTS {
            return Err(NameError::TooLong);
        }
        let mut components = self.components.clone();
        components.extend(suffix.components.iter().cloned());
        Ok(Name { components })
    }

    /// Canonical wire encoding.
    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::new();
        self.encode_into(&mut out);
        out
    }

    pub fn encode_into(&self, out: &mut Vec<u8>) {
        let mut inner = Vec::new();
        for c in &self.components {
            tlv::write_tlv(&mut inner, TYPE_COMPONENT, c);
        }
        tlv::write_tlv(out, TYPE_NAME, &inner);
    }

    /// Decodes a name that must occupy the whole input.
    pub fn decode(bytes: &[u8]) -> Result<Self, NameError> {
        let mut reader = Reader::new(bytes);
        let name = Self::decode_from(&mut reader)?;
        reader.finish()?;
        Ok(name)
    }

    /// Decodes one NAME record off the front of a reader.
    pub fn decode_from(reader: &mut Reader<'_>) -> Result<Self, NameError> {
        let inner = reader.read_expected(TYPE_NAME)?;
        let mut r = Reader::new(inner);
        let mut components = Vec::new();
        while !r.is_empty() {
            let c = r.read_expected(TYPE_COMPONENT)?;
            if c.len() > MAX_COMPONENT_LEN {
                return Err(NameError::ComponentTooLong);
            }
            components.push(c.to_vec());
            if components.len() > MAX_COMPONENTS {
                return Err(NameError::TooLong);
            }
        }
        Ok(Name { components })
    }
}

fn decode_segment(segment: &str) -> Result<Vec<u8>, NameError> {
    let bytes = segment.as_bytes();
    let mut out = Vec::with_capacity(bytes.len());
    let mut i = 0;
    while i < bytes.len() {
        match bytes[i] {
            b'%' => {
                if bytes.len() < i + 3 {
                    return Err(NameError::Malformed("truncated percent escape".into()));
                }
                let hi = hex_digit(bytes[i + 1])?;
                let lo = hex_digit(bytes[i + 2])?;
                out.push(hi << 4 | lo);
                i += 3;
            }
            b => {
                out.push(b);
                i += 1;
            }
        }
    }
    Ok(out)
}

fn hex_digit(b: u8) -> Result<u8, NameError> {
    match b {
        b'0'..=b'9' => Ok(b - b'0'),
        b'a'..=b'f' => Ok(b - b'a' + 10),
        b'A'..=b'F' => Ok(b - b'A' + 10),
        _ => Err(NameError::Malformed("bad percent escape".into())),
    }
}

fn is_unreserved(b: u8) -> bool {
    b.is_ascii_alphanumeric() || matches!(b, b'-' | b'.' | b'_' | b'~')
}

impl fmt::Display for Name {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.components.is_empty() {
            return f.write_str("/");
        }
        for c in &self.components {
            f.write_str("/")?;
            if c.is_empty() {
                f.write_str("...")?;
                continue;
            }
            // A literal "..." component would collide with the empty-component
            // form, so escape its first byte.
            let escape_first = c.as_slice() == b"...";
            for (i, &b) in c.iter().enumerate() {
                if is_unreserved(b) && !(escape_first && i == 0) {
                    write!(f, "{}", b as char)?;
                } else {
                    write!(f, "%{b:02X}")?;
                }
            }
        }
        Ok(())
    }
}

impl fmt::Debug for Name {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Name({self})")
    }
}

impl std::str::FromStr for Name {
    type Err = NameError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Name::parse(s)
    }
}
