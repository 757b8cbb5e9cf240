//! Run log: one pipe-separated line per event, `time|node|event|name|iface`,
//! plus `view|time|node|iface|detail` lines for adversary observations.
//! Identical inputs and seed produce byte-identical logs.

use andana_core::names::Name;
use sha2::{Digest, Sha256};

/// Renders a name compactly and deterministically: short printable
/// components verbatim (percent-escaped), anything else as `#len:digest8`.
pub fn render_name(name: &Name) -> String {
    if name.is_empty() {
        return "/".into();
    }
    let mut out = String::new();
    for c in name.components() {
        out.push('/');
        let printable = c.len() <= 32
            && !c.is_empty()
            && c.iter()
                .all(|b| b.is_ascii_alphanumeric() || matches!(b, b'-' | b'.' | b'_' | b'~'));
        if printable {
            out.push_str(&String::from_utf8_lossy(c));
        } else {
            let digest = Sha256::digest(c);
            out.push_str(&format!("#{}:{}", c.len(), hex8(&digest)));
        }
    }
    out
}

fn hex8(digest: &[u8]) -> String {
    digest[..4].iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Default)]
pub struct TraceLog {
    lines: Vec<String>,
    enabled: bool,
}

impl TraceLog {
    pub fn new(enabled: bool) -> Self {
        TraceLog {
            lines: Vec::new(),
            enabled,
        }
    }

    pub fn event(&mut self, time_us: u64, node: &str, event: &str, name: &str, iface: &str) {
        if self.enabled {
            self.lines
                .push(format!("{time_us}|{node}|{event}|{name}|{iface}"));
        }
    }

    pub fn view(&mut self, time_us: u64, node: &str, iface: &str, detail: &str) {
        if self.enabled {
            self.lines
                .push(format!("view|{time_us}|{node}|{iface}|{detail}"));
        }
    }

    pub fn lines(&self) -> &[String] {
        &self.lines
    }

    pub fn joined(&self) -> String {
        let mut s = self.lines.join("\n");
        if !s.is_empty() {
            s.push('\n');
        }
        s
    }

    /// Lines matching all given substrings, for test assertions.
    pub fn matching(&self, needles: &[&str]) -> Vec<&String> {
        self.lines
            .iter()
            .filter(|l| needles.iter().all(|n| l.contains(n)))
            .collect()
    }

    pub fn count(&self, needles: &[&str]) -> usize {
        self.matching(needles).len()
    }
}
