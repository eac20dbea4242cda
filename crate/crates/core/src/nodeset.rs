//! Relay subsets as bitmasks.

use std::fmt;
use std::ops::{BitAnd, BitOr, Not, Sub};

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Lowest relay node id; node 1 is the source.
pub const FIRST_RELAY: usize = 2;

/// Largest number of relays a [`NodeSet`] can hold.
pub const MAX_RELAYS: usize = 32;

/// A subset of the relay nodes `{2, …, d−1}`. Bit `k` stands for node `k + 2`.
#[derive(Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeSet(u32);

impl NodeSet {
    pub const EMPTY: NodeSet = NodeSet(0);

    pub const fn from_bits(bits: u32) -> Self {
        NodeSet(bits)
    }

    pub const fn bits(self) -> u32 {
        self.0
    }

    /// All relays `2..2+count`.
    pub fn relays(count: usize) -> Self {
        assert!(count <= MAX_RELAYS, "at most {MAX_RELAYS} relays");
        if count == MAX_RELAYS {
            NodeSet(u32::MAX)
        } else {
            NodeSet((1u32 << count) - 1)
        }
    }

    /// Builds a set from relay node ids. Panics on ids outside `2..34`.
    pub fn from_nodes<I: IntoIterator<Item = usize>>(nodes: I) -> Self {
        nodes.into_iter().fold(NodeSet::EMPTY, |acc, n| acc.with(n))
    }

    pub fn single(node: usize) -> Self {
        NodeSet::EMPTY.with(node)
    }

    pub fn with(self, node: usize) -> Self {
        assert!(
            (FIRST_RELAY..FIRST_RELAY + MAX_RELAYS).contains(&node),
            "node {node} is not a representable relay id"
        );
        NodeSet(self.0 | 1 << (node - FIRST_RELAY))
    }

    pub fn contains(self, node: usize) -> bool {
        (FIRST_RELAY..FIRST_RELAY + MAX_RELAYS).contains(&node)
            && self.0 & (1 << (node - FIRST_RELAY)) != 0
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_subset(self, other: NodeSet) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn is_disjoint(self, other: NodeSet) -> bool {
        self.0 & other.0 == 0
    }

    /// Node ids in increasing order.
    pub fn nodes(self) -> impl Iterator<Item = usize> {
        let bits = self.0;
        (0..MAX_RELAYS)
            .filter(move |k| bits & (1 << k) != 0)
            .map(|k| k + FIRST_RELAY)
    }

    /// Every nonempty subset of `self`, in increasing bitmask order.
    pub fn nonempty_subsets(self) -> impl Iterator<Item = NodeSet> {
        let full = self.0;
        // Enumerate submasks of `full` in increasing order via the (x - full) & full trick.
        let mut next = Some((0u32.wrapping_sub(full)) & full);
        std::iter::from_fn(move || {
            let cur = next?;
            if cur == 0 {
                next = None;
                return None;
            }
            let succ = (cur.wrapping_sub(full)) & full;
            next = if succ == 0 { None } else { Some(succ) };
            Some(NodeSet(cur))
        })
    }
}

impl BitOr for NodeSet {
    type Output = NodeSet;
    fn bitor(self, rhs: NodeSet) -> NodeSet {
        NodeSet(self.0 | rhs.0)
    }
}

impl BitAnd for NodeSet {
    type Output = NodeSet;
    fn bitand(self, rhs: NodeSet) -> NodeSet {
        NodeSet(self.0 & rhs.0)
    }
}

impl Sub for NodeSet {
    type Output = NodeSet;
    fn sub(self, rhs: NodeSet) -> NodeSet {
        NodeSet(self.0 & !rhs.0)
    }
}

impl Not for NodeSet {
    type Output = NodeSet;
    fn not(self) -> NodeSet {
        NodeSet(!self.0)
    }
}

impl fmt::Display for NodeSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (k, n) in self.nodes().enumerate() {
            if k > 0 {
                f.write_str(",")?;
            }
            write!(f, "{n}")?;
        }
        f.write_str("}")
    }
}

impl fmt::Debug for NodeSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl Serialize for NodeSet {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(self.nodes())
    }
}

impl<'de> Deserialize<'de> for NodeSet {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let nodes = Vec::<usize>::deserialize(d)?;
        for &n in &nodes {
            if !(FIRST_RELAY..FIRST_RELAY + MAX_RELAYS).contains(&n) {
                return Err(serde::de::Error::custom(format!("{n} is not a relay node id")));
            }
        }
        Ok(NodeSet::from_nodes(nodes))
    }
}
