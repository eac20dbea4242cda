//! Layerings: ordered partitions of the relay set that fix a regular decoding schedule.
//!
//! Layer `l` holds the relays whose compressions the destination decodes `l + 1` blocks
//! late. The active-set operators accept the extended index range `-1..=depth`, with
//! `A₋₁ = Ã₋₁ = ∅`, `A_depth = ∅` and `Ã_depth = R`.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nodeset::NodeSet;

/// Default cap on the relay count for exhaustive enumeration.
pub const DEFAULT_ENUMERATION_CAP: usize = 6;

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Layering {
    layers: Vec<NodeSet>,
}

/// A broken layering condition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LayeringViolation {
    /// (L1) layer `l` holds nodes outside the relay set.
    NotRelays { layer: usize, extra: NodeSet },
    /// (L2) layers `l` and `q` share nodes.
    Overlap { first: usize, second: usize, shared: NodeSet },
    /// (L3) the layers do not cover the relay set.
    Uncovered { missing: NodeSet },
    /// (L4) the last layer is empty, or there are no layers at all.
    EmptyLast,
}

impl fmt::Display for LayeringViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LayeringViolation::NotRelays { layer, extra } => {
                write!(f, "(L1) layer {layer} contains non-relays {extra}")
            }
            LayeringViolation::Overlap { first, second, shared } => {
                write!(f, "(L2) layers {first} and {second} share {shared}")
            }
            LayeringViolation::Uncovered { missing } => {
                write!(f, "(L3) relays {missing} are in no layer")
            }
            LayeringViolation::EmptyLast => f.write_str("(L4) the last layer is empty"),
        }
    }
}

impl Layering {
    /// Wraps layers as given, shallowest first. No validation.
    pub fn new(layers: Vec<NodeSet>) -> Self {
        Layering { layers }
    }

    /// The one-layer layering `(R)`.
    pub fn single(relays: NodeSet) -> Self {
        Layering { layers: vec![relays] }
    }

    pub fn layers(&self) -> &[NodeSet] {
        &self.layers
    }

    /// Number of layers `|L|`.
    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    /// Union of all layers.
    pub fn relays(&self) -> NodeSet {
        self.layers.iter().fold(NodeSet::EMPTY, |a, &b| a | b)
    }

    pub fn layer_of(&self, node: usize) -> Option<usize> {
        self.layers.iter().position(|l| l.contains(node))
    }

    /// Checks (L1)–(L4) against `relays`. Empty layers before the last are allowed.
    pub fn validate(&self, relays: NodeSet) -> Vec<LayeringViolation> {
        let mut out = Vec::new();
        for (l, &layer) in self.layers.iter().enumerate() {
            let extra = layer - relays;
            if !extra.is_empty() {
                out.push(LayeringViolation::NotRelays { layer: l, extra });
            }
        }
        for l in 0..self.layers.len() {
            for q in l + 1..self.layers.len() {
                let shared = self.layers[l] & self.layers[q];
                if !shared.is_empty() {
                    out.push(LayeringViolation::Overlap { first: l, second: q, shared });
                }
            }
        }
        let missing = relays - self.relays();
        if !missing.is_empty() {
            out.push(LayeringViolation::Uncovered { missing });
        }
        if self.layers.last().is_none_or(|l| l.is_empty()) {
            out.push(LayeringViolation::EmptyLast);
        }
        out
    }

    pub fn is_valid(&self, relays: NodeSet) -> bool {
        self.validate(relays).is_empty()
    }

    fn check_index(&self, l: isize) -> Result<()> {
        if l < -1 || l > self.depth() as isize {
            Err(Error::IndexOutOfRange { index: l, max: self.depth() })
        } else {
            Ok(())
        }
    }

    /// `A_l(S) = S ∩ L_l`, empty at `l = -1` and `l = depth`.
    pub fn active(&self, s: NodeSet, l: isize) -> Result<NodeSet> {
        self.check_index(l)?;
        if l < 0 || l as usize == self.depth() {
            return Ok(NodeSet::EMPTY);
        }
        Ok(s & self.layers[l as usize])
    }

    /// `L₀ ∪ … ∪ L_k` for `k` in `-1..=depth` (clamped to the last layer).
    pub fn prefix_union(&self, k: isize) -> NodeSet {
        if k < 0 {
            return NodeSet::EMPTY;
        }
        let end = (k as usize + 1).min(self.depth());
        self.layers[..end].iter().fold(NodeSet::EMPTY, |a, &b| a | b)
    }

    /// `Ã_l(S) = (L₀ ∪ … ∪ L_l) ∖ A_l(S)`; empty at `l = -1` and all of R at `l = depth`.
    pub fn cumulative_complement(&self, s: NodeSet, l: isize) -> Result<NodeSet> {
        let a = self.active(s, l)?;
        Ok(self.prefix_union(l) - a)
    }

    /// Moves every member of `u` one layer deeper; all other relays stay put.
    ///
    /// The result is not canonicalized: if `u` empties layer 0 the leading empty layer
    /// is kept, and the depth is either unchanged or one more.
    pub fn shift(&self, u: NodeSet) -> Result<Layering> {
        let relays = self.relays();
        if !u.is_subset(relays) {
            return Err(Error::InvalidSubset { subset: u.to_string(), relays: relays.to_string() });
        }
        let mut layers = vec![NodeSet::EMPTY; self.depth() + 1];
        for (l, &layer) in self.layers.iter().enumerate() {
            layers[l] = layers[l] | (layer - u);
            layers[l + 1] = layers[l + 1] | (layer & u);
        }
        if layers.last().is_some_and(|l| l.is_empty()) {
            layers.pop();
        }
        Ok(Layering { layers })
    }

    /// Strips leading empty layers. Interior empty layers are kept.
    pub fn canonicalize(&self) -> Layering {
        let start = self
            .layers
            .iter()
            .position(|l| !l.is_empty())
            .unwrap_or(self.layers.len().saturating_sub(1));
        Layering { layers: self.layers[start..].to_vec() }
    }

    pub fn is_canonical(&self) -> bool {
        self.layers.first().is_none_or(|l| !l.is_empty()) || self.layers.len() <= 1
    }

    /// Blocks of delay with which each relay's compression is decoded: `layer(i) + 1`.
    pub fn decoding_schedule(&self) -> BTreeMap<usize, usize> {
        self.layers
            .iter()
            .enumerate()
            .flat_map(|(l, layer)| layer.nodes().map(move |n| (n, l + 1)))
            .collect()
    }
}

impl fmt::Display for Layering {
    /// Text syntax: layers separated by `|`, nodes by `,`, shallowest first.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (l, layer) in self.layers.iter().enumerate() {
            if l > 0 {
                f.write_str("|")?;
            }
            for (k, n) in layer.nodes().enumerate() {
                if k > 0 {
                    f.write_str(",")?;
                }
                write!(f, "{n}")?;
            }
        }
        Ok(())
    }
}

impl fmt::Debug for Layering {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for (l, layer) in self.layers.iter().enumerate() {
            if l > 0 {
                f.write_str(",")?;
            }
            write!(f, "{layer}")?;
        }
        f.write_str(")")
    }
}

impl FromStr for Layering {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        if text.trim().is_empty() {
            return Err(Error::InvalidLayering("empty layering".into()));
        }
        let mut layers = Vec::new();
        for part in text.split('|') {
            let mut layer = NodeSet::EMPTY;
            if part.trim().is_empty() {
                layers.push(layer);
                continue;
            }
            for tok in part.split(',').map(str::trim) {
                if tok.is_empty() {
                    return Err(Error::InvalidLayering(format!("empty node id in '{part}'")));
                }
                let node: usize = tok
                    .parse()
                    .map_err(|_| Error::InvalidLayering(format!("'{tok}' is not a node id")))?;
                if !(2..2 + crate::nodeset::MAX_RELAYS).contains(&node) {
                    return Err(Error::InvalidLayering(format!("{node} is not a relay node id")));
                }
                if layer.contains(node) {
                    return Err(Error::InvalidLayering(format!("node {node} repeated in a layer")));
                }
                layer = layer.with(node);
            }
            layers.push(layer);
        }
        Ok(Layering { layers })
    }
}

/// Every canonical layering (ordered set partition) of `relays`, ordered by depth and
/// then lexicographically by layer bitmasks.
pub fn enumerate_layerings(relays: NodeSet) -> Result<Vec<Layering>> {
    enumerate_layerings_with_cap(relays, DEFAULT_ENUMERATION_CAP)
}

pub fn enumerate_layerings_with_cap(relays: NodeSet, cap: usize) -> Result<Vec<Layering>> {
    let nodes: Vec<usize> = relays.nodes().collect();
    if nodes.len() > cap {
        return Err(Error::TooManyRelays { count: nodes.len(), cap });
    }
    let mut out = Vec::new();
    for depth in 1..=nodes.len() {
        let mut found = Vec::new();
        let mut assign = vec![0usize; nodes.len()];
        surjections(&nodes, depth, 0, &mut assign, &mut found);
        found.sort_by(|a: &Layering, b| {
            a.layers.iter().map(|l| l.bits()).cmp(b.layers.iter().map(|l| l.bits()))
        });
        out.extend(found);
    }
    Ok(out)
}

fn surjections(
    nodes: &[usize],
    depth: usize,
    k: usize,
    assign: &mut Vec<usize>,
    found: &mut Vec<Layering>,
) {
    if k == nodes.len() {
        let mut layers = vec![NodeSet::EMPTY; depth];
        for (&n, &l) in nodes.iter().zip(assign.iter()) {
            layers[l] = layers[l].with(n);
        }
        if layers.iter().all(|l| !l.is_empty()) {
            found.push(Layering { layers });
        }
        return;
    }
    for l in 0..depth {
        assign[k] = l;
        surjections(nodes, depth, k + 1, assign, found);
    }
}

/// Ordered Bell (Fubini) number: the count of ordered set partitions of `n` items.
pub fn ordered_bell(n: usize) -> u64 {
    // a(n) = Σ_{k=1..n} C(n,k) a(n−k), a(0) = 1
    let mut a = vec![1u64; n + 1];
    for m in 1..=n {
        let mut binom = 1u64;
        let mut total = 0u64;
        for k in 1..=m {
            binom = binom * (m - k + 1) as u64 / k as u64;
            total += binom * a[m - k];
        }
        a[m] = total;
    }
    a[n]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ns(nodes: &[usize]) -> NodeSet {
        NodeSet::from_nodes(nodes.iter().copied())
    }

    fn lay(text: &str) -> Layering {
        text.parse().unwrap()
    }

    #[test]
    fn validation_conditions() {
        let r = ns(&[2, 3]);
        assert!(lay("2|3").validate(r).is_empty());
        assert!(lay("|2,3").validate(r).is_empty());
        assert_eq!(
            lay("2|2,3").validate(r),
            vec![LayeringViolation::Overlap { first: 0, second: 1, shared: ns(&[2]) }]
        );
        assert_eq!(lay("2,3|").validate(r), vec![LayeringViolation::EmptyLast]);
        assert_eq!(lay("2").validate(r), vec![LayeringViolation::Uncovered { missing: ns(&[3]) }]);
        assert_eq!(
            lay("2,3,5").validate(r),
            vec![LayeringViolation::NotRelays { layer: 0, extra: ns(&[5]) }]
        );
        assert_eq!(Layering::new(vec![]).validate(r).len(), 2);
    }

    #[test]
    fn enumeration_small_cases() {
        assert_eq!(enumerate_layerings(ns(&[5])).unwrap(), vec![lay("5")]);
        let two: Vec<String> =
            enumerate_layerings(ns(&[2, 3])).unwrap().iter().map(|l| l.to_string()).collect();
        assert_eq!(two, vec!["2,3", "2|3", "3|2"]);
        let three = enumerate_layerings(ns(&[2, 3, 4])).unwrap();
        assert_eq!(three.len(), 13);
        for n in 1..=5 {
            let count = enumerate_layerings(NodeSet::relays(n)).unwrap().len() as u64;
            assert_eq!(count, ordered_bell(n));
        }
        assert!(matches!(
            enumerate_layerings(NodeSet::relays(7)),
            Err(Error::TooManyRelays { count: 7, cap: 6 })
        ));
    }

    #[test]
    fn ordered_bell_values() {
        assert_eq!((0..7).map(ordered_bell).collect::<Vec<_>>(), vec![1, 1, 3, 13, 75, 541, 4683]);
    }

    #[test]
    fn active_sets() {
        let l = lay("2,4|3");
        assert_eq!(l.active(ns(&[2, 3]), 0).unwrap(), ns(&[2]));
        assert_eq!(l.active(ns(&[2, 3]), -1).unwrap(), NodeSet::EMPTY);
        assert_eq!(l.active(ns(&[2, 3, 4]), 2).unwrap(), NodeSet::EMPTY);
        assert!(matches!(l.active(ns(&[2]), 3), Err(Error::IndexOutOfRange { index: 3, max: 2 })));
        assert!(l.active(ns(&[2]), -2).is_err());
    }

    #[test]
    fn cumulative_complements() {
        let l = lay("2,4|3");
        assert_eq!(l.cumulative_complement(ns(&[3]), 1).unwrap(), ns(&[2, 4]));
        assert_eq!(l.cumulative_complement(ns(&[3]), -1).unwrap(), NodeSet::EMPTY);
        assert_eq!(l.cumulative_complement(ns(&[3]), 2).unwrap(), ns(&[2, 3, 4]));
        assert!(l.cumulative_complement(ns(&[3]), 5).is_err());
    }

    #[test]
    fn shift_examples() {
        let l = lay("2,4|3");
        assert_eq!(l.shift(NodeSet::EMPTY).unwrap(), l);
        let shifted = l.shift(ns(&[2, 4])).unwrap();
        assert_eq!(shifted, lay("|2,3,4"));
        assert_eq!(shifted.canonicalize(), lay("2,3,4"));
        assert_eq!(lay("2,3,4").shift(ns(&[4])).unwrap(), lay("2,3|4"));
        assert!(matches!(l.shift(ns(&[5])), Err(Error::InvalidSubset { .. })));
    }

    #[test]
    fn canonicalize_examples() {
        assert_eq!(lay("|2,3,4").canonicalize(), lay("2,3,4"));
        assert_eq!(lay("2|3").canonicalize(), lay("2|3"));
        assert_eq!(lay("||2|3").canonicalize(), lay("2|3"));
        assert_eq!(lay("2||3").canonicalize(), lay("2||3"));
        assert!(lay("2||3").is_canonical());
        assert!(!lay("|2").is_canonical());
    }

    #[test]
    fn schedules() {
        let s = lay("2|3").decoding_schedule();
        assert_eq!(s.into_iter().collect::<Vec<_>>(), vec![(2, 1), (3, 2)]);
        assert!(lay("2,3,4").decoding_schedule().values().all(|&d| d == 1));
        let s = lay("3|4|2").decoding_schedule();
        assert_eq!((s[&3], s[&4], s[&2]), (1, 2, 3));
    }

    #[test]
    fn text_syntax() {
        let l = lay(" 2 , 4 | 3 ");
        assert_eq!(l.to_string(), "2,4|3");
        assert_eq!(format!("{l:?}"), "({2,4},{3})");
        assert!("2,x".parse::<Layering>().is_err());
        assert!("1|2".parse::<Layering>().is_err());
        assert!("2,2".parse::<Layering>().is_err());
        assert_eq!(serde_json::to_string(&l).unwrap(), "[[2,4],[3]]");
    }
}
