//! Compression-rate regions: the per-layering region, the outer region, relay
//! compression floors and the mutual-information forms of the outer constraints.
//!
//! All constraints are strict (`R̂_S < rhs(S)`) and range over nonempty relay subsets.
//! Numerically a subset is satisfied when `rhs − R̂_S > ε`, so satisfied and violated
//! partition every case.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::layering::Layering;
use crate::nodeset::{NodeSet, FIRST_RELAY};
use crate::probability::{JointPmf, VarSet};
use crate::scalar::Scalar;

/// Per-relay compression rates `R̂ᵢ` in bits, indexed by relay node.
#[derive(Debug, Clone, PartialEq)]
pub struct RateVector<T> {
    rates: Vec<T>,
}

#[derive(Serialize, Deserialize)]
struct RatesFile {
    rates: BTreeMap<String, f64>,
}

impl<T: Scalar> RateVector<T> {
    /// Rates for relays `2, 3, …` in order.
    pub fn new(rates: Vec<T>) -> Self {
        RateVector { rates }
    }

    pub fn zeros(relays: usize) -> Self {
        RateVector { rates: vec![T::zero(); relays] }
    }

    pub fn relay_count(&self) -> usize {
        self.rates.len()
    }

    pub fn as_slice(&self) -> &[T] {
        &self.rates
    }

    pub fn get(&self, node: usize) -> Option<T> {
        node.checked_sub(FIRST_RELAY).and_then(|k| self.rates.get(k).copied())
    }

    pub fn set(&mut self, node: usize, rate: T) -> Result<()> {
        let slot = node
            .checked_sub(FIRST_RELAY)
            .and_then(|k| self.rates.get_mut(k))
            .ok_or(Error::UnknownNode(node))?;
        *slot = rate;
        Ok(())
    }

    /// `R̂_S = Σ_{i∈S} R̂ᵢ`.
    pub fn subset_sum(&self, s: NodeSet) -> T {
        s.nodes().filter_map(|n| self.get(n)).sum()
    }

    /// Rejects negative or non-finite rates and a relay count that does not match.
    pub fn check_for(&self, relays: usize) -> Result<()> {
        if self.rates.len() != relays {
            return Err(Error::InvalidRates(format!(
                "expected {relays} relay rates, got {}",
                self.rates.len()
            )));
        }
        for (k, &r) in self.rates.iter().enumerate() {
            if !r.is_finite() || r < T::zero() {
                return Err(Error::InvalidRates(format!(
                    "rate of node {} is {r}; rates must be finite and nonnegative",
                    k + FIRST_RELAY
                )));
            }
        }
        Ok(())
    }

    /// Parses `{"rates": {"<node>": <bits>, …}}`; every relay `2..d` must appear once.
    pub fn from_json(text: &str, relays: usize) -> Result<Self> {
        let file: RatesFile = serde_json::from_str(text).map_err(|e| {
            Error::InvalidRates(format!("line {}, column {}: {e}", e.line(), e.column()))
        })?;
        let mut rates = vec![None; relays];
        for (key, value) in file.rates {
            let node: usize = key
                .trim()
                .parse()
                .map_err(|_| Error::InvalidRates(format!("'{key}' is not a node id")))?;
            let slot = node
                .checked_sub(FIRST_RELAY)
                .and_then(|k| rates.get_mut(k))
                .ok_or_else(|| Error::InvalidRates(format!("node {node} is not a relay")))?;
            *slot = Some(T::of(value));
        }
        let rates = rates
            .into_iter()
            .enumerate()
            .map(|(k, r)| {
                r.ok_or_else(|| Error::InvalidRates(format!("missing rate for node {}", k + FIRST_RELAY)))
            })
            .collect::<Result<Vec<T>>>()?;
        let v = RateVector { rates };
        v.check_for(relays)?;
        Ok(v)
    }

    pub fn to_json(&self) -> String {
        let file = RatesFile {
            rates: self
                .rates
                .iter()
                .enumerate()
                .map(|(k, r)| ((k + FIRST_RELAY).to_string(), r.as_f64()))
                .collect(),
        };
        serde_json::to_string_pretty(&file).expect("rates serialize")
    }
}

/// One constraint `R̂_S < rhs(S)` evaluated at a rate vector.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConstraintEntry<T> {
    pub subset: NodeSet,
    pub rhs: T,
    pub rate_sum: T,
    pub slack: T,
    pub satisfied: bool,
}

/// Every nonempty subset's constraint, sorted by bitmask.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConstraintReport<T> {
    pub epsilon: T,
    pub entries: Vec<ConstraintEntry<T>>,
}

/// The subset selected to shift a layering.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Violator {
    pub set: NodeSet,
    /// The union of violators did not itself violate; `set` is the fallback choice.
    pub degenerate: bool,
}

impl<T: Scalar> ConstraintReport<T> {
    /// Builds a report from per-subset right-hand sides.
    pub fn from_rhs(rhs: Vec<(NodeSet, T)>, rates: &RateVector<T>, epsilon: T) -> Self {
        let entries = rhs
            .into_iter()
            .map(|(subset, rhs)| {
                let rate_sum = rates.subset_sum(subset);
                let slack = rhs - rate_sum;
                ConstraintEntry { subset, rhs, rate_sum, slack, satisfied: slack > epsilon }
            })
            .collect();
        ConstraintReport { epsilon, entries }
    }

    pub fn is_member(&self) -> bool {
        self.entries.iter().all(|e| e.satisfied)
    }

    pub fn violators(&self) -> Vec<NodeSet> {
        self.entries.iter().filter(|e| !e.satisfied).map(|e| e.subset).collect()
    }

    pub fn entry(&self, s: NodeSet) -> Option<&ConstraintEntry<T>> {
        self.entries.binary_search_by_key(&s, |e| e.subset).ok().map(|k| &self.entries[k])
    }

    pub fn min_slack(&self) -> Option<T> {
        self.entries.iter().map(|e| e.slack).reduce(T::min)
    }

    /// Union of all violating subsets, if that union itself violates. Otherwise a
    /// maximum-cardinality violator with the smallest bitmask, flagged degenerate.
    pub fn largest_violator(&self) -> Option<Violator> {
        let violators = self.violators();
        if violators.is_empty() {
            return None;
        }
        let union = violators.iter().fold(NodeSet::EMPTY, |a, &b| a | b);
        if self.entry(union).is_some_and(|e| !e.satisfied) {
            return Some(Violator { set: union, degenerate: false });
        }
        let best = violators
            .iter()
            .copied()
            .max_by(|a, b| a.len().cmp(&b.len()).then(b.bits().cmp(&a.bits())))
            .expect("nonempty");
        Some(Violator { set: best, degenerate: true })
    }
}

/// Arguments of the layered conditional entropy
/// `H(X_{x_active} Ŷ_{yhat_active} | X_{x_cond} Ŷ_{yhat_cond} Y_d)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct HArgs {
    pub x_active: NodeSet,
    pub yhat_active: NodeSet,
    pub x_cond: NodeSet,
    pub yhat_cond: NodeSet,
}

impl HArgs {
    /// Arguments of the `l`-th layered term for subset `s`.
    pub fn layered(layering: &Layering, s: NodeSet, l: usize) -> Result<Self> {
        let l = l as isize;
        Ok(HArgs {
            x_active: layering.active(s, l)?,
            yhat_active: layering.active(s, l - 1)?,
            x_cond: layering.cumulative_complement(s, l)?,
            yhat_cond: layering.cumulative_complement(s, l - 1)?,
        })
    }
}

fn check_subset<T: Scalar>(joint: &JointPmf<T>, s: NodeSet) -> Result<()> {
    if s.is_subset(joint.relays()) {
        Ok(())
    } else {
        Err(Error::InvalidSubset { subset: s.to_string(), relays: joint.relays().to_string() })
    }
}

fn check_nonempty<T: Scalar>(joint: &JointPmf<T>, s: NodeSet) -> Result<()> {
    if s.is_empty() {
        return Err(Error::EmptySubset);
    }
    check_subset(joint, s)
}

fn check_layering<T: Scalar>(joint: &JointPmf<T>, layering: &Layering) -> Result<()> {
    let violations = layering.validate(joint.relays());
    if violations.is_empty() {
        Ok(())
    } else {
        let msg = violations.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; ");
        Err(Error::InvalidLayering(format!("{layering:?}: {msg}")))
    }
}

/// Evaluates `H(X_{B_l} Ŷ_{B_{l−1}} | X_{B̃_l} Ŷ_{B̃_{l−1}} Y_d)` for explicit sets.
pub fn h_eval<T: Scalar>(joint: &JointPmf<T>, args: HArgs) -> Result<T> {
    for s in [args.x_active, args.yhat_active, args.x_cond, args.yhat_cond] {
        check_subset(joint, s)?;
    }
    let target = joint.xs(args.x_active) | joint.yhats(args.yhat_active);
    let given = joint.xs(args.x_cond) | joint.yhats(args.yhat_cond) | joint.yd();
    joint.cond_entropy(target, given)
}

/// The `l`-th term of the layered constraint for subset `s`, `l ∈ 0..=depth`.
pub fn h_term<T: Scalar>(joint: &JointPmf<T>, layering: &Layering, s: NodeSet, l: usize) -> Result<T> {
    if l > layering.depth() {
        return Err(Error::IndexOutOfRange { index: l as isize, max: layering.depth() });
    }
    h_eval(joint, HArgs::layered(layering, s, l)?)
}

/// `Σ_{i∈S} H(Xᵢ Ŷᵢ) − Σ_{l=0}^{|L|} h_term(l)`.
pub fn layered_rhs<T: Scalar>(joint: &JointPmf<T>, layering: &Layering, s: NodeSet) -> Result<T> {
    check_nonempty(joint, s)?;
    let mut rhs = joint.pair_entropy_sum(s)?;
    for l in 0..=layering.depth() {
        rhs = rhs - h_term(joint, layering, s, l)?;
    }
    Ok(rhs)
}

/// `Σ_{i∈S} H(Xᵢ Ŷᵢ) − H(X_S Ŷ_S | X_{R∖S} Ŷ_{R∖S} Y_d)`.
pub fn boundary_rhs<T: Scalar>(joint: &JointPmf<T>, s: NodeSet) -> Result<T> {
    check_nonempty(joint, s)?;
    let rest = joint.relays() - s;
    let h = h_eval(joint, HArgs { x_active: s, yhat_active: s, x_cond: rest, yhat_cond: rest })?;
    Ok(joint.pair_entropy_sum(s)? - h)
}

fn report<T, F>(joint: &JointPmf<T>, rates: &RateVector<T>, epsilon: T, rhs: F) -> Result<ConstraintReport<T>>
where
    T: Scalar,
    F: Fn(NodeSet) -> Result<T> + Sync,
{
    rates.check_for(joint.relay_count())?;
    let subsets: Vec<NodeSet> = joint.relays().nonempty_subsets().collect();
    let values = subsets
        .par_iter()
        .map(|&s| rhs(s).map(|v| (s, v)))
        .collect::<Result<Vec<_>>>()?;
    Ok(ConstraintReport::from_rhs(values, rates, epsilon))
}

/// Membership of `rates` in the region of `layering`.
pub fn check_layered<T: Scalar>(
    joint: &JointPmf<T>,
    layering: &Layering,
    rates: &RateVector<T>,
    epsilon: T,
) -> Result<ConstraintReport<T>> {
    check_layering(joint, layering)?;
    report(joint, rates, epsilon, |s| layered_rhs(joint, layering, s))
}

/// Membership of `rates` in the outer region.
pub fn check_outer<T: Scalar>(
    joint: &JointPmf<T>,
    rates: &RateVector<T>,
    epsilon: T,
) -> Result<ConstraintReport<T>> {
    report(joint, rates, epsilon, |s| boundary_rhs(joint, s))
}

/// The largest violating subset of the layered constraints, or `None` for a member.
pub fn largest_violator<T: Scalar>(
    joint: &JointPmf<T>,
    layering: &Layering,
    rates: &RateVector<T>,
    epsilon: T,
) -> Result<Option<Violator>> {
    Ok(check_layered(joint, layering, rates, epsilon)?.largest_violator())
}

/// Per-relay compression floors `I(Ŷᵢ; Yᵢ | Xᵢ)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Floors<T> {
    pub per_relay: Vec<(usize, T)>,
}

impl<T: Scalar> Floors<T> {
    pub fn get(&self, node: usize) -> Option<T> {
        self.per_relay.iter().find(|(n, _)| *n == node).map(|&(_, v)| v)
    }

    pub fn subset_sum(&self, s: NodeSet) -> T {
        self.per_relay.iter().filter(|(n, _)| s.contains(*n)).map(|&(_, v)| v).sum()
    }
}

pub fn compression_floor<T: Scalar>(joint: &JointPmf<T>) -> Result<Floors<T>> {
    let per_relay = joint
        .relays()
        .nodes()
        .map(|n| {
            let one = NodeSet::single(n);
            joint
                .mutual_info(joint.yhats(one), joint.ys(one), joint.xs(one))
                .map(|v| (n, v))
        })
        .collect::<Result<_>>()?;
    Ok(Floors { per_relay })
}

/// `I(X₁; Ŷ_R Y_d | X_R)` at the supplied input distribution.
pub fn source_rate<T: Scalar>(joint: &JointPmf<T>) -> Result<T> {
    let r = joint.relays();
    joint.mutual_info(joint.x1(), joint.yhats(r) | joint.yd(), joint.xs(r))
}

/// Which right-hand side the mutual-information gap uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MiVariant {
    /// `I(X_S; Ŷ_{R∖S} Y_d | X_{R∖S})`, the endpoint of the derivation chain.
    Joint,
    /// `I(X_S; Ŷ_{R∖S} | X_{R∖S} Y_d)`, with `Y_d` in the conditioning.
    Conditioned,
}

/// `rhs − I(Ŷ_S; Y_S | X_R Ŷ_{R∖S} Y_d)` for the chosen right-hand side.
pub fn mi_gap<T: Scalar>(joint: &JointPmf<T>, s: NodeSet, variant: MiVariant) -> Result<T> {
    check_nonempty(joint, s)?;
    let r = joint.relays();
    let rest = r - s;
    let lhs = joint.mutual_info(
        joint.yhats(s),
        joint.ys(s),
        joint.xs(r) | joint.yhats(rest) | joint.yd(),
    )?;
    let rhs = match variant {
        MiVariant::Joint => joint.mutual_info(joint.xs(s), joint.yhats(rest) | joint.yd(), joint.xs(rest))?,
        MiVariant::Conditioned => {
            joint.mutual_info(joint.xs(s), joint.yhats(rest), joint.xs(rest) | joint.yd())?
        }
    };
    Ok(rhs - lhs)
}

/// The nine `rhs − lhs` gaps of the chain that turns the floor/outer-bound window into
/// the mutual-information form. Under the product form every step is an equality, so
/// all nine agree.
pub fn window_chain_gaps<T: Scalar>(joint: &JointPmf<T>, s: NodeSet) -> Result<[T; 9]> {
    check_nonempty(joint, s)?;
    let r = joint.relays();
    let rest = r - s;
    let h = |a: VarSet, b: VarSet| joint.cond_entropy(a, b);
    let none = VarSet::EMPTY;
    let (xs, ys, yhs) = (joint.xs(s), joint.ys(s), joint.yhats(s));
    let (xr, xrest, yhrest, yd) = (joint.xs(r), joint.xs(rest), joint.yhats(rest), joint.yd());

    let mut floor_sum = T::zero();
    let mut yhat_given_x = T::zero();
    let mut yhat_given_xy = T::zero();
    let mut x_sum = T::zero();
    for n in s.nodes() {
        let one = NodeSet::single(n);
        let (x, y, yh) = (joint.xs(one), joint.ys(one), joint.yhats(one));
        floor_sum = floor_sum + joint.mutual_info(yh, y, x)?;
        yhat_given_x = yhat_given_x + h(yh, x)?;
        yhat_given_xy = yhat_given_xy + h(yh, x | y)?;
        x_sum = x_sum + h(x, none)?;
    }
    let pair_sum = joint.pair_entropy_sum(s)?;
    let joint_cond = h(xs | yhs, xrest | yhrest | yd)?;
    let outer = pair_sum - joint_cond;
    let yhs_given_xsys = h(yhs, xs | ys)?;
    let x_s = h(xs, none)?;
    let yhs_given_all = h(yhs, xr | yhrest | yd)?;
    let xs_given_rest = h(xs, xrest | yhrest | yd)?;

    let gap1 = outer - floor_sum;
    let gap2 = outer - (yhat_given_x - yhat_given_xy);
    let gap3 = (pair_sum - yhat_given_x) - (joint_cond - yhat_given_xy);
    let gap4 = x_sum - (joint_cond - yhat_given_xy);
    let gap5 = x_s - (joint_cond - yhs_given_xsys);
    let gap6 = x_s - (yhs_given_all + xs_given_rest - yhs_given_xsys);
    let gap7 = (x_s - xs_given_rest) - (yhs_given_all - yhs_given_xsys);
    let gap8 = (h(xs, xrest)? - xs_given_rest) - (yhs_given_all - h(yhs, xr | ys | yhrest | yd)?);
    let gap9 = mi_gap(joint, s, MiVariant::Joint)?;
    Ok([gap1, gap2, gap3, gap4, gap5, gap6, gap7, gap8, gap9])
}
