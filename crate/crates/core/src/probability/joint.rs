//! Dense joint distribution with memoized entropy queries.

use std::collections::HashMap;
use std::fmt;
use std::sync::RwLock;

use serde::{Deserialize, Serialize};

use super::spec::{validate_spec, ChannelSpec};
use crate::error::{Error, Result};
use crate::nodeset::{NodeSet, FIRST_RELAY};
use crate::scalar::Scalar;

/// Default cap on the number of joint table entries.
pub const DEFAULT_STATE_CAP: usize = 1 << 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Role {
    /// `X₁`, node 1 only.
    SourceInput,
    /// `Xᵢ` of a relay.
    RelayInput,
    /// `Yᵢ` of a relay.
    RelayObservation,
    /// `Ŷᵢ` of a relay.
    Compression,
    /// `Y_d`, node d only.
    DestObservation,
}

/// A modeled random variable. Role/node consistency is checked by [`JointPmf::var`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Variable {
    pub role: Role,
    pub node: usize,
}

impl Variable {
    pub fn x1() -> Self {
        Variable { role: Role::SourceInput, node: 1 }
    }
    pub fn x(node: usize) -> Self {
        Variable { role: Role::RelayInput, node }
    }
    pub fn y(node: usize) -> Self {
        Variable { role: Role::RelayObservation, node }
    }
    pub fn yhat(node: usize) -> Self {
        Variable { role: Role::Compression, node }
    }
    pub fn yd(d: usize) -> Self {
        Variable { role: Role::DestObservation, node: d }
    }
}

impl fmt::Display for Variable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let n = self.node;
        match self.role {
            Role::SourceInput => write!(f, "X{n}"),
            Role::RelayInput => write!(f, "X{n}"),
            Role::RelayObservation => write!(f, "Y{n}"),
            Role::Compression => write!(f, "Yhat{n}"),
            Role::DestObservation => write!(f, "Y{n}"),
        }
    }
}

/// A set of variables of one joint, as a mask over its canonical variable order.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct VarSet(u64);

impl VarSet {
    pub const EMPTY: VarSet = VarSet(0);

    pub const fn from_mask(mask: u64) -> Self {
        VarSet(mask)
    }
    pub const fn mask(self) -> u64 {
        self.0
    }
    pub fn is_empty(self) -> bool {
        self.0 == 0
    }
    pub fn union(self, other: VarSet) -> VarSet {
        VarSet(self.0 | other.0)
    }
    pub fn intersection(self, other: VarSet) -> VarSet {
        VarSet(self.0 & other.0)
    }
}

impl std::ops::BitOr for VarSet {
    type Output = VarSet;
    fn bitor(self, rhs: VarSet) -> VarSet {
        self.union(rhs)
    }
}

/// Product-form joint distribution over `(X₁, {Xᵢ, Yᵢ, Ŷᵢ}ᵢ∈R, Y_d)`.
///
/// The table is dense, row-major with the last variable fastest. Relays appear in
/// increasing node order. Immutable after construction; entropy queries are memoized
/// by variable mask behind a lock and may run from many threads.
pub struct JointPmf<T: Scalar> {
    d: usize,
    vars: Vec<Variable>,
    alphabets: Vec<usize>,
    table: Vec<T>,
    cache: RwLock<HashMap<u64, T>>,
}

impl<T: Scalar> Clone for JointPmf<T> {
    fn clone(&self) -> Self {
        JointPmf {
            d: self.d,
            vars: self.vars.clone(),
            alphabets: self.alphabets.clone(),
            table: self.table.clone(),
            cache: RwLock::new(HashMap::new()),
        }
    }
}

impl<T: Scalar> fmt::Debug for JointPmf<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("JointPmf")
            .field("d", &self.d)
            .field("alphabets", &self.alphabets)
            .field("entries", &self.table.len())
            .finish()
    }
}

fn var_position(d: usize, v: Variable) -> Option<usize> {
    let relays = d - 2;
    let is_relay = v.node >= FIRST_RELAY && v.node < d;
    let k = v.node.wrapping_sub(FIRST_RELAY);
    match v.role {
        Role::SourceInput if v.node == 1 => Some(0),
        Role::RelayInput if is_relay => Some(1 + 3 * k),
        Role::RelayObservation if is_relay => Some(2 + 3 * k),
        Role::Compression if is_relay => Some(3 + 3 * k),
        Role::DestObservation if v.node == d => Some(1 + 3 * relays),
        _ => None,
    }
}

impl<T: Scalar> JointPmf<T> {
    /// Multiplies all factors of `spec` over the full assignment space.
    pub fn build(spec: &ChannelSpec) -> Result<Self> {
        Self::build_with_cap(spec, DEFAULT_STATE_CAP)
    }

    pub fn build_with_cap(spec: &ChannelSpec, cap: usize) -> Result<Self> {
        let violations = validate_spec(spec);
        if !violations.is_empty() {
            return Err(Error::InvalidSpec(violations));
        }
        let d = spec.d;
        let relays = spec.sorted_relays();

        let mut vars = vec![Variable::x1()];
        let mut alphabets = vec![spec.source.alphabet];
        for r in &relays {
            vars.extend([Variable::x(r.node), Variable::y(r.node), Variable::yhat(r.node)]);
            alphabets.extend([r.x_alphabet, r.y_alphabet, r.yhat_alphabet]);
        }
        vars.push(Variable::yd(d));
        alphabets.push(spec.destination.y_alphabet);
        if vars.len() > 64 {
            return Err(Error::StateTooLarge { entries: u128::MAX, cap });
        }

        let entries = alphabets.iter().fold(1u128, |acc, &a| acc.saturating_mul(a as u128));
        if entries > cap as u128 {
            return Err(Error::StateTooLarge { entries, cap });
        }
        let entries = entries as usize;

        // Strides into the channel table for each joint variable (0 when unused).
        let chan_shape = spec.channel_shape();
        let mut chan_strides = vec![0usize; chan_shape.len()];
        let mut acc = 1;
        for k in (0..chan_shape.len()).rev() {
            chan_strides[k] = acc;
            acc *= chan_shape[k];
        }
        let m = relays.len();
        let mut var_chan_stride = vec![0usize; vars.len()];
        var_chan_stride[0] = chan_strides[0];
        for k in 0..m {
            var_chan_stride[1 + 3 * k] = chan_strides[1 + k];
            var_chan_stride[2 + 3 * k] = chan_strides[1 + m + k];
        }
        var_chan_stride[vars.len() - 1] = chan_strides[2 * m + 1];

        let mut table = Vec::with_capacity(entries);
        let mut digits = vec![0usize; vars.len()];
        for _ in 0..entries {
            let mut p = spec.source.p_x1.values[digits[0]];
            let mut chan_idx = 0;
            for (k, r) in relays.iter().enumerate() {
                let (x, y, yh) = (digits[1 + 3 * k], digits[2 + 3 * k], digits[3 + 3 * k]);
                p *= r.p_x.values[x];
                p *= r.p_yhat_given_x_y.values[(x * r.y_alphabet + y) * r.yhat_alphabet + yh];
            }
            for (v, &digit) in digits.iter().enumerate() {
                chan_idx += digit * var_chan_stride[v];
            }
            p *= spec.channel.values[chan_idx];
            table.push(T::of(p));

            for v in (0..digits.len()).rev() {
                digits[v] += 1;
                if digits[v] < alphabets[v] {
                    break;
                }
                digits[v] = 0;
            }
        }

        Ok(JointPmf { d, vars, alphabets, table, cache: RwLock::new(HashMap::new()) })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn relays(&self) -> NodeSet {
        NodeSet::relays(self.d - 2)
    }

    pub fn relay_count(&self) -> usize {
        self.d - 2
    }

    /// Variables in canonical table order.
    pub fn variables(&self) -> &[Variable] {
        &self.vars
    }

    pub fn alphabets(&self) -> &[usize] {
        &self.alphabets
    }

    pub fn table(&self) -> &[T] {
        &self.table
    }

    pub fn total_mass(&self) -> T {
        self.table.iter().copied().sum()
    }

    fn all_mask(&self) -> u64 {
        if self.vars.len() == 64 {
            u64::MAX
        } else {
            (1u64 << self.vars.len()) - 1
        }
    }

    /// Resolves a variable of this network.
    pub fn var(&self, v: Variable) -> Result<VarSet> {
        var_position(self.d, v)
            .map(|k| VarSet(1 << k))
            .ok_or(Error::UnknownVariable(0))
    }

    pub fn var_set(&self, vars: &[Variable]) -> Result<VarSet> {
        vars.iter().try_fold(VarSet::EMPTY, |acc, &v| Ok(acc | self.var(v)?))
    }

    pub fn x1(&self) -> VarSet {
        VarSet(1)
    }

    pub fn yd(&self) -> VarSet {
        VarSet(1 << (self.vars.len() - 1))
    }

    fn relay_vars(&self, s: NodeSet, offset: usize) -> VarSet {
        debug_assert!(s.is_subset(self.relays()));
        VarSet(
            s.nodes()
                .map(|n| 1u64 << (offset + 3 * (n - FIRST_RELAY)))
                .fold(0, |a, b| a | b),
        )
    }

    /// `X_S` for a relay subset.
    pub fn xs(&self, s: NodeSet) -> VarSet {
        self.relay_vars(s, 1)
    }

    /// `Y_S` for a relay subset.
    pub fn ys(&self, s: NodeSet) -> VarSet {
        self.relay_vars(s, 2)
    }

    /// `Ŷ_S` for a relay subset.
    pub fn yhats(&self, s: NodeSet) -> VarSet {
        self.relay_vars(s, 3)
    }

    fn check(&self, a: VarSet) -> Result<()> {
        if a.0 & !self.all_mask() != 0 {
            Err(Error::UnknownVariable(a.0))
        } else {
            Ok(())
        }
    }

    fn check_relays(&self, s: NodeSet) -> Result<()> {
        if s.is_subset(self.relays()) {
            Ok(())
        } else {
            Err(Error::InvalidSubset { subset: s.to_string(), relays: self.relays().to_string() })
        }
    }

    /// Marginal table over the members of `a`, in canonical order.
    pub fn marginal(&self, a: VarSet) -> Result<Vec<T>> {
        self.check(a)?;
        let n = self.vars.len();
        let mut mstride = vec![0usize; n];
        let mut size = 1usize;
        for k in (0..n).rev() {
            if a.0 & (1 << k) != 0 {
                mstride[k] = size;
                size *= self.alphabets[k];
            }
        }
        let mut out = vec![T::zero(); size];
        let mut digits = vec![0usize; n];
        let mut idx = 0usize;
        for &p in &self.table {
            out[idx] = out[idx] + p;
            for k in (0..n).rev() {
                digits[k] += 1;
                idx += mstride[k];
                if digits[k] < self.alphabets[k] {
                    break;
                }
                digits[k] = 0;
                idx -= mstride[k] * self.alphabets[k];
            }
        }
        Ok(out)
    }

    /// Shannon entropy in bits of the marginal on `a`. `H(∅) = 0`.
    pub fn entropy(&self, a: VarSet) -> Result<T> {
        self.check(a)?;
        if a.is_empty() {
            return Ok(T::zero());
        }
        if let Some(&h) = self.cache.read().expect("entropy cache poisoned").get(&a.0) {
            return Ok(h);
        }
        let floor = T::of(T::ZERO_MASS);
        let h = self
            .marginal(a)?
            .into_iter()
            .filter(|&p| p > floor)
            .map(|p| -p * p.log2())
            .sum::<T>()
            .max(T::zero());
        self.cache.write().expect("entropy cache poisoned").insert(a.0, h);
        Ok(h)
    }

    /// `H(A | B) = H(A ∪ B) − H(B)`.
    pub fn cond_entropy(&self, a: VarSet, b: VarSet) -> Result<T> {
        Ok(self.entropy(a | b)? - self.entropy(b)?)
    }

    /// `I(A; B | C) = H(A | C) − H(A | B ∪ C)`, clamped at zero within 1e−9 below.
    pub fn mutual_info(&self, a: VarSet, b: VarSet, c: VarSet) -> Result<T> {
        let v = self.cond_entropy(a, c)? - self.cond_entropy(a, b | c)?;
        if v < T::zero() && v > T::of(-1e-9) {
            Ok(T::zero())
        } else {
            Ok(v)
        }
    }

    /// `Σ_{i∈S} H(Xᵢ Ŷᵢ)`.
    pub fn pair_entropy_sum(&self, s: NodeSet) -> Result<T> {
        self.check_relays(s)?;
        s.nodes()
            .map(|n| {
                let one = NodeSet::single(n);
                self.entropy(self.xs(one) | self.yhats(one))
            })
            .sum()
    }
}
