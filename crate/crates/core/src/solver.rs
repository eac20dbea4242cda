//! Layering search: shift the largest violating subset one layer deeper until the
//! rate vector lies inside the current layering's region.
//!
//! Alongside the layering sequence the solver tracks a certified core `Z`: relays all of
//! whose subsets satisfy the current layering's constraints. It starts empty and grows
//! as `Z_{n+1} = (R ∖ U_n) ∪ Z_n`.

use serde::Serialize;
use thiserror::Error;

use crate::error::{Error, Result};
use crate::layering::{enumerate_layerings, Layering};
use crate::nodeset::NodeSet;
use crate::probability::JointPmf;
use crate::region::{check_layered, layered_rhs, RateVector};
use crate::scalar::Scalar;

/// `16 · 2^|R|`.
pub fn default_max_iter(relays: usize) -> usize {
    16usize << relays
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Achieved,
    NotConverged,
}

/// State of one solver iteration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IterationRecord<T> {
    pub iteration: usize,
    /// `L_n` in canonical form.
    pub layering: Layering,
    /// `L_n` as the shift produced it, before leading empty layers were stripped.
    pub pre_canonical: Layering,
    pub violators: Vec<NodeSet>,
    /// The subset shifted at this iteration; `None` on the terminal record.
    #[serde(rename = "U")]
    pub chosen: Option<NodeSet>,
    /// Set when the union of violators did not itself violate.
    pub degenerate: bool,
    /// Certified core `Z_n`.
    #[serde(rename = "Z")]
    pub core: NodeSet,
    /// Whether every subset of `Z_n` satisfies the constraints of `L_n`.
    pub core_certified: bool,
    /// `(subset, slack)` for every nonempty subset, sorted by bitmask.
    pub slacks: Vec<(NodeSet, T)>,
    pub min_slack: T,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub status: Option<SolveStatus>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveTrace<T> {
    pub records: Vec<IterationRecord<T>>,
    pub status: SolveStatus,
}

impl<T: Scalar> SolveTrace<T> {
    pub fn shifts(&self) -> usize {
        self.records.iter().filter(|r| r.chosen.is_some()).count()
    }

    pub fn degenerate(&self) -> bool {
        self.records.iter().any(|r| r.degenerate)
    }

    pub fn cores_certified(&self) -> bool {
        self.records.iter().all(|r| r.core_certified)
    }

    /// `Z_n ⊆ Z_{n+1}` along the trace.
    pub fn core_monotone(&self) -> bool {
        self.records.windows(2).all(|w| w[0].core.is_subset(w[1].core))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution<T> {
    pub layering: Layering,
    pub trace: SolveTrace<T>,
}

#[derive(Debug, Error)]
pub enum SolveError<T: Scalar> {
    #[error("no achieving layering after {} shifts", .0.shifts())]
    NotConverged(SolveTrace<T>),
    #[error(transparent)]
    Input(#[from] Error),
}

/// Subsets of a candidate core that break the layered constraints.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoreReport<T> {
    pub core: NodeSet,
    pub violations: Vec<(NodeSet, T)>,
}

impl<T> CoreReport<T> {
    pub fn certified(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks that every nonempty subset of `core` satisfies the constraints of `layering`.
pub fn verify_core<T: Scalar>(
    joint: &JointPmf<T>,
    layering: &Layering,
    rates: &RateVector<T>,
    core: NodeSet,
    epsilon: T,
) -> Result<CoreReport<T>> {
    if !core.is_subset(joint.relays()) {
        return Err(Error::InvalidSubset { subset: core.to_string(), relays: joint.relays().to_string() });
    }
    let mut violations = Vec::new();
    for s in core.nonempty_subsets() {
        let slack = layered_rhs(joint, layering, s)? - rates.subset_sum(s);
        if slack <= epsilon {
            violations.push((s, slack));
        }
    }
    Ok(CoreReport { core, violations })
}

/// Runs the shift iteration from `start` for at most `max_iter` shifts.
pub fn solve<T: Scalar>(
    joint: &JointPmf<T>,
    rates: &RateVector<T>,
    start: &Layering,
    epsilon: T,
    max_iter: usize,
) -> std::result::Result<Solution<T>, SolveError<T>> {
    rates.check_for(joint.relay_count())?;
    let relays = joint.relays();
    let mut pre = start.clone();
    let mut layering = start.canonicalize();
    let mut core = NodeSet::EMPTY;
    let mut records = Vec::new();

    for iteration in 0..=max_iter {
        let report = check_layered(joint, &layering, rates, epsilon)?;
        let core_certified = verify_core(joint, &layering, rates, core, epsilon)?.certified();
        let slacks: Vec<(NodeSet, T)> = report.entries.iter().map(|e| (e.subset, e.slack)).collect();
        let min_slack = report.min_slack().unwrap_or_else(T::zero);
        let mut record = IterationRecord {
            iteration,
            layering: layering.clone(),
            pre_canonical: pre.clone(),
            violators: report.violators(),
            chosen: None,
            degenerate: false,
            core,
            core_certified,
            slacks,
            min_slack,
            status: None,
        };

        let Some(violator) = report.largest_violator() else {
            record.status = Some(SolveStatus::Achieved);
            records.push(record);
            let trace = SolveTrace { records, status: SolveStatus::Achieved };
            return Ok(Solution { layering, trace });
        };
        if iteration == max_iter {
            record.status = Some(SolveStatus::NotConverged);
            records.push(record);
            return Err(SolveError::NotConverged(SolveTrace { records, status: SolveStatus::NotConverged }));
        }

        record.chosen = Some(violator.set);
        record.degenerate = violator.degenerate;
        records.push(record);

        pre = layering.shift(violator.set)?;
        layering = pre.canonicalize();
        core = (relays - violator.set) | core;
    }
    unreachable!("loop returns on its last iteration")
}

/// Every canonical layering whose region contains `rates`, in enumeration order.
pub fn brute_force_layering<T: Scalar>(
    joint: &JointPmf<T>,
    rates: &RateVector<T>,
    epsilon: T,
) -> Result<Vec<Layering>> {
    let mut out = Vec::new();
    for layering in enumerate_layerings(joint.relays())? {
        if check_layered(joint, &layering, rates, epsilon)?.is_member() {
            out.push(layering);
        }
    }
    Ok(out)
}
