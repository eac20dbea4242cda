//! H-representations of the compression-rate regions, brute-force vertex enumeration
//! in up to three dimensions, and the exported atlas of all layering regions.
//!
//! Regions are open; vertices are those of the closure intersected with the
//! nonnegative orthant.

use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::layering::{enumerate_layerings, Layering, DEFAULT_ENUMERATION_CAP};
use crate::nodeset::NodeSet;
use crate::probability::JointPmf;
use crate::region::{boundary_rhs, layered_rhs};
use crate::scalar::Scalar;

/// Tolerance for vertex feasibility and deduplication.
pub const VERTEX_TOL: f64 = 1e-9;

/// Largest dimension supported by [`enumerate_vertices`].
pub const MAX_VERTEX_DIMENSION: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Sense {
    /// `coefficients · R̂ < rhs`
    #[serde(rename = "lt")]
    StrictLess,
}

/// `Σ_{i∈S} R̂ᵢ < rhs`, with `coefficients` the 0/1 indicator of `S` over the relays.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HalfSpace<T> {
    pub subset: NodeSet,
    pub coefficients: Vec<u8>,
    pub rhs: T,
    pub sense: Sense,
}

impl<T: Scalar> HalfSpace<T> {
    fn new(relays: NodeSet, subset: NodeSet, rhs: T) -> Self {
        let coefficients = relays.nodes().map(|n| subset.contains(n) as u8).collect();
        HalfSpace { subset, coefficients, rhs, sense: Sense::StrictLess }
    }

    fn lhs(&self, point: &[T]) -> T {
        self.coefficients
            .iter()
            .zip(point)
            .filter(|(&c, _)| c != 0)
            .map(|(_, &x)| x)
            .sum()
    }
}

fn hrep_with<T, F>(joint: &JointPmf<T>, rhs: F) -> Result<Vec<HalfSpace<T>>>
where
    T: Scalar,
    F: Fn(NodeSet) -> Result<T>,
{
    let relays = joint.relays();
    relays
        .nonempty_subsets()
        .map(|s| Ok(HalfSpace::new(relays, s, rhs(s)?)))
        .collect()
}

/// One half-space per nonempty relay subset, right-hand sides from the layered constraints.
pub fn h_rep<T: Scalar>(joint: &JointPmf<T>, layering: &Layering) -> Result<Vec<HalfSpace<T>>> {
    let violations = layering.validate(joint.relays());
    if !violations.is_empty() {
        return Err(Error::InvalidLayering(format!("{layering:?}")));
    }
    hrep_with(joint, |s| layered_rhs(joint, layering, s))
}

/// One half-space per nonempty relay subset, right-hand sides from the outer bound.
pub fn outer_h_rep<T: Scalar>(joint: &JointPmf<T>) -> Result<Vec<HalfSpace<T>>> {
    hrep_with(joint, |s| boundary_rhs(joint, s))
}

/// Solves the square system `rows · x = rhs` by Gaussian elimination with partial
/// pivoting; `None` when singular.
fn solve_square(mut rows: Vec<Vec<f64>>, mut rhs: Vec<f64>) -> Option<Vec<f64>> {
    let n = rhs.len();
    for col in 0..n {
        let pivot = (col..n).max_by(|&a, &b| rows[a][col].abs().total_cmp(&rows[b][col].abs()))?;
        if rows[pivot][col].abs() < 1e-12 {
            return None;
        }
        rows.swap(col, pivot);
        rhs.swap(col, pivot);
        let pivot_row = rows[col].clone();
        let pivot_rhs = rhs[col];
        for r in (0..n).filter(|&r| r != col) {
            let f = rows[r][col] / pivot_row[col];
            if f != 0.0 {
                for (x, p) in rows[r][col..].iter_mut().zip(&pivot_row[col..]) {
                    *x -= f * p;
                }
                rhs[r] -= f * pivot_rhs;
            }
        }
    }
    Some((0..n).map(|k| rhs[k] / rows[k][k]).collect())
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, k, &mut Vec::new(), &mut out);
    out
}

/// Vertices of `{R̂ ≥ 0 : every closed constraint}` for `dimension ≤ 3`, sorted
/// lexicographically and deduplicated within [`VERTEX_TOL`].
///
/// Every choice of `dimension` hyperplanes among the constraints and the coordinate
/// planes is intersected; feasible intersection points are kept.
pub fn enumerate_vertices<T: Scalar>(hrep: &[HalfSpace<T>], dimension: usize) -> Result<Vec<Vec<T>>> {
    if dimension > MAX_VERTEX_DIMENSION {
        return Err(Error::DimensionTooHigh(dimension));
    }
    if let Some(h) = hrep.iter().find(|h| h.coefficients.len() != dimension) {
        return Err(Error::InvalidSubset {
            subset: h.subset.to_string(),
            relays: format!("{dimension} dimensions"),
        });
    }
    if dimension == 0 {
        return Ok(vec![Vec::new()]);
    }

    let mut planes: Vec<(Vec<f64>, f64)> = hrep
        .iter()
        .map(|h| (h.coefficients.iter().map(|&c| c as f64).collect(), h.rhs.as_f64()))
        .collect();
    for j in 0..dimension {
        let mut e = vec![0.0; dimension];
        e[j] = 1.0;
        planes.push((e, 0.0));
    }

    let feasible = |x: &[f64]| {
        x.iter().all(|&v| v >= -VERTEX_TOL)
            && hrep.iter().all(|h| {
                let lhs: f64 = h.coefficients.iter().zip(x).map(|(&c, &v)| c as f64 * v).sum();
                lhs <= h.rhs.as_f64() + VERTEX_TOL
            })
    };

    let mut vertices: Vec<Vec<f64>> = Vec::new();
    for combo in combinations(planes.len(), dimension) {
        let rows = combo.iter().map(|&k| planes[k].0.clone()).collect();
        let rhs = combo.iter().map(|&k| planes[k].1).collect();
        let Some(mut x) = solve_square(rows, rhs) else { continue };
        for v in &mut x {
            if v.abs() < 1e-12 {
                *v = 0.0;
            }
        }
        if !feasible(&x) {
            continue;
        }
        let dup = vertices
            .iter()
            .any(|v| v.iter().zip(&x).all(|(a, b)| (a - b).abs() <= VERTEX_TOL));
        if !dup {
            vertices.push(x);
        }
    }
    vertices.sort_by(|a, b| {
        a.iter()
            .zip(b)
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    Ok(vertices.into_iter().map(|v| v.into_iter().map(T::of).collect()).collect())
}

/// Whether `point` satisfies every closed constraint and the orthant within `tol`.
pub fn in_closure<T: Scalar>(hrep: &[HalfSpace<T>], point: &[T], tol: T) -> bool {
    point.iter().all(|&x| x >= -tol) && hrep.iter().all(|h| h.lhs(point) <= h.rhs + tol)
}

/// Region of one canonical layering.
#[derive(Debug, Clone, PartialEq)]
pub struct AtlasEntry<T> {
    pub layering: Layering,
    pub halfspaces: Vec<HalfSpace<T>>,
    pub vertices: Option<Vec<Vec<T>>>,
}

/// The outer region together with every canonical layering's region.
#[derive(Debug, Clone, PartialEq)]
pub struct Atlas<T> {
    pub channel_digest: String,
    pub dimension: usize,
    pub outer: Vec<HalfSpace<T>>,
    pub outer_vertices: Option<Vec<Vec<T>>>,
    pub layerings: Vec<AtlasEntry<T>>,
}

/// SHA-256 over `d`, the alphabet sizes and the joint table as little-endian `f64`.
pub fn channel_digest<T: Scalar>(joint: &JointPmf<T>) -> String {
    let mut h = Sha256::new();
    h.update((joint.d() as u64).to_le_bytes());
    for &a in joint.alphabets() {
        h.update((a as u64).to_le_bytes());
    }
    for &p in joint.table() {
        h.update(p.as_f64().to_le_bytes());
    }
    hex::encode(h.finalize())
}

pub fn export_atlas<T: Scalar>(joint: &JointPmf<T>, with_vertices: bool) -> Result<Atlas<T>> {
    let dimension = joint.relay_count();
    if dimension > DEFAULT_ENUMERATION_CAP {
        return Err(Error::TooManyRelays { count: dimension, cap: DEFAULT_ENUMERATION_CAP });
    }
    if with_vertices && dimension > MAX_VERTEX_DIMENSION {
        return Err(Error::DimensionTooHigh(dimension));
    }
    let vertices = |hrep: &[HalfSpace<T>]| -> Result<Option<Vec<Vec<T>>>> {
        if with_vertices {
            enumerate_vertices(hrep, dimension).map(Some)
        } else {
            Ok(None)
        }
    };
    let outer = outer_h_rep(joint)?;
    let outer_vertices = vertices(&outer)?;
    let layerings = enumerate_layerings(joint.relays())?
        .into_par_iter()
        .map(|layering| {
            let halfspaces = h_rep(joint, &layering)?;
            let vertices = vertices(&halfspaces)?;
            Ok(AtlasEntry { layering, halfspaces, vertices })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Atlas { channel_digest: channel_digest(joint), dimension, outer, outer_vertices, layerings })
}

/// Rounds to 12 significant digits, mapping `-0` to `0`.
pub fn sig12(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return if x.is_finite() { 0.0 } else { x };
    }
    let r: f64 = format!("{x:.11e}").parse().expect("formatted float parses");
    if r == 0.0 {
        0.0
    } else {
        r
    }
}

fn num<T: Scalar>(x: T) -> Value {
    json!(sig12(x.as_f64()))
}

fn halfspaces_json<T: Scalar>(hs: &[HalfSpace<T>]) -> Value {
    Value::Array(
        hs.iter()
            .map(|h| json!({ "subset": h.subset, "rhs": num(h.rhs), "sense": h.sense }))
            .collect(),
    )
}

fn vertices_json<T: Scalar>(vs: &[Vec<T>]) -> Value {
    Value::Array(vs.iter().map(|v| Value::Array(v.iter().map(|&x| num(x)).collect())).collect())
}

impl<T: Scalar> Atlas<T> {
    /// JSON form with numbers rounded to 12 significant digits.
    pub fn to_json_value(&self) -> Value {
        let mut outer = json!({ "halfspaces": halfspaces_json(&self.outer) });
        if let Some(v) = &self.outer_vertices {
            outer["vertices"] = vertices_json(v);
        }
        let layerings: Vec<Value> = self
            .layerings
            .iter()
            .map(|e| {
                let mut entry = json!({
                    "layers": e.layering,
                    "halfspaces": halfspaces_json(&e.halfspaces),
                });
                if let Some(v) = &e.vertices {
                    entry["vertices"] = vertices_json(v);
                }
                entry
            })
            .collect();
        json!({
            "channel_digest": self.channel_digest,
            "dimension": self.dimension,
            "outer": outer,
            "layerings": layerings,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_json_value()).expect("atlas serializes")
    }
}
