//! Factored channel description and its validation.

use std::fmt;

use serde::{Deserialize, Serialize};

use super::table::Table;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceSpec {
    pub alphabet: usize,
    pub p_x1: Table,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelaySpec {
    pub node: usize,
    pub x_alphabet: usize,
    pub y_alphabet: usize,
    pub yhat_alphabet: usize,
    pub p_x: Table,
    /// `p(ŷ | x, y)` indexed `[x][y][ŷ]`.
    pub p_yhat_given_x_y: Table,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DestinationSpec {
    pub y_alphabet: usize,
}

/// The product-form network law
/// `p(x₁) ∏ᵢ p(xᵢ) p(ŷᵢ | xᵢ, yᵢ) · p(y₂ … y_d | x₁ … x_{d−1})`.
///
/// The channel table is indexed by the inputs `(x₁, x₂, …, x_{d−1})` followed by the
/// outputs `(y₂, …, y_{d−1}, y_d)`, row-major with the last index fastest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelSpec {
    pub d: usize,
    pub source: SourceSpec,
    pub relays: Vec<RelaySpec>,
    pub destination: DestinationSpec,
    pub channel: Table,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SpecViolation {
    /// Network-level structure: node count, relay ids, alphabet sizes.
    Structure(String),
    Shape {
        table: String,
        expected: Vec<usize>,
        found: Option<Vec<usize>>,
    },
    Range {
        table: String,
        index: usize,
        value: f64,
    },
    Normalization {
        table: String,
        row: Option<usize>,
        sum: f64,
    },
}

impl fmt::Display for SpecViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SpecViolation::Structure(msg) => f.write_str(msg),
            SpecViolation::Shape { table, expected, found } => match found {
                Some(found) => write!(f, "{table}: expected shape {expected:?}, found {found:?}"),
                None => write!(f, "{table}: expected shape {expected:?}, found ragged arrays"),
            },
            SpecViolation::Range { table, index, value } => {
                write!(f, "{table}: entry {index} = {value} is not a probability")
            }
            SpecViolation::Normalization { table, row: Some(r), sum } => {
                write!(f, "{table}: row {r} sums to {sum}")
            }
            SpecViolation::Normalization { table, row: None, sum } => {
                write!(f, "{table}: sums to {sum}")
            }
        }
    }
}

/// Absolute tolerance for table normalization.
pub const SPEC_NORMALIZATION_TOL: f64 = 1e-12;

impl ChannelSpec {
    pub fn relay_count(&self) -> usize {
        self.d.saturating_sub(2)
    }

    /// Relays sorted by node id.
    pub fn sorted_relays(&self) -> Vec<&RelaySpec> {
        let mut r: Vec<&RelaySpec> = self.relays.iter().collect();
        r.sort_by_key(|r| r.node);
        r
    }

    /// Expected channel shape: input alphabets then output alphabets.
    pub fn channel_shape(&self) -> Vec<usize> {
        let relays = self.sorted_relays();
        let mut shape = vec![self.source.alphabet];
        shape.extend(relays.iter().map(|r| r.x_alphabet));
        shape.extend(relays.iter().map(|r| r.y_alphabet));
        shape.push(self.destination.y_alphabet);
        shape
    }
}

/// Lists every structural, shape, range and normalization defect. Empty means well-formed.
pub fn validate_spec(spec: &ChannelSpec) -> Vec<SpecViolation> {
    let mut out = Vec::new();

    if spec.d < 3 {
        out.push(SpecViolation::Structure(format!(
            "d = {} leaves no relays; need d >= 3",
            spec.d
        )));
        return out;
    }
    let mut nodes: Vec<usize> = spec.relays.iter().map(|r| r.node).collect();
    nodes.sort_unstable();
    let expected: Vec<usize> = (2..spec.d).collect();
    if nodes != expected {
        out.push(SpecViolation::Structure(format!(
            "relay nodes {nodes:?} do not match {expected:?}"
        )));
        return out;
    }

    let mut alphabets_ok = true;
    let mut alphabet = |name: String, a: usize, out: &mut Vec<SpecViolation>| {
        if a == 0 {
            alphabets_ok = false;
            out.push(SpecViolation::Structure(format!("{name} alphabet is empty")));
        }
    };
    alphabet("source".into(), spec.source.alphabet, &mut out);
    alphabet("destination".into(), spec.destination.y_alphabet, &mut out);
    for r in &spec.relays {
        alphabet(format!("relay {} x", r.node), r.x_alphabet, &mut out);
        alphabet(format!("relay {} y", r.node), r.y_alphabet, &mut out);
        alphabet(format!("relay {} yhat", r.node), r.yhat_alphabet, &mut out);
    }
    if !alphabets_ok {
        return out;
    }

    check_table(&mut out, "p_x1", &spec.source.p_x1, &[spec.source.alphabet], 0);
    for r in spec.sorted_relays() {
        check_table(&mut out, &format!("relay {} p_x", r.node), &r.p_x, &[r.x_alphabet], 0);
        check_table(
            &mut out,
            &format!("relay {} p_yhat_given_x_y", r.node),
            &r.p_yhat_given_x_y,
            &[r.x_alphabet, r.y_alphabet, r.yhat_alphabet],
            2,
        );
    }
    let shape = spec.channel_shape();
    let inputs = spec.d - 1;
    check_table(&mut out, "channel", &spec.channel, &shape, inputs);
    out
}

/// Checks shape, entry range and normalization. The first `cond_dims` axes are
/// conditioning axes; each row over the remaining axes must sum to one.
fn check_table(
    out: &mut Vec<SpecViolation>,
    name: &str,
    table: &Table,
    shape: &[usize],
    cond_dims: usize,
) {
    if table.shape.as_deref() != Some(shape) {
        out.push(SpecViolation::Shape {
            table: name.to_string(),
            expected: shape.to_vec(),
            found: table.shape.clone(),
        });
        return;
    }
    for (index, &value) in table.values.iter().enumerate() {
        if !(0.0..=1.0).contains(&value) {
            out.push(SpecViolation::Range { table: name.to_string(), index, value });
        }
    }
    let row_len: usize = shape[cond_dims..].iter().product();
    for (row, chunk) in table.values.chunks(row_len.max(1)).enumerate() {
        let sum: f64 = chunk.iter().sum();
        if (sum - 1.0).abs() > SPEC_NORMALIZATION_TOL || !sum.is_finite() {
            out.push(SpecViolation::Normalization {
                table: name.to_string(),
                row: (cond_dims > 0).then_some(row),
                sum,
            });
        }
    }
}
