//! Dense probability tables read from and written to nested JSON arrays.

use serde::{Deserialize, Serialize};
use serde_json::Value;

/// A row-major table (last index fastest) together with the nesting shape it was read with.
///
/// `shape` is `None` when the source arrays were ragged; validation reports that as a
/// shape violation instead of failing at parse time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Value", into = "Value")]
pub struct Table {
    pub shape: Option<Vec<usize>>,
    pub values: Vec<f64>,
}

impl Table {
    pub fn new(shape: Vec<usize>, values: Vec<f64>) -> Self {
        debug_assert_eq!(shape.iter().product::<usize>(), values.len());
        Table { shape: Some(shape), values }
    }

    pub fn from_vec(values: Vec<f64>) -> Self {
        Table { shape: Some(vec![values.len()]), values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

fn shape_of(v: &Value) -> Result<Option<Vec<usize>>, String> {
    match v {
        Value::Number(_) => Ok(Some(Vec::new())),
        Value::Array(items) => {
            let mut inner: Option<Option<Vec<usize>>> = None;
            for item in items {
                let s = shape_of(item)?;
                match &inner {
                    None => inner = Some(s),
                    Some(prev) if *prev != s => inner = Some(None),
                    _ => {}
                }
            }
            Ok(match inner {
                None => Some(vec![0]),
                Some(None) => None,
                Some(Some(mut s)) => {
                    s.insert(0, items.len());
                    Some(s)
                }
            })
        }
        other => Err(format!("expected a number or array, found {other}")),
    }
}

fn flatten(v: &Value, out: &mut Vec<f64>) -> Result<(), String> {
    match v {
        Value::Number(n) => {
            out.push(n.as_f64().ok_or_else(|| format!("{n} is not representable as f64"))?);
            Ok(())
        }
        Value::Array(items) => items.iter().try_for_each(|x| flatten(x, out)),
        other => Err(format!("expected a number or array, found {other}")),
    }
}

impl TryFrom<Value> for Table {
    type Error = String;

    fn try_from(v: Value) -> Result<Self, String> {
        let shape = shape_of(&v)?;
        let mut values = Vec::new();
        flatten(&v, &mut values)?;
        Ok(Table { shape, values })
    }
}

fn nest(values: &[f64], shape: &[usize]) -> Value {
    match shape.split_first() {
        None => serde_json::json!(values[0]),
        Some((&n, rest)) => {
            let step: usize = rest.iter().product();
            Value::Array((0..n).map(|k| nest(&values[k * step..(k + 1) * step], rest)).collect())
        }
    }
}

impl From<Table> for Value {
    fn from(t: Table) -> Value {
        match &t.shape {
            Some(shape) if shape.iter().product::<usize>() == t.values.len() => nest(&t.values, shape),
            _ => Value::Array(t.values.iter().map(|x| serde_json::json!(x)).collect()),
        }
    }
}
