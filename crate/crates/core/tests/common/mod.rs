//! Test-only oracle: entropies by direct summation over the factored channel spec,
//! independent of the joint table layout and marginalization used by the crate.

#![allow(dead_code)]

use std::collections::HashMap;

use cf_layering::probability::{ChannelSpec, DestinationSpec, RelaySpec, Role, SourceSpec, Table};
use cf_layering::Variable;
use rand::Rng;

/// Probability of one full assignment, multiplied out factor by factor.
fn assignment_mass(spec: &ChannelSpec, x1: usize, relay: &[(usize, usize, usize)], yd: usize) -> f64 {
    let relays = spec.sorted_relays();
    let mut p = spec.source.p_x1.values[x1];
    for (r, &(x, y, yh)) in relays.iter().zip(relay) {
        p *= r.p_x.values[x];
        let idx = x * r.y_alphabet * r.yhat_alphabet + y * r.yhat_alphabet + yh;
        p *= r.p_yhat_given_x_y.values[idx];
    }
    // channel index: (x1, x2.., y2.., yd), last fastest
    let mut idx = x1;
    for (r, &(x, _, _)) in relays.iter().zip(relay) {
        idx = idx * r.x_alphabet + x;
    }
    for (r, &(_, y, _)) in relays.iter().zip(relay) {
        idx = idx * r.y_alphabet + y;
    }
    idx = idx * spec.destination.y_alphabet + yd;
    p * spec.channel.values[idx]
}

fn value_of(v: &Variable, d: usize, x1: usize, relay: &[(usize, usize, usize)], yd: usize) -> usize {
    match v.role {
        Role::SourceInput => x1,
        Role::DestObservation => {
            assert_eq!(v.node, d);
            yd
        }
        Role::RelayInput => relay[v.node - 2].0,
        Role::RelayObservation => relay[v.node - 2].1,
        Role::Compression => relay[v.node - 2].2,
    }
}

/// `H(vars)` in bits by enumerating every assignment and summing marginal masses.
pub fn oracle_entropy(spec: &ChannelSpec, vars: &[Variable]) -> f64 {
    let relays = spec.sorted_relays();
    let mut marginal: HashMap<Vec<usize>, f64> = HashMap::new();
    let mut relay_vals = vec![(0usize, 0usize, 0usize); relays.len()];

    fn rec(
        spec: &ChannelSpec,
        vars: &[Variable],
        k: usize,
        x1: usize,
        relay_vals: &mut Vec<(usize, usize, usize)>,
        marginal: &mut HashMap<Vec<usize>, f64>,
    ) {
        let relays = spec.sorted_relays();
        if k == relays.len() {
            for yd in 0..spec.destination.y_alphabet {
                let p = assignment_mass(spec, x1, relay_vals, yd);
                let key: Vec<usize> =
                    vars.iter().map(|v| value_of(v, spec.d, x1, relay_vals, yd)).collect();
                *marginal.entry(key).or_insert(0.0) += p;
            }
            return;
        }
        let r = relays[k];
        for x in 0..r.x_alphabet {
            for y in 0..r.y_alphabet {
                for yh in 0..r.yhat_alphabet {
                    relay_vals[k] = (x, y, yh);
                    rec(spec, vars, k + 1, x1, relay_vals, marginal);
                }
            }
        }
    }

    for x1 in 0..spec.source.alphabet {
        rec(spec, vars, 0, x1, &mut relay_vals, &mut marginal);
    }
    marginal.values().filter(|&&p| p > 1e-15).map(|&p| -p * p.log2()).sum()
}

pub fn oracle_cond(spec: &ChannelSpec, a: &[Variable], b: &[Variable]) -> f64 {
    let ab: Vec<Variable> = a.iter().chain(b).copied().collect();
    oracle_entropy(spec, &dedup(ab)) - oracle_entropy(spec, b)
}

pub fn oracle_mi(spec: &ChannelSpec, a: &[Variable], b: &[Variable], c: &[Variable]) -> f64 {
    let bc: Vec<Variable> = dedup(b.iter().chain(c).copied().collect());
    oracle_cond(spec, a, c) - oracle_cond(spec, a, &bc)
}

fn dedup(mut v: Vec<Variable>) -> Vec<Variable> {
    v.sort();
    v.dedup();
    v
}

pub fn xs(nodes: &[usize]) -> Vec<Variable> {
    nodes.iter().map(|&n| Variable::x(n)).collect()
}
pub fn ys(nodes: &[usize]) -> Vec<Variable> {
    nodes.iter().map(|&n| Variable::y(n)).collect()
}
pub fn yhats(nodes: &[usize]) -> Vec<Variable> {
    nodes.iter().map(|&n| Variable::yhat(n)).collect()
}
pub fn cat(parts: &[Vec<Variable>]) -> Vec<Variable> {
    parts.concat()
}

fn random_row<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    // Occasional exact zeros exercise the 0·log 0 convention.
    let mut w: Vec<f64> = (0..n)
        .map(|_| if rng.gen_bool(0.1) { 0.0 } else { rng.gen_range(0.01..1.0) })
        .collect();
    if w.iter().all(|&x| x == 0.0) {
        w[0] = 1.0;
    }
    let s: f64 = w.iter().sum();
    w.iter().map(|x| x / s).collect()
}

/// A random product-form spec with alphabets in `2..=max_alphabet`.
pub fn random_spec<R: Rng>(rng: &mut R, relays: usize, max_alphabet: usize) -> ChannelSpec {
    let mut a = || rng.gen_range(2..=max_alphabet);
    let src = a();
    let dst = a();
    let dims: Vec<(usize, usize, usize)> = (0..relays).map(|_| (a(), a(), a())).collect();
    let p_x1 = Table::from_vec(random_row(rng, src));
    let relay_specs = dims
        .iter()
        .enumerate()
        .map(|(k, &(xa, ya, yha))| RelaySpec {
            node: k + 2,
            x_alphabet: xa,
            y_alphabet: ya,
            yhat_alphabet: yha,
            p_x: Table::from_vec(random_row(rng, xa)),
            p_yhat_given_x_y: Table::new(
                vec![xa, ya, yha],
                (0..xa * ya).flat_map(|_| random_row(rng, yha)).collect(),
            ),
        })
        .collect();
    let mut shape = vec![src];
    shape.extend(dims.iter().map(|d| d.0));
    shape.extend(dims.iter().map(|d| d.1));
    shape.push(dst);
    let rows: usize = src * dims.iter().map(|d| d.0).product::<usize>();
    let cols: usize = dst * dims.iter().map(|d| d.1).product::<usize>();
    let channel = (0..rows).flat_map(|_| random_row(rng, cols)).collect();
    ChannelSpec {
        d: relays + 2,
        source: SourceSpec { alphabet: src, p_x1 },
        relays: relay_specs,
        destination: DestinationSpec { y_alphabet: dst },
        channel: Table::new(shape, channel),
    }
}

fn onehot(n: usize, k: usize) -> Vec<f64> {
    let mut v = vec![0.0; n];
    v[k] = 1.0;
    v
}

/// Binary spec with every variable fixed at symbol 0.
pub fn deterministic_spec(relays: usize) -> ChannelSpec {
    shaped_spec(relays, onehot(2, 0), |_, _| onehot(2, 0), |_| onehot(1 << (relays + 1), 0))
}

/// Binary spec with uniform inputs, `Ŷ = Y`, and every output uniform and independent
/// of the inputs.
pub fn independent_spec(relays: usize) -> ChannelSpec {
    let cols = 1 << (relays + 1);
    shaped_spec(relays, vec![0.5, 0.5], |_, y| onehot(2, y), move |_| vec![1.0 / cols as f64; cols])
}

/// Binary spec from a source/input law, a `(x, y) -> Ŷ row` map and a per-input-row
/// output law.
pub fn shaped_spec(
    relays: usize,
    p_input: Vec<f64>,
    yhat_row: impl Fn(usize, usize) -> Vec<f64>,
    channel_row: impl Fn(usize) -> Vec<f64>,
) -> ChannelSpec {
    let relay_specs = (0..relays)
        .map(|k| RelaySpec {
            node: k + 2,
            x_alphabet: 2,
            y_alphabet: 2,
            yhat_alphabet: 2,
            p_x: Table::from_vec(p_input.clone()),
            p_yhat_given_x_y: Table::new(
                vec![2, 2, 2],
                (0..2).flat_map(|x| (0..2).flat_map(|y| yhat_row(x, y)).collect::<Vec<_>>()).collect(),
            ),
        })
        .collect();
    let shape = vec![2; 2 * relays + 2];
    let channel = (0..1usize << (relays + 1)).flat_map(channel_row).collect();
    ChannelSpec {
        d: relays + 2,
        source: SourceSpec { alphabet: 2, p_x1: Table::from_vec(p_input) },
        relays: relay_specs,
        destination: DestinationSpec { y_alphabet: 2 },
        channel: Table::new(shape, channel),
    }
}

/// The same spec with every compression replaced by a constant.
pub fn constant_yhat(mut spec: ChannelSpec) -> ChannelSpec {
    for r in &mut spec.relays {
        let rows = r.x_alphabet * r.y_alphabet;
        let mut v = vec![0.0; rows * r.yhat_alphabet];
        for row in 0..rows {
            v[row * r.yhat_alphabet] = 1.0;
        }
        r.p_yhat_given_x_y = Table::new(vec![r.x_alphabet, r.y_alphabet, r.yhat_alphabet], v);
    }
    spec
}
