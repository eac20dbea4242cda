//! Reproducible random binary channels.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::spec::{ChannelSpec, DestinationSpec, RelaySpec, SourceSpec};
use super::table::Table;

fn bernoulli_row(p: f64) -> [f64; 2] {
    [p, 1.0 - p]
}

fn normalize(row: &mut [f64]) {
    let s: f64 = row.iter().sum();
    row.iter_mut().for_each(|x| *x /= s);
}

/// A binary network with `relays` relays, deterministic for a given seed.
///
/// Inputs are dithered Bernoulli draws. Each relay compresses with a dithered binary
/// symmetric quantizer of its observation. Every output is a noisy parity of a random
/// subset of the inputs that always includes `X₁`, mixed with a random dither row.
pub fn demo_channel(relays: usize, seed: u64) -> ChannelSpec {
    assert!(relays >= 1, "a demo network needs at least one relay");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = relays + 2;
    let inputs = d - 1;
    let outputs = d - 1;

    let p_x1 = Table::from_vec(bernoulli_row(rng.gen_range(0.2..0.8)).to_vec());

    let mut relay_specs = Vec::with_capacity(relays);
    for k in 0..relays {
        let px = bernoulli_row(rng.gen_range(0.2..0.8)).to_vec();
        let base_flip: f64 = rng.gen_range(0.05..0.35);
        let mut yhat = Vec::with_capacity(8);
        for _x in 0..2 {
            for y in 0..2 {
                let flip = (base_flip + rng.gen_range(-0.04..0.04)).clamp(0.0, 0.5);
                if y == 0 {
                    yhat.extend([1.0 - flip, flip]);
                } else {
                    yhat.extend([flip, 1.0 - flip]);
                }
            }
        }
        relay_specs.push(RelaySpec {
            node: k + 2,
            x_alphabet: 2,
            y_alphabet: 2,
            yhat_alphabet: 2,
            p_x: Table::from_vec(px),
            p_yhat_given_x_y: Table::new(vec![2, 2, 2], yhat),
        });
    }

    // Parity taps per output: bit 0 is X₁ and always set.
    let taps: Vec<u32> = (0..outputs)
        .map(|_| 1 | (rng.gen::<u32>() & ((1u32 << inputs) - 1)))
        .collect();
    let dither: f64 = rng.gen_range(0.1..0.5);

    let rows = 1usize << inputs;
    let cols = 1usize << outputs;
    let mut channel = Vec::with_capacity(rows * cols);
    for x in 0..rows {
        // Input index bits: X₁ is the most significant digit.
        let xbits: u32 = (0..inputs)
            .map(|i| (((x >> (inputs - 1 - i)) & 1) as u32) << i)
            .sum();
        let target: usize = taps
            .iter()
            .enumerate()
            .map(|(o, &t)| (((xbits & t).count_ones() & 1) as usize) << (outputs - 1 - o))
            .sum();
        let mut noise: Vec<f64> = (0..cols).map(|_| rng.gen_range(0.0..1.0)).collect();
        normalize(&mut noise);
        let mut row: Vec<f64> = noise
            .iter()
            .enumerate()
            .map(|(y, &w)| dither * w + if y == target { 1.0 - dither } else { 0.0 })
            .collect();
        normalize(&mut row);
        channel.extend(row);
    }
    let mut shape = vec![2; inputs];
    shape.extend(vec![2; outputs]);

    ChannelSpec {
        d,
        source: SourceSpec { alphabet: 2, p_x1 },
        relays: relay_specs,
        destination: DestinationSpec { y_alphabet: 2 },
        channel: Table::new(shape, channel),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::probability::validate_spec;

    #[test]
    fn deterministic_and_valid() {
        for relays in 1..=3 {
            let a = demo_channel(relays, 7);
            let b = demo_channel(relays, 7);
            assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
            assert_eq!(a.d, relays + 2);
            assert!(validate_spec(&a).is_empty(), "{:?}", validate_spec(&a));
        }
        assert_ne!(demo_channel(2, 7), demo_channel(2, 8));
    }
}
