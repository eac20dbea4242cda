mod common;

use cf_layering::probability::{demo_channel, JointPmf, VarSet};
use cf_layering::{JointPmf64, NodeSet, Variable};
use common::*;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

// Demo channel (2 relays, seed 7), frozen from the direct-summation oracle.
const H_Y2_GIVEN_X2: f64 = 0.912845517241025;
const I_YHAT2_Y2_GIVEN_X2: f64 = 0.168217589745440;
const PAIR_SUM_23: f64 = 3.730778940327673;

fn demo() -> JointPmf64 {
    JointPmf64::build(&demo_channel(2, 7)).unwrap()
}

#[test]
fn demo_mass_is_one() {
    let j = demo();
    assert!((j.total_mass() - 1.0).abs() < 1e-12);
    assert_eq!(j.table().len(), 2 * 8 * 8 * 2);
}

#[test]
fn demo_conditional_entropy_matches_oracle() {
    let spec = demo_channel(2, 7);
    let j = demo();
    let x2 = j.var(Variable::x(2)).unwrap();
    let y2 = j.var(Variable::y(2)).unwrap();
    let got = j.cond_entropy(y2, x2).unwrap();
    assert!((got - H_Y2_GIVEN_X2).abs() < 1e-12);
    assert!((oracle_cond(&spec, &ys(&[2]), &xs(&[2])) - H_Y2_GIVEN_X2).abs() < 1e-12);
    assert!(j.cond_entropy(y2, VarSet::EMPTY).unwrap() >= got);
}

#[test]
fn demo_mutual_information_matches_oracle() {
    let j = demo();
    let one = NodeSet::single(2);
    let got = j.mutual_info(j.yhats(one), j.ys(one), j.xs(one)).unwrap();
    assert!((got - I_YHAT2_Y2_GIVEN_X2).abs() < 1e-12);
}

#[test]
fn demo_pair_entropy_sum_matches_oracle() {
    let j = demo();
    let got = j.pair_entropy_sum(NodeSet::relays(2)).unwrap();
    assert!((got - PAIR_SUM_23).abs() < 1e-12);
}

#[test]
fn concurrent_queries_agree() {
    let j = demo();
    let masks: Vec<u64> = (1..(1u64 << 8)).collect();
    let serial: Vec<f64> = masks.iter().map(|&m| j.clone().entropy(VarSet::from_mask(m)).unwrap()).collect();
    std::thread::scope(|s| {
        for chunk in 0..4 {
            let j = &j;
            let masks = &masks;
            let serial = &serial;
            s.spawn(move || {
                for (k, &m) in masks.iter().enumerate().skip(chunk).step_by(2) {
                    assert_eq!(j.entropy(VarSet::from_mask(m)).unwrap(), serial[k]);
                }
            });
        }
    });
}

fn random_joint(seed: u64, relays: usize) -> (cf_layering::ChannelSpec, JointPmf64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let spec = random_spec(&mut rng, relays, 3);
    let j = JointPmf::build(&spec).unwrap();
    (spec, j)
}

fn mask_strategy() -> impl Strategy<Value = u64> {
    any::<u64>()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn random_joint_matches_oracle(seed in any::<u64>(), relays in 1usize..=2, mask in mask_strategy()) {
        let (spec, j) = random_joint(seed, relays);
        let n = j.variables().len();
        let mask = mask & ((1 << n) - 1);
        let vars: Vec<Variable> = (0..n).filter(|k| mask & (1 << k) != 0).map(|k| j.variables()[k]).collect();
        let got = j.entropy(VarSet::from_mask(mask)).unwrap();
        prop_assert!((got - oracle_entropy(&spec, &vars)).abs() < 1e-9);
        let bound: f64 = (0..n).filter(|k| mask & (1 << k) != 0).map(|k| (j.alphabets()[k] as f64).log2()).sum();
        prop_assert!(got >= 0.0 && got <= bound + 1e-9);
    }

    #[test]
    fn entropy_inequalities(seed in any::<u64>(), relays in 1usize..=3, a in any::<u64>(), b in any::<u64>(), c in any::<u64>()) {
        let (_, j) = random_joint(seed, relays);
        let full = (1u64 << j.variables().len()) - 1;
        let (a, b, c) = (VarSet::from_mask(a & full), VarSet::from_mask(b & full), VarSet::from_mask(c & full));
        let h = |s: VarSet| j.entropy(s).unwrap();
        // chain rule
        prop_assert!((h(a | b) - (h(a) + j.cond_entropy(b, a).unwrap())).abs() < 1e-9);
        // conditioning reduces entropy
        prop_assert!(j.cond_entropy(a, b | c).unwrap() <= j.cond_entropy(a, b).unwrap() + 1e-9);
        // submodularity
        prop_assert!(h(a) + h(b) >= h(a | b) + h(a.intersection(b)) - 1e-9);
        // conditional entropy range, mutual information sign
        let ca = j.cond_entropy(a, b).unwrap();
        prop_assert!(ca >= -1e-9 && ca <= h(a) + 1e-9);
        prop_assert!(j.mutual_info(a, b, c).unwrap() >= -1e-9);
    }

    #[test]
    fn product_form_structure(seed in any::<u64>(), relays in 1usize..=3) {
        let (_, j) = random_joint(seed, relays);
        let r = j.relays();
        let mut inputs = vec![j.x1()];
        inputs.extend(r.nodes().map(|n| j.xs(NodeSet::single(n))));
        for (k, &a) in inputs.iter().enumerate() {
            for &b in &inputs[k + 1..] {
                prop_assert!(j.mutual_info(a, b, VarSet::EMPTY).unwrap().abs() < 1e-9);
            }
        }
        let full = (1u64 << j.variables().len()) - 1;
        for n in r.nodes() {
            let one = NodeSet::single(n);
            let yhat = j.yhats(one);
            let given = j.xs(one) | j.ys(one);
            let rest = VarSet::from_mask(full & !(yhat | given).mask());
            prop_assert!(j.mutual_info(yhat, rest, given).unwrap().abs() < 1e-9);
        }
    }
}
