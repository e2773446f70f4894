mod common;

use common::ref_neuron;
use poppins_core::neuron::{neuron_step, NeuronParams, NeuronState};
use poppins_core::rng::Lcg;
use proptest::prelude::*;
use sha2::{Digest, Sha256};

pub const CASES: u64 = 1000;
pub const STEPS: usize = 10_000;

/// Regenerates case `k` exactly as the scripted evaluator draws it.
fn run_case(k: u64) -> (usize, String) {
    let mut rng = Lcg::new(k);
    let a_num = rng.below(8) as u8;
    let b_num = rng.below(8) as u8;
    let v_r = rng.below(256) as u8;
    let v_t = rng.range(i32::from(v_r), 255) as u8;
    let v_reset = rng.below(256) as u8;
    let p = NeuronParams::new(a_num, b_num, v_r, v_t, v_reset).unwrap();
    let mut state = NeuronState::at(rng.below(256) as u8);
    let lo = rng.range(-100, 40);
    let hi = lo + rng.range(0, 160);
    let mut vs = Vec::with_capacity(STEPS);
    let mut spikes = Vec::with_capacity(STEPS);
    for _ in 0..STEPS {
        let (next, s) = neuron_step(state, &p, rng.range(lo, hi));
        state = next;
        vs.push(state.v_m);
        spikes.push(u8::from(s));
    }
    let mut h = Sha256::new();
    h.update(&vs);
    h.update(&spikes);
    (
        spikes.iter().filter(|&&s| s == 1).count(),
        hex::encode(h.finalize()),
    )
}

#[test]
fn matches_scripted_evaluator_on_random_cases() {
    let fixture = include_str!("fixtures/iqif_cases.txt");
    let mut checked = 0;
    for line in fixture.lines().filter(|l| !l.starts_with('#')) {
        let f: Vec<&str> = line.split_whitespace().collect();
        let k: u64 = f[0].parse().unwrap();
        let (spikes, digest) = run_case(k);
        assert_eq!(
            spikes,
            f[1].parse::<usize>().unwrap(),
            "case {k} spike count"
        );
        assert_eq!(digest, f[2], "case {k} trajectory");
        checked += 1;
    }
    assert_eq!(checked, CASES);
}

fn params() -> impl Strategy<Value = NeuronParams> {
    (0u8..8, 0u8..8, any::<u8>(), any::<u8>(), any::<u8>())
        .prop_map(|(a, b, x, y, reset)| NeuronParams::new(a, b, x.min(y), x.max(y), reset).unwrap())
}

proptest! {
    #[test]
    fn single_step_matches_reference(p in params(), v in any::<u8>(), i in -3000i32..3000) {
        let (next, spiked) = neuron_step(NeuronState::at(v), &p, i);
        prop_assert_eq!((next.v_m, spiked), ref_neuron(v, &p, i));
    }

    #[test]
    fn trajectories_match_reference(p in params(), v0 in any::<u8>(), current in prop::collection::vec(-200i32..200, 1..300)) {
        let mut state = NeuronState::at(v0);
        let mut v = v0;
        for &i in &current {
            let spiked = state.step(&p, i);
            let (rv, rs) = ref_neuron(v, &p, i);
            v = rv;
            prop_assert_eq!((state.v_m, spiked), (rv, rs));
        }
    }
}
