//! Randomized invariants of the numeric building blocks and metrics.

mod common;

use ayn_core::data::AnswerSet;
use ayn_core::encoders::{encode_bow, Aggregation, ConvActivation, LstmCell, TextCnn};
use ayn_core::fusion::{Fusion, FusionMode};
use ayn_core::init::seeded;
use ayn_core::math::{l2_normalize, sigmoid, tanh};
use ayn_core::metrics::{
    accuracy, consensus_instance, wups_corpus, wups_instance, ConsensusMode, PredictionRecord, ThresholdedWup,
};
use ayn_core::tape::Tape;
use ayn_core::tensor::{ParamStore, Tensor};
use common::{random_set, random_taxonomy};
use proptest::prelude::*;

fn vector(len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-5.0f64..5.0, len)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn tanh_is_a_rescaled_sigmoid(v in -30.0f64..30.0) {
        prop_assert!((tanh(v) - (2.0 * sigmoid(2.0 * v) - 1.0)).abs() < 1e-12);
    }

    #[test]
    fn l2_normalize_is_idempotent(x in vector(7)) {
        prop_assume!(x.iter().any(|v| v.abs() > 1e-3));
        let once = l2_normalize(&x);
        let twice = l2_normalize(&once);
        for (a, b) in once.iter().zip(&twice) {
            prop_assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn thresholded_wup_is_symmetric_and_monotone_in_tau(seed in 0u64..1000, i in 0usize..53, j in 0usize..53, lo in 0.0f64..1.0, hi in 0.0f64..1.0) {
        let mut rng = seeded(seed);
        let t = random_taxonomy(&mut rng, 50);
        let (a, b) = (&t.vocabulary[i], &t.vocabulary[j]);
        let (lo, hi) = if lo <= hi { (lo, hi) } else { (hi, lo) };
        let tax = &t.taxonomy;
        prop_assert_eq!(tax.mu_thresholded(a, b, lo, 0.1), tax.mu_thresholded(b, a, lo, 0.1));
        prop_assert!(tax.mu_thresholded(a, b, hi, 0.1) <= tax.mu_thresholded(a, b, lo, 0.1));
        let s = tax.wup(a, b);
        prop_assert!((0.0..=1.0).contains(&s));
    }

    #[test]
    fn wups_is_symmetric_and_ordered(seed in 0u64..1000) {
        let mut rng = seeded(seed);
        let t = random_taxonomy(&mut rng, 50);
        let recs: Vec<PredictionRecord> = (0..20)
            .map(|i| PredictionRecord {
                id: i.to_string(),
                predicted: random_set(&mut rng, &t.vocabulary, 3),
                references: (0..5).map(|_| random_set(&mut rng, &t.vocabulary, 3)).collect(),
            })
            .collect();
        let hi = ThresholdedWup::new(&t.taxonomy, 0.9).unwrap();
        let lo = ThresholdedWup::new(&t.taxonomy, 0.0).unwrap();
        for r in &recs {
            let ab = wups_instance(&r.predicted, &r.references[0], &hi).unwrap();
            let ba = wups_instance(&r.references[0], &r.predicted, &hi).unwrap();
            prop_assert_eq!(ab, ba);
            let acm = consensus_instance(r, &hi, ConsensusMode::Average).unwrap();
            let mcm = consensus_instance(r, &hi, ConsensusMode::Min).unwrap();
            prop_assert!(acm <= mcm + 1e-15);
        }
        let acc = accuracy(&recs).unwrap();
        let w_hi = wups_corpus(&recs, &hi).unwrap();
        let w_lo = wups_corpus(&recs, &lo).unwrap();
        prop_assert!(acc <= w_hi && w_hi <= w_lo);
    }

    #[test]
    fn normalized_fusion_ignores_visual_scale(seed in 0u64..1000, v in vector(5), c in 0.01f64..100.0, mode in 0usize..3) {
        prop_assume!(v.iter().any(|x| x.abs() > 1e-3));
        let mode = [FusionMode::Concat, FusionMode::Multiply, FusionMode::Sum][mode];
        let mut store = ParamStore::new();
        let fusion = Fusion::new(&mut store, mode, 4, 5, true, &mut seeded(seed)).unwrap();
        let fuse = |x: Vec<f64>| {
            let mut tape = Tape::new(&store);
            let q = tape.input(vec![0.3, -0.2, 0.5, 1.0]).unwrap();
            let xv = tape.input(x).unwrap();
            let out = fusion.fuse(&mut tape, q, xv).unwrap();
            tape.value(out).to_vec()
        };
        let base = fuse(v.clone());
        let scaled = fuse(v.iter().map(|x| x * c).collect());
        for (a, b) in base.iter().zip(&scaled) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn lstm_distinguishes_a_transposed_pair(seed in 0u64..1000, a in vector(4), b in vector(4)) {
        prop_assume!(a.iter().zip(&b).any(|(x, y)| (x - y).abs() > 0.1));
        let mut store = ParamStore::new();
        let cell = LstmCell::new(&mut store, "lstm", 4, 6, &mut seeded(seed)).unwrap();
        let run = |first: &[f64], second: &[f64]| {
            let mut tape = Tape::new(&store);
            let x = tape.input(first.to_vec()).unwrap();
            let y = tape.input(second.to_vec()).unwrap();
            let h = cell.unroll(&mut tape, &[x, y]).unwrap().h;
            tape.value(h).to_vec()
        };
        prop_assert_ne!(run(&a, &b), run(&b, &a));
    }

    #[test]
    fn width_one_identity_cnn_equals_bag_of_words(seed in 0u64..1000, words in prop::collection::vec(vector(3), 1..7)) {
        let mut store = ParamStore::new();
        let cnn = TextCnn::new(&mut store, 3, 1, 3, ConvActivation::Linear, Aggregation::SumPool, &mut seeded(seed)).unwrap();
        let view = &cnn.views[0];
        *store.get_mut(view.kernel) = Tensor::matrix(3, 3, vec![1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0]).unwrap();
        let mut tape = Tape::new(&store);
        let vars: Vec<_> = words.iter().map(|w| tape.input(w.clone()).unwrap()).collect();
        let c = cnn.encode(&mut tape, &vars).unwrap();
        let b = encode_bow(&mut tape, &vars).unwrap();
        let bits = |v: &[f64]| v.iter().map(|x| (x + 0.0).to_bits()).collect::<Vec<_>>();
        prop_assert_eq!(bits(tape.value(c)), bits(tape.value(b)));
    }
}

#[test]
fn answer_sets_ignore_order_and_case() {
    assert_eq!(AnswerSet::parse("Chair, table"), AnswerSet::parse("table,chair."));
}
