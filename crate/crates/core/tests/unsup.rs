use std::collections::BTreeMap;

use polyseg::unsup::{
    mdl_cost, train_flatcat_with, train_morf, Category, CategoryModel, FlatCatConfig, MorfConfig, CATEGORIES,
};
use proptest::prelude::*;

fn affix_corpus() -> BTreeMap<String, u64> {
    let stems = ["play", "do", "work", "read", "walk", "paint"];
    let mut wc = BTreeMap::new();
    for s in stems {
        wc.insert(s.to_string(), 4);
        wc.insert(format!("re{s}"), 1);
        wc.insert(format!("{s}er"), 1);
    }
    wc
}

/// Posterior of each category at each position by summing the joint
/// probability of every category sequence.
fn enumerate_posteriors(cats: &CategoryModel, morphs: &[String]) -> Vec<[f64; 4]> {
    let n = morphs.len();
    let mut joint = Vec::new();
    for code in 0..4usize.pow(n as u32) {
        let seq: Vec<Category> = (0..n).map(|i| CATEGORIES[code / 4usize.pow(i as u32) % 4]).collect();
        joint.push((seq.clone(), cats.joint_log_prob(morphs, &seq).exp()));
    }
    let z: f64 = joint.iter().map(|(_, p)| p).sum();
    let mut post = vec![[0.0; 4]; n];
    for (seq, p) in &joint {
        for (i, c) in seq.iter().enumerate() {
            post[i][*c as usize] += p / z;
        }
    }
    post
}

#[test]
fn flatcat_tags_affixes() {
    let wc = affix_corpus();
    let (baseline, trace) = train_morf(&wc, &MorfConfig::default()).unwrap();
    assert_eq!(trace.analyses["replay"], vec!["re", "play"]);
    assert_eq!(trace.analyses["player"], vec!["play", "er"]);
    let (model, _) = train_flatcat_with(&wc, &baseline, &FlatCatConfig::default()).unwrap();
    let cats = model.categories.as_ref().unwrap();

    let replay = vec!["re".to_string(), "play".to_string()];
    let exact = enumerate_posteriors(cats, &replay);
    let fb = cats.posteriors(&replay);
    for (a, b) in exact.iter().flatten().zip(fb.iter().flatten()) {
        assert!((a - b).abs() < 1e-9);
    }
    assert!(exact[0][Category::Pre as usize] > 0.5, "{exact:?}");

    let player = vec!["play".to_string(), "er".to_string()];
    let exact = enumerate_posteriors(cats, &player);
    assert!(exact[1][Category::Suf as usize] > 0.5, "{exact:?}");
}

#[test]
fn single_stem_category_model_matches_baseline() {
    let wc = affix_corpus();
    let (baseline, _) = train_morf(&wc, &MorfConfig::default()).unwrap();
    let cats = CategoryModel::single_stem(&baseline);
    for w in ["replay", "worker", "unseen", "repainter", "x"] {
        assert_eq!(cats.segment(&baseline, w), baseline.viterbi_segment(w), "{w}");
    }
}

#[test]
fn flatcat_model_file_round_trip() {
    let wc = affix_corpus();
    let (baseline, _) = train_morf(&wc, &MorfConfig::default()).unwrap();
    let (model, _) = train_flatcat_with(&wc, &baseline, &FlatCatConfig::default()).unwrap();
    let back = polyseg::unsup::MorfModel::from_text(&model.to_text()).unwrap();
    for w in ["replay", "worker", "repainter"] {
        assert_eq!(back.segment(w), model.segment(w));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn training_cost_is_monotone(words in prop::collection::btree_map("[a-d]{1,7}", 1u64..5, 1..12), seed in 0u64..1000) {
        let config = MorfConfig { seed, ..MorfConfig::default() };
        let (model, trace) = train_morf(&words, &config).unwrap();
        for w in trace.epoch_costs.windows(2) {
            prop_assert!(w[1] <= w[0]);
        }
        let last = *trace.epoch_costs.last().unwrap();
        prop_assert!((mdl_cost(&model).total() - last).abs() < 1e-6 * last.max(1.0));
        for (w, a) in &trace.analyses {
            prop_assert_eq!(&a.concat(), w);
        }
    }

    #[test]
    fn segmentation_restores_word(words in prop::collection::btree_map("[a-d]{1,7}", 1u64..5, 1..8), probe in "[a-f]{1,12}") {
        let (model, _) = train_morf(&words, &MorfConfig::default()).unwrap();
        prop_assert_eq!(model.segment(&probe).concat(), probe);
    }
}
