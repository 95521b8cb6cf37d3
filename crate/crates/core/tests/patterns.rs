use std::collections::HashSet;

use proptest::prelude::*;
use rbp::patterns::{
    build_task, classify_abstract, enumerate_triples, mixed_class, AbstractPattern, DatasetKind, LabeledDataset, Split,
    TaskId, TaskSpec,
};

fn brute_force(k: usize, pattern: AbstractPattern) -> usize {
    let mut n = 0;
    for a in 0..k {
        for b in 0..k {
            for c in 0..k {
                let hit = match pattern {
                    AbstractPattern::Aaa => a == b && b == c,
                    AbstractPattern::Aab => a == b && b != c,
                    AbstractPattern::Aba => a == c && a != b,
                    AbstractPattern::Abb => b == c && a != b,
                    AbstractPattern::Abc => a != b && b != c && a != c,
                };
                n += usize::from(hit);
            }
        }
    }
    n
}

#[test]
fn enumeration_matches_brute_force() {
    for k in 3..=8 {
        let subset: Vec<usize> = (0..k).collect();
        for p in AbstractPattern::ALL {
            assert_eq!(enumerate_triples(&subset, p).unwrap().len(), brute_force(k, p), "{p} over {k}");
        }
    }
}

#[test]
fn enumerated_triples_have_their_pattern() {
    let subset = [2, 5, 7, 9];
    for p in AbstractPattern::ALL {
        for t in enumerate_triples(&subset, p).unwrap() {
            assert_eq!(classify_abstract(t), p);
            assert!(t.iter().all(|x| subset.contains(x)));
        }
    }
}

#[test]
fn too_small_vocabulary_rejected() {
    assert!(enumerate_triples(&[0, 1], AbstractPattern::Abc).is_err());
    assert!(enumerate_triples(&[4], AbstractPattern::Aba).is_err());
    assert_eq!(enumerate_triples(&[4], AbstractPattern::Aaa).unwrap(), vec![[4, 4, 4]]);
}

fn assert_disjoint_vocab(ds: &LabeledDataset) {
    let train: HashSet<usize> = ds.tokens_in(Split::Train).into_iter().collect();
    let shared: HashSet<usize> = ds.shared_tokens.iter().copied().collect();
    for split in [Split::Val, Split::Test] {
        for t in ds.tokens_in(split) {
            assert!(!train.contains(&t) || shared.contains(&t), "{} leaks token {t}", ds.task);
        }
    }
}

#[test]
fn split_vocabularies_are_disjoint() {
    for task in TaskId::ALL {
        if task == TaskId::Shared {
            continue;
        }
        for seed in 0..5 {
            assert_disjoint_vocab(&build_task(&TaskSpec::new(task, seed)).unwrap());
        }
    }
}

#[test]
fn shared_task_keeps_sequences_apart() {
    let ds = build_task(&TaskSpec::new(TaskId::Shared, 3)).unwrap();
    let train: HashSet<Vec<usize>> = ds.items_in(Split::Train).map(|i| i.tokens.clone()).collect();
    for i in ds.items.iter().filter(|i| i.split != Split::Train) {
        assert!(!train.contains(&i.tokens));
        if i.target == 0 {
            // the mirrored sequence is in training
            let mirror = vec![i.tokens[1], i.tokens[0], i.tokens[1]];
            assert!(train.contains(&mirror));
        }
    }
}

#[test]
fn classes_are_balanced() {
    for task in [TaskId::AbaVsOther, TaskId::AbbVsOther, TaskId::AbaVsAbb, TaskId::AbcVsOther, TaskId::Shared] {
        let ds = build_task(&TaskSpec::new(task, 1)).unwrap();
        for split in [Split::Train, Split::Val, Split::Test] {
            let c = ds.class_counts(split);
            assert_eq!(c[0], c[1], "{task} {split:?}");
        }
    }
    let mixed = build_task(&TaskSpec::new(TaskId::Mixed4, 1)).unwrap();
    assert_eq!(mixed.class_counts(Split::Train), vec![6; 4]);
}

#[test]
fn labels_follow_the_rules() {
    for task in TaskId::ALL {
        let ds = build_task(&TaskSpec::new(task, 2)).unwrap();
        for item in &ds.items {
            match task {
                TaskId::PredictAba => assert_eq!(item.target, item.tokens[0]),
                TaskId::PredictAbb => assert_eq!(item.target, item.tokens[1]),
                TaskId::Mixed4 => {
                    let t = [item.tokens[0], item.tokens[1], item.tokens[2]];
                    assert_eq!(mixed_class(t), Some(item.target));
                }
                _ => {
                    let p = classify_abstract([item.tokens[0], item.tokens[1], item.tokens[2]]);
                    let positive = match task {
                        TaskId::AbbVsOther => AbstractPattern::Abb,
                        TaskId::AbcVsOther => AbstractPattern::Abc,
                        _ => AbstractPattern::Aba,
                    };
                    assert_eq!(item.target == 0, p == positive, "{task}: {:?}", item.tokens);
                }
            }
        }
    }
}

#[test]
fn dataset_json_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("d.json");
    let ds = build_task(&TaskSpec::new(TaskId::Mixed4, 9)).unwrap();
    ds.write_json(&path).unwrap();
    let back = LabeledDataset::read_json(&path).unwrap();
    assert_eq!(back, ds);
    assert!(matches!(back.kind, DatasetKind::Classification { ref classes } if classes.len() == 4));
    std::fs::write(&path, "{\"format\": \"other\"}").unwrap();
    assert!(LabeledDataset::read_json(&path).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn every_triple_has_exactly_one_pattern(a in 0usize..20, b in 0usize..20, c in 0usize..20) {
        let mut letters = vec![a, b, c];
        letters.sort_unstable();
        letters.dedup();
        let p = classify_abstract([a, b, c]);
        let matching = AbstractPattern::ALL
            .iter()
            .filter(|&&q| enumerate_triples(&letters, q).map(|v| v.contains(&[a, b, c])).unwrap_or(false))
            .count();
        prop_assert_eq!(matching, 1);
        prop_assert!(enumerate_triples(&letters, p).unwrap().contains(&[a, b, c]));
    }

    #[test]
    fn same_seed_same_dataset(seed in any::<u64>(), t in 0usize..8) {
        let task = TaskId::ALL[t];
        let a = build_task(&TaskSpec::new(task, seed)).unwrap();
        let b = build_task(&TaskSpec::new(task, seed)).unwrap();
        prop_assert_eq!(a, b);
    }
}
