mod common;

use kbqa_core::kg::execute;
use kbqa_core::metrics::{answer_f1, decompose, exact_set_match, F1Score};
use kbqa_core::kg::AnswerSet;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn match_ignores_component_order(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let gold = common::random_query(&mut rng, 4);
        let other = common::random_query(&mut rng, 4);
        let perm = common::shuffled(&mut rng, &gold);
        prop_assert!(exact_set_match(&perm, &gold).unwrap());
        prop_assert_eq!(exact_set_match(&other, &gold).unwrap(), exact_set_match(&other, &perm).unwrap());
    }

    #[test]
    fn match_ignores_variable_names(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let q = common::random_query(&mut rng, 4);
        let r = common::shuffled(&mut rng, &common::renamed(&q));
        prop_assert_eq!(decompose(&q).unwrap(), decompose(&r).unwrap());
    }

    #[test]
    fn reflexive_and_symmetric(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = common::random_query(&mut rng, 3);
        let b = common::random_query(&mut rng, 3);
        prop_assert!(exact_set_match(&a, &a).unwrap());
        prop_assert_eq!(exact_set_match(&a, &b).unwrap(), exact_set_match(&b, &a).unwrap());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn exact_match_implies_full_answer_f1(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (kg, gold) = common::random_case(&mut rng, 120, 4);
        let pred = common::shuffled(&mut rng, &common::renamed(&gold));
        prop_assert!(exact_set_match(&pred, &gold).unwrap());
        let f1 = answer_f1(&execute(&kg, &pred).unwrap(), &execute(&kg, &gold).unwrap());
        prop_assert_eq!(f1.f1, 1.0);
    }

    #[test]
    fn f1_follows_its_definition(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (kg, qa) = common::random_case(&mut rng, 80, 3);
        let qb = common::random_query_for(&mut rng, &kg, 3);
        let a = execute(&kg, &qa).unwrap();
        let b = execute(&kg, &qb).unwrap();
        let F1Score { precision: p, recall: r, f1 } = answer_f1(&a, &b);
        for x in [p, r, f1] {
            prop_assert!((0.0..=1.0).contains(&x));
        }
        let expected = if p + r > 0.0 { 2.0 * p * r / (p + r) } else { 0.0 };
        prop_assert_eq!(f1, expected);
        if let (AnswerSet::Rows(x), AnswerSet::Rows(y)) = (&a, &b) {
            let xs: std::collections::BTreeSet<_> = x.iter().collect();
            let ys: std::collections::BTreeSet<_> = y.iter().collect();
            let hit = xs.intersection(&ys).count() as f64;
            if !xs.is_empty() {
                prop_assert_eq!(p, hit / xs.len() as f64);
            }
            if !ys.is_empty() {
                prop_assert_eq!(r, hit / ys.len() as f64);
            }
        }
    }
}
