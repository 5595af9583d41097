use anygram::oracle::{common_ngram_counts, oracle_sm, oracle_wess, oracle_west};
use anygram::selftest::{alphabet_token, random_table};
use anygram::{kernel_sm, kernel_wess, kernel_west, token_sim, Exact, TokenRef};
use num_bigint::BigInt;
use num_traits::{One, Zero};
use proptest::prelude::*;

mod common;

fn sentence(max_len: usize) -> impl Strategy<Value = Vec<String>> {
    prop::collection::vec((0..5usize).prop_map(alphabet_token), 1..=max_len)
}

fn lambda() -> impl Strategy<Value = f64> {
    prop::sample::select(vec![0.3, 0.5, 1.0])
}

fn close(got: f64, want: f64) -> bool {
    (got - want).abs() <= 1e-9 * want.abs().max(1.0)
}

fn rational(num: i64, den: i64) -> Exact {
    Exact::new(BigInt::from(num), BigInt::from(den))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn sm_matches_ngram_enumeration(a in sentence(12), b in sentence(12), l in lambda()) {
        prop_assert!(close(kernel_sm(&a, &b, l), oracle_sm(&a, &b, l)));
    }

    #[test]
    fn sm_is_exact_over_rationals(a in sentence(10), b in sentence(10), num in 1i64..=4) {
        let l = rational(num, 4);
        prop_assert_eq!(kernel_sm(&a, &b, l.clone()), oracle_sm(&a, &b, l));
    }

    #[test]
    fn west_and_wess_match_oracles(
        a in sentence(12),
        b in sentence(12),
        l in lambda(),
        theta in prop::sample::select(vec![0.3, 0.7]),
        seed in any::<u64>(),
    ) {
        let table = random_table(&mut common::rng(seed), 5, 8);
        let sim = |x: &String, y: &String| token_sim(TokenRef::new(x), TokenRef::new(y), &table, false);
        prop_assert!(close(kernel_west(&a, &b, l, theta, &sim), oracle_west(&a, &b, l, theta, &sim)));
        prop_assert!(close(kernel_wess(&a, &b, l, &sim), oracle_wess(&a, &b, l, &sim)));
    }

    #[test]
    fn wess_is_exact_over_rationals(a in sentence(8), b in sentence(8), num in 1i64..=4) {
        // rational similarity derived from token indices, symmetric by construction
        let sim = |x: &String, y: &String| {
            let (i, j): (i64, i64) = (x[1..].parse().unwrap(), y[1..].parse().unwrap());
            rational((i + 1) * (j + 1), 25)
        };
        let l = rational(num, 4);
        prop_assert_eq!(kernel_wess(&a, &b, l.clone(), &sim), oracle_wess(&a, &b, l, &sim));
    }

    #[test]
    fn every_variant_is_symmetric(a in sentence(12), b in sentence(12), l in lambda(), seed in any::<u64>()) {
        let table = random_table(&mut common::rng(seed), 5, 8);
        let sim = |x: &String, y: &String| token_sim(TokenRef::new(x), TokenRef::new(y), &table, false);
        let pairs = [
            (kernel_sm(&a, &b, l), kernel_sm(&b, &a, l)),
            (kernel_west(&a, &b, l, 0.3, &sim), kernel_west(&b, &a, l, 0.3, &sim)),
            (kernel_wess(&a, &b, l, &sim), kernel_wess(&b, &a, l, &sim)),
        ];
        for (ab, ba) in pairs {
            prop_assert!((ab - ba).abs() <= 1e-12 * ab.abs().max(1.0), "{} vs {}", ab, ba);
        }
    }

    #[test]
    fn lambda_one_counts_matching_ngram_pairs(a in sentence(12), b in sentence(12)) {
        let k = kernel_sm(&a, &b, 1.0);
        let count: u64 = common_ngram_counts(&a, &b).iter().sum();
        prop_assert!((k - count as f64).abs() <= 1e-9);
        let exact = oracle_sm(&a, &b, Exact::one());
        prop_assert!(exact.is_integer() && exact >= Exact::zero());
    }

    #[test]
    fn appending_a_shared_token_never_decreases_sm(a in sentence(10), b in sentence(10), t in 0..5usize, l in lambda()) {
        let (mut a2, mut b2) = (a.clone(), b.clone());
        a2.push(alphabet_token(t));
        b2.push(alphabet_token(t));
        prop_assert!(kernel_sm(&a2, &b2, l) >= kernel_sm(&a, &b, l));
    }

    #[test]
    fn west_above_every_cross_similarity_is_string_match(
        a in sentence(12),
        b in sentence(12),
        l in lambda(),
        seed in any::<u64>(),
    ) {
        let table = random_table(&mut common::rng(seed), 5, 8);
        let sim = |x: &String, y: &String| token_sim(TokenRef::new(x), TokenRef::new(y), &table, false);
        let max_cross = a
            .iter()
            .flat_map(|x| b.iter().filter(move |y| *y != x).map(move |y| sim(x, y)))
            .fold(-1.0f64, f64::max);
        let theta = (max_cross + 1.0) / 2.0 + 1e-9;
        prop_assume!(theta <= 1.0 && max_cross < 1.0);
        prop_assert_eq!(kernel_west(&a, &b, l, theta, &sim), kernel_sm(&a, &b, l));
    }

    #[test]
    fn wess_with_match_indicator_dominates_sm(a in sentence(12), b in sentence(12), l in lambda()) {
        let indicator = |x: &String, y: &String| if x == y { 1.0 } else { 0.0 };
        let wess = kernel_wess(&a, &b, l, &indicator);
        prop_assert!(wess >= kernel_sm(&a, &b, l));
        prop_assert!(close(wess, oracle_wess(&a, &b, l, &indicator)));
    }
}

#[test]
fn wess_with_match_indicator_credits_matches_after_a_mismatch() {
    // The score recursion is additive and ungated, so a match reached through
    // a mismatched diagonal still contributes; string match does not count it.
    let indicator = |x: &&str, y: &&str| if x == y { 1.0 } else { 0.0 };
    let (a, b) = (["x", "a"], ["y", "a"]);
    assert_eq!(kernel_sm(&a, &b, 0.5), 0.5);
    assert_eq!(kernel_wess(&a, &b, 0.5, &indicator), 0.75);
    assert_eq!(oracle_wess(&a, &b, 0.5, &indicator), 0.75);
}

#[test]
fn worked_values_are_exact() {
    let half = rational(1, 2);
    assert_eq!(
        kernel_sm(&["a", "b", "c"], &["a", "b", "d"], half.clone()),
        rational(5, 4)
    );
    for l in [rational(1, 3), half.clone(), Exact::one()] {
        let expected = rational(3, 1) * l.clone()
            + rational(2, 1) * l.clone() * l.clone()
            + l.clone() * l.clone() * l.clone();
        assert_eq!(kernel_sm(&["a", "b", "c"], &["a", "b", "c"], l), expected);
    }
    let one = |_: &&str, _: &&str| Exact::one();
    assert_eq!(
        kernel_wess(&["a", "b"], &["c", "d"], half, &one),
        rational(9, 4)
    );
}
