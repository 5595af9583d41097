use anygram::kernels::write_gram;
use anygram::selftest::{random_table, random_tokens};
use anygram::{
    gram_cross, gram_train, AspectMode, Corpus, EmbeddingTable, GramFormat, GramMatrix,
    KernelConfig, Sentence,
};
use proptest::prelude::*;

mod common;

fn random_corpus(seed: u64, n: usize, prefix: &str) -> Corpus {
    let mut rng = common::rng(seed);
    let sentences = (0..n)
        .map(|i| {
            let tokens = random_tokens(&mut rng, 6, 12);
            let aspect = [i % tokens.len()];
            Sentence::new(
                format!("{prefix}{i}"),
                tokens,
                Some(format!("l{}", i % 3)),
                aspect,
            )
            .unwrap()
        })
        .collect();
    Corpus::new(sentences).unwrap()
}

fn configs() -> Vec<KernelConfig<f64>> {
    vec![
        KernelConfig::sm(0.5),
        KernelConfig::sm(0.5).with_normalize(true),
        KernelConfig::sm(0.7).with_aspect_mode(AspectMode::Suffix),
        KernelConfig::west(0.5, 0.3),
        KernelConfig::west(0.5, 0.3).with_aspect_mode(AspectMode::Flag),
        KernelConfig::wess(0.5),
        KernelConfig::wess(0.4)
            .with_normalize(true)
            .with_aspect_mode(AspectMode::Flag),
    ]
}

fn table_for(config: &KernelConfig<f64>, seed: u64) -> Option<EmbeddingTable<f64>> {
    config
        .variant
        .uses_embeddings()
        .then(|| random_table(&mut common::rng(seed), 6, 8))
}

fn bytes(gram: &GramMatrix<f64>) -> Vec<u8> {
    let mut out = Vec::new();
    write_gram(&mut out, gram, GramFormat::Bin).unwrap();
    out
}

fn in_pool<R: Send>(threads: usize, f: impl FnOnce() -> R + Send) -> R {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .unwrap()
        .install(f)
}

#[test]
fn train_grams_are_exactly_symmetric() {
    let corpus = random_corpus(1, 25, "s");
    for config in configs() {
        let table = table_for(&config, 2);
        let gram = gram_train(&corpus, &config, table.as_ref()).unwrap();
        assert_eq!(gram.max_asymmetry(), Some(0.0), "{}", config.fingerprint());
    }
}

#[test]
fn output_bytes_do_not_depend_on_thread_count() {
    let corpus = random_corpus(3, 30, "s");
    let test = random_corpus(4, 12, "t");
    for config in configs() {
        let table = table_for(&config, 5);
        let run = |threads| {
            in_pool(threads, || {
                (
                    bytes(&gram_train(&corpus, &config, table.as_ref()).unwrap()),
                    bytes(&gram_cross(&test, &corpus, &config, table.as_ref()).unwrap()),
                )
            })
        };
        let single = run(1);
        assert_eq!(single, run(4), "{}", config.fingerprint());
        assert_eq!(single, run(3));
    }
}

#[test]
fn cross_against_itself_equals_train() {
    let corpus = random_corpus(6, 20, "s");
    for config in configs() {
        let table = table_for(&config, 7);
        let train = gram_train(&corpus, &config, table.as_ref()).unwrap();
        let cross = gram_cross(&corpus, &corpus, &config, table.as_ref()).unwrap();
        assert_eq!(train.values(), cross.values(), "{}", config.fingerprint());
        assert_eq!(train.fingerprint(), cross.fingerprint());
    }
}

#[test]
fn normalized_grams_have_unit_diagonal_and_bounded_entries() {
    let corpus = random_corpus(8, 20, "s");
    for config in [
        KernelConfig::sm(0.5).with_normalize(true),
        KernelConfig::wess(0.5).with_normalize(true),
    ] {
        let table = table_for(&config, 9);
        let gram = gram_train(&corpus, &config, table.as_ref()).unwrap();
        for i in 0..gram.rows() {
            assert_eq!(gram.get(i, i), 1.0);
            for j in 0..gram.cols() {
                assert!(gram.get(i, j).abs() <= 1.0 + 1e-12);
            }
        }
    }
}

#[test]
fn string_match_and_score_grams_are_positive_semidefinite() {
    let corpus = random_corpus(10, 50, "s");
    for config in [
        KernelConfig::sm(0.5),
        KernelConfig::wess(0.5),
        KernelConfig::sm(1.0),
    ] {
        let table = table_for(&config, 11);
        let gram = gram_train(&corpus, &config, table.as_ref()).unwrap();
        let (lo, hi) = gram.eigen_extremes().unwrap();
        assert!(lo >= -1e-8 * hi, "{}: [{lo}, {hi}]", config.fingerprint());
    }
    let west = gram_train(
        &corpus,
        &KernelConfig::west(0.5, 0.3),
        table_for(&KernelConfig::wess(0.5), 11).as_ref(),
    )
    .unwrap();
    assert!(west.may_be_indefinite());
}

#[test]
fn aspect_modes_separate_instances_of_one_sentence() {
    let base = Sentence::from_tokens("s", &["the", "pizza", "and", "the", "service"]).unwrap();
    let corpus = Corpus::new(vec![
        base.for_aspect("s#pizza", [1], Some("pos".into())).unwrap(),
        base.for_aspect("s#service", [4], Some("neg".into()))
            .unwrap(),
    ])
    .unwrap();
    let sm = gram_train(
        &corpus,
        &KernelConfig::sm(0.5).with_aspect_mode(AspectMode::Suffix),
        None,
    )
    .unwrap();
    assert_ne!(sm.row(0), sm.row(1));
    let table = EmbeddingTable::from_entries(
        2,
        [
            ("the", vec![1.0, 0.0]),
            ("pizza", vec![0.6, 0.8]),
            ("and", vec![0.0, 1.0]),
            ("service", vec![0.8, 0.6]),
        ]
        .map(|(t, v)| (t.to_owned(), v)),
    )
    .unwrap();
    let flag = KernelConfig::wess(0.5).with_aspect_mode(AspectMode::Flag);
    let wess = gram_train(&corpus, &flag, Some(&table)).unwrap();
    assert_ne!(wess.row(0), wess.row(1));
    // without marking the two instances are indistinguishable
    let plain = gram_train(&corpus, &KernelConfig::wess(0.5), Some(&table)).unwrap();
    assert_eq!(plain.row(0)[0], plain.row(0)[1]);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn gram_entries_equal_pairwise_kernels(seed in any::<u64>(), n in 1usize..8) {
        let corpus = random_corpus(seed, n, "s");
        let gram = gram_train(&corpus, &KernelConfig::sm(0.5), None).unwrap();
        for (i, a) in corpus.iter().enumerate() {
            for (j, b) in corpus.iter().enumerate() {
                let direct: f64 = anygram::kernel_sm(a.tokens(), b.tokens(), 0.5);
                prop_assert!((gram.get(i, j) - direct).abs() <= 1e-12 * direct.max(1.0));
            }
        }
    }

    #[test]
    fn similarity_memo_is_transparent(seed in any::<u64>()) {
        let corpus = random_corpus(seed, 6, "s");
        let table = random_table(&mut common::rng(seed ^ 1), 6, 8);
        let gram = gram_train(&corpus, &KernelConfig::wess(0.5), Some(&table)).unwrap();
        for (i, a) in corpus.iter().enumerate() {
            for (j, b) in corpus.iter().enumerate() {
                let sim = |x: &String, y: &String| anygram::token_sim(anygram::TokenRef::new(x), anygram::TokenRef::new(y), &table, false);
                let direct = anygram::kernel_wess(a.tokens(), b.tokens(), 0.5, &sim);
                prop_assert!((gram.get(i, j) - direct).abs() <= 1e-12 * direct.abs().max(1.0));
            }
        }
    }
}
