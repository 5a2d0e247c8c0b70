use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tokeval::bpe::{train, TokenizerModel};
use tokeval::pretokenize::PreTokenizer;
use tokeval::{Corpus, Error, TokenId};
use tokeval_testkit::{naive_train, random_corpus, random_text, replay_encode};

fn ids(s: &str) -> Vec<TokenId> {
    s.bytes().map(TokenId::from).collect()
}

#[test]
fn tie_break_prefers_smaller_left_bytes() {
    let m = train(&Corpus::from_texts(["ab cd ab cd"]), PreTokenizer::Ws, 257).unwrap();
    assert_eq!(m.merges(), [(97, 98)]);
}

#[test]
fn single_merge_encoding() {
    let m = TokenizerModel::from_merges(PreTokenizer::Gpt2, vec![(97, 98)], 257).unwrap();
    assert_eq!(m.encode("abc").ids, vec![256, 99]);
    assert_eq!(m.token_bytes(256), Some(&b"ab"[..]));
}

#[test]
fn zero_merge_model_emits_bytes() {
    let m = train(
        &Corpus::from_texts(["anything at all"]),
        PreTokenizer::Gpt2,
        256,
    )
    .unwrap();
    assert!(m.merges().is_empty());
    assert_eq!(m.encode("hi").ids, ids("hi"));
    let emoji = "héllo 😀";
    assert_eq!(m.encode(emoji).ids, ids(emoji));
}

#[test]
fn decode_examples() {
    let m = TokenizerModel::base(PreTokenizer::Ws);
    assert_eq!(m.decode(&[]).unwrap(), b"");
    assert_eq!(m.decode(&ids("hi")).unwrap(), b"hi");
    assert!(matches!(
        m.decode(&[256]),
        Err(Error::TokenOutOfRange {
            id: 256,
            vocab_size: 256
        })
    ));
}

#[test]
fn vocab_accounting_counts_base_bytes() {
    let text = "the quick brown fox jumps over the lazy dog ".repeat(40);
    let m = train(&Corpus::from_texts([text]), PreTokenizer::Gpt2, 500).unwrap();
    assert!(m.merges().len() <= 244);
    assert_eq!(m.vocab_size(), 256 + m.merges().len());
    assert_eq!(m.requested_vocab_size(), 500);
}

#[test]
fn training_matches_naive_recount_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut total_merges = 0;
    for round in 0..60 {
        let docs = random_corpus(&mut rng, 1024);
        let pt = PreTokenizer::ALL[round % PreTokenizer::ALL.len()];
        let vocab = rng.gen_range(256..=300);
        let model = train(&Corpus::from_texts(docs.clone()), pt, vocab).unwrap();
        let expected = naive_train(&docs, pt, vocab);
        assert_eq!(
            model.merges(),
            expected,
            "round {round}, {pt}, vocab {vocab}"
        );
        total_merges += expected.len();
        for doc in docs.iter().take(5) {
            assert_eq!(
                model.encode(doc).ids,
                replay_encode(model.merges(), pt, doc)
            );
        }
        let probe = random_text(&mut rng, 30);
        assert_eq!(
            model.encode(&probe).ids,
            replay_encode(model.merges(), pt, &probe)
        );
    }
    assert!(
        total_merges > 60 * 10,
        "corpora too poor to exercise training: {total_merges}"
    );
}

#[test]
fn larger_prefix_never_encodes_longer() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for _ in 0..10 {
        let docs = random_corpus(&mut rng, 2048);
        let full = train(&Corpus::from_texts(docs.clone()), PreTokenizer::Gpt2, 320).unwrap();
        let probes: Vec<String> = (0..10)
            .map(|_| random_text(&mut rng, 20))
            .chain(docs)
            .collect();
        for text in &probes {
            let mut prev = usize::MAX;
            for n in 0..=full.merges().len() {
                let len = full.truncated(n).encode(text).len();
                assert!(len <= prev, "{text:?} grew at prefix {n}");
                prev = len;
            }
        }
    }
}

#[test]
fn tokens_stay_inside_pretokens() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for pt in PreTokenizer::ALL {
        let docs = random_corpus(&mut rng, 1024);
        let model = train(&Corpus::from_texts(docs.clone()), pt, 300).unwrap();
        for text in docs.iter().chain([&random_text(&mut rng, 30)]) {
            let spans = pt.spans(text);
            let mut offset = 0;
            for &id in &model.encode(text).ids {
                let end = offset + model.token_bytes(id).unwrap().len();
                assert!(
                    spans.iter().any(|s| s.start <= offset && end <= s.end),
                    "{pt}: token {id} spans {offset}..{end} of {text:?}"
                );
                offset = end;
            }
            assert_eq!(offset, text.len());
        }
    }
}

#[test]
fn cached_encoding_matches_plain_encoding() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let docs = random_corpus(&mut rng, 1024);
    let model = train(&Corpus::from_texts(docs.clone()), PreTokenizer::Llama3, 300).unwrap();
    let mut cache = tokeval::bpe::EncodeCache::new(4);
    for doc in docs.iter().chain(docs.iter()) {
        let mut out = Vec::new();
        model.encode_cached(doc, &mut cache, &mut out);
        assert_eq!(out, model.encode(doc).ids);
    }
}

fn trained(pt: PreTokenizer) -> TokenizerModel {
    let mut rng = ChaCha8Rng::seed_from_u64(pt as u64);
    train(&Corpus::from_texts(random_corpus(&mut rng, 1024)), pt, 300).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn decode_inverts_encode(text in "\\PC{0,60}|[ a-z'0-9\\n]{0,60}", k in 0usize..5) {
        let model = trained(PreTokenizer::ALL[k]);
        let seq = model.encode(&text);
        prop_assert!(seq.ids.iter().all(|&id| (id as usize) < model.vocab_size()));
        prop_assert_eq!(model.decode(&seq.ids).unwrap(), text.as_bytes());
    }

    #[test]
    fn model_file_roundtrip(seed in 0u64..1000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pt = PreTokenizer::ALL[rng.gen_range(0..5)];
        let docs = random_corpus(&mut rng, 512);
        let model = train(&Corpus::from_texts(docs), pt, 280).unwrap();
        prop_assert_eq!(TokenizerModel::from_json(&model.to_json()).unwrap(), model);
    }
}
