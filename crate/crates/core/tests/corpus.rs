use proptest::prelude::*;
use tokeval::corpus::word_count;
use tokeval::{Corpus, CorpusFormat, Error};

#[test]
fn plain_lines_from_disk() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.txt");
    std::fs::write(&path, "a\nb\n").unwrap();
    let c = Corpus::load(&path, CorpusFormat::PlainLines, false).unwrap();
    assert_eq!(c.documents(), ["a", "b"]);

    std::fs::write(&path, "").unwrap();
    assert!(Corpus::load(&path, CorpusFormat::PlainLines, false)
        .unwrap()
        .is_empty());
}

#[test]
fn invalid_utf8_needs_lossy_flag() {
    let bytes = b"ok\n\xff\xfe\n";
    assert!(matches!(
        Corpus::parse(bytes, CorpusFormat::PlainLines, false, "mem"),
        Err(Error::InvalidUtf8 { .. })
    ));
    let c = Corpus::parse(bytes, CorpusFormat::PlainLines, true, "mem").unwrap();
    assert_eq!(c.documents()[1], "\u{fffd}\u{fffd}");
}

#[test]
fn tweet_word_count() {
    // Emoji glued to the last word do not add words.
    assert_eq!(
        word_count("Where are the top places in Broward or Palm Beach?\u{1f914}\u{1f440}"),
        10
    );
}

#[test]
fn missing_file_is_io_error() {
    assert!(matches!(
        Corpus::load("/definitely/not/here.txt", CorpusFormat::Records, false),
        Err(Error::Io { .. })
    ));
}

proptest! {
    #[test]
    fn word_count_is_additive(a in "\\PC{0,60}", b in "\\PC{0,60}") {
        let joined = Corpus::from_texts([a.clone()]).concat(&Corpus::from_texts([b.clone()]));
        prop_assert_eq!(joined.word_count(), word_count(&a) + word_count(&b));
    }

    #[test]
    fn records_roundtrip(docs in prop::collection::vec("\\PC{0,30}|[\\n\\r a]{0,10}", 0..10)) {
        let c = Corpus::from_texts(docs.clone());
        let bytes = c.to_bytes(CorpusFormat::Records);
        let back = Corpus::parse(&bytes, CorpusFormat::Records, false, "mem").unwrap();
        prop_assert_eq!(back.documents(), &docs[..]);
        prop_assert_eq!(back.to_bytes(CorpusFormat::Records), bytes);
    }

    #[test]
    fn lines_roundtrip(lines in prop::collection::vec("[^\\n]{0,20}", 1..10)) {
        let text = lines.join("\n") + "\n";
        let c = Corpus::parse(text.as_bytes(), CorpusFormat::PlainLines, false, "mem").unwrap();
        prop_assert_eq!(c.to_bytes(CorpusFormat::PlainLines), text.as_bytes());
    }
}
