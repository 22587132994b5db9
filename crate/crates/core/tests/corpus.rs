use std::io::Write;

use groundwork::corpus::{
    build_encoded_corpus, default_stopwords, ingest, remove_stopwords, stem, tokenize, Corpus,
    CorpusError, Document, IngestManifest, PreprocessConfig, SectionFilter, SkipReason,
};
use proptest::prelude::*;

fn doc(id: &str, tags: &[&str], text: &str) -> Document {
    Document {
        doc_id: id.into(),
        title: id.into(),
        section_tags: tags.iter().map(|t| t.to_string()).collect(),
        raw_text: text.into(),
    }
}

#[test]
fn jsonl_manifest_excludes_tagged_sections() {
    let mut file = tempfile::NamedTempFile::new().unwrap();
    for i in 0..60 {
        let tags: &[&str] = if i % 9 == 4 { &["excluded"] } else { &["interview"] };
        let record = serde_json::json!({
            "doc_id": format!("d{i:02}"),
            "title": format!("Transcript {i}"),
            "section_tags": tags,
            "raw_text": format!("teachers describe workload number {i}"),
        });
        writeln!(file, "{record}").unwrap();
    }
    let manifest = IngestManifest {
        section_filter: Some(SectionFilter::excluding(["excluded"])),
    };
    let corpus = ingest(file.path(), &manifest).unwrap();
    assert_eq!(corpus.len(), 53);
    assert_eq!(corpus.report.skipped.len(), 7);
    assert!(corpus
        .report
        .skipped
        .iter()
        .all(|s| s.reason == SkipReason::SectionFiltered));
    assert!(corpus.documents.iter().all(|d| d.section_tags == ["interview"]));
}

#[test]
fn include_filter_keeps_only_listed_sections() {
    let docs = vec![
        doc("a", &["findings"], "alpha"),
        doc("b", &["methods"], "beta"),
        doc("c", &[], "gamma"),
    ];
    let manifest = IngestManifest {
        section_filter: Some(SectionFilter::including(["findings"])),
    };
    let corpus = Corpus::from_documents(docs, &manifest).unwrap();
    let ids: Vec<_> = corpus.documents.iter().map(|d| d.doc_id.as_str()).collect();
    assert_eq!(ids, ["a"]);
}

const PARAGRAPH: &str = "classroom training yourself workload parent community other meeting reflection, pressure ve for off. who didn curriculum than pressure, feedback curriculum burnout resource planning interview hasn participant. curriculum, principal most deadline participant described here workload resource participant, theirs community them. colleague pressure meeting itself been myself, deadline principal described only each deadline teacher. interview participant, when the training curriculum re your training reflection the, when doesn. now its all participant reflection interview principal, shouldn assessment during resource support there. against training won, won what be below him will resource curriculum colleague, community. during curriculum schedule deadline teacher nor deadline deadline, reflection";

#[test]
fn default_stopword_list_removes_exactly_the_stopwords() {
    let config = PreprocessConfig::default();
    let tokens = tokenize(PARAGRAPH, &config);
    assert_eq!(tokens.len(), 100);
    assert_eq!(remove_stopwords(tokens, &config).len(), 59);
}

#[test]
fn snowball_stems_match_reference() {
    let cases = [
        ("running", "run"),
        ("runs", "run"),
        ("ran", "ran"),
        ("connection", "connect"),
        ("connected", "connect"),
        ("connecting", "connect"),
        ("generously", "generous"),
        ("teachers", "teacher"),
        ("teaching", "teach"),
        ("argued", "argu"),
        ("arguing", "argu"),
        ("happiness", "happi"),
        ("relational", "relat"),
        ("organizational", "organiz"),
    ];
    for (word, expected) in cases {
        assert_eq!(stem(word), expected, "stem of {word}");
    }
}

#[test]
fn stopword_list_is_lowercase_and_nonempty() {
    let words = default_stopwords();
    assert!(words.len() > 100);
    assert!(words.iter().all(|w| w.chars().all(|c| !c.is_uppercase())));
    assert!(words.contains("the"));
}

const INTERVIEWS: [&str; 20] = [
    "Teachers do burnout schedule teachers assessments being students herself above feedback above; 2024 notes!",
    "Did having meeting because motivation few couldn teachers burnout taught scheduling studying supportive into; 2024 notes!",
    "Didn training community meeting studies colleague scheduling principal reflection for and parent supportive doesn how; 2024 notes!",
    "Couldn training parent did supportive he studies training deadlines teachers burnout communities; 2024 notes!",
    "By classrooms against assessment parent being planned doing communities; 2024 notes!",
    "He had trained meetings motivated did student meetings about; 2024 notes!",
    "Few workload trained principal any as motivated have; 2024 notes!",
    "Zyzzyva the and",
    "Doesn students assessments parenting trained meeting parent studying classroom scheduling had; 2024 notes!",
    "Reflection colleague teaching before classrooms been motivation as all motivated burnout doesn; 2024 notes!",
    "About studying parent am student reflecting has and supporting again schedule colleagues students; 2024 notes!",
    "Planning being burnout communities teachers students down having classroom ain; 2024 notes!",
    "Planning studying few and against taught him each scheduling here reflection doesn community has training reflecting; 2024 notes!",
    "Feedback him planned meetings meetings do communities communities meeting be classroom his him taught pressure about supportive; 2024 notes!",
    "Colleagues parenting both planned schedule principal teaching do principal about are reflecting meeting teaching assessment assessments communities trained if student; 2024 notes!",
    "Workload students colleagues principal reflecting schedule doing students studying aren; 2024 notes!",
    "At parenting colleague from taught herself community pressure colleagues again classrooms scheduling hers; 2024 notes!",
    "Parent are him in between below colleague scheduling community colleague planning planning pressure an; 2024 notes!",
    "Planning ain studying student but curriculum studies herself as community training if her; 2024 notes!",
    "Community assessments scheduling burnout planned because assessments principal teachers parents burnout classroom studying motivated doing planning; 2024 notes!",
];

fn interviews() -> Corpus {
    let docs = INTERVIEWS
        .iter()
        .enumerate()
        .map(|(i, text)| doc(&format!("p{i:02}"), &[], text));
    Corpus::from_documents(docs, &IngestManifest::default()).unwrap()
}

#[test]
fn default_pipeline_matches_reference_counts() {
    let encoded = build_encoded_corpus(&interviews(), &PreprocessConfig::default()).unwrap();
    let expected_vocab = [
        "assess",
        "burnout",
        "classroom",
        "colleagu",
        "communiti",
        "feedback",
        "meet",
        "motiv",
        "note",
        "parent",
        "plan",
        "pressur",
        "princip",
        "reflect",
        "schedul",
        "student",
        "studi",
        "support",
        "taught",
        "teach",
        "teacher",
        "train",
        "workload",
    ];
    assert_eq!(encoded.vocabulary.words(), expected_vocab);
    assert_eq!(encoded.num_tokens(), 174);
    let lengths: Vec<usize> = encoded.docs.iter().map(|d| d.tokens.len()).collect();
    assert_eq!(lengths, [8, 9, 11, 9, 6, 6, 5, 10, 8, 9, 7, 9, 12, 16, 9, 9, 9, 7, 15]);
    assert_eq!(encoded.report.dropped_documents, ["p07"]);
    let dropped: Vec<_> = encoded.report.dropped_words.iter().map(|w| w.word.as_str()).collect();
    assert_eq!(dropped, ["curriculum", "deadlin", "zyzzyva"]);
}

#[test]
fn encoded_corpus_round_trips_and_validates() {
    let encoded = build_encoded_corpus(&interviews(), &PreprocessConfig::default()).unwrap();
    encoded.validate().unwrap();
    let back = groundwork::corpus::EncodedCorpus::from_json(&encoded.to_json()).unwrap();
    assert_eq!(back.id, encoded.id);
    assert_eq!(back.vocabulary, encoded.vocabulary);
    assert_eq!(back.num_tokens(), encoded.num_tokens());
}

#[test]
fn identical_inputs_give_identical_ids() {
    let a = build_encoded_corpus(&interviews(), &PreprocessConfig::default()).unwrap();
    let b = build_encoded_corpus(&interviews(), &PreprocessConfig::default()).unwrap();
    assert_eq!(a.id, b.id);
    let unstemmed = PreprocessConfig {
        stemming_enabled: false,
        ..PreprocessConfig::default()
    };
    let c = build_encoded_corpus(&interviews(), &unstemmed).unwrap();
    assert_ne!(a.id, c.id);
}

#[test]
fn empty_corpus_is_rejected() {
    let corpus = Corpus::default();
    assert!(matches!(
        build_encoded_corpus(&corpus, &PreprocessConfig::default()),
        Err(CorpusError::EmptyCorpus)
    ));
}

#[test]
fn corpus_of_stopwords_only_is_rejected() {
    let docs = vec![doc("a", &[], "the and of"), doc("b", &[], "it is the")];
    let corpus = Corpus::from_documents(docs, &IngestManifest::default()).unwrap();
    assert!(matches!(
        build_encoded_corpus(&corpus, &PreprocessConfig::default()),
        Err(CorpusError::AllDocumentsEmpty)
    ));
}

proptest! {
    #[test]
    fn stem_is_idempotent(word in "[a-z]{2,14}") {
        let once = stem(&word);
        prop_assert_eq!(stem(&once), once);
    }

    #[test]
    fn tokens_are_lowercase_alphabetic(text in "\\PC{0,80}") {
        let config = PreprocessConfig::default();
        for token in tokenize(&text, &config) {
            prop_assert!(token.chars().count() >= config.min_token_length);
            prop_assert!(token.chars().all(char::is_alphabetic));
            prop_assert_eq!(token.to_lowercase(), token.clone());
        }
    }

    #[test]
    fn every_kept_word_meets_min_df(
        texts in proptest::collection::vec("[a-e]{2,3}( [a-e]{2,3}){0,6}", 2..8),
        min_df in 1usize..4,
    ) {
        let docs = texts.iter().enumerate().map(|(i, t)| doc(&format!("d{i}"), &[], t));
        let corpus = Corpus::from_documents(docs, &IngestManifest::default()).unwrap();
        let config = PreprocessConfig {
            stemming_enabled: false,
            min_document_frequency: min_df,
            stopwords: Default::default(),
            ..PreprocessConfig::default()
        };
        if let Ok(encoded) = build_encoded_corpus(&corpus, &config) {
            for id in 0..encoded.vocab_size() as u32 {
                prop_assert!(encoded.vocabulary.document_frequency(id).unwrap() as usize >= min_df);
            }
            prop_assert!(encoded.docs.iter().all(|d| !d.tokens.is_empty()));
        }
    }
}
