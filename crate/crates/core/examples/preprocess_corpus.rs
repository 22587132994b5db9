//! Ingests a JSON-Lines interview file, drops a tagged section and runs the
//! default cleaning pipeline. Prints the vocabulary and what was dropped.
//!
//! Run with `cargo run --example preprocess_corpus`.

use std::io::Write;

use groundwork::corpus::{build_encoded_corpus, ingest, IngestManifest, PreprocessConfig, SectionFilter};

const INTERVIEWS: [(&str, &str, &str); 6] = [
    ("i01", "findings", "Partners shared knowledge early, and sharing built trust between the firms."),
    ("i02", "findings", "Trust grew when the client shared design risk with contractors."),
    ("i03", "findings", "Contractors described knowledge transfer through joint design workshops."),
    ("i04", "methods", "Interviews lasted sixty minutes and were transcribed verbatim."),
    ("i05", "findings", "Risk sharing contracts encouraged partners to propose innovations."),
    ("i06", "findings", "Workshops with partners produced designs the client trusted."),
];

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut file = tempfile::NamedTempFile::new()?;
    for (id, section, text) in INTERVIEWS {
        let record = serde_json::json!({
            "doc_id": id,
            "title": format!("Interview {id}"),
            "section_tags": [section],
            "raw_text": text,
        });
        writeln!(file, "{record}")?;
    }

    let manifest = IngestManifest {
        section_filter: Some(SectionFilter::excluding(["methods"])),
    };
    let corpus = ingest(file.path(), &manifest)?;
    println!("ingested {} documents, skipped {:?}", corpus.len(), corpus.report.skipped);

    let encoded = build_encoded_corpus(&corpus, &PreprocessConfig::default())?;
    println!(
        "{} documents, {} distinct words, {} tokens",
        encoded.num_docs(),
        encoded.vocab_size(),
        encoded.num_tokens()
    );
    for (id, word) in encoded.vocabulary.words().iter().enumerate() {
        let df = encoded.vocabulary.document_frequency(id as u32).unwrap_or(0);
        println!("  {word:<12} df={df}");
    }
    let dropped: Vec<_> = encoded.report.dropped_words.iter().map(|w| w.word.as_str()).collect();
    println!("dropped as too rare: {}", dropped.join(" "));
    Ok(())
}
