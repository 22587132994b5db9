//! Opens a coding project over a fitted model and, for one code, lists the
//! documents that support it next to the memos written about it.
//!
//! Run with `cargo run --example evidence_drilldown`.

use groundwork::lda::{run_lda, LdaParams};
use groundwork::synthetic::{planted_corpus, PlantedSpec};
use groundwork::workflow::{Action, Attachment, Project};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let planted = planted_corpus(&PlantedSpec {
        num_docs: 80,
        ..PlantedSpec::default()
    });
    let model = run_lda(&planted.corpus, &LdaParams::new(5).with_sweeps(200))?;
    let mut project = Project::create(&planted.corpus, &model)?;

    let topic = 2;
    project.apply(Action::AddMemo {
        attached_to: Attachment::Code(topic),
        author: "researcher".into(),
        text: "Check the strongest documents before labeling.".into(),
    })?;

    let code = project.code(topic)?;
    println!("code topic_{topic}: {}", code.top_words.join(" "));
    println!("status: {:?}", code.status);
    println!("evidence:");
    for (doc_id, weight) in model.top_documents(topic, 5)? {
        let doc = planted
            .corpus
            .docs
            .iter()
            .find(|d| d.doc_id == doc_id)
            .expect("model documents come from the corpus");
        let preview: Vec<&str> = doc
            .tokens
            .iter()
            .take(8)
            .filter_map(|&w| planted.corpus.vocabulary.word(w))
            .collect();
        println!("  {doc_id} theta={weight:.3}  {} ...", preview.join(" "));
    }
    for memo in project.memos_for(&Attachment::Code(topic)) {
        println!("memo by {}: {}", memo.author, memo.text);
    }
    Ok(())
}
