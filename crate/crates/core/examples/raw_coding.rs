//! Fits a topic model on a synthetic corpus and prints each raw code: its top
//! words and the documents that weigh most on it.
//!
//! Run with `cargo run --example raw_coding`.

use groundwork::lda::{run_lda, LdaParams};
use groundwork::synthetic::{matched_cosine, planted_corpus, PlantedSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let planted = planted_corpus(&PlantedSpec::default());
    let params = LdaParams::new(5).with_sweeps(300).with_seed(3);
    let model = run_lda(&planted.corpus, &params)?;

    let trace = &model.log_likelihood_trace;
    println!(
        "log-likelihood: first sweep {:.1}, last sweep {:.1}",
        trace[0],
        trace[trace.len() - 1]
    );
    println!("recovery of planted topics (mean cosine): {:.4}", matched_cosine(&model, &planted.phi));

    for topic in 0..model.num_topics {
        let words = model.top_words(topic, 8)?;
        let docs: Vec<String> = model
            .top_documents(topic, 3)?
            .into_iter()
            .map(|(id, w)| format!("{id}({w:.2})"))
            .collect();
        println!("topic_{topic}: {}", words.join(" "));
        println!("         documents: {}", docs.join(", "));
    }
    let csv = model.theta_csv();
    println!("\ndocument-topic matrix, first rows:");
    for line in csv.lines().take(4) {
        println!("{line}");
    }
    Ok(())
}
