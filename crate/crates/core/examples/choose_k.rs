//! Fits one model per candidate number of topics, compares every pair of
//! topic sets by shared top words and picks the K whose topics persist best
//! in the other sets. Smaller sets are easier to cover, so the rule leans
//! toward the smallest well-covered K.
//!
//! Run with `cargo run --example choose_k`.

use groundwork::lda::LdaParams;
use groundwork::synthetic::{planted_corpus, PlantedSpec};
use groundwork::topicsim::{compare_grid, Comparison};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let planted = planted_corpus(&PlantedSpec::default());
    let params = LdaParams::new(5).with_sweeps(200).with_seed(9);
    let grid = compare_grid(&planted.corpus, &[5, 8, 12], &params, 3)?;

    println!("coverage (%) of row K topics by column K topics, threshold {}:", grid.threshold);
    print!("{}", grid.to_csv());

    let comparison = Comparison::new(&planted.corpus.id, grid)?;
    for score in &comparison.selection.scores {
        println!("K={:<3} mean coverage {:.1}%", score.num_topics, score.mean_coverage);
    }
    println!("selected K = {} ({})", comparison.selection.selected_k, comparison.selection.rule);
    Ok(())
}
