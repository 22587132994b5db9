//! Scripted pass through all four coding stages on a 40-topic model:
//! 6 outliers removed, two experts label the remaining 34 codes, 4 codes are
//! pruned for low ratings, 10 categories shrink to 6, and the core categories
//! are grouped into two dimensions. Prints the counts and the category table.
//!
//! Run with `cargo run --example funnel_replay`.

use groundwork::lda::{run_lda, LdaParams};
use groundwork::synthetic::{planted_corpus, PlantedSpec};
use groundwork::workflow::{
    export_tables, Action, Attachment, CategoryKind, CodeStatus, Export, ExportFormat, Outcome,
    Project, Stage, WorkflowError, DEFAULT_PRUNE_THRESHOLD,
};

pub const NUM_TOPICS: usize = 40;
pub const OUTLIERS: [usize; 6] = [5, 9, 11, 16, 22, 38];
pub const LOW_RATED: [usize; 4] = [6, 19, 23, 26];
/// Rated 2 by both experts: sits exactly on the threshold and survives.
pub const BOUNDARY: usize = 1;
pub const EXPERTS: [&str; 2] = ["expert_a", "expert_b"];

/// (name, kind, members). The first six survive pruning; the last four hold a
/// single code each.
pub const CATEGORIES: [(&str, CategoryKind, &[usize]); 10] = [
    ("Leadership Involvement for Collaboration", CategoryKind::Core, &[0, 1, 20, 18, 21, 33, 36]),
    ("CI During a Project", CategoryKind::Generic, &[15, 30, 31, 37, 39]),
    ("Innovation and Stakeholder Involvement", CategoryKind::Core, &[2, 13, 14, 17, 29, 30, 32]),
    ("Project Management", CategoryKind::Generic, &[20, 24, 25, 28, 34, 35]),
    ("Human Capital of CI", CategoryKind::Core, &[3, 12]),
    ("Structural capital of CI", CategoryKind::Core, &[3, 4, 7, 8, 10, 17, 20, 27]),
    ("Knowledge Transfer", CategoryKind::Core, &[8]),
    ("Risk Sharing", CategoryKind::Generic, &[10]),
    ("Contract Incentives", CategoryKind::Generic, &[24]),
    ("Virtual Teams", CategoryKind::Core, &[39]),
];

pub const DIMENSIONS: [(&str, [&str; 2]); 2] = [
    (
        "Governance of CI",
        ["Leadership Involvement for Collaboration", "Innovation and Stakeholder Involvement"],
    ),
    ("Capabilities for CI", ["Human Capital of CI", "Structural capital of CI"]),
];

const KNOWN_LABELS: [(usize, &str); 4] = [
    (0, "Management Influence on Organisational Adaptation"),
    (2, "Stakeholder Collaboration for Innovation Project"),
    (32, "Stakeholder Collaboration for Value"),
    (33, "complex Projects Governance, Autonomy and Collaboration"),
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FunnelCounts {
    pub codes: usize,
    pub active_after_outliers: usize,
    pub labels_per_expert: Vec<usize>,
    pub pruned_for_rating: Vec<usize>,
    pub active_after_prune: usize,
    pub categories_built: usize,
    pub singleton_categories_deleted: usize,
    pub categories_after_prune: usize,
    pub categories_holding_topic_20: usize,
    pub codes_in_several_categories: usize,
    pub dimensions: usize,
}

pub struct Funnel {
    /// The project right after creation, before any action.
    pub initial: Project,
    pub project: Project,
    pub counts: FunnelCounts,
}

/// A 40-topic model fitted on a small synthetic corpus, and a fresh project over it.
pub fn new_project() -> Project {
    let planted = planted_corpus(&PlantedSpec {
        num_topics: 8,
        vocab_size: 300,
        num_docs: 60,
        doc_length: 60,
        ..PlantedSpec::default()
    });
    let params = LdaParams::new(NUM_TOPICS).with_sweeps(20).with_seed(42);
    let model = run_lda(&planted.corpus, &params).expect("model fits");
    Project::create(&planted.corpus, &model).expect("model matches corpus")
}

fn rating(topic: usize, expert: usize) -> i64 {
    if LOW_RATED.contains(&topic) {
        // averages 1.5 or 1.0
        [1, 1 + (topic % 2) as i64][expert]
    } else if topic == BOUNDARY {
        2
    } else {
        3 + ((topic + expert) % 3) as i64
    }
}

/// Raw coding and expert labeling, stopping just before the rating prune.
pub fn through_expert_labels(project: &mut Project) -> Result<(), WorkflowError> {
    for t in OUTLIERS {
        project.apply(Action::MarkOutlier {
            topic_id: t,
            reason: "off-scope for collaborative innovation".into(),
        })?;
    }
    project.apply(Action::AdvanceStage)?;

    let active: Vec<usize> = project.active_codes().map(|c| c.topic_id).collect();
    for (e, expert) in EXPERTS.iter().enumerate() {
        for &t in &active {
            let words = &project.code(t)?.top_words;
            let label = format!("{} and {}", words[0], words[1]);
            project.apply(Action::SubmitExpertLabel {
                expert_id: expert.to_string(),
                topic_id: t,
                label,
                rating: rating(t, e),
            })?;
        }
    }
    for &t in &active {
        let label = KNOWN_LABELS
            .iter()
            .find(|(k, _)| *k == t)
            .map(|(_, l)| l.to_string())
            .unwrap_or_else(|| project.code(t).expect("known code").expert_labels[0].label.clone());
        project.apply(Action::SetAggregateLabel { topic_id: t, label })?;
    }
    project.apply(Action::AddMemo {
        attached_to: Attachment::Project,
        author: "researcher".into(),
        text: "Experts agreed on most labels; disagreements resolved in discussion.".into(),
    })?;
    Ok(())
}

pub fn run_funnel() -> Result<Funnel, WorkflowError> {
    let mut project = new_project();
    let initial = project.clone();
    let codes = project.codes().len();

    through_expert_labels(&mut project)?;
    let active_after_outliers = codes - project.count_with_status(CodeStatus::OutlierRemoved);
    let labels_per_expert = EXPERTS
        .iter()
        .map(|e| {
            project
                .codes()
                .iter()
                .filter(|c| c.expert_labels.iter().any(|l| l.expert_id == *e))
                .count()
        })
        .collect();

    let Outcome::CodesRemoved { topic_ids: pruned_for_rating } = project.apply(Action::PruneLowRated {
        threshold: DEFAULT_PRUNE_THRESHOLD,
    })?
    else {
        unreachable!("prune reports removed codes")
    };
    let active_after_prune = project.active_codes().count();
    project.apply(Action::AdvanceStage)?;

    for (name, kind, members) in CATEGORIES {
        let Outcome::CategoryCreated { category_id } = project.apply(Action::CreateCategory {
            name: name.into(),
            kind,
        })?
        else {
            unreachable!("create reports the new id")
        };
        for &t in members {
            project.apply(Action::AssignCode {
                category_id,
                topic_id: t,
            })?;
        }
    }
    let categories_built = project.categories().len();
    let categories_holding_topic_20 = project.categories_of(20).len();
    project.apply(Action::AddMemo {
        attached_to: Attachment::Code(20),
        author: "researcher".into(),
        text: "topic_20 mixes leadership, delivery and structure; kept in all three.".into(),
    })?;
    let Outcome::CategoriesDeleted { category_ids } = project.apply(Action::PruneSingletonCategories)? else {
        unreachable!("prune reports deleted categories")
    };
    let categories_after_prune = project.categories().len();
    let codes_in_several_categories = project
        .active_codes()
        .filter(|c| project.categories_of(c.topic_id).len() > 1)
        .count();
    project.apply(Action::AdvanceStage)?;

    for (name, members) in DIMENSIONS {
        let Outcome::DimensionCreated { dimension_id } =
            project.apply(Action::CreateDimension { name: name.into() })?
        else {
            unreachable!("create reports the new id")
        };
        for member in members {
            let category_id = project
                .categories()
                .iter()
                .find(|c| c.name == member)
                .map(|c| c.category_id)
                .expect("category survived pruning");
            project.apply(Action::AssignCategory {
                dimension_id,
                category_id,
            })?;
        }
        project.apply(Action::AddMemo {
            attached_to: Attachment::Dimension(dimension_id),
            author: "researcher".into(),
            text: format!("{name} groups two core categories."),
        })?;
    }
    assert_eq!(project.stage(), Stage::TheoryBuilding);

    let counts = FunnelCounts {
        codes,
        active_after_outliers,
        labels_per_expert,
        pruned_for_rating,
        active_after_prune,
        categories_built,
        singleton_categories_deleted: category_ids.len(),
        categories_after_prune,
        categories_holding_topic_20,
        codes_in_several_categories,
        dimensions: project.dimensions().len(),
    };
    Ok(Funnel {
        initial,
        project,
        counts,
    })
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    let funnel = run_funnel()?;
    let c = &funnel.counts;
    println!("raw codes:                 {}", c.codes);
    println!("after outlier removal:     {}", c.active_after_outliers);
    println!("labels per expert:         {:?}", c.labels_per_expert);
    println!("pruned for low rating:     {:?}", c.pruned_for_rating);
    println!("codes for focus coding:    {}", c.active_after_prune);
    println!("categories built:          {}", c.categories_built);
    println!("singleton categories cut:  {}", c.singleton_categories_deleted);
    println!("categories kept:           {}", c.categories_after_prune);
    println!("categories with topic_20:  {}", c.categories_holding_topic_20);
    println!("dimensions:                {}", c.dimensions);
    println!("audit events:              {}", funnel.project.audit_log().len());
    println!();
    if let Export::Csv { table3, .. } = export_tables(&funnel.project, ExportFormat::Csv) {
        print!("{table3}");
    }
    Ok(())
}
