//! The four-stage coding workflow layered on a fitted topic model.
//!
//! A [`Project`] starts with one ACTIVE code per topic. Researchers remove
//! outliers, collect expert labels and ratings, group codes into categories
//! and categories into dimensions. Every change goes through [`Action`] and
//! leaves exactly one [`AuditEvent`], so a project can be rebuilt from its log.

mod actions;
mod export;
mod persist;

use std::collections::BTreeSet;
use std::fmt;
use std::path::PathBuf;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use uuid::Uuid;

use crate::corpus::EncodedCorpus;
use crate::lda::TopicModel;

pub use actions::{Action, Outcome};
pub use export::{export_tables, tables, Export, ExportFormat, Table2Row, Table3Row, Tables};
pub use persist::{load_project, project_from_json, save_project, SCHEMA_VERSION};

/// Label used in the dimension column for a GENERIC category outside any dimension.
pub const GENERIC_CATEGORY_LABEL: &str = "Generic Category";
pub const DEFAULT_PRUNE_THRESHOLD: f64 = 2.0;
pub const MIN_RATING: i64 = 1;
pub const MAX_RATING: i64 = 5;

/// How a caller should treat an error: a broken request, a missing id, or a
/// request that conflicts with the stage rules.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Contract,
    NotFound,
    Conflict,
    Corrupt,
    Io,
}

#[derive(Debug, thiserror::Error)]
pub enum WorkflowError {
    #[error("unknown topic {0}")]
    UnknownCode(usize),
    #[error("unknown category {0}")]
    UnknownCategory(u64),
    #[error("unknown dimension {0}")]
    UnknownDimension(u64),
    #[error("topic_{topic} is {status}")]
    CodeNotActive { topic: usize, status: CodeStatus },
    #[error("{0} must not be empty")]
    EmptyField(&'static str),
    #[error("rating {0} is outside {MIN_RATING}..={MAX_RATING}")]
    InvalidRating(i64),
    #[error("threshold {0} is not a finite number")]
    InvalidThreshold(f64),
    #[error("topic_{0} has no expert labels yet")]
    NoLabels(usize),
    #[error("topic_{0} has no ratings; every ACTIVE code must be rated before pruning")]
    UnratedCode(usize),
    #[error("topic_{topic} is already in category {category}")]
    DuplicateAssignment { topic: usize, category: u64 },
    #[error("topic_{topic} is not in category {category}")]
    NotAssigned { topic: usize, category: u64 },
    #[error("category {category} already belongs to dimension {dimension}")]
    CategoryInDimension { category: u64, dimension: u64 },
    #[error("category {category} is not in dimension {dimension}")]
    CategoryNotInDimension { category: u64, dimension: u64 },
    #[error("{action} is not allowed before {required}; project is in {current}")]
    StageViolation {
        action: &'static str,
        required: Stage,
        current: Stage,
    },
    #[error("cannot leave {stage}: {rule}")]
    CompletionRuleUnmet { stage: Stage, rule: String },
    #[error("{0} is the final stage")]
    FinalStage(Stage),
    #[error("the project creation event cannot be applied as an action")]
    NotAnAction,
    #[error("model {model} was fitted on corpus {model_corpus}, not {corpus}")]
    DanglingReference {
        model: String,
        model_corpus: String,
        corpus: String,
    },
    #[error("unknown export format {0:?}; expected csv or json")]
    UnknownFormat(String),
    #[error("unsupported schema_version {found}; this build reads {SCHEMA_VERSION}")]
    SchemaVersion { found: String },
    #[error("corrupt project file at {field}: {message}")]
    Corrupt { field: String, message: String },
    #[error("audit replay diverged at event {seq}: {message}")]
    ReplayDiverged { seq: u64, message: String },
    #[error("cannot access {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl WorkflowError {
    pub fn class(&self) -> ErrorClass {
        use WorkflowError::*;
        match self {
            UnknownCode(_) | UnknownCategory(_) | UnknownDimension(_) | DanglingReference { .. } => {
                ErrorClass::NotFound
            }
            StageViolation { .. } | CompletionRuleUnmet { .. } | FinalStage(_) => ErrorClass::Conflict,
            SchemaVersion { .. } | Corrupt { .. } | ReplayDiverged { .. } => ErrorClass::Corrupt,
            Io { .. } => ErrorClass::Io,
            _ => ErrorClass::Contract,
        }
    }

    /// Stable machine-readable error code.
    pub fn code(&self) -> &'static str {
        use WorkflowError::*;
        match self {
            UnknownCode(_) => "unknown_code",
            UnknownCategory(_) => "unknown_category",
            UnknownDimension(_) => "unknown_dimension",
            CodeNotActive { .. } => "code_not_active",
            EmptyField(_) => "empty_field",
            InvalidRating(_) => "invalid_rating",
            InvalidThreshold(_) => "invalid_threshold",
            NoLabels(_) => "no_labels",
            UnratedCode(_) => "unrated_code",
            DuplicateAssignment { .. } => "duplicate_assignment",
            NotAssigned { .. } => "not_assigned",
            CategoryInDimension { .. } => "category_in_dimension",
            CategoryNotInDimension { .. } => "category_not_in_dimension",
            StageViolation { .. } => "stage_violation",
            CompletionRuleUnmet { .. } => "completion_rule_unmet",
            FinalStage(_) => "final_stage",
            NotAnAction => "not_an_action",
            DanglingReference { .. } => "dangling_reference",
            UnknownFormat(_) => "unknown_format",
            SchemaVersion { .. } => "schema_version",
            Corrupt { .. } => "corrupt_project",
            ReplayDiverged { .. } => "replay_diverged",
            Io { .. } => "io",
        }
    }

    /// The request field the error is about, when there is one.
    pub fn field(&self) -> Option<String> {
        use WorkflowError::*;
        let field = match self {
            UnknownCode(_) | CodeNotActive { .. } | NoLabels(_) | UnratedCode(_) => "topic_id",
            UnknownCategory(_) | CategoryInDimension { .. } => "category_id",
            UnknownDimension(_) | CategoryNotInDimension { .. } => "dimension_id",
            DuplicateAssignment { .. } | NotAssigned { .. } => "topic_id",
            EmptyField(name) => name,
            InvalidRating(_) => "rating",
            InvalidThreshold(_) => "threshold",
            StageViolation { .. } | CompletionRuleUnmet { .. } | FinalStage(_) => "stage",
            DanglingReference { .. } => "model_id",
            UnknownFormat(_) => "format",
            SchemaVersion { .. } => "schema_version",
            Corrupt { field, .. } => return Some(field.clone()),
            NotAnAction | ReplayDiverged { .. } | Io { .. } => return None,
        };
        Some(field.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Stage {
    RawCoding,
    ExpertCoding,
    FocusCoding,
    TheoryBuilding,
}

impl Stage {
    pub const ALL: [Stage; 4] = [
        Stage::RawCoding,
        Stage::ExpertCoding,
        Stage::FocusCoding,
        Stage::TheoryBuilding,
    ];

    pub fn next(self) -> Option<Stage> {
        match self {
            Stage::RawCoding => Some(Stage::ExpertCoding),
            Stage::ExpertCoding => Some(Stage::FocusCoding),
            Stage::FocusCoding => Some(Stage::TheoryBuilding),
            Stage::TheoryBuilding => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Stage::RawCoding => "RAW_CODING",
            Stage::ExpertCoding => "EXPERT_CODING",
            Stage::FocusCoding => "FOCUS_CODING",
            Stage::TheoryBuilding => "THEORY_BUILDING",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum CodeStatus {
    Active,
    OutlierRemoved,
    RatingRemoved,
}

impl fmt::Display for CodeStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CodeStatus::Active => "ACTIVE",
            CodeStatus::OutlierRemoved => "OUTLIER_REMOVED",
            CodeStatus::RatingRemoved => "RATING_REMOVED",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExpertLabel {
    pub expert_id: String,
    pub label: String,
    pub rating: i64,
}

/// A topic promoted into the workflow.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Code {
    pub topic_id: usize,
    pub top_words: Vec<String>,
    pub status: CodeStatus,
    pub removal_reason: Option<String>,
    /// One entry per expert, in order of first submission.
    pub expert_labels: Vec<ExpertLabel>,
    pub aggregate_label: Option<String>,
}

impl Code {
    pub fn is_active(&self) -> bool {
        self.status == CodeStatus::Active
    }

    /// Mean of the current expert ratings, `None` when nobody rated yet.
    pub fn average_rating(&self) -> Option<f64> {
        if self.expert_labels.is_empty() {
            return None;
        }
        let sum: i64 = self.expert_labels.iter().map(|l| l.rating).sum();
        Some(sum as f64 / self.expert_labels.len() as f64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum CategoryKind {
    Core,
    Generic,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Category {
    pub category_id: u64,
    pub name: String,
    pub kind: CategoryKind,
    pub member_codes: BTreeSet<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dimension {
    pub dimension_id: u64,
    pub name: String,
    pub member_categories: BTreeSet<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", content = "id", rename_all = "snake_case")]
pub enum Attachment {
    Code(usize),
    Category(u64),
    Dimension(u64),
    Project,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Memo {
    pub memo_id: u64,
    pub author: String,
    pub attached_to: Attachment,
    pub text: String,
    pub created_at: DateTime<Utc>,
}

/// One entry of the append-only audit log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditEvent {
    pub seq: u64,
    pub timestamp: DateTime<Utc>,
    /// Stage the project was in when the event happened.
    pub stage: Stage,
    pub action: Action,
    /// Set when the action belongs to a stage the project had already left.
    pub retroactive: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Project {
    schema_version: u32,
    project_id: Uuid,
    corpus_ref: String,
    model_ref: String,
    stage: Stage,
    codes: Vec<Code>,
    categories: Vec<Category>,
    dimensions: Vec<Dimension>,
    memos: Vec<Memo>,
    audit_log: Vec<AuditEvent>,
    next_category_id: u64,
    next_dimension_id: u64,
    next_memo_id: u64,
}

impl Project {
    /// Starts a project over `model`, which must have been fitted on `corpus`.
    pub fn create(corpus: &EncodedCorpus, model: &TopicModel) -> Result<Self, WorkflowError> {
        if model.corpus_ref != corpus.id {
            return Err(WorkflowError::DanglingReference {
                model: model.id.clone(),
                model_corpus: model.corpus_ref.clone(),
                corpus: corpus.id.clone(),
            });
        }
        Ok(Self::from_topics(
            &corpus.id,
            &model.id,
            model.top_words.clone(),
        ))
    }

    /// Starts a project from bare top-word lists, one per topic.
    pub fn from_topics(corpus_ref: &str, model_ref: &str, top_words: Vec<Vec<String>>) -> Self {
        let action = Action::CreateProject {
            project_id: Uuid::new_v4(),
            corpus_ref: corpus_ref.to_string(),
            model_ref: model_ref.to_string(),
            top_words,
        };
        Self::from_creation(action, Utc::now()).expect("creation action")
    }

    fn from_creation(action: Action, timestamp: DateTime<Utc>) -> Result<Self, WorkflowError> {
        let Action::CreateProject {
            project_id,
            corpus_ref,
            model_ref,
            top_words,
        } = &action
        else {
            return Err(WorkflowError::NotAnAction);
        };
        let codes = top_words
            .iter()
            .enumerate()
            .map(|(topic_id, words)| Code {
                topic_id,
                top_words: words.clone(),
                status: CodeStatus::Active,
                removal_reason: None,
                expert_labels: Vec::new(),
                aggregate_label: None,
            })
            .collect::<Vec<_>>();
        let detail = format!("created with {} codes", codes.len());
        Ok(Project {
            schema_version: SCHEMA_VERSION,
            project_id: *project_id,
            corpus_ref: corpus_ref.clone(),
            model_ref: model_ref.clone(),
            stage: Stage::RawCoding,
            codes,
            categories: Vec::new(),
            dimensions: Vec::new(),
            memos: Vec::new(),
            audit_log: vec![AuditEvent {
                seq: 0,
                timestamp,
                stage: Stage::RawCoding,
                action,
                retroactive: false,
                detail,
            }],
            next_category_id: 0,
            next_dimension_id: 0,
            next_memo_id: 0,
        })
    }

    /// Rebuilds a project from a complete audit log, starting at its creation
    /// event. Every replayed event must come out identical to the recorded one.
    pub fn rebuild(events: &[AuditEvent]) -> Result<Self, WorkflowError> {
        let first = events.first().ok_or(WorkflowError::ReplayDiverged {
            seq: 0,
            message: "audit log is empty".into(),
        })?;
        let initial = Self::from_creation(first.action.clone(), first.timestamp)?;
        if initial.audit_log[0] != *first {
            return Err(WorkflowError::ReplayDiverged {
                seq: 0,
                message: "creation event does not match".into(),
            });
        }
        Self::replay(&initial, events)
    }

    /// Applies the events of `events` that come after the last event of
    /// `initial`, checking each regenerated event against the recorded one.
    pub fn replay(initial: &Project, events: &[AuditEvent]) -> Result<Self, WorkflowError> {
        let mut project = initial.clone();
        let start = project.audit_log.len() as u64;
        for event in events.iter().filter(|e| e.seq >= start) {
            if event.seq != project.audit_log.len() as u64 {
                return Err(WorkflowError::ReplayDiverged {
                    seq: event.seq,
                    message: "sequence gap".into(),
                });
            }
            project
                .apply_at(event.action.clone(), event.timestamp)
                .map_err(|e| WorkflowError::ReplayDiverged {
                    seq: event.seq,
                    message: e.to_string(),
                })?;
            let produced = project.audit_log.last().expect("event appended");
            if produced != event {
                return Err(WorkflowError::ReplayDiverged {
                    seq: event.seq,
                    message: format!("expected {:?}, replay produced {:?}", event.detail, produced.detail),
                });
            }
        }
        Ok(project)
    }

    pub fn schema_version(&self) -> u32 {
        self.schema_version
    }

    pub fn project_id(&self) -> Uuid {
        self.project_id
    }

    pub fn corpus_ref(&self) -> &str {
        &self.corpus_ref
    }

    pub fn model_ref(&self) -> &str {
        &self.model_ref
    }

    pub fn stage(&self) -> Stage {
        self.stage
    }

    pub fn codes(&self) -> &[Code] {
        &self.codes
    }

    pub fn code(&self, topic_id: usize) -> Result<&Code, WorkflowError> {
        self.codes
            .get(topic_id)
            .ok_or(WorkflowError::UnknownCode(topic_id))
    }

    pub fn active_codes(&self) -> impl Iterator<Item = &Code> {
        self.codes.iter().filter(|c| c.is_active())
    }

    pub fn count_with_status(&self, status: CodeStatus) -> usize {
        self.codes.iter().filter(|c| c.status == status).count()
    }

    pub fn categories(&self) -> &[Category] {
        &self.categories
    }

    pub fn category(&self, category_id: u64) -> Result<&Category, WorkflowError> {
        self.categories
            .iter()
            .find(|c| c.category_id == category_id)
            .ok_or(WorkflowError::UnknownCategory(category_id))
    }

    /// Categories holding `topic_id`, in category id order.
    pub fn categories_of(&self, topic_id: usize) -> Vec<&Category> {
        self.categories
            .iter()
            .filter(|c| c.member_codes.contains(&topic_id))
            .collect()
    }

    pub fn dimensions(&self) -> &[Dimension] {
        &self.dimensions
    }

    pub fn dimension(&self, dimension_id: u64) -> Result<&Dimension, WorkflowError> {
        self.dimensions
            .iter()
            .find(|d| d.dimension_id == dimension_id)
            .ok_or(WorkflowError::UnknownDimension(dimension_id))
    }

    pub fn dimension_of(&self, category_id: u64) -> Option<&Dimension> {
        self.dimensions
            .iter()
            .find(|d| d.member_categories.contains(&category_id))
    }

    pub fn memos(&self) -> &[Memo] {
        &self.memos
    }

    pub fn memos_for(&self, attachment: &Attachment) -> Vec<&Memo> {
        self.memos
            .iter()
            .filter(|m| m.attached_to == *attachment)
            .collect()
    }

    pub fn audit_log(&self) -> &[AuditEvent] {
        &self.audit_log
    }

    pub fn average_rating(&self, topic_id: usize) -> Result<f64, WorkflowError> {
        self.code(topic_id)?
            .average_rating()
            .ok_or(WorkflowError::NoLabels(topic_id))
    }

    /// Checks every structural invariant. Used after loading from disk.
    pub fn validate(&self) -> Result<(), WorkflowError> {
        let corrupt = |field: String, message: &str| {
            Err(WorkflowError::Corrupt {
                field,
                message: message.to_string(),
            })
        };
        for (i, code) in self.codes.iter().enumerate() {
            let at = |f: &str| format!("codes[{i}].{f}");
            if code.topic_id != i {
                return corrupt(at("topic_id"), "topic ids must equal their position");
            }
            if code.status == CodeStatus::OutlierRemoved
                && code.removal_reason.as_deref().is_none_or(str::is_empty)
            {
                return corrupt(at("removal_reason"), "outliers need a reason");
            }
            if let Some(j) = code
                .expert_labels
                .iter()
                .position(|l| !(MIN_RATING..=MAX_RATING).contains(&l.rating))
            {
                return corrupt(format!("codes[{i}].expert_labels[{j}].rating"), "rating out of range");
            }
            if code.aggregate_label.is_some() && code.expert_labels.is_empty() {
                return corrupt(at("aggregate_label"), "set without any expert label");
            }
        }
        let mut category_ids = BTreeSet::new();
        for (i, category) in self.categories.iter().enumerate() {
            if category.category_id >= self.next_category_id || !category_ids.insert(category.category_id) {
                return corrupt(format!("categories[{i}].category_id"), "duplicate or unallocated id");
            }
            for &t in &category.member_codes {
                if !self.codes.get(t).is_some_and(Code::is_active) {
                    return corrupt(format!("categories[{i}].member_codes"), "member is not an ACTIVE code");
                }
            }
        }
        let mut placed = BTreeSet::new();
        let mut dimension_ids = BTreeSet::new();
        for (i, dimension) in self.dimensions.iter().enumerate() {
            if dimension.dimension_id >= self.next_dimension_id
                || !dimension_ids.insert(dimension.dimension_id)
            {
                return corrupt(format!("dimensions[{i}].dimension_id"), "duplicate or unallocated id");
            }
            for c in &dimension.member_categories {
                if !category_ids.contains(c) || !placed.insert(*c) {
                    return corrupt(
                        format!("dimensions[{i}].member_categories"),
                        "unknown category or category in two dimensions",
                    );
                }
            }
        }
        for (i, memo) in self.memos.iter().enumerate() {
            if memo.memo_id >= self.next_memo_id {
                return corrupt(format!("memos[{i}].memo_id"), "unallocated id");
            }
        }
        for (i, event) in self.audit_log.iter().enumerate() {
            if event.seq != i as u64 {
                return corrupt(format!("audit_log[{i}].seq"), "sequence numbers must be contiguous");
            }
            if i > 0 && event.timestamp < self.audit_log[i - 1].timestamp {
                return corrupt(format!("audit_log[{i}].timestamp"), "timestamps must not decrease");
            }
        }
        if self.audit_log.is_empty() {
            return corrupt("audit_log".into(), "missing creation event");
        }
        Ok(())
    }
}
