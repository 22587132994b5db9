use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use uuid::Uuid;

use super::{
    Attachment, AuditEvent, Category, CategoryKind, CodeStatus, Dimension, ExpertLabel, Memo,
    Project, Stage, WorkflowError, MAX_RATING, MIN_RATING,
};

/// Every way a project can change. Each applied action appends one audit event.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum Action {
    /// Only ever the first audit event; not accepted by [`Project::apply`].
    CreateProject {
        project_id: Uuid,
        corpus_ref: String,
        model_ref: String,
        top_words: Vec<Vec<String>>,
    },
    MarkOutlier {
        topic_id: usize,
        reason: String,
    },
    AdvanceStage,
    SubmitExpertLabel {
        expert_id: String,
        topic_id: usize,
        label: String,
        rating: i64,
    },
    SetAggregateLabel {
        topic_id: usize,
        label: String,
    },
    PruneLowRated {
        threshold: f64,
    },
    CreateCategory {
        name: String,
        kind: CategoryKind,
    },
    RenameCategory {
        category_id: u64,
        name: String,
    },
    SetCategoryKind {
        category_id: u64,
        kind: CategoryKind,
    },
    AssignCode {
        category_id: u64,
        topic_id: usize,
    },
    UnassignCode {
        category_id: u64,
        topic_id: usize,
    },
    PruneSingletonCategories,
    CreateDimension {
        name: String,
    },
    AssignCategory {
        dimension_id: u64,
        category_id: u64,
    },
    UnassignCategory {
        dimension_id: u64,
        category_id: u64,
    },
    AddMemo {
        attached_to: Attachment,
        author: String,
        text: String,
    },
}

impl Action {
    pub fn name(&self) -> &'static str {
        match self {
            Action::CreateProject { .. } => "create_project",
            Action::MarkOutlier { .. } => "mark_outlier",
            Action::AdvanceStage => "advance_stage",
            Action::SubmitExpertLabel { .. } => "submit_expert_label",
            Action::SetAggregateLabel { .. } => "set_aggregate_label",
            Action::PruneLowRated { .. } => "prune_low_rated",
            Action::CreateCategory { .. } => "create_category",
            Action::RenameCategory { .. } => "rename_category",
            Action::SetCategoryKind { .. } => "set_category_kind",
            Action::AssignCode { .. } => "assign_code",
            Action::UnassignCode { .. } => "unassign_code",
            Action::PruneSingletonCategories => "prune_singleton_categories",
            Action::CreateDimension { .. } => "create_dimension",
            Action::AssignCategory { .. } => "assign_category",
            Action::UnassignCategory { .. } => "unassign_category",
            Action::AddMemo { .. } => "add_memo",
        }
    }

    /// The stage an action belongs to. Earlier stages reject it; later ones
    /// accept it as a retroactive edit. `None` means any stage.
    pub fn home_stage(&self) -> Option<Stage> {
        match self {
            Action::MarkOutlier { .. } => Some(Stage::RawCoding),
            Action::SubmitExpertLabel { .. }
            | Action::SetAggregateLabel { .. }
            | Action::PruneLowRated { .. } => Some(Stage::ExpertCoding),
            Action::CreateCategory { .. }
            | Action::RenameCategory { .. }
            | Action::SetCategoryKind { .. }
            | Action::AssignCode { .. }
            | Action::UnassignCode { .. }
            | Action::PruneSingletonCategories => Some(Stage::FocusCoding),
            Action::CreateDimension { .. }
            | Action::AssignCategory { .. }
            | Action::UnassignCategory { .. } => Some(Stage::TheoryBuilding),
            Action::CreateProject { .. } | Action::AdvanceStage | Action::AddMemo { .. } => None,
        }
    }
}

/// What an applied action produced, beyond the updated project.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Outcome {
    Updated,
    Advanced { from: Stage, to: Stage },
    CodesRemoved { topic_ids: Vec<usize> },
    CategoryCreated { category_id: u64 },
    CategoriesDeleted { category_ids: Vec<u64> },
    DimensionCreated { dimension_id: u64 },
    MemoAdded { memo_id: u64 },
}

fn require_text(value: &str, field: &'static str) -> Result<(), WorkflowError> {
    if value.trim().is_empty() {
        Err(WorkflowError::EmptyField(field))
    } else {
        Ok(())
    }
}

fn topic_list(ids: &[usize]) -> String {
    ids.iter()
        .map(|t| format!("topic_{t}"))
        .collect::<Vec<_>>()
        .join(", ")
}

impl Project {
    /// Applies `action` now. Timestamps never go backwards within one log.
    pub fn apply(&mut self, action: Action) -> Result<Outcome, WorkflowError> {
        let last = self.audit_log.last().map(|e| e.timestamp);
        let now = Utc::now();
        let timestamp = last.map_or(now, |l| l.max(now));
        self.apply_at(action, timestamp)
    }

    /// Applies `action` with an explicit timestamp. On error the project is
    /// left untouched.
    pub fn apply_at(
        &mut self,
        action: Action,
        timestamp: DateTime<Utc>,
    ) -> Result<Outcome, WorkflowError> {
        let stage = self.stage;
        let retroactive = match action.home_stage() {
            Some(home) if stage < home => {
                return Err(WorkflowError::StageViolation {
                    action: action.name(),
                    required: home,
                    current: stage,
                })
            }
            Some(home) => stage > home,
            None => false,
        };
        let (outcome, detail) = self.execute(&action, timestamp)?;
        self.audit_log.push(AuditEvent {
            seq: self.audit_log.len() as u64,
            timestamp,
            stage,
            action,
            retroactive,
            detail,
        });
        Ok(outcome)
    }

    fn active_index(&self, topic_id: usize) -> Result<usize, WorkflowError> {
        let code = self.code(topic_id)?;
        if code.is_active() {
            Ok(topic_id)
        } else {
            Err(WorkflowError::CodeNotActive {
                topic: topic_id,
                status: code.status,
            })
        }
    }

    fn category_index(&self, category_id: u64) -> Result<usize, WorkflowError> {
        self.categories
            .iter()
            .position(|c| c.category_id == category_id)
            .ok_or(WorkflowError::UnknownCategory(category_id))
    }

    fn dimension_index(&self, dimension_id: u64) -> Result<usize, WorkflowError> {
        self.dimensions
            .iter()
            .position(|d| d.dimension_id == dimension_id)
            .ok_or(WorkflowError::UnknownDimension(dimension_id))
    }

    fn remove_code(&mut self, topic_id: usize, status: CodeStatus, reason: String) {
        let code = &mut self.codes[topic_id];
        code.status = status;
        code.removal_reason = Some(reason);
        for category in &mut self.categories {
            category.member_codes.remove(&topic_id);
        }
    }

    /// Validates and performs one action. Must not mutate on error.
    fn execute(
        &mut self,
        action: &Action,
        timestamp: DateTime<Utc>,
    ) -> Result<(Outcome, String), WorkflowError> {
        match action {
            Action::CreateProject { .. } => Err(WorkflowError::NotAnAction),

            Action::MarkOutlier { topic_id, reason } => {
                let t = self.active_index(*topic_id)?;
                require_text(reason, "reason")?;
                self.remove_code(t, CodeStatus::OutlierRemoved, reason.clone());
                Ok((
                    Outcome::CodesRemoved { topic_ids: vec![t] },
                    format!("topic_{t} marked as outlier: {reason}"),
                ))
            }

            Action::AdvanceStage => {
                let from = self.stage;
                let to = from.next().ok_or(WorkflowError::FinalStage(from))?;
                match from {
                    Stage::ExpertCoding => {
                        let unlabeled: Vec<usize> = self
                            .active_codes()
                            .filter(|c| c.expert_labels.is_empty())
                            .map(|c| c.topic_id)
                            .collect();
                        if !unlabeled.is_empty() {
                            return Err(WorkflowError::CompletionRuleUnmet {
                                stage: from,
                                rule: format!(
                                    "every ACTIVE code needs an expert label; unlabeled: {}",
                                    topic_list(&unlabeled)
                                ),
                            });
                        }
                    }
                    Stage::FocusCoding if self.categories.is_empty() => {
                        return Err(WorkflowError::CompletionRuleUnmet {
                            stage: from,
                            rule: "at least one category is required".into(),
                        });
                    }
                    _ => {}
                }
                self.stage = to;
                Ok((Outcome::Advanced { from, to }, format!("{from} -> {to}")))
            }

            Action::SubmitExpertLabel {
                expert_id,
                topic_id,
                label,
                rating,
            } => {
                let t = self.active_index(*topic_id)?;
                require_text(expert_id, "expert_id")?;
                require_text(label, "label")?;
                if !(MIN_RATING..=MAX_RATING).contains(rating) {
                    return Err(WorkflowError::InvalidRating(*rating));
                }
                let entry = ExpertLabel {
                    expert_id: expert_id.clone(),
                    label: label.clone(),
                    rating: *rating,
                };
                let labels = &mut self.codes[t].expert_labels;
                let detail = match labels.iter_mut().find(|l| l.expert_id == *expert_id) {
                    Some(previous) => {
                        let detail = format!(
                            "{expert_id} replaced label on topic_{t} ({:?}, {} -> {label:?}, {rating})",
                            previous.label, previous.rating
                        );
                        *previous = entry;
                        detail
                    }
                    None => {
                        labels.push(entry);
                        format!("{expert_id} labeled topic_{t} {label:?} with rating {rating}")
                    }
                };
                Ok((Outcome::Updated, detail))
            }

            Action::SetAggregateLabel { topic_id, label } => {
                let t = self.active_index(*topic_id)?;
                require_text(label, "label")?;
                let code = &mut self.codes[t];
                if code.expert_labels.is_empty() {
                    return Err(WorkflowError::NoLabels(t));
                }
                let detail = match code.aggregate_label.replace(label.clone()) {
                    Some(old) => format!("topic_{t} aggregate label {old:?} -> {label:?}"),
                    None => format!("topic_{t} aggregate label set to {label:?}"),
                };
                Ok((Outcome::Updated, detail))
            }

            Action::PruneLowRated { threshold } => {
                if !threshold.is_finite() {
                    return Err(WorkflowError::InvalidThreshold(*threshold));
                }
                if let Some(unrated) = self.active_codes().find(|c| c.expert_labels.is_empty()) {
                    return Err(WorkflowError::UnratedCode(unrated.topic_id));
                }
                let low: Vec<(usize, f64)> = self
                    .active_codes()
                    .filter_map(|c| {
                        let avg = c.average_rating().expect("checked above");
                        (avg < *threshold).then_some((c.topic_id, avg))
                    })
                    .collect();
                for &(t, avg) in &low {
                    self.remove_code(
                        t,
                        CodeStatus::RatingRemoved,
                        format!("average rating {avg} below {threshold}"),
                    );
                }
                let topic_ids: Vec<usize> = low.iter().map(|&(t, _)| t).collect();
                let detail = if topic_ids.is_empty() {
                    format!("no code averaged below {threshold}")
                } else {
                    format!("removed {} below {threshold}", topic_list(&topic_ids))
                };
                Ok((Outcome::CodesRemoved { topic_ids }, detail))
            }

            Action::CreateCategory { name, kind } => {
                require_text(name, "name")?;
                let category_id = self.next_category_id;
                self.next_category_id += 1;
                self.categories.push(Category {
                    category_id,
                    name: name.clone(),
                    kind: *kind,
                    member_codes: Default::default(),
                });
                Ok((
                    Outcome::CategoryCreated { category_id },
                    format!("category {category_id} {name:?} created as {kind:?}"),
                ))
            }

            Action::RenameCategory { category_id, name } => {
                let i = self.category_index(*category_id)?;
                require_text(name, "name")?;
                let old = std::mem::replace(&mut self.categories[i].name, name.clone());
                Ok((
                    Outcome::Updated,
                    format!("category {category_id} renamed {old:?} -> {name:?}"),
                ))
            }

            Action::SetCategoryKind { category_id, kind } => {
                let i = self.category_index(*category_id)?;
                let old = std::mem::replace(&mut self.categories[i].kind, *kind);
                Ok((
                    Outcome::Updated,
                    format!("category {category_id} kind {old:?} -> {kind:?}"),
                ))
            }

            Action::AssignCode {
                category_id,
                topic_id,
            } => {
                let i = self.category_index(*category_id)?;
                let t = self.active_index(*topic_id)?;
                if !self.categories[i].member_codes.insert(t) {
                    return Err(WorkflowError::DuplicateAssignment {
                        topic: t,
                        category: *category_id,
                    });
                }
                Ok((
                    Outcome::Updated,
                    format!("topic_{t} assigned to category {category_id}"),
                ))
            }

            Action::UnassignCode {
                category_id,
                topic_id,
            } => {
                let i = self.category_index(*category_id)?;
                self.code(*topic_id)?;
                if !self.categories[i].member_codes.remove(topic_id) {
                    return Err(WorkflowError::NotAssigned {
                        topic: *topic_id,
                        category: *category_id,
                    });
                }
                Ok((
                    Outcome::Updated,
                    format!("topic_{topic_id} removed from category {category_id}"),
                ))
            }

            Action::PruneSingletonCategories => {
                let (kept, deleted): (Vec<Category>, Vec<Category>) = std::mem::take(&mut self.categories)
                    .into_iter()
                    .partition(|c| c.member_codes.len() >= 2);
                self.categories = kept;
                let category_ids: Vec<u64> = deleted.iter().map(|c| c.category_id).collect();
                for dimension in &mut self.dimensions {
                    dimension
                        .member_categories
                        .retain(|c| !category_ids.contains(c));
                }
                let detail = format!("deleted {} categories: {category_ids:?}", category_ids.len());
                Ok((Outcome::CategoriesDeleted { category_ids }, detail))
            }

            Action::CreateDimension { name } => {
                require_text(name, "name")?;
                let dimension_id = self.next_dimension_id;
                self.next_dimension_id += 1;
                self.dimensions.push(Dimension {
                    dimension_id,
                    name: name.clone(),
                    member_categories: Default::default(),
                });
                Ok((
                    Outcome::DimensionCreated { dimension_id },
                    format!("dimension {dimension_id} {name:?} created"),
                ))
            }

            Action::AssignCategory {
                dimension_id,
                category_id,
            } => {
                let i = self.dimension_index(*dimension_id)?;
                self.category_index(*category_id)?;
                if let Some(existing) = self.dimension_of(*category_id) {
                    return Err(WorkflowError::CategoryInDimension {
                        category: *category_id,
                        dimension: existing.dimension_id,
                    });
                }
                self.dimensions[i].member_categories.insert(*category_id);
                Ok((
                    Outcome::Updated,
                    format!("category {category_id} assigned to dimension {dimension_id}"),
                ))
            }

            Action::UnassignCategory {
                dimension_id,
                category_id,
            } => {
                let i = self.dimension_index(*dimension_id)?;
                if !self.dimensions[i].member_categories.remove(category_id) {
                    return Err(WorkflowError::CategoryNotInDimension {
                        category: *category_id,
                        dimension: *dimension_id,
                    });
                }
                Ok((
                    Outcome::Updated,
                    format!("category {category_id} removed from dimension {dimension_id}"),
                ))
            }

            Action::AddMemo {
                attached_to,
                author,
                text,
            } => {
                match attached_to {
                    Attachment::Code(t) => self.code(*t).map(drop)?,
                    Attachment::Category(c) => self.category_index(*c).map(drop)?,
                    Attachment::Dimension(d) => self.dimension_index(*d).map(drop)?,
                    Attachment::Project => {}
                }
                require_text(author, "author")?;
                require_text(text, "text")?;
                let memo_id = self.next_memo_id;
                self.next_memo_id += 1;
                self.memos.push(Memo {
                    memo_id,
                    author: author.clone(),
                    attached_to: attached_to.clone(),
                    text: text.clone(),
                    created_at: timestamp,
                });
                Ok((
                    Outcome::MemoAdded { memo_id },
                    format!("memo {memo_id} by {author} on {attached_to:?}"),
                ))
            }
        }
    }
}
