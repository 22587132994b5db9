use std::sync::Arc;

use axum::extract::State;
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{delete, get, post, put};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use tokio::sync::Mutex;
use uuid::Uuid;

use crate::corpus::{
    build_encoded_corpus, Corpus, Document, EncodedCorpus, IngestManifest, IngestReport,
    PreprocessConfig, PreprocessReport,
};
use crate::lda::{run_lda, LdaParams, TopicModel};
use crate::topicsim::{compare_grid_with_models, Comparison, DEFAULT_THRESHOLD};
use crate::workflow::{
    export_tables, project_from_json, Action, Attachment, CategoryKind, Code, CodeStatus, Export,
    ExportFormat, Outcome, Project, Stage, DEFAULT_PRUNE_THRESHOLD,
};

use super::error::{ApiError, ApiJson, ApiPath, ApiQuery};
use super::jobs::{self, JobKind, JobRecord};
use super::{AppState, DEFAULT_EVIDENCE_DOCS};

type ApiResult<T> = Result<T, ApiError>;

pub(super) fn api() -> Router<AppState> {
    Router::new()
        .route("/health", get(health))
        .route("/corpora", get(list_corpora).post(create_corpus))
        .route("/corpora/{id}", get(get_corpus))
        .route("/jobs", get(list_jobs))
        .route("/jobs/lda", post(submit_lda))
        .route("/jobs/compare", post(submit_compare))
        .route("/jobs/{id}", get(get_job))
        .route("/models", get(list_models))
        .route("/models/{id}", get(get_model))
        .route("/models/{id}/topics", get(model_topics))
        .route("/models/{id}/topics/{topic}/documents", get(model_topic_documents))
        .route("/models/{id}/theta.csv", get(model_theta_csv))
        .route("/comparisons", get(list_comparisons))
        .route("/comparisons/{id}", get(get_comparison))
        .route("/projects", get(list_projects).post(create_project))
        .route("/projects/import", post(import_project))
        .route("/projects/{id}", get(get_project))
        .route("/projects/{id}/file", get(project_file))
        .route("/projects/{id}/codes", get(project_codes))
        .route("/projects/{id}/codes/{topic}/aggregate-label", put(set_aggregate_label))
        .route("/projects/{id}/codes/{topic}/average-rating", get(average_rating))
        .route("/projects/{id}/codes/{topic}/documents", get(code_documents))
        .route("/projects/{id}/outliers", post(mark_outlier))
        .route("/projects/{id}/labels", post(submit_label))
        .route("/projects/{id}/prune-rated", post(prune_rated))
        .route("/projects/{id}/categories", post(create_category))
        .route("/projects/{id}/categories/{category}/name", put(rename_category))
        .route("/projects/{id}/categories/{category}/kind", put(set_category_kind))
        .route("/projects/{id}/categories/{category}/codes", post(assign_code))
        .route("/projects/{id}/categories/{category}/codes/{topic}", delete(unassign_code))
        .route("/projects/{id}/prune-singletons", post(prune_singletons))
        .route("/projects/{id}/dimensions", post(create_dimension))
        .route("/projects/{id}/dimensions/{dimension}/categories", post(assign_category))
        .route(
            "/projects/{id}/dimensions/{dimension}/categories/{category}",
            delete(unassign_category),
        )
        .route("/projects/{id}/memos", post(add_memo))
        .route("/projects/{id}/advance", post(advance))
        .route("/projects/{id}/export", get(export))
}

async fn health() -> Json<serde_json::Value> {
    Json(serde_json::json!({ "status": "ok" }))
}

// ---- corpora ----

#[derive(Deserialize)]
struct CorpusUpload {
    documents: Vec<Document>,
    #[serde(default)]
    config: PreprocessConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusSummary {
    pub id: String,
    pub num_docs: usize,
    pub vocab_size: usize,
    pub num_tokens: usize,
    /// Present only in the response to the upload itself.
    pub ingest: Option<IngestReport>,
    pub preprocess: PreprocessReport,
}

impl CorpusSummary {
    fn of(corpus: &EncodedCorpus, ingest: Option<IngestReport>) -> Self {
        CorpusSummary {
            id: corpus.id.clone(),
            num_docs: corpus.num_docs(),
            vocab_size: corpus.vocab_size(),
            num_tokens: corpus.num_tokens(),
            ingest,
            preprocess: corpus.report.clone(),
        }
    }
}

async fn create_corpus(
    State(state): State<AppState>,
    ApiJson(upload): ApiJson<CorpusUpload>,
) -> ApiResult<(StatusCode, Json<CorpusSummary>)> {
    upload.config.validate()?;
    let corpus = Corpus::from_documents(upload.documents, &IngestManifest::default())?;
    let encoded = build_encoded_corpus(&corpus, &upload.config)?;
    let stored = state.store.put_corpus(encoded)?;
    Ok((StatusCode::CREATED, Json(CorpusSummary::of(&stored, Some(corpus.report)))))
}

async fn list_corpora(State(state): State<AppState>) -> Json<Vec<CorpusSummary>> {
    Json(
        state
            .store
            .corpora()
            .iter()
            .map(|c| CorpusSummary::of(c, None))
            .collect(),
    )
}

fn corpus_or_404(state: &AppState, id: &str, field: &str) -> ApiResult<Arc<EncodedCorpus>> {
    state
        .store
        .corpus(id)
        .ok_or_else(|| ApiError::not_found("corpus", id, field))
}

async fn get_corpus(State(state): State<AppState>, ApiPath(id): ApiPath<String>) -> ApiResult<Json<EncodedCorpus>> {
    Ok(Json(corpus_or_404(&state, &id, "id")?.as_ref().clone()))
}

// ---- jobs ----

#[derive(Serialize, Deserialize)]
struct LdaJobRequest {
    corpus_id: String,
    params: LdaParams,
}

#[derive(Serialize, Deserialize)]
struct CompareJobRequest {
    corpus_id: String,
    topics: Vec<usize>,
    #[serde(default = "default_threshold")]
    threshold: usize,
    #[serde(default)]
    alpha: Option<f64>,
    #[serde(default)]
    beta: Option<f64>,
    #[serde(default)]
    sweeps: Option<usize>,
    #[serde(default)]
    seed: Option<u64>,
    #[serde(default)]
    top_n_words: Option<usize>,
}

fn default_threshold() -> usize {
    DEFAULT_THRESHOLD
}

async fn submit_lda(
    State(state): State<AppState>,
    ApiJson(request): ApiJson<LdaJobRequest>,
) -> ApiResult<(StatusCode, Json<JobRecord>)> {
    let corpus = corpus_or_404(&state, &request.corpus_id, "corpus_id")?;
    request.params.validate()?;
    let echo = serde_json::to_value(&request).expect("request serializes");
    let params = request.params;
    let job = jobs::submit(
        state.store.clone(),
        state.workers.clone(),
        JobKind::LdaRun,
        echo,
        move |store| {
            let model = run_lda(&corpus, &params).map_err(|e| e.to_string())?;
            let stored = store.put_model(model).map_err(|e| e.to_string())?;
            Ok(stored.id.clone())
        },
    )?;
    Ok((StatusCode::ACCEPTED, Json(job)))
}

async fn submit_compare(
    State(state): State<AppState>,
    ApiJson(request): ApiJson<CompareJobRequest>,
) -> ApiResult<(StatusCode, Json<JobRecord>)> {
    let corpus = corpus_or_404(&state, &request.corpus_id, "corpus_id")?;
    let first = *request.topics.first().ok_or_else(|| {
        ApiError::bad_request("invalid_comparison", "topics must list at least two values", Some("topics"))
    })?;
    let mut params = LdaParams::new(first);
    params.alpha = request.alpha.unwrap_or(params.alpha);
    params.beta = request.beta.unwrap_or(params.beta);
    params.sweeps = request.sweeps.unwrap_or(params.sweeps);
    params.seed = request.seed.unwrap_or(params.seed);
    params.top_n_words = request.top_n_words.unwrap_or(params.top_n_words);
    for &k in &request.topics {
        LdaParams {
            num_topics: k,
            ..params.clone()
        }
        .validate()?;
    }
    if request.topics.iter().collect::<std::collections::BTreeSet<_>>().len() < 2 {
        return Err(ApiError::bad_request(
            "invalid_comparison",
            "topics must list at least two distinct values",
            Some("topics"),
        ));
    }
    if request.threshold < 1 {
        return Err(ApiError::bad_request("invalid_comparison", "threshold must be at least 1", Some("threshold")));
    }
    let echo = serde_json::to_value(&request).expect("request serializes");
    let (topics, threshold) = (request.topics, request.threshold);
    let job = jobs::submit(
        state.store.clone(),
        state.workers.clone(),
        JobKind::GridCompare,
        echo,
        move |store| {
            let (grid, models) =
                compare_grid_with_models(&corpus, &topics, &params, threshold).map_err(|e| e.to_string())?;
            for model in models {
                store.put_model(model).map_err(|e| e.to_string())?;
            }
            let comparison = Comparison::new(&corpus.id, grid).map_err(|e| e.to_string())?;
            let stored = store.put_comparison(comparison).map_err(|e| e.to_string())?;
            Ok(stored.id.clone())
        },
    )?;
    Ok((StatusCode::ACCEPTED, Json(job)))
}

async fn list_jobs(State(state): State<AppState>) -> Json<Vec<JobRecord>> {
    Json(state.store.jobs())
}

async fn get_job(State(state): State<AppState>, ApiPath(id): ApiPath<String>) -> ApiResult<Json<JobRecord>> {
    id.parse::<Uuid>()
        .ok()
        .and_then(|uuid| state.store.job(&uuid))
        .map(Json)
        .ok_or_else(|| ApiError::not_found("job", &id, "id"))
}

// ---- models ----

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSummary {
    pub id: String,
    pub corpus_ref: String,
    pub num_topics: usize,
    pub params: LdaParams,
    pub final_log_likelihood: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicView {
    pub topic_id: usize,
    pub words: Vec<String>,
    pub probabilities: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DocumentWeight {
    pub doc_id: String,
    pub theta: f64,
}

#[derive(Deserialize)]
struct CountQuery {
    n: Option<usize>,
}

fn model_or_404(state: &AppState, id: &str, field: &str) -> ApiResult<Arc<TopicModel>> {
    state
        .store
        .model(id)
        .ok_or_else(|| ApiError::not_found("model", id, field))
}

async fn list_models(State(state): State<AppState>) -> Json<Vec<ModelSummary>> {
    Json(
        state
            .store
            .models()
            .iter()
            .map(|m| ModelSummary {
                id: m.id.clone(),
                corpus_ref: m.corpus_ref.clone(),
                num_topics: m.num_topics,
                params: m.params.clone(),
                final_log_likelihood: m.log_likelihood_trace.last().copied(),
            })
            .collect(),
    )
}

async fn get_model(State(state): State<AppState>, ApiPath(id): ApiPath<String>) -> ApiResult<Json<TopicModel>> {
    Ok(Json(model_or_404(&state, &id, "id")?.as_ref().clone()))
}

async fn model_topics(
    State(state): State<AppState>,
    ApiPath(id): ApiPath<String>,
    ApiQuery(query): ApiQuery<CountQuery>,
) -> ApiResult<Json<Vec<TopicView>>> {
    let model = model_or_404(&state, &id, "id")?;
    let n = query.n.unwrap_or(model.params.top_n_words);
    let topics = (0..model.num_topics)
        .map(|k| {
            let (words, probabilities) = model.top_words_scored(k, n)?.into_iter().unzip();
            Ok(TopicView {
                topic_id: k,
                words,
                probabilities,
            })
        })
        .collect::<ApiResult<_>>()?;
    Ok(Json(topics))
}

fn documents(model: &TopicModel, topic: usize, n: Option<usize>) -> ApiResult<Vec<DocumentWeight>> {
    Ok(model
        .top_documents(topic, n.unwrap_or(DEFAULT_EVIDENCE_DOCS))?
        .into_iter()
        .map(|(doc_id, theta)| DocumentWeight { doc_id, theta })
        .collect())
}

async fn model_topic_documents(
    State(state): State<AppState>,
    ApiPath((id, topic)): ApiPath<(String, usize)>,
    ApiQuery(query): ApiQuery<CountQuery>,
) -> ApiResult<Json<Vec<DocumentWeight>>> {
    let model = model_or_404(&state, &id, "id")?;
    Ok(Json(documents(&model, topic, query.n)?))
}

async fn model_theta_csv(State(state): State<AppState>, ApiPath(id): ApiPath<String>) -> ApiResult<Response> {
    let model = model_or_404(&state, &id, "id")?;
    Ok(csv_response(model.theta_csv()))
}

fn csv_response(body: String) -> Response {
    ([(header::CONTENT_TYPE, "text/csv; charset=utf-8")], body).into_response()
}

// ---- comparisons ----

async fn list_comparisons(State(state): State<AppState>) -> Json<Vec<Comparison>> {
    Json(
        state
            .store
            .comparisons()
            .iter()
            .map(|c| c.as_ref().clone())
            .collect(),
    )
}

async fn get_comparison(State(state): State<AppState>, ApiPath(id): ApiPath<String>) -> ApiResult<Json<Comparison>> {
    state
        .store
        .comparison(&id)
        .map(|c| Json(c.as_ref().clone()))
        .ok_or_else(|| ApiError::not_found("comparison", &id, "id"))
}

// ---- projects ----

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectSummary {
    pub project_id: Uuid,
    pub corpus_ref: String,
    pub model_ref: String,
    pub stage: Stage,
    pub codes: usize,
    pub active: usize,
    pub outlier_removed: usize,
    pub rating_removed: usize,
    pub categories: usize,
    pub dimensions: usize,
    pub memos: usize,
}

impl ProjectSummary {
    fn of(p: &Project) -> Self {
        ProjectSummary {
            project_id: p.project_id(),
            corpus_ref: p.corpus_ref().to_string(),
            model_ref: p.model_ref().to_string(),
            stage: p.stage(),
            codes: p.codes().len(),
            active: p.count_with_status(CodeStatus::Active),
            outlier_removed: p.count_with_status(CodeStatus::OutlierRemoved),
            rating_removed: p.count_with_status(CodeStatus::RatingRemoved),
            categories: p.categories().len(),
            dimensions: p.dimensions().len(),
            memos: p.memos().len(),
        }
    }
}

/// A code with the values a labeling screen shows next to it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CodeView {
    #[serde(flatten)]
    pub code: Code,
    pub average_rating: Option<f64>,
    pub category_ids: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MutationResponse {
    pub project: Project,
    pub outcome: Outcome,
}

fn project_handle(state: &AppState, id: &str) -> ApiResult<Arc<Mutex<Project>>> {
    id.parse::<Uuid>()
        .ok()
        .and_then(|uuid| state.store.project(&uuid))
        .ok_or_else(|| ApiError::not_found("project", id, "project_id"))
}

async fn snapshot(state: &AppState, id: &str) -> ApiResult<Project> {
    Ok(project_handle(state, id)?.lock().await.clone())
}

/// Applies one action under the project's lock and persists the result
/// before it becomes visible.
async fn mutate(state: &AppState, id: &str, action: Action) -> ApiResult<Json<MutationResponse>> {
    let handle = project_handle(state, id)?;
    let mut project = handle.lock().await;
    let mut next = project.clone();
    let outcome = next.apply(action)?;
    state.store.save_project(&next)?;
    *project = next;
    Ok(Json(MutationResponse {
        project: project.clone(),
        outcome,
    }))
}

#[derive(Deserialize)]
struct CreateProject {
    model_id: String,
}

async fn create_project(
    State(state): State<AppState>,
    ApiJson(request): ApiJson<CreateProject>,
) -> ApiResult<(StatusCode, Json<Project>)> {
    let model = model_or_404(&state, &request.model_id, "model_id")?;
    let corpus = corpus_or_404(&state, &model.corpus_ref, "model_id")?;
    let project = Project::create(&corpus, &model)?;
    state
        .store
        .insert_project(project.clone())?
        .ok_or_else(|| ApiError::internal("project id collision"))?;
    Ok((StatusCode::CREATED, Json(project)))
}

async fn list_projects(State(state): State<AppState>) -> Json<Vec<ProjectSummary>> {
    let mut out = Vec::new();
    for handle in state.store.projects() {
        out.push(ProjectSummary::of(&*handle.lock().await));
    }
    Json(out)
}

async fn get_project(State(state): State<AppState>, ApiPath(id): ApiPath<String>) -> ApiResult<Json<Project>> {
    Ok(Json(snapshot(&state, &id).await?))
}

async fn project_file(State(state): State<AppState>, ApiPath(id): ApiPath<String>) -> ApiResult<Response> {
    let project = snapshot(&state, &id).await?;
    let body = serde_json::to_string_pretty(&project).expect("project serializes");
    Ok(([(header::CONTENT_TYPE, "application/json")], body).into_response())
}

async fn import_project(State(state): State<AppState>, body: String) -> ApiResult<(StatusCode, Json<Project>)> {
    let project = project_from_json(&body)?;
    let id = project.project_id();
    state.store.insert_project(project.clone())?.ok_or_else(|| {
        ApiError::new(
            StatusCode::CONFLICT,
            "project_exists",
            format!("project {id} already exists"),
            Some("project_id"),
        )
    })?;
    Ok((StatusCode::CREATED, Json(project)))
}

async fn project_codes(State(state): State<AppState>, ApiPath(id): ApiPath<String>) -> ApiResult<Json<Vec<CodeView>>> {
    let project = snapshot(&state, &id).await?;
    Ok(Json(
        project
            .codes()
            .iter()
            .map(|c| CodeView {
                code: c.clone(),
                average_rating: c.average_rating(),
                category_ids: project
                    .categories_of(c.topic_id)
                    .iter()
                    .map(|cat| cat.category_id)
                    .collect(),
            })
            .collect(),
    ))
}

#[derive(Serialize)]
struct AverageRating {
    topic_id: usize,
    average_rating: f64,
}

async fn average_rating(
    State(state): State<AppState>,
    ApiPath((id, topic)): ApiPath<(String, usize)>,
) -> ApiResult<Json<serde_json::Value>> {
    let project = snapshot(&state, &id).await?;
    let average_rating = project.average_rating(topic)?;
    Ok(Json(
        serde_json::to_value(AverageRating {
            topic_id: topic,
            average_rating,
        })
        .expect("serializes"),
    ))
}

async fn code_documents(
    State(state): State<AppState>,
    ApiPath((id, topic)): ApiPath<(String, usize)>,
    ApiQuery(query): ApiQuery<CountQuery>,
) -> ApiResult<Json<Vec<DocumentWeight>>> {
    let project = snapshot(&state, &id).await?;
    project.code(topic)?;
    let model = model_or_404(&state, project.model_ref(), "model_ref")?;
    Ok(Json(documents(&model, topic, query.n)?))
}

#[derive(Deserialize)]
struct OutlierRequest {
    topic_id: usize,
    reason: String,
}

async fn mark_outlier(
    State(state): State<AppState>,
    ApiPath(id): ApiPath<String>,
    ApiJson(r): ApiJson<OutlierRequest>,
) -> ApiResult<Json<MutationResponse>> {
    mutate(
        &state,
        &id,
        Action::MarkOutlier {
            topic_id: r.topic_id,
            reason: r.reason,
        },
    )
    .await
}

#[derive(Deserialize)]
struct LabelRequest {
    expert_id: String,
    topic_id: usize,
    label: String,
    rating: i64,
}

async fn submit_label(
    State(state): State<AppState>,
    ApiPath(id): ApiPath<String>,
    ApiJson(r): ApiJson<LabelRequest>,
) -> ApiResult<Json<MutationResponse>> {
    mutate(
        &state,
        &id,
        Action::SubmitExpertLabel {
            expert_id: r.expert_id,
            topic_id: r.topic_id,
            label: r.label,
            rating: r.rating,
        },
    )
    .await
}

#[derive(Deserialize)]
struct TextRequest {
    label: String,
}

async fn set_aggregate_label(
    State(state): State<AppState>,
    ApiPath((id, topic)): ApiPath<(String, usize)>,
    ApiJson(r): ApiJson<TextRequest>,
) -> ApiResult<Json<MutationResponse>> {
    mutate(
        &state,
        &id,
        Action::SetAggregateLabel {
            topic_id: topic,
            label: r.label,
        },
    )
    .await
}

#[derive(Deserialize)]
struct PruneRequest {
    #[serde(default = "default_prune_threshold")]
    threshold: f64,
}

fn default_prune_threshold() -> f64 {
    DEFAULT_PRUNE_THRESHOLD
}

async fn prune_rated(
    State(state): State<AppState>,
    ApiPath(id): ApiPath<String>,
    ApiJson(r): ApiJson<PruneRequest>,
) -> ApiResult<Json<MutationResponse>> {
    mutate(&state, &id, Action::PruneLowRated { threshold: r.threshold }).await
}

#[derive(Deserialize)]
struct CategoryRequest {
    name: String,
    kind: CategoryKind,
}

async fn create_category(
    State(state): State<AppState>,
    ApiPath(id): ApiPath<String>,
    ApiJson(r): ApiJson<CategoryRequest>,
) -> ApiResult<Json<MutationResponse>> {
    mutate(
        &state,
        &id,
        Action::CreateCategory {
            name: r.name,
            kind: r.kind,
        },
    )
    .await
}

#[derive(Deserialize)]
struct NameRequest {
    name: String,
}

async fn rename_category(
    State(state): State<AppState>,
    ApiPath((id, category_id)): ApiPath<(String, u64)>,
    ApiJson(r): ApiJson<NameRequest>,
) -> ApiResult<Json<MutationResponse>> {
    mutate(&state, &id, Action::RenameCategory { category_id, name: r.name }).await
}

#[derive(Deserialize)]
struct KindRequest {
    kind: CategoryKind,
}

async fn set_category_kind(
    State(state): State<AppState>,
    ApiPath((id, category_id)): ApiPath<(String, u64)>,
    ApiJson(r): ApiJson<KindRequest>,
) -> ApiResult<Json<MutationResponse>> {
    mutate(&state, &id, Action::SetCategoryKind { category_id, kind: r.kind }).await
}

#[derive(Deserialize)]
struct TopicRequest {
    topic_id: usize,
}

async fn assign_code(
    State(state): State<AppState>,
    ApiPath((id, category_id)): ApiPath<(String, u64)>,
    ApiJson(r): ApiJson<TopicRequest>,
) -> ApiResult<Json<MutationResponse>> {
    mutate(
        &state,
        &id,
        Action::AssignCode {
            category_id,
            topic_id: r.topic_id,
        },
    )
    .await
}

async fn unassign_code(
    State(state): State<AppState>,
    ApiPath((id, category_id, topic_id)): ApiPath<(String, u64, usize)>,
) -> ApiResult<Json<MutationResponse>> {
    mutate(&state, &id, Action::UnassignCode { category_id, topic_id }).await
}

async fn prune_singletons(State(state): State<AppState>, ApiPath(id): ApiPath<String>) -> ApiResult<Json<MutationResponse>> {
    mutate(&state, &id, Action::PruneSingletonCategories).await
}

async fn create_dimension(
    State(state): State<AppState>,
    ApiPath(id): ApiPath<String>,
    ApiJson(r): ApiJson<NameRequest>,
) -> ApiResult<Json<MutationResponse>> {
    mutate(&state, &id, Action::CreateDimension { name: r.name }).await
}

#[derive(Deserialize)]
struct CategoryRef {
    category_id: u64,
}

async fn assign_category(
    State(state): State<AppState>,
    ApiPath((id, dimension_id)): ApiPath<(String, u64)>,
    ApiJson(r): ApiJson<CategoryRef>,
) -> ApiResult<Json<MutationResponse>> {
    mutate(
        &state,
        &id,
        Action::AssignCategory {
            dimension_id,
            category_id: r.category_id,
        },
    )
    .await
}

async fn unassign_category(
    State(state): State<AppState>,
    ApiPath((id, dimension_id, category_id)): ApiPath<(String, u64, u64)>,
) -> ApiResult<Json<MutationResponse>> {
    mutate(
        &state,
        &id,
        Action::UnassignCategory {
            dimension_id,
            category_id,
        },
    )
    .await
}

#[derive(Deserialize)]
struct MemoRequest {
    attached_to: Attachment,
    author: String,
    text: String,
}

async fn add_memo(
    State(state): State<AppState>,
    ApiPath(id): ApiPath<String>,
    ApiJson(r): ApiJson<MemoRequest>,
) -> ApiResult<Json<MutationResponse>> {
    mutate(
        &state,
        &id,
        Action::AddMemo {
            attached_to: r.attached_to,
            author: r.author,
            text: r.text,
        },
    )
    .await
}

async fn advance(State(state): State<AppState>, ApiPath(id): ApiPath<String>) -> ApiResult<Json<MutationResponse>> {
    mutate(&state, &id, Action::AdvanceStage).await
}

#[derive(Deserialize)]
struct ExportQuery {
    format: Option<String>,
    table: Option<String>,
}

async fn export(
    State(state): State<AppState>,
    ApiPath(id): ApiPath<String>,
    ApiQuery(query): ApiQuery<ExportQuery>,
) -> ApiResult<Response> {
    let format: ExportFormat = query.format.as_deref().unwrap_or("json").parse()?;
    let project = snapshot(&state, &id).await?;
    match export_tables(&project, format) {
        Export::Json(body) => Ok(([(header::CONTENT_TYPE, "application/json")], body).into_response()),
        Export::Csv { table2, table3 } => match query.table.as_deref() {
            Some("2") => Ok(csv_response(table2)),
            Some("3") => Ok(csv_response(table3)),
            _ => Err(ApiError::bad_request(
                "invalid_table",
                "CSV export needs table=2 or table=3",
                Some("table"),
            )),
        },
    }
}
