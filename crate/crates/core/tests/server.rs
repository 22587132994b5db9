#[path = "../examples/funnel_replay.rs"]
#[allow(dead_code)]
mod funnel;

use std::time::Duration;

use axum::body::Body;
use axum::http::{header, Method, Request, StatusCode};
use axum::Router;
use groundwork::lda::{LdaParams, TopicModel};
use groundwork::server::{
    router, AppState, CodeView, CorpusSummary, DocumentWeight, ErrorBody, JobKind, JobRecord,
    JobStatus, MutationResponse, ProjectSummary, Store, TopicView,
};
use groundwork::synthetic::{planted_corpus, PlantedSpec};
use groundwork::topicsim::Comparison;
use groundwork::workflow::{export_tables, Action, Export, ExportFormat, Project, Stage};
use http_body_util::BodyExt;
use serde::de::DeserializeOwned;
use serde_json::{json, Value};
use tempfile::TempDir;
use tower::ServiceExt;

struct Api {
    _dir: TempDir,
    state: AppState,
}

struct Reply {
    status: StatusCode,
    content_type: Option<String>,
    body: Vec<u8>,
}

impl Reply {
    fn json<T: DeserializeOwned>(&self) -> T {
        serde_json::from_slice(&self.body).unwrap_or_else(|e| {
            panic!("{e}: {}", String::from_utf8_lossy(&self.body))
        })
    }

    fn error(&self) -> ErrorBody {
        self.json()
    }

    fn text(&self) -> String {
        String::from_utf8(self.body.clone()).unwrap()
    }
}

impl Api {
    fn new() -> Self {
        let dir = tempfile::tempdir().unwrap();
        let state = AppState::new(Store::open(dir.path()).unwrap(), 2);
        Api { _dir: dir, state }
    }

    fn reopen(self) -> Self {
        let Api { _dir, state } = self;
        drop(state);
        let state = AppState::new(Store::open(_dir.path()).unwrap(), 2);
        Api { _dir, state }
    }

    fn app(&self) -> Router {
        router(self.state.clone())
    }

    async fn send(&self, method: Method, uri: &str, body: Option<String>) -> Reply {
        let mut request = Request::builder().method(method).uri(format!("/api/v1{uri}"));
        if body.is_some() {
            request = request.header(header::CONTENT_TYPE, "application/json");
        }
        let request = request.body(body.map(Body::from).unwrap_or_else(Body::empty)).unwrap();
        let response = self.app().oneshot(request).await.unwrap();
        let status = response.status();
        let content_type = response
            .headers()
            .get(header::CONTENT_TYPE)
            .map(|v| v.to_str().unwrap().to_string());
        let body = response.into_body().collect().await.unwrap().to_bytes().to_vec();
        Reply {
            status,
            content_type,
            body,
        }
    }

    async fn get(&self, uri: &str) -> Reply {
        self.send(Method::GET, uri, None).await
    }

    async fn post(&self, uri: &str, body: Value) -> Reply {
        self.send(Method::POST, uri, Some(body.to_string())).await
    }

    async fn put(&self, uri: &str, body: Value) -> Reply {
        self.send(Method::PUT, uri, Some(body.to_string())).await
    }

    async fn delete(&self, uri: &str) -> Reply {
        self.send(Method::DELETE, uri, None).await
    }

    async fn import(&self, project: &Project) -> Reply {
        self.send(
            Method::POST,
            "/projects/import",
            Some(serde_json::to_string(project).unwrap()),
        )
        .await
    }

    async fn wait(&self, job: &JobRecord) -> JobRecord {
        for _ in 0..6000 {
            let current: JobRecord = self.get(&format!("/jobs/{}", job.job_id)).await.json();
            if current.status.is_terminal() {
                return current;
            }
            tokio::time::sleep(Duration::from_millis(10)).await;
        }
        panic!("job {} did not finish", job.job_id);
    }

    /// Sends `action` through the route that corresponds to it.
    async fn act(&self, id: &str, action: &Action) -> Reply {
        let p = format!("/projects/{id}");
        match action {
            Action::CreateProject { .. } => panic!("not a route"),
            Action::MarkOutlier { topic_id, reason } => {
                self.post(&format!("{p}/outliers"), json!({"topic_id": topic_id, "reason": reason}))
                    .await
            }
            Action::AdvanceStage => self.post(&format!("{p}/advance"), json!({})).await,
            Action::SubmitExpertLabel {
                expert_id,
                topic_id,
                label,
                rating,
            } => {
                self.post(
                    &format!("{p}/labels"),
                    json!({"expert_id": expert_id, "topic_id": topic_id, "label": label, "rating": rating}),
                )
                .await
            }
            Action::SetAggregateLabel { topic_id, label } => {
                self.put(&format!("{p}/codes/{topic_id}/aggregate-label"), json!({"label": label}))
                    .await
            }
            Action::PruneLowRated { threshold } => {
                self.post(&format!("{p}/prune-rated"), json!({"threshold": threshold}))
                    .await
            }
            Action::CreateCategory { name, kind } => {
                self.post(&format!("{p}/categories"), json!({"name": name, "kind": kind}))
                    .await
            }
            Action::RenameCategory { category_id, name } => {
                self.put(&format!("{p}/categories/{category_id}/name"), json!({"name": name}))
                    .await
            }
            Action::SetCategoryKind { category_id, kind } => {
                self.put(&format!("{p}/categories/{category_id}/kind"), json!({"kind": kind}))
                    .await
            }
            Action::AssignCode {
                category_id,
                topic_id,
            } => {
                self.post(
                    &format!("{p}/categories/{category_id}/codes"),
                    json!({"topic_id": topic_id}),
                )
                .await
            }
            Action::UnassignCode {
                category_id,
                topic_id,
            } => {
                self.delete(&format!("{p}/categories/{category_id}/codes/{topic_id}"))
                    .await
            }
            Action::PruneSingletonCategories => self.post(&format!("{p}/prune-singletons"), json!({})).await,
            Action::CreateDimension { name } => {
                self.post(&format!("{p}/dimensions"), json!({"name": name})).await
            }
            Action::AssignCategory {
                dimension_id,
                category_id,
            } => {
                self.post(
                    &format!("{p}/dimensions/{dimension_id}/categories"),
                    json!({"category_id": category_id}),
                )
                .await
            }
            Action::UnassignCategory {
                dimension_id,
                category_id,
            } => {
                self.delete(&format!("{p}/dimensions/{dimension_id}/categories/{category_id}"))
                    .await
            }
            Action::AddMemo {
                attached_to,
                author,
                text,
            } => {
                self.post(
                    &format!("{p}/memos"),
                    json!({"attached_to": attached_to, "author": author, "text": text}),
                )
                .await
            }
        }
    }
}

fn small_project(k: usize) -> Project {
    let words = (0..k)
        .map(|t| (0..10).map(|i| format!("t{t}w{i}")).collect())
        .collect();
    Project::from_topics("corpus", "model", words)
}

fn documents() -> Value {
    json!({
        "documents": [
            {"doc_id": "a", "raw_text": "Partners share knowledge across firms and share risk."},
            {"doc_id": "b", "raw_text": "Knowledge sharing between partner firms builds trust."},
            {"doc_id": "c", "raw_text": "Trust and contracts govern the innovation partnership."}
        ]
    })
}

/// A planted corpus stored directly, large enough for a 40-topic model.
fn planted(api: &Api) -> String {
    let planted = planted_corpus(&PlantedSpec {
        num_topics: 8,
        vocab_size: 300,
        num_docs: 60,
        doc_length: 60,
        ..PlantedSpec::default()
    });
    api.state.store.put_corpus(planted.corpus).unwrap().id.clone()
}

async fn lda_job(api: &Api, corpus_id: &str, topics: usize) -> JobRecord {
    let params = LdaParams::new(topics).with_sweeps(20).with_seed(11);
    let reply = api
        .post("/jobs/lda", json!({"corpus_id": corpus_id, "params": params}))
        .await;
    assert_eq!(reply.status, StatusCode::ACCEPTED, "{}", reply.text());
    reply.json()
}

#[tokio::test]
async fn health_answers() {
    let api = Api::new();
    let reply = api.get("/health").await;
    assert_eq!(reply.status, StatusCode::OK);
    assert_eq!(reply.json::<Value>()["status"], "ok");
}

#[tokio::test]
async fn corpus_upload_and_listing() {
    let api = Api::new();
    let reply = api.post("/corpora", documents()).await;
    assert_eq!(reply.status, StatusCode::CREATED, "{}", reply.text());
    let summary: CorpusSummary = reply.json();
    assert_eq!(summary.num_docs, 3);
    assert!(summary.vocab_size > 0);
    assert!(summary.ingest.as_ref().unwrap().skipped.is_empty());

    let listed: Vec<CorpusSummary> = api.get("/corpora").await.json();
    assert_eq!(listed.len(), 1);
    assert_eq!(listed[0].id, summary.id);

    let fetched = api.get(&format!("/corpora/{}", summary.id)).await;
    assert_eq!(fetched.status, StatusCode::OK);
    assert_eq!(fetched.json::<Value>()["id"], summary.id);

    let missing = api.get("/corpora/nope").await;
    assert_eq!(missing.status, StatusCode::NOT_FOUND);
    assert_eq!(missing.error().field.as_deref(), Some("id"));
}

#[tokio::test]
async fn corpus_contract_errors_are_400() {
    let api = Api::new();
    let reply = api
        .post(
            "/corpora",
            json!({"documents": [
                {"doc_id": "a", "raw_text": "one text"},
                {"doc_id": "a", "raw_text": "another text"}
            ]}),
        )
        .await;
    assert_eq!(reply.status, StatusCode::BAD_REQUEST);
    assert_eq!(reply.error().code, "duplicate_doc_id");
}

#[tokio::test]
async fn malformed_payloads_are_422() {
    let api = Api::new();
    let project = small_project(3);
    api.import(&project).await;
    let id = project.project_id();

    let reply = api
        .send(Method::POST, &format!("/projects/{id}/outliers"), Some("{not json".into()))
        .await;
    assert_eq!(reply.status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(reply.error().code, "malformed_payload");

    let reply = api
        .post(&format!("/projects/{id}/outliers"), json!({"topic_id": "zero", "reason": "x"}))
        .await;
    assert_eq!(reply.status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(reply.error().field.as_deref(), Some("topic_id"));

    let reply = api
        .send(
            Method::POST,
            &format!("/projects/{id}/outliers"),
            Some(r#"{"topic_id": 0, "reason": "x"} trailing"#.into()),
        )
        .await;
    assert_eq!(reply.status, StatusCode::UNPROCESSABLE_ENTITY);

    let reply = api.post("/corpora", json!({"documents": [{"doc_id": "a"}]})).await;
    assert_eq!(reply.status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(reply.error().field.as_deref(), Some("documents[0]"));
}

#[tokio::test]
async fn rating_six_is_400_with_field_rating() {
    let api = Api::new();
    let project = small_project(3);
    api.import(&project).await;
    let id = project.project_id();
    assert_eq!(api.act(&id.to_string(), &Action::AdvanceStage).await.status, StatusCode::OK);

    let reply = api
        .act(
            &id.to_string(),
            &Action::SubmitExpertLabel {
                expert_id: "e1".into(),
                topic_id: 0,
                label: "x".into(),
                rating: 6,
            },
        )
        .await;
    assert_eq!(reply.status, StatusCode::BAD_REQUEST);
    assert_eq!(reply.error().field.as_deref(), Some("rating"));

    // the rejected label left no trace
    let stored: Project = api.get(&format!("/projects/{id}")).await.json();
    assert!(stored.code(0).unwrap().expert_labels.is_empty());
}

#[tokio::test]
async fn stage_violations_are_409() {
    let api = Api::new();
    let project = small_project(3);
    api.import(&project).await;
    let id = project.project_id().to_string();

    let reply = api
        .act(
            &id,
            &Action::SubmitExpertLabel {
                expert_id: "e1".into(),
                topic_id: 0,
                label: "x".into(),
                rating: 3,
            },
        )
        .await;
    assert_eq!(reply.status, StatusCode::CONFLICT);

    api.act(&id, &Action::AdvanceStage).await;
    // unrated codes block the next advance
    let reply = api.act(&id, &Action::AdvanceStage).await;
    assert_eq!(reply.status, StatusCode::CONFLICT);
    assert_eq!(reply.error().code, "completion_rule_unmet");
}

#[tokio::test]
async fn unknown_ids_are_404() {
    let api = Api::new();
    for uri in [
        "/projects/not-a-uuid".to_string(),
        format!("/projects/{}", uuid::Uuid::nil()),
        "/models/none".to_string(),
        "/comparisons/none".to_string(),
        format!("/jobs/{}", uuid::Uuid::nil()),
    ] {
        assert_eq!(api.get(&uri).await.status, StatusCode::NOT_FOUND, "{uri}");
    }

    let reply = api.post("/projects", json!({"model_id": "none"})).await;
    assert_eq!(reply.status, StatusCode::NOT_FOUND);
    assert_eq!(reply.error().field.as_deref(), Some("model_id"));

    let reply = api
        .post("/jobs/lda", json!({"corpus_id": "none", "params": {"num_topics": 2}}))
        .await;
    assert_eq!(reply.status, StatusCode::NOT_FOUND);
    assert_eq!(reply.error().field.as_deref(), Some("corpus_id"));

    let project = small_project(3);
    api.import(&project).await;
    let reply = api
        .act(
            &project.project_id().to_string(),
            &Action::MarkOutlier {
                topic_id: 7,
                reason: "x".into(),
            },
        )
        .await;
    assert_eq!(reply.status, StatusCode::NOT_FOUND);
    assert_eq!(reply.error().field.as_deref(), Some("topic_id"));
}

#[tokio::test]
async fn invalid_lda_params_are_400() {
    let api = Api::new();
    let corpus_id = planted(&api);
    let reply = api
        .post(
            "/jobs/lda",
            json!({"corpus_id": corpus_id, "params": {"num_topics": 4, "alpha": -1.0}}),
        )
        .await;
    assert_eq!(reply.status, StatusCode::BAD_REQUEST);
    assert_eq!(reply.error().field.as_deref(), Some("params"));
    assert!(api.get("/jobs").await.json::<Vec<JobRecord>>().is_empty());
}

#[tokio::test]
async fn identical_lda_jobs_give_equal_models() {
    let api = Api::new();
    let corpus_id = planted(&api);
    let first = lda_job(&api, &corpus_id, 40).await;
    let second = lda_job(&api, &corpus_id, 40).await;
    assert_eq!(first.kind, JobKind::LdaRun);
    assert_ne!(first.job_id, second.job_id);

    let first = api.wait(&first).await;
    let second = api.wait(&second).await;
    assert_eq!(first.status, JobStatus::Done, "{:?}", first.error);
    assert_eq!(second.status, JobStatus::Done, "{:?}", second.error);
    assert_eq!(first.params["params"]["num_topics"], 40);

    let a: TopicModel = api.get(&format!("/models/{}", first.result_ref.unwrap())).await.json();
    let b: TopicModel = api.get(&format!("/models/{}", second.result_ref.unwrap())).await.json();
    assert_eq!(a, b);

    let jobs: Vec<JobRecord> = api.get("/jobs").await.json();
    assert_eq!(jobs.len(), 2);
}

#[tokio::test]
async fn topics_of_a_40_topic_model() {
    let api = Api::new();
    let corpus_id = planted(&api);
    let job = api.wait(&lda_job(&api, &corpus_id, 40).await).await;
    let model_id = job.result_ref.unwrap();

    let topics: Vec<TopicView> = api.get(&format!("/models/{model_id}/topics")).await.json();
    assert_eq!(topics.len(), 40);
    for (k, topic) in topics.iter().enumerate() {
        assert_eq!(topic.topic_id, k);
        assert_eq!(topic.words.len(), 10);
        assert!(topic.probabilities.windows(2).all(|w| w[0] >= w[1]));
    }
    let short: Vec<TopicView> = api.get(&format!("/models/{model_id}/topics?n=3")).await.json();
    assert!(short.iter().all(|t| t.words.len() == 3));

    let docs: Vec<DocumentWeight> = api
        .get(&format!("/models/{model_id}/topics/0/documents"))
        .await
        .json();
    assert_eq!(docs.len(), 5);
    assert!(docs.windows(2).all(|w| w[0].theta >= w[1].theta));
    let reply = api.get(&format!("/models/{model_id}/topics/40/documents")).await;
    assert_eq!(reply.status, StatusCode::NOT_FOUND);

    let csv = api.get(&format!("/models/{model_id}/theta.csv")).await;
    assert!(csv.content_type.as_deref().unwrap().starts_with("text/csv"));
    assert_eq!(csv.text().lines().count(), 61);

    let listed: Vec<Value> = api.get("/models").await.json();
    assert_eq!(listed.len(), 1);
    assert_eq!(listed[0]["num_topics"], 40);
}

#[tokio::test]
async fn project_from_model_with_evidence() {
    let api = Api::new();
    let corpus_id = planted(&api);
    let job = api.wait(&lda_job(&api, &corpus_id, 6).await).await;
    let model_id = job.result_ref.unwrap();

    let reply = api.post("/projects", json!({"model_id": model_id})).await;
    assert_eq!(reply.status, StatusCode::CREATED, "{}", reply.text());
    let project: Project = reply.json();
    assert_eq!(project.codes().len(), 6);
    assert_eq!(project.stage(), Stage::RawCoding);
    let id = project.project_id();

    let evidence: Vec<DocumentWeight> = api
        .get(&format!("/projects/{id}/codes/2/documents?n=3"))
        .await
        .json();
    assert_eq!(evidence.len(), 3);

    let summaries: Vec<ProjectSummary> = api.get("/projects").await.json();
    assert_eq!(summaries.len(), 1);
    assert_eq!(summaries[0].active, 6);
}

#[tokio::test]
async fn grid_comparison_job() {
    let api = Api::new();
    let corpus_id = planted(&api);
    let reply = api
        .post(
            "/jobs/compare",
            json!({"corpus_id": corpus_id, "topics": [4, 6, 8], "sweeps": 20, "seed": 3}),
        )
        .await;
    assert_eq!(reply.status, StatusCode::ACCEPTED, "{}", reply.text());
    let job = api.wait(&reply.json()).await;
    assert_eq!(job.kind, JobKind::GridCompare);
    assert_eq!(job.status, JobStatus::Done, "{:?}", job.error);

    let comparison: Comparison = api
        .get(&format!("/comparisons/{}", job.result_ref.unwrap()))
        .await
        .json();
    assert_eq!(comparison.grid.ks, vec![4, 6, 8]);
    assert_eq!(comparison.grid.reports.len(), 6);
    assert!([4, 6, 8].contains(&comparison.selection.selected_k));
    assert_eq!(api.get("/models").await.json::<Vec<Value>>().len(), 3);
    assert_eq!(api.get("/comparisons").await.json::<Vec<Value>>().len(), 1);

    let reply = api
        .post("/jobs/compare", json!({"corpus_id": corpus_id, "topics": [4]}))
        .await;
    assert_eq!(reply.status, StatusCode::BAD_REQUEST);
    assert_eq!(reply.error().field.as_deref(), Some("topics"));
}

#[tokio::test]
async fn restart_keeps_results_and_fails_interrupted_jobs() {
    let api = Api::new();
    let corpus_id = planted(&api);
    let done = api.wait(&lda_job(&api, &corpus_id, 4).await).await;
    let project = small_project(3);
    api.import(&project).await;
    api.act(&project.project_id().to_string(), &Action::AdvanceStage).await;

    let mut stuck = done.clone();
    stuck.job_id = uuid::Uuid::new_v4();
    stuck.status = JobStatus::Queued;
    stuck.result_ref = None;
    stuck.finished_at = None;
    api.state.store.put_job(stuck.clone()).unwrap();

    let api = api.reopen();
    let after: JobRecord = api.get(&format!("/jobs/{}", done.job_id)).await.json();
    assert_eq!(after, done);
    let model = api.get(&format!("/models/{}", done.result_ref.unwrap())).await;
    assert_eq!(model.status, StatusCode::OK);

    let stuck: JobRecord = api.get(&format!("/jobs/{}", stuck.job_id)).await.json();
    assert_eq!(stuck.status, JobStatus::Failed);
    assert!(stuck.result_ref.is_none());
    assert!(stuck.error.is_some());

    let reloaded: Project = api
        .get(&format!("/projects/{}", project.project_id()))
        .await
        .json();
    assert_eq!(reloaded.stage(), Stage::ExpertCoding);
}

#[tokio::test]
async fn import_and_file_round_trip() {
    let api = Api::new();
    let project = small_project(4);
    assert_eq!(api.import(&project).await.status, StatusCode::CREATED);

    let again = api.import(&project).await;
    assert_eq!(again.status, StatusCode::CONFLICT);
    assert_eq!(again.error().code, "project_exists");

    let file = api.get(&format!("/projects/{}/file", project.project_id())).await;
    assert_eq!(file.status, StatusCode::OK);
    let parsed: Project = file.json();
    assert_eq!(parsed, project);

    let mut value: Value = serde_json::to_value(&project).unwrap();
    value["schema_version"] = json!(99);
    let reply = api
        .send(Method::POST, "/projects/import", Some(value.to_string()))
        .await;
    assert_eq!(reply.status, StatusCode::UNPROCESSABLE_ENTITY);

    let reply = api
        .send(Method::POST, "/projects/import", Some("[]".into()))
        .await;
    assert_eq!(reply.status, StatusCode::UNPROCESSABLE_ENTITY);
}

#[tokio::test]
async fn export_requires_a_table_for_csv() {
    let api = Api::new();
    let project = small_project(2);
    api.import(&project).await;
    let id = project.project_id();

    let reply = api.get(&format!("/projects/{id}/export?format=csv")).await;
    assert_eq!(reply.status, StatusCode::BAD_REQUEST);
    assert_eq!(reply.error().field.as_deref(), Some("table"));

    let reply = api.get(&format!("/projects/{id}/export?format=xml")).await;
    assert_eq!(reply.status, StatusCode::BAD_REQUEST);

    let reply = api.get(&format!("/projects/{id}/export")).await;
    assert_eq!(reply.status, StatusCode::OK);
    assert_eq!(reply.json::<Value>()["table2"].as_array().unwrap().len(), 2);
}

#[tokio::test]
async fn funnel_over_http_matches_the_library() {
    let expected = funnel::run_funnel().unwrap();
    let api = Api::new();
    assert_eq!(api.import(&expected.initial).await.status, StatusCode::CREATED);
    let id = expected.initial.project_id().to_string();

    for event in &expected.project.audit_log()[1..] {
        let reply = api.act(&id, &event.action).await;
        assert_eq!(reply.status, StatusCode::OK, "{:?}: {}", event.action, reply.text());
        let _: MutationResponse = reply.json();
    }

    let actual: Project = api.get(&format!("/projects/{id}")).await.json();
    assert_eq!(actual.stage(), expected.project.stage());
    assert_eq!(actual.codes(), expected.project.codes());
    assert_eq!(actual.categories(), expected.project.categories());
    assert_eq!(actual.dimensions(), expected.project.dimensions());
    assert_eq!(actual.audit_log().len(), expected.project.audit_log().len());

    let codes: Vec<CodeView> = api.get(&format!("/projects/{id}/codes")).await.json();
    assert_eq!(codes.iter().filter(|c| c.code.is_active()).count(), 30);
    let topic_20 = codes.iter().find(|c| c.code.topic_id == 20).unwrap();
    assert_eq!(topic_20.category_ids.len(), 3);

    let rating: Value = api
        .get(&format!("/projects/{id}/codes/{}/average-rating", funnel::BOUNDARY))
        .await
        .json();
    assert_eq!(rating["average_rating"], 2.0);

    let Export::Csv { table2, table3 } = export_tables(&expected.project, ExportFormat::Csv) else {
        unreachable!()
    };
    let csv2 = api.get(&format!("/projects/{id}/export?format=csv&table=2")).await;
    let csv3 = api.get(&format!("/projects/{id}/export?format=csv&table=3")).await;
    assert!(csv3.content_type.as_deref().unwrap().starts_with("text/csv"));
    assert_eq!(csv2.text(), table2);
    assert_eq!(csv3.text(), table3);

    let summary: Vec<ProjectSummary> = api.get("/projects").await.json();
    assert_eq!(summary[0].outlier_removed, 6);
    assert_eq!(summary[0].rating_removed, 4);
    assert_eq!(summary[0].dimensions, 2);
}

#[tokio::test]
async fn category_routes_cover_rename_kind_and_unassign() {
    let api = Api::new();
    let mut project = small_project(3);
    project.apply(Action::AdvanceStage).unwrap();
    for t in 0..3 {
        project
            .apply(Action::SubmitExpertLabel {
                expert_id: "e".into(),
                topic_id: t,
                label: format!("l{t}"),
                rating: 4,
            })
            .unwrap();
        project
            .apply(Action::SetAggregateLabel {
                topic_id: t,
                label: format!("l{t}"),
            })
            .unwrap();
    }
    project.apply(Action::AdvanceStage).unwrap();
    api.import(&project).await;
    let id = project.project_id().to_string();

    let created: MutationResponse = api
        .post(&format!("/projects/{id}/categories"), json!({"name": "A", "kind": "CORE"}))
        .await
        .json();
    let groundwork::workflow::Outcome::CategoryCreated { category_id } = created.outcome else {
        panic!("unexpected outcome")
    };
    for t in [0, 1] {
        let r = api.act(&id, &Action::AssignCode { category_id, topic_id: t }).await;
        assert_eq!(r.status, StatusCode::OK);
    }
    let r = api.act(&id, &Action::AssignCode { category_id, topic_id: 0 }).await;
    assert_eq!(r.status, StatusCode::BAD_REQUEST);

    api.put(&format!("/projects/{id}/categories/{category_id}/name"), json!({"name": "B"}))
        .await;
    let r: MutationResponse = api
        .put(&format!("/projects/{id}/categories/{category_id}/kind"), json!({"kind": "GENERIC"}))
        .await
        .json();
    let category = r.project.category(category_id).unwrap();
    assert_eq!(category.name, "B");

    let r: MutationResponse = api
        .delete(&format!("/projects/{id}/categories/{category_id}/codes/1"))
        .await
        .json();
    assert_eq!(
        r.project.category(category_id).unwrap().member_codes.iter().copied().collect::<Vec<_>>(),
        vec![0]
    );
    let missing = api.delete(&format!("/projects/{id}/categories/99/codes/1")).await;
    assert_eq!(missing.status, StatusCode::NOT_FOUND);
}
