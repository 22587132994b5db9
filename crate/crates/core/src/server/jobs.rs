//! Background jobs for model fitting and grid comparison.

use std::sync::Arc;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use tokio::sync::Semaphore;
use uuid::Uuid;

use super::store::Store;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum JobKind {
    LdaRun,
    GridCompare,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum JobStatus {
    Queued,
    Running,
    Done,
    Failed,
}

impl JobStatus {
    pub fn is_terminal(self) -> bool {
        matches!(self, JobStatus::Done | JobStatus::Failed)
    }
}

/// `result_ref` is set exactly when the job is DONE. It names a model for
/// LDA_RUN and a comparison for GRID_COMPARE.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JobRecord {
    pub job_id: Uuid,
    pub kind: JobKind,
    pub status: JobStatus,
    pub params: serde_json::Value,
    pub result_ref: Option<String>,
    pub error: Option<String>,
    pub submitted_at: DateTime<Utc>,
    pub finished_at: Option<DateTime<Utc>>,
}

fn update(store: &Store, job_id: Uuid, change: impl FnOnce(&mut JobRecord)) {
    let Some(mut job) = store.job(&job_id) else {
        return;
    };
    if job.status.is_terminal() {
        return;
    }
    change(&mut job);
    if job.status.is_terminal() {
        job.finished_at = Some(Utc::now());
    }
    if let Err(e) = store.put_job(job) {
        log::error!("cannot record job {job_id}: {e}");
    }
}

/// Records a QUEUED job and runs `work` on the blocking pool once a worker
/// slot is free. `work` returns the id of the stored result.
pub fn submit<F>(
    store: Arc<Store>,
    workers: Arc<Semaphore>,
    kind: JobKind,
    params: serde_json::Value,
    work: F,
) -> Result<JobRecord, super::store::StoreError>
where
    F: FnOnce(&Store) -> Result<String, String> + Send + 'static,
{
    let job = JobRecord {
        job_id: Uuid::new_v4(),
        kind,
        status: JobStatus::Queued,
        params,
        result_ref: None,
        error: None,
        submitted_at: Utc::now(),
        finished_at: None,
    };
    store.put_job(job.clone())?;
    let job_id = job.job_id;
    tokio::spawn(async move {
        let _permit = workers.acquire_owned().await.expect("worker pool open");
        update(&store, job_id, |j| j.status = JobStatus::Running);
        log::info!("job {job_id} ({kind:?}) started");
        let runner = store.clone();
        let result = tokio::task::spawn_blocking(move || work(&runner))
            .await
            .unwrap_or_else(|e| Err(format!("job panicked: {e}")));
        match result {
            Ok(result_ref) => {
                log::info!("job {job_id} done: {result_ref}");
                update(&store, job_id, |j| {
                    j.status = JobStatus::Done;
                    j.result_ref = Some(result_ref);
                });
            }
            Err(error) => {
                log::warn!("job {job_id} failed: {error}");
                update(&store, job_id, |j| {
                    j.status = JobStatus::Failed;
                    j.error = Some(error);
                });
            }
        }
    });
    Ok(job)
}
