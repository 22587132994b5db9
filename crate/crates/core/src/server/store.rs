//! File-backed storage for everything the service produces.
//!
//! Each resource is one JSON file under `<root>/<kind>/<id>.json`, written
//! atomically. The whole store is loaded into memory at startup.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::{Arc, RwLock};

use serde::de::DeserializeOwned;
use serde::Serialize;
use tokio::sync::Mutex;
use uuid::Uuid;

use crate::corpus::EncodedCorpus;
use crate::lda::TopicModel;
use crate::topicsim::Comparison;
use crate::workflow::{self, Project};

use super::jobs::{JobRecord, JobStatus};

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("store I/O on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot load {path}: {message}")]
    Corrupt { path: PathBuf, message: String },
}

fn io(path: &Path) -> impl FnOnce(std::io::Error) -> StoreError + '_ {
    move |source| StoreError::Io {
        path: path.to_owned(),
        source,
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), StoreError> {
    let dir = path.parent().expect("store paths have a parent");
    let mut file = tempfile::NamedTempFile::new_in(dir).map_err(io(path))?;
    serde_json::to_writer(&mut file, value).expect("stored values serialize");
    file.write_all(b"\n").map_err(io(path))?;
    file.persist(path).map_err(|e| io(path)(e.error))?;
    Ok(())
}

fn read_dir_json<T, F>(dir: &Path, parse: F) -> Result<Vec<T>, StoreError>
where
    F: Fn(&str) -> Result<T, String>,
{
    let mut out = Vec::new();
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(io(dir))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    for path in paths {
        let text = std::fs::read_to_string(&path).map_err(io(&path))?;
        let value = parse(&text).map_err(|message| StoreError::Corrupt {
            path: path.clone(),
            message,
        })?;
        out.push(value);
    }
    Ok(out)
}

fn from_json<T: DeserializeOwned>(text: &str) -> Result<T, String> {
    serde_json::from_str(text).map_err(|e| e.to_string())
}

pub struct Store {
    root: PathBuf,
    corpora: RwLock<BTreeMap<String, Arc<EncodedCorpus>>>,
    models: RwLock<BTreeMap<String, Arc<TopicModel>>>,
    comparisons: RwLock<BTreeMap<String, Arc<Comparison>>>,
    projects: RwLock<BTreeMap<Uuid, Arc<Mutex<Project>>>>,
    jobs: RwLock<BTreeMap<Uuid, JobRecord>>,
}

const KINDS: [&str; 5] = ["corpora", "models", "comparisons", "projects", "jobs"];

impl Store {
    /// Opens (creating if needed) a store rooted at `root`. Jobs that were
    /// queued or running when the previous process stopped are marked failed.
    pub fn open(root: &Path) -> Result<Self, StoreError> {
        for kind in KINDS {
            let dir = root.join(kind);
            std::fs::create_dir_all(&dir).map_err(io(&dir))?;
        }
        let corpora = read_dir_json(&root.join("corpora"), |t| {
            EncodedCorpus::from_json(t).map_err(|e| e.to_string())
        })?;
        let models = read_dir_json(&root.join("models"), |t| {
            TopicModel::from_json(t).map_err(|e| e.to_string())
        })?;
        let comparisons: Vec<Comparison> = read_dir_json(&root.join("comparisons"), from_json)?;
        let projects = read_dir_json(&root.join("projects"), |t| {
            workflow::project_from_json(t).map_err(|e| e.to_string())
        })?;
        let jobs: Vec<JobRecord> = read_dir_json(&root.join("jobs"), from_json)?;

        let store = Store {
            root: root.to_owned(),
            corpora: RwLock::new(corpora.into_iter().map(|c| (c.id.clone(), Arc::new(c))).collect()),
            models: RwLock::new(models.into_iter().map(|m| (m.id.clone(), Arc::new(m))).collect()),
            comparisons: RwLock::new(
                comparisons
                    .into_iter()
                    .map(|c| (c.id.clone(), Arc::new(c)))
                    .collect(),
            ),
            projects: RwLock::new(
                projects
                    .into_iter()
                    .map(|p| (p.project_id(), Arc::new(Mutex::new(p))))
                    .collect(),
            ),
            jobs: RwLock::new(BTreeMap::new()),
        };
        for mut job in jobs {
            if !job.status.is_terminal() {
                log::warn!("job {} was {:?} at shutdown; marking it failed", job.job_id, job.status);
                job.status = JobStatus::Failed;
                job.error = Some("interrupted by a service restart".into());
                store.put_job(job.clone())?;
            }
            store.jobs.write().expect("jobs lock").insert(job.job_id, job);
        }
        Ok(store)
    }

    fn path(&self, kind: &str, id: &str) -> PathBuf {
        self.root.join(kind).join(format!("{id}.json"))
    }

    pub fn put_corpus(&self, corpus: EncodedCorpus) -> Result<Arc<EncodedCorpus>, StoreError> {
        write_json(&self.path("corpora", &corpus.id), &corpus)?;
        let corpus = Arc::new(corpus);
        self.corpora
            .write()
            .expect("corpora lock")
            .insert(corpus.id.clone(), corpus.clone());
        Ok(corpus)
    }

    pub fn corpus(&self, id: &str) -> Option<Arc<EncodedCorpus>> {
        self.corpora.read().expect("corpora lock").get(id).cloned()
    }

    pub fn corpora(&self) -> Vec<Arc<EncodedCorpus>> {
        self.corpora.read().expect("corpora lock").values().cloned().collect()
    }

    pub fn put_model(&self, model: TopicModel) -> Result<Arc<TopicModel>, StoreError> {
        write_json(&self.path("models", &model.id), &model)?;
        let model = Arc::new(model);
        self.models
            .write()
            .expect("models lock")
            .insert(model.id.clone(), model.clone());
        Ok(model)
    }

    pub fn model(&self, id: &str) -> Option<Arc<TopicModel>> {
        self.models.read().expect("models lock").get(id).cloned()
    }

    pub fn models(&self) -> Vec<Arc<TopicModel>> {
        self.models.read().expect("models lock").values().cloned().collect()
    }

    pub fn put_comparison(&self, comparison: Comparison) -> Result<Arc<Comparison>, StoreError> {
        write_json(&self.path("comparisons", &comparison.id), &comparison)?;
        let comparison = Arc::new(comparison);
        self.comparisons
            .write()
            .expect("comparisons lock")
            .insert(comparison.id.clone(), comparison.clone());
        Ok(comparison)
    }

    pub fn comparison(&self, id: &str) -> Option<Arc<Comparison>> {
        self.comparisons.read().expect("comparisons lock").get(id).cloned()
    }

    pub fn comparisons(&self) -> Vec<Arc<Comparison>> {
        self.comparisons
            .read()
            .expect("comparisons lock")
            .values()
            .cloned()
            .collect()
    }

    /// Persists `project`. Callers hold the project's lock when it is shared.
    pub fn save_project(&self, project: &Project) -> Result<(), StoreError> {
        let path = self.path("projects", &project.project_id().to_string());
        workflow::save_project(project, &path).map_err(|e| StoreError::Corrupt {
            path,
            message: e.to_string(),
        })
    }

    /// Stores a new project; returns `None` when its id is already taken.
    pub fn insert_project(&self, project: Project) -> Result<Option<Arc<Mutex<Project>>>, StoreError> {
        let id = project.project_id();
        let mut projects = self.projects.write().expect("projects lock");
        if projects.contains_key(&id) {
            return Ok(None);
        }
        self.save_project(&project)?;
        let handle = Arc::new(Mutex::new(project));
        projects.insert(id, handle.clone());
        Ok(Some(handle))
    }

    pub fn project(&self, id: &Uuid) -> Option<Arc<Mutex<Project>>> {
        self.projects.read().expect("projects lock").get(id).cloned()
    }

    pub fn projects(&self) -> Vec<Arc<Mutex<Project>>> {
        self.projects
            .read()
            .expect("projects lock")
            .values()
            .cloned()
            .collect()
    }

    pub fn put_job(&self, job: JobRecord) -> Result<(), StoreError> {
        write_json(&self.path("jobs", &job.job_id.to_string()), &job)?;
        self.jobs.write().expect("jobs lock").insert(job.job_id, job);
        Ok(())
    }

    pub fn job(&self, id: &Uuid) -> Option<JobRecord> {
        self.jobs.read().expect("jobs lock").get(id).cloned()
    }

    pub fn jobs(&self) -> Vec<JobRecord> {
        self.jobs.read().expect("jobs lock").values().cloned().collect()
    }
}
