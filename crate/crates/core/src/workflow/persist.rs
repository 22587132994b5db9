use std::io::Write;
use std::path::Path;

use super::{Project, WorkflowError};

pub const SCHEMA_VERSION: u32 = 1;

fn io_error(path: &Path, source: std::io::Error) -> WorkflowError {
    WorkflowError::Io {
        path: path.to_owned(),
        source,
    }
}

/// Writes `project` as JSON through a temporary file in the target
/// directory, then renames it into place.
pub fn save_project(project: &Project, path: &Path) -> Result<(), WorkflowError> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut file = tempfile::NamedTempFile::new_in(dir).map_err(|e| io_error(path, e))?;
    serde_json::to_writer_pretty(&mut file, project).expect("project serializes");
    file.write_all(b"\n").map_err(|e| io_error(path, e))?;
    file.as_file().sync_all().map_err(|e| io_error(path, e))?;
    file.persist(path).map_err(|e| io_error(path, e.error))?;
    Ok(())
}

pub fn load_project(path: &Path) -> Result<Project, WorkflowError> {
    let text = std::fs::read_to_string(path).map_err(|e| io_error(path, e))?;
    project_from_json(&text)
}

/// Parses and validates a project document. The schema version is checked
/// before anything else; other failures name the first offending field.
pub fn project_from_json(text: &str) -> Result<Project, WorkflowError> {
    let value: serde_json::Value = serde_json::from_str(text).map_err(|e| WorkflowError::Corrupt {
        field: "<document>".into(),
        message: e.to_string(),
    })?;
    match value.get("schema_version") {
        None => {
            return Err(WorkflowError::Corrupt {
                field: "schema_version".into(),
                message: "missing".into(),
            })
        }
        Some(v) if v.as_u64() != Some(u64::from(SCHEMA_VERSION)) => {
            return Err(WorkflowError::SchemaVersion {
                found: v.to_string(),
            })
        }
        Some(_) => {}
    }
    let project: Project = serde_path_to_error::deserialize(value).map_err(|e| WorkflowError::Corrupt {
        field: e.path().to_string(),
        message: e.inner().to_string(),
    })?;
    project.validate()?;
    Ok(project)
}
