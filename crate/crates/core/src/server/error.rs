use axum::extract::rejection::{PathRejection, QueryRejection};
use axum::extract::{FromRequest, FromRequestParts, Path, Query, Request};
use axum::http::request::Parts;
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use axum::body::Bytes;
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::corpus::CorpusError;
use crate::lda::LdaError;
use crate::topicsim::TopicSimError;
use crate::workflow::{ErrorClass, WorkflowError};

use super::store::StoreError;

/// Error body shared by every route: `{code, message, field}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, serde::Deserialize)]
pub struct ErrorBody {
    pub code: String,
    pub message: String,
    pub field: Option<String>,
}

#[derive(Debug)]
pub struct ApiError {
    pub status: StatusCode,
    pub body: ErrorBody,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &str, message: impl Into<String>, field: Option<&str>) -> Self {
        ApiError {
            status,
            body: ErrorBody {
                code: code.to_string(),
                message: message.into(),
                field: field.map(str::to_string),
            },
        }
    }

    pub fn not_found(what: &str, id: &str, field: &str) -> Self {
        Self::new(
            StatusCode::NOT_FOUND,
            &format!("unknown_{what}"),
            format!("no {what} with id {id:?}"),
            Some(field),
        )
    }

    pub fn bad_request(code: &str, message: impl Into<String>, field: Option<&str>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, code, message, field)
    }

    pub fn internal(message: impl Into<String>) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", message, None)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}

impl From<WorkflowError> for ApiError {
    fn from(e: WorkflowError) -> Self {
        let status = match e.class() {
            ErrorClass::Contract => StatusCode::BAD_REQUEST,
            ErrorClass::NotFound => StatusCode::NOT_FOUND,
            ErrorClass::Conflict => StatusCode::CONFLICT,
            ErrorClass::Corrupt => StatusCode::UNPROCESSABLE_ENTITY,
            ErrorClass::Io => StatusCode::INTERNAL_SERVER_ERROR,
        };
        ApiError {
            status,
            body: ErrorBody {
                code: e.code().to_string(),
                message: e.to_string(),
                field: e.field(),
            },
        }
    }
}

impl From<CorpusError> for ApiError {
    fn from(e: CorpusError) -> Self {
        let (code, field) = match &e {
            CorpusError::DuplicateDocId(_) => ("duplicate_doc_id", "documents"),
            CorpusError::InvalidConfig(_) => ("invalid_config", "config"),
            CorpusError::EmptyCorpus | CorpusError::AllDocumentsEmpty => ("empty_corpus", "documents"),
            _ => ("invalid_corpus", "documents"),
        };
        Self::bad_request(code, e.to_string(), Some(field))
    }
}

impl From<LdaError> for ApiError {
    fn from(e: LdaError) -> Self {
        match e {
            LdaError::TopicOutOfRange { .. } => {
                Self::new(StatusCode::NOT_FOUND, "unknown_topic", e.to_string(), Some("topic_id"))
            }
            _ => Self::bad_request("invalid_params", e.to_string(), Some("params")),
        }
    }
}

impl From<TopicSimError> for ApiError {
    fn from(e: TopicSimError) -> Self {
        let field = match e {
            TopicSimError::InvalidThreshold => "threshold",
            _ => "topics",
        };
        Self::bad_request("invalid_comparison", e.to_string(), Some(field))
    }
}

impl From<StoreError> for ApiError {
    fn from(e: StoreError) -> Self {
        Self::internal(e.to_string())
    }
}

/// JSON body extractor whose failures are 422 responses naming the field.
/// An empty body is read as `{}`.
pub struct ApiJson<T>(pub T);

impl<S, T> FromRequest<S> for ApiJson<T>
where
    S: Send + Sync,
    T: DeserializeOwned,
{
    type Rejection = ApiError;

    async fn from_request(req: Request, state: &S) -> Result<Self, Self::Rejection> {
        let bytes = Bytes::from_request(req, state)
            .await
            .map_err(|e| ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "malformed_payload", e.body_text(), None))?;
        let text: &[u8] = if bytes.iter().all(u8::is_ascii_whitespace) {
            b"{}"
        } else {
            &bytes
        };
        let mut de = serde_json::Deserializer::from_slice(text);
        let value = serde_path_to_error::deserialize(&mut de)
            .map_err(|e| {
                let path = e.path().to_string();
                let field = (path != ".").then_some(path);
                ApiError::new(
                    StatusCode::UNPROCESSABLE_ENTITY,
                    "malformed_payload",
                    e.inner().to_string(),
                    field.as_deref(),
                )
            })?;
        de.end().map_err(|e| {
            ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "malformed_payload", e.to_string(), None)
        })?;
        Ok(ApiJson(value))
    }
}

pub struct ApiQuery<T>(pub T);

impl<S, T> FromRequestParts<S> for ApiQuery<T>
where
    S: Send + Sync,
    T: DeserializeOwned,
{
    type Rejection = ApiError;

    async fn from_request_parts(parts: &mut Parts, state: &S) -> Result<Self, Self::Rejection> {
        Query::<T>::from_request_parts(parts, state)
            .await
            .map(|Query(v)| ApiQuery(v))
            .map_err(|e: QueryRejection| ApiError::bad_request("invalid_query", e.body_text(), None))
    }
}

pub struct ApiPath<T>(pub T);

impl<S, T> FromRequestParts<S> for ApiPath<T>
where
    S: Send + Sync,
    T: DeserializeOwned + Send,
{
    type Rejection = ApiError;

    async fn from_request_parts(parts: &mut Parts, state: &S) -> Result<Self, Self::Rejection> {
        Path::<T>::from_request_parts(parts, state)
            .await
            .map(|Path(v)| ApiPath(v))
            .map_err(|e: PathRejection| ApiError::bad_request("invalid_path", e.body_text(), None))
    }
}
