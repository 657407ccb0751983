use axum::extract::rejection::{BytesRejection, JsonRejection, PathRejection, QueryRejection};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use medley_core::dataset::DatasetError;
use medley_core::emitter::EmitError;
use medley_core::interactions::InteractionError;
use medley_core::session::SessionError;
use serde::Serialize;

/// Error body returned by every endpoint. Each module error maps to exactly
/// one code, and each code to one status.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ApiError {
    pub code: &'static str,
    pub message: String,
    pub http_status: u16,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        ApiError {
            code,
            message: message.into(),
            http_status: status.as_u16(),
        }
    }

    pub fn status(&self) -> StatusCode {
        StatusCode::from_u16(self.http_status).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR)
    }

    pub fn unknown_dataset(id: &str) -> Self {
        Self::new(StatusCode::NOT_FOUND, "UnknownDataset", format!("unknown dataset `{id}`"))
    }

    pub fn unknown_session(id: &str) -> Self {
        Self::new(StatusCode::NOT_FOUND, "UnknownSession", format!("unknown session `{id}`"))
    }

    pub fn unknown_collection(code: &str) -> Self {
        Self::new(
            StatusCode::NOT_FOUND,
            "UnknownCollection",
            format!("collection `{code}` is not among the current recommendations"),
        )
    }

    pub fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "BadRequest", message)
    }

    pub fn invalid_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::UNPROCESSABLE_ENTITY, "InvalidRequest", message)
    }

    pub fn too_large(message: impl Into<String>) -> Self {
        Self::new(StatusCode::PAYLOAD_TOO_LARGE, "PayloadTooLarge", message)
    }

    pub fn internal(message: impl Into<String>) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, "Internal", message)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status(), Json(self)).into_response()
    }
}

impl From<SessionError> for ApiError {
    fn from(e: SessionError) -> Self {
        let message = e.to_string();
        match e {
            SessionError::UnknownElement(_) => Self::new(StatusCode::NOT_FOUND, "UnknownElement", message),
            SessionError::DuplicateId(_) => Self::new(StatusCode::CONFLICT, "DuplicateId", message),
            SessionError::UnknownAttribute(_) => {
                Self::new(StatusCode::UNPROCESSABLE_ENTITY, "UnknownAttribute", message)
            }
            SessionError::InvalidElement(_) => Self::new(StatusCode::UNPROCESSABLE_ENTITY, "InvalidElement", message),
            SessionError::InvalidGeometry(_) => {
                Self::new(StatusCode::UNPROCESSABLE_ENTITY, "InvalidGeometry", message)
            }
            SessionError::Interaction(e) => e.into(),
            SessionError::Log(_) => Self::new(StatusCode::INTERNAL_SERVER_ERROR, "SessionLog", message),
        }
    }
}

impl From<InteractionError> for ApiError {
    fn from(e: InteractionError) -> Self {
        let message = e.to_string();
        match e {
            InteractionError::SelfLink(_) => Self::new(StatusCode::UNPROCESSABLE_ENTITY, "SelfLink", message),
            InteractionError::UnknownElement(_) => Self::new(StatusCode::NOT_FOUND, "UnknownElement", message),
            InteractionError::UnknownSource(_) => Self::new(StatusCode::NOT_FOUND, "UnknownSource", message),
            InteractionError::ModeNotAllowed { .. } => Self::new(StatusCode::CONFLICT, "ModeNotAllowed", message),
            InteractionError::InvalidSelection(_) => {
                Self::new(StatusCode::UNPROCESSABLE_ENTITY, "InvalidSelection", message)
            }
        }
    }
}

impl From<DatasetError> for ApiError {
    fn from(e: DatasetError) -> Self {
        let message = e.to_string();
        match e {
            DatasetError::EmptyInput
            | DatasetError::InvalidUtf8 { .. }
            | DatasetError::RaggedRows { .. }
            | DatasetError::DuplicateColumnName(_)
            | DatasetError::Malformed(_) => Self::new(StatusCode::BAD_REQUEST, "InvalidCsv", message),
            DatasetError::UnknownAttribute(_) => {
                Self::new(StatusCode::UNPROCESSABLE_ENTITY, "UnknownAttribute", message)
            }
            DatasetError::TypeMismatch(_) | DatasetError::SingleYearDataset(_) | DatasetError::YearOutOfRange { .. } => {
                Self::new(StatusCode::UNPROCESSABLE_ENTITY, "InvalidQuery", message)
            }
        }
    }
}

impl From<EmitError> for ApiError {
    fn from(e: EmitError) -> Self {
        let message = e.to_string();
        match e {
            EmitError::EmptyCanvas => Self::new(StatusCode::CONFLICT, "EmptyCanvas", message),
            EmitError::UnsupportedChartKind { .. } => {
                Self::new(StatusCode::UNPROCESSABLE_ENTITY, "UnsupportedChartKind", message)
            }
            EmitError::InvalidView(_) => Self::new(StatusCode::UNPROCESSABLE_ENTITY, "InvalidView", message),
            EmitError::Dataset(e) => e.into(),
            EmitError::Parse(_) => Self::new(StatusCode::BAD_REQUEST, "InvalidDocument", message),
        }
    }
}

impl From<JsonRejection> for ApiError {
    fn from(r: JsonRejection) -> Self {
        match r {
            JsonRejection::JsonDataError(e) => Self::invalid_request(e.body_text()),
            JsonRejection::BytesRejection(e) => e.into(),
            other => Self::bad_request(other.body_text()),
        }
    }
}

impl From<BytesRejection> for ApiError {
    fn from(r: BytesRejection) -> Self {
        if r.status() == StatusCode::PAYLOAD_TOO_LARGE {
            Self::too_large(r.body_text())
        } else {
            Self::bad_request(r.body_text())
        }
    }
}

impl From<QueryRejection> for ApiError {
    fn from(r: QueryRejection) -> Self {
        Self::bad_request(r.body_text())
    }
}

impl From<PathRejection> for ApiError {
    fn from(r: PathRejection) -> Self {
        Self::bad_request(r.body_text())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use medley_core::canvas::LinkMode;

    #[test]
    fn module_errors_map_to_codes_and_statuses() {
        let cases: Vec<(ApiError, &str, u16)> = vec![
            (SessionError::UnknownElement("x".into()).into(), "UnknownElement", 404),
            (SessionError::DuplicateId("x".into()).into(), "DuplicateId", 409),
            (SessionError::UnknownAttribute("x".into()).into(), "UnknownAttribute", 422),
            (
                InteractionError::ModeNotAllowed { from: "a".into(), to: "b".into(), mode: LinkMode::Highlight }.into(),
                "ModeNotAllowed",
                409,
            ),
            (InteractionError::SelfLink("a".into()).into(), "SelfLink", 422),
            (EmitError::EmptyCanvas.into(), "EmptyCanvas", 409),
            (DatasetError::EmptyInput.into(), "InvalidCsv", 400),
        ];
        for (e, code, status) in cases {
            assert_eq!((e.code, e.http_status), (code, status));
        }
    }
}
