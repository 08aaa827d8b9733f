use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde::Serialize;
use serde_json::json;
use vsens_core::simulation::{ConfigError, SimulationError};

use crate::PlaybackState;

/// Failure of a session request; maps onto an HTTP status and a WebSocket
/// `error` message.
#[derive(Debug, Clone, thiserror::Error)]
pub enum ApiError {
    #[error("unknown session {0:?}")]
    UnknownSession(String),
    #[error("unknown sensor {0:?}")]
    UnknownSensor(String),
    #[error("cannot {action} while {state}")]
    InvalidState {
        action: &'static str,
        state: PlaybackState,
    },
    #[error("sensor id {0:?} already exists")]
    DuplicateSensor(String),
    #[error("recording is empty")]
    EmptyRecording,
    #[error("validation failed")]
    Validation(Vec<ConfigError>),
    #[error("{0}")]
    BadRequest(String),
    #[error("{0}")]
    Internal(String),
}

#[derive(Serialize)]
pub(crate) struct ErrorBody<'a> {
    pub code: &'a str,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub errors: Option<&'a [ConfigError]>,
}

impl ApiError {
    pub fn status(&self) -> StatusCode {
        match self {
            ApiError::UnknownSession(_) | ApiError::UnknownSensor(_) => StatusCode::NOT_FOUND,
            ApiError::InvalidState { .. }
            | ApiError::DuplicateSensor(_)
            | ApiError::EmptyRecording => StatusCode::CONFLICT,
            ApiError::Validation(_) | ApiError::BadRequest(_) => StatusCode::UNPROCESSABLE_ENTITY,
            ApiError::Internal(_) => StatusCode::INTERNAL_SERVER_ERROR,
        }
    }

    pub fn code(&self) -> &'static str {
        match self {
            ApiError::UnknownSession(_) => "unknown_session",
            ApiError::UnknownSensor(_) => "unknown_sensor",
            ApiError::InvalidState { .. } => "invalid_state",
            ApiError::DuplicateSensor(_) => "duplicate_id",
            ApiError::EmptyRecording => "empty_recording",
            ApiError::Validation(_) => "validation",
            ApiError::BadRequest(_) => "bad_request",
            ApiError::Internal(_) => "internal",
        }
    }

    pub(crate) fn body(&self) -> ErrorBody<'_> {
        ErrorBody {
            code: self.code(),
            message: self.to_string(),
            errors: match self {
                ApiError::Validation(e) => Some(e),
                _ => None,
            },
        }
    }
}

impl From<SimulationError> for ApiError {
    fn from(e: SimulationError) -> Self {
        match e {
            SimulationError::UnknownSensor(id) => ApiError::UnknownSensor(id),
            SimulationError::DuplicateSensor(id) => ApiError::DuplicateSensor(id),
            SimulationError::Config(errors) => ApiError::Validation(errors),
            SimulationError::SessionFinished => ApiError::InvalidState {
                action: "step",
                state: PlaybackState::Finished,
            },
            SimulationError::SeekOutOfRange { .. } | SimulationError::Sensor(_) => {
                ApiError::BadRequest(e.to_string())
            }
            other => ApiError::Internal(other.to_string()),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status(), Json(json!({ "error": self.body() }))).into_response()
    }
}
