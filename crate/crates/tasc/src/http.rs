use std::convert::Infallible;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::sse::{Event, KeepAlive, Sse};
use axum::response::{IntoResponse, Response};
use axum::routing::{delete, get, post};
use axum::{Json, Router};
use futures::Stream;
use serde::de::DeserializeOwned;
use tasc_core::session::UserAction;
use tokio::sync::broadcast::error::RecvError;

use crate::engine::{Engine, EngineError};
use crate::envelope::{Created, CreateSession, ErrorBody};

impl IntoResponse for EngineError {
    fn into_response(self) -> Response {
        let status = match &self {
            EngineError::UnknownSession(_) | EngineError::UnknownScenario(_) => StatusCode::NOT_FOUND,
            EngineError::BadRequest(_) => StatusCode::BAD_REQUEST,
            EngineError::Internal(_) => StatusCode::INTERNAL_SERVER_ERROR,
        };
        (status, Json(ErrorBody { error: self.to_string() })).into_response()
    }
}

fn body<T: DeserializeOwned>(bytes: &Bytes) -> Result<T, EngineError> {
    serde_json::from_slice(bytes).map_err(|e| EngineError::BadRequest(format!("malformed body: {e}")))
}

async fn create(State(engine): State<Arc<Engine>>, bytes: Bytes) -> Result<(StatusCode, Json<Created>), EngineError> {
    let req: CreateSession = body(&bytes)?;
    let state = engine.create(&req.scenario).await?;
    Ok((StatusCode::CREATED, Json(Created { session_id: state.session_id.clone(), state })))
}

async fn state(State(engine): State<Arc<Engine>>, Path(id): Path<String>) -> Result<impl IntoResponse, EngineError> {
    Ok(Json(engine.state(&id).await?))
}

async fn act(State(engine): State<Arc<Engine>>, Path(id): Path<String>, bytes: Bytes) -> Result<impl IntoResponse, EngineError> {
    // Unknown sessions are a 404 even when the body is also bad.
    engine.state(&id).await?;
    let action: UserAction = body(&bytes)?;
    Ok(Json(engine.act(&id, action).await?))
}

async fn solution(State(engine): State<Arc<Engine>>, Path(id): Path<String>) -> Result<impl IntoResponse, EngineError> {
    Ok(Json(engine.solution(&id).await?))
}

async fn events(
    State(engine): State<Arc<Engine>>,
    Path(id): Path<String>,
) -> Result<Sse<impl Stream<Item = Result<Event, Infallible>>>, EngineError> {
    let rx = engine.subscribe(&id).await?;
    let stream = futures::stream::unfold(rx, |mut rx| async move {
        loop {
            match rx.recv().await {
                Ok(env) => {
                    let data = serde_json::to_string(&*env).expect("envelopes serialize");
                    let event = Event::default().event("envelope").id(env.revision.to_string()).data(data);
                    return Some((Ok(event), rx));
                }
                // A slow reader skips ahead; clients resync from /state.
                Err(RecvError::Lagged(_)) => continue,
                Err(RecvError::Closed) => return None,
            }
        }
    });
    Ok(Sse::new(stream).keep_alive(KeepAlive::default()))
}

async fn remove(State(engine): State<Arc<Engine>>, Path(id): Path<String>) -> Result<StatusCode, EngineError> {
    engine.delete(&id).await?;
    Ok(StatusCode::NO_CONTENT)
}

pub fn router(engine: Arc<Engine>) -> Router {
    Router::new()
        .route("/sessions", post(create))
        .route("/sessions/{id}", delete(remove))
        .route("/sessions/{id}/state", get(state))
        .route("/sessions/{id}/actions", post(act))
        .route("/sessions/{id}/solution", get(solution))
        .route("/sessions/{id}/events", get(events))
        .with_state(engine)
}
