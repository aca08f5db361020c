//! HTTP surface.
//!
//! - `GET /resource/{encoded-iri}`: N-Triples document for the IRI, 404 if empty
//! - `POST /query`: query text in, tab-separated solutions out
//! - `GET /patients/{id}/risk`: latest risk score; `id` is an encoded IRI or a local name
//! - `GET /alarms`: one alarm per line from the latest monitor run
//! - `POST /monitor`: reloads the inputs, reruns the monitor, returns the JSON report
//!
//! Readers share an immutable snapshot; a monitor run swaps in a new one.

use std::sync::{Arc, RwLock};

use axum::body::Body;
use axum::extract::{Path, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::Router;
use tokio::net::TcpListener;

use super::{AppError, Config, MonitorReport, Pipeline};
use crate::graphstore::{serialize_triples, Dataset, Iri, QuadPattern, Term};
use crate::query::{evaluate_query_with, parse_query_with, render_tsv, EvalOptions, Prefixes};

#[derive(Debug)]
pub struct Snapshot {
    pub dataset: Dataset,
    pub report: Option<MonitorReport>,
}

#[derive(Debug)]
pub struct AppState {
    config: Config,
    prefixes: Prefixes,
    risk_score: Iri,
    snapshot: RwLock<Arc<Snapshot>>,
    monitor: tokio::sync::Mutex<()>,
}

impl AppState {
    /// Builds the initial snapshot; runs the monitor when a model is
    /// configured. Blocking: fetches may go over the network.
    pub fn start(pipeline: Pipeline) -> Result<AppState, AppError> {
        let snapshot = if pipeline.model.is_some() {
            let run = pipeline.run()?;
            Snapshot {
                dataset: run.dataset,
                report: Some(run.report),
            }
        } else {
            Snapshot {
                dataset: pipeline.store.clone(),
                report: None,
            }
        };
        Ok(AppState {
            prefixes: pipeline.prefixes(),
            risk_score: pipeline.vocab.term("riskScore"),
            config: pipeline.config,
            snapshot: RwLock::new(Arc::new(snapshot)),
            monitor: tokio::sync::Mutex::new(()),
        })
    }

    pub fn snapshot(&self) -> Arc<Snapshot> {
        self.snapshot.read().expect("snapshot lock poisoned").clone()
    }
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/resource/{iri}", get(resource))
        .route("/query", post(query))
        .route("/patients/{id}/risk", get(patient_risk))
        .route("/alarms", get(alarms))
        .route("/monitor", post(monitor))
        .with_state(state)
}

pub async fn serve(state: Arc<AppState>, listener: TcpListener) -> std::io::Result<()> {
    axum::serve(listener, router(state)).await
}

fn text(status: StatusCode, content_type: &'static str, body: String) -> Response {
    (status, [(header::CONTENT_TYPE, content_type)], Body::from(body)).into_response()
}

fn plain(status: StatusCode, body: impl Into<String>) -> Response {
    text(status, "text/plain; charset=utf-8", body.into())
}

async fn resource(State(st): State<Arc<AppState>>, Path(raw): Path<String>) -> Response {
    let iri = match Iri::new(&raw) {
        Ok(i) => i,
        Err(e) => return plain(StatusCode::BAD_REQUEST, format!("{e}\n")),
    };
    let snap = st.snapshot();
    let triples = snap.dataset.describe(&iri);
    if triples.is_empty() {
        return plain(StatusCode::NOT_FOUND, format!("no document for <{iri}>\n"));
    }
    text(StatusCode::OK, "application/n-triples", serialize_triples(&triples))
}

async fn query(State(st): State<Arc<AppState>>, body: String) -> Response {
    let q = match parse_query_with(&body, &st.prefixes) {
        Ok(q) => q,
        Err(e) => return plain(StatusCode::BAD_REQUEST, format!("{e}\n")),
    };
    let snap = st.snapshot();
    let opts = EvalOptions {
        union_default_graph: true,
    };
    match evaluate_query_with(&q, &snap.dataset, opts) {
        Ok(solutions) => text(
            StatusCode::OK,
            "text/tab-separated-values; charset=utf-8",
            render_tsv(&q, &solutions),
        ),
        Err(e) => plain(StatusCode::BAD_REQUEST, format!("{e}\n")),
    }
}

async fn patient_risk(State(st): State<Arc<AppState>>, Path(id): Path<String>) -> Response {
    let snap = st.snapshot();
    let scores = snap.dataset.match_quads(&QuadPattern {
        predicate: Some(st.risk_score.clone()),
        ..QuadPattern::any()
    });
    let wanted = |s: &str| s == id || s.ends_with(&format!("/{id}")) || s.ends_with(&format!("#{id}"));
    let found = scores
        .iter()
        .filter(|q| wanted(q.subject.as_str()))
        .filter_map(|q| match &q.object {
            Term::Literal(l) => Some(l.lexical().to_string()),
            Term::Iri(_) => None,
        })
        .max();
    match found {
        Some(v) => plain(StatusCode::OK, format!("{v}\n")),
        None => plain(StatusCode::NOT_FOUND, format!("no risk score for {id}\n")),
    }
}

async fn alarms(State(st): State<Arc<AppState>>) -> Response {
    let snap = st.snapshot();
    let mut out = String::new();
    if let Some(report) = &snap.report {
        for a in &report.alarms {
            out.push_str(&format!(
                "{}\t{}\t{}\t{}\t{}\n",
                a.patient, a.doctor, a.risk, a.threshold, a.sequence
            ));
        }
    }
    text(StatusCode::OK, "text/tab-separated-values; charset=utf-8", out)
}

async fn monitor(State(st): State<Arc<AppState>>) -> Response {
    let _guard = st.monitor.lock().await;
    let config = st.config.clone();
    let result = tokio::task::spawn_blocking(move || {
        let pipeline = Pipeline::load(config)?;
        pipeline.run()
    })
    .await;
    match result {
        Ok(Ok(run)) => {
            let body = run.report.to_json();
            *st.snapshot.write().expect("snapshot lock poisoned") = Arc::new(Snapshot {
                dataset: run.dataset,
                report: Some(run.report),
            });
            text(StatusCode::OK, "application/json", body)
        }
        Ok(Err(AppError::NoModel)) => plain(StatusCode::CONFLICT, "no model configured\n"),
        Ok(Err(e)) => plain(StatusCode::INTERNAL_SERVER_ERROR, format!("{e}\n")),
        Err(e) => plain(StatusCode::INTERNAL_SERVER_ERROR, format!("monitor task failed: {e}\n")),
    }
}
