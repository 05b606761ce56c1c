//! HTTP/JSON API over the runs directory, server-sent status events and
//! static hosting of the feedback console.

use std::collections::HashMap;
use std::io::Write;
use std::net::SocketAddr;
use std::path::{Component, Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::thread::JoinHandle;
use std::time::{Duration, Instant};

use rewardforge_core::envs::{render_state, Scene};
use serde::{Deserialize, Serialize};
use tiny_http::{Header, Method, Request, Response, Server};

use crate::pipeline::persist::{self, TrajectoryFile};
use crate::pipeline::{FeedbackEvent, HumanVerdict, PipelineError, RunStatus};

/// Body of every non-2xx response.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApiError {
    pub status: u16,
    pub code: String,
    pub message: String,
}

impl ApiError {
    pub fn new(status: u16, code: &str, message: impl Into<String>) -> Self {
        Self { status, code: code.into(), message: message.into() }
    }

    fn not_found(message: impl Into<String>) -> Self {
        Self::new(404, "NOT_FOUND", message)
    }
}

impl From<PipelineError> for ApiError {
    fn from(e: PipelineError) -> Self {
        match e {
            PipelineError::NotFound(m) => ApiError::not_found(m),
            e => ApiError::new(500, e.code(), e.to_string()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub run_id: String,
    pub created_at: String,
    pub env: rewardforge_core::envs::EnvId,
    pub status: RunStatus,
    pub awaiting_candidate: Option<u32>,
    pub candidates: usize,
    pub best_candidate: Option<u32>,
    pub best_success_rate: Option<f64>,
    pub baseline_success_rate: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryResponse {
    pub run_id: String,
    pub candidate: u32,
    pub episode: u32,
    pub log: TrajectoryFile,
    /// One scene per step, in step order.
    pub scenes: Vec<Scene>,
}

#[derive(Debug, Clone, Deserialize)]
struct FeedbackBody {
    #[serde(default)]
    text: String,
    verdict: HumanVerdict,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FeedbackAccepted {
    pub status: String,
    pub event: FeedbackEvent,
}

#[derive(Debug, Clone)]
pub struct ServeConfig {
    pub runs_dir: PathBuf,
    /// Console build output; a placeholder page is served when absent.
    pub static_dir: Option<PathBuf>,
    pub event_poll: Duration,
}

impl ServeConfig {
    pub fn new(runs_dir: impl Into<PathBuf>) -> Self {
        Self { runs_dir: runs_dir.into(), static_dir: None, event_poll: Duration::from_millis(200) }
    }
}

pub struct ServerHandle {
    server: Arc<Server>,
    addr: SocketAddr,
    stop: Arc<AtomicBool>,
    thread: Option<JoinHandle<()>>,
}

impl ServerHandle {
    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn url(&self) -> String {
        format!("http://{}", self.addr)
    }

    /// Blocks until the server stops.
    pub fn wait(mut self) {
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }

    pub fn shutdown(mut self) {
        self.stop.store(true, Ordering::SeqCst);
        self.server.unblock();
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }
}

/// Binds `addr` (port 0 picks a free port) and serves on a background thread.
pub fn start(addr: &str, config: ServeConfig) -> Result<ServerHandle, String> {
    let server = Arc::new(Server::http(addr).map_err(|e| format!("cannot bind {addr}: {e}"))?);
    let bound = server.server_addr().to_ip().ok_or("server is not bound to an IP address")?;
    let stop = Arc::new(AtomicBool::new(false));
    let config = Arc::new(config);
    let thread = {
        let (server, stop) = (server.clone(), stop.clone());
        std::thread::spawn(move || {
            for request in server.incoming_requests() {
                if stop.load(Ordering::SeqCst) {
                    break;
                }
                let (config, stop) = (config.clone(), stop.clone());
                std::thread::spawn(move || handle(request, &config, &stop));
            }
        })
    };
    Ok(ServerHandle { server, addr: bound, stop, thread: Some(thread) })
}

fn header(name: &str, value: &str) -> Header {
    Header::from_bytes(name.as_bytes(), value.as_bytes()).expect("valid header")
}

fn json_response<T: Serialize>(status: u16, value: &T) -> Response<std::io::Cursor<Vec<u8>>> {
    let body = serde_json::to_vec(value).expect("serializable response");
    Response::from_data(body).with_status_code(status).with_header(header("Content-Type", "application/json"))
}

fn respond_result<T: Serialize>(request: Request, result: Result<T, ApiError>) {
    let _ = match result {
        Ok(value) => request.respond(json_response(200, &value)),
        Err(e) => request.respond(json_response(e.status, &e)),
    };
}

fn handle(mut request: Request, config: &ServeConfig, stop: &AtomicBool) {
    let url = request.url().to_string();
    let path = url.split(['?', '#']).next().unwrap_or("/").to_string();
    let segments: Vec<&str> = path.split('/').filter(|s| !s.is_empty()).collect();
    let method = request.method().clone();
    match (&method, segments.as_slice()) {
        (Method::Get, ["api", "runs"]) => respond_result(request, list_runs(&config.runs_dir)),
        (Method::Get, ["api", "runs", id]) => {
            let result = persist::load_run(&config.runs_dir, id).map_err(ApiError::from);
            respond_result(request, result)
        }
        (Method::Get, ["api", "runs", id, "candidates", k, "trajectories", ep]) => {
            let result = trajectory(&config.runs_dir, id, k, ep);
            respond_result(request, result)
        }
        (Method::Post, ["api", "runs", id, "candidates", k, "feedback"]) => {
            let mut body = String::new();
            let result = match request.as_reader().read_to_string(&mut body) {
                Ok(_) => post_feedback(&config.runs_dir, id, k, &body),
                Err(e) => Err(ApiError::new(400, "BAD_REQUEST", e.to_string())),
            };
            respond_result(request, result)
        }
        (Method::Get, ["api", "events"]) => event_stream(request, config, stop),
        (Method::Get, ["api", ..]) => respond_result::<()>(request, Err(ApiError::not_found(format!("no endpoint {path}")))),
        (Method::Get | Method::Head, _) => serve_static(request, config.static_dir.as_deref(), &path),
        _ => respond_result::<()>(
            request,
            Err(ApiError::new(405, "METHOD_NOT_ALLOWED", format!("{method} {path} is not supported"))),
        ),
    }
}

fn list_runs(runs_dir: &Path) -> Result<Vec<RunSummary>, ApiError> {
    let mut out = Vec::new();
    for id in persist::list_runs(runs_dir)? {
        let Ok(record) = persist::load_run(runs_dir, &id) else { continue };
        out.push(RunSummary {
            run_id: record.run_id.clone(),
            created_at: record.created_at.clone(),
            env: record.config.env,
            status: record.status,
            awaiting_candidate: record.awaiting_candidate,
            candidates: record.candidates.len(),
            best_candidate: record.best_candidate,
            best_success_rate: record.best().and_then(|c| c.success_rate()),
            baseline_success_rate: record.baseline.as_ref().map(|b| b.evaluation.success_rate),
        });
    }
    Ok(out)
}

fn parse_index(text: &str, what: &str) -> Result<u32, ApiError> {
    text.parse().map_err(|_| ApiError::not_found(format!("{what} `{text}`")))
}

fn trajectory(runs_dir: &Path, run_id: &str, k: &str, ep: &str) -> Result<TrajectoryResponse, ApiError> {
    let manifest = persist::read_manifest(runs_dir, run_id)?;
    let candidate = parse_index(k, "candidate")?;
    if !manifest.candidates.iter().any(|c| c.id == candidate) {
        return Err(ApiError::not_found(format!("candidate {candidate} of run {run_id}")));
    }
    let episode = parse_index(ep, "episode")?;
    let log = persist::read_trajectory(runs_dir, run_id, candidate, episode)?;
    let env = manifest.config.env;
    let scenes = log.to_log(env)?.steps.iter().map(|s| render_state(env, &s.observation)).collect();
    Ok(TrajectoryResponse { run_id: run_id.to_string(), candidate, episode, log, scenes })
}

/// Records human feedback for the candidate a run is waiting on.
pub fn post_feedback(runs_dir: &Path, run_id: &str, k: &str, body: &str) -> Result<FeedbackAccepted, ApiError> {
    let manifest = persist::read_manifest(runs_dir, run_id)?;
    let candidate = parse_index(k, "candidate")?;
    if !manifest.candidates.iter().any(|c| c.id == candidate) {
        return Err(ApiError::not_found(format!("candidate {candidate} of run {run_id}")));
    }
    let body: FeedbackBody =
        serde_json::from_str(body).map_err(|e| ApiError::new(400, "BAD_REQUEST", format!("invalid feedback body: {e}")))?;
    let event =
        FeedbackEvent::human(candidate, &body.text, body.verdict).map_err(|m| ApiError::new(400, "EMPTY_FEEDBACK", m))?;

    let _gate = persist::feedback_gate();
    let manifest = persist::read_manifest(runs_dir, run_id)?;
    if manifest.status != RunStatus::AwaitingFeedback || manifest.awaiting_candidate != Some(candidate) {
        let waiting = match manifest.awaiting_candidate {
            Some(c) if manifest.status == RunStatus::AwaitingFeedback => format!("it is awaiting feedback on candidate {c}"),
            _ => format!("its status is {:?}", manifest.status),
        };
        return Err(ApiError::new(
            409,
            "NOT_AWAITING_FEEDBACK",
            format!("run {run_id} is not awaiting feedback on candidate {candidate}; {waiting}"),
        ));
    }
    let mut events = persist::read_feedback(runs_dir, run_id)?;
    events.push(event.clone());
    persist::write_feedback(runs_dir, run_id, &events)?;
    Ok(FeedbackAccepted { status: "recorded".into(), event })
}

fn event_stream(request: Request, config: &ServeConfig, stop: &AtomicBool) {
    let mut writer = request.into_writer();
    let head = "HTTP/1.1 200 OK\r\nContent-Type: text/event-stream\r\nCache-Control: no-cache\r\nConnection: close\r\n\r\n";
    if writer.write_all(head.as_bytes()).and_then(|_| writer.flush()).is_err() {
        return;
    }
    let mut last: HashMap<String, (RunStatus, Option<u32>)> = HashMap::new();
    let mut last_write = Instant::now();
    while !stop.load(Ordering::SeqCst) {
        let mut out = String::new();
        for id in persist::list_runs(&config.runs_dir).unwrap_or_default() {
            let Ok(m) = persist::read_manifest(&config.runs_dir, &id) else { continue };
            let state = (m.status, m.awaiting_candidate);
            if last.get(&id) != Some(&state) {
                let data = serde_json::json!({ "run_id": id, "status": m.status, "awaiting_candidate": m.awaiting_candidate });
                out.push_str(&format!("event: status\ndata: {data}\n\n"));
                last.insert(id, state);
            }
        }
        if out.is_empty() && last_write.elapsed() > Duration::from_secs(15) {
            out.push_str(": keep-alive\n\n");
        }
        if !out.is_empty() {
            if writer.write_all(out.as_bytes()).and_then(|_| writer.flush()).is_err() {
                return;
            }
            last_write = Instant::now();
        }
        std::thread::sleep(config.event_poll);
    }
}

const PLACEHOLDER_PAGE: &str = "<!doctype html>\n<html><head><meta charset=\"utf-8\"><title>rewardforge</title></head>\n<body><h1>rewardforge</h1><p>The feedback console is not built. The API is served under <a href=\"/api/runs\">/api/runs</a>.</p></body></html>\n";

fn content_type(path: &Path) -> &'static str {
    match path.extension().and_then(|e| e.to_str()) {
        Some("html") => "text/html; charset=utf-8",
        Some("js" | "mjs") => "text/javascript",
        Some("css") => "text/css",
        Some("json") => "application/json",
        Some("svg") => "image/svg+xml",
        Some("png") => "image/png",
        Some("ico") => "image/x-icon",
        Some("woff2") => "font/woff2",
        _ => "application/octet-stream",
    }
}

fn serve_static(request: Request, static_dir: Option<&Path>, path: &str) {
    let relative = path.trim_start_matches('/');
    let relative = if relative.is_empty() { "index.html" } else { relative };
    let safe = Path::new(relative).components().all(|c| matches!(c, Component::Normal(_)));
    let file = static_dir.filter(|_| safe).map(|d| d.join(relative)).filter(|p| p.is_file());
    let _ = match file {
        Some(file) => match std::fs::read(&file) {
            Ok(bytes) => request.respond(Response::from_data(bytes).with_header(header("Content-Type", content_type(&file)))),
            Err(e) => request.respond(json_response(500, &ApiError::new(500, "IO_ERROR", e.to_string()))),
        },
        None if relative == "index.html" => {
            request.respond(Response::from_string(PLACEHOLDER_PAGE).with_header(header("Content-Type", "text/html; charset=utf-8")))
        }
        None => request.respond(json_response(404, &ApiError::not_found(format!("no file {path}")))),
    };
}
