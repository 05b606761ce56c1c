#![allow(dead_code)]

use std::path::Path;
use std::sync::Arc;

use rewardforge::core::envs::EnvId;
use rewardforge::core::learner::LearnerConfig;
use rewardforge::llm::{GoalPrompt, LlmClient, MockBackend, TranscriptEntry};
use rewardforge::pipeline::{self, FeedbackMode, PipelineError, RunConfig, RunContext, RunRecord};

pub const CARTPOLE_GOAL: &str =
    "Create a reward function for the CartPole environment that encourages keeping the pole upright for as long as possible.";

pub const SHAPED: &str = "return 1.0 - abs(pole_angle)/0.2095 - 0.5*(abs(cart_position)/2.4);";

pub fn fenced(program: &str) -> String {
    format!("Here is the reward.\n```rdsl\n{program}\n```\n")
}

pub fn entry(response: &str) -> TranscriptEntry {
    TranscriptEntry { expect_substring: None, response: response.into() }
}

pub fn expecting(substring: &str, response: &str) -> TranscriptEntry {
    TranscriptEntry { expect_substring: Some(substring.into()), response: response.into() }
}

pub fn mock(entries: Vec<TranscriptEntry>) -> Arc<MockBackend> {
    Arc::new(MockBackend::new(entries))
}

pub fn client(backend: &Arc<MockBackend>) -> LlmClient {
    LlmClient::new(Box::new(backend.clone()))
}

/// A small CartPole config that trains in well under a second per job.
pub fn small_config(n_candidates: u32, feedback: FeedbackMode, refinements: u32) -> RunConfig {
    let mut config = RunConfig::new(EnvId::CartPole, GoalPrompt::from_text(CARTPOLE_GOAL).unwrap());
    config.n_candidates = n_candidates;
    config.parallel_jobs = n_candidates;
    config.feedback_mode = feedback;
    config.max_refinement_iters = refinements;
    config.learner = LearnerConfig { training_episodes: 150, eval_episodes: 10, ..LearnerConfig::default() };
    config.seed = 7;
    config
}

pub fn run_with(
    config: &RunConfig,
    backend: &Arc<MockBackend>,
    runs_dir: &Path,
    run_id: &str,
) -> Result<RunRecord, PipelineError> {
    let mut ctx = RunContext::new(client(backend), runs_dir);
    ctx.run_id = Some(run_id.to_string());
    pipeline::run(config, &ctx)
}

/// The record as JSON with run id, timestamps and wall times removed.
pub fn normalized(record: &RunRecord) -> serde_json::Value {
    let mut value = serde_json::to_value(record).unwrap();
    value["run_id"] = serde_json::Value::Null;
    value["created_at"] = serde_json::Value::Null;
    if let Some(report) = value["baseline"].get_mut("train_report") {
        report["wall_time_ms"] = serde_json::Value::Null;
    }
    for c in value["candidates"].as_array_mut().unwrap() {
        if let Some(report) = c.get_mut("train_report").filter(|r| !r.is_null()) {
            report["wall_time_ms"] = serde_json::Value::Null;
        }
    }
    for e in value["feedback"].as_array_mut().unwrap() {
        e["timestamp"] = serde_json::Value::Null;
    }
    value
}

/// Starts a human-feedback run on one "return 0.0;" candidate in a thread.
/// The run waits for feedback through `feedback.json`, then refines once.
pub fn spawn_human_run(
    runs_dir: &Path,
    run_id: &str,
    feedback_text: &str,
) -> (Arc<MockBackend>, std::thread::JoinHandle<Result<RunRecord, PipelineError>>) {
    let backend = mock(vec![
        entry("1. keep the pole upright"),
        entry(&fenced("return 0.0;")),
        expecting(feedback_text, "penalise the pole angle"),
        entry(&fenced(SHAPED)),
    ]);
    let mut config = small_config(1, FeedbackMode::Human, 1);
    config.acceptance.threshold = Some(0.5);
    config.feedback_timeout_secs = 60;
    let mut ctx = RunContext::new(client(&backend), runs_dir);
    ctx.human = Some(Box::new(rewardforge::pipeline::FileChannel::new(runs_dir)));
    ctx.run_id = Some(run_id.to_string());
    let handle = std::thread::spawn(move || pipeline::run(&config, &ctx));
    (backend, handle)
}

/// Polls `GET /api/runs/{id}` until the status matches or 60 s pass.
pub fn wait_for_status(base: &str, run_id: &str, status: &str) -> serde_json::Value {
    let deadline = std::time::Instant::now() + std::time::Duration::from_secs(60);
    loop {
        if let Ok(response) = ureq::get(&format!("{base}/api/runs/{run_id}")).call() {
            let value: serde_json::Value = response.into_json().unwrap();
            if value["status"] == status {
                return value;
            }
        }
        assert!(std::time::Instant::now() < deadline, "run {run_id} never reached {status}");
        std::thread::sleep(std::time::Duration::from_millis(50));
    }
}

/// Reads the first SSE event block (after the response head) from `/api/events`.
pub fn first_sse_event(base_addr: std::net::SocketAddr) -> (String, String) {
    use std::io::{Read, Write};
    let mut stream = std::net::TcpStream::connect(base_addr).unwrap();
    stream.set_read_timeout(Some(std::time::Duration::from_secs(10))).unwrap();
    write!(stream, "GET /api/events HTTP/1.1\r\nHost: localhost\r\nAccept: text/event-stream\r\n\r\n").unwrap();
    let mut received = Vec::new();
    let mut buf = [0u8; 1024];
    loop {
        let n = stream.read(&mut buf).unwrap();
        assert!(n > 0, "stream closed early");
        received.extend_from_slice(&buf[..n]);
        let text = String::from_utf8_lossy(&received).to_string();
        if let Some((head, body)) = text.split_once("\r\n\r\n") {
            if let Some((event, _)) = body.split_once("\n\n") {
                return (head.to_string(), event.to_string());
            }
        }
    }
}
