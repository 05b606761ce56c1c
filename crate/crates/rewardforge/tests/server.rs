mod common;

use common::*;
use rewardforge::pipeline::{load_run, FeedbackMode, RunRecord};
use rewardforge::server::{self, ServeConfig, TrajectoryResponse};

fn get(url: &str) -> (u16, serde_json::Value) {
    match ureq::get(url).call() {
        Ok(r) => (r.status(), r.into_json().unwrap()),
        Err(ureq::Error::Status(code, r)) => (code, r.into_json().unwrap()),
        Err(e) => panic!("{e}"),
    }
}

fn post(url: &str, body: &str) -> (u16, serde_json::Value) {
    match ureq::post(url).set("Content-Type", "application/json").send_string(body) {
        Ok(r) => (r.status(), r.into_json().unwrap()),
        Err(ureq::Error::Status(code, r)) => (code, r.into_json().unwrap()),
        Err(e) => panic!("{e}"),
    }
}

fn finished_run(dir: &std::path::Path) -> RunRecord {
    let backend = mock(vec![entry("s"), entry(&fenced(SHAPED))]);
    run_with(&small_config(1, FeedbackMode::None, 0), &backend, dir, "r1").unwrap()
}

#[test]
fn read_endpoints_match_persisted_run() {
    let dir = tempfile::tempdir().unwrap();
    let record = finished_run(dir.path());
    let handle = server::start("127.0.0.1:0", ServeConfig::new(dir.path())).unwrap();
    let base = handle.url();

    let (status, runs) = get(&format!("{base}/api/runs"));
    assert_eq!(status, 200);
    assert_eq!(runs.as_array().unwrap().len(), 1);
    assert_eq!(runs[0]["run_id"], "r1");
    assert_eq!(runs[0]["status"], "done");

    let (status, run) = get(&format!("{base}/api/runs/r1"));
    assert_eq!(status, 200);
    let served: RunRecord = serde_json::from_value(run).unwrap();
    assert_eq!(served, load_run(dir.path(), "r1").unwrap());
    assert_eq!(served, record);

    let (status, traj) = get(&format!("{base}/api/runs/r1/candidates/0/trajectories/0"));
    assert_eq!(status, 200);
    let traj: TrajectoryResponse = serde_json::from_value(traj).unwrap();
    assert_eq!(traj.scenes.len(), traj.log.steps.len());
    assert!(!traj.scenes.is_empty());

    for path in ["/api/runs/missing", "/api/runs/r1/candidates/9/trajectories/0", "/api/runs/r1/candidates/0/trajectories/999", "/api/nothing"] {
        let (status, body) = get(&format!("{base}{path}"));
        assert_eq!(status, 404, "{path}");
        assert_eq!(body["code"], "NOT_FOUND", "{path}");
        assert!(body["message"].is_string());
    }
    handle.shutdown();
}

#[test]
fn feedback_on_idle_run_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    finished_run(dir.path());
    let handle = server::start("127.0.0.1:0", ServeConfig::new(dir.path())).unwrap();
    let url = format!("{}/api/runs/r1/candidates/0/feedback", handle.url());
    let (status, body) = post(&url, r#"{"text": "push harder", "verdict": "revise"}"#);
    assert_eq!((status, body["code"].as_str()), (409, Some("NOT_AWAITING_FEEDBACK")));
    let (status, body) = post(&url, r#"{"text": "  ", "verdict": "revise"}"#);
    assert_eq!((status, body["code"].as_str()), (400, Some("EMPTY_FEEDBACK")));
    let (status, body) = post(&url, "not json");
    assert_eq!((status, body["code"].as_str()), (400, Some("BAD_REQUEST")));
    let (status, _) = post(&format!("{}/api/runs/r1/candidates/5/feedback", handle.url()), r#"{"verdict": "accept"}"#);
    assert_eq!(status, 404);
    handle.shutdown();
}

#[test]
fn human_feedback_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let handle = server::start("127.0.0.1:0", ServeConfig::new(dir.path())).unwrap();
    let base = handle.url();
    let text = "the cart drifts off the right edge";
    let (backend, run) = spawn_human_run(dir.path(), "h1", text);

    let waiting = wait_for_status(&base, "h1", "awaiting_feedback");
    assert_eq!(waiting["awaiting_candidate"], 0);
    let (head, event) = first_sse_event(handle.addr());
    assert!(head.contains("text/event-stream"), "{head}");
    assert!(event.starts_with("event: status\ndata: "), "{event}");
    let data: serde_json::Value = serde_json::from_str(event.split_once("data: ").unwrap().1).unwrap();
    assert_eq!(data["run_id"], "h1");
    assert_eq!(data["status"], "awaiting_feedback");

    let url = format!("{base}/api/runs/h1/candidates/0/feedback");
    let (status, body) = post(&url, &serde_json::json!({"text": text, "verdict": "revise"}).to_string());
    assert_eq!(status, 200, "{body}");
    assert_eq!(body["status"], "recorded");

    let record = run.join().unwrap().unwrap();
    assert_eq!(backend.remaining(), 0);
    assert_eq!(record.candidates.len(), 2);
    assert_eq!(record.candidates[1].parent, Some(0));
    assert_eq!(record.feedback[0].text, text);
    let (status, _) = post(&url, &serde_json::json!({"text": text, "verdict": "revise"}).to_string());
    assert_eq!(status, 409);
    handle.shutdown();
}

#[test]
fn static_files_and_placeholder() {
    let dir = tempfile::tempdir().unwrap();
    let handle = server::start("127.0.0.1:0", ServeConfig::new(dir.path())).unwrap();
    let page = ureq::get(&handle.url()).call().unwrap();
    assert!(page.content_type().starts_with("text/html"));
    assert!(page.into_string().unwrap().contains("/api/runs"));
    handle.shutdown();

    let web = tempfile::tempdir().unwrap();
    std::fs::write(web.path().join("index.html"), "<h1>console</h1>").unwrap();
    std::fs::create_dir(web.path().join("assets")).unwrap();
    std::fs::write(web.path().join("assets/app.js"), "console.log(1)").unwrap();
    let config = ServeConfig { static_dir: Some(web.path().to_path_buf()), ..ServeConfig::new(dir.path()) };
    let handle = server::start("127.0.0.1:0", config).unwrap();
    let base = handle.url();
    assert_eq!(ureq::get(&base).call().unwrap().into_string().unwrap(), "<h1>console</h1>");
    let js = ureq::get(&format!("{base}/assets/app.js")).call().unwrap();
    assert_eq!(js.content_type(), "text/javascript");
    assert_eq!(get(&format!("{base}/assets/missing.js")).0, 404);
    assert_eq!(get(&format!("{base}/../Cargo.toml")).0, 404);
    handle.shutdown();
}
