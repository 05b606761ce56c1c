//! Run directory layout:
//!
//! ```text
//! <runs_dir>/<run_id>/run.json
//!                    /feedback.json
//!                    /baseline/train_report.json
//!                    /candidate_<k>/prompt_stepback.txt
//!                                  /request_history.json
//!                                  /reward.rdsl
//!                                  /diagnostics.json
//!                                  /train_report.json
//!                                  /eval.json
//!                                  /trajectories/ep_<i>.json
//! ```

use std::path::{Path, PathBuf};
use std::sync::{Mutex, MutexGuard};

use rewardforge_core::dsl::Diagnostic;
use rewardforge_core::envs::{EnvId, TerminationCause, TrajectoryLog, TrajectoryStep};
use rewardforge_core::learner::TrainingReport;
use serde::{de::DeserializeOwned, Deserialize, Serialize};

use super::types::*;

static GATE: Mutex<()> = Mutex::new(());

/// Serializes status and feedback updates between the pipeline and the
/// server within one process.
pub fn feedback_gate() -> MutexGuard<'static, ()> {
    GATE.lock().unwrap_or_else(|e| e.into_inner())
}

pub fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    std::fs::write(&tmp, bytes)?;
    std::fs::rename(&tmp, path)
}

fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<(), PipelineError> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    Ok(write_atomic(path, &bytes)?)
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, PipelineError> {
    let bytes = std::fs::read(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => PipelineError::NotFound(path.display().to_string()),
        _ => PipelineError::Io(format!("{}: {e}", path.display())),
    })?;
    serde_json::from_slice(&bytes).map_err(|e| PipelineError::Io(format!("{}: {e}", path.display())))
}

fn read_optional<T: DeserializeOwned>(path: &Path) -> Result<Option<T>, PipelineError> {
    match read_json(path) {
        Ok(v) => Ok(Some(v)),
        Err(PipelineError::NotFound(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Contents of `run.json`: the record minus per-candidate artifacts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema_version: u32,
    pub run_id: String,
    pub created_at: String,
    pub config: RunConfig,
    pub status: RunStatus,
    pub awaiting_candidate: Option<u32>,
    pub best_candidate: Option<u32>,
    pub stepback: Option<String>,
    pub error: Option<String>,
    pub baseline: Option<EvaluationSummary>,
    pub candidates: Vec<CandidateMeta>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateMeta {
    pub id: u32,
    pub generation: u32,
    pub parent: Option<u32>,
    pub seed: u64,
    pub attempts: u32,
    pub verdict: Verdict,
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct DiagnosticsFile {
    history: Vec<Vec<Diagnostic>>,
    warnings: Vec<Diagnostic>,
}

/// Episode log on disk, observations as name -> value maps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryFile {
    pub seed: u64,
    pub steps: Vec<StepFile>,
    pub cause: TerminationCause,
    pub success: bool,
    pub episode_length: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepFile {
    pub observation: serde_json::Map<String, serde_json::Value>,
    pub action: u32,
    pub custom_reward: Option<f64>,
    pub legacy_reward: f64,
}

impl TrajectoryFile {
    pub fn from_log(env: EnvId, log: &TrajectoryLog) -> Self {
        let spec = env.observation_spec();
        let steps = log
            .steps
            .iter()
            .map(|s| StepFile {
                observation: spec.names().zip(&s.observation).map(|(n, v)| (n.to_string(), serde_json::json!(v))).collect(),
                action: s.action,
                custom_reward: s.custom_reward,
                legacy_reward: s.legacy_reward,
            })
            .collect();
        Self { seed: log.seed, steps, cause: log.cause, success: log.success, episode_length: log.episode_length }
    }

    pub fn to_log(&self, env: EnvId) -> Result<TrajectoryLog, PipelineError> {
        let spec = env.observation_spec();
        let steps = self
            .steps
            .iter()
            .enumerate()
            .map(|(i, s)| {
                let observation = spec
                    .names()
                    .map(|n| s.observation.get(n).and_then(|v| v.as_f64()))
                    .collect::<Option<Vec<f64>>>()
                    .ok_or_else(|| PipelineError::SchemaMismatch(format!("step {i} lacks an observation variable")))?;
                Ok(TrajectoryStep { observation, action: s.action, custom_reward: s.custom_reward, legacy_reward: s.legacy_reward })
            })
            .collect::<Result<Vec<_>, PipelineError>>()?;
        Ok(TrajectoryLog { seed: self.seed, steps, cause: self.cause, success: self.success, episode_length: self.episode_length })
    }
}

pub fn run_dir(runs_dir: &Path, run_id: &str) -> PathBuf {
    runs_dir.join(run_id)
}

pub fn candidate_dir(runs_dir: &Path, run_id: &str, id: u32) -> PathBuf {
    run_dir(runs_dir, run_id).join(format!("candidate_{id}"))
}

fn valid_run_id(run_id: &str) -> bool {
    !run_id.is_empty() && !run_id.starts_with('.') && run_id.chars().all(|c| c.is_ascii_alphanumeric() || "-_.".contains(c))
}

pub fn manifest_of(record: &RunRecord) -> Manifest {
    Manifest {
        schema_version: record.schema_version,
        run_id: record.run_id.clone(),
        created_at: record.created_at.clone(),
        config: record.config.clone(),
        status: record.status,
        awaiting_candidate: record.awaiting_candidate,
        best_candidate: record.best_candidate,
        stepback: record.stepback.clone(),
        error: record.error.clone(),
        baseline: record.baseline.as_ref().map(|b| b.evaluation.clone()),
        candidates: record
            .candidates
            .iter()
            .map(|c| CandidateMeta {
                id: c.id,
                generation: c.generation,
                parent: c.parent,
                seed: c.seed,
                attempts: c.attempts,
                verdict: c.verdict,
                note: c.note.clone(),
            })
            .collect(),
    }
}

pub fn write_manifest(runs_dir: &Path, record: &RunRecord) -> Result<(), PipelineError> {
    write_json(&run_dir(runs_dir, &record.run_id).join("run.json"), &manifest_of(record))
}

pub fn read_manifest(runs_dir: &Path, run_id: &str) -> Result<Manifest, PipelineError> {
    if !valid_run_id(run_id) {
        return Err(PipelineError::NotFound(format!("run {run_id}")));
    }
    let path = run_dir(runs_dir, run_id).join("run.json");
    let value: serde_json::Value = read_json(&path).map_err(|e| match e {
        PipelineError::NotFound(_) => PipelineError::NotFound(format!("run {run_id}")),
        e => e,
    })?;
    match value.get("schema_version").and_then(|v| v.as_u64()) {
        Some(v) if v == SCHEMA_VERSION as u64 => {}
        other => {
            return Err(PipelineError::SchemaMismatch(format!(
                "run {run_id} has schema_version {other:?}, expected {SCHEMA_VERSION}"
            )))
        }
    }
    serde_json::from_value(value).map_err(|e| PipelineError::SchemaMismatch(format!("run {run_id}: {e}")))
}

pub fn write_feedback(runs_dir: &Path, run_id: &str, events: &[FeedbackEvent]) -> Result<(), PipelineError> {
    write_json(&run_dir(runs_dir, run_id).join("feedback.json"), events)
}

pub fn read_feedback(runs_dir: &Path, run_id: &str) -> Result<Vec<FeedbackEvent>, PipelineError> {
    Ok(read_optional(&run_dir(runs_dir, run_id).join("feedback.json"))?.unwrap_or_default())
}

pub fn write_baseline(runs_dir: &Path, run_id: &str, baseline: &BaselineResult) -> Result<(), PipelineError> {
    write_json(&run_dir(runs_dir, run_id).join("baseline").join("train_report.json"), &baseline.train_report)
}

/// Writes a candidate's metadata files. Program files and reports are only
/// written when present.
pub fn write_candidate(runs_dir: &Path, run_id: &str, candidate: &Candidate) -> Result<(), PipelineError> {
    let dir = candidate_dir(runs_dir, run_id, candidate.id);
    write_json(
        &dir.join("diagnostics.json"),
        &DiagnosticsFile { history: candidate.diagnostics.clone(), warnings: candidate.warnings.clone() },
    )?;
    if let Some(source) = &candidate.source {
        write_atomic(&dir.join("reward.rdsl"), source.as_bytes())?;
    }
    if let Some(report) = &candidate.train_report {
        write_json(&dir.join("train_report.json"), report)?;
    }
    if let Some(evaluation) = &candidate.evaluation {
        write_json(&dir.join("eval.json"), evaluation)?;
    }
    Ok(())
}

/// Step-back text, request log and evaluation trajectories of a candidate.
pub fn write_candidate_artifacts(
    runs_dir: &Path,
    run_id: &str,
    env: EnvId,
    id: u32,
    stepback: &str,
    requests: &[RequestRecord],
    logs: &[TrajectoryLog],
) -> Result<(), PipelineError> {
    let dir = candidate_dir(runs_dir, run_id, id);
    write_atomic(&dir.join("prompt_stepback.txt"), stepback.as_bytes())?;
    write_json(&dir.join("request_history.json"), requests)?;
    for (i, log) in logs.iter().enumerate() {
        write_json(&dir.join("trajectories").join(format!("ep_{i}.json")), &TrajectoryFile::from_log(env, log))?;
    }
    Ok(())
}

pub fn read_request_history(runs_dir: &Path, run_id: &str, id: u32) -> Result<Vec<RequestRecord>, PipelineError> {
    read_json(&candidate_dir(runs_dir, run_id, id).join("request_history.json"))
}

pub fn read_trajectory(runs_dir: &Path, run_id: &str, id: u32, episode: u32) -> Result<TrajectoryFile, PipelineError> {
    let path = candidate_dir(runs_dir, run_id, id).join("trajectories").join(format!("ep_{episode}.json"));
    read_json(&path).map_err(|e| match e {
        PipelineError::NotFound(_) => PipelineError::NotFound(format!("trajectory {episode} of candidate {id}")),
        e => e,
    })
}

/// Writes everything in the record (trajectories and request logs are
/// written separately as they are not part of it).
pub fn persist_run(runs_dir: &Path, record: &RunRecord) -> Result<(), PipelineError> {
    if let Some(baseline) = &record.baseline {
        write_baseline(runs_dir, &record.run_id, baseline)?;
    }
    for candidate in &record.candidates {
        write_candidate(runs_dir, &record.run_id, candidate)?;
    }
    write_feedback(runs_dir, &record.run_id, &record.feedback)?;
    write_manifest(runs_dir, record)
}

pub fn load_run(runs_dir: &Path, run_id: &str) -> Result<RunRecord, PipelineError> {
    let manifest = read_manifest(runs_dir, run_id)?;
    let dir = run_dir(runs_dir, run_id);
    let baseline = match manifest.baseline {
        Some(evaluation) => {
            let train_report: TrainingReport = read_json(&dir.join("baseline").join("train_report.json"))?;
            Some(BaselineResult { train_report, evaluation })
        }
        None => None,
    };
    let mut candidates = Vec::with_capacity(manifest.candidates.len());
    for meta in manifest.candidates {
        let cdir = candidate_dir(runs_dir, run_id, meta.id);
        let diagnostics: DiagnosticsFile = read_json(&cdir.join("diagnostics.json"))?;
        let source = match std::fs::read_to_string(cdir.join("reward.rdsl")) {
            Ok(s) => Some(s),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => None,
            Err(e) => return Err(e.into()),
        };
        candidates.push(Candidate {
            id: meta.id,
            generation: meta.generation,
            parent: meta.parent,
            seed: meta.seed,
            source,
            attempts: meta.attempts,
            diagnostics: diagnostics.history,
            warnings: diagnostics.warnings,
            train_report: read_optional(&cdir.join("train_report.json"))?,
            evaluation: read_optional(&cdir.join("eval.json"))?,
            verdict: meta.verdict,
            note: meta.note,
        });
    }
    Ok(RunRecord {
        schema_version: manifest.schema_version,
        run_id: manifest.run_id,
        created_at: manifest.created_at,
        config: manifest.config,
        baseline,
        candidates,
        best_candidate: manifest.best_candidate,
        status: manifest.status,
        awaiting_candidate: manifest.awaiting_candidate,
        stepback: manifest.stepback,
        error: manifest.error,
        feedback: read_feedback(runs_dir, run_id)?,
    })
}

/// Run ids under `runs_dir` that have a manifest, sorted.
pub fn list_runs(runs_dir: &Path) -> Result<Vec<String>, PipelineError> {
    let entries = match std::fs::read_dir(runs_dir) {
        Ok(e) => e,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(e.into()),
    };
    let mut ids: Vec<String> = entries
        .filter_map(|e| e.ok())
        .filter(|e| e.path().join("run.json").is_file())
        .filter_map(|e| e.file_name().into_string().ok())
        .filter(|id| valid_run_id(id))
        .collect();
    ids.sort();
    Ok(ids)
}

/// A fresh, timestamp-based run id not yet present under `runs_dir`.
pub fn new_run_id(runs_dir: &Path) -> String {
    let base = chrono::Utc::now().format("%Y%m%d-%H%M%S-%3f").to_string();
    let mut id = base.clone();
    let mut n = 1;
    while run_dir(runs_dir, &id).exists() {
        id = format!("{base}-{n}");
        n += 1;
    }
    id
}
