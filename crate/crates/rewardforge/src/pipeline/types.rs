use std::collections::BTreeMap;

use rewardforge_core::dsl::Diagnostic;
use rewardforge_core::envs::EnvId;
use rewardforge_core::learner::{LearnerConfig, TrainingReport};
use serde::{Deserialize, Serialize};

use crate::llm::{ChatMessage, GoalPrompt, LlmError};

pub const SCHEMA_VERSION: u32 = 1;

/// Evaluation episodes start at `run seed + EVAL_SEED_OFFSET`.
pub const EVAL_SEED_OFFSET: u64 = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeedbackMode {
    Auto,
    Human,
    Vlm,
    None,
}

impl std::str::FromStr for FeedbackMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "auto" => Ok(Self::Auto),
            "human" => Ok(Self::Human),
            "vlm" => Ok(Self::Vlm),
            "none" => Ok(Self::None),
            other => Err(format!("unknown feedback mode `{other}` (auto, human, vlm, none)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AcceptanceRule {
    pub threshold: Option<f64>,
    pub compare_to_legacy: bool,
}

impl Default for AcceptanceRule {
    fn default() -> Self {
        Self { threshold: None, compare_to_legacy: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub env: EnvId,
    pub goal: GoalPrompt,
    pub n_candidates: u32,
    pub max_repair_attempts: u32,
    pub max_refinement_iters: u32,
    pub acceptance: AcceptanceRule,
    pub feedback_mode: FeedbackMode,
    pub learner: LearnerConfig,
    pub parallel_jobs: u32,
    pub seed: u64,
    /// Seconds to wait for human feedback on one candidate.
    pub feedback_timeout_secs: u64,
    pub vlm_frames: u32,
}

impl RunConfig {
    pub fn new(env: EnvId, goal: GoalPrompt) -> Self {
        Self {
            env,
            goal,
            n_candidates: 4,
            max_repair_attempts: 3,
            max_refinement_iters: 3,
            acceptance: AcceptanceRule::default(),
            feedback_mode: FeedbackMode::Auto,
            learner: LearnerConfig::default(),
            parallel_jobs: 4,
            seed: 0,
            feedback_timeout_secs: 600,
            vlm_frames: 4,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.n_candidates == 0 {
            return Err("n_candidates must be at least 1".into());
        }
        if self.max_repair_attempts == 0 {
            return Err("max_repair_attempts must be at least 1".into());
        }
        if self.parallel_jobs == 0 {
            return Err("parallel_jobs must be at least 1".into());
        }
        if self.vlm_frames == 0 {
            return Err("vlm_frames must be at least 1".into());
        }
        match self.acceptance.threshold {
            Some(t) if !(0.0..=1.0).contains(&t) => return Err(format!("threshold {t} is outside [0, 1]")),
            None if !self.acceptance.compare_to_legacy => {
                return Err("acceptance needs a threshold or the legacy comparison".into())
            }
            _ => {}
        }
        if self.goal.text.is_none() && self.goal.image.is_none() {
            return Err("a goal needs text, an image, or both".into());
        }
        self.learner.validate().map_err(|e| e.to_string())
    }

    pub fn eval_seed(&self) -> u64 {
        self.seed.wrapping_add(EVAL_SEED_OFFSET)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Accepted,
    Rejected,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationSummary {
    pub success_rate: f64,
    pub metrics: BTreeMap<String, f64>,
    pub episodes: u32,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub id: u32,
    pub generation: u32,
    pub parent: Option<u32>,
    pub seed: u64,
    /// Canonical (pretty-printed) program; absent when no valid program was obtained.
    pub source: Option<String>,
    pub attempts: u32,
    /// One batch per failed attempt.
    pub diagnostics: Vec<Vec<Diagnostic>>,
    pub warnings: Vec<Diagnostic>,
    pub train_report: Option<TrainingReport>,
    pub evaluation: Option<EvaluationSummary>,
    pub verdict: Verdict,
    pub note: Option<String>,
}

impl Candidate {
    pub fn success_rate(&self) -> Option<f64> {
        self.evaluation.as_ref().map(|e| e.success_rate)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeedbackSource {
    AutoDescriber,
    Human,
    Vlm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HumanVerdict {
    Revise,
    Accept,
    Reject,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeedbackEvent {
    pub source: FeedbackSource,
    pub text: String,
    pub timestamp: String,
    pub candidate: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verdict: Option<HumanVerdict>,
}

impl FeedbackEvent {
    pub fn now(source: FeedbackSource, candidate: u32, text: String, verdict: Option<HumanVerdict>) -> Self {
        Self { source, text, timestamp: timestamp_now(), candidate, verdict }
    }

    /// A human event; empty text is allowed for accept/reject and replaced
    /// by a placeholder so the text is never empty.
    pub fn human(candidate: u32, text: &str, verdict: HumanVerdict) -> Result<Self, String> {
        let text = text.trim();
        let text = match (text.is_empty(), verdict) {
            (false, _) => text.to_string(),
            (true, HumanVerdict::Revise) => return Err("feedback text must not be empty for verdict revise".into()),
            (true, HumanVerdict::Accept) => "(accepted without comment)".into(),
            (true, HumanVerdict::Reject) => "(rejected without comment)".into(),
        };
        Ok(Self::now(FeedbackSource::Human, candidate, text, Some(verdict)))
    }
}

pub fn timestamp_now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Running,
    AwaitingFeedback,
    Done,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineResult {
    pub train_report: TrainingReport,
    pub evaluation: EvaluationSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub schema_version: u32,
    pub run_id: String,
    pub created_at: String,
    pub config: RunConfig,
    pub baseline: Option<BaselineResult>,
    pub candidates: Vec<Candidate>,
    pub best_candidate: Option<u32>,
    pub status: RunStatus,
    pub awaiting_candidate: Option<u32>,
    pub stepback: Option<String>,
    pub error: Option<String>,
    pub feedback: Vec<FeedbackEvent>,
}

impl RunRecord {
    pub fn candidate(&self, id: u32) -> Option<&Candidate> {
        self.candidates.iter().find(|c| c.id == id)
    }

    pub fn best(&self) -> Option<&Candidate> {
        self.best_candidate.and_then(|id| self.candidate(id))
    }
}

/// One exchange with a model, kept for `request_history.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RequestRecord {
    pub purpose: String,
    pub temperature: f64,
    pub messages: Vec<ChatMessage>,
    pub response: String,
}

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("unknown environment `{0}`")]
    EnvUnknown(String),
    #[error("LLM failure: {0}")]
    Llm(#[from] LlmError),
    #[error("I/O error: {0}")]
    Io(String),
    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),
    #[error("not found: {0}")]
    NotFound(String),
}

impl PipelineError {
    pub fn code(&self) -> &'static str {
        match self {
            PipelineError::Config(_) => "CONFIG_ERROR",
            PipelineError::EnvUnknown(_) => "ENV_UNKNOWN",
            PipelineError::Llm(_) => "LLM_FAILURE",
            PipelineError::Io(_) => "IO_ERROR",
            PipelineError::SchemaMismatch(_) => "SCHEMA_MISMATCH",
            PipelineError::NotFound(_) => "NOT_FOUND",
        }
    }
}

impl From<std::io::Error> for PipelineError {
    fn from(e: std::io::Error) -> Self {
        PipelineError::Io(e.to_string())
    }
}

impl From<serde_json::Error> for PipelineError {
    fn from(e: serde_json::Error) -> Self {
        PipelineError::Io(e.to_string())
    }
}

/// Accept iff the candidate reaches the threshold when one is set, else the
/// legacy baseline's rate.
pub fn acceptance_decision(candidate_rate: f64, baseline_rate: f64, threshold: Option<f64>) -> bool {
    match threshold {
        Some(t) => candidate_rate >= t,
        None => candidate_rate >= baseline_rate,
    }
}

/// Highest success rate among non-failed candidates, earliest id on ties.
pub fn best_candidate(candidates: &[Candidate]) -> Option<u32> {
    let mut best: Option<(&Candidate, f64)> = None;
    for c in candidates.iter().filter(|c| c.verdict != Verdict::Failed) {
        let Some(rate) = c.success_rate() else { continue };
        match best {
            Some((b, r)) if rate < r || (rate == r && b.id < c.id) => {}
            _ => best = Some((c, rate)),
        }
    }
    best.map(|(c, _)| c.id)
}
