//! End-to-end orchestration: step-back, candidate generation with repair,
//! baseline and candidate training, acceptance, refinement, persistence.

mod feedback;
mod generate;
pub mod persist;
mod types;

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use rayon::prelude::*;
use rewardforge_core::behavior::describe_behavior;
use rewardforge_core::dsl::{compile, TypedProgram};
use rewardforge_core::envs::{describe, EnvId, TrajectoryLog};
use rewardforge_core::learner::{evaluate_policy, train, LearnerConfig, TrainingReport};
use sha2::{Digest, Sha256};

use crate::llm::prompts::{build_refinement_request, build_stepback_request, CandidateSummary};
use crate::llm::{describe_behavior_vlm, LlmClient, ModelRole, CRITIC_TEMPERATURE};

pub use feedback::{parse_terminal_line, FileChannel, HumanChannel, TerminalChannel};
pub use generate::{generate_candidate, probe, probe_points, Draft, MAX_PROBES};
pub use persist::{load_run, persist_run};
pub use types::*;

pub type ProgressFn = Box<dyn Fn(&str) + Send + Sync>;

/// Everything `run` needs besides the config.
pub struct RunContext {
    pub client: LlmClient,
    pub runs_dir: PathBuf,
    /// Required for human feedback mode.
    pub human: Option<Box<dyn HumanChannel>>,
    /// Fixed run id; a fresh timestamp id is used when absent.
    pub run_id: Option<String>,
    pub progress: Option<ProgressFn>,
}

impl RunContext {
    pub fn new(client: LlmClient, runs_dir: impl Into<PathBuf>) -> Self {
        Self { client, runs_dir: runs_dir.into(), human: None, run_id: None, progress: None }
    }

    fn say(&self, message: &str) {
        if let Some(progress) = &self.progress {
            progress(message);
        }
    }
}

/// Result of training and evaluating one reward program.
#[derive(Debug, Clone)]
pub struct JobOutcome {
    pub report: TrainingReport,
    pub evaluation: Option<EvaluationSummary>,
    pub logs: Vec<TrajectoryLog>,
}

/// Trains with `seed`, then evaluates greedily on `eval_seed, eval_seed + 1, …`
/// unless training faulted.
pub fn train_and_evaluate(env: EnvId, program: &TypedProgram, learner: &LearnerConfig, seed: u64, eval_seed: u64) -> JobOutcome {
    let config = LearnerConfig { seed, ..learner.clone() };
    let start = Instant::now();
    let (policy, mut report) = train(env, program, &config).expect("program typed against the env spec and config validated");
    report.wall_time_ms = Some(start.elapsed().as_millis() as u64);
    if report.is_faulted() {
        return JobOutcome { report, evaluation: None, logs: Vec::new() };
    }
    let eval = evaluate_policy(env, &policy, Some(program), config.eval_episodes, eval_seed, config.r_max);
    let evaluation = EvaluationSummary {
        success_rate: eval.success_rate,
        metrics: eval.metrics,
        episodes: config.eval_episodes,
        seed: eval_seed,
    };
    JobOutcome { report, evaluation: Some(evaluation), logs: eval.logs }
}

fn baseline_cache_key(env: EnvId, learner: &LearnerConfig, seed: u64, eval_seed: u64) -> String {
    let key = serde_json::json!({
        "cache_schema": 1,
        "env": env,
        "learner": LearnerConfig { seed, ..learner.clone() },
        "eval_seed": eval_seed,
    });
    let digest = Sha256::digest(key.to_string().as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Trains the legacy reward under `learner`, reusing a cached result from
/// `runs_dir/.baseline-cache` when one exists for the same inputs.
pub fn legacy_baseline(runs_dir: &Path, env: EnvId, learner: &LearnerConfig, seed: u64, eval_seed: u64) -> Result<BaselineResult, PipelineError> {
    let path = runs_dir.join(".baseline-cache").join(format!("{}.json", baseline_cache_key(env, learner, seed, eval_seed)));
    if let Ok(bytes) = std::fs::read(&path) {
        if let Ok(cached) = serde_json::from_slice::<BaselineResult>(&bytes) {
            return Ok(cached);
        }
    }
    let result = compute_baseline(env, learner, seed, eval_seed);
    persist::write_atomic(&path, &serde_json::to_vec(&result)?)?;
    Ok(result)
}

/// The legacy baseline without any caching.
pub fn compute_baseline(env: EnvId, learner: &LearnerConfig, seed: u64, eval_seed: u64) -> BaselineResult {
    let legacy = compile(env.legacy_reward_source(), &env.observation_spec()).expect("legacy reward compiles");
    let outcome = train_and_evaluate(env, &legacy, learner, seed, eval_seed);
    BaselineResult {
        train_report: outcome.report,
        evaluation: outcome.evaluation.expect("constant legacy reward cannot fault"),
    }
}

struct Pending {
    id: u32,
    generation: u32,
    parent: Option<u32>,
    seed: u64,
    stepback: String,
    draft: Draft,
}

enum FeedbackOutcome {
    Revise(FeedbackEvent),
    Stop,
}

struct Orchestrator<'a> {
    config: &'a RunConfig,
    ctx: &'a RunContext,
    d_env: String,
    record: RunRecord,
    logs: HashMap<u32, Vec<TrajectoryLog>>,
    next_id: u32,
}

/// Runs the whole pipeline and persists it under `ctx.runs_dir`.
pub fn run(config: &RunConfig, ctx: &RunContext) -> Result<RunRecord, PipelineError> {
    config.validate().map_err(PipelineError::Config)?;
    if config.goal.image.is_some() && !ctx.client.critic.vision_capable {
        return Err(PipelineError::Config("the goal has an image but the critic endpoint is not vision capable".into()));
    }
    match config.feedback_mode {
        FeedbackMode::Human if ctx.human.is_none() => {
            return Err(PipelineError::Config("human feedback mode needs a feedback channel".into()))
        }
        FeedbackMode::Vlm if !ctx.client.vlm.vision_capable => {
            return Err(PipelineError::Config("vlm feedback mode needs a vision capable endpoint".into()))
        }
        _ => {}
    }
    std::fs::create_dir_all(&ctx.runs_dir)?;
    let run_id = ctx.run_id.clone().unwrap_or_else(|| persist::new_run_id(&ctx.runs_dir));
    if persist::run_dir(&ctx.runs_dir, &run_id).join("run.json").exists() {
        return Err(PipelineError::Config(format!("run {run_id} already exists")));
    }
    let record = RunRecord {
        schema_version: SCHEMA_VERSION,
        run_id,
        created_at: timestamp_now(),
        config: config.clone(),
        baseline: None,
        candidates: Vec::new(),
        best_candidate: None,
        status: RunStatus::Running,
        awaiting_candidate: None,
        stepback: None,
        error: None,
        feedback: Vec::new(),
    };
    let mut orchestrator = Orchestrator { config, ctx, d_env: describe(config.env), record, logs: HashMap::new(), next_id: config.n_candidates };
    orchestrator.save_manifest()?;
    match orchestrator.execute() {
        Ok(()) => Ok(orchestrator.record),
        Err(e) => {
            orchestrator.record.status = RunStatus::Failed;
            orchestrator.record.awaiting_candidate = None;
            orchestrator.record.error = Some(format!("{}: {e}", e.code()));
            let _ = orchestrator.save_manifest();
            Err(e)
        }
    }
}

impl Orchestrator<'_> {
    fn runs_dir(&self) -> &Path {
        &self.ctx.runs_dir
    }

    fn save_manifest(&self) -> Result<(), PipelineError> {
        let _gate = persist::feedback_gate();
        persist::write_manifest(self.runs_dir(), &self.record)
    }

    fn goal_text(&self) -> Option<&str> {
        self.config.goal.text.as_deref()
    }

    fn execute(&mut self) -> Result<(), PipelineError> {
        let env = self.config.env;
        let client = &self.ctx.client;

        let messages = build_stepback_request(&self.config.goal, &self.d_env);
        let stepback = client.chat(ModelRole::Critic, &messages, CRITIC_TEMPERATURE)?;
        let stepback_request =
            RequestRecord { purpose: "stepback".into(), temperature: CRITIC_TEMPERATURE, messages, response: stepback.clone() };
        self.record.stepback = Some(stepback.clone());
        self.save_manifest()?;
        self.ctx.say("step-back prompt received");

        let mut pending = Vec::new();
        for index in 0..self.config.n_candidates {
            let mut draft =
                generate_candidate(client, env, &stepback, &self.d_env, self.goal_text(), self.config.max_repair_attempts)?;
            draft.requests.insert(0, stepback_request.clone());
            self.ctx.say(&format!("candidate {index}: {} attempt(s)", draft.attempts));
            pending.push(Pending {
                id: index,
                generation: 0,
                parent: None,
                seed: self.config.seed.wrapping_add(index as u64),
                stepback: stepback.clone(),
                draft,
            });
        }

        self.ctx.say("training legacy baseline");
        let baseline =
            legacy_baseline(self.runs_dir(), env, &self.config.learner, self.config.seed, self.config.eval_seed())?;
        persist::write_baseline(self.runs_dir(), &self.record.run_id, &baseline)?;
        self.record.baseline = Some(baseline);
        self.save_manifest()?;

        let mut active = self.train_pending(pending)?;

        if self.config.feedback_mode != FeedbackMode::None {
            for _ in 0..self.config.max_refinement_iters {
                if active.is_empty() {
                    break;
                }
                let mut pending = Vec::new();
                for id in active {
                    if let Some(p) = self.refine(id)? {
                        pending.push(p);
                    }
                }
                active = self.train_pending(pending)?;
            }
        }

        self.record.best_candidate = best_candidate(&self.record.candidates);
        if self.record.candidates.iter().all(|c| c.verdict == Verdict::Failed) {
            self.record.status = RunStatus::Failed;
            self.record.error = Some("no candidate produced a valid, trainable reward program".into());
        } else {
            self.record.status = RunStatus::Done;
        }
        self.save_manifest()?;
        Ok(())
    }

    /// Trains all drafts with a valid program in a pool of `parallel_jobs`
    /// threads and records the candidates in id order. Returns the ids of
    /// rejected candidates.
    fn train_pending(&mut self, pending: Vec<Pending>) -> Result<Vec<u32>, PipelineError> {
        let env = self.config.env;
        let learner = &self.config.learner;
        let eval_seed = self.config.eval_seed();
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(self.config.parallel_jobs as usize)
            .build()
            .map_err(|e| PipelineError::Config(e.to_string()))?;
        let outcomes: Vec<Option<JobOutcome>> = pool.install(|| {
            pending
                .par_iter()
                .map(|p| p.draft.program.as_ref().map(|program| train_and_evaluate(env, program, learner, p.seed, eval_seed)))
                .collect()
        });

        let baseline_rate = self.record.baseline.as_ref().map(|b| b.evaluation.success_rate).unwrap_or(0.0);
        let mut rejected = Vec::new();
        for (p, outcome) in pending.into_iter().zip(outcomes) {
            let (verdict, note) = match (&p.draft.program, &outcome) {
                (None, _) => (Verdict::Failed, Some(format!("no valid program within {} attempt(s)", p.draft.attempts))),
                (Some(_), Some(JobOutcome { evaluation: None, report, .. })) => {
                    let detail = report.fault.as_ref().map(|f| format!("{f:?}")).unwrap_or_default();
                    (Verdict::Failed, Some(format!("training faulted: {detail}")))
                }
                (Some(_), Some(JobOutcome { evaluation: Some(e), .. })) => {
                    if acceptance_decision(e.success_rate, baseline_rate, self.config.acceptance.threshold) {
                        (Verdict::Accepted, None)
                    } else {
                        (Verdict::Rejected, None)
                    }
                }
                (Some(_), None) => unreachable!("every valid program is trained"),
            };
            let (train_report, evaluation, logs) = match outcome {
                Some(o) => (Some(o.report), o.evaluation, o.logs),
                None => (None, None, Vec::new()),
            };
            let candidate = Candidate {
                id: p.id,
                generation: p.generation,
                parent: p.parent,
                seed: p.seed,
                source: p.draft.source().map(str::to_owned),
                attempts: p.draft.attempts,
                diagnostics: p.draft.diagnostics.clone(),
                warnings: p.draft.program.as_ref().map(|t| t.warnings().to_vec()).unwrap_or_default(),
                train_report,
                evaluation,
                verdict,
                note,
            };
            persist::write_candidate(self.runs_dir(), &self.record.run_id, &candidate)?;
            persist::write_candidate_artifacts(
                self.runs_dir(),
                &self.record.run_id,
                env,
                candidate.id,
                &p.stepback,
                &p.draft.requests,
                &logs,
            )?;
            let rate = candidate.success_rate().map(|r| format!(", success rate {r:.4}")).unwrap_or_default();
            self.ctx.say(&format!("candidate {}: {:?}{rate}", candidate.id, candidate.verdict));
            if candidate.verdict == Verdict::Rejected {
                rejected.push(candidate.id);
            }
            self.logs.insert(candidate.id, logs);
            self.record.candidates.push(candidate);
            self.save_manifest()?;
        }
        Ok(rejected)
    }

    fn candidate_mut(&mut self, id: u32) -> &mut Candidate {
        self.record.candidates.iter_mut().find(|c| c.id == id).expect("known candidate")
    }

    fn record_feedback(&mut self, event: FeedbackEvent) -> Result<(), PipelineError> {
        if !self.record.feedback.contains(&event) {
            self.record.feedback.push(event);
        }
        let _gate = persist::feedback_gate();
        persist::write_feedback(self.runs_dir(), &self.record.run_id, &self.record.feedback)
    }

    fn obtain_feedback(&mut self, id: u32) -> Result<FeedbackOutcome, PipelineError> {
        let env = self.config.env;
        let logs = &self.logs[&id];
        let event = match self.config.feedback_mode {
            FeedbackMode::Auto => {
                let text = describe_behavior(env, logs).map_err(|e| PipelineError::Config(e.to_string()))?;
                FeedbackEvent::now(FeedbackSource::AutoDescriber, id, text, None)
            }
            FeedbackMode::Vlm => {
                let text = describe_behavior_vlm(&self.ctx.client, env, logs, self.config.vlm_frames as usize)?;
                FeedbackEvent::now(FeedbackSource::Vlm, id, text, None)
            }
            FeedbackMode::Human => match self.await_human(id)? {
                Some(event) => event,
                None => {
                    let secs = self.config.feedback_timeout_secs;
                    self.candidate_mut(id).note = Some(format!("FEEDBACK_TIMEOUT: no feedback within {secs} s"));
                    persist::write_candidate(self.runs_dir(), &self.record.run_id, self.record.candidate(id).unwrap())?;
                    self.save_manifest()?;
                    self.ctx.say(&format!("candidate {id}: feedback timed out"));
                    return Ok(FeedbackOutcome::Stop);
                }
            },
            FeedbackMode::None => return Ok(FeedbackOutcome::Stop),
        };
        self.record_feedback(event.clone())?;
        match event.verdict {
            Some(HumanVerdict::Accept) | Some(HumanVerdict::Reject) => {
                let accept = event.verdict == Some(HumanVerdict::Accept);
                let candidate = self.candidate_mut(id);
                candidate.verdict = if accept { Verdict::Accepted } else { Verdict::Rejected };
                candidate.note = Some(format!("{} by human reviewer", if accept { "accepted" } else { "rejected" }));
                persist::write_candidate(self.runs_dir(), &self.record.run_id, self.record.candidate(id).unwrap())?;
                self.save_manifest()?;
                Ok(FeedbackOutcome::Stop)
            }
            _ => Ok(FeedbackOutcome::Revise(event)),
        }
    }

    fn await_human(&mut self, id: u32) -> Result<Option<FeedbackEvent>, PipelineError> {
        let channel = self.ctx.human.as_ref().expect("checked before the run");
        {
            let _gate = persist::feedback_gate();
            self.record.status = RunStatus::AwaitingFeedback;
            self.record.awaiting_candidate = Some(id);
            persist::write_feedback(self.runs_dir(), &self.record.run_id, &self.record.feedback)?;
            persist::write_manifest(self.runs_dir(), &self.record)?;
        }
        self.ctx.say(&format!("awaiting feedback for candidate {id}"));
        let seen = self.record.feedback.len();
        let timeout = Duration::from_secs(self.config.feedback_timeout_secs);
        let mut event = channel.wait(&self.record.run_id, id, seen, timeout)?;
        let _gate = persist::feedback_gate();
        if event.is_none() {
            // A post may have landed between the last poll and taking the gate.
            event = channel.wait(&self.record.run_id, id, seen, Duration::ZERO)?;
        }
        self.record.status = RunStatus::Running;
        self.record.awaiting_candidate = None;
        persist::write_manifest(self.runs_dir(), &self.record)?;
        Ok(event)
    }

    fn refine(&mut self, id: u32) -> Result<Option<Pending>, PipelineError> {
        let event = match self.obtain_feedback(id)? {
            FeedbackOutcome::Revise(event) => event,
            FeedbackOutcome::Stop => return Ok(None),
        };
        let parent = self.record.candidate(id).expect("known candidate").clone();
        let (Some(source), Some(report), Some(evaluation)) = (&parent.source, &parent.train_report, &parent.evaluation) else {
            return Ok(None);
        };
        let summary = CandidateSummary {
            id,
            source,
            success_rate: evaluation.success_rate,
            baseline_rate: self.record.baseline.as_ref().map(|b| b.evaluation.success_rate),
            metrics: &evaluation.metrics,
            report,
        };
        let messages = build_refinement_request(&summary, &event.text, &self.config.goal, &self.d_env);
        let client = &self.ctx.client;
        let analysis = client.chat(ModelRole::Critic, &messages, CRITIC_TEMPERATURE)?;
        let mut draft = generate_candidate(
            client,
            self.config.env,
            &analysis,
            &self.d_env,
            self.goal_text(),
            self.config.max_repair_attempts,
        )?;
        draft.requests.insert(
            0,
            RequestRecord {
                purpose: "refinement_analysis".into(),
                temperature: CRITIC_TEMPERATURE,
                messages,
                response: analysis.clone(),
            },
        );
        let new_id = self.next_id;
        self.next_id += 1;
        self.ctx.say(&format!("candidate {new_id}: refinement of {id}, {} attempt(s)", draft.attempts));
        Ok(Some(Pending { id: new_id, generation: parent.generation + 1, parent: Some(id), seed: parent.seed, stepback: analysis, draft }))
    }
}
