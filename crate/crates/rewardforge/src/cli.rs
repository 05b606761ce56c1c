//! Command-line entry points. Exit codes: 0 success, 1 failure, 2 usage or
//! configuration error.

use std::io::{IsTerminal, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use rewardforge_core::dsl::compile;
use rewardforge_core::envs::{describe, render_state, EnvId};
use rewardforge_core::learner::LearnerConfig;

use crate::llm::{GoalPrompt, HttpBackend, LlmClient, MockBackend};
use crate::pipeline::persist::{read_manifest, read_trajectory};
use crate::pipeline::{self, FeedbackMode, FileChannel, PipelineError, RunConfig, RunContext, RunStatus, TerminalChannel, Verdict};
use crate::server::{self, ServeConfig};

#[derive(Debug, Parser)]
#[command(name = "rewardforge", version, about = "Generate, train and refine reward functions for classic-control tasks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the full generation, training and refinement pipeline.
    Run(RunArgs),
    /// Train and evaluate the legacy reward.
    EvalBaseline(BaselineArgs),
    /// Print one evaluation episode of a candidate.
    Replay(ReplayArgs),
    /// Print the environment description given to the models.
    Describe { env: EnvId },
    /// Serve the HTTP API and the feedback console.
    Serve(ServeArgs),
    /// Compile a reward program and print its diagnostics.
    Check {
        #[arg(long)]
        env: EnvId,
        file: PathBuf,
    },
}

#[derive(Debug, Args)]
struct LearnerArgs {
    /// Training episodes.
    #[arg(long, default_value_t = LearnerConfig::default().training_episodes)]
    episodes: u32,
    /// Cap on total training steps.
    #[arg(long)]
    step_budget: Option<u64>,
    #[arg(long, default_value_t = LearnerConfig::default().eval_episodes)]
    eval_episodes: u32,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl LearnerArgs {
    fn learner(&self) -> LearnerConfig {
        LearnerConfig {
            training_episodes: self.episodes,
            total_step_budget: self.step_budget,
            eval_episodes: self.eval_episodes,
            ..LearnerConfig::default()
        }
    }
}

#[derive(Debug, Args)]
struct RunArgs {
    #[arg(long)]
    env: EnvId,
    #[arg(long)]
    goal_text: Option<String>,
    /// PNG or JPEG goal image.
    #[arg(long)]
    goal_image: Option<PathBuf>,
    #[arg(long, default_value_t = 4)]
    candidates: u32,
    #[arg(long, default_value = "auto")]
    feedback: FeedbackMode,
    /// Accept candidates reaching this success rate instead of the baseline's.
    #[arg(long)]
    threshold: Option<f64>,
    #[arg(long)]
    no_legacy_compare: bool,
    #[command(flatten)]
    learner: LearnerArgs,
    #[arg(long, default_value_t = 3)]
    max_repair_attempts: u32,
    #[arg(long, default_value_t = 3)]
    max_refinement_iters: u32,
    /// Concurrent training jobs; defaults to the number of candidates.
    #[arg(long)]
    parallel_jobs: Option<u32>,
    /// Scripted model responses (JSON list of {expect_substring?, response}).
    #[arg(long)]
    mock_transcript: Option<PathBuf>,
    #[arg(long, default_value = "runs")]
    runs_dir: PathBuf,
    #[arg(long)]
    run_id: Option<String>,
    /// Serve the API while the run executes (human feedback channel).
    #[arg(long)]
    serve: bool,
    #[arg(long, default_value_t = 8080)]
    port: u16,
    #[arg(long)]
    static_dir: Option<PathBuf>,
    /// Seconds to wait for human feedback per candidate.
    #[arg(long, default_value_t = 600)]
    feedback_timeout: u64,
    #[arg(long, default_value_t = 4)]
    vlm_frames: u32,
}

#[derive(Debug, Args)]
struct BaselineArgs {
    #[arg(long)]
    env: EnvId,
    #[command(flatten)]
    learner: LearnerArgs,
}

#[derive(Debug, Args)]
struct ReplayArgs {
    run_id: String,
    candidate: u32,
    episode: u32,
    #[arg(long, default_value = "runs")]
    runs_dir: PathBuf,
    /// Emit one JSON scene record per line instead of a table.
    #[arg(long)]
    json: bool,
}

#[derive(Debug, Args)]
struct ServeArgs {
    #[arg(long, default_value_t = 8080)]
    port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    host: String,
    #[arg(long, default_value = "runs")]
    runs_dir: PathBuf,
    #[arg(long)]
    static_dir: Option<PathBuf>,
}

/// Parses `args` (including the program name) and runs the command.
pub fn main_with(args: impl IntoIterator<Item = String>, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let rendered = e.render().to_string();
            let _ = if code == 0 { write!(out, "{rendered}") } else { write!(err, "{rendered}") };
            return code;
        }
    };
    match cli.command {
        Command::Run(args) => cmd_run(args, out, err),
        Command::EvalBaseline(args) => cmd_eval_baseline(args, out),
        Command::Replay(args) => cmd_replay(args, out, err),
        Command::Describe { env } => {
            let _ = write!(out, "{}", describe(env));
            0
        }
        Command::Serve(args) => cmd_serve(args, err),
        Command::Check { env, file } => cmd_check(env, file, out, err),
    }
}

fn usage_error(err: &mut dyn Write, message: &str) -> i32 {
    let _ = writeln!(err, "error: {message}\n\nUsage: rewardforge run --env <ENV> [--goal-text <TEXT>] [--goal-image <PATH>] [OPTIONS]");
    2
}

fn cmd_run(args: RunArgs, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    if args.goal_text.is_none() && args.goal_image.is_none() {
        return usage_error(err, "a goal is required: pass --goal-text, --goal-image, or both");
    }
    let goal = match GoalPrompt::load(args.goal_text.clone(), args.goal_image.as_deref()) {
        Ok(g) => g,
        Err(e) => return usage_error(err, &e.to_string()),
    };
    let human = args.feedback == FeedbackMode::Human;
    if human && !args.serve && !std::io::stdin().is_terminal() {
        return usage_error(err, "--feedback human needs --serve or an interactive terminal");
    }

    let mut config = RunConfig::new(args.env, goal);
    config.n_candidates = args.candidates;
    config.max_repair_attempts = args.max_repair_attempts;
    config.max_refinement_iters = args.max_refinement_iters;
    config.acceptance.threshold = args.threshold;
    config.acceptance.compare_to_legacy = !args.no_legacy_compare;
    config.feedback_mode = args.feedback;
    config.learner = LearnerConfig { seed: args.learner.seed, ..args.learner.learner() };
    config.parallel_jobs = args.parallel_jobs.unwrap_or(args.candidates);
    config.seed = args.learner.seed;
    config.feedback_timeout_secs = args.feedback_timeout;
    config.vlm_frames = args.vlm_frames;
    if let Err(msg) = config.validate() {
        return usage_error(err, &msg);
    }

    let backend: Box<dyn crate::llm::ChatBackend> = match &args.mock_transcript {
        Some(path) => match MockBackend::from_file(path) {
            Ok(mock) => Box::new(mock),
            Err(msg) => return usage_error(err, &msg),
        },
        None => Box::new(HttpBackend::new()),
    };
    let mut ctx = RunContext::new(LlmClient::from_env(backend), &args.runs_dir);
    ctx.run_id = args.run_id.clone();
    if human {
        ctx.human = Some(if args.serve { Box::new(FileChannel::new(&args.runs_dir)) } else { Box::new(TerminalChannel::default()) });
    }
    ctx.progress = Some(Box::new(|m: &str| eprintln!("{m}")));

    let server = if args.serve {
        let config = ServeConfig { static_dir: args.static_dir.clone(), ..ServeConfig::new(&args.runs_dir) };
        match server::start(&format!("127.0.0.1:{}", args.port), config) {
            Ok(handle) => {
                let _ = writeln!(err, "serving on {}", handle.url());
                Some(handle)
            }
            Err(msg) => {
                let _ = writeln!(err, "error: {msg}");
                return 1;
            }
        }
    } else {
        None
    };

    let result = pipeline::run(&config, &ctx);
    if let Some(handle) = server {
        handle.shutdown();
    }
    let record = match result {
        Ok(record) => record,
        Err(e @ PipelineError::Config(_)) => return usage_error(err, &e.to_string()),
        Err(e) => {
            let _ = writeln!(err, "error[{}]: {e}", e.code());
            return 1;
        }
    };

    for c in &record.candidates {
        let lineage = c.parent.map(|p| format!(", refines {p}")).unwrap_or_default();
        let outcome = match (c.verdict, c.success_rate()) {
            (Verdict::Failed, _) => format!("failed ({})", c.note.as_deref().unwrap_or("no program")),
            (v, Some(rate)) => format!("{}, success rate {rate:.4}", format!("{v:?}").to_lowercase()),
            (v, None) => format!("{v:?}").to_lowercase(),
        };
        let _ = writeln!(out, "candidate {} (generation {}{lineage}): {outcome}", c.id, c.generation);
    }
    let baseline = record.baseline.as_ref().map(|b| b.evaluation.success_rate);
    match (record.best(), baseline) {
        (Some(best), Some(base)) => {
            let _ = writeln!(
                out,
                "best: candidate {} success rate {:.4} vs baseline {base:.4}",
                best.id,
                best.success_rate().unwrap_or(0.0)
            );
        }
        _ => {
            let _ = writeln!(out, "best: none");
        }
    }
    let dir = crate::pipeline::persist::run_dir(&args.runs_dir, &record.run_id);
    let _ = writeln!(out, "run {} {:?} ({})", record.run_id, record.status, dir.display());
    if record.status == RunStatus::Done {
        0
    } else {
        if let Some(e) = &record.error {
            let _ = writeln!(err, "error: {e}");
        }
        1
    }
}

fn cmd_eval_baseline(args: BaselineArgs, out: &mut dyn Write) -> i32 {
    let learner = args.learner.learner();
    let seed = args.learner.seed;
    let eval_seed = seed.wrapping_add(pipeline::EVAL_SEED_OFFSET);
    let baseline = pipeline::compute_baseline(args.env, &learner, seed, eval_seed);
    let report = &baseline.train_report;
    let _ = writeln!(
        out,
        "legacy baseline on {}: success rate {:.4} over {} evaluation episodes",
        args.env, baseline.evaluation.success_rate, baseline.evaluation.episodes
    );
    let _ = writeln!(out, "training: {} episodes, {} steps, seed {seed}", report.completed_episodes(), report.total_steps);
    for (name, value) in &baseline.evaluation.metrics {
        let _ = writeln!(out, "{name}: {value:.4}");
    }
    0
}

fn cmd_replay(args: ReplayArgs, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let found = read_manifest(&args.runs_dir, &args.run_id).and_then(|manifest| {
        let log = read_trajectory(&args.runs_dir, &args.run_id, args.candidate, args.episode)?;
        Ok((manifest.config.env, log))
    });
    let (env, file) = match found {
        Ok(v) => v,
        Err(e) => {
            let _ = writeln!(err, "error[{}]: {e}", e.code());
            return 1;
        }
    };
    let log = match file.to_log(env) {
        Ok(log) => log,
        Err(e) => {
            let _ = writeln!(err, "error[{}]: {e}", e.code());
            return 1;
        }
    };
    let spec = env.observation_spec();
    if args.json {
        for (i, step) in log.steps.iter().enumerate() {
            let record = serde_json::json!({
                "step": i,
                "action": step.action,
                "custom_reward": step.custom_reward,
                "legacy_reward": step.legacy_reward,
                "scene": render_state(env, &step.observation),
            });
            let _ = writeln!(out, "{record}");
        }
    } else {
        let names: Vec<&str> = spec.names().collect();
        let _ = writeln!(out, "step\taction\tcustom\tlegacy\t{}", names.join("\t"));
        for (i, step) in log.steps.iter().enumerate() {
            let custom = step.custom_reward.map(|r| format!("{r:.6}")).unwrap_or_else(|| "fault".into());
            let obs: Vec<String> = step.observation.iter().map(|v| format!("{v:.6}")).collect();
            let _ = writeln!(out, "{i}\t{}\t{custom}\t{}\t{}", step.action, step.legacy_reward, obs.join("\t"));
        }
    }
    0
}

fn cmd_serve(args: ServeArgs, err: &mut dyn Write) -> i32 {
    let config = ServeConfig { static_dir: args.static_dir, ..ServeConfig::new(&args.runs_dir) };
    match server::start(&format!("{}:{}", args.host, args.port), config) {
        Ok(handle) => {
            let _ = writeln!(err, "serving {} on {}", args.runs_dir.display(), handle.url());
            handle.wait();
            0
        }
        Err(msg) => {
            let _ = writeln!(err, "error: {msg}");
            1
        }
    }
}

fn cmd_check(env: EnvId, file: PathBuf, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let source = match std::fs::read_to_string(&file) {
        Ok(s) => s,
        Err(e) => {
            let _ = writeln!(err, "error: cannot read {}: {e}", file.display());
            return 1;
        }
    };
    match compile(&source, &env.observation_spec()) {
        Ok(program) => {
            for w in program.warnings() {
                let _ = writeln!(err, "{w}");
            }
            let _ = writeln!(out, "{}", program.source());
            0
        }
        Err(diagnostics) => {
            for d in diagnostics {
                let _ = writeln!(err, "{d}");
            }
            1
        }
    }
}
