//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any
//! failure. Run with `cargo test -p rewardforge --test acceptance`.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::time::{Duration, Instant};

use common::*;
use rewardforge::cli::main_with;
use rewardforge::core::behavior::describe_behavior;
use rewardforge::core::dsl::{compile, parse, pretty_print, typecheck};
use rewardforge::core::envs::{describe, EnvId, EnvModel};
use rewardforge::core::learner::{evaluate_policy, train, LearnerConfig};
use rewardforge::core::rng::SeedRng;
use rewardforge::llm::request_text;
use rewardforge::pipeline::persist::{read_request_history, read_trajectory};
use rewardforge::pipeline::{generate_candidate, load_run, RunRecord, EVAL_SEED_OFFSET};
use rewardforge::server::{self, ServeConfig};
use rewardforge_testkit::{cartpole_euler_step, mountaincar_step, reference_eval, rel_close, ProgramGen};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !($cond) {
            return Err(format!($($fmt)+));
        }
    };
}

fn within(start: Instant, limit: Duration, detail: String) -> Outcome {
    let elapsed = start.elapsed();
    ensure!(elapsed < limit, "{detail}; took {elapsed:.1?}, limit {limit:?}");
    Ok(format!("{detail}; {elapsed:.1?}"))
}

fn dsl_correctness() -> Outcome {
    let start = Instant::now();
    let (mut values, mut faults) = (0, 0);
    for (env, seed) in [(EnvId::CartPole, 11u64), (EnvId::MountainCar, 12)] {
        let spec = env.observation_spec();
        let mut gen = ProgramGen::new(seed);
        for case in 0..500 {
            let program = gen.program(&spec, 6);
            let text = pretty_print(&program);
            let reparsed = parse(&text).map_err(|e| format!("{env} case {case}: reparse failed {e:?}\n{text}"))?;
            ensure!(reparsed.same_structure(&program), "{env} case {case}: round trip changed the tree\n{text}");
            let typed = typecheck(&program, &spec).map_err(|e| format!("{env} case {case}: {e:?}"))?;
            for _ in 0..4 {
                let obs = gen.observation(&spec);
                let (success, failure) = (obs[0] > 0.0, obs[1] < 0.0);
                match (reference_eval(&program, &spec, &obs, success, failure, 1000.0), typed.evaluate(&obs, success, failure, 1000.0)) {
                    (Ok((want, clamped)), Ok(got)) => {
                        ensure!(rel_close(want, got.reward, 1e-12), "{env} case {case}: {} vs reference {want}\n{text}", got.reward);
                        ensure!(clamped == got.clamped, "{env} case {case}: clamp flag differs");
                        values += 1;
                    }
                    (Err(code), Err(diag)) => {
                        ensure!(code == diag.code, "{env} case {case}: fault {:?} vs reference {code:?}", diag.code);
                        faults += 1;
                    }
                    (want, got) => return Err(format!("{env} case {case}: reference {want:?} vs {got:?}\n{text}")),
                }
            }
        }
    }
    within(start, Duration::from_secs(10), format!("1000 programs, {values} values and {faults} faults agree"))
}

fn env_fidelity() -> Outcome {
    let start = Instant::now();
    // Zero state, push right: sinθ = 0 and cosθ = 1 reduce the printed equations to
    // θ̈ = -(F/M) / (l (4/3 - m/M)) and ẍ = F/M - m l θ̈ / M.
    let (m, big_m, l, f, tau) = (0.1, 1.1, 0.5, 10.0, 0.02);
    let theta_acc = -(f / big_m) / (l * (4.0 / 3.0 - m / big_m));
    let x_acc = f / big_m - m * l * theta_acc / big_m;
    let hand = [0.0, tau * x_acc, 0.0, tau * theta_acc];
    let mut cart = EnvModel::new(EnvId::CartPole);
    cart.set_state(&[0.0; 4]).unwrap();
    let got = cart.step(1).unwrap().observation;
    for i in 0..4 {
        ensure!((got[i] - hand[i]).abs() <= 1e-9, "cartpole component {i}: {} vs {}", got[i], hand[i]);
    }

    let velocity = 0.001 - 0.0025 * (3.0f64 * -0.5).cos();
    let direct = [-0.5 + velocity, velocity];
    let mut car = EnvModel::new(EnvId::MountainCar);
    car.set_state(&[-0.5, 0.0]).unwrap();
    let got = car.step(2).unwrap().observation;
    for i in 0..2 {
        ensure!((got[i] - direct[i]).abs() <= 1e-12, "mountaincar component {i}: {} vs {}", got[i], direct[i]);
    }

    // Random rollouts against the step oracles, and the MountainCar bounds.
    let mut rng = SeedRng::new(2024);
    let mut worst_cart = 0.0f64;
    let mut seed = 0;
    car.reset(seed);
    cart.reset(seed);
    for _ in 0..10_000 {
        let a = rng.below(3) as u32;
        let prev = car.observation();
        let step = car.step(a).unwrap();
        let want = mountaincar_step([prev[0], prev[1]], a);
        ensure!((step.observation[0] - want[0]).abs() <= 1e-12 && (step.observation[1] - want[1]).abs() <= 1e-12, "mountaincar rollout {:?} vs {want:?}", step.observation);
        ensure!((-1.2..=0.6).contains(&step.observation[0]), "position {} out of bounds", step.observation[0]);
        ensure!((-0.07..=0.07).contains(&step.observation[1]), "velocity {} out of bounds", step.observation[1]);

        let a = rng.below(2) as u32;
        let prev = cart.observation();
        let cstep = cart.step(a).unwrap();
        let want = cartpole_euler_step([prev[0], prev[1], prev[2], prev[3]], a);
        for (got, want) in cstep.observation.iter().zip(want) {
            worst_cart = worst_cart.max((got - want).abs());
        }
        seed += 1;
        if step.terminated || step.truncated {
            car.reset(seed);
        }
        if cstep.terminated || cstep.truncated {
            cart.reset(seed);
        }
    }
    ensure!(worst_cart <= 1e-9, "cartpole rollout deviates by {worst_cart:e}");
    within(start, Duration::from_secs(5), "one-step oracles match; 10000 MountainCar steps in bounds".into())
}

fn learning_direction() -> Outcome {
    let start = Instant::now();
    let spec = EnvId::CartPole.observation_spec();
    let shaped = compile(SHAPED, &spec).unwrap();
    let legacy = compile(EnvId::CartPole.legacy_reward_source(), &spec).unwrap();
    let mut wins = 0;
    let mut rows = Vec::new();
    for seed in 1..=10u64 {
        let config = LearnerConfig { seed, total_step_budget: Some(25_000), ..LearnerConfig::default() };
        let rate = |program| {
            let (policy, _) = train(EnvId::CartPole, program, &config).unwrap();
            evaluate_policy(EnvId::CartPole, &policy, Some(program), 100, seed + EVAL_SEED_OFFSET, config.r_max).success_rate
        };
        let (ours, base) = (rate(&shaped), rate(&legacy));
        if ours > base {
            wins += 1;
        }
        rows.push(format!("{ours:.2}/{base:.2}"));
    }
    let detail = format!("shaped beats legacy in {wins}/10 seeds [{}]", rows.join(" "));
    ensure!(wins >= 7, "{detail}");
    within(start, Duration::from_secs(600), detail)
}

fn repair_loop() -> Outcome {
    let start = Instant::now();
    let backend = mock(vec![entry(&fenced("let x = ;\nreturn max(x);")), entry(&fenced(SHAPED))]);
    let draft = generate_candidate(&client(&backend), EnvId::CartPole, "steps", &describe(EnvId::CartPole), None, 3)
        .map_err(|e| e.to_string())?;
    ensure!(draft.attempts == 2, "attempts {}", draft.attempts);
    ensure!(draft.program.is_some(), "no program after repair");
    let requests = backend.requests();
    ensure!(requests.len() == 2, "{} requests", requests.len());
    let second = request_text(&requests[1]);
    let first_batch = &draft.diagnostics[0];
    ensure!(!first_batch.is_empty(), "attempt 1 produced no diagnostics");
    for d in first_batch {
        ensure!(second.contains(&d.to_string()), "missing diagnostic `{d}` in the repair request");
    }
    within(start, Duration::from_secs(5), format!("attempts 2; {} diagnostic(s) quoted verbatim", first_batch.len()))
}

fn e2e_transcript(dir: &Path) -> std::path::PathBuf {
    let entries = vec![
        expecting("Step-back analysis request.", "1. Reward keeping the pole near vertical.\n2. Keep the cart near the centre."),
        entry(&fenced("return 0.0;")),
        entry(&fenced("return 0.0;")),
        expecting("Refinement request.", "The reward is constant, so nothing is learned. Penalise the pole angle."),
        entry(&fenced(SHAPED)),
        expecting("Refinement request.", "The reward is constant. Reward an upright pole and a centred cart."),
        entry(&fenced("let upright = 1.0 - abs(pole_angle) / 0.2095;\nreturn upright - 0.25 * abs(cart_position) / 2.4;")),
    ];
    let path = dir.join("transcript.json");
    std::fs::write(&path, serde_json::to_string_pretty(&entries).unwrap()).unwrap();
    path
}

fn cli_run(transcript: &Path, runs: &Path, run_id: &str) -> Result<String, String> {
    let args = [
        "rewardforge", "run", "--env", "cartpole", "--goal-text", CARTPOLE_GOAL, "--candidates", "2",
        "--max-refinement-iters", "1", "--feedback", "auto", "--threshold", "0.5", "--seed", "5",
        "--mock-transcript", transcript.to_str().unwrap(), "--runs-dir", runs.to_str().unwrap(), "--run-id", run_id,
    ];
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = main_with(args.iter().map(|s| s.to_string()), &mut out, &mut err);
    ensure!(code == 0, "exit {code}: {}", String::from_utf8_lossy(&err));
    Ok(String::from_utf8_lossy(&out).into_owned())
}

fn end_to_end() -> Outcome {
    let start = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let runs = dir.path().join("runs");
    cli_run(&e2e_transcript(dir.path()), &runs, "e2e")?;
    let record = load_run(&runs, "e2e").map_err(|e| e.to_string())?;
    ensure!(record.candidates.len() == 4, "{} candidates", record.candidates.len());

    let run = runs.join("e2e");
    for name in ["run.json", "feedback.json", "baseline/train_report.json"] {
        ensure!(run.join(name).is_file(), "missing {name}");
    }
    for c in &record.candidates {
        let cdir = run.join(format!("candidate_{}", c.id));
        for name in ["reward.rdsl", "train_report.json", "eval.json", "diagnostics.json", "prompt_stepback.txt", "request_history.json"] {
            ensure!(cdir.join(name).is_file(), "candidate {} missing {name}", c.id);
        }
        let episodes = std::fs::read_dir(cdir.join("trajectories")).map(|d| d.count()).unwrap_or(0);
        ensure!(episodes == 100, "candidate {} has {episodes} trajectories", c.id);
    }

    for (child, parent) in [(2u32, 0u32), (3, 1)] {
        let logs = (0..100)
            .map(|ep| read_trajectory(&runs, "e2e", parent, ep).and_then(|t| t.to_log(EnvId::CartPole)))
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| e.to_string())?;
        let description = describe_behavior(EnvId::CartPole, &logs).map_err(|e| e.to_string())?;
        let history = read_request_history(&runs, "e2e", child).map_err(|e| e.to_string())?;
        let analysis = history.iter().find(|r| r.purpose == "refinement_analysis").ok_or("no refinement request")?;
        ensure!(request_text(&analysis.messages).contains(&description), "candidate {child}: behaviour text not quoted");
    }
    within(start, Duration::from_secs(600), "exit 0, full layout, behaviour text quoted in both refinements".into())
}

fn determinism() -> Outcome {
    let start = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let runs = dir.path().join("runs");
    let transcript = e2e_transcript(dir.path());
    cli_run(&transcript, &runs, "first")?;
    cli_run(&transcript, &runs, "second")?;
    let load = |id: &str| -> Result<RunRecord, String> { load_run(&runs, id).map_err(|e| e.to_string()) };
    let (a, b) = (normalized(&load("first")?), normalized(&load("second")?));
    if a != b {
        let fields: Vec<String> = a
            .as_object()
            .unwrap()
            .iter()
            .filter(|(k, v)| b.get(k.as_str()) != Some(v))
            .map(|(k, _)| k.clone())
            .collect();
        return Err(format!("records differ in {fields:?}"));
    }
    within(start, Duration::from_secs(600), "two runs give identical records apart from ids and timestamps".into())
}

fn api_contract() -> Outcome {
    let start = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let backend = mock(vec![entry("s"), entry(&fenced(SHAPED))]);
    let persisted = run_with(&small_config(1, rewardforge::pipeline::FeedbackMode::None, 0), &backend, dir.path(), "done")
        .map_err(|e| e.to_string())?;
    let handle = server::start("127.0.0.1:0", ServeConfig::new(dir.path()))?;
    let base = handle.url();
    let result = (|| -> Outcome {
        let call = |r: Result<ureq::Response, ureq::Error>| -> (u16, serde_json::Value) {
            match r {
                Ok(r) => (r.status(), r.into_json().unwrap_or_default()),
                Err(ureq::Error::Status(c, r)) => (c, r.into_json().unwrap_or_default()),
                Err(e) => (0, serde_json::Value::String(e.to_string())),
            }
        };
        let (status, list) = call(ureq::get(&format!("{base}/api/runs")).call());
        ensure!(status == 200 && list[0]["run_id"] == "done", "GET /api/runs: {status} {list}");
        let (status, run) = call(ureq::get(&format!("{base}/api/runs/done")).call());
        let served: Result<RunRecord, _> = serde_json::from_value(run);
        ensure!(status == 200 && served.as_ref().ok() == Some(&persisted), "GET /api/runs/done does not match the persisted run");
        let (status, traj) = call(ureq::get(&format!("{base}/api/runs/done/candidates/0/trajectories/0")).call());
        ensure!(status == 200 && traj["scenes"].as_array().map(Vec::len) == traj["log"]["steps"].as_array().map(Vec::len), "trajectory: {status}");
        let (status, body) = call(ureq::get(&format!("{base}/api/runs/unknown")).call());
        ensure!(status == 404 && body["code"] == "NOT_FOUND", "unknown run: {status} {body}");

        let text = "the pole leans right and the cart chases it";
        let (backend, run) = spawn_human_run(dir.path(), "live", text);
        wait_for_status(&base, "live", "awaiting_feedback");
        let (_, event) = first_sse_event(handle.addr());
        ensure!(event.starts_with("event: status"), "SSE: {event}");
        let feedback = |id: &str, k: u32, body: String| {
            call(ureq::post(&format!("{base}/api/runs/{id}/candidates/{k}/feedback")).send_string(&body))
        };
        let (status, body) = feedback("live", 0, r#"{"text": "", "verdict": "revise"}"#.into());
        ensure!(status == 400, "empty revise: {status} {body}");
        let (status, body) = feedback("live", 0, serde_json::json!({"text": text, "verdict": "revise"}).to_string());
        ensure!(status == 200, "POST on awaiting run: {status} {body}");
        let record = run.join().map_err(|_| "pipeline thread panicked")?.map_err(|e| e.to_string())?;
        ensure!(record.status == rewardforge::pipeline::RunStatus::Done, "resumed run ended {:?}", record.status);
        ensure!(record.candidates.len() == 2 && backend.remaining() == 0, "pipeline did not refine after feedback");
        let (status, _) = feedback("live", 0, serde_json::json!({"text": text, "verdict": "revise"}).to_string());
        ensure!(status == 409, "POST on finished run: {status}");
        Ok("GET endpoints match, POST 200 resumes the run, 409 when finished, SSE streams status".into())
    })();
    handle.shutdown();
    let detail = result?;
    within(start, Duration::from_secs(120), detail)
}

fn main() {
    let criteria: [Criterion; 7] = [
        ("DSL correctness", dsl_correctness),
        ("environment fidelity", env_fidelity),
        ("learning direction (25k-step budget)", learning_direction),
        ("repair loop", repair_loop),
        ("end-to-end offline run", end_to_end),
        ("determinism", determinism),
        ("API contract", api_contract),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            let msg = p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        match outcome {
            Ok(detail) => println!("PASS {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL {name}: {detail}");
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
