use base64::Engine;
use rewardforge_core::envs::{describe, render_state, EnvId, Scene, TrajectoryLog};

use super::prompts::build_vlm_request;
use super::raster::render_png;
use super::{ImageData, LlmClient, LlmError, ModelRole};

fn legacy_return(log: &TrajectoryLog) -> f64 {
    log.steps.iter().map(|s| s.legacy_reward).sum()
}

/// Evenly spaced scenes from the best and the worst episode (by legacy
/// return, first on ties), best first.
pub fn sample_frames(env: EnvId, logs: &[TrajectoryLog], frame_count: usize) -> Vec<Scene> {
    let mut best = 0;
    let mut worst = 0;
    for (i, log) in logs.iter().enumerate() {
        if legacy_return(log) > legacy_return(&logs[best]) {
            best = i;
        }
        if legacy_return(log) < legacy_return(&logs[worst]) {
            worst = i;
        }
    }
    let mut states: Vec<&[f64]> = logs[best].steps.iter().map(|s| s.observation.as_slice()).collect();
    if worst != best {
        states.extend(logs[worst].steps.iter().map(|s| s.observation.as_slice()));
    }
    if states.is_empty() {
        return Vec::new();
    }
    let last = states.len() - 1;
    (0..frame_count)
        .map(|i| {
            let idx = if frame_count == 1 { 0 } else { (i * last + (frame_count - 1) / 2) / (frame_count - 1) };
            render_state(env, states[idx])
        })
        .collect()
}

/// Asks the vision model to describe the policy from rendered frames.
pub fn describe_behavior_vlm(
    client: &LlmClient,
    env: EnvId,
    logs: &[TrajectoryLog],
    frame_count: usize,
) -> Result<String, LlmError> {
    if !client.vlm.vision_capable {
        return Err(LlmError::VisionUnsupported(client.vlm.model.clone()));
    }
    let frames: Vec<ImageData> = sample_frames(env, logs, frame_count.max(1))
        .iter()
        .map(|scene| ImageData {
            media_type: "image/png".into(),
            data: base64::engine::general_purpose::STANDARD.encode(render_png(scene)),
        })
        .collect();
    let messages = build_vlm_request(&describe(env), &frames, logs.len());
    client.chat(ModelRole::Vlm, &messages, client.vlm.temperature)
}
