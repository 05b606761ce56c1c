//! Prompt construction. Templates live in `templates/` as plain text with
//! `{{name}}` placeholders; every builder is a pure function of its inputs.

use std::collections::BTreeMap;
use std::fmt::Write;

use rewardforge_core::dsl::Diagnostic;
use rewardforge_core::learner::TrainingReport;

use super::{ChatMessage, GoalPrompt, ImageData};

pub const TEMPLATE_VERSION: u32 = 1;

pub const CRITIC_SYSTEM: &str = include_str!("../../templates/critic_system.txt");
pub const STEPBACK_USER: &str = include_str!("../../templates/stepback_user.txt");
pub const CODER_SYSTEM: &str = include_str!("../../templates/coder_system.txt");
pub const GENERATION_USER: &str = include_str!("../../templates/generation_user.txt");
pub const REPAIR: &str = include_str!("../../templates/repair.txt");
pub const FIX_ERRORS: &str = include_str!("../../templates/fix_errors.txt");
pub const REFINEMENT_USER: &str = include_str!("../../templates/refinement_user.txt");
pub const VLM_SYSTEM: &str = include_str!("../../templates/vlm_system.txt");
pub const VLM_USER: &str = include_str!("../../templates/vlm_user.txt");

/// Reference for the reward language, quoted once in every coder request.
pub const GRAMMAR_REFERENCE: &str = include_str!("../../templates/grammar.txt");

/// Substitutes `{{key}}` placeholders in one pass; substituted text is not
/// rescanned. Unknown placeholders are left as they are.
pub fn render(template: &str, values: &[(&str, &str)]) -> String {
    let mut out = String::with_capacity(template.len());
    let mut rest = template;
    while let Some(start) = rest.find("{{") {
        out.push_str(&rest[..start]);
        let after = &rest[start + 2..];
        match after.find("}}") {
            Some(end) => {
                let key = &after[..end];
                match values.iter().find(|(k, _)| *k == key) {
                    Some((_, v)) => out.push_str(v),
                    None => {
                        out.push_str("{{");
                        out.push_str(key);
                        out.push_str("}}");
                    }
                }
                rest = &after[end + 2..];
            }
            None => {
                out.push_str(&rest[start..]);
                rest = "";
            }
        }
    }
    out.push_str(rest);
    out
}

fn goal_text(goal: &GoalPrompt) -> String {
    match (&goal.text, &goal.image) {
        (Some(text), None) => text.clone(),
        (Some(text), Some(_)) => format!("{text}\n(An annotated image of the goal is attached.)"),
        (None, _) => "(No text was given; the goal is shown in the attached annotated image.)".into(),
    }
}

fn attach_goal_image(message: ChatMessage, goal: &GoalPrompt) -> ChatMessage {
    match &goal.image {
        Some(image) => message.with_image(image),
        None => message,
    }
}

/// Step-back request to the critic.
pub fn build_stepback_request(goal: &GoalPrompt, d_env: &str) -> Vec<ChatMessage> {
    let user = render(STEPBACK_USER, &[("d_env", d_env), ("goal", &goal_text(goal))]);
    vec![ChatMessage::system(CRITIC_SYSTEM), attach_goal_image(ChatMessage::user(user), goal)]
}

/// What the coder got wrong last time.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RepairContext {
    pub diagnostics: Vec<Diagnostic>,
    pub previous_source: Option<String>,
}

/// Coder request. With `repair`, the previous program (when one was
/// extracted) and every diagnostic's display form are quoted verbatim.
pub fn build_generation_request(
    stepback: &str,
    d_env: &str,
    success_description: &str,
    grammar_reference: &str,
    goal: Option<&str>,
    repair: Option<&RepairContext>,
) -> Vec<ChatMessage> {
    let mut repair_text = String::new();
    if let Some(ctx) = repair {
        if let Some(previous) = &ctx.previous_source {
            repair_text.push_str(&render(REPAIR, &[("previous", previous)]));
        }
        if !ctx.diagnostics.is_empty() {
            let list: Vec<String> = ctx.diagnostics.iter().map(|d| format!("- {d}")).collect();
            repair_text.push_str(&render(FIX_ERRORS, &[("diagnostics", &list.join("\n"))]));
        }
    }
    let user = render(
        GENERATION_USER,
        &[
            ("stepback", stepback),
            ("d_env", d_env),
            ("goal", goal.unwrap_or("(see the supervisor instructions)")),
            ("success", success_description),
            ("grammar", grammar_reference.trim_end()),
            ("repair", &repair_text),
        ],
    );
    vec![ChatMessage::system(CODER_SYSTEM), ChatMessage::user(user)]
}

/// Everything the critic is told about a trained candidate.
#[derive(Debug, Clone, Copy)]
pub struct CandidateSummary<'a> {
    pub id: u32,
    pub source: &'a str,
    pub success_rate: f64,
    pub baseline_rate: Option<f64>,
    pub metrics: &'a BTreeMap<String, f64>,
    pub report: &'a TrainingReport,
}

pub fn format_rate(rate: f64) -> String {
    format!("{rate:.4}")
}

pub fn build_refinement_request(
    candidate: &CandidateSummary<'_>,
    feedback: &str,
    goal: &GoalPrompt,
    d_env: &str,
) -> Vec<ChatMessage> {
    let metrics = if candidate.metrics.is_empty() {
        "none".to_string()
    } else {
        candidate.metrics.iter().map(|(k, v)| format!("{k} = {v:.4}")).collect::<Vec<_>>().join(", ")
    };
    let mut stats = String::new();
    for s in &candidate.report.observation_stats {
        let _ = writeln!(stats, "  - {}: mean {:.4}, min {:.4}, max {:.4}", s.name, s.mean, s.min, s.max);
    }
    let baseline = candidate
        .baseline_rate
        .map(|b| format!("- legacy reward baseline success rate: {}\n", format_rate(b)))
        .unwrap_or_default();
    let user = render(
        REFINEMENT_USER,
        &[
            ("d_env", d_env),
            ("goal", &goal_text(goal)),
            ("candidate", &candidate.id.to_string()),
            ("source", candidate.source),
            ("success_rate", &format_rate(candidate.success_rate)),
            ("baseline", &baseline),
            ("metrics", &metrics),
            ("episodes", &candidate.report.completed_episodes().to_string()),
            ("total_steps", &candidate.report.total_steps.to_string()),
            ("clamp_events", &candidate.report.clamp_events.to_string()),
            ("fault_count", &candidate.report.fault_count.to_string()),
            ("observation_stats", stats.trim_end()),
            ("feedback", feedback),
        ],
    );
    vec![ChatMessage::system(CRITIC_SYSTEM), attach_goal_image(ChatMessage::user(user), goal)]
}

pub fn build_vlm_request(d_env: &str, frames: &[ImageData], episodes: usize) -> Vec<ChatMessage> {
    let user = render(
        VLM_USER,
        &[("frame_count", &frames.len().to_string()), ("episodes", &episodes.to_string()), ("d_env", d_env)],
    );
    let message = frames.iter().fold(ChatMessage::user(user), |m, f| m.with_image(f));
    vec![ChatMessage::system(VLM_SYSTEM), message]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn render_is_single_pass() {
        assert_eq!(render("a {{x}} b {{y}}", &[("x", "{{y}}"), ("y", "2")]), "a {{y}} b 2");
        assert_eq!(render("{{missing}} {{", &[]), "{{missing}} {{");
    }

    #[test]
    fn templates_have_no_stray_placeholders() {
        let filled = build_generation_request("s", "d", "f", GRAMMAR_REFERENCE, Some("g"), None);
        assert!(!super::super::request_text(&filled).contains("{{"));
    }
}
