use std::fmt::Write;

use rewardforge_core::dsl::{extract_program, parse, typecheck, Diagnostic, TypedProgram, DEFAULT_R_MAX};
use rewardforge_core::envs::EnvId;
use rewardforge_core::ObservationSpec;

use super::types::RequestRecord;
use crate::llm::prompts::{build_generation_request, RepairContext, GRAMMAR_REFERENCE};
use crate::llm::{LlmClient, LlmError, ModelRole, CODER_GENERATION_TEMPERATURE, CODER_REPAIR_TEMPERATURE};

pub const MAX_PROBES: usize = 16;

/// Outcome of the generate-validate-repair loop.
#[derive(Debug, Clone)]
pub struct Draft {
    pub program: Option<TypedProgram>,
    pub attempts: u32,
    pub diagnostics: Vec<Vec<Diagnostic>>,
    pub requests: Vec<RequestRecord>,
}

impl Draft {
    pub fn source(&self) -> Option<&str> {
        self.program.as_ref().map(|p| p.source())
    }
}

/// The midpoint of the observation bounds, then corners in binary order (bit d set = high bound
/// of variable d), at most [`MAX_PROBES`] points in total.
pub fn probe_points(spec: &ObservationSpec) -> Vec<Vec<f64>> {
    let vars = spec.variables();
    let mut points = vec![vars.iter().map(|v| 0.5 * (v.low + v.high)).collect::<Vec<_>>()];
    let corners = 1usize.checked_shl(vars.len() as u32).unwrap_or(usize::MAX);
    for mask in 0..corners {
        if points.len() == MAX_PROBES {
            break;
        }
        points.push(vars.iter().enumerate().map(|(d, v)| if mask >> d & 1 == 1 { v.high } else { v.low }).collect());
    }
    points
}

/// Evaluates the program on every probe point with success and failure false.
pub fn probe(program: &TypedProgram, spec: &ObservationSpec) -> Result<(), Diagnostic> {
    for point in probe_points(spec) {
        if let Err(mut diagnostic) = program.evaluate(&point, false, false, DEFAULT_R_MAX) {
            let mut at = String::new();
            for (i, (name, value)) in spec.names().zip(&point).enumerate() {
                let sep = if i == 0 { "" } else { ", " };
                let _ = write!(at, "{sep}{name} = {value:?}");
            }
            diagnostic.message = format!("{} when probed at {at}", diagnostic.message);
            return Err(diagnostic);
        }
    }
    Ok(())
}

/// Extracted source (when extraction worked) and all errors of one response.
fn check_response(response: &str, spec: &ObservationSpec) -> Result<TypedProgram, (Vec<Diagnostic>, Option<String>)> {
    let source = extract_program(response).map_err(|d| (vec![d], None))?;
    let fail = |ds: Vec<Diagnostic>| (ds, Some(source.clone()));
    let program = parse(&source).map_err(fail)?;
    let typed = typecheck(&program, spec).map_err(fail)?;
    probe(&typed, spec).map_err(|d| fail(vec![d]))?;
    Ok(typed)
}

/// Asks the coder for a program until one parses, type-checks and survives
/// the probe grid, or `budget` attempts are used.
pub fn generate_candidate(
    client: &LlmClient,
    env: EnvId,
    stepback: &str,
    d_env: &str,
    goal: Option<&str>,
    budget: u32,
) -> Result<Draft, LlmError> {
    let spec = env.observation_spec();
    let mut draft = Draft { program: None, attempts: 0, diagnostics: Vec::new(), requests: Vec::new() };
    let mut repair: Option<RepairContext> = None;
    for attempt in 1..=budget.max(1) {
        let messages =
            build_generation_request(stepback, d_env, env.success_description(), GRAMMAR_REFERENCE, goal, repair.as_ref());
        let (purpose, temperature) =
            if attempt == 1 { ("generation", CODER_GENERATION_TEMPERATURE) } else { ("repair", CODER_REPAIR_TEMPERATURE) };
        let response = client.chat(ModelRole::Coder, &messages, temperature)?;
        draft.requests.push(RequestRecord { purpose: purpose.into(), temperature, messages, response: response.clone() });
        draft.attempts = attempt;
        match check_response(&response, &spec) {
            Ok(program) => {
                draft.program = Some(program);
                return Ok(draft);
            }
            Err((diagnostics, previous_source)) => {
                draft.diagnostics.push(diagnostics.clone());
                repair = Some(RepairContext { diagnostics, previous_source });
            }
        }
    }
    Ok(draft)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cartpole_probes_midpoint_then_fifteen_corners() {
        let spec = EnvId::CartPole.observation_spec();
        let points = probe_points(&spec);
        assert_eq!(points.len(), 16);
        assert_eq!(points[0], vec![0.0; 4]);
        assert_eq!(points[1], spec.variables().iter().map(|v| v.low).collect::<Vec<_>>());
    }

    #[test]
    fn mountaincar_has_all_four_corners() {
        let points = probe_points(&EnvId::MountainCar.observation_spec());
        assert_eq!(points.len(), 5);
        assert!((points[0][0] + 0.3).abs() < 1e-12);
    }
}
