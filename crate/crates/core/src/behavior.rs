//! Deterministic textual summary of evaluation episodes, used as feedback
//! when no vision model or human reviewer is involved.

use alloc::string::String;
use core::fmt::Write;

use crate::envs::{EnvError, EnvId, TerminationCause, TrajectoryLog};

/// Summarises what a policy did across `logs`.
///
/// Format: `Across {n} evaluation episodes: success rate {sr:.2}; mean
/// episode length {len:.1} steps. ` then `{name}: mean {m:.3}, range [{lo:.3},
/// {hi:.3}]. ` per observation variable, then `Termination causes: ` with
/// `{cause} {pct:.0}%` for every cause that occurred, comma separated, and a
/// final period.
pub fn describe_behavior(env: EnvId, logs: &[TrajectoryLog]) -> Result<String, EnvError> {
    if logs.is_empty() {
        return Err(EnvError::EmptyLogs);
    }
    let n = logs.len();
    let success_rate = logs.iter().filter(|l| l.success).count() as f64 / n as f64;
    let mean_len = logs.iter().map(|l| l.episode_length as f64).sum::<f64>() / n as f64;

    let mut out = String::new();
    let _ = write!(
        out,
        "Across {n} evaluation episodes: success rate {success_rate:.2}; mean episode length {mean_len:.1} steps. "
    );

    let spec = env.observation_spec();
    for (d, var) in spec.variables().iter().enumerate() {
        let (mut sum, mut lo, mut hi, mut count) = (0.0, f64::INFINITY, f64::NEG_INFINITY, 0usize);
        for step in logs.iter().flat_map(|l| &l.steps) {
            let x = step.observation[d];
            sum += x;
            lo = lo.min(x);
            hi = hi.max(x);
            count += 1;
        }
        if count == 0 {
            (lo, hi) = (0.0, 0.0);
        }
        let mean = sum / count.max(1) as f64;
        let _ = write!(out, "{}: mean {mean:.3}, range [{lo:.3}, {hi:.3}]. ", var.name);
    }

    out.push_str("Termination causes: ");
    let mut first = true;
    for cause in TerminationCause::ALL {
        let count = logs.iter().filter(|l| l.cause == cause).count();
        if count == 0 {
            continue;
        }
        if !first {
            out.push_str(", ");
        }
        first = false;
        let pct = 100.0 * count as f64 / n as f64;
        let _ = write!(out, "{cause} {pct:.0}%");
    }
    out.push('.');
    Ok(out)
}
