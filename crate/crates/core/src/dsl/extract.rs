use alloc::string::String;
use alloc::vec::Vec;

use super::diagnostic::{Diagnostic, DiagnosticCode};

/// Pulls reward program source out of a free-form model response.
///
/// Takes the first fenced block (three backticks, any info string). Without
/// a fence, takes the lines from the first one starting with `let` or
/// `return` up to the last line ending in `;`.
pub fn extract_program(chat_text: &str) -> Result<String, Diagnostic> {
    let lines: Vec<&str> = chat_text.lines().collect();

    if let Some(open) = lines.iter().position(|l| l.trim_start().starts_with("```")) {
        let body = &lines[open + 1..];
        let close = body.iter().position(|l| l.trim_start().starts_with("```")).unwrap_or(body.len());
        let code = body[..close].join("\n");
        if !code.trim().is_empty() {
            return Ok(code.trim_end().into());
        }
    }

    let starts_statement = |line: &&str| {
        let line = line.trim_start();
        ["let", "return"].iter().any(|kw| {
            line.strip_prefix(kw)
                .is_some_and(|rest| rest.is_empty() || rest.starts_with(|c: char| !c.is_ascii_alphanumeric() && c != '_'))
        })
    };
    if let Some(start) = lines.iter().position(starts_statement) {
        if let Some(end) = lines.iter().rposition(|l| l.trim_end().ends_with(';')).filter(|end| *end >= start) {
            return Ok(lines[start..=end].join("\n").trim().into());
        }
    }

    Err(Diagnostic::error(
        DiagnosticCode::ExtractNoCode,
        "no reward program found in the response",
        None,
    )
    .with_hint("reply with a single fenced code block containing the program"))
}
