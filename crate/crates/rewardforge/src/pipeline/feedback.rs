use std::io::BufRead;
use std::path::PathBuf;
use std::sync::mpsc;
use std::time::{Duration, Instant};

use super::persist::read_feedback;
use super::types::{FeedbackEvent, FeedbackSource, HumanVerdict, PipelineError};

/// Where human feedback comes from while a run is awaiting it.
pub trait HumanChannel: Send + Sync {
    /// Blocks until feedback for `candidate` arrives or `timeout` passes.
    /// `seen` is the number of events already in the run's feedback log.
    fn wait(&self, run_id: &str, candidate: u32, seen: usize, timeout: Duration) -> Result<Option<FeedbackEvent>, PipelineError>;
}

/// Polls `feedback.json`, which the HTTP server appends to.
pub struct FileChannel {
    pub runs_dir: PathBuf,
    pub poll: Duration,
}

impl FileChannel {
    pub fn new(runs_dir: impl Into<PathBuf>) -> Self {
        Self { runs_dir: runs_dir.into(), poll: Duration::from_millis(50) }
    }

    pub fn find(&self, run_id: &str, candidate: u32, seen: usize) -> Result<Option<FeedbackEvent>, PipelineError> {
        let events = read_feedback(&self.runs_dir, run_id)?;
        Ok(events.into_iter().skip(seen).find(|e| e.source == FeedbackSource::Human && e.candidate == candidate))
    }
}

impl HumanChannel for FileChannel {
    fn wait(&self, run_id: &str, candidate: u32, seen: usize, timeout: Duration) -> Result<Option<FeedbackEvent>, PipelineError> {
        let deadline = Instant::now() + timeout;
        loop {
            if let Some(event) = self.find(run_id, candidate, seen)? {
                return Ok(Some(event));
            }
            if Instant::now() >= deadline {
                return Ok(None);
            }
            std::thread::sleep(self.poll.min(deadline.saturating_duration_since(Instant::now())));
        }
    }
}

/// Parses one terminal line: `accept [comment]`, `reject [comment]`,
/// otherwise the whole line is revision feedback.
pub fn parse_terminal_line(candidate: u32, line: &str) -> Result<FeedbackEvent, String> {
    let line = line.trim();
    let (word, rest) = line.split_once(char::is_whitespace).unwrap_or((line, ""));
    match word.to_ascii_lowercase().as_str() {
        "accept" => FeedbackEvent::human(candidate, rest, HumanVerdict::Accept),
        "reject" => FeedbackEvent::human(candidate, rest, HumanVerdict::Reject),
        _ => FeedbackEvent::human(candidate, line, HumanVerdict::Revise),
    }
}

/// Prompts on stderr and reads stdin.
pub struct TerminalChannel {
    lines: std::sync::Mutex<mpsc::Receiver<String>>,
}

impl Default for TerminalChannel {
    fn default() -> Self {
        let (tx, rx) = mpsc::channel();
        std::thread::spawn(move || {
            for line in std::io::stdin().lock().lines() {
                let Ok(line) = line else { break };
                if tx.send(line).is_err() {
                    break;
                }
            }
        });
        Self { lines: std::sync::Mutex::new(rx) }
    }
}

impl HumanChannel for TerminalChannel {
    fn wait(&self, _: &str, candidate: u32, _: usize, timeout: Duration) -> Result<Option<FeedbackEvent>, PipelineError> {
        let deadline = Instant::now() + timeout;
        let lines = self.lines.lock().unwrap();
        loop {
            eprint!("feedback for candidate {candidate} (text to revise, `accept [comment]` or `reject [comment]`): ");
            let remaining = deadline.saturating_duration_since(Instant::now());
            match lines.recv_timeout(remaining) {
                Ok(line) => match parse_terminal_line(candidate, &line) {
                    Ok(event) => return Ok(Some(event)),
                    Err(msg) => eprintln!("{msg}"),
                },
                Err(_) => return Ok(None),
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn terminal_lines() {
        let e = parse_terminal_line(2, "the cart drifts right").unwrap();
        assert_eq!((e.verdict, e.text.as_str(), e.candidate), (Some(HumanVerdict::Revise), "the cart drifts right", 2));
        let e = parse_terminal_line(0, "accept").unwrap();
        assert_eq!(e.verdict, Some(HumanVerdict::Accept));
        assert!(!e.text.is_empty());
        assert!(parse_terminal_line(0, "   ").is_err());
    }
}
