use alloc::string::String;
use core::fmt;

/// A region of source text. Lines and columns are 1-based; the end position
/// is exclusive (one past the last character).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SourceSpan {
    pub start_line: u32,
    pub start_col: u32,
    pub end_line: u32,
    pub end_col: u32,
}

impl SourceSpan {
    pub fn new(start_line: u32, start_col: u32, end_line: u32, end_col: u32) -> Self {
        Self { start_line, start_col, end_line, end_col }
    }

    /// Smallest span covering both.
    pub fn join(self, other: SourceSpan) -> SourceSpan {
        let start = (self.start_line, self.start_col).min((other.start_line, other.start_col));
        let end = (self.end_line, self.end_col).max((other.end_line, other.end_col));
        SourceSpan::new(start.0, start.1, end.0, end.1)
    }
}

impl fmt::Display for SourceSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}-{}:{}", self.start_line, self.start_col, self.end_line, self.end_col)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "SCREAMING_SNAKE_CASE"))]
pub enum DiagnosticCode {
    ParseUnexpectedToken,
    ParseUnterminated,
    ParseArity,
    UnknownIdentifier,
    TypeMismatch,
    DuplicateBinding,
    ClampBounds,
    DomainFault,
    NonfiniteResult,
    ExtractNoCode,
}

impl DiagnosticCode {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::ParseUnexpectedToken => "PARSE_UNEXPECTED_TOKEN",
            Self::ParseUnterminated => "PARSE_UNTERMINATED",
            Self::ParseArity => "PARSE_ARITY",
            Self::UnknownIdentifier => "UNKNOWN_IDENTIFIER",
            Self::TypeMismatch => "TYPE_MISMATCH",
            Self::DuplicateBinding => "DUPLICATE_BINDING",
            Self::ClampBounds => "CLAMP_BOUNDS",
            Self::DomainFault => "DOMAIN_FAULT",
            Self::NonfiniteResult => "NONFINITE_RESULT",
            Self::ExtractNoCode => "EXTRACT_NO_CODE",
        }
    }

    /// Runtime faults, as opposed to static errors.
    pub fn is_runtime(self) -> bool {
        matches!(self, Self::DomainFault | Self::NonfiniteResult)
    }
}

impl fmt::Display for DiagnosticCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Diagnostic {
    pub severity: Severity,
    pub code: DiagnosticCode,
    pub message: String,
    pub span: Option<SourceSpan>,
    pub hint: Option<String>,
}

impl Diagnostic {
    pub fn error(code: DiagnosticCode, message: impl Into<String>, span: Option<SourceSpan>) -> Self {
        let message = message.into();
        debug_assert!(!message.is_empty());
        Self { severity: Severity::Error, code, message, span, hint: None }
    }

    pub fn warning(code: DiagnosticCode, message: impl Into<String>, span: Option<SourceSpan>) -> Self {
        Self { severity: Severity::Warning, ..Self::error(code, message, span) }
    }

    pub fn with_hint(mut self, hint: impl Into<String>) -> Self {
        self.hint = Some(hint.into());
        self
    }

    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }
}

/// `error[CODE] line:col-line:col: message`, followed by ` (hint: ...)` when
/// a hint is present. This is the exact form quoted back to the coder model.
impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let severity = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        write!(f, "{severity}[{}]", self.code)?;
        if let Some(span) = self.span {
            write!(f, " {span}")?;
        }
        write!(f, ": {}", self.message)?;
        if let Some(hint) = &self.hint {
            write!(f, " (hint: {hint})")?;
        }
        Ok(())
    }
}
