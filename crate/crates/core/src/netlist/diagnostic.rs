use std::fmt;

use super::Span;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Severity {
    Error,
    Warning,
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Severity::Error => "error",
            Severity::Warning => "warning",
        })
    }
}

/// Stable rule identifiers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Rule {
    /// Syntax.
    Syn,
    /// Bipolar source into a digital input without the 1 kΩ series resistor.
    R1,
    /// Non-unipolar signal into the frequency counter.
    R2,
    /// Bipolar source straight into an ADC channel.
    R3,
    /// 5 V supply budget.
    R4,
    /// Inverting amplifier missing an inserted resistor.
    R5,
    /// Two sources driving the same net.
    R6,
    /// CCS load beyond compliance.
    R7,
    /// Resistor or wire in a position the engine does not model.
    R8,
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Rule::Syn => "SYN",
            Rule::R1 => "R1",
            Rule::R2 => "R2",
            Rule::R3 => "R3",
            Rule::R4 => "R4",
            Rule::R5 => "R5",
            Rule::R6 => "R6",
            Rule::R7 => "R7",
            Rule::R8 => "R8",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub severity: Severity,
    pub rule: Rule,
    pub message: String,
    pub line: usize,
    pub column: usize,
}

impl Diagnostic {
    pub(crate) fn new(severity: Severity, rule: Rule, span: Span, message: impl Into<String>) -> Self {
        Self {
            severity,
            rule,
            message: message.into(),
            line: span.line,
            column: span.column,
        }
    }

    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }

    /// `file:line:col: severity[rule]: message`
    pub fn render(&self, file: &str) -> String {
        format!(
            "{file}:{}:{}: {}[{}]: {}",
            self.line, self.column, self.severity, self.rule, self.message
        )
    }
}

pub fn has_errors(diagnostics: &[Diagnostic]) -> bool {
    diagnostics.iter().any(Diagnostic::is_error)
}

/// One rendered diagnostic per line, each terminated by a newline.
pub fn render_all(diagnostics: &[Diagnostic], file: &str) -> String {
    diagnostics
        .iter()
        .map(|d| d.render(file) + "\n")
        .collect()
}
