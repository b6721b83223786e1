//! The patch-file wiring language.
//!
//! One statement per line:
//!
//! ```text
//! connect <socket> <socket> [series <ohms>]
//! resistor <ohms> <socket> <socket>
//! insert <param> <ohms>
//! ```
//!
//! `#` starts a comment. Resistances take an optional `k` or `M` suffix.
//! Socket names are case-insensitive and canonicalised to upper case.

mod diagnostic;
mod lint;
mod parse;
mod socket;
mod topology;

use std::collections::BTreeMap;
use std::fmt::Write as _;

pub use diagnostic::{has_errors, render_all, Diagnostic, Rule, Severity};
pub use lint::lint;
pub use parse::parse;
pub use socket::{AmpId, AmpParam, Direction, SocketId, UnknownName};
pub use topology::{Contention, Topology, Wire};

use crate::panel::Ohms;

/// Position of a statement's first character (1-based).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Span {
    pub line: usize,
    pub column: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Statement {
    Connect {
        from: SocketId,
        to: SocketId,
        series: Option<Ohms>,
    },
    Resistor {
        ohms: Ohms,
        a: SocketId,
        b: SocketId,
    },
    Insert {
        param: AmpParam,
        ohms: Ohms,
    },
}

impl Statement {
    /// Sockets the statement touches.
    pub fn sockets(&self) -> Vec<SocketId> {
        match *self {
            Statement::Connect { from, to, .. } => vec![from, to],
            Statement::Resistor { a, b, .. } => vec![a, b],
            Statement::Insert { .. } => Vec::new(),
        }
    }
}

/// How the engine interprets a `resistor` statement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ResistorRole {
    /// Resistive load from a source to ground.
    Load(SocketId),
    /// Series element between a source and a sink.
    Series { from: SocketId, to: SocketId },
    /// Gain resistor from NONINV.RG to ground.
    Gain,
    Unmodeled,
}

pub fn resistor_role(a: SocketId, b: SocketId) -> ResistorRole {
    let (other, grounded) = if b == SocketId::Gnd {
        (a, true)
    } else if a == SocketId::Gnd {
        (b, true)
    } else {
        (a, false)
    };
    if grounded {
        return match other {
            SocketId::NoninvRg => ResistorRole::Gain,
            SocketId::Ccs | SocketId::V5 => ResistorRole::Load(other),
            _ => ResistorRole::Unmodeled,
        };
    }
    match (a.direction(), b.direction()) {
        (Direction::Source, Direction::Sink) => ResistorRole::Series { from: a, to: b },
        (Direction::Sink, Direction::Source) => ResistorRole::Series { from: b, to: a },
        _ => ResistorRole::Unmodeled,
    }
}

/// A wire between two sockets, from either a `connect` or a series resistor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Connection {
    pub from: SocketId,
    pub to: SocketId,
    pub series_r: Ohms,
    pub span: Span,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Load {
    pub socket: SocketId,
    pub r_to_gnd: Ohms,
    pub span: Span,
}

/// Parsed wiring description. Statement order follows the source.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Netlist {
    statements: Vec<(Statement, Span)>,
}

/// Resistance of a `connect` without an explicit `series` clause.
pub const DEFAULT_SERIES: Ohms = 1.0;

impl Netlist {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends a statement positioned as if the netlist had been formatted.
    pub fn push(&mut self, stmt: Statement) {
        let line = self.statements.len() + 1;
        self.statements.push((stmt, Span { line, column: 1 }));
    }

    pub(crate) fn push_spanned(&mut self, stmt: Statement, span: Span) {
        self.statements.push((stmt, span));
    }

    pub fn len(&self) -> usize {
        self.statements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.statements.is_empty()
    }

    pub fn statements(&self) -> impl Iterator<Item = &Statement> {
        self.statements.iter().map(|(s, _)| s)
    }

    pub fn spanned(&self) -> impl Iterator<Item = (&Statement, Span)> {
        self.statements.iter().map(|(s, span)| (s, *span))
    }

    /// Equality ignoring source positions.
    pub fn same_structure(&self, other: &Netlist) -> bool {
        self.statements().eq(other.statements())
    }

    pub fn connections(&self) -> Vec<Connection> {
        self.spanned()
            .filter_map(|(stmt, span)| match *stmt {
                Statement::Connect { from, to, series } => Some(Connection {
                    from,
                    to,
                    series_r: series.unwrap_or(DEFAULT_SERIES),
                    span,
                }),
                Statement::Resistor { ohms, a, b } => match resistor_role(a, b) {
                    ResistorRole::Series { from, to } => Some(Connection {
                        from,
                        to,
                        series_r: ohms,
                        span,
                    }),
                    _ => None,
                },
                Statement::Insert { .. } => None,
            })
            .collect()
    }

    pub fn inserted(&self) -> BTreeMap<AmpParam, Ohms> {
        self.statements()
            .filter_map(|stmt| match *stmt {
                Statement::Insert { param, ohms } => Some((param, ohms)),
                _ => None,
            })
            .collect()
    }

    pub fn loads(&self) -> Vec<Load> {
        self.spanned()
            .filter_map(|(stmt, span)| match *stmt {
                Statement::Resistor { ohms, a, b } => match resistor_role(a, b) {
                    ResistorRole::Load(socket) => Some(Load {
                        socket,
                        r_to_gnd: ohms,
                        span,
                    }),
                    _ => None,
                },
                _ => None,
            })
            .collect()
    }

    /// Effective NONINV gain resistor: every inserted or grounded resistor
    /// on the gain socket in parallel. `None` when the socket is open.
    pub fn gain_resistor(&self) -> Option<Ohms> {
        let conductance: f64 = self
            .statements()
            .filter_map(|stmt| match *stmt {
                Statement::Insert {
                    param: AmpParam::NoninvRg,
                    ohms,
                } => Some(1.0 / ohms),
                Statement::Resistor { ohms, a, b } if resistor_role(a, b) == ResistorRole::Gain => {
                    Some(1.0 / ohms)
                }
                _ => None,
            })
            .sum();
        (conductance > 0.0).then(|| 1.0 / conductance)
    }

    /// Parallel combination of the loads declared on `socket`.
    pub fn load_on(&self, socket: SocketId) -> Option<Ohms> {
        let conductance: f64 = self
            .loads()
            .iter()
            .filter(|l| l.socket == socket)
            .map(|l| 1.0 / l.r_to_gnd)
            .sum();
        (conductance > 0.0).then(|| 1.0 / conductance)
    }

    /// Canonical patch text; `parse(&n.format())` has the same structure as `n`.
    pub fn format(&self) -> String {
        let mut out = String::new();
        for stmt in self.statements() {
            match *stmt {
                Statement::Connect { from, to, series } => {
                    let _ = write!(out, "connect {from} {to}");
                    if let Some(r) = series {
                        let _ = write!(out, " series {}", format_ohms(r));
                    }
                }
                Statement::Resistor { ohms, a, b } => {
                    let _ = write!(out, "resistor {} {a} {b}", format_ohms(ohms));
                }
                Statement::Insert { param, ohms } => {
                    let _ = write!(out, "insert {param} {}", format_ohms(ohms));
                }
            }
            out.push('\n');
        }
        out
    }
}

/// Parses `1000`, `4.7k`, `2M`. Returns `None` for anything that is not a
/// finite positive resistance.
pub fn parse_ohms(text: &str) -> Option<Ohms> {
    let (digits, scale) = match text.chars().last()? {
        'k' | 'K' => (&text[..text.len() - 1], 1e3),
        'M' => (&text[..text.len() - 1], 1e6),
        _ => (text, 1.0),
    };
    if digits.is_empty() || !digits.chars().all(|c| c.is_ascii_digit() || c == '.') {
        return None;
    }
    let value = digits.parse::<f64>().ok()? * scale;
    (value.is_finite() && value > 0.0).then_some(value)
}

/// Shortest text that [`parse_ohms`] maps back to exactly `ohms`.
pub fn format_ohms(ohms: Ohms) -> String {
    for (suffix, scale) in [("M", 1e6), ("k", 1e3)] {
        if ohms >= scale {
            let text = format!("{}{suffix}", ohms / scale);
            if parse_ohms(&text) == Some(ohms) {
                return text;
            }
        }
    }
    // f64's Display never uses exponent notation.
    format!("{ohms}")
}
