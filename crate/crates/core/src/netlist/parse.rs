use std::collections::HashSet;

use super::{
    parse_ohms, resistor_role, AmpParam, Diagnostic, Netlist, ResistorRole, Rule, Severity,
    SocketId, Span, Statement,
};

struct Token<'a> {
    text: &'a str,
    column: usize,
}

/// Splits a line into whitespace-separated tokens, dropping any `#` comment.
/// Columns count characters from 1.
fn tokenize(line: &str) -> Vec<Token<'_>> {
    let mut tokens = Vec::new();
    let mut start: Option<(usize, usize)> = None;
    let mut end_byte = line.len();
    for (column, (byte, ch)) in line.char_indices().enumerate() {
        if ch == '#' {
            end_byte = byte;
            break;
        }
        if ch.is_whitespace() {
            if let Some((b, c)) = start.take() {
                tokens.push(Token {
                    text: &line[b..byte],
                    column: c + 1,
                });
            }
        } else if start.is_none() {
            start = Some((byte, column));
        }
    }
    if let Some((b, c)) = start {
        tokens.push(Token {
            text: &line[b..end_byte],
            column: c + 1,
        });
    }
    tokens
}

fn syn(line: usize, column: usize, message: String) -> Diagnostic {
    Diagnostic::new(Severity::Error, Rule::Syn, Span { line, column }, message)
}

struct LineParser<'a> {
    line: usize,
    tokens: Vec<Token<'a>>,
    pos: usize,
}

impl<'a> LineParser<'a> {
    fn keyword_column(&self) -> usize {
        self.tokens[0].column
    }

    fn next(&mut self, what: &str) -> Result<&Token<'a>, Diagnostic> {
        let keyword = self.tokens[0].text.to_ascii_lowercase();
        match self.tokens.get(self.pos) {
            Some(_) => {
                self.pos += 1;
                Ok(&self.tokens[self.pos - 1])
            }
            None => Err(syn(
                self.line,
                self.keyword_column(),
                format!("`{keyword}` is missing its {what}"),
            )),
        }
    }

    fn socket(&mut self) -> Result<SocketId, Diagnostic> {
        let line = self.line;
        let tok = self.next("socket argument")?;
        tok.text
            .parse()
            .map_err(|_| syn(line, tok.column, format!("unknown socket \"{}\"", tok.text)))
    }

    fn ohms(&mut self) -> Result<f64, Diagnostic> {
        let line = self.line;
        let tok = self.next("resistance value")?;
        parse_ohms(tok.text).ok_or_else(|| {
            syn(
                line,
                tok.column,
                format!("malformed resistance \"{}\"", tok.text),
            )
        })
    }

    fn param(&mut self) -> Result<AmpParam, Diagnostic> {
        let line = self.line;
        let tok = self.next("parameter name")?;
        tok.text.parse().map_err(|_| {
            syn(
                line,
                tok.column,
                format!("unknown amplifier parameter \"{}\"", tok.text),
            )
        })
    }

    fn finish(&self) -> Result<(), Diagnostic> {
        match self.tokens.get(self.pos) {
            Some(tok) => Err(syn(
                self.line,
                tok.column,
                format!("unexpected \"{}\"", tok.text),
            )),
            None => Ok(()),
        }
    }

    fn statement(&mut self) -> Result<Statement, Diagnostic> {
        let keyword = self.tokens[0].text.to_ascii_lowercase();
        self.pos = 1;
        let stmt = match keyword.as_str() {
            "connect" => {
                let from = self.socket()?;
                let to = self.socket()?;
                let series = match self.tokens.get(self.pos) {
                    Some(tok) if tok.text.eq_ignore_ascii_case("series") => {
                        self.pos += 1;
                        Some(self.ohms()?)
                    }
                    _ => None,
                };
                Statement::Connect { from, to, series }
            }
            "resistor" => {
                let ohms = self.ohms()?;
                let a = self.socket()?;
                let b = self.socket()?;
                Statement::Resistor { ohms, a, b }
            }
            "insert" => {
                let param = self.param()?;
                let ohms = self.ohms()?;
                Statement::Insert { param, ohms }
            }
            _ => {
                return Err(syn(
                    self.line,
                    self.keyword_column(),
                    format!("unknown statement \"{}\"", self.tokens[0].text),
                ))
            }
        };
        self.finish()?;
        Ok(stmt)
    }
}

/// Parses patch text. Every malformed line yields exactly one SYN
/// diagnostic; parsing continues with the next line.
pub fn parse(source: &str) -> Result<Netlist, Vec<Diagnostic>> {
    let mut netlist = Netlist::new();
    let mut diagnostics = Vec::new();
    let mut pairs: HashSet<(SocketId, SocketId)> = HashSet::new();
    let mut params: HashSet<AmpParam> = HashSet::new();

    for (idx, raw) in source.split('\n').enumerate() {
        let line = idx + 1;
        let tokens = tokenize(raw.strip_suffix('\r').unwrap_or(raw));
        if tokens.is_empty() {
            continue;
        }
        let column = tokens[0].column;
        let mut parser = LineParser { line, tokens, pos: 0 };
        let stmt = match parser.statement() {
            Ok(stmt) => stmt,
            Err(d) => {
                diagnostics.push(d);
                continue;
            }
        };

        let wire = match stmt {
            Statement::Connect { from, to, .. } => Some((from, to)),
            Statement::Resistor { a, b, .. } => match resistor_role(a, b) {
                ResistorRole::Series { from, to } => Some((from, to)),
                _ if a == b => Some((a, b)),
                _ => None,
            },
            Statement::Insert { .. } => None,
        };
        if let Some((a, b)) = wire {
            if a == b {
                diagnostics.push(syn(line, column, format!("{a} is wired to itself")));
                continue;
            }
            let key = (a.min(b), a.max(b));
            if !pairs.insert(key) {
                diagnostics.push(syn(
                    line,
                    column,
                    format!("duplicate connection between {} and {}", key.0, key.1),
                ));
                continue;
            }
        }
        if let Statement::Insert { param, .. } = stmt {
            if !params.insert(param) {
                diagnostics.push(syn(line, column, format!("{param} is already inserted")));
                continue;
            }
        }
        netlist.push_spanned(stmt, Span { line, column });
    }

    if diagnostics.is_empty() {
        Ok(netlist)
    } else {
        Err(diagnostics)
    }
}
