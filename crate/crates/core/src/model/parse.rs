//! Reader for the LP-file subset used as interchange format.
//!
//! Recognized sections (keywords case-insensitive, each on its own line):
//! `Minimize`/`Maximize`, `Subject To`, `Bounds`, `Generals`, `Binaries`,
//! `End`. A backslash starts a comment that runs to the end of the line.
//! Expressions may wrap across lines.
//!
//! Variables are ordered by their position in the `Bounds` section first; any
//! variable not listed there follows in order of first appearance. The writer
//! lists every variable under `Bounds`, so declaration order survives a round
//! trip.

use std::collections::HashMap;

use thiserror::Error;

use super::{Constraint, LinExpr, Model, ModelError, Objective, ObjectiveSense, Sense, VarKind, Variable};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LpError {
    #[error("line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("line {line}: duplicate constraint name `{name}`")]
    DuplicateName { name: String, line: usize },
    #[error("invalid model: {0}")]
    Model(#[from] ModelError),
}

impl LpError {
    pub fn line(&self) -> Option<usize> {
        match self {
            LpError::Parse { line, .. } | LpError::DuplicateName { line, .. } => Some(*line),
            LpError::Model(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Number(f64),
    Plus,
    Minus,
    Colon,
    Cmp(Sense),
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    line: usize,
    col: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Section {
    Objective(ObjectiveSense),
    Constraints,
    Bounds,
    Generals,
    Binaries,
}

fn section_header(line: &str) -> Option<Option<Section>> {
    let normalized = line.split_whitespace().collect::<Vec<_>>().join(" ").to_ascii_lowercase();
    let section = match normalized.as_str() {
        "minimize" | "minimise" | "minimum" | "min" => Section::Objective(ObjectiveSense::Minimize),
        "maximize" | "maximise" | "maximum" | "max" => Section::Objective(ObjectiveSense::Maximize),
        "subject to" | "such that" | "st" | "s.t." | "st." => Section::Constraints,
        "bounds" | "bound" => Section::Bounds,
        "generals" | "general" | "gen" | "integers" => Section::Generals,
        "binaries" | "binary" | "bin" => Section::Binaries,
        "end" => return Some(None),
        _ => return None,
    };
    Some(Some(section))
}

fn is_name_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_'
}

fn is_name_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || "_.[](),#$%&!\"'{}~@?|`;/".contains(c)
}

fn tokenize_line(text: &str, line: usize, out: &mut Vec<Token>) -> Result<(), LpError> {
    let chars: Vec<char> = text.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let col = i + 1;
        let err = |message: String| LpError::Parse { line, column: col, message };
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        let tok = match c {
            '+' => {
                i += 1;
                Tok::Plus
            }
            '-' => {
                i += 1;
                Tok::Minus
            }
            ':' => {
                i += 1;
                Tok::Colon
            }
            '<' | '>' | '=' => {
                let next = chars.get(i + 1).copied();
                let (sense, width) = match (c, next) {
                    ('<', Some('=')) | ('=', Some('<')) => (Sense::Le, 2),
                    ('>', Some('=')) | ('=', Some('>')) => (Sense::Ge, 2),
                    ('<', _) => (Sense::Le, 1),
                    ('>', _) => (Sense::Ge, 1),
                    _ => (Sense::Eq, 1),
                };
                i += width;
                Tok::Cmp(sense)
            }
            c if c.is_ascii_digit() || (c == '.' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())) => {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                    i += 1;
                }
                if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                    let mut j = i + 1;
                    if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                        j += 1;
                    }
                    if j < chars.len() && chars[j].is_ascii_digit() {
                        while j < chars.len() && chars[j].is_ascii_digit() {
                            j += 1;
                        }
                        i = j;
                    }
                }
                let literal: String = chars[start..i].iter().collect();
                let value = literal.parse::<f64>().map_err(|_| err(format!("malformed number `{literal}`")))?;
                Tok::Number(value)
            }
            c if is_name_start(c) => {
                let start = i;
                while i < chars.len() && is_name_char(chars[i]) {
                    i += 1;
                }
                Tok::Ident(chars[start..i].iter().collect())
            }
            other => return Err(err(format!("unexpected character `{other}`"))),
        };
        out.push(Token { tok, line, col });
    }
    Ok(())
}

/// Maps LP-legal names onto the `[A-Za-z_][A-Za-z0-9_]*` identifier grammar.
fn sanitize(raw: &str) -> String {
    let mut out = String::with_capacity(raw.len());
    for c in raw.chars() {
        if c.is_ascii_alphanumeric() || c == '_' {
            out.push(c);
        } else if !out.ends_with('_') {
            out.push('_');
        }
    }
    let trimmed = out.trim_end_matches('_');
    if trimmed.is_empty() {
        out
    } else {
        trimmed.to_string()
    }
}

#[derive(Debug)]
struct VarState {
    first_seen: usize,
    bounds_pos: Option<usize>,
    lower: f64,
    upper: f64,
    kind: VarKind,
}

struct Builder {
    vars: HashMap<String, VarState>,
    raw_names: HashMap<String, String>,
    seen_counter: usize,
    bounds_counter: usize,
}

impl Builder {
    fn name(&mut self, raw: &str, token: &Token) -> Result<String, LpError> {
        let clean = sanitize(raw);
        match self.raw_names.get(&clean) {
            Some(existing) if existing != raw => {
                return Err(LpError::Parse {
                    line: token.line,
                    column: token.col,
                    message: format!("names `{existing}` and `{raw}` collide as `{clean}`"),
                })
            }
            Some(_) => {}
            None => {
                self.raw_names.insert(clean.clone(), raw.to_string());
            }
        }
        Ok(clean)
    }

    fn touch(&mut self, raw: &str, token: &Token) -> Result<String, LpError> {
        let name = self.name(raw, token)?;
        if !self.vars.contains_key(&name) {
            self.seen_counter += 1;
            self.vars.insert(
                name.clone(),
                VarState {
                    first_seen: self.seen_counter,
                    bounds_pos: None,
                    lower: 0.0,
                    upper: f64::INFINITY,
                    kind: VarKind::Continuous,
                },
            );
        }
        Ok(name)
    }
}

struct Cursor<'a> {
    tokens: &'a [Token],
    pos: usize,
    /// Position reported when the section runs out of tokens.
    eof: (usize, usize),
}

impl<'a> Cursor<'a> {
    fn peek(&self) -> Option<&'a Token> {
        self.tokens.get(self.pos)
    }

    fn peek_at(&self, offset: usize) -> Option<&'a Token> {
        self.tokens.get(self.pos + offset)
    }

    fn next(&mut self) -> Option<&'a Token> {
        let t = self.tokens.get(self.pos);
        self.pos += 1;
        t
    }

    fn done(&self) -> bool {
        self.pos >= self.tokens.len()
    }

    fn error(&self, message: impl Into<String>) -> LpError {
        let (line, column) = self.peek().map(|t| (t.line, t.col)).unwrap_or(self.eof);
        LpError::Parse { line, column, message: message.into() }
    }

    /// `name :` label, if present.
    fn label(&mut self) -> Option<&'a Token> {
        match (self.peek(), self.peek_at(1)) {
            (Some(t @ Token { tok: Tok::Ident(_), .. }), Some(Token { tok: Tok::Colon, .. })) => {
                self.pos += 2;
                Some(t)
            }
            _ => None,
        }
    }

    fn signed_value(&mut self, allow_inf: bool) -> Result<f64, LpError> {
        let mut sign = 1.0;
        while let Some(t) = self.peek() {
            match t.tok {
                Tok::Plus => self.pos += 1,
                Tok::Minus => {
                    sign = -sign;
                    self.pos += 1
                }
                _ => break,
            }
        }
        match self.peek().map(|t| &t.tok) {
            Some(Tok::Number(v)) => {
                self.pos += 1;
                Ok(sign * v)
            }
            Some(Tok::Ident(word)) if allow_inf && is_infinity(word) => {
                self.pos += 1;
                Ok(sign * f64::INFINITY)
            }
            _ => Err(self.error("expected a number")),
        }
    }
}

fn is_infinity(word: &str) -> bool {
    matches!(word.to_ascii_lowercase().as_str(), "inf" | "infinity")
}

/// Parses a linear expression, stopping before a comparison operator, a
/// `name :` label, or the end of the section.
fn parse_expr(cur: &mut Cursor<'_>, builder: &mut Builder) -> Result<LinExpr, LpError> {
    let mut expr = LinExpr::new();
    let mut first = true;
    loop {
        match cur.peek() {
            None | Some(Token { tok: Tok::Cmp(_), .. }) => break,
            Some(Token { tok: Tok::Ident(_), .. })
                if matches!(cur.peek_at(1), Some(Token { tok: Tok::Colon, .. })) =>
            {
                break
            }
            _ => {}
        }
        let mut sign = 1.0;
        let mut had_sign = false;
        while let Some(t) = cur.peek() {
            match t.tok {
                Tok::Plus => {}
                Tok::Minus => sign = -sign,
                _ => break,
            }
            had_sign = true;
            cur.pos += 1;
        }
        if !first && !had_sign {
            return Err(cur.error("expected `+` or `-` between terms"));
        }
        let coef = match cur.peek().map(|t| &t.tok) {
            Some(Tok::Number(v)) => {
                cur.pos += 1;
                Some(*v)
            }
            _ => None,
        };
        match cur.peek() {
            Some(t @ Token { tok: Tok::Ident(raw), .. })
                if !matches!(cur.peek_at(1), Some(Token { tok: Tok::Colon, .. })) =>
            {
                cur.pos += 1;
                let name = builder.touch(raw, t)?;
                expr.add_term(name, sign * coef.unwrap_or(1.0));
            }
            _ => match coef {
                Some(v) => expr.constant += sign * v,
                None => return Err(cur.error("expected a coefficient or variable")),
            },
        }
        first = false;
    }
    Ok(expr)
}

/// Parses LP text into a validated [`Model`].
pub fn parse_lp(text: &str) -> Result<Model, LpError> {
    let mut sections: Vec<(Section, Vec<Token>, (usize, usize))> = Vec::new();
    let mut saw_end = false;
    let mut last_line = 1;
    for (idx, raw_line) in text.lines().enumerate() {
        let line_no = idx + 1;
        last_line = line_no;
        let content = raw_line.split('\\').next().unwrap_or("");
        if content.trim().is_empty() {
            continue;
        }
        if let Some(header) = section_header(content) {
            match header {
                Some(section) => sections.push((section, Vec::new(), (line_no, content.len() + 1))),
                None => {
                    saw_end = true;
                    break;
                }
            }
            continue;
        }
        let Some((_, tokens, eof)) = sections.last_mut() else {
            return Err(LpError::Parse {
                line: line_no,
                column: 1,
                message: "content before the objective section".into(),
            });
        };
        tokenize_line(content, line_no, tokens)?;
        *eof = (line_no, content.len() + 1);
    }
    if !saw_end {
        return Err(LpError::Parse { line: last_line, column: 1, message: "missing `End`".into() });
    }

    let mut builder =
        Builder { vars: HashMap::new(), raw_names: HashMap::new(), seen_counter: 0, bounds_counter: 0 };
    let mut objective: Option<Objective> = None;
    let mut constraints: Vec<Constraint> = Vec::new();
    let mut constraint_names: HashMap<String, ()> = HashMap::new();

    for (section, tokens, eof) in &sections {
        let mut cur = Cursor { tokens, pos: 0, eof: *eof };
        match *section {
            Section::Objective(sense) => {
                if objective.is_some() {
                    return Err(LpError::Parse {
                        line: eof.0,
                        column: 1,
                        message: "more than one objective section".into(),
                    });
                }
                let name = match cur.label() {
                    Some(Token { tok: Tok::Ident(raw), .. }) => sanitize(raw),
                    _ => "obj".to_string(),
                };
                let mut expr = parse_expr(&mut cur, &mut builder)?;
                if !cur.done() {
                    return Err(cur.error("unexpected token in objective"));
                }
                expr.prune();
                objective = Some(Objective { name, sense, expr });
            }
            Section::Constraints => {
                while !cur.done() {
                    let start_line = cur.peek().map(|t| t.line).unwrap_or(eof.0);
                    let name = match cur.label() {
                        Some(Token { tok: Tok::Ident(raw), .. }) => sanitize(raw),
                        _ => format!("R{}", constraints.len() + 1),
                    };
                    let mut lhs = parse_expr(&mut cur, &mut builder)?;
                    let sense = match cur.next().map(|t| &t.tok) {
                        Some(Tok::Cmp(s)) => *s,
                        _ => {
                            cur.pos = cur.pos.saturating_sub(1);
                            return Err(cur.error("expected a comparison operator"));
                        }
                    };
                    let rhs = cur.signed_value(false)?;
                    if constraint_names.insert(name.clone(), ()).is_some() {
                        return Err(LpError::DuplicateName { name, line: start_line });
                    }
                    lhs.prune();
                    constraints.push(Constraint { name, lhs, sense, rhs });
                }
            }
            Section::Bounds => {
                while !cur.done() {
                    parse_bound(&mut cur, &mut builder)?;
                }
            }
            Section::Generals | Section::Binaries => {
                while let Some(t) = cur.next() {
                    let Tok::Ident(raw) = &t.tok else {
                        cur.pos -= 1;
                        return Err(cur.error("expected a variable name"));
                    };
                    let name = builder.touch(raw, t)?;
                    let state = builder.vars.get_mut(&name).expect("touched");
                    if *section == Section::Binaries {
                        state.kind = VarKind::Binary;
                        state.lower = 0.0;
                        state.upper = 1.0;
                    } else if state.kind != VarKind::Binary {
                        state.kind = VarKind::Integer;
                    }
                }
            }
        }
    }

    let objective = objective.ok_or(LpError::Parse {
        line: 1,
        column: 1,
        message: "missing Minimize/Maximize section".into(),
    })?;

    let mut ordered: Vec<(String, VarState)> = builder.vars.into_iter().collect();
    ordered.sort_by_key(|(_, s)| (s.bounds_pos.is_none(), s.bounds_pos.unwrap_or(s.first_seen)));
    let variables = ordered
        .into_iter()
        .map(|(name, s)| Variable { name, lower: s.lower, upper: s.upper, kind: s.kind })
        .collect();

    Ok(Model::new(variables, constraints, objective)?)
}

fn parse_bound(cur: &mut Cursor<'_>, builder: &mut Builder) -> Result<(), LpError> {
    // Forms: `x free`, `x <op> v`, `v <op> x`, `v <op> x <op> w`.
    let starts_with_var = matches!(cur.peek(), Some(Token { tok: Tok::Ident(w), .. }) if !is_infinity(w));
    if starts_with_var {
        let token = cur.next().expect("peeked");
        let Tok::Ident(raw) = &token.tok else { unreachable!() };
        let name = builder.touch(raw, token)?;
        mark_bounds(builder, &name);
        if let Some(Token { tok: Tok::Ident(word), .. }) = cur.peek() {
            if word.eq_ignore_ascii_case("free") {
                cur.pos += 1;
                let s = builder.vars.get_mut(&name).expect("touched");
                s.lower = f64::NEG_INFINITY;
                s.upper = f64::INFINITY;
                return Ok(());
            }
        }
        let sense = match cur.next().map(|t| &t.tok) {
            Some(Tok::Cmp(s)) => *s,
            _ => {
                cur.pos = cur.pos.saturating_sub(1);
                return Err(cur.error("expected a comparison or `free` in bound"));
            }
        };
        let value = cur.signed_value(true)?;
        apply_bound(builder, &name, sense, value);
        return Ok(());
    }

    let value = cur.signed_value(true)?;
    let sense = match cur.next().map(|t| &t.tok) {
        Some(Tok::Cmp(s)) => *s,
        _ => {
            cur.pos = cur.pos.saturating_sub(1);
            return Err(cur.error("expected a comparison in bound"));
        }
    };
    let token = match cur.next() {
        Some(t @ Token { tok: Tok::Ident(_), .. }) => t,
        _ => {
            cur.pos = cur.pos.saturating_sub(1);
            return Err(cur.error("expected a variable name in bound"));
        }
    };
    let Tok::Ident(raw) = &token.tok else { unreachable!() };
    let name = builder.touch(raw, token)?;
    mark_bounds(builder, &name);
    apply_bound(builder, &name, sense.flipped(), value);
    if let Some(Token { tok: Tok::Cmp(s), .. }) = cur.peek() {
        let s = *s;
        cur.pos += 1;
        let upper = cur.signed_value(true)?;
        apply_bound(builder, &name, s, upper);
    }
    Ok(())
}

fn mark_bounds(builder: &mut Builder, name: &str) {
    let s = builder.vars.get_mut(name).expect("touched");
    if s.bounds_pos.is_none() {
        builder.bounds_counter += 1;
        s.bounds_pos = Some(builder.bounds_counter);
    }
}

/// Applies `var <sense> value`.
fn apply_bound(builder: &mut Builder, name: &str, sense: Sense, value: f64) {
    let s = builder.vars.get_mut(name).expect("touched");
    match sense {
        Sense::Le => s.upper = value,
        Sense::Ge => s.lower = value,
        Sense::Eq => {
            s.lower = value;
            s.upper = value;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_minimal_model() {
        let m = parse_lp("Minimize\n obj: 2 x + 3 y\nSubject To\n c1: x + y >= 2\nEnd").unwrap();
        assert_eq!(m.variables().len(), 2);
        assert_eq!(m.constraints().len(), 1);
        assert_eq!(m.objective().sense, ObjectiveSense::Minimize);
        assert_eq!(m.objective().expr.coef("x"), 2.0);
        assert_eq!(m.objective().expr.coef("y"), 3.0);
        let c = &m.constraints()[0];
        assert_eq!(c.name, "c1");
        assert_eq!(c.sense, Sense::Ge);
        assert_eq!(c.rhs, 2.0);
        assert!(m.variables().iter().all(|v| v.has_default_bounds() && v.kind == VarKind::Continuous));
    }

    #[test]
    fn malformed_term_reports_line() {
        let err = parse_lp("Minimize\nobj: x\nSubject To\nc1: x + ≤ 2\nEnd").unwrap_err();
        assert_eq!(err.line(), Some(4));
        let err = parse_lp("Minimize\nobj: x\nSubject To\nc1: x + <= 2\nEnd").unwrap_err();
        assert_eq!(err.line(), Some(4));
    }

    #[test]
    fn duplicate_constraint_label() {
        let err = parse_lp("Minimize\nobj: x\nSubject To\nc1: x <= 2\nc1: x >= 1\nEnd").unwrap_err();
        assert_eq!(err, LpError::DuplicateName { name: "c1".into(), line: 5 });
    }

    #[test]
    fn bounds_and_types() {
        let text = "\\ header comment\nMAXIMIZE\n obj: 3 a + 2 b - z + 4.5e-1 w\nsubject to\n c: a + b\n   + w <= 10 \\ wrapped\nBounds\n -5 <= w <= 5\n b <= 4\n z free\n a >= 1\nGeneral\n a\nBinary\n q\nEND\n";
        let m = parse_lp(text).unwrap();
        let names: Vec<_> = m.variables().iter().map(|v| v.name.as_str()).collect();
        assert_eq!(names, ["w", "b", "z", "a", "q"]);
        let w = m.variable("w").unwrap();
        assert_eq!((w.lower, w.upper), (-5.0, 5.0));
        let b = m.variable("b").unwrap();
        assert_eq!((b.lower, b.upper), (0.0, 4.0));
        assert_eq!(m.variable("z").unwrap().lower, f64::NEG_INFINITY);
        assert_eq!(m.variable("a").unwrap().kind, VarKind::Integer);
        assert_eq!(m.variable("a").unwrap().lower, 1.0);
        let q = m.variable("q").unwrap();
        assert_eq!((q.kind, q.upper), (VarKind::Binary, 1.0));
        assert_eq!(m.objective().expr.coef("w"), 0.45);
        assert_eq!(m.constraints()[0].lhs.coef("w"), 1.0);
    }

    #[test]
    fn bracketed_names_are_sanitized() {
        let m = parse_lp("Minimize\n obj: x[1,2] + y(3)\nSubject To\n R0: x[1,2] >= 1\nEnd").unwrap();
        assert!(m.variable("x_1_2").is_some());
        assert!(m.variable("y_3").is_some());
        assert!(parse_lp("Minimize\n obj: x[1] + x(1)\nSubject To\nEnd").is_err());
    }

    #[test]
    fn unlabeled_rows_and_constants() {
        let m = parse_lp("Minimize\n 5 + x\nSubject To\n x >= 1\n -x - y >= -3\nEnd").unwrap();
        assert_eq!(m.objective().expr.constant, 5.0);
        let names: Vec<_> = m.constraints().iter().map(|c| c.name.as_str()).collect();
        assert_eq!(names, ["R1", "R2"]);
    }

    #[test]
    fn requires_end_and_objective() {
        assert!(parse_lp("Minimize\n obj: x\n").is_err());
        assert!(parse_lp("Subject To\n c: x <= 1\nEnd").is_err());
        assert!(parse_lp("x + y\nMinimize\nobj: x\nEnd").is_err());
    }
}
