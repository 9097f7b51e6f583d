/*
 * Copyright (C) 2026 The andmon Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

//! Policy text.
//!
//! ```text
//! file     := (background | policy)*
//! background := "background" ident
//! policy   := "policy" ident ":" formula      (may continue on following lines)
//! formula  := or ("IMPLIES" formula)?
//! or       := and ("OR" and)*
//! and      := since ("AND" since)*
//! since    := unary ("SINCE" unary)*
//! unary    := ("NOT" | "PREV" | "ONCE" | "HISTORICALLY") unary
//!           | "TRUE" | "FALSE" | "(" formula ")" | atom
//! atom     := ident "(" (term ("," term)*)? ")"
//! term     := ident | "quoted" | number
//! ```

use std::collections::BTreeSet;

use thiserror::Error;

use super::formula::{Atom, Formula, Policy, Term, Value};

/// Predicates answered from the facts file when a policy is parsed on its own.
pub const DEFAULT_BACKGROUND: &[&str] = &["contact"];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PolicyError {
    #[error("syntax error at {pos}: {msg}")]
    SyntaxError { pos: usize, msg: String },
    #[error("variable `{0}` is not bound by any event predicate")]
    UngroundedVariable(String),
    #[error("line {line}: {source}")]
    AtLine { line: usize, source: Box<PolicyError> },
    #[error("duplicate policy `{0}`")]
    DuplicatePolicy(String),
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Str(String),
    Num(String),
    LParen,
    RParen,
    Comma,
    Kw(Kw),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kw {
    Not,
    And,
    Or,
    Implies,
    Prev,
    Once,
    Historically,
    Since,
    True,
    False,
}

fn keyword(s: &str) -> Option<Kw> {
    Some(match s {
        "NOT" => Kw::Not,
        "AND" => Kw::And,
        "OR" => Kw::Or,
        "IMPLIES" => Kw::Implies,
        "PREV" => Kw::Prev,
        "ONCE" => Kw::Once,
        "HISTORICALLY" => Kw::Historically,
        "SINCE" => Kw::Since,
        "TRUE" => Kw::True,
        "FALSE" => Kw::False,
        _ => return None,
    })
}

fn syntax(pos: usize, msg: impl Into<String>) -> PolicyError {
    PolicyError::SyntaxError { pos, msg: msg.into() }
}

fn lex(text: &str) -> Result<Vec<(usize, Tok)>, PolicyError> {
    let mut out = Vec::new();
    let mut it = text.char_indices().peekable();
    while let Some(&(pos, c)) = it.peek() {
        if c.is_whitespace() {
            it.next();
        } else if c == '(' || c == ')' || c == ',' {
            it.next();
            out.push((
                pos,
                match c {
                    '(' => Tok::LParen,
                    ')' => Tok::RParen,
                    _ => Tok::Comma,
                },
            ));
        } else if c == '"' {
            it.next();
            let mut s = String::new();
            loop {
                match it.next() {
                    Some((_, '"')) => break,
                    Some((_, '\\')) => match it.next() {
                        Some((_, e)) => s.push(e),
                        None => return Err(syntax(pos, "unterminated string")),
                    },
                    Some((_, ch)) => s.push(ch),
                    None => return Err(syntax(pos, "unterminated string")),
                }
            }
            out.push((pos, Tok::Str(s)));
        } else if c.is_ascii_digit() || c == '+' || c == '-' {
            let mut s = String::new();
            while let Some(&(_, d)) = it.peek() {
                if d.is_ascii_digit() || (s.is_empty() && (d == '+' || d == '-')) {
                    s.push(d);
                    it.next();
                } else {
                    break;
                }
            }
            if s.len() == 1 && !c.is_ascii_digit() {
                return Err(syntax(pos, format!("unexpected `{c}`")));
            }
            out.push((pos, Tok::Num(s)));
        } else if c.is_alphabetic() || c == '_' {
            let mut s = String::new();
            while let Some(&(_, d)) = it.peek() {
                if d.is_alphanumeric() || d == '_' {
                    s.push(d);
                    it.next();
                } else {
                    break;
                }
            }
            out.push((pos, keyword(&s).map_or(Tok::Ident(s), Tok::Kw)));
        } else {
            return Err(syntax(pos, format!("unexpected `{c}`")));
        }
    }
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<(usize, Tok)>,
    at: usize,
    end: usize,
    background: &'a BTreeSet<String>,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.at).map(|(_, t)| t)
    }

    fn pos(&self) -> usize {
        self.toks.get(self.at).map_or(self.end, |(p, _)| *p)
    }

    fn eat_kw(&mut self, kw: Kw) -> bool {
        if self.peek() == Some(&Tok::Kw(kw)) {
            self.at += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<(), PolicyError> {
        if self.peek() == Some(&tok) {
            self.at += 1;
            Ok(())
        } else {
            Err(syntax(self.pos(), format!("expected {what}")))
        }
    }

    fn formula(&mut self) -> Result<Formula, PolicyError> {
        let lhs = self.or()?;
        if self.eat_kw(Kw::Implies) {
            let rhs = self.formula()?;
            return Ok(Formula::Implies(Box::new(lhs), Box::new(rhs)));
        }
        Ok(lhs)
    }

    fn or(&mut self) -> Result<Formula, PolicyError> {
        let mut lhs = self.and()?;
        while self.eat_kw(Kw::Or) {
            lhs = Formula::Or(Box::new(lhs), Box::new(self.and()?));
        }
        Ok(lhs)
    }

    fn and(&mut self) -> Result<Formula, PolicyError> {
        let mut lhs = self.since()?;
        while self.eat_kw(Kw::And) {
            lhs = Formula::And(Box::new(lhs), Box::new(self.since()?));
        }
        Ok(lhs)
    }

    fn since(&mut self) -> Result<Formula, PolicyError> {
        let mut lhs = self.unary()?;
        while self.eat_kw(Kw::Since) {
            lhs = Formula::Since(Box::new(lhs), Box::new(self.unary()?));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Formula, PolicyError> {
        let pos = self.pos();
        let Some(tok) = self.peek().cloned() else {
            return Err(syntax(pos, "unexpected end of formula"));
        };
        self.at += 1;
        match tok {
            Tok::Kw(Kw::Not) => Ok(Formula::Not(Box::new(self.unary()?))),
            Tok::Kw(Kw::Prev) => Ok(Formula::Prev(Box::new(self.unary()?))),
            Tok::Kw(Kw::Once) => Ok(Formula::Once(Box::new(self.unary()?))),
            Tok::Kw(Kw::Historically) => Ok(Formula::Historically(Box::new(self.unary()?))),
            Tok::Kw(Kw::True) => Ok(Formula::True),
            Tok::Kw(Kw::False) => Ok(Formula::False),
            Tok::LParen => {
                let f = self.formula()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(f)
            }
            Tok::Ident(pred) => {
                self.expect(Tok::LParen, "`(` after predicate name")?;
                let mut args = Vec::new();
                if self.peek() == Some(&Tok::RParen) {
                    self.at += 1;
                } else {
                    loop {
                        let tpos = self.pos();
                        let term = match self.peek().cloned() {
                            Some(Tok::Ident(v)) => Term::Var(v),
                            Some(Tok::Str(s)) | Some(Tok::Num(s)) => Term::Const(Value(s)),
                            _ => return Err(syntax(tpos, "expected variable or constant")),
                        };
                        self.at += 1;
                        args.push(term);
                        match self.peek() {
                            Some(Tok::Comma) => self.at += 1,
                            Some(Tok::RParen) => {
                                self.at += 1;
                                break;
                            }
                            _ => return Err(syntax(self.pos(), "expected `,` or `)`")),
                        }
                    }
                }
                let background = self.background.contains(&pred);
                Ok(Formula::Atom(Atom { pred, args, background }))
            }
            _ => Err(syntax(pos, "expected formula")),
        }
    }
}

fn parse_ast(text: &str, background: &BTreeSet<String>) -> Result<Formula, PolicyError> {
    let toks = lex(text)?;
    let mut p = Parser { toks, at: 0, end: text.len(), background };
    let f = p.formula()?;
    if p.at != p.toks.len() {
        return Err(syntax(p.pos(), "trailing input"));
    }
    Ok(f)
}

/// Parses one formula with the given background predicates and checks that
/// every free variable is grounded.
pub fn parse_formula(text: &str, background: &BTreeSet<String>) -> Result<Formula, PolicyError> {
    let f = parse_ast(text, background)?;
    let grounded = f.grounded(false);
    if let Some(v) = f.vars().into_iter().find(|v| !grounded.contains(v)) {
        return Err(PolicyError::UngroundedVariable(v));
    }
    Ok(f)
}

fn default_background() -> BTreeSet<String> {
    DEFAULT_BACKGROUND.iter().map(|s| s.to_string()).collect()
}

/// Parses `policy <name>: <formula>` or a bare formula (named `policy`),
/// treating `contact` as the only background predicate.
pub fn parse_policy(text: &str) -> Result<Policy, PolicyError> {
    parse_policy_with(text, &default_background())
}

pub fn parse_policy_with(text: &str, background: &BTreeSet<String>) -> Result<Policy, PolicyError> {
    let trimmed = text.trim_start();
    let lead = text.len() - trimmed.len();
    let (name, body, offset) = match trimmed.strip_prefix("policy") {
        Some(rest) if rest.starts_with(char::is_whitespace) => {
            let colon = rest.find(':').ok_or_else(|| syntax(lead + 6, "expected `:` after policy name"))?;
            let name = rest[..colon].trim();
            if name.is_empty() || !name.chars().all(|c| c.is_alphanumeric() || c == '_') {
                return Err(syntax(lead + 6, "bad policy name"));
            }
            (name.to_string(), &rest[colon + 1..], lead + 6 + colon + 1)
        }
        _ => ("policy".to_string(), text, 0),
    };
    let formula = parse_formula(body, background).map_err(|e| match e {
        PolicyError::SyntaxError { pos, msg } => PolicyError::SyntaxError { pos: pos + offset, msg },
        other => other,
    })?;
    let vars = formula.vars().into_iter().collect();
    Ok(Policy { name, formula, vars })
}

/// A parsed policy file.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PolicySet {
    pub background: BTreeSet<String>,
    pub policies: Vec<Policy>,
}

/// Parses a policy file. `#` starts a comment; a policy runs until the next
/// `policy` or `background` line. With no `background` line the default
/// schema applies.
pub fn parse_policies(text: &str) -> Result<PolicySet, PolicyError> {
    let mut background = BTreeSet::new();
    let mut blocks: Vec<(usize, String)> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let mut words = content.split_whitespace();
        match words.next() {
            Some("background") => {
                let names: Vec<&str> = words.collect();
                if names.is_empty() {
                    let e = syntax(0, "missing predicate name");
                    return Err(PolicyError::AtLine { line: idx + 1, source: Box::new(e) });
                }
                background.extend(names.into_iter().map(str::to_string));
            }
            Some("policy") => blocks.push((idx + 1, content.to_string())),
            _ => match blocks.last_mut() {
                Some((_, b)) => {
                    b.push(' ');
                    b.push_str(content);
                }
                None => {
                    let e = syntax(0, "expected `policy` or `background`");
                    return Err(PolicyError::AtLine { line: idx + 1, source: Box::new(e) });
                }
            },
        }
    }
    if background.is_empty() {
        background = default_background();
    }
    let mut policies: Vec<Policy> = Vec::new();
    for (line, block) in blocks {
        let p =
            parse_policy_with(&block, &background).map_err(|e| PolicyError::AtLine { line, source: Box::new(e) })?;
        if policies.iter().any(|q| q.name == p.name) {
            return Err(PolicyError::DuplicatePolicy(p.name));
        }
        policies.push(p);
    }
    Ok(PolicySet { background, policies })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sms_policy() {
        let p = parse_policy("send_sms(app, num) IMPLIES contact(num)").unwrap();
        assert_eq!(p.vars, vec!["app", "num"]);
        let Formula::Implies(l, r) = &p.formula else { panic!("{:?}", p.formula) };
        assert!(matches!(&**l, Formula::Atom(a) if a.pred == "send_sms" && !a.background));
        assert!(matches!(&**r, Formula::Atom(a) if a.pred == "contact" && a.background));
    }

    #[test]
    fn missing_antecedent() {
        assert!(matches!(parse_policy("IMPLIES contact(num)"), Err(PolicyError::SyntaxError { pos: 0, .. })));
    }

    #[test]
    fn ungrounded() {
        assert_eq!(parse_policy("ONCE p(x) IMPLIES q(y)"), Err(PolicyError::UngroundedVariable("y".into())));
    }

    #[test]
    fn background_only_variable_is_ungrounded() {
        assert_eq!(parse_policy("NOT contact(n)"), Err(PolicyError::UngroundedVariable("n".into())));
    }

    #[test]
    fn negated_event_atom_grounds() {
        assert!(parse_policy("NOT p(x)").is_ok());
        assert!(parse_policy("p(x) OR q(x)").is_err());
        assert!(parse_policy("p(x) IMPLIES ONCE q(x)").is_ok());
        assert!(parse_policy("q(x) IMPLIES (NOT p(x)) SINCE r(x)").is_ok());
    }

    fn ast(s: &str) -> Formula {
        parse_ast(s, &default_background()).unwrap()
    }

    #[test]
    fn precedence() {
        let f = ast("a(x) AND b(x) OR c(x) IMPLIES d(x) IMPLIES e(x)");
        assert_eq!(f.to_string(), "a(x) AND b(x) OR c(x) IMPLIES d(x) IMPLIES e(x)");
        let Formula::Implies(l, r) = &f else { panic!() };
        assert!(matches!(&**l, Formula::Or(..)));
        assert!(matches!(&**r, Formula::Implies(..)));
        let q = ast("NOT a(x) SINCE b(x) AND c(x)");
        assert!(matches!(&q, Formula::And(l, _) if matches!(&**l, Formula::Since(..))));
    }

    #[test]
    fn display_roundtrip() {
        for s in [
            "p(x) IMPLIES (q(x) IMPLIES r(x))",
            "(p(x) IMPLIES q(x)) IMPLIES r(x)",
            "NOT (p(x) AND q(x))",
            "p(x, \"555\", 7) IMPLIES PREV ONCE q(x)",
            "p(x) SINCE (q(x) SINCE r(x))",
            "HISTORICALLY NOT p(x) OR TRUE AND FALSE",
        ] {
            let f = ast(s);
            assert_eq!(ast(&f.to_string()), f, "{s}");
        }
    }

    #[test]
    fn constants() {
        let p = parse_policy("send_sms(app, \"555\") IMPLIES contact(+61400000001)").unwrap();
        assert_eq!(p.vars, vec!["app"]);
    }

    #[test]
    fn syntax_positions() {
        assert!(matches!(parse_policy("p(x) AND"), Err(PolicyError::SyntaxError { pos: 8, .. })));
        assert!(matches!(parse_policy("p(x"), Err(PolicyError::SyntaxError { .. })));
        assert!(matches!(parse_policy("p(x) q(x)"), Err(PolicyError::SyntaxError { pos: 5, .. })));
        assert!(matches!(parse_policy("policy a: p(x) $"), Err(PolicyError::SyntaxError { pos: 15, .. })));
    }

    #[test]
    fn policy_file() {
        let set = parse_policies(crate::fixtures::POLICIES).unwrap();
        assert_eq!(set.background, ["contact".to_string()].into());
        assert_eq!(set.policies.len(), 1);
        assert_eq!(set.policies[0].name, "sms_to_contacts");
    }

    #[test]
    fn multiline_block_and_duplicates() {
        let set =
            parse_policies("background c\npolicy a: p(x)\n  IMPLIES c(x)\npolicy b: NOT q(y)\n  OR r(y)\n").unwrap();
        assert_eq!(set.policies.len(), 2);
        assert_eq!(set.policies[0].formula.to_string(), "p(x) IMPLIES c(x)");
        assert!(matches!(
            parse_policies("policy a: NOT p(x)\npolicy a: NOT q(x)"),
            Err(PolicyError::DuplicatePolicy(_))
        ));
        assert!(matches!(parse_policies("NOT p(x)"), Err(PolicyError::AtLine { line: 1, .. })));
    }
}
