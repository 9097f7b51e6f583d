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

//! Policy formulas: past-time temporal logic over parameterized atoms.

use std::collections::BTreeSet;
use std::fmt;

/// A data value. Everything the monitor compares is text: UIDs, phone
/// numbers and integer arguments are compared by their decimal form.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Value(pub String);

impl Value {
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for Value {
    fn from(s: &str) -> Self {
        Value(s.to_string())
    }
}

impl From<String> for Value {
    fn from(s: String) -> Self {
        Value(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Term {
    Var(String),
    Const(Value),
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(v) => f.write_str(v),
            Term::Const(c) => write!(f, "{:?}", c.0),
        }
    }
}

/// `pred(t1, .., tn)`. Background atoms are answered from the rigid fact
/// set instead of the current event.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Atom {
    pub pred: String,
    pub args: Vec<Term>,
    pub background: bool,
}

impl Atom {
    pub fn vars(&self) -> impl Iterator<Item = &str> {
        self.args.iter().filter_map(|t| match t {
            Term::Var(v) => Some(v.as_str()),
            Term::Const(_) => None,
        })
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.pred)?;
        for (i, t) in self.args.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{t}")?;
        }
        f.write_str(")")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Formula {
    True,
    False,
    Atom(Atom),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    Prev(Box<Formula>),
    Once(Box<Formula>),
    Historically(Box<Formula>),
    Since(Box<Formula>, Box<Formula>),
}

impl Formula {
    /// Free variables, sorted.
    pub fn vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.visit_atoms(&mut |a| out.extend(a.vars().map(str::to_string)));
        out
    }

    pub fn visit_atoms<'a>(&'a self, f: &mut impl FnMut(&'a Atom)) {
        match self {
            Formula::True | Formula::False => {}
            Formula::Atom(a) => f(a),
            Formula::Not(c) | Formula::Prev(c) | Formula::Once(c) | Formula::Historically(c) => c.visit_atoms(f),
            Formula::And(l, r) | Formula::Or(l, r) | Formula::Implies(l, r) | Formula::Since(l, r) => {
                l.visit_atoms(f);
                r.visit_atoms(f);
            }
        }
    }

    /// Variables certain to hold a value already seen in an event atom
    /// whenever this subformula evaluates to `truth`.
    ///
    /// A policy is checked for violations, i.e. for the root being false,
    /// so every free variable must be in `grounded(false)`: then only
    /// valuations built from observed values can ever violate it.
    pub fn grounded(&self, truth: bool) -> BTreeSet<String> {
        use Formula::*;
        let union = |a: BTreeSet<String>, b: BTreeSet<String>| a.union(&b).cloned().collect::<BTreeSet<_>>();
        let inter = |a: BTreeSet<String>, b: BTreeSet<String>| a.intersection(&b).cloned().collect::<BTreeSet<_>>();
        match self {
            True | False => BTreeSet::new(),
            Atom(a) if truth && !a.background => a.vars().map(str::to_string).collect(),
            Atom(_) => BTreeSet::new(),
            Not(c) => c.grounded(!truth),
            And(l, r) if truth => union(l.grounded(true), r.grounded(true)),
            And(l, r) => inter(l.grounded(false), r.grounded(false)),
            Or(l, r) if truth => inter(l.grounded(true), r.grounded(true)),
            Or(l, r) => union(l.grounded(false), r.grounded(false)),
            Implies(l, r) if truth => inter(l.grounded(false), r.grounded(true)),
            Implies(l, r) => union(l.grounded(true), r.grounded(false)),
            // PREV is false at the first step whatever its operand
            Prev(c) if truth => c.grounded(true),
            Prev(_) => BTreeSet::new(),
            Once(c) | Historically(c) => c.grounded(truth),
            Since(_, r) => r.grounded(truth),
        }
    }
}

fn prec(f: &Formula) -> u8 {
    match f {
        Formula::Implies(..) => 1,
        Formula::Or(..) => 2,
        Formula::And(..) => 3,
        Formula::Since(..) => 4,
        _ => 5,
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sub = |f: &mut fmt::Formatter<'_>, child: &Formula, min: u8| {
            if prec(child) < min {
                write!(f, "({child})")
            } else {
                write!(f, "{child}")
            }
        };
        match self {
            Formula::True => f.write_str("TRUE"),
            Formula::False => f.write_str("FALSE"),
            Formula::Atom(a) => write!(f, "{a}"),
            Formula::Not(c) => {
                f.write_str("NOT ")?;
                sub(f, c, 5)
            }
            Formula::Prev(c) => {
                f.write_str("PREV ")?;
                sub(f, c, 5)
            }
            Formula::Once(c) => {
                f.write_str("ONCE ")?;
                sub(f, c, 5)
            }
            Formula::Historically(c) => {
                f.write_str("HISTORICALLY ")?;
                sub(f, c, 5)
            }
            Formula::And(l, r) => {
                sub(f, l, 3)?;
                f.write_str(" AND ")?;
                sub(f, r, 4)
            }
            Formula::Or(l, r) => {
                sub(f, l, 2)?;
                f.write_str(" OR ")?;
                sub(f, r, 3)
            }
            Formula::Since(l, r) => {
                sub(f, l, 4)?;
                f.write_str(" SINCE ")?;
                sub(f, r, 5)
            }
            Formula::Implies(l, r) => {
                sub(f, l, 2)?;
                f.write_str(" IMPLIES ")?;
                sub(f, r, 1)
            }
        }
    }
}

/// A named, checked formula.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Policy {
    pub name: String,
    pub formula: Formula,
    /// Free variables in sorted order; valuations list values in this order.
    pub vars: Vec<String>,
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "policy {}: {}", self.name, self.formula)
    }
}
