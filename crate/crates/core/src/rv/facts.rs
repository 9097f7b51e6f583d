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

//! Rigid background facts, e.g. the contacts list.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use super::formula::Value;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {msg}")]
pub struct FactsError {
    pub line: usize,
    pub msg: String,
}

/// Ground tuples per predicate name.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BackgroundFacts {
    facts: BTreeMap<String, BTreeSet<Vec<Value>>>,
}

impl BackgroundFacts {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, pred: impl Into<String>, args: Vec<Value>) -> bool {
        self.facts.entry(pred.into()).or_default().insert(args)
    }

    pub fn holds(&self, pred: &str, args: &[Value]) -> bool {
        self.facts.get(pred).is_some_and(|s| s.contains(args))
    }

    pub fn tuples(&self, pred: &str) -> impl Iterator<Item = &Vec<Value>> {
        self.facts.get(pred).into_iter().flatten()
    }

    pub fn len(&self) -> usize {
        self.facts.values().map(BTreeSet::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Parses `<pred> <value>*` lines. `#` starts a comment; values are
/// whitespace separated and may be double-quoted.
pub fn parse_facts(text: &str) -> Result<BackgroundFacts, FactsError> {
    let mut out = BackgroundFacts::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let mut words = content.split_whitespace();
        let pred = words.next().unwrap_or_default();
        if !crate::parcel::is_identifier(pred) {
            return Err(FactsError { line, msg: format!("bad predicate `{pred}`") });
        }
        let args: Vec<Value> = words.map(|w| Value(w.trim_matches('"').to_string())).collect();
        if args.is_empty() {
            return Err(FactsError { line, msg: format!("`{pred}` has no values") });
        }
        out.insert(pred, args);
    }
    Ok(out)
}
