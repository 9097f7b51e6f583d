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

//! Abstraction of concrete events into ground predicates.
//!
//! ```text
//! map <interface> <method> -> <pred>(<source>, ...)
//! map syscall open|connect -> <pred>(<source>, ...)
//! ```
//!
//! Sources are `uid` and `arg<i>` for calls, `uid` and `path` for `open`,
//! `uid`, `addr` and `family` for `connect`.

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

use super::formula::Value;
use crate::events::{ArgValue, DecodedCall, SyscallEvent, SyscallKind};
use crate::parcel::SignatureRegistry;
use crate::service::ServiceEvent;

/// An event predicate instance, e.g. `send_sms("10050", "123")`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GroundAtom {
    pub pred: String,
    pub args: Vec<Value>,
}

impl GroundAtom {
    pub fn new(pred: impl Into<String>, args: impl IntoIterator<Item = impl Into<Value>>) -> Self {
        GroundAtom { pred: pred.into(), args: args.into_iter().map(Into::into).collect() }
    }
}

impl fmt::Display for GroundAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.pred)?;
        for (i, v) in self.args.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{v}")?;
        }
        f.write_str(")")
    }
}

impl From<&ArgValue> for Value {
    fn from(a: &ArgValue) -> Self {
        match a {
            ArgValue::Str(s) => Value(s.clone()),
            ArgValue::Bytes(b) => Value(hex::encode(b)),
            other => Value(other.to_string()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Source {
    Uid,
    Arg(usize),
    Path,
    Addr,
    Family,
}

impl Source {
    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "uid" => Source::Uid,
            "path" => Source::Path,
            "addr" => Source::Addr,
            "family" => Source::Family,
            _ => Source::Arg(s.strip_prefix("arg")?.parse().ok()?),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rule {
    pub pred: String,
    pub sources: Vec<Source>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MappingError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("{interface_name}.{method_name}: arg{index} out of range for {arity} arguments")]
    MappingArityError { interface_name: String, method_name: String, index: usize, arity: usize },
}

/// The loaded mapping table.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EventMapping {
    calls: HashMap<(String, String), Vec<Rule>>,
    open: Vec<Rule>,
    connect: Vec<Rule>,
}

impl EventMapping {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_call_rule(&mut self, interface_name: &str, method_name: &str, rule: Rule) {
        self.calls.entry((interface_name.to_string(), method_name.to_string())).or_default().push(rule);
    }

    pub fn remove_call(&mut self, interface_name: &str, method_name: &str) -> bool {
        self.calls.remove(&(interface_name.to_string(), method_name.to_string())).is_some()
    }

    pub fn add_syscall_rule(&mut self, kind: SyscallKind, rule: Rule) {
        match kind {
            SyscallKind::Open => self.open.push(rule),
            SyscallKind::Connect => self.connect.push(rule),
        }
    }

    /// Checks every call rule against the registered arity.
    pub fn check(&self, registry: &SignatureRegistry) -> Result<(), MappingError> {
        for ((iface, method), rules) in &self.calls {
            let Some(sig) = registry.find_method(iface, method) else { continue };
            for rule in rules {
                check_arity(iface, method, rule, sig.arg_types.len())?;
            }
        }
        Ok(())
    }

    pub fn map_call(&self, call: &DecodedCall) -> Result<Vec<GroundAtom>, MappingError> {
        let Some(rules) = self.calls.get(&(call.interface_name.clone(), call.method_name.clone())) else {
            return Ok(Vec::new());
        };
        let uid = Value(call.sender.0.to_string());
        rules
            .iter()
            .map(|rule| {
                check_arity(&call.interface_name, &call.method_name, rule, call.args.len())?;
                let args = rule
                    .sources
                    .iter()
                    .map(|s| match s {
                        Source::Arg(i) => Value::from(&call.args[*i]),
                        _ => uid.clone(),
                    })
                    .collect();
                Ok(GroundAtom { pred: rule.pred.clone(), args })
            })
            .collect()
    }

    pub fn map_syscall(&self, e: &SyscallEvent) -> Vec<GroundAtom> {
        let rules = match e.kind {
            SyscallKind::Open => &self.open,
            SyscallKind::Connect => &self.connect,
        };
        rules
            .iter()
            .map(|rule| {
                let args = rule
                    .sources
                    .iter()
                    .map(|s| {
                        Value(match s {
                            Source::Path => e.path.clone().unwrap_or_default(),
                            Source::Addr => e.addr.clone().unwrap_or_default(),
                            Source::Family => e.addr_family.map(|f| f.name()).unwrap_or_default().to_string(),
                            _ => e.uid.0.to_string(),
                        })
                    })
                    .collect();
                GroundAtom { pred: rule.pred.clone(), args }
            })
            .collect()
    }
}

fn check_arity(iface: &str, method: &str, rule: &Rule, arity: usize) -> Result<(), MappingError> {
    match rule.sources.iter().find_map(|s| match s {
        Source::Arg(i) if *i >= arity => Some(*i),
        _ => None,
    }) {
        Some(index) => Err(MappingError::MappingArityError {
            interface_name: iface.to_string(),
            method_name: method.to_string(),
            index,
            arity,
        }),
        None => Ok(()),
    }
}

/// Maps one service event to its ground predicates. Undecoded notices map
/// to nothing.
pub fn map_event(e: &ServiceEvent, mapping: &EventMapping) -> Result<Vec<GroundAtom>, MappingError> {
    match e {
        ServiceEvent::Call(c) => mapping.map_call(c),
        ServiceEvent::Syscall(s) => Ok(mapping.map_syscall(s)),
        ServiceEvent::Undecoded(_) => Ok(Vec::new()),
    }
}

pub fn parse_mapping(text: &str) -> Result<EventMapping, MappingError> {
    let mut out = EventMapping::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let syntax = |msg: String| MappingError::Syntax { line, msg };
        let (lhs, rhs) = content.split_once("->").ok_or_else(|| syntax("missing `->`".into()))?;
        let lhs: Vec<&str> = lhs.split_whitespace().collect();
        let (pred, args) = rhs
            .trim()
            .strip_suffix(')')
            .and_then(|r| r.split_once('('))
            .ok_or_else(|| syntax("expected `pred(source, ...)`".into()))?;
        let pred = pred.trim();
        if !crate::parcel::is_identifier(pred) {
            return Err(syntax(format!("bad predicate `{pred}`")));
        }
        let sources = args
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| Source::parse(s).ok_or_else(|| syntax(format!("bad source `{s}`"))))
            .collect::<Result<Vec<_>, _>>()?;
        let rule = Rule { pred: pred.to_string(), sources };
        let allowed = |ok: &dyn Fn(Source) -> bool| match rule.sources.iter().find(|s| !ok(**s)) {
            Some(s) => Err(syntax(format!("source {s:?} not available here"))),
            None => Ok(()),
        };
        match lhs.as_slice() {
            ["map", "syscall", "open"] => {
                allowed(&|s| matches!(s, Source::Uid | Source::Path))?;
                out.add_syscall_rule(SyscallKind::Open, rule);
            }
            ["map", "syscall", "connect"] => {
                allowed(&|s| matches!(s, Source::Uid | Source::Addr | Source::Family))?;
                out.add_syscall_rule(SyscallKind::Connect, rule);
            }
            ["map", iface, method] => {
                allowed(&|s| matches!(s, Source::Uid | Source::Arg(_)))?;
                out.add_call_rule(iface, method, rule);
            }
            _ => return Err(syntax("expected `map <interface> <method>`".into())),
        }
    }
    Ok(out)
}
