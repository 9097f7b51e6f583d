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

//! Shared test helpers: a whole-trace policy evaluator and a pipeline rig.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::sync::{Arc, Mutex};

use andmon_core::bridge::{Bridge, BridgeError};
use andmon_core::events::{AppId, ArgValue, InterceptedEvent};
use andmon_core::fixtures::{self, ISMS};
use andmon_core::interceptor::{Interceptor, InterceptorControl};
use andmon_core::parcel::{marshal, SignatureRegistry};
use andmon_core::rv::{BackgroundFacts, Formula, GroundAtom, Policy, Term, Valuation, Value, Violation};
use andmon_core::service::{ServiceEvent, Subscription, TracerService, UidFilter};

/// Evaluates the policy semantics directly: keeps every step and recomputes
/// each subformula from its definition.
pub struct Oracle<'a> {
    pub policy: &'a Policy,
    pub facts: &'a BackgroundFacts,
}

impl Oracle<'_> {
    fn holds(&self, f: &Formula, trace: &[Vec<GroundAtom>], i: usize, val: &BTreeMap<String, Value>) -> bool {
        match f {
            Formula::True => true,
            Formula::False => false,
            Formula::Atom(a) => {
                let args: Vec<Value> = a
                    .args
                    .iter()
                    .map(|t| match t {
                        Term::Var(v) => val[v].clone(),
                        Term::Const(c) => c.clone(),
                    })
                    .collect();
                if a.background {
                    self.facts.holds(&a.pred, &args)
                } else {
                    trace[i].iter().any(|g| g.pred == a.pred && g.args == args)
                }
            }
            Formula::Not(c) => !self.holds(c, trace, i, val),
            Formula::And(l, r) => self.holds(l, trace, i, val) && self.holds(r, trace, i, val),
            Formula::Or(l, r) => self.holds(l, trace, i, val) || self.holds(r, trace, i, val),
            Formula::Implies(l, r) => !self.holds(l, trace, i, val) || self.holds(r, trace, i, val),
            Formula::Prev(c) => i > 0 && self.holds(c, trace, i - 1, val),
            Formula::Once(c) => (0..=i).any(|j| self.holds(c, trace, j, val)),
            Formula::Historically(c) => (0..=i).all(|j| self.holds(c, trace, j, val)),
            Formula::Since(l, r) => {
                (0..=i).any(|j| self.holds(r, trace, j, val) && (j + 1..=i).all(|k| self.holds(l, trace, k, val)))
            }
        }
    }

    /// Values seen at each variable's positions in matching event atoms up
    /// to and including step `i`.
    pub fn domains(&self, trace: &[Vec<GroundAtom>], i: usize) -> BTreeMap<String, BTreeSet<Value>> {
        let mut d: BTreeMap<String, BTreeSet<Value>> =
            self.policy.vars.iter().map(|v| (v.clone(), BTreeSet::new())).collect();
        let mut atoms = Vec::new();
        self.policy.formula.visit_atoms(&mut |a| atoms.push(a.clone()));
        for step in &trace[..=i] {
            for g in step {
                for a in atoms.iter().filter(|a| !a.background && a.pred == g.pred && a.args.len() == g.args.len()) {
                    let consts_ok = a.args.iter().zip(&g.args).all(|(t, v)| match t {
                        Term::Const(c) => c == v,
                        Term::Var(_) => true,
                    });
                    if !consts_ok {
                        continue;
                    }
                    for (t, v) in a.args.iter().zip(&g.args) {
                        if let Term::Var(x) = t {
                            d.get_mut(x).unwrap().insert(v.clone());
                        }
                    }
                }
            }
        }
        d
    }

    pub fn valuations(&self, trace: &[Vec<GroundAtom>], i: usize) -> Vec<BTreeMap<String, Value>> {
        let mut out = vec![BTreeMap::new()];
        for (var, dom) in self.domains(trace, i) {
            out = out
                .into_iter()
                .flat_map(|partial| {
                    let var = var.clone();
                    dom.iter().map(move |v| {
                        let mut p = partial.clone();
                        p.insert(var.clone(), v.clone());
                        p
                    })
                })
                .collect();
        }
        out
    }

    /// Violations at step `i`, sorted by valuation.
    pub fn violations_at(&self, trace: &[Vec<GroundAtom>], i: usize) -> Vec<Violation> {
        let mut out: Vec<Violation> = self
            .valuations(trace, i)
            .into_iter()
            .filter(|val| !self.holds(&self.policy.formula, trace, i, val))
            .map(|val| Violation { valuation: Valuation(val), event_index: i as u64 })
            .collect();
        out.sort();
        out
    }
}

pub fn ga(pred: &str, args: &[&str]) -> GroundAtom {
    GroundAtom::new(pred, args.iter().copied())
}

pub fn send_text_args(dest: &str) -> Vec<ArgValue> {
    [dest, "", "hello", "com.example.app"].iter().map(|s| ArgValue::Str(s.to_string())).collect()
}

/// A marshalled sendText payload.
pub fn send_text_buffer(reg: &SignatureRegistry, dest: &str) -> Vec<u8> {
    marshal(reg.lookup(ISMS, 5).unwrap(), &send_text_args(dest), reg).unwrap().into_bytes()
}

pub fn sms_line(uid: u32, dest: &str) -> String {
    format!("binder {uid} {ISMS} 5 {}", hex::encode(send_text_buffer(&fixtures::registry(), dest)))
}

pub type Log = Arc<Mutex<Vec<ServiceEvent>>>;

/// Interceptor wired to a service through a bridge.
pub struct Rig {
    pub interceptor: Interceptor,
    pub service: TracerService,
}

pub fn rig(registry: SignatureRegistry) -> Rig {
    let ctl = Arc::new(InterceptorControl::default());
    let bridge = Bridge::open(ctl.clone());
    let mut interceptor = Interceptor::with_control(ctl);
    let b = bridge.clone();
    interceptor
        .attach_all(move |e: &InterceptedEvent| {
            while let Err(BridgeError::QueueFull(_)) = b.send_event(e) {
                std::thread::yield_now();
            }
        })
        .unwrap();
    let service = TracerService::start(&bridge, Arc::new(registry)).unwrap();
    Rig { interceptor, service }
}

pub fn log_sub(id: &str, filter: UidFilter) -> (Subscription, Log) {
    let log: Log = Arc::default();
    let l = Arc::clone(&log);
    (Subscription::new(id, filter, move |e: &ServiceEvent| l.lock().unwrap().push(e.clone())), log)
}

pub fn count_for(log: &Log, uid: AppId) -> usize {
    log.lock().unwrap().iter().filter(|e| e.uid() == uid).count()
}

/// A test policy with the event alphabet used to drive it.
pub struct Case {
    pub policy: Policy,
    pub facts: BackgroundFacts,
    /// Event predicates and their arities.
    pub preds: Vec<(&'static str, usize)>,
}

impl Case {
    /// Every ground atom over `preds` with values drawn from `values`.
    pub fn letters(&self, values: &[&str]) -> Vec<GroundAtom> {
        let mut out = Vec::new();
        for &(pred, arity) in &self.preds {
            let mut tuples: Vec<Vec<&str>> = vec![Vec::new()];
            for _ in 0..arity {
                tuples = tuples
                    .into_iter()
                    .flat_map(|t| {
                        values.iter().map(move |v| {
                            let mut t = t.clone();
                            t.push(v);
                            t
                        })
                    })
                    .collect();
            }
            out.extend(tuples.iter().map(|t| ga(pred, t)));
        }
        out
    }
}

/// SMS policy, one SINCE formula, a late-binding ONCE formula and a
/// two-variable HISTORICALLY formula.
pub fn oracle_cases() -> Vec<Case> {
    let contacts = andmon_core::rv::parse_facts("contact 1").unwrap();
    let p = |s: &str| andmon_core::rv::parse_policy(s).unwrap();
    vec![
        Case {
            policy: p("policy sms: send_sms(app, num) IMPLIES contact(num)"),
            facts: contacts,
            preds: vec![("send_sms", 2), ("device_id", 1)],
        },
        Case {
            policy: p("policy since: q(x) IMPLIES PREV ((NOT q(x)) SINCE p(x))"),
            facts: BackgroundFacts::new(),
            preds: vec![("p", 1), ("q", 1)],
        },
        Case {
            policy: p("policy once: p(x, y) IMPLIES ONCE q(y)"),
            facts: BackgroundFacts::new(),
            preds: vec![("p", 2), ("q", 1)],
        },
        Case {
            policy: p("policy hist: p(x, y) AND PREV q(x) IMPLIES HISTORICALLY NOT q(y)"),
            facts: BackgroundFacts::new(),
            preds: vec![("p", 2), ("q", 1)],
        },
    ]
}

/// Steps a fresh monitor through `trace` and compares every step, and the
/// final binding count, with the oracle. Returns a description of the
/// first mismatch.
pub fn check_against_oracle(case: &Case, trace: &[Vec<GroundAtom>]) -> Result<(), String> {
    use andmon_core::rv::spawn_monitor;
    let mut m = spawn_monitor(AppId(10050), Arc::new(case.policy.clone()), &case.facts);
    let oracle = Oracle { policy: &case.policy, facts: &case.facts };
    for i in 0..trace.len() {
        let got = m.step(&trace[i]);
        let want = oracle.violations_at(trace, i);
        if got != want {
            return Err(format!("{} at step {i} of {trace:?}: monitor {got:?}, oracle {want:?}", case.policy.name));
        }
    }
    if let Some(last) = trace.len().checked_sub(1) {
        let want = oracle.valuations(trace, last).len();
        if m.binding_count() != want {
            return Err(format!("{}: {} bindings, expected {want} for {trace:?}", case.policy.name, m.binding_count()));
        }
    }
    Ok(())
}
