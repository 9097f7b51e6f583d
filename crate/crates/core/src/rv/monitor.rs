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

//! Incremental monitor for one (app, policy) pair.
//!
//! Each valuation of the policy's variables gets its own propositional
//! past-time monitor: a vector holding the previous-step truth of every
//! subformula. Valuations range over the values that have appeared at the
//! variable's argument positions in matching event predicates.
//!
//! A placeholder value `UNSEEN` stands for "any value not observed yet".
//! The all-placeholder binding exists from the start and tracks what every
//! not-yet-seen value would have evaluated to. When a value first appears,
//! bindings holding the placeholder in that variable are cloned with the
//! new value, so the new valuation starts with its exact history instead of
//! an empty one. Values occurring in background facts are seeded at spawn
//! because a background atom can hold for them before they are observed.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::sync::Arc;

use super::facts::BackgroundFacts;
use super::formula::{Formula, Policy, Term, Value};
use super::mapping::GroundAtom;
use crate::events::AppId;

const UNSEEN: u32 = u32::MAX;

/// Binding count above which `Exec::Par` uses the thread pool.
pub const PAR_THRESHOLD: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exec {
    Seq,
    Par,
}

impl Default for Exec {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Exec::Par
        } else {
            Exec::Seq
        }
    }
}

/// A complete assignment of values to a policy's free variables.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Valuation(pub BTreeMap<String, Value>);

impl Valuation {
    pub fn get(&self, var: &str) -> Option<&Value> {
        self.0.get(var)
    }
}

impl<K: Into<String>, V: Into<Value>> FromIterator<(K, V)> for Valuation {
    fn from_iter<I: IntoIterator<Item = (K, V)>>(iter: I) -> Self {
        Valuation(iter.into_iter().map(|(k, v)| (k.into(), v.into())).collect())
    }
}

impl fmt::Display for Valuation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, (k, v)) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{k}: {:?}", v.0)?;
        }
        f.write_str("}")
    }
}

/// The policy is false at step `event_index` under `valuation`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Violation {
    pub valuation: Valuation,
    pub event_index: u64,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Violation({}, {})", self.valuation, self.event_index)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    Ok,
    Violation(Violation),
}

#[derive(Debug, Clone, Copy)]
enum Slot {
    Var(usize),
    Const(u32),
}

#[derive(Debug, Clone)]
struct AtomPlan {
    pred: String,
    slots: Vec<Slot>,
}

#[derive(Debug, Clone, Copy)]
enum Node {
    True,
    False,
    Event(usize),
    Background(usize),
    Not(usize),
    And(usize, usize),
    Or(usize, usize),
    Implies(usize, usize),
    Prev(usize),
    Once(usize),
    Historically(usize),
    Since(usize, usize),
}

#[derive(Debug, Clone, Default)]
struct Interner {
    ids: HashMap<Value, u32>,
    values: Vec<Value>,
}

impl Interner {
    fn intern(&mut self, v: &Value) -> u32 {
        if let Some(&id) = self.ids.get(v) {
            return id;
        }
        let id = self.values.len() as u32;
        self.values.push(v.clone());
        self.ids.insert(v.clone(), id);
        id
    }

    fn get(&self, v: &Value) -> Option<u32> {
        self.ids.get(v).copied()
    }
}

#[derive(Debug, Clone)]
struct Binding {
    key: Vec<u32>,
    prev: Vec<bool>,
}

#[derive(Clone)]
pub struct MonitorInstance {
    uid: AppId,
    policy: Arc<Policy>,
    nodes: Vec<Node>,
    event_atoms: Vec<AtomPlan>,
    background_atoms: Vec<(AtomPlan, HashSet<Vec<u32>>)>,
    interner: Interner,
    domains: Vec<HashSet<u32>>,
    seen: Vec<HashSet<u32>>,
    bindings: Vec<Binding>,
    step: u64,
    exec: Exec,
}

impl fmt::Debug for MonitorInstance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MonitorInstance")
            .field("uid", &self.uid)
            .field("policy", &self.policy.name)
            .field("bindings", &self.binding_count())
            .field("step", &self.step)
            .finish()
    }
}

struct Compiler<'a> {
    vars: &'a [String],
    interner: &'a mut Interner,
    nodes: Vec<Node>,
    event_atoms: Vec<AtomPlan>,
    background_atoms: Vec<AtomPlan>,
}

impl Compiler<'_> {
    fn compile(&mut self, f: &Formula) -> usize {
        let node = match f {
            Formula::True => Node::True,
            Formula::False => Node::False,
            Formula::Atom(a) => {
                let slots = a
                    .args
                    .iter()
                    .map(|t| match t {
                        Term::Var(v) => Slot::Var(self.vars.iter().position(|x| x == v).expect("free variable")),
                        Term::Const(c) => Slot::Const(self.interner.intern(c)),
                    })
                    .collect();
                let plan = AtomPlan { pred: a.pred.clone(), slots };
                if a.background {
                    self.background_atoms.push(plan);
                    Node::Background(self.background_atoms.len() - 1)
                } else {
                    self.event_atoms.push(plan);
                    Node::Event(self.event_atoms.len() - 1)
                }
            }
            Formula::Not(c) => Node::Not(self.compile(c)),
            Formula::Prev(c) => Node::Prev(self.compile(c)),
            Formula::Once(c) => Node::Once(self.compile(c)),
            Formula::Historically(c) => Node::Historically(self.compile(c)),
            Formula::And(l, r) => {
                let (l, r) = (self.compile(l), self.compile(r));
                Node::And(l, r)
            }
            Formula::Or(l, r) => {
                let (l, r) = (self.compile(l), self.compile(r));
                Node::Or(l, r)
            }
            Formula::Implies(l, r) => {
                let (l, r) = (self.compile(l), self.compile(r));
                Node::Implies(l, r)
            }
            Formula::Since(l, r) => {
                let (l, r) = (self.compile(l), self.compile(r));
                Node::Since(l, r)
            }
        };
        self.nodes.push(node);
        self.nodes.len() - 1
    }
}

/// Ground tuples of the current step that an event atom could match,
/// already filtered on the atom's constants.
type Candidates = Vec<Vec<Vec<u32>>>;

/// Creates an instance with no complete bindings at step 0.
pub fn spawn_monitor(uid: AppId, policy: Arc<Policy>, background: &BackgroundFacts) -> MonitorInstance {
    let mut interner = Interner::default();
    let mut c = Compiler {
        vars: &policy.vars,
        interner: &mut interner,
        nodes: Vec::new(),
        event_atoms: Vec::new(),
        background_atoms: Vec::new(),
    };
    c.compile(&policy.formula);
    let (nodes, event_atoms, bg_plans) = (c.nodes, c.event_atoms, c.background_atoms);
    let nvars = policy.vars.len();
    let mut m = MonitorInstance {
        uid,
        nodes,
        event_atoms,
        background_atoms: Vec::new(),
        interner,
        domains: vec![HashSet::new(); nvars],
        seen: vec![HashSet::new(); nvars],
        bindings: Vec::new(),
        step: 0,
        exec: Exec::default(),
        policy,
    };
    m.bindings.push(Binding { key: vec![UNSEEN; nvars], prev: vec![false; m.nodes.len()] });
    for plan in bg_plans {
        let mut set = HashSet::new();
        for tuple in background.tuples(&plan.pred).filter(|t| t.len() == plan.slots.len()) {
            let ids: Vec<u32> = tuple.iter().map(|v| m.interner.intern(v)).collect();
            for (slot, &id) in plan.slots.iter().zip(&ids) {
                if let Slot::Var(x) = slot {
                    m.extend_domain(*x, id);
                }
            }
            set.insert(ids);
        }
        m.background_atoms.push((plan, set));
    }
    m
}

impl MonitorInstance {
    pub fn uid(&self) -> AppId {
        self.uid
    }

    pub fn policy(&self) -> &Policy {
        &self.policy
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    pub fn set_exec(&mut self, exec: Exec) {
        self.exec = exec;
    }

    pub fn subformula_count(&self) -> usize {
        self.nodes.len()
    }

    /// Complete valuations whose values were all observed in events.
    pub fn binding_count(&self) -> usize {
        self.bindings.iter().filter(|b| self.is_observed(&b.key)).count()
    }

    /// Every binding held, including placeholder and background-seeded ones.
    pub fn state_size(&self) -> usize {
        self.bindings.len()
    }

    /// Verdict of the last step for every counted binding, by valuation.
    pub fn verdicts(&self) -> Vec<(Valuation, Verdict)> {
        let root = self.nodes.len() - 1;
        let mut out: Vec<_> = self
            .bindings
            .iter()
            .filter(|b| self.step > 0 && self.is_observed(&b.key))
            .map(|b| {
                let valuation = self.valuation(&b.key);
                let v = if b.prev[root] {
                    Verdict::Ok
                } else {
                    Verdict::Violation(Violation { valuation: valuation.clone(), event_index: self.step - 1 })
                };
                (valuation, v)
            })
            .collect();
        out.sort_by(|a, b| a.0.cmp(&b.0));
        out
    }

    fn is_observed(&self, key: &[u32]) -> bool {
        key.iter().zip(&self.seen).all(|(k, s)| s.contains(k))
    }

    fn valuation(&self, key: &[u32]) -> Valuation {
        Valuation(
            self.policy
                .vars
                .iter()
                .zip(key)
                .map(|(v, &id)| (v.clone(), self.interner.values[id as usize].clone()))
                .collect(),
        )
    }

    fn extend_domain(&mut self, x: usize, id: u32) {
        if !self.domains[x].insert(id) {
            return;
        }
        let clones: Vec<Binding> = self
            .bindings
            .iter()
            .filter(|b| b.key[x] == UNSEEN)
            .map(|b| {
                let mut c = b.clone();
                c.key[x] = id;
                c
            })
            .collect();
        self.bindings.extend(clones);
    }

    /// Advances one event. `events` is the set of ground predicates the event
    /// maps to, possibly empty. Returns one violation per observed binding
    /// whose policy is false now, sorted by valuation.
    pub fn step(&mut self, events: &[GroundAtom]) -> Vec<Violation> {
        let mut cands: Candidates = vec![Vec::new(); self.event_atoms.len()];
        for ev in events {
            let ids: Vec<u32> = ev.args.iter().map(|v| self.interner.intern(v)).collect();
            for (a, plan) in self.event_atoms.iter().enumerate() {
                let matches = plan.pred == ev.pred
                    && plan.slots.len() == ids.len()
                    && plan.slots.iter().zip(&ids).all(|(s, id)| !matches!(s, Slot::Const(c) if c != id));
                if matches {
                    cands[a].push(ids.clone());
                }
            }
        }
        for (a, cand) in cands.iter().enumerate() {
            for t in cand {
                for (j, slot) in self.event_atoms[a].slots.iter().enumerate() {
                    if let Slot::Var(x) = *slot {
                        self.seen[x].insert(t[j]);
                    }
                }
            }
            for t in cand {
                let slots = self.event_atoms[a].slots.clone();
                for (j, slot) in slots.iter().enumerate() {
                    if let Slot::Var(x) = *slot {
                        self.extend_domain(x, t[j]);
                    }
                }
            }
        }

        let has_prev = self.step > 0;
        let ctx = EvalCtx {
            nodes: &self.nodes,
            event_atoms: &self.event_atoms,
            background_atoms: &self.background_atoms,
            cands: &cands,
            has_prev,
        };
        let root = self.nodes.len() - 1;
        let n = self.nodes.len();
        let falsified: Vec<Vec<u32>> = match self.exec {
            #[cfg(feature = "parallel")]
            Exec::Par if self.bindings.len() >= PAR_THRESHOLD => {
                use rayon::prelude::*;
                self.bindings
                    .par_iter_mut()
                    .map_init(
                        || (vec![false; n], Vec::new()),
                        |(now, scratch), b| {
                            ctx.eval(b, now, scratch);
                            (!b.prev[root]).then(|| b.key.clone())
                        },
                    )
                    .flatten()
                    .collect()
            }
            _ => {
                let (mut now, mut scratch) = (vec![false; n], Vec::new());
                self.bindings
                    .iter_mut()
                    .filter_map(|b| {
                        ctx.eval(b, &mut now, &mut scratch);
                        (!b.prev[root]).then(|| b.key.clone())
                    })
                    .collect()
            }
        };
        let index = self.step;
        self.step += 1;
        let mut out: Vec<Violation> = falsified
            .into_iter()
            .filter(|k| self.is_observed(k))
            .map(|k| Violation { valuation: self.valuation(&k), event_index: index })
            .collect();
        out.sort();
        out
    }

    /// Value id lookup for tests and diagnostics.
    pub fn knows_value(&self, v: &Value) -> bool {
        self.interner.get(v).is_some()
    }
}

struct EvalCtx<'a> {
    nodes: &'a [Node],
    event_atoms: &'a [AtomPlan],
    background_atoms: &'a [(AtomPlan, HashSet<Vec<u32>>)],
    cands: &'a Candidates,
    has_prev: bool,
}

impl EvalCtx<'_> {
    fn eval(&self, b: &mut Binding, now: &mut [bool], scratch: &mut Vec<u32>) {
        let key = &b.key;
        let prev = &b.prev;
        let hp = self.has_prev;
        for (i, node) in self.nodes.iter().enumerate() {
            now[i] = match *node {
                Node::True => true,
                Node::False => false,
                Node::Event(a) => {
                    let slots = &self.event_atoms[a].slots;
                    self.cands[a].iter().any(|t| {
                        slots.iter().zip(t).all(|(s, id)| match *s {
                            Slot::Var(x) => key[x] == *id,
                            Slot::Const(_) => true,
                        })
                    })
                }
                Node::Background(a) => {
                    let (plan, set) = &self.background_atoms[a];
                    scratch.clear();
                    let mut complete = true;
                    for s in &plan.slots {
                        let id = match *s {
                            Slot::Var(x) => key[x],
                            Slot::Const(c) => c,
                        };
                        complete &= id != UNSEEN;
                        scratch.push(id);
                    }
                    complete && set.contains(scratch.as_slice())
                }
                Node::Not(c) => !now[c],
                Node::And(l, r) => now[l] && now[r],
                Node::Or(l, r) => now[l] || now[r],
                Node::Implies(l, r) => !now[l] || now[r],
                Node::Prev(c) => hp && prev[c],
                Node::Once(c) => now[c] || (hp && prev[i]),
                Node::Historically(c) => now[c] && (!hp || prev[i]),
                Node::Since(l, r) => now[r] || (now[l] && hp && prev[i]),
            };
        }
        b.prev.copy_from_slice(now);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rv::facts::parse_facts;
    use crate::rv::parser::parse_policy;

    fn sms() -> Arc<Policy> {
        Arc::new(parse_policy("send_sms(app, num) IMPLIES contact(num)").unwrap())
    }

    fn ev(pred: &str, args: &[&str]) -> GroundAtom {
        GroundAtom::new(pred, args.iter().copied())
    }

    #[test]
    fn spawn_is_empty() {
        let contacts = parse_facts("contact 123").unwrap();
        let m = spawn_monitor(AppId(10050), sms(), &contacts);
        assert_eq!(m.binding_count(), 0);
        assert_eq!(m.step_count(), 0);
        assert!(m.knows_value(&"123".into()));
    }

    #[test]
    fn spawn_twice_is_independent() {
        let facts = BackgroundFacts::new();
        let mut a = spawn_monitor(AppId(10050), sms(), &facts);
        let b = spawn_monitor(AppId(10050), sms(), &facts);
        a.step(&[ev("send_sms", &["10050", "555"])]);
        assert_eq!(a.binding_count(), 1);
        assert_eq!(b.binding_count(), 0);
    }

    #[test]
    fn sms_to_contact_is_ok() {
        let contacts = parse_facts("contact 123").unwrap();
        let mut m = spawn_monitor(AppId(10050), sms(), &contacts);
        assert_eq!(m.step(&[ev("send_sms", &["10050", "123"])]), vec![]);
    }

    #[test]
    fn sms_to_stranger_violates() {
        let mut m = spawn_monitor(AppId(10050), sms(), &BackgroundFacts::new());
        let v = m.step(&[ev("send_sms", &["10050", "555"])]);
        let want: Valuation = [("app", "10050"), ("num", "555")].into_iter().collect();
        assert_eq!(v, vec![Violation { valuation: want, event_index: 0 }]);
        assert_eq!(v[0].to_string(), "Violation({app: \"10050\", num: \"555\"}, 0)");
    }

    #[test]
    fn unrelated_event_is_vacuous() {
        let mut m = spawn_monitor(AppId(10050), sms(), &BackgroundFacts::new());
        assert_eq!(m.step(&[ev("device_id", &["10050"])]), vec![]);
        assert_eq!(m.step(&[]), vec![]);
        assert_eq!(m.binding_count(), 0);
    }

    #[test]
    fn late_value_inherits_history() {
        let p = Arc::new(parse_policy("p(x, y) IMPLIES ONCE q(y)").unwrap());
        let mut m = spawn_monitor(AppId(1), p, &BackgroundFacts::new());
        assert!(m.step(&[ev("q", &["b"])]).is_empty());
        assert!(m.step(&[ev("p", &["a", "b"])]).is_empty());
        assert_eq!(m.step(&[ev("p", &["a", "c"])]).len(), 1);
    }

    #[test]
    fn historically_and_prev() {
        let p = Arc::new(parse_policy("stop(x) IMPLIES PREV HISTORICALLY NOT go(x)").unwrap());
        let mut m = spawn_monitor(AppId(1), p, &BackgroundFacts::new());
        assert_eq!(m.step(&[ev("stop", &["a"])]).len(), 1);
        assert!(m.step(&[ev("stop", &["a"])]).is_empty());
        assert!(m.step(&[ev("go", &["a"])]).is_empty());
        assert_eq!(m.step(&[ev("stop", &["a"])]).len(), 1);
    }

    #[test]
    fn constants_filter_matches() {
        let p = Arc::new(parse_policy("send_sms(app, \"900\") IMPLIES FALSE").unwrap());
        let mut m = spawn_monitor(AppId(1), p, &BackgroundFacts::new());
        assert!(m.step(&[ev("send_sms", &["1", "123"])]).is_empty());
        assert_eq!(m.step(&[ev("send_sms", &["1", "900"])]).len(), 1);
        assert_eq!(m.binding_count(), 1);
    }

    #[test]
    fn growth_is_product_of_domains() {
        let p = Arc::new(parse_policy("r(x, y, z) IMPLIES ONCE s(x)").unwrap());
        let mut m = spawn_monitor(AppId(1), p, &BackgroundFacts::new());
        for i in 0..3 {
            m.step(&[ev("r", &[&format!("x{i}"), "y0", "z0"])]);
        }
        for i in 0..4 {
            m.step(&[ev("r", &["x0", &format!("y{i}"), "z0"])]);
        }
        for i in 0..2 {
            m.step(&[ev("r", &["x0", "y0", &format!("z{i}")])]);
        }
        assert_eq!(m.binding_count(), 3 * 4 * 2);
    }

    #[test]
    fn seq_and_par_agree() {
        let p = Arc::new(parse_policy("r(x, y) IMPLIES (NOT s(x)) SINCE t(y)").unwrap());
        let mut a = spawn_monitor(AppId(1), p.clone(), &BackgroundFacts::new());
        let mut b = spawn_monitor(AppId(1), p, &BackgroundFacts::new());
        a.set_exec(Exec::Seq);
        b.set_exec(Exec::Par);
        for i in 0..200u32 {
            let e = match i % 3 {
                0 => ev("r", &[&(i % 37).to_string(), &(i % 41).to_string()]),
                1 => ev("t", &[&(i % 41).to_string()]),
                _ => ev("s", &[&(i % 37).to_string()]),
            };
            assert_eq!(a.step(std::slice::from_ref(&e)), b.step(&[e]));
        }
        assert!(a.state_size() > PAR_THRESHOLD);
    }
}
