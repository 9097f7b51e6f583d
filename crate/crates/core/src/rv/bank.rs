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

//! One monitor per (app, policy), created on the app's first event.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::{Arc, Mutex};

use super::facts::BackgroundFacts;
use super::formula::Policy;
use super::mapping::{map_event, EventMapping, GroundAtom, MappingError};
use super::monitor::{spawn_monitor, Exec, MonitorInstance, Violation};
use crate::events::AppId;
use crate::service::{ServiceEvent, Subscription, UidFilter};

/// A violation attributed to its app and policy.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Report {
    pub uid: AppId,
    pub policy: String,
    pub violation: Violation,
}

impl std::fmt::Display for Report {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "[{}] {}: {}", self.uid, self.policy, self.violation)
    }
}

pub struct MonitorBank {
    policies: Vec<Arc<Policy>>,
    facts: BackgroundFacts,
    mapping: EventMapping,
    instances: BTreeMap<AppId, Vec<MonitorInstance>>,
    exempt: BTreeSet<AppId>,
    exec: Exec,
}

impl MonitorBank {
    pub fn new(policies: Vec<Policy>, facts: BackgroundFacts, mapping: EventMapping) -> Self {
        MonitorBank {
            policies: policies.into_iter().map(Arc::new).collect(),
            facts,
            mapping,
            instances: BTreeMap::new(),
            exempt: BTreeSet::new(),
            exec: Exec::default(),
        }
    }

    pub fn set_exec(&mut self, exec: Exec) {
        self.exec = exec;
        for m in self.instances.values_mut().flatten() {
            m.set_exec(exec);
        }
    }

    /// Exempt apps are not monitored; their existing monitors are kept but
    /// receive no further events.
    pub fn set_exempt(&mut self, uid: AppId, exempt: bool) {
        if exempt {
            self.exempt.insert(uid);
        } else {
            self.exempt.remove(&uid);
        }
    }

    pub fn is_exempt(&self, uid: AppId) -> bool {
        self.exempt.contains(&uid)
    }

    pub fn monitors(&self, uid: AppId) -> &[MonitorInstance] {
        self.instances.get(&uid).map_or(&[], Vec::as_slice)
    }

    pub fn apps(&self) -> impl Iterator<Item = AppId> + '_ {
        self.instances.keys().copied()
    }

    fn ensure(&mut self, uid: AppId) {
        if !self.instances.contains_key(&uid) {
            let ms = self
                .policies
                .iter()
                .map(|p| {
                    let mut m = spawn_monitor(uid, p.clone(), &self.facts);
                    m.set_exec(self.exec);
                    m
                })
                .collect();
            self.instances.insert(uid, ms);
        }
    }

    fn step_app(monitors: &mut [MonitorInstance], atoms: &[GroundAtom]) -> Vec<Report> {
        monitors
            .iter_mut()
            .flat_map(|m| {
                let name = m.policy().name.clone();
                let uid = m.uid();
                m.step(atoms).into_iter().map(move |violation| Report { uid, policy: name.clone(), violation })
            })
            .collect()
    }

    /// Routes one event to its app's monitors.
    pub fn observe(&mut self, e: &ServiceEvent) -> Result<Vec<Report>, MappingError> {
        let uid = e.uid();
        if self.is_exempt(uid) {
            return Ok(Vec::new());
        }
        let atoms = map_event(e, &self.mapping)?;
        self.ensure(uid);
        Ok(Self::step_app(self.instances.get_mut(&uid).expect("spawned"), &atoms))
    }

    /// Processes a batch. Order is preserved per app; apps are stepped
    /// independently, in parallel with the `parallel` feature. Nothing is
    /// stepped if any event fails to map. Reports come out grouped by app.
    pub fn step_batch(&mut self, events: &[ServiceEvent]) -> Result<Vec<Report>, MappingError> {
        let mut groups: BTreeMap<AppId, Vec<Vec<GroundAtom>>> = BTreeMap::new();
        for e in events {
            if self.is_exempt(e.uid()) {
                continue;
            }
            let atoms = map_event(e, &self.mapping)?;
            groups.entry(e.uid()).or_default().push(atoms);
        }
        for &uid in groups.keys() {
            self.ensure(uid);
        }
        let mut work: Vec<(Vec<MonitorInstance>, Vec<Vec<GroundAtom>>)> =
            groups.into_iter().map(|(uid, steps)| (self.instances.remove(&uid).expect("spawned"), steps)).collect();
        let run = |(ms, steps): &mut (Vec<MonitorInstance>, Vec<Vec<GroundAtom>>)| {
            steps.iter().flat_map(|atoms| Self::step_app(ms, atoms)).collect::<Vec<_>>()
        };
        let reports: Vec<Vec<Report>> = match self.exec {
            #[cfg(feature = "parallel")]
            Exec::Par => {
                use rayon::prelude::*;
                work.par_iter_mut().map(run).collect()
            }
            _ => work.iter_mut().map(run).collect(),
        };
        for (ms, _) in work {
            let uid = ms.first().map(MonitorInstance::uid);
            if let Some(uid) = uid {
                self.instances.insert(uid, ms);
            }
        }
        Ok(reports.into_iter().flatten().collect())
    }
}

/// Feeds a shared [`MonitorBank`] from a service subscription and collects
/// its reports.
#[derive(Clone)]
pub struct RvClient {
    bank: Arc<Mutex<MonitorBank>>,
    reports: Arc<Mutex<Vec<Report>>>,
    errors: Arc<Mutex<Vec<MappingError>>>,
}

impl RvClient {
    pub fn new(bank: MonitorBank) -> Self {
        RvClient {
            bank: Arc::new(Mutex::new(bank)),
            reports: Arc::new(Mutex::new(Vec::new())),
            errors: Arc::new(Mutex::new(Vec::new())),
        }
    }

    pub fn subscription(&self, client_id: impl Into<String>, uid_filter: UidFilter) -> Subscription {
        let me = self.clone();
        Subscription::new(client_id, uid_filter, move |e| {
            let res = me.bank.lock().unwrap().observe(e);
            match res {
                Ok(r) => me.reports.lock().unwrap().extend(r),
                Err(err) => me.errors.lock().unwrap().push(err),
            }
        })
    }

    pub fn reports(&self) -> Vec<Report> {
        self.reports.lock().unwrap().clone()
    }

    pub fn errors(&self) -> Vec<MappingError> {
        self.errors.lock().unwrap().clone()
    }

    pub fn with_bank<R>(&self, f: impl FnOnce(&mut MonitorBank) -> R) -> R {
        f(&mut self.bank.lock().unwrap())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::events::{ArgValue, DecodedCall, SyscallEvent};
    use crate::fixtures;
    use crate::rv::{parse_facts, parse_mapping, parse_policies};

    fn bank() -> MonitorBank {
        let set = parse_policies(fixtures::POLICIES).unwrap();
        MonitorBank::new(
            set.policies,
            parse_facts(fixtures::CONTACTS).unwrap(),
            parse_mapping(fixtures::MAPPING).unwrap(),
        )
    }

    fn sms(uid: u32, dest: &str) -> ServiceEvent {
        ServiceEvent::Call(DecodedCall {
            sender: AppId(uid),
            interface_name: fixtures::ISMS.into(),
            method_name: "sendText".into(),
            args: vec![
                ArgValue::Str(dest.into()),
                ArgValue::Str(String::new()),
                ArgValue::Str("hi".into()),
                ArgValue::Str(String::new()),
            ],
            timestamp: 0,
        })
    }

    #[test]
    fn per_app_instances() {
        let mut b = bank();
        assert!(b.observe(&sms(10050, "123")).unwrap().is_empty());
        let r = b.observe(&sms(10051, "555")).unwrap();
        assert_eq!(r.len(), 1);
        assert_eq!(r[0].uid, AppId(10051));
        assert_eq!(r[0].policy, "sms_to_contacts");
        assert_eq!(b.monitors(AppId(10050))[0].step_count(), 1);
        assert_eq!(b.apps().count(), 2);
    }

    #[test]
    fn exemption() {
        let mut b = bank();
        b.set_exempt(AppId(10050), true);
        assert!(b.observe(&sms(10050, "555")).unwrap().is_empty());
        assert!(b.monitors(AppId(10050)).is_empty());
        b.set_exempt(AppId(10050), false);
        assert_eq!(b.observe(&sms(10050, "555")).unwrap().len(), 1);
    }

    #[test]
    fn batch_matches_sequential() {
        let events: Vec<ServiceEvent> = (0..60)
            .map(|i| match i % 4 {
                3 => ServiceEvent::Syscall(SyscallEvent::open(AppId(10000 + i % 5), i as u64, "/sdcard/x").unwrap()),
                _ => sms(10000 + i % 5, &(i % 7).to_string()),
            })
            .collect();
        let mut a = bank();
        let mut seq: Vec<Report> = events.iter().flat_map(|e| a.observe(e).unwrap()).collect();
        let mut b = bank();
        let mut par = b.step_batch(&events).unwrap();
        seq.sort();
        par.sort();
        assert_eq!(seq, par);
        assert!(!seq.is_empty());
    }
}
