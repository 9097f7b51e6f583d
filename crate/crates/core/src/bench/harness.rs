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

//! Runs workloads in the three pipeline modes and compares them.
//!
//! All (workload, mode) slots of one workload are executed round-robin:
//! every round runs each slot once, in a freshly shuffled order, so slow
//! drift of the machine lands on all modes alike.

use std::fmt;
use std::hint::black_box;
use std::str::FromStr;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use super::stats::{summarize, welch, Summary, Welch, ALPHA};
use super::workload::{generate_events, Sort, Workload, WorkloadError, DEFAULT_EVENTS};
use crate::bridge::{Bridge, BridgeError};
use crate::events::{AppId, InterceptedEvent};
use crate::fixtures;
use crate::interceptor::{Interceptor, InterceptorControl, RawEvent};
use crate::parcel::SignatureRegistry;
use crate::rv::{parse_facts, parse_mapping, parse_policies, MonitorBank, RvClient};
use crate::service::{ServiceStats, Subscription, TracerService, UidFilter};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Mode {
    Baseline,
    InterceptOnly,
    FullPipeline,
    /// Full pipeline plus the policy monitor as subscriber.
    WithRv,
}

impl Mode {
    pub const DEFAULT: [Mode; 3] = [Mode::Baseline, Mode::InterceptOnly, Mode::FullPipeline];

    pub fn key(self) -> &'static str {
        match self {
            Mode::Baseline => "baseline",
            Mode::InterceptOnly => "intercept",
            Mode::FullPipeline => "full",
            Mode::WithRv => "rv",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Baseline => "Baseline",
            Mode::InterceptOnly => "InterceptOnly",
            Mode::FullPipeline => "FullPipeline",
            Mode::WithRv => "WithRv",
        })
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        [Mode::Baseline, Mode::InterceptOnly, Mode::FullPipeline, Mode::WithRv]
            .into_iter()
            .find(|m| m.key() == s.trim() || m.to_string().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| format!("unknown mode `{s}`"))
    }
}

pub fn parse_modes(s: &str) -> Result<Vec<Mode>, String> {
    let mut modes = s.split(',').map(str::parse).collect::<Result<Vec<Mode>, _>>()?;
    modes.sort();
    modes.dedup();
    Ok(modes)
}

#[derive(Debug, Error)]
pub enum BenchError {
    #[error(transparent)]
    Workload(#[from] WorkloadError),
    #[error("need at least 2 runs, got {0}")]
    TooFewRuns(usize),
    #[error("pipeline setup: {0}")]
    Pipeline(String),
    #[error("{sort}/{mode}: {generated} events fed but {accounted} reached the service")]
    EventLoss { sort: Sort, mode: Mode, generated: u64, accounted: u64 },
}

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub workloads: Vec<Sort>,
    pub runs: usize,
    /// Baseline is always measured, listed or not.
    pub modes: Vec<Mode>,
    pub seed: u64,
    pub event_count: usize,
    /// Add a second, independent Baseline series on the first workload and
    /// test it against the first.
    pub control: bool,
    /// Discarded rounds before measuring.
    pub warmup: usize,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            workloads: Sort::ALL.to_vec(),
            runs: 30,
            modes: Mode::DEFAULT.to_vec(),
            seed: 0,
            event_count: DEFAULT_EVENTS,
            control: true,
            warmup: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchCell {
    pub mode: Mode,
    pub mean_ms: f64,
    pub moe_ms: f64,
    /// Present iff `significant`.
    pub overhead_pct: Option<f64>,
    pub significant: bool,
    /// Welch test against Baseline; `None` for Baseline itself.
    pub test: Option<Welch>,
    pub samples_ms: Vec<f64>,
}

impl BenchCell {
    fn new(mode: Mode, samples_ms: Vec<f64>, base: Option<&[f64]>) -> Self {
        let s = summarize(&samples_ms);
        let test = base.map(|b| welch(&samples_ms, b));
        let significant = test.is_some_and(|t| t.rejects(ALPHA));
        let overhead_pct = match base {
            Some(b) if significant => {
                let bm = summarize(b).mean;
                Some((s.mean - bm) / bm * 100.0)
            }
            _ => None,
        };
        BenchCell { mode, mean_ms: s.mean, moe_ms: s.moe, overhead_pct, significant, test, samples_ms }
    }

    pub fn summary(&self) -> Summary {
        summarize(&self.samples_ms)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub sort: Sort,
    pub cells: Vec<BenchCell>,
}

impl BenchRow {
    pub fn cell(&self, mode: Mode) -> Option<&BenchCell> {
        self.cells.iter().find(|c| c.mode == mode)
    }
}

/// Baseline against a second Baseline series of the same workload.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlRow {
    pub sort: Sort,
    pub first: BenchCell,
    pub second: BenchCell,
}

impl ControlRow {
    pub fn significant(&self) -> bool {
        self.second.significant
    }
}

#[derive(Debug, Clone)]
pub struct BenchReport {
    pub config: BenchConfig,
    pub rows: Vec<BenchRow>,
    pub control: Option<ControlRow>,
    /// Summed over every measured pipeline run.
    pub service: ServiceStats,
    pub elapsed: Duration,
}

impl BenchReport {
    pub fn row(&self, sort: Sort) -> Option<&BenchRow> {
        self.rows.iter().find(|r| r.sort == sort)
    }

    /// Modes in column order.
    pub fn modes(&self) -> Vec<Mode> {
        let mut m: Vec<Mode> = self.rows.iter().flat_map(|r| r.cells.iter().map(|c| c.mode)).collect();
        m.sort();
        m.dedup();
        m
    }
}

fn push_retrying(bridge: &Bridge, e: &InterceptedEvent) {
    loop {
        match bridge.send_event(e) {
            Ok(()) => return,
            Err(BridgeError::QueueFull(_)) => std::thread::yield_now(),
            Err(other) => panic!("bridge failed under load: {other}"),
        }
    }
}

struct Pipeline {
    interceptor: Interceptor,
    service: TracerService,
    delivered: Arc<AtomicU64>,
    rv: Option<RvClient>,
}

impl Pipeline {
    fn new(registry: &Arc<SignatureRegistry>, uid: AppId, with_rv: bool) -> Result<Self, BenchError> {
        let ctl = Arc::new(InterceptorControl::default());
        let bridge = Bridge::open(ctl.clone());
        let mut interceptor = Interceptor::with_control(ctl);
        let b = bridge.clone();
        interceptor
            .attach_all(move |e: &InterceptedEvent| push_retrying(&b, e))
            .map_err(|e| BenchError::Pipeline(e.to_string()))?;
        let service =
            TracerService::start(&bridge, Arc::clone(registry)).map_err(|e| BenchError::Pipeline(e.to_string()))?;
        service.set_app_monitoring(uid, true).map_err(|e| BenchError::Pipeline(e.to_string()))?;
        let delivered = Arc::new(AtomicU64::new(0));
        let d = Arc::clone(&delivered);
        service
            .subscribe(Subscription::new("bench", UidFilter::All, move |_| {
                d.fetch_add(1, Ordering::Relaxed);
            }))
            .map_err(|e| BenchError::Pipeline(e.to_string()))?;
        let mut p = Pipeline { interceptor, service, delivered, rv: None };
        if with_rv {
            p.reset_rv()?;
        }
        Ok(p)
    }

    /// Fresh monitors, so every run starts from an empty history.
    fn reset_rv(&mut self) -> Result<(), BenchError> {
        let err = |e: String| BenchError::Pipeline(e);
        if self.rv.take().is_some() {
            self.service.unsubscribe("rv").map_err(|e| err(e.to_string()))?;
        }
        let set = parse_policies(fixtures::POLICIES).map_err(|e| err(e.to_string()))?;
        let facts = parse_facts(fixtures::CONTACTS).map_err(|e| err(e.to_string()))?;
        let mapping = parse_mapping(fixtures::MAPPING).map_err(|e| err(e.to_string()))?;
        let client = RvClient::new(MonitorBank::new(set.policies, facts, mapping));
        self.service.subscribe(client.subscription("rv", UidFilter::All)).map_err(|e| err(e.to_string()))?;
        self.rv = Some(client);
        Ok(())
    }

    fn run(&mut self, events: &[RawEvent]) -> Duration {
        let start = Instant::now();
        for e in events {
            self.interceptor.feed(e);
        }
        self.service.sync();
        start.elapsed()
    }
}

enum Slot {
    Baseline,
    Control,
    Intercept(Interceptor),
    Pipeline(Mode, Box<Pipeline>),
}

impl Slot {
    fn mode(&self) -> Option<Mode> {
        match self {
            Slot::Baseline => Some(Mode::Baseline),
            Slot::Control => None,
            Slot::Intercept(_) => Some(Mode::InterceptOnly),
            Slot::Pipeline(m, _) => Some(*m),
        }
    }

    fn run(&mut self, events: &[RawEvent]) -> Result<Duration, BenchError> {
        Ok(match self {
            Slot::Baseline | Slot::Control => {
                let start = Instant::now();
                for e in events {
                    black_box(e);
                }
                start.elapsed()
            }
            Slot::Intercept(i) => {
                let start = Instant::now();
                for e in events {
                    black_box(i.feed(e));
                }
                start.elapsed()
            }
            Slot::Pipeline(mode, p) => {
                if *mode == Mode::WithRv {
                    p.reset_rv()?;
                }
                let before = p.service.stats();
                let seen = p.delivered.load(Ordering::Relaxed);
                let d = p.run(events);
                let after = p.service.stats();
                let accounted = (after.decode_ok + after.decode_failed) - (before.decode_ok + before.decode_failed);
                let handed = p.delivered.load(Ordering::Relaxed) - seen;
                if accounted != events.len() as u64
                    || after.frames_in - before.frames_in != events.len() as u64
                    || handed != after.decode_ok - before.decode_ok
                {
                    return Err(BenchError::EventLoss {
                        sort: Sort::GetDeviceId,
                        mode: *mode,
                        generated: events.len() as u64,
                        accounted,
                    });
                }
                d
            }
        })
    }
}

fn add_stats(total: &mut ServiceStats, s: ServiceStats) {
    total.frames_in += s.frames_in;
    total.decode_ok += s.decode_ok;
    total.decode_failed += s.decode_failed;
    total.delivered += s.delivered;
    total.notices += s.notices;
}

fn ms(d: Duration) -> f64 {
    d.as_secs_f64() * 1e3
}

pub fn run_bench(config: &BenchConfig) -> Result<BenchReport, BenchError> {
    if config.runs < 2 {
        return Err(BenchError::TooFewRuns(config.runs));
    }
    let started = Instant::now();
    let registry = Arc::new(fixtures::registry());
    let mut modes = config.modes.clone();
    modes.push(Mode::Baseline);
    modes.sort();
    modes.dedup();

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut rows = Vec::new();
    let mut control = None;
    let mut service = ServiceStats::default();

    for (wi, &sort) in config.workloads.iter().enumerate() {
        let w = Workload::new(sort, config.event_count)?;
        let events = generate_events(&w, config.seed, &registry)?;
        let mut slots = Vec::new();
        for &mode in &modes {
            slots.push(match mode {
                Mode::Baseline => Slot::Baseline,
                Mode::InterceptOnly => {
                    let mut i = Interceptor::new();
                    i.attach_all(|_: &InterceptedEvent| {}).map_err(|e| BenchError::Pipeline(e.to_string()))?;
                    i.set_monitored(w.uid, true);
                    Slot::Intercept(i)
                }
                Mode::FullPipeline | Mode::WithRv => {
                    Slot::Pipeline(mode, Box::new(Pipeline::new(&registry, w.uid, mode == Mode::WithRv)?))
                }
            });
        }
        let with_control = config.control && wi == 0;
        if with_control {
            slots.push(Slot::Control);
        }

        let mut order: Vec<usize> = (0..slots.len()).collect();
        let mut samples: Vec<Vec<f64>> = vec![Vec::with_capacity(config.runs); slots.len()];
        for round in 0..config.warmup + config.runs {
            order.shuffle(&mut rng);
            for &s in &order {
                let d = slots[s].run(&events).map_err(|e| match e {
                    BenchError::EventLoss { mode, generated, accounted, .. } => {
                        BenchError::EventLoss { sort, mode, generated, accounted }
                    }
                    other => other,
                })?;
                if round >= config.warmup {
                    samples[s].push(ms(d));
                }
            }
        }

        let base_idx = slots.iter().position(|s| s.mode() == Some(Mode::Baseline)).expect("baseline slot");
        let base = samples[base_idx].clone();
        let mut cells = Vec::new();
        for (slot, xs) in slots.iter().zip(&samples) {
            match slot.mode() {
                Some(Mode::Baseline) => cells.push(BenchCell::new(Mode::Baseline, xs.clone(), None)),
                Some(m) => cells.push(BenchCell::new(m, xs.clone(), Some(&base))),
                None => {
                    control = Some(ControlRow {
                        sort,
                        first: BenchCell::new(Mode::Baseline, base.clone(), None),
                        second: BenchCell::new(Mode::Baseline, xs.clone(), Some(&base)),
                    })
                }
            }
        }
        cells.sort_by_key(|c| c.mode);
        rows.push(BenchRow { sort, cells });
        for slot in slots {
            if let Slot::Pipeline(_, p) = slot {
                add_stats(&mut service, p.service.stats());
                p.service.bridge().close();
            }
        }
    }
    Ok(BenchReport { config: config.clone(), rows, control, service, elapsed: started.elapsed() })
}
