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

//! Kernel-side event source.
//!
//! Three probe points mirror the hooks a kprobes module would install:
//! `sys_open`, `sys_connect` and the Binder driver's `binder_thread_write`.
//! Raw events are fed in programmatically or replayed from a trace file;
//! an event is emitted only when its probe is attached, interception is
//! globally on, the sender UID is monitored and the per-probe filter
//! accepts it.

mod trace;

use std::collections::{HashMap, HashSet};
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::{Arc, RwLock};

use thiserror::Error;

use crate::clock;
use crate::events::{AddrFamily, AppId, BinderTransactionRecord, InterceptedEvent, SyscallEvent};

pub use trace::{parse_trace, RawEvent, TraceError};

pub const DEFAULT_SDCARD_SUBSTRING: &str = "sdcard";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ProbePoint {
    SysOpen,
    SysConnect,
    BinderThreadWrite,
}

impl ProbePoint {
    pub const ALL: [ProbePoint; 3] = [ProbePoint::SysOpen, ProbePoint::SysConnect, ProbePoint::BinderThreadWrite];
}

/// Binder driver command written by a sender thread. Only
/// `Transaction` (`BC_TRANSACTION`) starts a new call.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinderCommand {
    Transaction,
    Reply,
    FreeBuffer,
    Other(u32),
}

/// The driver's in-flight transaction data. Mutable on purpose: the
/// interceptor snapshots it before it is handed on.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawTransaction {
    pub sender_euid: AppId,
    pub code: u32,
    pub buffer: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum InterceptError {
    #[error("probe {0:?} already attached")]
    AlreadyAttached(ProbePoint),
    #[error("probe {0:?} not attached")]
    NotAttached(ProbePoint),
}

pub type ProbeHandler = Box<dyn FnMut(&InterceptedEvent) + Send>;

/// Switches that user space may flip from another thread. Changes are
/// visible to the next raw event.
#[derive(Debug)]
pub struct InterceptorControl {
    enabled: AtomicBool,
    monitored: RwLock<HashSet<AppId>>,
}

impl Default for InterceptorControl {
    fn default() -> Self {
        InterceptorControl { enabled: AtomicBool::new(true), monitored: RwLock::new(HashSet::new()) }
    }
}

impl InterceptorControl {
    pub fn set_global(&self, on: bool) {
        self.enabled.store(on, Ordering::SeqCst);
    }

    pub fn set_monitored(&self, uid: AppId, on: bool) {
        let mut set = self.monitored.write().unwrap_or_else(|e| e.into_inner());
        if on {
            set.insert(uid);
        } else {
            set.remove(&uid);
        }
    }

    pub fn is_enabled(&self) -> bool {
        self.enabled.load(Ordering::SeqCst)
    }

    pub fn is_monitored(&self, uid: AppId) -> bool {
        self.monitored.read().unwrap_or_else(|e| e.into_inner()).contains(&uid)
    }

    pub fn monitored(&self) -> Vec<AppId> {
        let mut v: Vec<_> = self.monitored.read().unwrap_or_else(|e| e.into_inner()).iter().copied().collect();
        v.sort();
        v
    }

    fn admits(&self, uid: AppId) -> bool {
        self.is_enabled() && self.is_monitored(uid)
    }
}

pub struct Interceptor {
    control: Arc<InterceptorControl>,
    probes: HashMap<ProbePoint, ProbeHandler>,
    sdcard_substring: String,
    max_payload: usize,
    dropped_malformed: AtomicU64,
}

impl Default for Interceptor {
    fn default() -> Self {
        Self::new()
    }
}

impl Interceptor {
    /// Globally enabled, no probes, nothing monitored.
    pub fn new() -> Self {
        Self::with_control(Arc::new(InterceptorControl::default()))
    }

    pub fn with_control(control: Arc<InterceptorControl>) -> Self {
        Interceptor {
            control,
            probes: HashMap::new(),
            sdcard_substring: DEFAULT_SDCARD_SUBSTRING.to_string(),
            max_payload: crate::events::MAX_PAYLOAD,
            dropped_malformed: AtomicU64::new(0),
        }
    }

    pub fn with_sdcard_substring(mut self, s: impl Into<String>) -> Self {
        self.sdcard_substring = s.into();
        self
    }

    pub fn with_max_payload(mut self, max: usize) -> Self {
        self.max_payload = max;
        self
    }

    pub fn control(&self) -> Arc<InterceptorControl> {
        Arc::clone(&self.control)
    }

    pub fn attach_probe(&mut self, point: ProbePoint, handler: ProbeHandler) -> Result<(), InterceptError> {
        if self.probes.contains_key(&point) {
            return Err(InterceptError::AlreadyAttached(point));
        }
        self.probes.insert(point, handler);
        Ok(())
    }

    /// Attach a clone of `handler` at every probe point.
    pub fn attach_all<F>(&mut self, handler: F) -> Result<(), InterceptError>
    where
        F: FnMut(&InterceptedEvent) + Clone + Send + 'static,
    {
        for p in ProbePoint::ALL {
            self.attach_probe(p, Box::new(handler.clone()))?;
        }
        Ok(())
    }

    pub fn detach_probe(&mut self, point: ProbePoint) -> Result<ProbeHandler, InterceptError> {
        self.probes.remove(&point).ok_or(InterceptError::NotAttached(point))
    }

    pub fn is_attached(&self, point: ProbePoint) -> bool {
        self.probes.contains_key(&point)
    }

    pub fn set_monitored(&self, uid: AppId, on: bool) {
        self.control.set_monitored(uid, on);
    }

    pub fn set_global(&self, on: bool) {
        self.control.set_global(on);
    }

    /// Binder transactions that were dropped because their buffer broke
    /// the size or alignment invariant.
    pub fn dropped_malformed(&self) -> u64 {
        self.dropped_malformed.load(Ordering::Relaxed)
    }

    fn fire(&mut self, point: ProbePoint, ev: InterceptedEvent) -> InterceptedEvent {
        if let Some(h) = self.probes.get_mut(&point) {
            h(&ev);
        }
        ev
    }

    /// `sys_open` hook: emits iff the path contains the sdcard substring
    /// (case-sensitive).
    pub fn on_sys_open(&mut self, uid: AppId, path: &str, _flags: u32) -> Option<SyscallEvent> {
        if !self.is_attached(ProbePoint::SysOpen) || !self.control.admits(uid) {
            return None;
        }
        if path.is_empty() || !path.contains(self.sdcard_substring.as_str()) {
            return None;
        }
        let ev = SyscallEvent::open(uid, clock::now_ns(), path).ok()?;
        match self.fire(ProbePoint::SysOpen, ev.into()) {
            InterceptedEvent::Syscall(e) => Some(e),
            InterceptedEvent::Binder(_) => unreachable!(),
        }
    }

    /// `sys_connect` hook: emits iff the family is AF_INET or AF_INET6.
    pub fn on_sys_connect(&mut self, uid: AppId, family: AddrFamily, addr: &str) -> Option<SyscallEvent> {
        if !self.is_attached(ProbePoint::SysConnect) || !self.control.admits(uid) || !family.is_inet() {
            return None;
        }
        let ev = SyscallEvent::connect(uid, clock::now_ns(), family, addr).ok()?;
        match self.fire(ProbePoint::SysConnect, ev.into()) {
            InterceptedEvent::Syscall(e) => Some(e),
            InterceptedEvent::Binder(_) => unreachable!(),
        }
    }

    /// `binder_thread_write` hook: on `BC_TRANSACTION`, snapshot the
    /// transaction before the driver copies it to the target.
    pub fn on_binder_write(&mut self, cmd: BinderCommand, txn: &RawTransaction) -> Option<BinderTransactionRecord> {
        if cmd != BinderCommand::Transaction
            || !self.is_attached(ProbePoint::BinderThreadWrite)
            || !self.control.admits(txn.sender_euid)
        {
            return None;
        }
        let rec = BinderTransactionRecord {
            sender_euid: txn.sender_euid,
            code: txn.code,
            buffer: txn.buffer.clone(),
            timestamp: clock::now_ns(),
        };
        if rec.validate_with_max(self.max_payload).is_err() {
            self.dropped_malformed.fetch_add(1, Ordering::Relaxed);
            return None;
        }
        match self.fire(ProbePoint::BinderThreadWrite, rec.into()) {
            InterceptedEvent::Binder(r) => Some(r),
            InterceptedEvent::Syscall(_) => unreachable!(),
        }
    }

    /// Feed one raw event through the matching probe.
    pub fn feed(&mut self, raw: &RawEvent) -> Option<InterceptedEvent> {
        match raw {
            RawEvent::Open { uid, path, flags } => self.on_sys_open(*uid, path, *flags).map(Into::into),
            RawEvent::Connect { uid, family, addr } => self.on_sys_connect(*uid, *family, addr).map(Into::into),
            RawEvent::Binder { cmd, txn, .. } => self.on_binder_write(*cmd, txn).map(Into::into),
        }
    }

    /// Feed raw events in order; emitted events keep that order.
    pub fn replay<'a>(&mut self, raws: impl IntoIterator<Item = &'a RawEvent>) -> Vec<InterceptedEvent> {
        raws.into_iter().filter_map(|r| self.feed(r)).collect()
    }

    /// Parse a whole trace file, then replay it. Nothing is fed if any
    /// line fails to parse.
    pub fn replay_str(&mut self, trace: &str) -> Result<Vec<InterceptedEvent>, TraceError> {
        let raws = parse_trace(trace)?;
        Ok(self.replay(&raws))
    }
}
