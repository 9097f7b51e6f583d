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

//! User-space service: turns bridge frames into decoded events and hands
//! them to subscribed clients.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

use thiserror::Error;

use crate::bridge::{decode_event, decode_frame, Ack, Bridge, BridgeError, MsgType, PayloadError};
use crate::events::{AppId, DecodedCall, InterceptedEvent, SyscallEvent};
use crate::parcel::{unmarshal, SignatureRegistry, UnmarshalError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ServiceError {
    #[error("client {0} already subscribed")]
    DuplicateClient(String),
    #[error("no client {0}")]
    UnknownClient(String),
    #[error(transparent)]
    Bridge(#[from] BridgeError),
}

/// Why an intercepted event could not be turned into a readable call.
#[derive(Debug, Clone, PartialEq)]
pub enum UndecodedCause {
    Payload(PayloadError),
    Unmarshal(UnmarshalError),
}

impl fmt::Display for UndecodedCause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            UndecodedCause::Payload(e) => write!(f, "payload: {e}"),
            UndecodedCause::Unmarshal(e) => write!(f, "unmarshal: {e}"),
        }
    }
}

/// Notice that an interaction happened even though it could not be
/// decoded.
#[derive(Debug, Clone, PartialEq)]
pub struct RawUndecoded {
    pub uid: AppId,
    pub code: Option<u32>,
    pub timestamp: Option<u64>,
    pub cause: UndecodedCause,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ServiceEvent {
    Call(DecodedCall),
    Syscall(SyscallEvent),
    Undecoded(RawUndecoded),
}

impl ServiceEvent {
    pub fn uid(&self) -> AppId {
        match self {
            ServiceEvent::Call(c) => c.sender,
            ServiceEvent::Syscall(s) => s.uid,
            ServiceEvent::Undecoded(u) => u.uid,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum UidFilter {
    All,
    Only(BTreeSet<AppId>),
}

impl UidFilter {
    pub fn only(uids: impl IntoIterator<Item = AppId>) -> Self {
        UidFilter::Only(uids.into_iter().collect())
    }

    pub fn accepts(&self, uid: AppId) -> bool {
        match self {
            UidFilter::All => true,
            UidFilter::Only(set) => set.contains(&uid),
        }
    }
}

pub type Delivery = Box<dyn FnMut(&ServiceEvent) + Send>;

pub struct Subscription {
    pub client_id: String,
    pub uid_filter: UidFilter,
    pub delivery: Delivery,
}

impl Subscription {
    pub fn new<F>(client_id: impl Into<String>, uid_filter: UidFilter, f: F) -> Self
    where
        F: FnMut(&ServiceEvent) + Send + 'static,
    {
        Subscription { client_id: client_id.into(), uid_filter, delivery: Box::new(f) }
    }
}

/// Counter snapshot. `delivered` counts decoded events handed to clients;
/// undecoded notices are counted separately.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ServiceStats {
    pub frames_in: u64,
    pub decode_ok: u64,
    pub decode_failed: u64,
    pub delivered: u64,
    pub notices: u64,
}

impl fmt::Display for ServiceStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "frames_in={} decode_ok={} decode_failed={} delivered={} notices={}",
            self.frames_in, self.decode_ok, self.decode_failed, self.delivered, self.notices
        )
    }
}

#[derive(Default)]
struct Counters {
    frames_in: AtomicU64,
    decode_ok: AtomicU64,
    decode_failed: AtomicU64,
    delivered: AtomicU64,
    notices: AtomicU64,
}

struct Inner {
    registry: Arc<SignatureRegistry>,
    subs: Mutex<Vec<Subscription>>,
    counters: Counters,
}

impl Inner {
    fn handle_frame(&self, bytes: &[u8]) {
        self.counters.frames_in.fetch_add(1, Ordering::Relaxed);
        let frame = match decode_frame(bytes) {
            Ok(f) => f,
            Err(_) => {
                // corrupt transport: nothing trustworthy to report
                self.counters.decode_failed.fetch_add(1, Ordering::Relaxed);
                return;
            }
        };
        if frame.msg_type != MsgType::Event {
            return;
        }
        let event = match decode_event(&frame.payload) {
            Ok(InterceptedEvent::Syscall(s)) => Ok(ServiceEvent::Syscall(s)),
            Ok(InterceptedEvent::Binder(rec)) => match unmarshal(&rec, &self.registry) {
                Ok(call) => Ok(ServiceEvent::Call(call)),
                Err(e) => Err(RawUndecoded {
                    uid: rec.sender_euid,
                    code: Some(rec.code),
                    timestamp: Some(rec.timestamp),
                    cause: UndecodedCause::Unmarshal(e),
                }),
            },
            Err(e) => Err(RawUndecoded {
                uid: AppId(frame.uid),
                code: None,
                timestamp: None,
                cause: UndecodedCause::Payload(e),
            }),
        };
        let (event, counter) = match event {
            Ok(ev) => {
                self.counters.decode_ok.fetch_add(1, Ordering::Relaxed);
                (ev, &self.counters.delivered)
            }
            Err(notice) => {
                self.counters.decode_failed.fetch_add(1, Ordering::Relaxed);
                (ServiceEvent::Undecoded(notice), &self.counters.notices)
            }
        };
        let uid = event.uid();
        let mut subs = self.subs.lock().unwrap_or_else(|e| e.into_inner());
        for sub in subs.iter_mut().filter(|s| s.uid_filter.accepts(uid)) {
            (sub.delivery)(&event);
            counter.fetch_add(1, Ordering::Relaxed);
        }
    }
}

/// The running service. Decoding and dispatch happen on the bridge's
/// consumer thread; the methods here may be called from any thread.
///
/// Delivery callbacks run while the subscriber list is locked, so they
/// must not call back into `subscribe`/`unsubscribe`.
pub struct TracerService {
    inner: Arc<Inner>,
    bridge: Bridge,
}

impl TracerService {
    /// Claim the bridge's callback and start decoding.
    pub fn start(bridge: &Bridge, registry: Arc<SignatureRegistry>) -> Result<Self, ServiceError> {
        let inner = Arc::new(Inner { registry, subs: Mutex::new(Vec::new()), counters: Counters::default() });
        let handler = Arc::clone(&inner);
        bridge.register_callback(move |bytes: &[u8]| handler.handle_frame(bytes))?;
        Ok(TracerService { inner, bridge: bridge.clone() })
    }

    pub fn subscribe(&self, sub: Subscription) -> Result<(), ServiceError> {
        let mut subs = self.inner.subs.lock().unwrap_or_else(|e| e.into_inner());
        if subs.iter().any(|s| s.client_id == sub.client_id) {
            return Err(ServiceError::DuplicateClient(sub.client_id));
        }
        subs.push(sub);
        Ok(())
    }

    pub fn unsubscribe(&self, client_id: &str) -> Result<(), ServiceError> {
        let mut subs = self.inner.subs.lock().unwrap_or_else(|e| e.into_inner());
        let idx = subs
            .iter()
            .position(|s| s.client_id == client_id)
            .ok_or_else(|| ServiceError::UnknownClient(client_id.to_string()))?;
        subs.remove(idx);
        Ok(())
    }

    /// Turn interception for one app on or off in the kernel side. Returns
    /// once the change is in effect.
    pub fn set_app_monitoring(&self, uid: AppId, on: bool) -> Result<Ack, ServiceError> {
        let msg = if on { MsgType::EnableUid } else { MsgType::DisableUid };
        Ok(self.bridge.send_control(msg, uid)?)
    }

    pub fn set_global(&self, on: bool) -> Result<Ack, ServiceError> {
        let msg = if on { MsgType::GlobalOn } else { MsgType::GlobalOff };
        Ok(self.bridge.send_control(msg, AppId(0))?)
    }

    /// Wait until every frame queued so far has been processed.
    pub fn sync(&self) {
        self.bridge.wait_idle();
    }

    pub fn bridge(&self) -> &Bridge {
        &self.bridge
    }

    pub fn stats(&self) -> ServiceStats {
        let c = &self.inner.counters;
        ServiceStats {
            frames_in: c.frames_in.load(Ordering::Relaxed),
            decode_ok: c.decode_ok.load(Ordering::Relaxed),
            decode_failed: c.decode_failed.load(Ordering::Relaxed),
            delivered: c.delivered.load(Ordering::Relaxed),
            notices: c.notices.load(Ordering::Relaxed),
        }
    }
}
