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

use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::mpsc::{self, Receiver, SyncSender, TrySendError};
use std::sync::{Arc, Condvar, Mutex};
use std::thread::JoinHandle;
use std::time::Duration;

use thiserror::Error;

use super::frame::{decode_frame, encode_frame, FrameError, MsgType};
use super::payload::encode_event_into;
use crate::events::{AppId, InterceptedEvent};
use crate::interceptor::InterceptorControl;

pub const DEFAULT_CAPACITY: usize = 4096;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BridgeError {
    #[error("channel closed")]
    ChannelClosed,
    #[error("queue full ({0} frames)")]
    QueueFull(usize),
    #[error("a callback is already registered")]
    CallbackAlreadySet,
    #[error("{0:?} is not a control message")]
    NotControl(MsgType),
    #[error("bad reply from the kernel side: {0}")]
    BadReply(String),
}

impl From<FrameError> for BridgeError {
    fn from(e: FrameError) -> Self {
        BridgeError::BadReply(e.to_string())
    }
}

/// Receiver of control messages on the kernel side.
pub trait ControlTarget: Send + Sync {
    fn apply(&self, msg: MsgType, uid: AppId);
}

impl ControlTarget for InterceptorControl {
    fn apply(&self, msg: MsgType, uid: AppId) {
        match msg {
            MsgType::EnableUid => self.set_monitored(uid, true),
            MsgType::DisableUid => self.set_monitored(uid, false),
            MsgType::GlobalOn => self.set_global(true),
            MsgType::GlobalOff => self.set_global(false),
            MsgType::Event | MsgType::Ack => {}
        }
    }
}

/// Acknowledgement of a control message.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Ack {
    pub request: MsgType,
    pub uid: AppId,
}

#[derive(Default)]
struct Progress {
    delivered: AtomicU64,
    waiting: AtomicBool,
    lock: Mutex<()>,
    cond: Condvar,
}

struct Inner {
    tx: Mutex<Option<SyncSender<Vec<u8>>>>,
    rx: Mutex<Option<Receiver<Vec<u8>>>>,
    consumer: Mutex<Option<JoinHandle<()>>>,
    callback_set: AtomicBool,
    closed: AtomicBool,
    capacity: usize,
    enqueued: AtomicU64,
    progress: Arc<Progress>,
    kernel: Arc<dyn ControlTarget>,
}

impl Drop for Inner {
    fn drop(&mut self) {
        self.tx.get_mut().unwrap_or_else(|e| e.into_inner()).take();
        if let Some(h) = self.consumer.get_mut().unwrap_or_else(|e| e.into_inner()).take() {
            let _ = h.join();
        }
    }
}

/// Cloneable handle to one kernel/user channel.
#[derive(Clone)]
pub struct Bridge {
    inner: Arc<Inner>,
}

impl Bridge {
    pub fn open(kernel: Arc<dyn ControlTarget>) -> Self {
        Self::with_capacity(DEFAULT_CAPACITY, kernel)
    }

    pub fn with_capacity(capacity: usize, kernel: Arc<dyn ControlTarget>) -> Self {
        let (tx, rx) = mpsc::sync_channel(capacity);
        Bridge {
            inner: Arc::new(Inner {
                tx: Mutex::new(Some(tx)),
                rx: Mutex::new(Some(rx)),
                consumer: Mutex::new(None),
                callback_set: AtomicBool::new(false),
                closed: AtomicBool::new(false),
                capacity,
                enqueued: AtomicU64::new(0),
                progress: Arc::new(Progress::default()),
                kernel,
            }),
        }
    }

    pub fn capacity(&self) -> usize {
        self.inner.capacity
    }

    pub fn is_closed(&self) -> bool {
        self.inner.closed.load(Ordering::SeqCst)
    }

    /// Serialize an event into an `Event` frame and queue it. Never blocks.
    pub fn send_event(&self, e: &InterceptedEvent) -> Result<(), BridgeError> {
        let mut payload = Vec::with_capacity(64);
        encode_event_into(&mut payload, e);
        self.send_frame(encode_frame(MsgType::Event, e.uid().0, &payload))
    }

    /// Queue already-encoded frame bytes. Used for events and, in tests, to
    /// inject corrupted frames.
    pub fn send_frame(&self, frame: Vec<u8>) -> Result<(), BridgeError> {
        if self.is_closed() {
            return Err(BridgeError::ChannelClosed);
        }
        let guard = self.inner.tx.lock().unwrap_or_else(|e| e.into_inner());
        let tx = guard.as_ref().ok_or(BridgeError::ChannelClosed)?;
        match tx.try_send(frame) {
            Ok(()) => {
                self.inner.enqueued.fetch_add(1, Ordering::SeqCst);
                Ok(())
            }
            Err(TrySendError::Full(_)) => Err(BridgeError::QueueFull(self.inner.capacity)),
            Err(TrySendError::Disconnected(_)) => Err(BridgeError::ChannelClosed),
        }
    }

    /// Register the single receiver of upward frames. Frames queued before
    /// registration are delivered first, in order. `f` runs on a dedicated
    /// consumer thread and sees each frame's raw bytes exactly once.
    pub fn register_callback<F>(&self, mut f: F) -> Result<(), BridgeError>
    where
        F: FnMut(&[u8]) + Send + 'static,
    {
        if self.inner.callback_set.swap(true, Ordering::SeqCst) {
            return Err(BridgeError::CallbackAlreadySet);
        }
        let rx = self.inner.rx.lock().unwrap_or_else(|e| e.into_inner()).take().ok_or(BridgeError::ChannelClosed)?;
        let progress = Arc::clone(&self.inner.progress);
        let handle = std::thread::Builder::new()
            .name("bridge-consumer".into())
            .spawn(move || {
                for frame in rx.iter() {
                    f(&frame);
                    progress.delivered.fetch_add(1, Ordering::SeqCst);
                    if progress.waiting.load(Ordering::SeqCst) {
                        let _g = progress.lock.lock().unwrap_or_else(|e| e.into_inner());
                        progress.cond.notify_all();
                    }
                }
            })
            .expect("spawn consumer thread");
        *self.inner.consumer.lock().unwrap_or_else(|e| e.into_inner()) = Some(handle);
        Ok(())
    }

    /// Send a control message down and wait for its Ack. The kernel side
    /// has applied it by the time this returns.
    pub fn send_control(&self, msg: MsgType, uid: AppId) -> Result<Ack, BridgeError> {
        if !msg.is_control() {
            return Err(BridgeError::NotControl(msg));
        }
        if self.is_closed() {
            return Err(BridgeError::ChannelClosed);
        }
        let request = encode_frame(msg, uid.0, &[]);
        let reply = self.kernel_handle(&request)?;
        let ack = decode_frame(&reply)?;
        match (ack.msg_type, ack.payload.first()) {
            (MsgType::Ack, Some(&code)) if code == msg.code() => Ok(Ack { request: msg, uid: AppId(ack.uid) }),
            _ => Err(BridgeError::BadReply(format!("{ack:?}"))),
        }
    }

    // Kernel end of the control path: decode, apply, answer with an Ack
    // whose payload byte 0 echoes the request type.
    fn kernel_handle(&self, request: &[u8]) -> Result<Vec<u8>, BridgeError> {
        let frame = decode_frame(request)?;
        self.inner.kernel.apply(frame.msg_type, AppId(frame.uid));
        Ok(encode_frame(MsgType::Ack, frame.uid, &[frame.msg_type.code()]))
    }

    pub fn enqueued(&self) -> u64 {
        self.inner.enqueued.load(Ordering::SeqCst)
    }

    pub fn delivered(&self) -> u64 {
        self.inner.progress.delivered.load(Ordering::SeqCst)
    }

    /// Block until every queued frame has been handed to the callback.
    /// Returns false straight away if no callback is registered.
    pub fn wait_idle(&self) -> bool {
        if !self.inner.callback_set.load(Ordering::SeqCst) {
            return self.enqueued() == self.delivered();
        }
        let p = &self.inner.progress;
        p.waiting.store(true, Ordering::SeqCst);
        let mut g = p.lock.lock().unwrap_or_else(|e| e.into_inner());
        while self.delivered() < self.enqueued() {
            g = p.cond.wait_timeout(g, Duration::from_millis(1)).unwrap_or_else(|e| e.into_inner()).0;
        }
        p.waiting.store(false, Ordering::SeqCst);
        true
    }

    /// Stop accepting frames, drain what is queued to the callback and
    /// join the consumer thread.
    pub fn close(&self) {
        self.inner.closed.store(true, Ordering::SeqCst);
        self.inner.tx.lock().unwrap_or_else(|e| e.into_inner()).take();
        let handle = self.inner.consumer.lock().unwrap_or_else(|e| e.into_inner()).take();
        if let Some(h) = handle {
            let _ = h.join();
        }
    }
}
