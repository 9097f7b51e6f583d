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

//! Platform-level monitoring pipeline for Android-style apps, simulated at
//! desk scale.
//!
//! Raw syscall and Binder events are fed through attachable probes
//! ([`interceptor`]), shipped to user space over a framed channel
//! ([`bridge`]), unmarshalled into readable method calls ([`parcel`],
//! [`service`]) and checked against parameterized past-time temporal
//! policies ([`rv`]). [`bench`] measures the cost of each stage.
//!
//! With the default `parallel` feature, batch decoding, monitor binding
//! updates and per-app routing run on the rayon thread pool. Disabling the
//! feature falls back to plain sequential loops with identical results.

pub mod bench;
pub mod bridge;
pub mod clock;
pub mod events;
pub mod fixtures;
pub mod interceptor;
pub mod parcel;
pub mod rv;
pub mod service;

pub use events::{
    AddrFamily, AppId, ArgValue, BinderTransactionRecord, DecodedCall, InterceptedEvent, SyscallEvent, SyscallKind,
    Violation,
};
