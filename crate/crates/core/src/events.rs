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

//! Domain types shared by every stage of the pipeline.

use std::fmt;

/// Largest Binder payload accepted by default.
pub const MAX_PAYLOAD: usize = 1 << 20;

/// First UID handed out to ordinary (non-system) apps.
pub const FIRST_APP_UID: u32 = 10_000;

/// Linux user ID of an app. Android assigns every installed app its own.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AppId(pub u32);

impl AppId {
    pub fn uid(self) -> u32 {
        self.0
    }

    /// System services run under UIDs below 10000. They are representable
    /// but generated workloads never use them.
    pub fn is_system(self) -> bool {
        self.0 < FIRST_APP_UID
    }
}

impl fmt::Display for AppId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SyscallKind {
    Open,
    Connect,
}

/// Socket address family as seen by `sys_connect`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AddrFamily {
    Inet4,
    Inet6,
    Unix,
    Other,
}

impl AddrFamily {
    pub const AF_UNIX: u16 = 1;
    pub const AF_INET: u16 = 2;
    pub const AF_INET6: u16 = 10;

    pub fn from_raw(raw: u16) -> Self {
        match raw {
            Self::AF_UNIX => AddrFamily::Unix,
            Self::AF_INET => AddrFamily::Inet4,
            Self::AF_INET6 => AddrFamily::Inet6,
            _ => AddrFamily::Other,
        }
    }

    /// Kernel constant for the family; `Other` maps to `AF_UNSPEC` (0).
    pub fn to_raw(self) -> u16 {
        match self {
            AddrFamily::Unix => Self::AF_UNIX,
            AddrFamily::Inet4 => Self::AF_INET,
            AddrFamily::Inet6 => Self::AF_INET6,
            AddrFamily::Other => 0,
        }
    }

    pub fn is_inet(self) -> bool {
        matches!(self, AddrFamily::Inet4 | AddrFamily::Inet6)
    }

    pub fn name(self) -> &'static str {
        match self {
            AddrFamily::Inet4 => "inet",
            AddrFamily::Inet6 => "inet6",
            AddrFamily::Unix => "unix",
            AddrFamily::Other => "other",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Some(match s {
            "inet" | "inet4" | "AF_INET" => AddrFamily::Inet4,
            "inet6" | "AF_INET6" => AddrFamily::Inet6,
            "unix" | "AF_UNIX" => AddrFamily::Unix,
            "other" => AddrFamily::Other,
            _ => return None,
        })
    }
}

/// An intercepted `sys_open` or `sys_connect`.
///
/// Fields are public so that malformed values can be represented and
/// reported by [`SyscallEvent::validate`]; the [`open`](Self::open) and
/// [`connect`](Self::connect) constructors only build well-formed ones.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SyscallEvent {
    pub kind: SyscallKind,
    pub uid: AppId,
    pub timestamp: u64,
    pub path: Option<String>,
    pub addr_family: Option<AddrFamily>,
    pub addr: Option<String>,
}

impl SyscallEvent {
    pub fn open(uid: AppId, timestamp: u64, path: impl Into<String>) -> Result<Self, Vec<Violation>> {
        let ev = SyscallEvent {
            kind: SyscallKind::Open,
            uid,
            timestamp,
            path: Some(path.into()),
            addr_family: None,
            addr: None,
        };
        ev.validate().map(|()| ev)
    }

    pub fn connect(
        uid: AppId,
        timestamp: u64,
        family: AddrFamily,
        addr: impl Into<String>,
    ) -> Result<Self, Vec<Violation>> {
        let ev = SyscallEvent {
            kind: SyscallKind::Connect,
            uid,
            timestamp,
            path: None,
            addr_family: Some(family),
            addr: Some(addr.into()),
        };
        ev.validate().map(|()| ev)
    }

    pub fn validate(&self) -> Result<(), Vec<Violation>> {
        let mut out = Vec::new();
        match self.kind {
            SyscallKind::Open => {
                match &self.path {
                    None => out.push(Violation::MissingPath),
                    Some(p) if p.is_empty() => out.push(Violation::MissingPath),
                    Some(_) => {}
                }
                if self.addr_family.is_some() || self.addr.is_some() {
                    out.push(Violation::AddrOnOpen);
                }
            }
            SyscallKind::Connect => {
                if self.path.is_some() {
                    out.push(Violation::PathOnConnect);
                }
                if self.addr_family.is_none() || self.addr.is_none() {
                    out.push(Violation::MissingAddr);
                }
            }
        }
        if out.is_empty() {
            Ok(())
        } else {
            Err(out)
        }
    }
}

/// The request half of a Binder transaction, captured before the driver
/// copies it into the target process.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinderTransactionRecord {
    pub sender_euid: AppId,
    pub code: u32,
    pub buffer: Vec<u8>,
    pub timestamp: u64,
}

impl BinderTransactionRecord {
    pub fn new(sender_euid: AppId, code: u32, buffer: Vec<u8>, timestamp: u64) -> Result<Self, Vec<Violation>> {
        let rec = BinderTransactionRecord { sender_euid, code, buffer, timestamp };
        rec.validate().map(|()| rec)
    }

    pub fn validate(&self) -> Result<(), Vec<Violation>> {
        self.validate_with_max(MAX_PAYLOAD)
    }

    pub fn validate_with_max(&self, max: usize) -> Result<(), Vec<Violation>> {
        let len = self.buffer.len();
        let mut out = Vec::new();
        if len > max {
            out.push(Violation::Oversized { len, max });
        }
        if !len.is_multiple_of(4) {
            out.push(Violation::Misaligned { len });
        }
        if out.is_empty() {
            Ok(())
        } else {
            Err(out)
        }
    }
}

/// A single invariant breach reported by [`validate_event`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    MissingPath,
    AddrOnOpen,
    PathOnConnect,
    MissingAddr,
    Misaligned { len: usize },
    Oversized { len: usize, max: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::MissingPath => f.write_str("missing path on Open"),
            Violation::AddrOnOpen => f.write_str("addr on Open"),
            Violation::PathOnConnect => f.write_str("path on Connect"),
            Violation::MissingAddr => f.write_str("missing addr on Connect"),
            Violation::Misaligned { len } => write!(f, "alignment: buffer length {len} not a multiple of 4"),
            Violation::Oversized { len, max } => write!(f, "buffer length {len} exceeds {max}"),
        }
    }
}

/// Anything the interceptor can emit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum InterceptedEvent {
    Syscall(SyscallEvent),
    Binder(BinderTransactionRecord),
}

impl InterceptedEvent {
    pub fn uid(&self) -> AppId {
        match self {
            InterceptedEvent::Syscall(e) => e.uid,
            InterceptedEvent::Binder(r) => r.sender_euid,
        }
    }
}

impl From<SyscallEvent> for InterceptedEvent {
    fn from(e: SyscallEvent) -> Self {
        InterceptedEvent::Syscall(e)
    }
}

impl From<BinderTransactionRecord> for InterceptedEvent {
    fn from(r: BinderTransactionRecord) -> Self {
        InterceptedEvent::Binder(r)
    }
}

/// Check every invariant of an event. Total: never panics.
pub fn validate_event(e: &InterceptedEvent) -> Result<(), Vec<Violation>> {
    match e {
        InterceptedEvent::Syscall(s) => s.validate(),
        InterceptedEvent::Binder(b) => b.validate(),
    }
}

/// One decoded method argument.
#[derive(Debug, Clone, PartialEq)]
pub enum ArgValue {
    Int32(i32),
    Int64(i64),
    Float32(f32),
    Float64(f64),
    Bool(bool),
    Str(String),
    Bytes(Vec<u8>),
    Composite { type_name: String, fields: Vec<ArgValue> },
}

impl fmt::Display for ArgValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ArgValue::Int32(v) => write!(f, "{v}"),
            ArgValue::Int64(v) => write!(f, "{v}"),
            ArgValue::Float32(v) => write!(f, "{v}"),
            ArgValue::Float64(v) => write!(f, "{v}"),
            ArgValue::Bool(v) => write!(f, "{v}"),
            ArgValue::Str(s) => write!(f, "{s:?}"),
            ArgValue::Bytes(b) => write!(f, "0x{}", hex::encode(b)),
            ArgValue::Composite { type_name, fields } => {
                write!(f, "{type_name}{{")?;
                for (i, v) in fields.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{v}")?;
                }
                f.write_str("}")
            }
        }
    }
}

/// A Binder transaction turned back into a readable method call.
#[derive(Debug, Clone, PartialEq)]
pub struct DecodedCall {
    pub sender: AppId,
    pub interface_name: String,
    pub method_name: String,
    pub args: Vec<ArgValue>,
    pub timestamp: u64,
}

impl fmt::Display for DecodedCall {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}] {}.{}(", self.sender, self.interface_name, self.method_name)?;
        for (i, a) in self.args.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{a}")?;
        }
        f.write_str(")")
    }
}
