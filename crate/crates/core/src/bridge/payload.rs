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

//! Event payload carried inside an `Event` frame. Little-endian.
//!
//! ```text
//! Open:    01 | uid u32 | timestamp u64 | path string
//! Connect: 02 | uid u32 | timestamp u64 | family u32 (AF_* value) | addr string
//! Binder:  03 | uid u32 | code u32 | timestamp u64 | buffer_len u32 | buffer
//! ```
//!
//! Strings use the parcel layout: UTF-16 unit count, UTF-16LE units, a
//! 16-bit terminator and zero padding to a multiple of 4 bytes measured
//! from the start of the string.

use thiserror::Error;

use crate::events::{AddrFamily, AppId, BinderTransactionRecord, InterceptedEvent, SyscallEvent, SyscallKind};
use crate::parcel::{CodecError, Parcel};

pub const KIND_OPEN: u8 = 0x01;
pub const KIND_CONNECT: u8 = 0x02;
pub const KIND_BINDER: u8 = 0x03;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PayloadError {
    #[error("empty payload")]
    Empty,
    #[error("unknown event kind {0:#04x}")]
    UnknownKind(u8),
    #[error("payload truncated")]
    Truncated,
    #[error("bad string: {0}")]
    BadString(CodecError),
    #[error("buffer length {declared} but {actual} bytes follow")]
    LengthMismatch { declared: usize, actual: usize },
    #[error("{0} unexpected trailing bytes")]
    Trailing(usize),
    #[error("decoded event is malformed")]
    Malformed,
}

fn put_str(out: &mut Vec<u8>, s: &str) {
    let mut p = Parcel::new();
    p.write_str(s);
    out.extend_from_slice(p.as_bytes());
}

pub fn encode_event_into(out: &mut Vec<u8>, e: &InterceptedEvent) {
    match e {
        InterceptedEvent::Binder(r) => {
            out.reserve(21 + r.buffer.len());
            out.push(KIND_BINDER);
            out.extend_from_slice(&r.sender_euid.0.to_le_bytes());
            out.extend_from_slice(&r.code.to_le_bytes());
            out.extend_from_slice(&r.timestamp.to_le_bytes());
            out.extend_from_slice(&(r.buffer.len() as u32).to_le_bytes());
            out.extend_from_slice(&r.buffer);
        }
        InterceptedEvent::Syscall(s) => {
            out.push(match s.kind {
                SyscallKind::Open => KIND_OPEN,
                SyscallKind::Connect => KIND_CONNECT,
            });
            out.extend_from_slice(&s.uid.0.to_le_bytes());
            out.extend_from_slice(&s.timestamp.to_le_bytes());
            match s.kind {
                SyscallKind::Open => put_str(out, s.path.as_deref().unwrap_or_default()),
                SyscallKind::Connect => {
                    let fam = s.addr_family.unwrap_or(AddrFamily::Other).to_raw() as u32;
                    out.extend_from_slice(&fam.to_le_bytes());
                    put_str(out, s.addr.as_deref().unwrap_or_default());
                }
            }
        }
    }
}

pub fn encode_event(e: &InterceptedEvent) -> Vec<u8> {
    let mut out = Vec::new();
    encode_event_into(&mut out, e);
    out
}

struct Reader<'a> {
    b: &'a [u8],
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], PayloadError> {
        if self.b.len() < n {
            return Err(PayloadError::Truncated);
        }
        let (h, t) = self.b.split_at(n);
        self.b = t;
        Ok(h)
    }

    fn u32(&mut self) -> Result<u32, PayloadError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64, PayloadError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn string(&mut self) -> Result<String, PayloadError> {
        let mut p = Parcel::from_bytes(self.b);
        let s = p.read_str().map_err(|e| match e {
            CodecError::BufferUnderrun { .. } => PayloadError::Truncated,
            e => PayloadError::BadString(e),
        })?;
        self.b = &self.b[p.position()..];
        Ok(s)
    }

    fn finish(&self) -> Result<(), PayloadError> {
        if self.b.is_empty() {
            Ok(())
        } else {
            Err(PayloadError::Trailing(self.b.len()))
        }
    }
}

pub fn decode_event(payload: &[u8]) -> Result<InterceptedEvent, PayloadError> {
    let (&kind, rest) = payload.split_first().ok_or(PayloadError::Empty)?;
    let mut r = Reader { b: rest };
    let ev = match kind {
        KIND_BINDER => {
            let uid = AppId(r.u32()?);
            let code = r.u32()?;
            let timestamp = r.u64()?;
            let declared = r.u32()? as usize;
            if declared != r.b.len() {
                return Err(PayloadError::LengthMismatch { declared, actual: r.b.len() });
            }
            let buffer = r.take(declared)?.to_vec();
            InterceptedEvent::Binder(BinderTransactionRecord { sender_euid: uid, code, buffer, timestamp })
        }
        KIND_OPEN => {
            let uid = AppId(r.u32()?);
            let ts = r.u64()?;
            let path = r.string()?;
            r.finish()?;
            InterceptedEvent::Syscall(SyscallEvent::open(uid, ts, path).map_err(|_| PayloadError::Malformed)?)
        }
        KIND_CONNECT => {
            let uid = AppId(r.u32()?);
            let ts = r.u64()?;
            let fam = r.u32()?;
            let family = u16::try_from(fam).map(AddrFamily::from_raw).unwrap_or(AddrFamily::Other);
            let addr = r.string()?;
            r.finish()?;
            InterceptedEvent::Syscall(
                SyscallEvent::connect(uid, ts, family, addr).map_err(|_| PayloadError::Malformed)?,
            )
        }
        other => return Err(PayloadError::UnknownKind(other)),
    };
    Ok(ev)
}
