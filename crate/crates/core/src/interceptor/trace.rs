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

//! Trace files: one raw event per line.
//!
//! ```text
//! # comment
//! open <uid> <path>
//! connect <uid> <family> <addr>
//! binder <uid> <interface> <code> <hex-payload>
//! ```
//!
//! `<path>` runs to the end of the line and may contain spaces. `<family>`
//! is `inet`, `inet6`, `unix`, `other` or a raw `AF_*` number. The binder
//! `<interface>` is informational: the kernel side never decodes the
//! payload, so it is not checked against it. An empty payload is written
//! as `-`. Every binder line is a `BC_TRANSACTION`.

use std::fmt;

use thiserror::Error;

use super::{BinderCommand, RawTransaction};
use crate::events::{AddrFamily, AppId};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RawEvent {
    Open { uid: AppId, path: String, flags: u32 },
    Connect { uid: AppId, family: AddrFamily, addr: String },
    Binder { cmd: BinderCommand, interface: String, txn: RawTransaction },
}

impl RawEvent {
    pub fn uid(&self) -> AppId {
        match self {
            RawEvent::Open { uid, .. } | RawEvent::Connect { uid, .. } => *uid,
            RawEvent::Binder { txn, .. } => txn.sender_euid,
        }
    }
}

impl fmt::Display for RawEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RawEvent::Open { uid, path, .. } => write!(f, "open {uid} {path}"),
            RawEvent::Connect { uid, family, addr } => write!(f, "connect {uid} {} {addr}", family.name()),
            RawEvent::Binder { interface, txn, .. } => {
                let payload = if txn.buffer.is_empty() { "-".to_string() } else { hex::encode(&txn.buffer) };
                write!(f, "binder {} {interface} {} {payload}", txn.sender_euid, txn.code)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("trace line {line}: {msg}")]
pub struct TraceError {
    pub line: usize,
    pub msg: String,
}

fn parse_uid(tok: Option<&str>) -> Result<AppId, String> {
    let tok = tok.ok_or("missing uid")?;
    tok.parse::<u32>().map(AppId).map_err(|e| format!("bad uid `{tok}`: {e}"))
}

fn parse_line(content: &str) -> Result<RawEvent, String> {
    let (kind, rest) = content.split_once(char::is_whitespace).unwrap_or((content, ""));
    let rest = rest.trim_start();
    match kind {
        "open" => {
            let (uid, path) = rest.split_once(char::is_whitespace).ok_or("missing path")?;
            let path = path.trim();
            if path.is_empty() {
                return Err("missing path".into());
            }
            Ok(RawEvent::Open { uid: parse_uid(Some(uid))?, path: path.to_string(), flags: 0 })
        }
        "connect" => {
            let mut toks = rest.split_whitespace();
            let uid = parse_uid(toks.next())?;
            let fam = toks.next().ok_or("missing family")?;
            let family = AddrFamily::from_name(fam)
                .or_else(|| fam.parse::<u16>().ok().map(AddrFamily::from_raw))
                .ok_or_else(|| format!("bad family `{fam}`"))?;
            let addr = toks.next().ok_or("missing addr")?;
            if toks.next().is_some() {
                return Err("trailing tokens".into());
            }
            Ok(RawEvent::Connect { uid, family, addr: addr.to_string() })
        }
        "binder" => {
            let mut toks = rest.split_whitespace();
            let uid = parse_uid(toks.next())?;
            let interface = toks.next().ok_or("missing interface")?.to_string();
            let code = toks.next().ok_or("missing code")?;
            let code = code.parse::<u32>().map_err(|e| format!("bad code `{code}`: {e}"))?;
            let payload = toks.next().ok_or("missing payload")?;
            let buffer = if payload == "-" {
                Vec::new()
            } else {
                hex::decode(payload).map_err(|e| format!("bad payload: {e}"))?
            };
            if toks.next().is_some() {
                return Err("trailing tokens".into());
            }
            Ok(RawEvent::Binder {
                cmd: BinderCommand::Transaction,
                interface,
                txn: RawTransaction { sender_euid: uid, code, buffer },
            })
        }
        other => Err(format!("unknown event kind `{other}`")),
    }
}

pub fn parse_trace(text: &str) -> Result<Vec<RawEvent>, TraceError> {
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let content = raw.trim();
        if content.is_empty() || content.starts_with('#') {
            continue;
        }
        out.push(parse_line(content).map_err(|msg| TraceError { line: idx + 1, msg })?);
    }
    Ok(out)
}
