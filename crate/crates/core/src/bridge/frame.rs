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

//! Frame layout, all integers little-endian:
//!
//! | offset | size | field                                   |
//! |--------|------|-----------------------------------------|
//! | 0      | 2    | magic `44 54` ("DT")                    |
//! | 2      | 1    | version, 1                              |
//! | 3      | 1    | message type                            |
//! | 4      | 4    | uid                                     |
//! | 8      | 4    | payload length `n`                      |
//! | 12     | n    | payload                                 |
//! | 12+n   | 4    | CRC-32 (IEEE) of bytes `0..12+n`        |

use thiserror::Error;

pub const MAGIC: [u8; 2] = [0x44, 0x54];
pub const VERSION: u8 = 1;
pub const HEADER_LEN: usize = 12;
pub const CHECKSUM_LEN: usize = 4;
/// Size of a frame with an empty payload.
pub const MIN_FRAME_LEN: usize = HEADER_LEN + CHECKSUM_LEN;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum MsgType {
    Event = 0x01,
    EnableUid = 0x02,
    DisableUid = 0x03,
    GlobalOn = 0x04,
    GlobalOff = 0x05,
    Ack = 0x06,
}

impl MsgType {
    pub fn from_code(code: u8) -> Option<Self> {
        Some(match code {
            0x01 => MsgType::Event,
            0x02 => MsgType::EnableUid,
            0x03 => MsgType::DisableUid,
            0x04 => MsgType::GlobalOn,
            0x05 => MsgType::GlobalOff,
            0x06 => MsgType::Ack,
            _ => return None,
        })
    }

    pub fn code(self) -> u8 {
        self as u8
    }

    /// Types user space may send down to the interceptor.
    pub fn is_control(self) -> bool {
        matches!(self, MsgType::EnableUid | MsgType::DisableUid | MsgType::GlobalOn | MsgType::GlobalOff)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    pub msg_type: MsgType,
    pub uid: u32,
    pub payload: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FrameError {
    #[error("bad magic {0:02x?}")]
    BadMagic([u8; 2]),
    #[error("unsupported version {0}")]
    BadVersion(u8),
    #[error("unknown message type {0:#04x}")]
    UnknownMsgType(u8),
    #[error("checksum mismatch: frame says {stored:#010x}, computed {computed:#010x}")]
    ChecksumMismatch { stored: u32, computed: u32 },
    #[error("truncated frame: need {needed} bytes, have {have}")]
    Truncated { needed: usize, have: usize },
    #[error("{0} bytes after the end of the frame")]
    TrailingBytes(usize),
}

/// Append one encoded frame to `out`.
pub fn encode_frame_into(out: &mut Vec<u8>, msg_type: MsgType, uid: u32, payload: &[u8]) {
    let start = out.len();
    out.reserve(MIN_FRAME_LEN + payload.len());
    out.extend_from_slice(&MAGIC);
    out.push(VERSION);
    out.push(msg_type.code());
    out.extend_from_slice(&uid.to_le_bytes());
    out.extend_from_slice(&(payload.len() as u32).to_le_bytes());
    out.extend_from_slice(payload);
    let crc = crc32fast::hash(&out[start..]);
    out.extend_from_slice(&crc.to_le_bytes());
}

pub fn encode_frame(msg_type: MsgType, uid: u32, payload: &[u8]) -> Vec<u8> {
    let mut out = Vec::new();
    encode_frame_into(&mut out, msg_type, uid, payload);
    out
}

impl Frame {
    pub fn new(msg_type: MsgType, uid: u32, payload: Vec<u8>) -> Self {
        Frame { msg_type, uid, payload }
    }

    pub fn encode(&self) -> Vec<u8> {
        encode_frame(self.msg_type, self.uid, &self.payload)
    }
}

fn u32_at(b: &[u8], off: usize) -> u32 {
    u32::from_le_bytes([b[off], b[off + 1], b[off + 2], b[off + 3]])
}

/// Decode the frame at the start of `bytes`; returns it with the number of
/// bytes it occupied.
pub fn decode_frame_prefix(bytes: &[u8]) -> Result<(Frame, usize), FrameError> {
    let truncated = |needed| FrameError::Truncated { needed, have: bytes.len() };
    if bytes.len() < 2 {
        return Err(truncated(MIN_FRAME_LEN));
    }
    if bytes[..2] != MAGIC {
        return Err(FrameError::BadMagic([bytes[0], bytes[1]]));
    }
    if bytes.len() < 3 {
        return Err(truncated(MIN_FRAME_LEN));
    }
    if bytes[2] != VERSION {
        return Err(FrameError::BadVersion(bytes[2]));
    }
    if bytes.len() < HEADER_LEN {
        return Err(truncated(MIN_FRAME_LEN));
    }
    let payload_len = u32_at(bytes, 8) as usize;
    let total = HEADER_LEN + payload_len + CHECKSUM_LEN;
    if bytes.len() < total {
        return Err(truncated(total));
    }
    let body = HEADER_LEN + payload_len;
    let stored = u32_at(bytes, body);
    let computed = crc32fast::hash(&bytes[..body]);
    if stored != computed {
        return Err(FrameError::ChecksumMismatch { stored, computed });
    }
    let msg_type = MsgType::from_code(bytes[3]).ok_or(FrameError::UnknownMsgType(bytes[3]))?;
    let frame = Frame { msg_type, uid: u32_at(bytes, 4), payload: bytes[HEADER_LEN..body].to_vec() };
    Ok((frame, total))
}

/// Decode a buffer holding exactly one frame.
pub fn decode_frame(bytes: &[u8]) -> Result<Frame, FrameError> {
    let (frame, used) = decode_frame_prefix(bytes)?;
    if used != bytes.len() {
        return Err(FrameError::TrailingBytes(bytes.len() - used));
    }
    Ok(frame)
}

/// Incremental decoder for a byte stream carrying back-to-back frames.
#[derive(Debug, Default)]
pub struct FrameDecoder {
    buf: Vec<u8>,
}

impl FrameDecoder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, bytes: &[u8]) {
        self.buf.extend_from_slice(bytes);
    }

    pub fn buffered(&self) -> usize {
        self.buf.len()
    }

    /// Next complete frame, `None` if more bytes are needed. After an
    /// error the decoder skips ahead to the next magic and can be polled
    /// again.
    pub fn next_frame(&mut self) -> Option<Result<Frame, FrameError>> {
        match decode_frame_prefix(&self.buf) {
            Ok((frame, used)) => {
                self.buf.drain(..used);
                Some(Ok(frame))
            }
            Err(FrameError::Truncated { .. }) => None,
            Err(e) => {
                let skip = self.buf[1..].windows(2).position(|w| w == MAGIC).map_or(self.buf.len(), |p| p + 1);
                self.buf.drain(..skip);
                Some(Err(e))
            }
        }
    }
}
