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

//! Framed kernel/user channel.
//!
//! Event frames flow up from the interceptor through a bounded queue to a
//! single registered callback running on its own consumer thread. Control
//! frames flow down synchronously: the interceptor applies them before the
//! Ack comes back.

mod channel;
mod frame;
mod payload;

pub use channel::{Ack, Bridge, BridgeError, ControlTarget, DEFAULT_CAPACITY};
pub use frame::{
    decode_frame, decode_frame_prefix, encode_frame, encode_frame_into, Frame, FrameDecoder, FrameError, MsgType,
    CHECKSUM_LEN, HEADER_LEN, MAGIC, MIN_FRAME_LEN, VERSION,
};
pub use payload::{decode_event, encode_event, encode_event_into, PayloadError, KIND_BINDER, KIND_CONNECT, KIND_OPEN};
