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

//! Byte container with typed writers and a read cursor.
//!
//! Layout, all little-endian:
//!
//! | type      | encoding                                                        |
//! |-----------|-----------------------------------------------------------------|
//! | `int32`   | 4 bytes                                                         |
//! | `int64`   | 8 bytes                                                         |
//! | `float32` | 4 bytes, IEEE 754                                               |
//! | `float64` | 8 bytes, IEEE 754                                               |
//! | `bool`    | `int32` 0 or 1                                                  |
//! | `string`  | `int32` UTF-16 unit count, UTF-16LE units, `u16` 0, zero pad to 4 |
//! | `bytes`   | `int32` length, raw bytes, zero pad to 4                        |
//!
//! Every write keeps the total length a multiple of 4.

use super::CodecError;

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Parcel {
    data: Vec<u8>,
    pos: usize,
}

fn pad4(n: usize) -> usize {
    (4 - n % 4) % 4
}

impl Parcel {
    pub fn new() -> Self {
        Self::default()
    }

    /// Wrap an intercepted payload for reading, cursor at 0.
    pub fn from_bytes(data: impl Into<Vec<u8>>) -> Self {
        Parcel { data: data.into(), pos: 0 }
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.data
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn position(&self) -> usize {
        self.pos
    }

    pub fn remaining(&self) -> usize {
        self.data.len() - self.pos
    }

    pub fn write_i32(&mut self, v: i32) {
        self.data.extend_from_slice(&v.to_le_bytes());
    }

    pub fn write_i64(&mut self, v: i64) {
        self.data.extend_from_slice(&v.to_le_bytes());
    }

    pub fn write_f32(&mut self, v: f32) {
        self.data.extend_from_slice(&v.to_le_bytes());
    }

    pub fn write_f64(&mut self, v: f64) {
        self.data.extend_from_slice(&v.to_le_bytes());
    }

    pub fn write_bool(&mut self, v: bool) {
        self.write_i32(v as i32);
    }

    pub fn write_str(&mut self, s: &str) {
        let start = self.data.len();
        // length placeholder, patched once the unit count is known
        self.data.extend_from_slice(&[0; 4]);
        let mut units = 0i32;
        for u in s.encode_utf16() {
            self.data.extend_from_slice(&u.to_le_bytes());
            units += 1;
        }
        self.data[start..start + 4].copy_from_slice(&units.to_le_bytes());
        self.data.extend_from_slice(&[0, 0]);
        self.pad();
    }

    pub fn write_bytes(&mut self, b: &[u8]) {
        self.write_i32(b.len() as i32);
        self.data.extend_from_slice(b);
        self.pad();
    }

    fn pad(&mut self) {
        let n = pad4(self.data.len());
        self.data.resize(self.data.len() + n, 0);
    }

    fn take(&mut self, n: usize) -> Result<&[u8], CodecError> {
        if self.remaining() < n {
            return Err(CodecError::BufferUnderrun { offset: self.pos, needed: n, remaining: self.remaining() });
        }
        let s = &self.data[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn take_array<const N: usize>(&mut self) -> Result<[u8; N], CodecError> {
        let mut out = [0u8; N];
        out.copy_from_slice(self.take(N)?);
        Ok(out)
    }

    pub fn read_i32(&mut self) -> Result<i32, CodecError> {
        Ok(i32::from_le_bytes(self.take_array()?))
    }

    pub fn read_i64(&mut self) -> Result<i64, CodecError> {
        Ok(i64::from_le_bytes(self.take_array()?))
    }

    pub fn read_f32(&mut self) -> Result<f32, CodecError> {
        Ok(f32::from_le_bytes(self.take_array()?))
    }

    pub fn read_f64(&mut self) -> Result<f64, CodecError> {
        Ok(f64::from_le_bytes(self.take_array()?))
    }

    pub fn read_bool(&mut self) -> Result<bool, CodecError> {
        let offset = self.pos;
        match self.read_i32()? {
            0 => Ok(false),
            1 => Ok(true),
            value => Err(CodecError::InvalidBool { offset, value }),
        }
    }

    fn read_len(&mut self) -> Result<usize, CodecError> {
        let offset = self.pos;
        let len = self.read_i32()?;
        usize::try_from(len).map_err(|_| CodecError::InvalidLength { offset, len })
    }

    pub fn read_str(&mut self) -> Result<String, CodecError> {
        let start = self.pos;
        let units = self.read_len()?;
        // units + terminator, padded; checked before allocating anything
        let body = units * 2 + 2;
        let total = body + pad4(body);
        if self.remaining() < total {
            let err = CodecError::BufferUnderrun { offset: self.pos, needed: total, remaining: self.remaining() };
            self.pos = start;
            return Err(err);
        }
        let raw = self.take(total)?;
        if raw[units * 2] != 0 || raw[units * 2 + 1] != 0 {
            self.pos = start;
            return Err(CodecError::InvalidString { offset: start });
        }
        let decoded: Result<String, _> =
            char::decode_utf16(raw[..units * 2].chunks_exact(2).map(|c| u16::from_le_bytes([c[0], c[1]]))).collect();
        decoded.map_err(|_| {
            self.pos = start;
            CodecError::InvalidString { offset: start }
        })
    }

    pub fn read_bytes(&mut self) -> Result<Vec<u8>, CodecError> {
        let start = self.pos;
        let len = self.read_len()?;
        let total = len + pad4(len);
        if self.remaining() < total {
            let err = CodecError::BufferUnderrun { offset: self.pos, needed: total, remaining: self.remaining() };
            self.pos = start;
            return Err(err);
        }
        let raw = self.take(total)?;
        Ok(raw[..len].to_vec())
    }
}
