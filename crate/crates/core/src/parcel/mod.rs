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

//! Marshalling of Binder transaction payloads.
//!
//! A payload starts with the interface name as a string, followed by the
//! method arguments in signature order. The payload carries no type tags,
//! so decoding needs the method signature, found in a [`SignatureRegistry`]
//! under `(interface name, transaction code)`. Composite arguments are
//! encoded as the concatenation of their registered fields.

mod buffer;
mod codec;
mod config;
mod registry;

use std::fmt;

use thiserror::Error;

use crate::events::ArgValue;

pub use buffer::Parcel;
#[cfg(feature = "parallel")]
pub use codec::unmarshal_batch_par;
pub use codec::{marshal, unmarshal, unmarshal_batch, unmarshal_batch_seq, MarshalError, UnmarshalError};
pub use config::{parse_registry, ConfigError};
pub use registry::{RegistryError, SignatureRegistry};

/// Low-level read failure.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CodecError {
    #[error("buffer underrun at offset {offset}: need {needed} bytes, {remaining} left")]
    BufferUnderrun { offset: usize, needed: usize, remaining: usize },
    #[error("negative length {len} at offset {offset}")]
    InvalidLength { offset: usize, len: i32 },
    #[error("bool encoded as {value} at offset {offset}")]
    InvalidBool { offset: usize, value: i32 },
    #[error("malformed UTF-16 string at offset {offset}")]
    InvalidString { offset: usize },
    #[error("no decoder registered for composite {0}")]
    UnknownComposite(String),
}

/// Wire type of a single argument or composite field.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum TypeDescriptor {
    Int32,
    Int64,
    Float32,
    Float64,
    Bool,
    Str,
    Bytes,
    Composite(String),
}

impl TypeDescriptor {
    /// Parse a registry config token. Anything that is not a primitive
    /// keyword names a composite.
    pub fn from_token(tok: &str) -> Option<Self> {
        Some(match tok {
            "int32" => TypeDescriptor::Int32,
            "int64" => TypeDescriptor::Int64,
            "float32" => TypeDescriptor::Float32,
            "float64" => TypeDescriptor::Float64,
            "bool" => TypeDescriptor::Bool,
            "string" => TypeDescriptor::Str,
            "bytes" => TypeDescriptor::Bytes,
            _ if is_identifier(tok) => TypeDescriptor::Composite(tok.to_string()),
            _ => return None,
        })
    }

    /// Whether `v` has this type at the top level. Composite fields are
    /// checked against the registry by the marshaller.
    pub fn matches(&self, v: &ArgValue) -> bool {
        matches!(
            (self, v),
            (TypeDescriptor::Int32, ArgValue::Int32(_))
                | (TypeDescriptor::Int64, ArgValue::Int64(_))
                | (TypeDescriptor::Float32, ArgValue::Float32(_))
                | (TypeDescriptor::Float64, ArgValue::Float64(_))
                | (TypeDescriptor::Bool, ArgValue::Bool(_))
                | (TypeDescriptor::Str, ArgValue::Str(_))
                | (TypeDescriptor::Bytes, ArgValue::Bytes(_))
        ) || matches!((self, v), (TypeDescriptor::Composite(a), ArgValue::Composite { type_name, .. }) if a == type_name)
    }
}

impl fmt::Display for TypeDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TypeDescriptor::Int32 => "int32",
            TypeDescriptor::Int64 => "int64",
            TypeDescriptor::Float32 => "float32",
            TypeDescriptor::Float64 => "float64",
            TypeDescriptor::Bool => "bool",
            TypeDescriptor::Str => "string",
            TypeDescriptor::Bytes => "bytes",
            TypeDescriptor::Composite(name) => name,
        })
    }
}

pub(crate) fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '.' || c == '$')
}

/// One method of a remote interface, as the stub sees it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MethodSignature {
    pub interface_name: String,
    pub code: u32,
    pub method_name: String,
    pub arg_types: Vec<TypeDescriptor>,
}

impl MethodSignature {
    pub fn new(
        interface_name: impl Into<String>,
        code: u32,
        method_name: impl Into<String>,
        arg_types: Vec<TypeDescriptor>,
    ) -> Self {
        MethodSignature { interface_name: interface_name.into(), code, method_name: method_name.into(), arg_types }
    }
}

/// Stubs name their transaction codes `TRANSACTION_<method>`; the method
/// name is the suffix.
pub fn method_from_transaction_constant(constant: &str) -> Option<&str> {
    constant.strip_prefix("TRANSACTION_").filter(|m| !m.is_empty())
}
