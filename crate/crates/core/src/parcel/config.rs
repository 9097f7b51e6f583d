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

//! Line-oriented registry config.
//!
//! ```text
//! # comment
//! sig <interface> <code> <method> <type>*
//! composite <type_name> <field_type>*
//! ```
//!
//! Types are `int32 int64 float32 float64 bool string bytes`; any other
//! identifier names a composite. A method may be given as its stub
//! constant (`TRANSACTION_sendText`), in which case the prefix is dropped.

use thiserror::Error;

use super::{method_from_transaction_constant, MethodSignature, RegistryError, SignatureRegistry, TypeDescriptor};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("line {line}: {source}")]
    Registry { line: usize, source: RegistryError },
    #[error(transparent)]
    Incomplete(RegistryError),
}

pub fn parse_registry(text: &str) -> Result<SignatureRegistry, ConfigError> {
    let mut reg = SignatureRegistry::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let syntax = |msg: String| ConfigError::Syntax { line, msg };
        let mut toks = content.split_whitespace();
        let types = |toks: std::str::SplitWhitespace<'_>| {
            toks.map(|t| TypeDescriptor::from_token(t).ok_or_else(|| syntax(format!("bad type `{t}`"))))
                .collect::<Result<Vec<_>, _>>()
        };
        match toks.next() {
            Some("sig") => {
                let iface = toks.next().ok_or_else(|| syntax("missing interface".into()))?;
                let code = toks
                    .next()
                    .ok_or_else(|| syntax("missing code".into()))?
                    .parse::<u32>()
                    .map_err(|e| syntax(format!("bad code: {e}")))?;
                let method = toks.next().ok_or_else(|| syntax("missing method".into()))?;
                let method = method_from_transaction_constant(method).unwrap_or(method);
                let arg_types = types(toks)?;
                reg.register_signature(MethodSignature::new(iface, code, method, arg_types))
                    .map_err(|source| ConfigError::Registry { line, source })?;
            }
            Some("composite") => {
                let name = toks.next().ok_or_else(|| syntax("missing type name".into()))?;
                if !super::is_identifier(name) {
                    return Err(syntax(format!("bad type name `{name}`")));
                }
                let fields = types(toks)?;
                reg.register_composite(name, fields).map_err(|source| ConfigError::Registry { line, source })?;
            }
            Some(other) => return Err(syntax(format!("unknown directive `{other}`"))),
            None => unreachable!(),
        }
    }
    reg.check_complete().map_err(ConfigError::Incomplete)?;
    Ok(reg)
}
