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

use std::collections::{BTreeMap, HashMap};

use thiserror::Error;

use super::{MethodSignature, TypeDescriptor};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RegistryError {
    #[error("duplicate entry {0}")]
    DuplicateEntry(String),
    #[error("composite {0} contains itself")]
    CyclicComposite(String),
    #[error("empty method name for {interface_name} code {code}")]
    EmptyMethodName { interface_name: String, code: u32 },
    #[error("empty composite type name")]
    EmptyCompositeName,
    #[error("composite {0} referenced but never registered")]
    UnknownComposite(String),
}

/// `(interface, code) → signature` plus `type name → field layout`.
///
/// Built once, then shared read-only.
#[derive(Debug, Clone, Default)]
pub struct SignatureRegistry {
    methods: HashMap<String, BTreeMap<u32, MethodSignature>>,
    composites: HashMap<String, Vec<TypeDescriptor>>,
}

impl SignatureRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn register_signature(&mut self, sig: MethodSignature) -> Result<(), RegistryError> {
        if sig.method_name.is_empty() {
            return Err(RegistryError::EmptyMethodName { interface_name: sig.interface_name, code: sig.code });
        }
        for t in &sig.arg_types {
            if matches!(t, TypeDescriptor::Composite(n) if n.is_empty()) {
                return Err(RegistryError::EmptyCompositeName);
            }
        }
        let codes = self.methods.entry(sig.interface_name.clone()).or_default();
        if codes.contains_key(&sig.code) {
            return Err(RegistryError::DuplicateEntry(format!("{} {}", sig.interface_name, sig.code)));
        }
        codes.insert(sig.code, sig);
        Ok(())
    }

    /// Register the field layout of a composite type. Fields may name
    /// composites that are registered later, but never form a cycle.
    pub fn register_composite(
        &mut self,
        type_name: impl Into<String>,
        fields: Vec<TypeDescriptor>,
    ) -> Result<(), RegistryError> {
        let type_name = type_name.into();
        if type_name.is_empty() || fields.iter().any(|t| matches!(t, TypeDescriptor::Composite(n) if n.is_empty())) {
            return Err(RegistryError::EmptyCompositeName);
        }
        if self.composites.contains_key(&type_name) {
            return Err(RegistryError::DuplicateEntry(type_name));
        }
        if self.reaches(&fields, &type_name) {
            return Err(RegistryError::CyclicComposite(type_name));
        }
        self.composites.insert(type_name, fields);
        Ok(())
    }

    // The existing graph is acyclic, so any new cycle passes through `target`.
    fn reaches(&self, fields: &[TypeDescriptor], target: &str) -> bool {
        let mut stack: Vec<&str> = composite_names(fields).collect();
        let mut seen = std::collections::HashSet::new();
        while let Some(name) = stack.pop() {
            if name == target {
                return true;
            }
            if !seen.insert(name) {
                continue;
            }
            if let Some(f) = self.composites.get(name) {
                stack.extend(composite_names(f));
            }
        }
        false
    }

    pub fn has_interface(&self, interface_name: &str) -> bool {
        self.methods.contains_key(interface_name)
    }

    pub fn lookup(&self, interface_name: &str, code: u32) -> Option<&MethodSignature> {
        self.methods.get(interface_name)?.get(&code)
    }

    /// Find a signature by method name; used by workload generators.
    pub fn find_method(&self, interface_name: &str, method_name: &str) -> Option<&MethodSignature> {
        self.methods.get(interface_name)?.values().find(|s| s.method_name == method_name)
    }

    pub fn composite(&self, type_name: &str) -> Option<&[TypeDescriptor]> {
        self.composites.get(type_name).map(Vec::as_slice)
    }

    pub fn signatures(&self) -> impl Iterator<Item = &MethodSignature> {
        self.methods.values().flat_map(|m| m.values())
    }

    pub fn len(&self) -> usize {
        self.methods.values().map(BTreeMap::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Every composite referenced by a signature or another composite is
    /// registered.
    pub fn check_complete(&self) -> Result<(), RegistryError> {
        let referenced = self
            .signatures()
            .flat_map(|s| composite_names(&s.arg_types))
            .chain(self.composites.values().flat_map(|f| composite_names(f)));
        for name in referenced {
            if !self.composites.contains_key(name) {
                return Err(RegistryError::UnknownComposite(name.to_string()));
            }
        }
        Ok(())
    }
}

fn composite_names(fields: &[TypeDescriptor]) -> impl Iterator<Item = &str> {
    fields.iter().filter_map(|t| match t {
        TypeDescriptor::Composite(n) => Some(n.as_str()),
        _ => None,
    })
}
