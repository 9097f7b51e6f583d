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

//! Configuration files shipped with the crate.

use crate::parcel::{parse_registry, SignatureRegistry};

pub const REGISTRY: &str = include_str!("../fixtures/registry.txt");
pub const POLICIES: &str = include_str!("../fixtures/policies.txt");
pub const CONTACTS: &str = include_str!("../fixtures/contacts.txt");
pub const MAPPING: &str = include_str!("../fixtures/mapping.txt");
pub const GOLDEN_FRAMES: &str = include_str!("../fixtures/frames.txt");

pub const ISMS: &str = "com.android.internal.telephony.ISms";

/// The shipped signature registry.
pub fn registry() -> SignatureRegistry {
    parse_registry(REGISTRY).expect("shipped registry parses")
}
