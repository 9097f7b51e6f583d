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

//! Runtime verification of decoded events against parameterized past-time
//! temporal policies, one monitor per app and policy.

mod bank;
mod facts;
mod formula;
mod mapping;
mod monitor;
mod parser;

pub use bank::{MonitorBank, Report, RvClient};
pub use facts::{parse_facts, BackgroundFacts, FactsError};
pub use formula::{Atom, Formula, Policy, Term, Value};
pub use mapping::{map_event, parse_mapping, EventMapping, GroundAtom, MappingError, Rule, Source};
pub use monitor::{spawn_monitor, Exec, MonitorInstance, Valuation, Verdict, Violation, PAR_THRESHOLD};
pub use parser::{
    parse_formula, parse_policies, parse_policy, parse_policy_with, PolicyError, PolicySet, DEFAULT_BACKGROUND,
};
