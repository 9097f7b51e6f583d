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

//! Overhead measurement: synthetic workloads, three pipeline modes and a
//! confidence-interval report.

mod harness;
mod report;
pub mod stats;
mod workload;

pub use harness::{
    parse_modes, run_bench, BenchCell, BenchConfig, BenchError, BenchReport, BenchRow, ControlRow, Mode,
};
pub use report::{format_csv, format_report, stats_line};
pub use workload::{
    generate_events, generate_workload, parse_sorts, Sort, Workload, WorkloadError, DEFAULT_EVENTS, DEFAULT_UID,
    MAX_EVENTS,
};
