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

//! The seven synthetic workload sorts.

use std::fmt;
use std::str::FromStr;

use rand::distributions::Alphanumeric;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::events::{AppId, ArgValue};
use crate::interceptor::{BinderCommand, RawEvent, RawTransaction};
use crate::parcel::{marshal, SignatureRegistry};

pub const MAX_EVENTS: usize = 10_000;
pub const DEFAULT_EVENTS: usize = 10_000;
pub const DEFAULT_UID: AppId = AppId(10050);

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WorkloadError {
    #[error("unknown workload `{0}`")]
    UnknownWorkload(String),
    #[error("event count {0} outside 1..={MAX_EVENTS}")]
    BadEventCount(usize),
    #[error("registry has no {interface_name}.{method_name}")]
    MissingSignature { interface_name: String, method_name: String },
    #[error("cannot marshal {0}")]
    Marshal(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Sort {
    GetDeviceId,
    GetSimSerialNumber,
    GetLastKnownLocation,
    SendTextMessage,
    GetInstalledApplications,
    GetAllNetworkInfo,
    ReadLine,
}

impl Sort {
    pub const ALL: [Sort; 7] = [
        Sort::GetDeviceId,
        Sort::GetSimSerialNumber,
        Sort::GetLastKnownLocation,
        Sort::SendTextMessage,
        Sort::GetInstalledApplications,
        Sort::GetAllNetworkInfo,
        Sort::ReadLine,
    ];

    /// 1-based position in [`Sort::ALL`].
    pub fn number(self) -> u8 {
        Sort::ALL.iter().position(|s| *s == self).unwrap() as u8 + 1
    }

    pub fn from_number(n: u8) -> Result<Self, WorkloadError> {
        Sort::ALL
            .get((n as usize).wrapping_sub(1))
            .copied()
            .ok_or_else(|| WorkloadError::UnknownWorkload(n.to_string()))
    }

    /// App-facing API class, as listed in the report.
    pub fn api_class(self) -> &'static str {
        match self {
            Sort::GetDeviceId | Sort::GetSimSerialNumber => "TelephonyManager",
            Sort::GetLastKnownLocation => "LocationManager",
            Sort::SendTextMessage => "SmsManager",
            Sort::GetInstalledApplications => "PackageManager",
            Sort::GetAllNetworkInfo => "ConnectivityManager",
            Sort::ReadLine => "BufferedReader",
        }
    }

    pub fn api_method(self) -> &'static str {
        match self {
            Sort::GetDeviceId => "getDeviceId",
            Sort::GetSimSerialNumber => "getSimSerialNumber",
            Sort::GetLastKnownLocation => "getLastKnownLocation",
            Sort::SendTextMessage => "sendTextMessage",
            Sort::GetInstalledApplications => "getInstalledApplications",
            Sort::GetAllNetworkInfo => "getAllNetworkInfo",
            Sort::ReadLine => "readLine",
        }
    }

    /// Remote interface and method the API call lands on, or `None` for the
    /// file sort.
    pub fn binder_target(self) -> Option<(&'static str, &'static str)> {
        Some(match self {
            Sort::GetDeviceId => ("com.android.internal.telephony.IPhoneSubInfo", "getDeviceId"),
            Sort::GetSimSerialNumber => ("com.android.internal.telephony.IPhoneSubInfo", "getIccSerialNumber"),
            Sort::GetLastKnownLocation => ("android.location.ILocationManager", "getLastLocation"),
            Sort::SendTextMessage => ("com.android.internal.telephony.ISms", "sendText"),
            Sort::GetInstalledApplications => ("android.content.pm.IPackageManager", "getInstalledApplications"),
            Sort::GetAllNetworkInfo => ("android.net.IConnectivityManager", "getAllNetworkInfo"),
            Sort::ReadLine => return None,
        })
    }
}

impl fmt::Display for Sort {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.api_method())
    }
}

impl FromStr for Sort {
    type Err = WorkloadError;

    /// Accepts the sort number or the API method name.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if let Ok(n) = s.parse::<u8>() {
            return Sort::from_number(n);
        }
        Sort::ALL
            .into_iter()
            .find(|w| w.api_method().eq_ignore_ascii_case(s))
            .ok_or_else(|| WorkloadError::UnknownWorkload(s.to_string()))
    }
}

/// Parses a comma-separated list, or `all`.
pub fn parse_sorts(s: &str) -> Result<Vec<Sort>, WorkloadError> {
    if s.trim() == "all" {
        return Ok(Sort::ALL.to_vec());
    }
    s.split(',').map(|t| t.trim().parse()).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Workload {
    pub sort: Sort,
    pub event_count: usize,
    pub uid: AppId,
}

impl Workload {
    pub fn new(sort: Sort, event_count: usize) -> Result<Self, WorkloadError> {
        if event_count == 0 || event_count > MAX_EVENTS {
            return Err(WorkloadError::BadEventCount(event_count));
        }
        Ok(Workload { sort, event_count, uid: DEFAULT_UID })
    }

    pub fn with_uid(mut self, uid: AppId) -> Self {
        self.uid = uid;
        self
    }
}

fn word(rng: &mut ChaCha8Rng, len: usize) -> String {
    rng.sample_iter(&Alphanumeric).take(len).map(char::from).collect()
}

fn phone(rng: &mut ChaCha8Rng) -> String {
    format!("+614{:08}", rng.gen_range(0..100_000_000u32))
}

fn args_for(sort: Sort, rng: &mut ChaCha8Rng) -> Vec<ArgValue> {
    match sort {
        Sort::GetDeviceId | Sort::GetSimSerialNumber | Sort::GetAllNetworkInfo | Sort::ReadLine => Vec::new(),
        Sort::GetLastKnownLocation => {
            let work_source = ArgValue::Composite {
                type_name: "WorkSource".into(),
                fields: vec![
                    ArgValue::Int32(1),
                    ArgValue::Int32(rng.gen_range(10_000..20_000)),
                    ArgValue::Str(format!("com.example.{}", word(rng, 6).to_lowercase())),
                ],
            };
            let request = ArgValue::Composite {
                type_name: "LocationRequest".into(),
                fields: vec![
                    ArgValue::Int32([100, 102, 104, 203][rng.gen_range(0..4)]),
                    ArgValue::Int64(rng.gen_range(1_000..3_600_000)),
                    ArgValue::Int64(rng.gen_range(100..600_000)),
                    ArgValue::Bool(rng.gen()),
                    ArgValue::Int64(i64::MAX),
                    ArgValue::Int32(rng.gen_range(1..10)),
                    ArgValue::Float32(rng.gen_range(0.0..100.0)),
                    ArgValue::Bool(false),
                    ArgValue::Str(["gps", "network", "fused", "passive"][rng.gen_range(0..4)].into()),
                    work_source,
                ],
            };
            vec![request, ArgValue::Str(format!("com.example.{}", word(rng, 8).to_lowercase()))]
        }
        Sort::SendTextMessage => {
            let dest = phone(rng);
            let len = rng.gen_range(8..40);
            vec![
                ArgValue::Str(dest),
                ArgValue::Str(String::new()),
                ArgValue::Str(word(rng, len)),
                ArgValue::Str("com.example.messenger".into()),
            ]
        }
        Sort::GetInstalledApplications => vec![ArgValue::Int32(rng.gen_range(0..0x2000)), ArgValue::Int32(0)],
    }
}

/// Generates the raw events of a workload. Same seed, same events.
pub fn generate_events(w: &Workload, seed: u64, registry: &SignatureRegistry) -> Result<Vec<RawEvent>, WorkloadError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ u64::from(w.sort.number()).wrapping_mul(0x9e37_79b9_7f4a_7c15));
    let Some((iface, method)) = w.sort.binder_target() else {
        return Ok((0..w.event_count)
            .map(|i| RawEvent::Open {
                uid: w.uid,
                path: format!("/mnt/sdcard/Download/{}-{i}.txt", word(&mut rng, 6)),
                flags: 0,
            })
            .collect());
    };
    let sig = registry.find_method(iface, method).ok_or_else(|| WorkloadError::MissingSignature {
        interface_name: iface.to_string(),
        method_name: method.to_string(),
    })?;
    (0..w.event_count)
        .map(|_| {
            let args = args_for(w.sort, &mut rng);
            let buf = marshal(sig, &args, registry).map_err(|e| WorkloadError::Marshal(e.to_string()))?;
            Ok(RawEvent::Binder {
                cmd: BinderCommand::Transaction,
                interface: iface.to_string(),
                txn: RawTransaction { sender_euid: w.uid, code: sig.code, buffer: buf.into_bytes() },
            })
        })
        .collect()
}

/// Renders a workload as a trace file.
pub fn generate_workload(w: &Workload, seed: u64, registry: &SignatureRegistry) -> Result<String, WorkloadError> {
    let events = generate_events(w, seed, registry)?;
    let mut out = format!("# workload {} ({}) events={} seed={seed}\n", w.sort.number(), w.sort, w.event_count);
    for e in &events {
        out.push_str(&e.to_string());
        out.push('\n');
    }
    Ok(out)
}
