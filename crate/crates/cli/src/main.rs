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

//! `bench`: workload generation, overhead measurement and trace monitoring.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use andmon_core::bench::{
    format_csv, format_report, generate_workload, parse_modes, parse_sorts, run_bench, BenchConfig, BenchError, Sort,
    Workload, WorkloadError, DEFAULT_EVENTS,
};
use andmon_core::bridge::Bridge;
use andmon_core::fixtures;
use andmon_core::interceptor::{parse_trace, Interceptor, InterceptorControl};
use andmon_core::parcel::parse_registry;
use andmon_core::rv::{parse_facts, parse_mapping, parse_policies, MonitorBank, RvClient};
use andmon_core::service::{TracerService, UidFilter};
use andmon_core::InterceptedEvent;

#[derive(Parser)]
#[command(name = "bench", version, about = "Measure and exercise the app monitoring pipeline")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Time workloads in each mode and write an overhead table.
    Run(RunArgs),
    /// Write one workload as a trace file.
    Gen(GenArgs),
    /// Replay a trace through the full pipeline and print policy violations.
    Monitor(MonitorArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Comma-separated sort numbers or method names, or `all`.
    #[arg(long, default_value = "all")]
    workloads: String,
    #[arg(long, default_value_t = 30)]
    runs: usize,
    /// Any of baseline, intercept, full, rv.
    #[arg(long, default_value = "baseline,intercept,full")]
    modes: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_EVENTS)]
    events: usize,
    #[arg(long, default_value_t = 1)]
    warmup: usize,
    /// Skip the Baseline self-comparison.
    #[arg(long)]
    no_control: bool,
    /// Text report; the CSV goes next to it with a `.csv` extension.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    sort: String,
    #[arg(long, default_value_t = DEFAULT_EVENTS)]
    count: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct MonitorArgs {
    trace: PathBuf,
    #[arg(long)]
    policies: Option<PathBuf>,
    #[arg(long)]
    contacts: Option<PathBuf>,
    #[arg(long)]
    mapping: Option<PathBuf>,
    #[arg(long)]
    registry: Option<PathBuf>,
}

fn read_or(path: &Option<PathBuf>, default: &str) -> Result<String> {
    match path {
        Some(p) => std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display())),
        None => Ok(default.to_string()),
    }
}

fn write_out(out: &Option<PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(a: RunArgs) -> Result<()> {
    let config = BenchConfig {
        workloads: parse_sorts(&a.workloads)?,
        runs: a.runs,
        modes: parse_modes(&a.modes).map_err(anyhow::Error::msg)?,
        seed: a.seed,
        event_count: a.events,
        control: !a.no_control,
        warmup: a.warmup,
    };
    let report = run_bench(&config)?;
    write_out(&a.out, &format_report(&report))?;
    if let Some(p) = &a.out {
        let csv = Path::new(p).with_extension("csv");
        std::fs::write(&csv, format_csv(&report)).with_context(|| format!("writing {}", csv.display()))?;
    }
    Ok(())
}

fn gen(a: GenArgs) -> Result<()> {
    let sort: Sort = a.sort.parse()?;
    let w = Workload::new(sort, a.count)?;
    write_out(&a.out, &generate_workload(&w, a.seed, &fixtures::registry())?)
}

fn monitor(a: MonitorArgs) -> Result<()> {
    let registry = parse_registry(&read_or(&a.registry, fixtures::REGISTRY)?)?;
    let set = parse_policies(&read_or(&a.policies, fixtures::POLICIES)?)?;
    let facts = parse_facts(&read_or(&a.contacts, fixtures::CONTACTS)?)?;
    let mapping = parse_mapping(&read_or(&a.mapping, fixtures::MAPPING)?)?;
    mapping.check(&registry)?;
    let raws =
        parse_trace(&std::fs::read_to_string(&a.trace).with_context(|| format!("reading {}", a.trace.display()))?)?;

    let ctl = Arc::new(InterceptorControl::default());
    let bridge = Bridge::open(ctl.clone());
    let mut interceptor = Interceptor::with_control(ctl);
    let b = bridge.clone();
    interceptor.attach_all(move |e: &InterceptedEvent| {
        while let Err(andmon_core::bridge::BridgeError::QueueFull(_)) = b.send_event(e) {
            std::thread::yield_now();
        }
    })?;
    let service = TracerService::start(&bridge, Arc::new(registry))?;
    let client = RvClient::new(MonitorBank::new(set.policies, facts, mapping));
    service.subscribe(client.subscription("rv", UidFilter::All))?;
    let mut uids: Vec<_> = raws.iter().map(|r| r.uid()).collect();
    uids.sort();
    uids.dedup();
    for uid in uids {
        service.set_app_monitoring(uid, true)?;
    }
    interceptor.replay(&raws);
    service.sync();
    for r in client.reports() {
        println!("{r}");
    }
    for e in client.errors() {
        eprintln!("mapping: {e}");
    }
    eprintln!("{}", service.stats());
    bridge.close();
    Ok(())
}

fn is_workload_error(e: &anyhow::Error) -> bool {
    e.chain().any(|c| {
        c.downcast_ref::<WorkloadError>().is_some()
            || matches!(c.downcast_ref::<BenchError>(), Some(BenchError::Workload(_)))
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match cli.cmd {
        Cmd::Run(a) => run(a),
        Cmd::Gen(a) => gen(a),
        Cmd::Monitor(a) => monitor(a),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if is_workload_error(&e) {
                ExitCode::from(2)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}
