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

//! Text and CSV renderings of a [`BenchReport`].

use std::fmt::Write;

use super::harness::{BenchCell, BenchReport, Mode};

fn mean_moe(c: &BenchCell) -> String {
    format!("{:.3} ± {:.3}", c.mean_ms, c.moe_ms)
}

/// Empty when the difference is not significant.
fn overhead(c: &BenchCell) -> String {
    c.overhead_pct.map(|p| format!("{p:.2}")).unwrap_or_default()
}

fn render(headers: &[String], rows: &[Vec<String>], numeric_from: usize) -> String {
    let mut widths: Vec<usize> = headers.iter().map(|h| h.chars().count()).collect();
    for r in rows {
        for (w, cell) in widths.iter_mut().zip(r) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let line = |cells: &[String]| {
        let mut s = String::new();
        for (i, (c, w)) in cells.iter().zip(&widths).enumerate() {
            if i > 0 {
                s.push_str("  ");
            }
            let pad = w - c.chars().count();
            if i >= numeric_from {
                s.push_str(&" ".repeat(pad));
                s.push_str(c);
            } else {
                s.push_str(c);
                s.push_str(&" ".repeat(pad));
            }
        }
        s.trim_end().to_string()
    };
    let mut out = line(headers);
    out.push('\n');
    out.push_str(&"-".repeat(widths.iter().sum::<usize>() + 2 * (widths.len() - 1)));
    out.push('\n');
    for r in rows {
        out.push_str(&line(r));
        out.push('\n');
    }
    out
}

/// Aligned table: interface, method, one `mean ± moe` column per mode,
/// then one overhead column per non-baseline mode.
pub fn format_report(r: &BenchReport) -> String {
    let modes = r.modes();
    let measured: Vec<Mode> = modes.iter().copied().filter(|m| *m != Mode::Baseline).collect();
    let mut headers = vec!["Interface".to_string(), "Method".to_string()];
    headers.extend(modes.iter().map(|m| format!("{m} (ms)")));
    headers.extend(measured.iter().map(|m| format!("{m} %")));
    let rows: Vec<Vec<String>> = r
        .rows
        .iter()
        .map(|row| {
            let mut cells = vec![row.sort.api_class().to_string(), row.sort.api_method().to_string()];
            cells.extend(modes.iter().map(|m| row.cell(*m).map(mean_moe).unwrap_or_default()));
            cells.extend(measured.iter().map(|m| row.cell(*m).map(overhead).unwrap_or_default()));
            cells
        })
        .collect();
    let mut out = format!(
        "Execution of API method calls: {} runs x {} events, 95% CI margin of error, \
         overhead vs Baseline blank unless Welch p < 0.05\n\n",
        r.config.runs, r.config.event_count
    );
    out.push_str(&render(&headers, &rows, 2));
    if let Some(c) = &r.control {
        let headers: Vec<String> = ["Interface", "Method", "Baseline (ms)", "Baseline' (ms)", "Baseline' %", "p"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        let p = c.second.test.map(|t| format!("{:.3}", t.p)).unwrap_or_default();
        let row = vec![
            c.sort.api_class().to_string(),
            c.sort.api_method().to_string(),
            mean_moe(&c.first),
            mean_moe(&c.second),
            overhead(&c.second),
            p,
        ];
        out.push_str("\nSelf-comparison\n\n");
        out.push_str(&render(&headers, &[row], 2));
    }
    out.push('\n');
    out.push_str(&stats_line(r));
    out.push('\n');
    out
}

pub fn stats_line(r: &BenchReport) -> String {
    let modes: Vec<&str> = r.modes().iter().map(|m| m.key()).collect();
    format!(
        "workloads={} runs={} events={} modes={} seed={} elapsed_s={:.1} {}",
        r.rows.len(),
        r.config.runs,
        r.config.event_count,
        modes.join(","),
        r.config.seed,
        r.elapsed.as_secs_f64(),
        r.service
    )
}

/// One line per (workload, mode) cell; the self-comparison series is mode
/// `baseline_control`.
pub fn format_csv(r: &BenchReport) -> String {
    let mut out = String::from("interface,method,mode,runs,mean_ms,moe_ms,overhead_pct,significant,p_value\n");
    let mut line = |class: &str, method: &str, mode: &str, c: &BenchCell| {
        let p = c.test.map(|t| format!("{:.6}", t.p)).unwrap_or_default();
        let _ = writeln!(
            out,
            "{class},{method},{mode},{},{:.6},{:.6},{},{},{p}",
            c.samples_ms.len(),
            c.mean_ms,
            c.moe_ms,
            overhead(c),
            c.significant
        );
    };
    for row in &r.rows {
        for c in &row.cells {
            line(row.sort.api_class(), row.sort.api_method(), c.mode.key(), c);
        }
    }
    if let Some(c) = &r.control {
        line(c.sort.api_class(), c.sort.api_method(), "baseline_control", &c.second);
    }
    out
}
