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

//! Sample summaries, confidence intervals and Welch's t-test.

use statrs::distribution::{ContinuousCDF, StudentsT};

pub const ALPHA: f64 = 0.05;

/// Two-sided Student t quantile: the `p` quantile with `df` degrees of
/// freedom.
pub fn t_quantile(p: f64, df: f64) -> f64 {
    StudentsT::new(0.0, 1.0, df).expect("df > 0").inverse_cdf(p)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub n: usize,
    pub mean: f64,
    /// Sample standard deviation (n - 1 denominator).
    pub sd: f64,
    /// Half-width of the 95% confidence interval of the mean.
    pub moe: f64,
}

/// Panics on fewer than two samples.
pub fn summarize(xs: &[f64]) -> Summary {
    let n = xs.len();
    assert!(n >= 2, "need at least two samples, got {n}");
    let mean = xs.iter().sum::<f64>() / n as f64;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let sd = var.sqrt();
    let moe = t_quantile(0.975, (n - 1) as f64) * sd / (n as f64).sqrt();
    Summary { n, mean, sd, moe }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Welch {
    pub t: f64,
    pub df: f64,
    /// Two-sided p-value.
    pub p: f64,
}

impl Welch {
    pub fn rejects(&self, alpha: f64) -> bool {
        self.p < alpha
    }
}

/// Welch's unequal-variance two-sample t-test of `a` against `b`.
pub fn welch(a: &[f64], b: &[f64]) -> Welch {
    let (sa, sb) = (summarize(a), summarize(b));
    let (va, vb) = (sa.sd.powi(2) / sa.n as f64, sb.sd.powi(2) / sb.n as f64);
    let se2 = va + vb;
    if se2 == 0.0 {
        let same = sa.mean == sb.mean;
        return Welch { t: if same { 0.0 } else { f64::INFINITY }, df: f64::NAN, p: if same { 1.0 } else { 0.0 } };
    }
    let t = (sa.mean - sb.mean) / se2.sqrt();
    let df = se2.powi(2) / (va.powi(2) / (sa.n - 1) as f64 + vb.powi(2) / (sb.n - 1) as f64);
    let dist = StudentsT::new(0.0, 1.0, df).expect("df > 0");
    let p = 2.0 * (1.0 - dist.cdf(t.abs()));
    Welch { t, df, p }
}
