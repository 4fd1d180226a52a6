//! Score aggregation, one-sided hypothesis tests, winner distributions, and
//! the masking-effect grid.
//!
//! The t-test is the unpaired Welch test with Welch-Satterthwaite degrees
//! of freedom; its one-sided p-value is the upper tail for the alternative
//! "mean of `a` is higher". The KS test uses D+ = max(ECDF_b - ECDF_a)
//! (when `a` is stochastically greater its ECDF lies below) with the
//! asymptotic p-value exp(-2 m D+^2), m = n_a n_b / (n_a + n_b).

pub mod special;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{ScoreRow, METRIC_NAMES};

use special::student_t_sf;

/// Mean/std/median of one (prompt, metric) group. `std` is the sample
/// standard deviation (n-1 denominator).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub prompt_key: String,
    pub metric_name: String,
    pub n: usize,
    pub mean: f64,
    pub std: f64,
    pub median: f64,
    /// Highest mean for this metric; ties go to the lower std, then to the
    /// lexicographically smaller prompt key.
    pub best: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TestKind {
    #[serde(rename = "t_one_sided")]
    TOneSided,
    #[serde(rename = "ks_one_sided")]
    KsOneSided,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub test_kind: TestKind,
    pub statistic: f64,
    pub p_value: f64,
    pub n_a: usize,
    pub n_b: usize,
}

/// Per-metric counts of methods on which each prompt scored strictly
/// highest; exact ties award no winner and are counted separately.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WinnerDistribution {
    pub metric_name: String,
    pub counts: BTreeMap<String, usize>,
    pub ties: usize,
    /// Methods excluded for missing a score under some compared prompt.
    pub excluded: usize,
}

/// Tests for one (prompt, metric) cell of the masking ablation:
/// unmasked vs masked samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaskingRow {
    pub prompt: String,
    pub metric_name: String,
    pub t: TestResult,
    pub ks: TestResult,
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn sample_variance(xs: &[f64], mean: f64) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (xs.len() - 1) as f64
}

fn median(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    }
}

/// Group scores by prompt key and metric; mark the best row per metric.
/// Groups with no present values are simply absent.
pub fn aggregate(rows: &[ScoreRow]) -> Vec<AggregateRow> {
    let mut groups: BTreeMap<(String, String), Vec<f64>> = BTreeMap::new();
    for row in rows {
        let prompt_key = row.prompt_key();
        for metric in METRIC_NAMES {
            if let Some(value) = row.metrics.get(metric) {
                groups
                    .entry((metric.to_string(), prompt_key.clone()))
                    .or_default()
                    .push(value);
            }
        }
    }

    let mut out: Vec<AggregateRow> = groups
        .into_iter()
        .map(|((metric_name, prompt_key), mut values)| {
            values.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let m = mean(&values);
            let std = sample_variance(&values, m).sqrt();
            AggregateRow {
                prompt_key,
                metric_name,
                n: values.len(),
                mean: m,
                std,
                median: median(&values),
                best: false,
            }
        })
        .collect();

    let metrics: BTreeSet<String> = out.iter().map(|r| r.metric_name.clone()).collect();
    for metric in metrics {
        let best_idx = out
            .iter()
            .enumerate()
            .filter(|(_, r)| r.metric_name == metric)
            .min_by(|(_, a), (_, b)| {
                b.mean
                    .partial_cmp(&a.mean)
                    .unwrap()
                    .then(a.std.partial_cmp(&b.std).unwrap())
                    .then(a.prompt_key.cmp(&b.prompt_key))
            })
            .map(|(i, _)| i);
        if let Some(i) = best_idx {
            out[i].best = true;
        }
    }
    out
}

/// Welch's unpaired one-sided t-test with the alternative that `a` has the
/// higher mean. When both variances are zero the p-value degenerates to 0
/// (mean_a > mean_b) or 1, with the statistic reported as 0.
pub fn t_test_one_sided(a: &[f64], b: &[f64]) -> Result<TestResult> {
    if a.len() < 2 || b.len() < 2 {
        return Err(Error::SampleTooSmall {
            test: "t_test_one_sided",
            min: 2,
        });
    }
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (ma, mb) = (mean(a), mean(b));
    let (va, vb) = (sample_variance(a, ma), sample_variance(b, mb));

    if va == 0.0 && vb == 0.0 {
        return Ok(TestResult {
            test_kind: TestKind::TOneSided,
            statistic: 0.0,
            p_value: if ma > mb { 0.0 } else { 1.0 },
            n_a: a.len(),
            n_b: b.len(),
        });
    }

    let se2 = va / na + vb / nb;
    let t = (ma - mb) / se2.sqrt();
    let df = se2 * se2
        / ((va / na).powi(2) / (na - 1.0) + (vb / nb).powi(2) / (nb - 1.0));
    Ok(TestResult {
        test_kind: TestKind::TOneSided,
        statistic: t,
        p_value: student_t_sf(t, df),
        n_a: a.len(),
        n_b: b.len(),
    })
}

fn ecdf(sorted: &[f64], x: f64) -> f64 {
    // Count of values <= x.
    let count = sorted.partition_point(|v| *v <= x);
    count as f64 / sorted.len() as f64
}

/// One-sided two-sample KS test with the alternative that `a` is
/// stochastically greater than `b`.
pub fn ks_test_one_sided(a: &[f64], b: &[f64]) -> Result<TestResult> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::SampleTooSmall {
            test: "ks_test_one_sided",
            min: 1,
        });
    }
    let mut sa = a.to_vec();
    let mut sb = b.to_vec();
    sa.sort_by(|x, y| x.partial_cmp(y).unwrap());
    sb.sort_by(|x, y| x.partial_cmp(y).unwrap());

    let mut d_plus = 0.0f64;
    for x in sa.iter().chain(sb.iter()) {
        d_plus = d_plus.max(ecdf(&sb, *x) - ecdf(&sa, *x));
    }
    let m = (a.len() * b.len()) as f64 / (a.len() + b.len()) as f64;
    let p = (-2.0 * m * d_plus * d_plus).exp().clamp(0.0, 1.0);
    Ok(TestResult {
        test_kind: TestKind::KsOneSided,
        statistic: d_plus,
        p_value: p,
        n_a: a.len(),
        n_b: b.len(),
    })
}

/// Values per (method, prompt_key) for one metric; the winner per method is
/// the strictly highest-scoring prompt.
pub fn winner_distribution(rows: &[ScoreRow], metric: &str) -> Result<WinnerDistribution> {
    if !METRIC_NAMES.contains(&metric) {
        return Err(Error::Data(format!("unknown metric {metric}")));
    }
    let prompt_keys: BTreeSet<String> = rows.iter().map(|r| r.prompt_key()).collect();
    let mut per_method: BTreeMap<&str, BTreeMap<String, f64>> = BTreeMap::new();
    for row in rows {
        if let Some(value) = row.metrics.get(metric) {
            per_method
                .entry(row.method_id.as_str())
                .or_default()
                .insert(row.prompt_key(), value);
        }
    }

    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    let mut ties = 0usize;
    let mut excluded = 0usize;
    for (_, scores) in per_method {
        if scores.len() != prompt_keys.len() {
            excluded += 1;
            continue;
        }
        let top = scores
            .values()
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max);
        let winners: Vec<&String> = scores
            .iter()
            .filter(|(_, v)| **v == top)
            .map(|(k, _)| k)
            .collect();
        if winners.len() == 1 {
            *counts.entry(winners[0].clone()).or_insert(0) += 1;
        } else {
            ties += 1;
        }
    }
    Ok(WinnerDistribution {
        metric_name: metric.to_string(),
        counts,
        ties,
        excluded,
    })
}

/// Samples per (strategy, metric, masked-flag), ordered by method id so the
/// grid is deterministic.
fn samples_by_cell(rows: &[ScoreRow]) -> BTreeMap<(String, String, bool), Vec<f64>> {
    let mut sorted: Vec<&ScoreRow> = rows.iter().collect();
    sorted.sort_by(|a, b| a.method_id.cmp(&b.method_id));
    let mut cells: BTreeMap<(String, String, bool), Vec<f64>> = BTreeMap::new();
    for row in sorted {
        for metric in METRIC_NAMES {
            if let Some(value) = row.metrics.get(metric) {
                cells
                    .entry((row.strategy.key().to_string(), metric.to_string(), row.masked))
                    .or_default()
                    .push(value);
            }
        }
    }
    cells
}

/// For every (strategy, metric) with both variants present, test whether
/// the unmasked scores exceed the masked ones (t-test on means, KS on
/// distributions). Cells lacking enough samples are omitted.
pub fn masking_effect(rows: &[ScoreRow]) -> Vec<MaskingRow> {
    let cells = samples_by_cell(rows);
    let mut keys: BTreeSet<(String, String)> = BTreeSet::new();
    for (strategy, metric, _) in cells.keys() {
        keys.insert((strategy.clone(), metric.clone()));
    }

    let mut out = Vec::new();
    for (strategy, metric) in keys {
        let unmasked = cells.get(&(strategy.clone(), metric.clone(), false));
        let masked = cells.get(&(strategy.clone(), metric.clone(), true));
        let (Some(unmasked), Some(masked)) = (unmasked, masked) else {
            continue;
        };
        let (Ok(t), Ok(ks)) = (
            t_test_one_sided(unmasked, masked),
            ks_test_one_sided(unmasked, masked),
        ) else {
            continue;
        };
        out.push(MaskingRow {
            prompt: strategy,
            metric_name: metric,
            t,
            ks,
        });
    }
    out
}

/// Candidate-vs-baseline tests per metric (alternative: candidate greater).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub baseline: String,
    pub candidate: String,
    pub metric_name: String,
    pub t: TestResult,
    pub ks: TestResult,
}

/// Compare two prompt keys (e.g. "wordrestrict" vs "asap") on every metric
/// both have samples for.
pub fn compare_prompts(
    rows: &[ScoreRow],
    baseline: &str,
    candidate: &str,
) -> Result<Vec<ComparisonRow>> {
    let known: BTreeSet<String> = rows.iter().map(|r| r.prompt_key()).collect();
    for key in [baseline, candidate] {
        if !known.contains(key) {
            return Err(Error::Data(format!(
                "prompt key {key} not present in the scores file"
            )));
        }
    }

    let mut sorted: Vec<&ScoreRow> = rows.iter().collect();
    sorted.sort_by(|a, b| a.method_id.cmp(&b.method_id));

    let mut out = Vec::new();
    for metric in METRIC_NAMES {
        let collect = |key: &str| -> Vec<f64> {
            sorted
                .iter()
                .filter(|r| r.prompt_key() == key)
                .filter_map(|r| r.metrics.get(metric))
                .collect()
        };
        let candidate_samples = collect(candidate);
        let baseline_samples = collect(baseline);
        if candidate_samples.len() < 2 || baseline_samples.len() < 2 {
            continue;
        }
        out.push(ComparisonRow {
            baseline: baseline.to_string(),
            candidate: candidate.to_string(),
            metric_name: metric.to_string(),
            t: t_test_one_sided(&candidate_samples, &baseline_samples)?,
            ks: ks_test_one_sided(&candidate_samples, &baseline_samples)?,
        });
    }
    Ok(out)
}

#[cfg(test)]
pub(crate) mod tests;
