//! Report assembly and rendering: the per-prompt aggregate table with best
//! cells marked, pairwise comparison tests, winner bar data, and the
//! masking-effect grid, as markdown, CSV, and round-trippable JSON.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::METRIC_NAMES;
use crate::stats::{AggregateRow, ComparisonRow, MaskingRow, WinnerDistribution};

/// `mean(std)` cell format, both values rounded half-up to two decimals;
/// fixed width, trailing zeros kept.
pub fn format_mean_std(mean: f64, std: f64) -> String {
    format!("{}({})", round2(mean), round2(std))
}

fn round2(x: f64) -> String {
    // Half-up (ties toward +infinity), then fixed two decimals.
    let scaled = (x * 100.0 + 0.5).floor() / 100.0;
    format!("{scaled:.2}")
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub aggregates: Vec<AggregateRow>,
    pub comparisons: Vec<ComparisonRow>,
    pub winners: Vec<WinnerDistribution>,
    pub masking: Vec<MaskingRow>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Markdown,
    Csv,
    Json,
}

impl ReportFormat {
    pub fn parse(s: &str) -> Option<ReportFormat> {
        match s {
            "md" | "markdown" => Some(ReportFormat::Markdown),
            "csv" => Some(ReportFormat::Csv),
            "json" => Some(ReportFormat::Json),
            _ => None,
        }
    }

    fn file_name(&self) -> &'static str {
        match self {
            ReportFormat::Markdown => "report.md",
            ReportFormat::Csv => "report.csv",
            ReportFormat::Json => "report.json",
        }
    }
}

impl Report {
    fn prompt_keys(&self) -> Vec<String> {
        let keys: BTreeSet<String> = self
            .aggregates
            .iter()
            .map(|r| r.prompt_key.clone())
            .collect();
        keys.into_iter().collect()
    }

    fn metrics_present(&self) -> Vec<&'static str> {
        METRIC_NAMES
            .iter()
            .copied()
            .filter(|m| self.aggregates.iter().any(|r| r.metric_name == *m))
            .collect()
    }

    fn cell(&self, prompt_key: &str, metric: &str) -> Option<&AggregateRow> {
        self.aggregates
            .iter()
            .find(|r| r.prompt_key == prompt_key && r.metric_name == metric)
    }

    pub fn render_markdown(&self) -> String {
        let mut out = String::new();
        out.push_str("# Summary benchmark report\n");

        let metrics = self.metrics_present();
        if !self.aggregates.is_empty() {
            out.push_str("\n## Mean (std) per prompt and metric\n\n");
            out.push_str("Best score per metric in **bold**; ties in mean go to the lower standard deviation.\n\n");
            out.push_str(&format!("| prompt | {} |\n", metrics.join(" | ")));
            out.push_str(&format!("|---{}|\n", "|---".repeat(metrics.len())));
            for prompt_key in self.prompt_keys() {
                let mut cells = Vec::new();
                for metric in &metrics {
                    let text = match self.cell(&prompt_key, metric) {
                        Some(row) if row.best => {
                            format!("**{}**", format_mean_std(row.mean, row.std))
                        }
                        Some(row) => format_mean_std(row.mean, row.std),
                        None => "-".to_string(),
                    };
                    cells.push(text);
                }
                out.push_str(&format!("| {} | {} |\n", prompt_key, cells.join(" | ")));
            }
        }

        if !self.comparisons.is_empty() {
            out.push_str("\n## Candidate vs baseline (one-sided tests)\n\n");
            out.push_str("| metric | candidate | baseline | t statistic | t p-value | KS D+ | KS p-value |\n");
            out.push_str("|---|---|---|---|---|---|---|\n");
            for c in &self.comparisons {
                out.push_str(&format!(
                    "| {} | {} | {} | {:.4} | {:.6} | {:.4} | {:.6} |\n",
                    c.metric_name,
                    c.candidate,
                    c.baseline,
                    c.t.statistic,
                    c.t.p_value,
                    c.ks.statistic,
                    c.ks.p_value
                ));
            }
        }

        if !self.winners.is_empty() {
            out.push_str("\n## Winner distribution (methods where a prompt scored strictly best)\n\n");
            for w in &self.winners {
                out.push_str(&format!("### {}\n\n", w.metric_name));
                out.push_str("| prompt | wins |\n|---|---|\n");
                for (prompt, count) in &w.counts {
                    out.push_str(&format!("| {prompt} | {count} |\n"));
                }
                out.push_str(&format!("| (ties) | {} |\n", w.ties));
                if w.excluded > 0 {
                    out.push_str(&format!("| (excluded) | {} |\n", w.excluded));
                }
                out.push('\n');
            }
        }

        if !self.masking.is_empty() {
            out.push_str("\n## Masking effect (unmasked vs masked, one-sided)\n\n");
            out.push_str("| prompt | metric | t p-value | KS p-value |\n");
            out.push_str("|---|---|---|---|\n");
            for m in &self.masking {
                out.push_str(&format!(
                    "| {} | {} | {:.6} | {:.6} |\n",
                    m.prompt, m.metric_name, m.t.p_value, m.ks.p_value
                ));
            }
        }
        out
    }

    pub fn render_csv(&self) -> String {
        let mut out = String::new();
        out.push_str("section,prompt,metric,n,mean,std,median,best,statistic,p_value\n");
        for r in &self.aggregates {
            out.push_str(&format!(
                "aggregate,{},{},{},{},{},{},{},,\n",
                r.prompt_key, r.metric_name, r.n, r.mean, r.std, r.median, r.best
            ));
        }
        for c in &self.comparisons {
            out.push_str(&format!(
                "comparison_t,{}_vs_{},{},,,,,,{},{}\n",
                c.candidate, c.baseline, c.metric_name, c.t.statistic, c.t.p_value
            ));
            out.push_str(&format!(
                "comparison_ks,{}_vs_{},{},,,,,,{},{}\n",
                c.candidate, c.baseline, c.metric_name, c.ks.statistic, c.ks.p_value
            ));
        }
        for w in &self.winners {
            for (prompt, count) in &w.counts {
                out.push_str(&format!(
                    "winner,{},{},{},,,,,,\n",
                    prompt, w.metric_name, count
                ));
            }
            out.push_str(&format!("winner_ties,,{},{},,,,,,\n", w.metric_name, w.ties));
        }
        for m in &self.masking {
            out.push_str(&format!(
                "masking_t,{},{},,,,,,{},{}\n",
                m.prompt, m.metric_name, m.t.statistic, m.t.p_value
            ));
            out.push_str(&format!(
                "masking_ks,{},{},,,,,,{},{}\n",
                m.prompt, m.metric_name, m.ks.statistic, m.ks.p_value
            ));
        }
        out
    }

    pub fn render_json(&self) -> String {
        let mut json = serde_json::to_string_pretty(self).expect("report serializes");
        json.push('\n');
        json
    }

    /// Write the requested formats into `out_dir`; returns the paths.
    pub fn render_report(&self, formats: &[ReportFormat], out_dir: &Path) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
        let mut written = Vec::new();
        for format in formats {
            let path = out_dir.join(format.file_name());
            let content = match format {
                ReportFormat::Markdown => self.render_markdown(),
                ReportFormat::Csv => self.render_csv(),
                ReportFormat::Json => self.render_json(),
            };
            std::fs::write(&path, content).map_err(|e| Error::io(&path, e))?;
            written.push(path);
        }
        Ok(written)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prompt::PromptStrategy;
    use crate::stats::{aggregate, compare_prompts, masking_effect, winner_distribution};

    #[test]
    fn mean_std_cell_formats() {
        assert_eq!(format_mean_std(0.611, 0.084), "0.61(0.08)");
        assert_eq!(format_mean_std(1.0, 0.0), "1.00(0.00)");
        assert_eq!(format_mean_std(0.005, 0.004), "0.01(0.00)");
        assert_eq!(format_mean_std(0.615, 0.125), "0.62(0.13)");
    }

    fn fixture_report() -> Report {
        let mut rows = Vec::new();
        for i in 0..6 {
            let value = 0.1 * i as f64;
            for strategy in [PromptStrategy::Asap, PromptStrategy::WordRestrict] {
                let boost = if strategy == PromptStrategy::WordRestrict {
                    0.3
                } else {
                    0.0
                };
                rows.push(crate::stats::tests::row(
                    &format!("m{i}"),
                    strategy,
                    false,
                    value + boost,
                ));
                rows.push(crate::stats::tests::row(
                    &format!("m{i}"),
                    strategy,
                    true,
                    value,
                ));
            }
        }
        let winners = ["bleu", "meteor"]
            .iter()
            .map(|m| winner_distribution(&rows, m).unwrap())
            .collect();
        Report {
            aggregates: aggregate(&rows),
            comparisons: compare_prompts(&rows, "asap", "wordrestrict").unwrap(),
            winners,
            masking: masking_effect(&rows),
        }
    }

    #[test]
    fn json_report_round_trips_bit_exact() {
        let report = fixture_report();
        let json = report.render_json();
        let parsed: Report = serde_json::from_str(&json).unwrap();
        assert_eq!(parsed, report);
        assert_eq!(parsed.render_json(), json);
    }

    #[test]
    fn markdown_marks_best_cells() {
        let report = fixture_report();
        let md = report.render_markdown();
        assert!(md.contains("**"));
        assert!(md.contains("| wordrestrict |"));
        assert!(md.contains("## Masking effect"));
    }

    #[test]
    fn empty_sections_are_omitted_but_report_valid() {
        let report = Report::default();
        let md = report.render_markdown();
        assert!(!md.contains("## Candidate vs baseline"));
        assert!(!md.contains("## Winner distribution"));
        let json = report.render_json();
        let parsed: Report = serde_json::from_str(&json).unwrap();
        assert_eq!(parsed, report);
    }

    #[test]
    fn render_report_writes_requested_files() {
        let dir = tempfile::tempdir().unwrap();
        let report = fixture_report();
        let paths = report
            .render_report(
                &[ReportFormat::Markdown, ReportFormat::Csv, ReportFormat::Json],
                dir.path(),
            )
            .unwrap();
        assert_eq!(paths.len(), 3);
        for path in paths {
            assert!(path.exists());
            assert!(std::fs::metadata(&path).unwrap().len() > 0);
        }
    }

    #[test]
    fn rendering_is_deterministic() {
        let report = fixture_report();
        assert_eq!(report.render_markdown(), report.render_markdown());
        assert_eq!(report.render_csv(), report.render_csv());
        assert_eq!(report.render_json(), report.render_json());
    }

    #[test]
    fn golden_markdown_snapshot() {
        let rows = vec![
            crate::stats::tests::row("m1", PromptStrategy::Asap, false, 0.2),
            crate::stats::tests::row("m2", PromptStrategy::Asap, false, 0.4),
            crate::stats::tests::row("m1", PromptStrategy::WordRestrict, false, 0.5),
            crate::stats::tests::row("m2", PromptStrategy::WordRestrict, false, 0.7),
        ];
        let report = Report {
            aggregates: aggregate(&rows),
            comparisons: Vec::new(),
            winners: vec![winner_distribution(&rows, "bleu").unwrap()],
            masking: Vec::new(),
        };
        let expected = "\
# Summary benchmark report

## Mean (std) per prompt and metric

Best score per metric in **bold**; ties in mean go to the lower standard deviation.

| prompt | bleu_dc | bleu | meteor | rouge_prec | rouge_rec |
|---|---|---|---|---|---|
| asap | 0.30(0.14) | 0.30(0.14) | 0.30(0.14) | 0.30(0.14) | 0.30(0.14) |
| wordrestrict | **0.60(0.14)** | **0.60(0.14)** | **0.60(0.14)** | **0.60(0.14)** | **0.60(0.14)** |

## Winner distribution (methods where a prompt scored strictly best)

### bleu

| prompt | wins |
|---|---|
| wordrestrict | 2 |
| (ties) | 0 |

";
        assert_eq!(report.render_markdown(), expected);
    }
}
