use super::*;
use crate::metrics::{MetricVector, ScoreRow};
use crate::prompt::PromptStrategy;

pub(crate) fn row(
    method_id: &str,
    strategy: PromptStrategy,
    masked: bool,
    value: f64,
) -> ScoreRow {
    ScoreRow {
        method_id: method_id.into(),
        strategy,
        masked,
        metrics: MetricVector {
            bert_score: None,
            bleu_dc: value,
            bleu: value,
            bleu_rt: None,
            meteor: value,
            rouge_prec: value,
            rouge_rec: value,
            sent_sim: None,
        },
    }
}

/// Reference Welch p-value: same statistic definition, tail probability
/// from the statrs Student-t CDF instead of our incomplete beta.
pub(crate) fn oracle_welch_p(a: &[f64], b: &[f64]) -> f64 {
    use statrs::distribution::{ContinuousCDF, StudentsT};
    let mean = |xs: &[f64]| xs.iter().sum::<f64>() / xs.len() as f64;
    let var = |xs: &[f64], m: f64| {
        xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64
    };
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (ma, mb) = (mean(a), mean(b));
    let (va, vb) = (var(a, ma), var(b, mb));
    let se2 = va / na + vb / nb;
    let t = (ma - mb) / se2.sqrt();
    let df = se2 * se2 / ((va / na).powi(2) / (na - 1.0) + (vb / nb).powi(2) / (nb - 1.0));
    1.0 - StudentsT::new(0.0, 1.0, df).unwrap().cdf(t)
}

pub(crate) fn fixture_sample_pairs() -> Vec<(Vec<f64>, Vec<f64>)> {
    vec![
        (vec![2.0, 4.0, 6.0], vec![1.0, 2.0, 3.0]),
        (vec![1.0, 2.0, 3.0], vec![1.0, 2.0, 3.5]),
        (vec![0.5, 0.6, 0.7, 0.8], vec![0.1, 0.2, 0.3, 0.4]),
        (vec![0.1, 0.9, 0.5, 0.3, 0.7], vec![0.2, 0.8, 0.4, 0.6, 0.5]),
        (vec![0.61, 0.58, 0.64, 0.59], vec![0.55, 0.52, 0.57, 0.54]),
        (vec![10.0, 11.0, 12.0], vec![1.0, 2.0, 3.0]),
        (vec![1.0, 1.1], vec![0.9, 1.2, 1.05]),
        (vec![0.0, 0.01, 0.02, 0.03, 0.04], vec![0.05, 0.04, 0.03, 0.02, 0.06]),
        (vec![0.3, 0.3, 0.31, 0.29], vec![0.3, 0.3, 0.3, 0.31]),
        (vec![5.0, 6.0, 7.0, 8.0, 9.0], vec![5.5, 6.5, 7.5, 8.5]),
        (vec![0.42, 0.40, 0.44], vec![0.41, 0.43, 0.39, 0.45]),
        (vec![2.0, 2.5, 3.5, 4.0], vec![2.2, 2.4, 2.6]),
    ]
}

#[test]
fn t_test_equal_samples_gives_half() {
    let samples = vec![0.1, 0.5, 0.9, 0.3];
    let result = t_test_one_sided(&samples, &samples).unwrap();
    assert!((result.p_value - 0.5).abs() < 1e-12);
    assert_eq!(result.statistic, 0.0);
}

#[test]
fn t_test_matches_reference_on_fixture_pairs() {
    for (a, b) in fixture_sample_pairs() {
        let mine = t_test_one_sided(&a, &b).unwrap();
        let reference = oracle_welch_p(&a, &b);
        assert!(
            (mine.p_value - reference).abs() < 1e-6,
            "{a:?} vs {b:?}: {} vs {reference}",
            mine.p_value
        );
    }
}

#[test]
fn t_test_large_shift_is_significant() {
    let a = vec![10.0, 10.1, 9.9, 10.05, 9.95];
    let b = vec![1.0, 1.1, 0.9, 1.05, 0.95];
    let result = t_test_one_sided(&a, &b).unwrap();
    assert!(result.p_value < 0.05);
}

#[test]
fn t_test_degenerate_zero_variances() {
    let high = vec![2.0, 2.0, 2.0];
    let low = vec![1.0, 1.0];
    assert_eq!(t_test_one_sided(&high, &low).unwrap().p_value, 0.0);
    assert_eq!(t_test_one_sided(&low, &high).unwrap().p_value, 1.0);
    assert_eq!(t_test_one_sided(&high, &high).unwrap().p_value, 1.0);
}

#[test]
fn t_test_requires_two_samples() {
    assert!(t_test_one_sided(&[1.0], &[1.0, 2.0]).is_err());
}

#[test]
fn ks_equal_samples_gives_one() {
    let samples = vec![0.2, 0.4, 0.6];
    let result = ks_test_one_sided(&samples, &samples).unwrap();
    assert_eq!(result.statistic, 0.0);
    assert_eq!(result.p_value, 1.0);
}

#[test]
fn ks_fully_separated_hand_value() {
    // D+ = 1, m = 9/6 = 1.5, p = exp(-3) ~ 0.0498.
    let result = ks_test_one_sided(&[10.0, 11.0, 12.0], &[1.0, 2.0, 3.0]).unwrap();
    assert_eq!(result.statistic, 1.0);
    assert!((result.p_value - (-3.0f64).exp()).abs() < 1e-12);
    assert!((result.p_value - 0.0498).abs() < 1e-4);
}

#[test]
fn ks_direction_matters() {
    // `a` below `b` means ECDF_a sits above: D+ stays 0 and p stays 1.
    let low = vec![1.0, 2.0, 3.0];
    let high = vec![10.0, 11.0, 12.0];
    let result = ks_test_one_sided(&low, &high).unwrap();
    assert_eq!(result.statistic, 0.0);
    assert_eq!(result.p_value, 1.0);
}

#[test]
fn ks_interleaved_hand_value() {
    // a = {2,4,6,8}, b = {1,3,5,7}: D+ = 0.25 at each b point,
    // m = 16/8 = 2, p = exp(-2*2*0.0625) = exp(-0.25).
    let result = ks_test_one_sided(&[2.0, 4.0, 6.0, 8.0], &[1.0, 3.0, 5.0, 7.0]).unwrap();
    assert!((result.statistic - 0.25).abs() < 1e-12);
    assert!((result.p_value - (-0.25f64).exp()).abs() < 1e-12);
}

/// Independent ECDF oracle over a dense evaluation grid.
pub(crate) fn oracle_ks_p(a: &[f64], b: &[f64]) -> f64 {
    let ecdf = |xs: &[f64], x: f64| {
        xs.iter().filter(|v| **v <= x).count() as f64 / xs.len() as f64
    };
    let mut d_plus = 0.0f64;
    for x in a.iter().chain(b.iter()) {
        d_plus = d_plus.max(ecdf(b, *x) - ecdf(a, *x));
    }
    let m = (a.len() * b.len()) as f64 / (a.len() + b.len()) as f64;
    (-2.0 * m * d_plus * d_plus).exp().min(1.0)
}

#[test]
fn ks_matches_reference_on_fixture_pairs() {
    for (a, b) in fixture_sample_pairs() {
        let mine = ks_test_one_sided(&a, &b).unwrap();
        let reference = oracle_ks_p(&a, &b);
        assert!((mine.p_value - reference).abs() < 1e-6);
    }
}

#[test]
fn aggregate_single_sample() {
    let rows = vec![row("m1", PromptStrategy::Simple, false, 0.5)];
    let aggregates = aggregate(&rows);
    let bleu = aggregates
        .iter()
        .find(|r| r.metric_name == "bleu")
        .unwrap();
    assert_eq!(bleu.n, 1);
    assert_eq!(bleu.mean, 0.5);
    assert_eq!(bleu.std, 0.0);
    assert_eq!(bleu.median, 0.5);
}

#[test]
fn aggregate_two_samples_hand_values() {
    let rows = vec![
        row("m1", PromptStrategy::Simple, false, 0.0),
        row("m2", PromptStrategy::Simple, false, 1.0),
    ];
    let aggregates = aggregate(&rows);
    let bleu = aggregates
        .iter()
        .find(|r| r.metric_name == "bleu")
        .unwrap();
    assert_eq!(bleu.mean, 0.5);
    assert!((bleu.std - 0.5f64.sqrt()).abs() < 1e-12);
    assert_eq!(bleu.median, 0.5);
}

#[test]
fn aggregate_tie_breaks_toward_lower_std() {
    // Same mean 0.5; simple has spread, wordrestrict is constant.
    let rows = vec![
        row("m1", PromptStrategy::Simple, false, 0.4),
        row("m2", PromptStrategy::Simple, false, 0.6),
        row("m1", PromptStrategy::WordRestrict, false, 0.5),
        row("m2", PromptStrategy::WordRestrict, false, 0.5),
    ];
    let aggregates = aggregate(&rows);
    for metric_rows in aggregates.chunks(2) {
        let best: Vec<&AggregateRow> = metric_rows.iter().filter(|r| r.best).collect();
        assert_eq!(best.len(), 1);
        assert_eq!(best[0].prompt_key, "wordrestrict");
    }
}

#[test]
fn aggregate_is_permutation_invariant() {
    let mut rows = vec![
        row("m1", PromptStrategy::Simple, false, 0.1),
        row("m2", PromptStrategy::Simple, false, 0.9),
        row("m3", PromptStrategy::Simple, false, 0.4),
    ];
    let forward = aggregate(&rows);
    rows.reverse();
    assert_eq!(forward, aggregate(&rows));
}

#[test]
fn winner_strict_max_counts() {
    let rows = vec![
        row("m1", PromptStrategy::Simple, false, 0.9),
        row("m1", PromptStrategy::Asap, false, 0.1),
    ];
    let w = winner_distribution(&rows, "bleu").unwrap();
    assert_eq!(w.counts.get("simple"), Some(&1));
    assert_eq!(w.counts.get("asap"), None);
    assert_eq!(w.ties, 0);
}

#[test]
fn winner_exact_tie_counts_no_winner() {
    let rows = vec![
        row("m1", PromptStrategy::Simple, false, 0.5),
        row("m1", PromptStrategy::Asap, false, 0.5),
    ];
    let w = winner_distribution(&rows, "bleu").unwrap();
    assert!(w.counts.is_empty());
    assert_eq!(w.ties, 1);
}

#[test]
fn winner_missing_score_excludes_method() {
    let rows = vec![
        row("m1", PromptStrategy::Simple, false, 0.5),
        row("m1", PromptStrategy::Asap, false, 0.4),
        row("m2", PromptStrategy::Simple, false, 0.7),
        // m2 has no asap row.
    ];
    let w = winner_distribution(&rows, "bleu").unwrap();
    assert_eq!(w.excluded, 1);
    assert_eq!(w.counts.get("simple"), Some(&1));
}

#[test]
fn winner_counts_plus_ties_equal_methods() {
    let mut rows = Vec::new();
    for i in 0..10 {
        let value = i as f64 / 10.0;
        rows.push(row(&format!("m{i}"), PromptStrategy::Simple, false, value));
        // Every third method ties asap with simple exactly.
        let other = if i % 3 == 0 { value } else { value / 2.0 };
        rows.push(row(&format!("m{i}"), PromptStrategy::Asap, false, other));
    }
    let w = winner_distribution(&rows, "meteor").unwrap();
    let total: usize = w.counts.values().sum();
    assert_eq!(total + w.ties, 10);

    // Brute-force check of every method's winner.
    let mut expected_ties = 0;
    let mut expected_simple = 0;
    for i in 0..10 {
        if i % 3 == 0 {
            expected_ties += 1;
        } else {
            expected_simple += 1;
        }
    }
    assert_eq!(w.ties, expected_ties);
    assert_eq!(w.counts.get("simple").copied().unwrap_or(0), expected_simple);
}

#[test]
fn masking_identical_samples_give_null_results() {
    let mut rows = Vec::new();
    for i in 0..5 {
        let value = 0.1 * i as f64;
        rows.push(row(&format!("m{i}"), PromptStrategy::Asap, false, value));
        rows.push(row(&format!("m{i}"), PromptStrategy::Asap, true, value));
    }
    let grid = masking_effect(&rows);
    assert_eq!(grid.len(), 5); // five computable metrics in these rows
    for cell in grid {
        assert!((cell.t.p_value - 0.5).abs() < 1e-12);
        assert_eq!(cell.ks.p_value, 1.0);
    }
}

#[test]
fn masking_shifted_samples_are_significant() {
    let mut rows = Vec::new();
    for i in 0..8 {
        let base = 0.05 * i as f64;
        rows.push(row(&format!("m{i}"), PromptStrategy::Asap, false, base + 0.4));
        rows.push(row(&format!("m{i}"), PromptStrategy::Asap, true, base));
    }
    let grid = masking_effect(&rows);
    for cell in grid {
        assert!(cell.t.p_value < 0.05, "{}: {}", cell.metric_name, cell.t.p_value);
        assert!(cell.ks.p_value < 0.05);
    }
}

#[test]
fn masking_grid_covers_both_strategies() {
    let mut rows = Vec::new();
    for strategy in [PromptStrategy::Asap, PromptStrategy::WordRestrict] {
        for i in 0..4 {
            rows.push(row(&format!("m{i}"), strategy, false, 0.1 * i as f64 + 0.2));
            rows.push(row(&format!("m{i}"), strategy, true, 0.1 * i as f64));
        }
    }
    let grid = masking_effect(&rows);
    let strategies: BTreeSet<&str> = grid.iter().map(|c| c.prompt.as_str()).collect();
    assert_eq!(strategies, ["asap", "wordrestrict"].into_iter().collect());
    // 2 strategies x 5 computable metrics.
    assert_eq!(grid.len(), 10);
}

#[test]
fn compare_prompts_runs_both_tests_per_metric() {
    let mut rows = Vec::new();
    for i in 0..6 {
        rows.push(row(&format!("m{i}"), PromptStrategy::WordRestrict, false, 0.1 * i as f64 + 0.3));
        rows.push(row(&format!("m{i}"), PromptStrategy::Asap, false, 0.1 * i as f64));
    }
    let comparisons = compare_prompts(&rows, "asap", "wordrestrict").unwrap();
    assert_eq!(comparisons.len(), 5);
    for c in &comparisons {
        assert_eq!(c.baseline, "asap");
        assert_eq!(c.candidate, "wordrestrict");
        assert!(c.t.p_value < 0.5);
    }
    assert!(compare_prompts(&rows, "nope", "asap").is_err());
}

mod properties {
    use super::*;
    use proptest::prelude::*;

    fn arb_samples() -> impl Strategy<Value = Vec<f64>> {
        proptest::collection::vec(0.0f64..1.0, 2..12)
    }

    proptest! {
        #[test]
        fn t_p_values_of_swapped_sides_sum_to_one(a in arb_samples(), b in arb_samples()) {
            let va = a.iter().map(|x| (x - a.iter().sum::<f64>() / a.len() as f64).abs()).sum::<f64>();
            let vb = b.iter().map(|x| (x - b.iter().sum::<f64>() / b.len() as f64).abs()).sum::<f64>();
            prop_assume!(va > 1e-9 || vb > 1e-9);
            let forward = t_test_one_sided(&a, &b).unwrap().p_value;
            let backward = t_test_one_sided(&b, &a).unwrap().p_value;
            prop_assert!((forward + backward - 1.0).abs() < 1e-9, "{forward} + {backward}");
        }

        #[test]
        fn ks_p_in_range_and_one_when_d_zero(a in arb_samples()) {
            let result = ks_test_one_sided(&a, &a).unwrap();
            prop_assert_eq!(result.p_value, 1.0);
            let shifted: Vec<f64> = a.iter().map(|x| x + 2.0).collect();
            let r2 = ks_test_one_sided(&shifted, &a).unwrap();
            prop_assert!((0.0..=1.0).contains(&r2.p_value));
        }
    }
}
