use super::*;
use crate::gateway::{GenerationRecord, RunStatus};
use crate::prompt::PromptStrategy;

fn toks(s: &str) -> SummaryTokens {
    normalize_summary(s)
}

// ---------------------------------------------------------------------------
// Independent oracles. These re-derive the formulas from scratch over plain
// token lists, with no shared machinery with the implementations above.
// ---------------------------------------------------------------------------

pub(crate) mod oracle {
    /// Count n-grams of `seq` as owned vectors.
    fn grams(seq: &[String], n: usize) -> Vec<Vec<String>> {
        if seq.len() < n {
            return Vec::new();
        }
        (0..=seq.len() - n).map(|i| seq[i..i + n].to_vec()).collect()
    }

    fn clipped(cand: &[String], reference: &[String], n: usize) -> (usize, usize) {
        let c = grams(cand, n);
        let mut r = grams(reference, n);
        let total = c.len();
        let mut matches = 0;
        for gram in &c {
            if let Some(pos) = r.iter().position(|g| g == gram) {
                r.remove(pos);
                matches += 1;
            }
        }
        (matches, total)
    }

    fn bp(cand_len: usize, ref_len: usize) -> f64 {
        if cand_len >= ref_len {
            1.0
        } else {
            (1.0 - ref_len as f64 / cand_len as f64).exp()
        }
    }

    pub fn bleu_cn(cand: &[String], reference: &[String]) -> f64 {
        if cand.is_empty() {
            return 0.0;
        }
        let mut product = 1.0;
        for n in 1..=4 {
            let (m, t) = clipped(cand, reference, n);
            let p = if n == 1 {
                m as f64 / t as f64
            } else {
                (m as f64 + 1.0) / (t as f64 + 1.0)
            };
            product *= p;
        }
        product.powf(0.25) * bp(cand.len(), reference.len())
    }

    pub fn bleu_dc(cand: &[String], reference: &[String]) -> f64 {
        if cand.is_empty() {
            return 0.0;
        }
        let mut product = 1.0;
        let mut z = 0;
        for n in 1..=4 {
            let (m, t) = clipped(cand, reference, n);
            let p = if m == 0 {
                z += 1;
                1.0 / (2f64.powi(z) * t.max(1) as f64)
            } else {
                m as f64 / t as f64
            };
            product *= p;
        }
        product.powf(0.25) * bp(cand.len(), reference.len())
    }

    /// Quadratic-space recursive LCS, memo-free (fixture-sized inputs).
    pub fn lcs(a: &[String], b: &[String]) -> usize {
        if a.is_empty() || b.is_empty() {
            0
        } else if a[a.len() - 1] == b[b.len() - 1] {
            1 + lcs(&a[..a.len() - 1], &b[..b.len() - 1])
        } else {
            lcs(&a[..a.len() - 1], b).max(lcs(a, &b[..b.len() - 1]))
        }
    }

    pub fn rouge_l(cand: &[String], reference: &[String]) -> (f64, f64) {
        if cand.is_empty() || reference.is_empty() {
            return (0.0, 0.0);
        }
        let l = lcs(cand, reference) as f64;
        (l / cand.len() as f64, l / reference.len() as f64)
    }

    /// Exhaustively enumerate every injective exact-match alignment and
    /// return (max matches, min chunks among maximum alignments).
    pub fn best_alignment(cand: &[String], reference: &[String]) -> (usize, usize) {
        #[allow(clippy::too_many_arguments)]
        fn recurse(
            cand: &[String],
            reference: &[String],
            i: usize,
            used: &mut Vec<bool>,
            prev: Option<usize>,
            matches: usize,
            chunks: usize,
            best: &mut (usize, usize),
        ) {
            if i == cand.len() {
                if matches > best.0 || (matches == best.0 && chunks < best.1) {
                    *best = (matches, chunks);
                }
                return;
            }
            // Skip candidate position i.
            recurse(cand, reference, i + 1, used, None, matches, chunks, best);
            // Match it to every compatible reference position.
            for j in 0..reference.len() {
                if !used[j] && reference[j] == cand[i] {
                    used[j] = true;
                    let adjacent = j > 0 && prev == Some(j - 1);
                    recurse(
                        cand,
                        reference,
                        i + 1,
                        used,
                        Some(j),
                        matches + 1,
                        chunks + if adjacent { 0 } else { 1 },
                        best,
                    );
                    used[j] = false;
                }
            }
        }
        let mut best = (0, usize::MAX);
        let mut used = vec![false; reference.len()];
        recurse(cand, reference, 0, &mut used, None, 0, 0, &mut best);
        if best.0 == 0 {
            (0, 0)
        } else {
            best
        }
    }

    pub fn meteor(cand: &[String], reference: &[String]) -> f64 {
        let (m, chunks) = best_alignment(cand, reference);
        if m == 0 || cand.is_empty() || reference.is_empty() {
            return 0.0;
        }
        let m = m as f64;
        let p = m / cand.len() as f64;
        let r = m / reference.len() as f64;
        let f = p * r / (0.9 * p + 0.1 * r);
        f * (1.0 - 0.5 * (chunks as f64 / m).powi(3))
    }
}

/// Frozen pairs exercising repeats, reorderings, near-misses, punctuation,
/// and length mismatches. Shared with the acceptance suite.
pub fn fixture_pairs() -> Vec<(&'static str, &'static str)> {
    vec![
        ("Adds an item to the list.", "Adds an item to the list."),
        ("Adds an item to the list.", "Adds the item to a list."),
        ("the cat sat", "the cat sat down"),
        ("the cat sat down", "the cat sat"),
        ("removes a node from the tree", "Remove the specified node from the tree."),
        ("a b c d", "a c d e"),
        ("a b c d e f g h", "h g f e d c b a"),
        ("x y z", "u v w"),
        ("returns the count of items", "Returns the number of items in the buffer."),
        ("checks whether the value is valid", "Checks if the given value is valid."),
        ("the the the the", "the the"),
        ("a a b b c c", "c c b b a a"),
        ("parse the configuration file and return its entries", "Parses a configuration file."),
        ("writes bytes", "Writes the given bytes to the underlying stream, flushing as needed."),
        ("sorts the list in place", "Sorts the list in place. Uses quicksort."),
        ("one", "one"),
        ("one two", "two one"),
        ("alpha beta gamma delta epsilon", "alpha beta gamma delta epsilon zeta"),
        ("reads json files from a zip archive", "Reads json files from a zip and creates a map."),
        ("creates a map of file names to contents", "Reads json files from a zip and creates a map."),
        ("validates the geometry object", "Validates the geometry and throws IllegalArgumentException."),
        ("converts a value into a string", "Converts a X into a Y."),
        ("merge two sorted runs", "Merges two sorted runs into one."),
        ("find the first matching entry", "Finds the first entry matching the predicate."),
        ("closes the stream", "Closes the stream."),
        ("opens a file for reading", "Opens the file, for reading only."),
        ("copy range of elements", "Copies the requested range of elements."),
        ("no overlap here at all", "completely different reference text."),
        ("counts, and counts, and counts", "counts and counts"),
        ("a b a b a b", "b a b a"),
        ("hash the key with salt", "Hashes the key using the configured salt value."),
        ("rebalance the tree after removal", "Remove the specified node from the tree."),
    ]
}

#[test]
fn identity_pairs_score_one_for_bleu_and_rouge() {
    let c = toks("adds an item to the list");
    assert_eq!(bleu_cn(&c, &c).unwrap(), 1.0);
    assert_eq!(bleu_dc(&c, &c).unwrap(), 1.0);
    assert_eq!(rouge_l(&c, &c), (1.0, 1.0));
}

#[test]
fn empty_candidate_scores_zero() {
    let empty = SummaryTokens::default();
    let r = toks("a reference");
    assert_eq!(bleu_cn(&empty, &r).unwrap(), 0.0);
    assert_eq!(bleu_dc(&empty, &r).unwrap(), 0.0);
    assert_eq!(rouge_l(&empty, &r), (0.0, 0.0));
    assert_eq!(meteor(&empty, &r), 0.0);
}

#[test]
fn empty_reference_is_a_scoring_error() {
    let c = toks("candidate");
    assert!(bleu_cn(&c, &SummaryTokens::default()).is_err());
    assert!(bleu_dc(&c, &SummaryTokens::default()).is_err());
}

#[test]
fn bleu_cn_hand_computed_example() {
    // cand "the cat sat" vs ref "the cat sat down":
    // p1 = 3/3, p2 = (2+1)/(2+1), p3 = (1+1)/(1+1), p4 = (0+1)/(0+1),
    // BP = exp(1 - 4/3); score = exp(-1/3).
    let got = bleu_cn(&toks("the cat sat"), &toks("the cat sat down")).unwrap();
    let expected = (1.0f64 - 4.0 / 3.0).exp();
    assert!((got - expected).abs() < 1e-9, "got {got}, want {expected}");
}

#[test]
fn bleu_dc_hand_computed_disjoint_pair() {
    // Disjoint 5-token pair: p_n = 1/(2^z * total_n) for z = 1..4,
    // totals 5,4,3,2; equal lengths so BP = 1.
    let got = bleu_dc(&toks("a b c d e"), &toks("f g h i j")).unwrap();
    let expected = ((1.0f64 / (2.0 * 5.0))
        * (1.0 / (4.0 * 4.0))
        * (1.0 / (8.0 * 3.0))
        * (1.0 / (16.0 * 2.0)))
    .powf(0.25);
    assert!((got - expected).abs() < 1e-9, "got {got}, want {expected}");
    assert!(got > 0.0);
}

#[test]
fn bleu_variants_agree_when_precisions_are_perfect() {
    // Candidate n-grams all present in the reference at every order, so
    // Laplace smoothing is a no-op ((m+1)/(t+1) = 1 = m/t) and no order
    // needs zero-match smoothing.
    for (c, r) in [
        ("a b c d e", "x a b c d e"),
        ("the cat sat down", "the cat sat down now"),
        ("one two three four five six", "one two three four five six"),
    ] {
        let cand = toks(c);
        let reference = toks(r);
        let cn = bleu_cn(&cand, &reference).unwrap();
        let dc = bleu_dc(&cand, &reference).unwrap();
        assert_eq!(cn, dc, "pair ({c}, {r})");
    }
}

#[test]
fn rouge_hand_computed_example() {
    let (p, r) = rouge_l(&toks("a b c d"), &toks("a c d e"));
    assert!((p - 0.75).abs() < 1e-12);
    assert!((r - 0.75).abs() < 1e-12);
}

#[test]
fn rouge_disjoint_is_zero() {
    assert_eq!(rouge_l(&toks("x y z"), &toks("u v w")), (0.0, 0.0));
}

#[test]
fn meteor_disjoint_is_zero() {
    assert_eq!(meteor(&toks("x y z"), &toks("u v w")), 0.0);
}

#[test]
fn meteor_identity_closed_form() {
    // n identical tokens: one chunk, so score = 1 - 0.5/n^3.
    for n in [1usize, 2, 5, 8] {
        let words: Vec<String> = (0..n).map(|i| format!("w{i}")).collect();
        let s = words.join(" ");
        let got = meteor(&toks(&s), &toks(&s));
        let expected = 1.0 - 0.5 / (n as f64).powi(3);
        assert!((got - expected).abs() < 1e-12, "n={n}: got {got}");
    }
}

#[test]
fn meteor_hand_computed_reordering() {
    // All four tokens match but every adjacency is broken: 4 chunks,
    // penalty = 0.5, score = 0.5.
    let got = meteor(&toks("the quick brown fox"), &toks("the brown quick fox"));
    assert!((got - 0.5).abs() < 1e-12, "got {got}");
}

#[test]
fn meteor_hand_computed_near_miss() {
    // "a b c d" vs "a b x d": m = 3, chunks = 2 (ab | d), P = R = 3/4,
    // F = 3/4, penalty = 0.5 * (2/3)^3 = 4/27.
    let got = meteor(&toks("a b c d"), &toks("a b x d"));
    let expected = 0.75 * (1.0 - 4.0 / 27.0);
    assert!((got - expected).abs() < 1e-12, "got {got}, want {expected}");
}

#[test]
fn meteor_prefers_fewer_chunks_among_max_alignments() {
    // cand "a b a", ref "a b a": the aligned identity (1 chunk) must win
    // over crossings that also reach 3 matches.
    let got = meteor(&toks("a b a"), &toks("a b a"));
    let expected = 1.0 - 0.5 / 27.0;
    assert!((got - expected).abs() < 1e-12);
}

#[test]
fn all_metrics_match_oracles_on_fixture_pairs() {
    for (c, r) in fixture_pairs() {
        let cand = toks(c);
        let reference = toks(r);
        let (ct, rt) = (cand.tokens.clone(), reference.tokens.clone());

        let got = bleu_cn(&cand, &reference).unwrap();
        let want = oracle::bleu_cn(&ct, &rt);
        assert!((got - want).abs() < 1e-9, "bleu_cn ({c}, {r}): {got} vs {want}");

        let got = bleu_dc(&cand, &reference).unwrap();
        let want = oracle::bleu_dc(&ct, &rt);
        assert!((got - want).abs() < 1e-9, "bleu_dc ({c}, {r}): {got} vs {want}");

        let (gp, gr) = rouge_l(&cand, &reference);
        let (wp, wr) = oracle::rouge_l(&ct, &rt);
        assert!((gp - wp).abs() < 1e-9 && (gr - wr).abs() < 1e-9, "rouge ({c}, {r})");

        let got = meteor(&cand, &reference);
        let want = oracle::meteor(&ct, &rt);
        assert!((got - want).abs() < 1e-9, "meteor ({c}, {r}): {got} vs {want}");
    }
}

#[test]
fn normalize_lowercases_and_splits_punctuation() {
    assert_eq!(
        toks("Adds an item.").tokens,
        ["adds", "an", "item", "."]
    );
    assert_eq!(toks("X-to-Y!").tokens, ["x", "-", "to", "-", "y", "!"]);
    assert!(toks("   ").tokens.is_empty());
    assert!(toks("").tokens.is_empty());
}

#[test]
fn score_record_identity_pair() {
    let gen = GenerationRecord {
        method_id: "m1".into(),
        strategy: PromptStrategy::Simple,
        masked: false,
        model_name: "mock".into(),
        raw_output: "Adds an item to the list.".into(),
        candidate_summary: "Adds an item to the list.".into(),
        stage1_output: String::new(),
        latency_ms: 0,
        attempt_count: 1,
        status: RunStatus::Ok,
    };
    let embedder = HashEmbedder::default();
    let providers = ScoreProviders {
        embedder: Some(&embedder),
        scorer: None,
    };
    let mut warnings = ScoreWarnings::default();
    let v = score_record(&gen, "Adds an item to the list.", &providers, &mut warnings).unwrap();
    assert_eq!(v.bleu, 1.0);
    assert_eq!(v.bleu_dc, 1.0);
    assert_eq!((v.rouge_prec, v.rouge_rec), (1.0, 1.0));
    // 7 tokens after punctuation split: meteor = 1 - 0.5/343.
    assert!((v.meteor - (1.0 - 0.5 / 343.0)).abs() < 1e-12);
    assert!((v.sent_sim.unwrap() - 1.0).abs() < 1e-6);
    assert!(v.bert_score.is_none());
    assert!(v.bleu_rt.is_none());
}

#[test]
fn score_record_rejects_failed_records() {
    let gen = GenerationRecord {
        method_id: "m1".into(),
        strategy: PromptStrategy::Simple,
        masked: false,
        model_name: "mock".into(),
        raw_output: String::new(),
        candidate_summary: String::new(),
        stage1_output: String::new(),
        latency_ms: 0,
        attempt_count: 3,
        status: RunStatus::Failed,
    };
    let mut warnings = ScoreWarnings::default();
    assert!(score_record(&gen, "truth", &ScoreProviders::default(), &mut warnings).is_err());
    assert_eq!(warnings.skipped_failed, 1);
}

#[test]
fn metric_vector_serialization_omits_absent_fields() {
    let v = MetricVector {
        bert_score: None,
        bleu_dc: 0.25,
        bleu: 0.5,
        bleu_rt: None,
        meteor: 0.75,
        rouge_prec: 0.1,
        rouge_rec: 0.2,
        sent_sim: None,
    };
    let json = serde_json::to_string(&v).unwrap();
    assert_eq!(
        json,
        "{\"bleu_dc\":0.25,\"bleu\":0.5,\"meteor\":0.75,\"rouge_prec\":0.1,\"rouge_rec\":0.2}"
    );
    let with = MetricVector {
        bert_score: Some(0.5),
        bleu_rt: Some(0.4),
        sent_sim: Some(-0.1),
        ..v
    };
    let json = serde_json::to_string(&with).unwrap();
    assert!(json.contains("\"bleu-rt\":0.4"));
    let back: MetricVector = serde_json::from_str(&json).unwrap();
    assert_eq!(back, with);
}

#[test]
fn external_score_stores_stub_values_verbatim() {
    let (addr, server) = crate::testutil::serve_responses(vec![(
        200,
        "{\"bert_score\":0.5,\"bleu_rt\":0.5}".to_string(),
    )]);
    let scorer = ExternalScorer {
        url: format!("http://{addr}/score"),
        auth_token: None,
        timeout: std::time::Duration::from_secs(2),
    };
    let mut warnings = ScoreWarnings::default();
    let scores = external_score("cand", "ref", &scorer, &mut warnings);
    assert_eq!(scores.bert_score, Some(0.5));
    assert_eq!(scores.bleu_rt, Some(0.5));
    assert_eq!(warnings.scorer_failures, 0);
    server.join().unwrap();
}

#[test]
fn external_score_malformed_response_counts_warning() {
    let (addr, server) =
        crate::testutil::serve_responses(vec![(200, "{\"oops\":1}".to_string())]);
    let scorer = ExternalScorer {
        url: format!("http://{addr}/score"),
        auth_token: None,
        timeout: std::time::Duration::from_secs(2),
    };
    let mut warnings = ScoreWarnings::default();
    let scores = external_score("cand", "ref", &scorer, &mut warnings);
    assert!(scores.bert_score.is_none() && scores.bleu_rt.is_none());
    assert_eq!(warnings.scorer_failures, 1);
    server.join().unwrap();
}

#[test]
fn external_score_clamps_out_of_range_values() {
    let (addr, server) = crate::testutil::serve_responses(vec![(
        200,
        "{\"bert_score\":1.5,\"bleu_rt\":-0.2}".to_string(),
    )]);
    let scorer = ExternalScorer {
        url: format!("http://{addr}/score"),
        auth_token: None,
        timeout: std::time::Duration::from_secs(2),
    };
    let mut warnings = ScoreWarnings::default();
    let scores = external_score("cand", "ref", &scorer, &mut warnings);
    assert_eq!(scores.bert_score, Some(1.0));
    assert_eq!(scores.bleu_rt, Some(0.0));
    assert_eq!(warnings.clamped_values, 2);
    server.join().unwrap();
}

#[test]
fn sentence_similarity_stub_cases() {
    struct FixedEmbedder;
    impl Embedder for FixedEmbedder {
        fn embed(&self, text: &str) -> crate::error::Result<EmbeddingVector> {
            let values = match text {
                "east" => vec![1.0, 0.0],
                "north" => vec![0.0, 1.0],
                other => vec![other.len() as f64, 1.0],
            };
            Ok(EmbeddingVector { values })
        }
        fn model_name(&self) -> &str {
            "fixed"
        }
    }
    assert_eq!(sentence_similarity("east", "north", &FixedEmbedder).unwrap(), 0.0);
    let same = sentence_similarity("same text", "same text", &FixedEmbedder).unwrap();
    assert!((same - 1.0).abs() < 1e-6);
}

mod properties {
    use super::*;
    use proptest::prelude::*;

    fn arb_sentence() -> impl Strategy<Value = String> {
        proptest::collection::vec(
            proptest::sample::select(vec![
                "adds", "removes", "the", "a", "item", "list", "tree", "node", "value", "Stream",
            ]),
            0..10,
        )
        .prop_map(|words| words.join(" "))
    }

    // Short enough for the exhaustive alignment enumerator.
    fn arb_short_sentence() -> impl Strategy<Value = String> {
        proptest::collection::vec(
            proptest::sample::select(vec!["the", "a", "item", "list", "node"]),
            0..6,
        )
        .prop_map(|words| words.join(" "))
    }

    proptest! {
        #[test]
        fn rouge_precision_recall_swap_symmetry(a in arb_sentence(), b in arb_sentence()) {
            let (ta, tb) = (toks(&a), toks(&b));
            let forward = rouge_l(&ta, &tb);
            let backward = rouge_l(&tb, &ta);
            prop_assert_eq!(forward.0, backward.1);
            prop_assert_eq!(forward.1, backward.0);
        }

        #[test]
        fn ngram_metrics_are_case_invariant(a in arb_sentence(), b in arb_sentence()) {
            let (ta, tb) = (toks(&a), toks(&b));
            let (ua, ub) = (toks(&a.to_uppercase()), toks(&b.to_uppercase()));
            if !tb.is_empty() {
                prop_assert_eq!(bleu_cn(&ta, &tb).unwrap(), bleu_cn(&ua, &ub).unwrap());
                prop_assert_eq!(bleu_dc(&ta, &tb).unwrap(), bleu_dc(&ua, &ub).unwrap());
            }
            prop_assert_eq!(rouge_l(&ta, &tb), rouge_l(&ua, &ub));
            prop_assert_eq!(meteor(&ta, &tb), meteor(&ua, &ub));
        }

        #[test]
        fn lcs_grows_when_appending_shared_token(a in arb_sentence(), b in arb_sentence()) {
            let (mut ta, mut tb) = (toks(&a).tokens, toks(&b).tokens);
            let before = lcs_length(&ta, &tb);
            ta.push("shared".into());
            tb.push("shared".into());
            let after = lcs_length(&ta, &tb);
            prop_assert!(after > before);
        }

        #[test]
        fn metrics_stay_in_range(a in arb_sentence(), b in arb_sentence()) {
            let (ta, tb) = (toks(&a), toks(&b));
            if !tb.is_empty() {
                let cn = bleu_cn(&ta, &tb).unwrap();
                let dc = bleu_dc(&ta, &tb).unwrap();
                prop_assert!((0.0..=1.0).contains(&cn));
                prop_assert!((0.0..=1.0).contains(&dc));
            }
            let (p, r) = rouge_l(&ta, &tb);
            prop_assert!((0.0..=1.0).contains(&p) && (0.0..=1.0).contains(&r));
            let m = meteor(&ta, &tb);
            prop_assert!((0.0..=1.0).contains(&m));
        }

        #[test]
        fn meteor_matches_oracle_on_random_pairs(a in arb_short_sentence(), b in arb_short_sentence()) {
            let (ta, tb) = (toks(&a), toks(&b));
            prop_assert!((meteor(&ta, &tb) - oracle::meteor(&ta.tokens, &tb.tokens)).abs() < 1e-9);
        }
    }
}
