use std::collections::HashSet;

use proptest::prelude::*;

use chartthinker::chart::{parse_chart_spec, render_linearized_table, render_token_stream, ChartSpec, NoiseConfig};
use chartthinker::cot::{run_pipeline, StagePlan};
use chartthinker::dataset::{
    generate_qa_pairs, generate_synthetic_corpus, library_entries, split_dataset, Split, DEFAULT_RATIOS,
};
use chartthinker::embedding::{normalize, FeatureVector, HashingEmbedder};
use chartthinker::evaluation::{bleu, s_norm, s_norm_aggregate, CiderIdf, MetricColumn, NGramLM, Orientation};
use chartthinker::generation::{GenerationParams, Generator, TemplateGenerator};
use chartthinker::parsing::{fuse_extractions, ParsedChart};
use chartthinker::prompt::example_line;
use chartthinker::retrieval::{build_library, cosine_similarity, rank_weights, ContextExample, ContextLibrary, Stage};
use chartthinker::text::tokenize;

fn one_spec(seed: u64, pick: usize) -> ChartSpec {
    let (specs, _) = generate_synthetic_corpus(4, seed);
    specs[pick % 4].clone()
}

fn feature(values: &[i8]) -> FeatureVector {
    let v: Vec<f64> = values.iter().map(|&x| x as f64).collect();
    let fv = FeatureVector::new(v).unwrap();
    if fv.is_zero() {
        let mut e = vec![0.0; values.len()];
        e[0] = 1.0;
        FeatureVector::new(e).unwrap()
    } else {
        normalize(&fv).unwrap()
    }
}

fn library_strategy() -> impl Strategy<Value = Vec<(usize, Vec<i8>)>> {
    prop::collection::vec((0usize..4, prop::collection::vec(-2i8..=2, 6)), 1..64)
}

fn make_library(raw: &[(usize, Vec<i8>)], order: &[usize]) -> ContextLibrary {
    let examples = order
        .iter()
        .map(|&i| ContextExample {
            id: format!("ex-{i:03}"),
            stage: Stage::ALL[raw[i].0],
            feature: feature(&raw[i].1),
            example_text: format!("example {i}"),
            chart_ref: None,
        })
        .collect();
    ContextLibrary::new(6, examples).unwrap()
}

fn words() -> impl Strategy<Value = String> {
    prop::collection::vec(
        prop::sample::select(vec!["sales", "rose", "fell", "in", "2020", "12", "the", "chart", "."]),
        1..14,
    )
    .prop_map(|w| w.join(" "))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn chart_spec_round_trips(seed in any::<u64>(), pick in 0usize..4) {
        let spec = one_spec(seed, pick);
        let back = parse_chart_spec(spec.to_json().as_bytes()).unwrap();
        prop_assert_eq!(back, spec);
    }

    #[test]
    fn renderers_are_pure(seed in any::<u64>(), pick in 0usize..4, r in any::<u64>(), p in 0.0f64..1.0) {
        let spec = one_spec(seed, pick);
        let noise = NoiseConfig::new(p, 0.2, p / 2.0).unwrap();
        prop_assert_eq!(render_token_stream(&spec, &noise, r), render_token_stream(&spec, &noise, r));
        prop_assert_eq!(render_linearized_table(&spec, &noise, r), render_linearized_table(&spec, &noise, r));
        prop_assert!(render_linearized_table(&spec, &noise, r).is_well_formed());
        prop_assert!(render_token_stream(&spec, &noise, r).tokens.iter().all(|t| t.bbox.is_valid()));
    }

    #[test]
    fn zero_noise_fusion_recovers_data(seed in any::<u64>(), pick in 0usize..4, r in any::<u64>()) {
        let spec = one_spec(seed, pick);
        let parsed = fuse_extractions(
            &render_token_stream(&spec, &NoiseConfig::NONE, r),
            &render_linearized_table(&spec, &NoiseConfig::NONE, r),
        );
        let mut got: Vec<(String, String, f64)> = parsed.pairs.iter().map(|p| (p.label.clone(), p.x.clone(), p.value)).collect();
        let mut want: Vec<(String, String, f64)> = spec
            .series
            .iter()
            .flat_map(|s| s.points.iter().map(move |p| (s.name.clone(), p.x.label(), p.y)))
            .collect();
        got.sort_by(|a, b| (&a.0, &a.1).cmp(&(&b.0, &b.1)));
        want.sort_by(|a, b| (&a.0, &a.1).cmp(&(&b.0, &b.1)));
        prop_assert_eq!(got, want);
    }

    #[test]
    fn fused_values_come_from_an_input(seed in any::<u64>(), pick in 0usize..4, r in any::<u64>(), p in 0.0f64..1.0) {
        let spec = one_spec(seed, pick);
        let noise = NoiseConfig::new(p, 0.3, 0.2).unwrap();
        let tokens = render_token_stream(&spec, &noise, r);
        let table = render_linearized_table(&spec, &noise, r);
        let parsed = fuse_extractions(&tokens, &table);
        let known: Vec<f64> = tokens
            .tokens
            .iter()
            .filter_map(|t| t.value())
            .chain(table.rows.iter().flat_map(|row| row.cells.iter().flatten().copied()))
            .collect();
        for pair in &parsed.pairs {
            prop_assert!(pair.value.is_finite());
            prop_assert!(known.contains(&pair.value), "{} not in either input", pair.value);
        }
        let legends: HashSet<&String> = parsed.legends.iter().collect();
        prop_assert!(parsed.other_text.iter().all(|t| !legends.contains(t)));
        prop_assert_eq!(parsed.clone(), fuse_extractions(&tokens, &table));
    }

    #[test]
    fn cosine_identity_symmetry_and_scale(a in prop::collection::vec(-5i8..=5, 6), b in prop::collection::vec(-5i8..=5, 6), k in 0.01f64..100.0) {
        let (fa, fb) = (feature(&a), feature(&b));
        prop_assert!((cosine_similarity(&fa, &fa).unwrap() - 1.0).abs() < 1e-12);
        let ab = cosine_similarity(&fa, &fb).unwrap();
        prop_assert!((ab - cosine_similarity(&fb, &fa).unwrap()).abs() < 1e-12);
        prop_assert!((ab - cosine_similarity(&fa.scaled(k), &fb).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn normalize_is_idempotent(v in prop::collection::vec(-1e3f64..1e3, 1..16)) {
        let fv = FeatureVector::new(v).unwrap();
        prop_assume!(!fv.is_zero());
        let once = normalize(&fv).unwrap();
        let twice = normalize(&once).unwrap();
        prop_assert!((once.norm() - 1.0).abs() < 1e-9);
        for (x, y) in once.values().iter().zip(twice.values()) {
            prop_assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn top_k_is_prefix_of_full_sort(raw in library_strategy(), q in prop::collection::vec(-2i8..=2, 6), k in 0usize..70, stage in 0usize..4) {
        let order: Vec<usize> = (0..raw.len()).collect();
        let lib = make_library(&raw, &order);
        let stage = Stage::ALL[stage];
        let query = feature(&q);
        let got = lib.retrieve_top_k(stage, &query, k).unwrap();

        let mut oracle: Vec<(f64, String)> = lib
            .stage_examples(stage)
            .map(|e| (query.dot(&e.feature), e.id.clone()))
            .collect();
        oracle.sort_by(|a, b| b.0.total_cmp(&a.0).then_with(|| a.1.cmp(&b.1)));
        oracle.truncate(k);
        prop_assert_eq!(got.len(), oracle.len());
        for (i, (hit, (sim, id))) in got.iter().zip(&oracle).enumerate() {
            prop_assert_eq!(&hit.example.id, id);
            prop_assert!((hit.similarity - sim).abs() < 1e-9);
            prop_assert_eq!(hit.rank, i + 1);
            prop_assert!((hit.weight * hit.rank as f64 - 1.0).abs() < 1e-12);
        }

        let mut reversed = order.clone();
        reversed.reverse();
        let shuffled = make_library(&raw, &reversed);
        let again = shuffled.retrieve_top_k(stage, &query, k).unwrap();
        let ids = |v: &[chartthinker::retrieval::RankedExample]| v.iter().map(|h| h.example.id.clone()).collect::<Vec<_>>();
        prop_assert_eq!(ids(&got), ids(&again));
    }

    #[test]
    fn rank_weights_sum_to_harmonic(n in 0usize..200) {
        let w = rank_weights(n);
        prop_assert_eq!(w.len(), n);
        prop_assert!(w.windows(2).all(|p| p[0] > p[1]));
        let h: f64 = (1..=n).map(|i| 1.0 / i as f64).sum();
        prop_assert!((w.iter().sum::<f64>() - h).abs() < 1e-9);
    }

    #[test]
    fn s_norm_ignores_positive_affine_maps(
        scores in prop::collection::vec(-100.0f64..100.0, 2..8),
        other in prop::collection::vec(-100.0f64..100.0, 8),
        a in 0.01f64..50.0,
        b in -100.0f64..100.0,
        lower in any::<bool>(),
    ) {
        let n = scores.len();
        let lo = scores.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        prop_assume!(hi - lo > 1e-3);
        let other = other[..n].to_vec();
        let olo = other.iter().cloned().fold(f64::INFINITY, f64::min);
        let ohi = other.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        prop_assume!(ohi - olo > 1e-3);
        let orientation = if lower { Orientation::LowerBetter } else { Orientation::HigherBetter };
        let names: Vec<String> = (0..n).map(|i| format!("s{i}")).collect();
        let col = |s: Vec<f64>, o| MetricColumn { name: "m".into(), system_names: names.clone(), scores: s, orientation: o };
        let base = s_norm(&col(scores.clone(), orientation)).unwrap();
        let mapped = s_norm(&col(scores.iter().map(|x| a * x + b).collect(), orientation)).unwrap();
        for (x, y) in base.iter().zip(&mapped) {
            prop_assert!((0.0..=1.0).contains(x));
            prop_assert!((x - y).abs() < 1e-9);
        }
        let second = col(other, Orientation::HigherBetter);
        let agg = s_norm_aggregate(&[col(scores.clone(), orientation), second.clone()]).unwrap();
        let agg2 = s_norm_aggregate(&[col(scores.iter().map(|x| a * x + b).collect(), orientation), second]).unwrap();
        let argmax = |v: &[f64]| v.iter().enumerate().max_by(|x, y| x.1.total_cmp(y.1)).map(|(i, _)| i);
        let gap = {
            let mut s = agg.clone();
            s.sort_by(|x, y| y.total_cmp(x));
            s[0] - s[1]
        };
        prop_assume!(gap > 1e-6);
        prop_assert_eq!(argmax(&agg), argmax(&agg2));
    }

    #[test]
    fn bleu_is_order_free(pairs in prop::collection::vec((words(), words()), 1..8), rot in 0usize..8) {
        let (h, r): (Vec<String>, Vec<String>) = pairs.iter().cloned().unzip();
        let mut rotated = pairs.clone();
        rotated.rotate_left(rot % pairs.len());
        let (h2, r2): (Vec<String>, Vec<String>) = rotated.into_iter().unzip();
        let a = bleu(&h, &r, 4).unwrap();
        let b = bleu(&h2, &r2, 4).unwrap();
        prop_assert!((0.0..=100.0).contains(&a));
        prop_assert!((a - b).abs() < 1e-9);
    }

    #[test]
    fn cider_bounded_by_reference_self_score(refs in prop::collection::vec(words(), 2..6), hyp in words()) {
        let corpus: Vec<Vec<String>> = refs.iter().map(|r| vec![r.clone()]).collect();
        let idf = CiderIdf::from_references(&corpus);
        let own = idf.score(&refs[0], &corpus[0]);
        let other = idf.score(&hyp, &corpus[0]);
        prop_assert!(other >= 0.0);
        prop_assert!(other <= own + 1e-9, "{} > {}", other, own);
    }

    #[test]
    fn lm_distributions_sum_to_one(corpus in prop::collection::vec(words(), 1..6), ctx in prop::collection::vec(0usize..20, 0..3), order in 1usize..4) {
        let lm = NGramLM::train(&corpus, order, 1.0).unwrap();
        let vocab: Vec<String> = lm.vocabulary().map(str::to_string).collect();
        let mut pool = vec!["<s>".to_string(), "zzz".to_string()];
        pool.extend(vocab.iter().cloned());
        let context: Vec<String> = ctx.iter().map(|i| pool[i % pool.len()].clone()).collect();
        let total: f64 = vocab.iter().map(|w| lm.prob(&context, w)).sum();
        prop_assert!((total - 1.0).abs() < 1e-9, "sum {}", total);
    }

    #[test]
    fn splits_partition_manifest(n in 1usize..60, seed in any::<u64>()) {
        let (_, manifest) = generate_synthetic_corpus(n, 3);
        let split = split_dataset(&manifest, &DEFAULT_RATIOS, seed).unwrap();
        prop_assert_eq!(split.entries.len(), n);
        let mut paths: Vec<&str> = split.entries.iter().map(|e| e.chart_path.as_str()).collect();
        paths.sort_unstable();
        paths.dedup();
        prop_assert_eq!(paths.len(), n);
        let sizes = split.split_sizes();
        for (size, r) in sizes.iter().zip(DEFAULT_RATIOS) {
            prop_assert!((*size as f64 - r * n as f64).abs() <= 1.0);
        }
        prop_assert!(split.entries.iter().all(|e| matches!(e.split, Some(Split::Train | Split::Val | Split::Test))));
    }

    #[test]
    fn qa_answers_are_grounded(seed in any::<u64>(), n in 1usize..6) {
        let (_, manifest) = generate_synthetic_corpus(4, seed);
        let g = TemplateGenerator::new();
        for entry in &manifest.entries {
            let Ok(pairs) = generate_qa_pairs(&entry.summary, &g, n, &GenerationParams::default()) else { continue };
            prop_assert!(pairs.len() <= n);
            for qa in pairs {
                let numeric = qa.answer.parse::<f64>().ok().is_some_and(|v| {
                    tokenize(&entry.summary).iter().any(|t| t.parse::<f64>().ok() == Some(v))
                });
                prop_assert!(entry.summary.contains(&qa.answer) || numeric, "{:?}", qa);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn pipeline_prompts_follow_rank_order(seed in any::<u64>(), pick in 0usize..4, k in 1usize..6) {
        let (lib_specs, _) = generate_synthetic_corpus(16, 77);
        let lib = build_library(&library_entries(&lib_specs), &HashingEmbedder::default()).unwrap();
        let spec = one_spec(seed, pick);
        let parsed = ParsedChart::from_spec(&spec).with_chart_type(spec.chart_type);
        let plan = StagePlan::default().with_k(k);
        let g = TemplateGenerator::new();
        let result = run_pipeline(&parsed, &lib, &plan, &g, seed).unwrap();
        prop_assert_eq!(&result, &run_pipeline(&parsed, &lib, &plan, &g, seed).unwrap());
        prop_assert!(!result.summary.is_empty());

        let stages: Vec<Stage> = result.thoughts.iter().map(|t| t.stage).collect();
        prop_assert_eq!(stages, Stage::ALL.to_vec());
        for t in &result.thoughts {
            prop_assert!(t.retrieved_ids.len() <= k);
            let stage_ids: HashSet<String> = lib.stage_examples(t.stage).map(|e| e.id.clone()).collect();
            prop_assert!(t.retrieved_ids.iter().all(|id| stage_ids.contains(id)));
            let mut last = None;
            for (i, id) in t.retrieved_ids.iter().enumerate() {
                let text = &lib.examples().iter().find(|e| &e.id == id).unwrap().example_text;
                let line = example_line(i + 1, text);
                let at = t.prompt.find(&line).expect("example line in prompt");
                prop_assert!(last.is_none_or(|l| at > l));
                last = Some(at);
            }
            let out = g.generate(&t.prompt, &GenerationParams::default()).unwrap();
            let trace = out.trace.unwrap();
            prop_assert_eq!(trace.tokens.len(), trace.stepwise_logprobs.len());
            prop_assert!((trace.total_logprob - trace.stepwise_logprobs.iter().sum::<f64>()).abs() < 1e-9);
        }
    }
}
