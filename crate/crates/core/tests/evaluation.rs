use std::collections::BTreeMap;

use aec_core::eval::{
    dataset_stats, gold_as_predictions, load_corpus, sample_indices, sample_split, score, Document, GoldArgument,
    GoldEvent, Span,
};
use aec_core::lang::{EventObject, Value};
use proptest::prelude::*;

const WORDS: [&str; 7] = ["hit", "bank", "data", "breach", "the", "Hit", "ransom"];

fn span(doc_text: &str, tokens: &[(usize, usize)], first: usize, len: usize) -> Span {
    let start = tokens[first].0;
    let end = tokens[first + len - 1].1;
    Span {
        text: doc_text.chars().skip(start).take(end - start).collect(),
        start,
        end,
    }
}

fn make_doc(id: &str, words: &[&str]) -> Document {
    let text = words.join(" ");
    let mut tokens = Vec::new();
    let mut pos = 0;
    for w in words {
        let n = w.chars().count();
        tokens.push((pos, pos + n));
        pos += n + 1;
    }
    Document {
        id: id.to_string(),
        text,
        tokens,
        gold_events: Vec::new(),
    }
}

/// Char offsets where `needle` occurs in `text`.
fn occurrences(text: &str, needle: &str) -> Vec<usize> {
    let chars: Vec<char> = text.chars().collect();
    let pat: Vec<char> = needle.chars().collect();
    if pat.is_empty() || pat.len() > chars.len() {
        return Vec::new();
    }
    (0..=chars.len() - pat.len())
        .filter(|&i| chars[i..i + pat.len()] == pat[..])
        .collect()
}

fn located_at(text: &str, needle: &str, s: &Span) -> bool {
    needle.chars().count() == s.end - s.start && occurrences(text, needle).contains(&s.start)
}

/// Size of a maximum matching by trying every assignment.
fn brute_force_matching(compat: &[Vec<bool>]) -> usize {
    fn go(i: usize, compat: &[Vec<bool>], used: &mut Vec<bool>) -> usize {
        if i == compat.len() {
            return 0;
        }
        let mut best = go(i + 1, compat, used);
        for j in 0..used.len() {
            if compat[i][j] && !used[j] {
                used[j] = true;
                best = best.max(1 + go(i + 1, compat, used));
                used[j] = false;
            }
        }
        best
    }
    let golds = compat.first().map_or(0, Vec::len);
    go(0, compat, &mut vec![false; golds])
}

fn doc_strategy() -> impl Strategy<Value = Document> {
    prop::collection::vec(prop::sample::select(WORDS.to_vec()), 2..10)
        .prop_flat_map(|words| {
            let n = words.len();
            let event = (
                0..n,
                1usize..=2,
                prop::sample::select(vec!["A", "B"]),
                prop::collection::vec((0..n, prop::sample::select(vec!["r1", "r2"])), 0..3),
            );
            (Just(words), prop::collection::vec(event, 0..4))
        })
        .prop_map(|(words, events)| {
            let mut doc = make_doc("d", &words);
            let n = words.len();
            for (first, len, ty, args) in events {
                let len = len.min(n - first);
                let trigger = span(&doc.text, &doc.tokens, first, len);
                let arguments = args
                    .into_iter()
                    .map(|(t, role)| GoldArgument {
                        role: role.to_string(),
                        span: span(&doc.text, &doc.tokens, t, 1),
                    })
                    .collect();
                doc.gold_events.push(GoldEvent {
                    event_type: ty.to_string(),
                    trigger,
                    arguments,
                });
            }
            doc
        })
}

fn predictions_strategy(doc: &Document) -> impl Strategy<Value = Vec<EventObject>> {
    let n = doc.tokens.len();
    let text = doc.text.clone();
    let tokens = doc.tokens.clone();
    let piece = move |first: usize, len: usize| -> String {
        let len = len.min(n - first);
        span(&text, &tokens, first, len).text
    };
    let piece2 = piece.clone();
    prop::collection::vec(
        (
            0..n,
            1usize..=2,
            prop::bool::weighted(0.15),
            prop::sample::select(vec!["A", "B"]),
            prop::collection::vec((0..n, prop::sample::select(vec!["r1", "r2"])), 0..3),
        ),
        0..5,
    )
    .prop_map(move |raw| {
        raw.into_iter()
            .map(|(first, len, absent, ty, args)| {
                let trigger = if absent {
                    "absent".to_string()
                } else {
                    piece(first, len)
                };
                let mut e = EventObject::new(ty, trigger);
                for (t, role) in args {
                    e.arguments
                        .entry(role.to_string())
                        .or_default()
                        .push(Value::Str(piece2(t, 1)));
                }
                e
            })
            .collect()
    })
}

fn instance() -> impl Strategy<Value = (Document, Vec<EventObject>)> {
    doc_strategy().prop_flat_map(|doc| {
        let preds = predictions_strategy(&doc);
        (Just(doc), preds)
    })
}

#[test]
fn hand_computed_two_document_case() {
    let text1 = "Hackers demanded a million dollar ransom after infiltrating the bank's servers on Friday.";
    let text2 = "Intruders began infiltrating the network.";
    let mut d1 = make_doc("doc1", &text1.split(' ').collect::<Vec<_>>());
    d1.gold_events.push(GoldEvent {
        event_type: "Ransom".into(),
        trigger: Span {
            text: "demanded".into(),
            start: 8,
            end: 16,
        },
        arguments: vec![],
    });
    let mut d2 = make_doc("doc2", &text2.split(' ').collect::<Vec<_>>());
    d2.gold_events.push(GoldEvent {
        event_type: "Databreach".into(),
        trigger: Span {
            text: "infiltrating".into(),
            start: 16,
            end: 28,
        },
        arguments: vec![],
    });
    let mut preds = BTreeMap::new();
    preds.insert(
        "doc1".to_string(),
        vec![
            EventObject::new("Ransom", "demanded"),
            EventObject::new("Databreach", "servers"),
        ],
    );
    let report = score(&preds, &[d1, d2]).unwrap();
    for s in [report.ti, report.tc] {
        assert!((s.precision - 0.5).abs() < 1e-12);
        assert!((s.recall - 0.5).abs() < 1e-12);
        assert!((s.f1 - 0.5).abs() < 1e-9);
    }
}

#[test]
fn argument_free_corpus_scores_triggers_only() {
    let src = r#"{"id": "a", "text": "riots erupted", "tokens": [[0,5],[6,13]], "events": [{"event_type": "Protest", "trigger": {"text": "erupted", "start": 6, "end": 13}}]}"#;
    let docs = load_corpus(src.as_bytes()).unwrap();
    let report = score(&gold_as_predictions(&docs), &docs).unwrap();
    assert_eq!(report.ti.f1, 1.0);
    assert_eq!(report.ai.num_gold, 0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn gold_scores_perfectly(docs in prop::collection::vec(doc_strategy(), 1..4)) {
        let docs: Vec<Document> = docs
            .into_iter()
            .enumerate()
            .map(|(i, mut d)| {
                d.id = format!("d{i}");
                d
            })
            .collect();
        let report = score(&gold_as_predictions(&docs), &docs).unwrap();
        for s in [report.ti, report.tc, report.ai, report.ac] {
            prop_assert_eq!((s.precision, s.recall, s.f1), (1.0, 1.0, 1.0));
        }
    }

    #[test]
    fn classification_never_beats_identification((doc, preds) in instance()) {
        let mut map = BTreeMap::new();
        map.insert(doc.id.clone(), preds);
        let r = score(&map, std::slice::from_ref(&doc)).unwrap();
        prop_assert!(r.tc.f1 <= r.ti.f1);
        prop_assert!(r.ac.f1 <= r.ai.f1);
        for s in [r.ti, r.tc, r.ai, r.ac] {
            prop_assert!((0.0..=1.0).contains(&s.precision));
            prop_assert!((0.0..=1.0).contains(&s.recall));
            prop_assert!((0.0..=1.0).contains(&s.f1));
        }
    }

    #[test]
    fn matching_is_maximum((doc, preds) in instance()) {
        let mut map = BTreeMap::new();
        map.insert(doc.id.clone(), preds.clone());
        let r = score(&map, std::slice::from_ref(&doc)).unwrap();

        let ti: Vec<Vec<bool>> = preds
            .iter()
            .map(|p| doc.gold_events.iter().map(|g| located_at(&doc.text, &p.trigger, &g.trigger)).collect())
            .collect();
        let tc: Vec<Vec<bool>> = preds
            .iter()
            .map(|p| {
                doc.gold_events
                    .iter()
                    .map(|g| g.event_type == p.event_type && located_at(&doc.text, &p.trigger, &g.trigger))
                    .collect()
            })
            .collect();
        prop_assert_eq!(r.ti.num_correct, brute_force_matching(&ti));
        prop_assert_eq!(r.tc.num_correct, brute_force_matching(&tc));

        let pred_args: Vec<(&str, &str, String)> = preds
            .iter()
            .flat_map(|p| {
                p.arguments
                    .iter()
                    .flat_map(move |(role, vs)| vs.iter().map(move |v| (p.event_type.as_str(), role.as_str(), v.as_text())))
            })
            .collect();
        let gold_args: Vec<(&str, &GoldArgument)> = doc
            .gold_events
            .iter()
            .flat_map(|g| g.arguments.iter().map(move |a| (g.event_type.as_str(), a)))
            .collect();
        if pred_args.len() <= 6 && gold_args.len() <= 6 {
            let ai: Vec<Vec<bool>> = pred_args
                .iter()
                .map(|(ty, _, v)| gold_args.iter().map(|(gt, a)| ty == gt && located_at(&doc.text, v, &a.span)).collect())
                .collect();
            let ac: Vec<Vec<bool>> = pred_args
                .iter()
                .map(|(ty, role, v)| {
                    gold_args
                        .iter()
                        .map(|(gt, a)| ty == gt && *role == a.role && located_at(&doc.text, v, &a.span))
                        .collect()
                })
                .collect();
            prop_assert_eq!(r.ai.num_correct, brute_force_matching(&ai));
            prop_assert_eq!(r.ac.num_correct, brute_force_matching(&ac));
        }
    }

    #[test]
    fn stats_match_recount(docs in prop::collection::vec(doc_strategy(), 0..10)) {
        let s = dataset_stats(&docs);
        let words: usize = docs.iter().map(|d| d.text.split_whitespace().count()).sum();
        let triggers: Vec<&Span> = docs.iter().flat_map(|d| d.gold_events.iter().map(|e| &e.trigger)).collect();
        let multi = triggers.iter().filter(|t| t.text.split_whitespace().count() > 1).count();
        prop_assert_eq!(s.documents, docs.len());
        prop_assert_eq!(s.event_mentions, triggers.len());
        let avg = if docs.is_empty() { 0.0 } else { words as f64 / docs.len() as f64 };
        prop_assert_eq!(s.avg_doc_length, avg);
        let pct = if triggers.is_empty() { 0.0 } else { 100.0 * multi as f64 / triggers.len() as f64 };
        prop_assert_eq!(s.multi_token_trigger_pct, pct);
    }

    #[test]
    fn single_token_triggers_give_zero_percent(docs in prop::collection::vec(doc_strategy(), 1..6)) {
        let docs: Vec<Document> = docs
            .into_iter()
            .map(|mut d| {
                for e in &mut d.gold_events {
                    let first = d.tokens.iter().position(|t| t.0 == e.trigger.start).unwrap();
                    e.trigger = span(&d.text, &d.tokens, first, 1);
                }
                d
            })
            .collect();
        prop_assert_eq!(dataset_stats(&docs).multi_token_trigger_pct, 0.0);
    }

    #[test]
    fn samples_are_sorted_distinct_and_in_range(len in 0usize..50, n in 0usize..50, seed in any::<u64>()) {
        match sample_indices(len, n, seed) {
            Ok(idx) => {
                prop_assert!(n <= len);
                prop_assert_eq!(idx.len(), n);
                prop_assert!(idx.windows(2).all(|w| w[0] < w[1]));
                prop_assert!(idx.iter().all(|&i| i < len));
                prop_assert_eq!(idx, sample_indices(len, n, seed).unwrap());
            }
            Err(e) => {
                prop_assert!(n > len);
                prop_assert_eq!((e.requested, e.available), (n, len));
            }
        }
    }
}

#[test]
fn singleton_two_token_trigger_is_fully_multi_word() {
    let mut d = make_doc("a", &["data", "breach"]);
    d.gold_events.push(GoldEvent {
        event_type: "Databreach".into(),
        trigger: span(&d.text.clone(), &d.tokens.clone(), 0, 2),
        arguments: vec![],
    });
    assert_eq!(dataset_stats(&[d]).multi_token_trigger_pct, 100.0);
}

#[test]
fn full_sample_keeps_order() {
    let items = ["a", "b", "c", "d", "e"];
    assert_eq!(sample_split(&items, 5, 99).unwrap(), items);
}

#[test]
fn single_draws_are_uniform() {
    let items = [0usize, 1, 2, 3];
    let mut counts = [0usize; 4];
    for seed in 0..10_000u64 {
        counts[sample_split(&items, 1, seed).unwrap()[0]] += 1;
    }
    for c in counts {
        let f = c as f64 / 10_000.0;
        assert!((f - 0.25).abs() <= 0.02, "{counts:?}");
    }
}
