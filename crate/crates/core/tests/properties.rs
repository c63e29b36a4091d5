mod support;

use std::collections::BTreeSet;

use glyphctl_core::bench::{
    build_buckets, make_prompts, sample_words, BenchKind, Bucket, FontPreset,
};
use glyphctl_core::curation::{build_manifest, filter_record, Decision, OcrBox, OcrRecord};
use glyphctl_core::geometry::Point;
use glyphctl_core::instruction::{from_ocr_record, parse_instructions, validate, CanvasSpec};
use glyphctl_core::metrics::{clip_score, evaluate_case, fid, levenshtein};
use glyphctl_core::{render, CurationConfig, EmbeddingSet, GlyphInstructionSet, TextBox};
use proptest::prelude::*;
use support::*;

fn word() -> impl Strategy<Value = String> {
    "[a-zA-Z0-9]{1,8}"
}

fn text_box() -> impl Strategy<Value = TextBox> {
    (
        prop::collection::vec(word(), 1..5),
        0.0..0.95f64,
        0.0..0.95f64,
        0.01..=1.0f64,
        prop::option::of(0.2..10.0f64),
        -180.0..=180.0f64,
    )
        .prop_flat_map(|(words, x, y, w, ratio, yaw)| {
            let n = words.len() as u32;
            (1..=n).prop_map(move |rows| {
                let mut tb = TextBox::new(words.join(" "), x, y, w)
                    .with_yaw(yaw)
                    .with_rows(rows);
                tb.ratio = ratio;
                tb
            })
        })
}

fn instruction_set() -> impl Strategy<Value = GlyphInstructionSet> {
    (
        64u32..700,
        64u32..700,
        prop::collection::vec(text_box(), 0..4),
    )
        .prop_map(|(w, h, boxes)| {
            GlyphInstructionSet::new(
                CanvasSpec {
                    width: w,
                    height: h,
                },
                boxes,
            )
        })
}

fn point(max: f64) -> impl Strategy<Value = Point> {
    (0.0..max, 0.0..max).prop_map(|(x, y)| Point::new(x, y))
}

fn ocr_record() -> impl Strategy<Value = OcrRecord> {
    (
        prop::collection::vec((prop::array::uniform4(point(300.0)), "[a-z ]{0,10}"), 0..6),
        3.0..7.0f64,
    )
        .prop_map(|(boxes, aesthetic)| OcrRecord {
            image_id: "r".into(),
            width: 300,
            height: 300,
            caption: "c".into(),
            aesthetic,
            boxes: boxes
                .into_iter()
                .map(|(quad, text)| OcrBox {
                    quad,
                    text,
                    conf: 0.5,
                })
                .collect(),
        })
}

fn scaled(record: &OcrRecord, k: u32) -> OcrRecord {
    let mut r = record.clone();
    r.width *= k;
    r.height *= k;
    for b in &mut r.boxes {
        for p in &mut b.quad {
            *p = Point::new(p.x * f64::from(k), p.y * f64::from(k));
        }
    }
    r
}

fn close(a: &GlyphInstructionSet, b: &GlyphInstructionSet, tol: f64) -> bool {
    a.canvas == b.canvas
        && a.boxes.len() == b.boxes.len()
        && a.boxes.iter().zip(&b.boxes).all(|(p, q)| {
            p.text == q.text
                && p.rows == q.rows
                && (p.x - q.x).abs() <= tol
                && (p.y - q.y).abs() <= tol
                && (p.width - q.width).abs() <= tol
                && (p.yaw_deg - q.yaw_deg).abs() <= tol
                && match (p.ratio, q.ratio) {
                    (Some(r), Some(s)) => (r - s).abs() <= tol * r.abs().max(1.0),
                    (None, None) => true,
                    _ => false,
                }
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn parse_is_total_on_bytes(raw in prop::collection::vec(any::<u8>(), 0..256)) {
        let _ = parse_instructions(&raw);
    }

    #[test]
    fn parse_is_total_on_mangled_json(set in instruction_set(), cut in 0usize..400, byte in any::<u8>()) {
        let mut raw = set.to_json().into_bytes();
        if !raw.is_empty() {
            let at = cut % raw.len();
            raw[at] = byte;
            let _ = parse_instructions(&raw);
            raw.truncate(at);
            let _ = parse_instructions(&raw);
        }
    }

    #[test]
    fn parse_round_trips(set in instruction_set()) {
        let back = parse_instructions(set.to_json().as_bytes()).unwrap();
        prop_assert_eq!(back, set);
    }

    #[test]
    fn validate_is_pure(set in instruction_set()) {
        let before = set.clone();
        let a = validate(&set);
        let b = validate(&set);
        prop_assert_eq!(&set, &before);
        prop_assert_eq!(a, b);
    }

    #[test]
    fn ocr_conversion_is_scale_equivariant(record in ocr_record(), k in 1u32..6) {
        let (base, skipped) = from_ocr_record(&record);
        let (big, big_skipped) = from_ocr_record(&scaled(&record, k));
        prop_assert_eq!(skipped.len(), big_skipped.len());
        prop_assert!(close(&base, &big, 1e-9), "{:?}\n{:?}", base, big);
        if k.is_power_of_two() {
            prop_assert_eq!(base, big);
        }
    }

    #[test]
    fn converted_records_parse(record in ocr_record()) {
        let (set, _) = from_ocr_record(&record);
        prop_assert_eq!(parse_instructions(set.to_json().as_bytes()).unwrap(), set);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn render_is_deterministic(set in instruction_set()) {
        prop_assert_eq!(render(&set).to_png_bytes(), render(&set).to_png_bytes());
    }

    #[test]
    fn adding_a_box_never_removes_ink(set in instruction_set(), extra in text_box()) {
        let before = render(&set);
        let mut more = set.clone();
        more.boxes.push(extra);
        let after = render(&more);
        prop_assert!(before.pixels().iter().zip(after.pixels()).all(|(b, a)| a <= b));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn levenshtein_matches_table(a in "[abé漢 ]{0,16}", b in "[abé漢 ]{0,16}") {
        let (ac, bc): (Vec<char>, Vec<char>) = (a.chars().collect(), b.chars().collect());
        prop_assert_eq!(levenshtein(&a, &b), levenshtein_table(&ac, &bc));
    }

    #[test]
    fn levenshtein_is_a_metric(a in "[abc]{0,12}", b in "[abc]{0,12}", c in "[abc]{0,12}") {
        prop_assert_eq!(levenshtein(&a, &a), 0);
        prop_assert_eq!(levenshtein(&a, &b), levenshtein(&b, &a));
        prop_assert_eq!(levenshtein(&a, &b) == 0, a == b);
        prop_assert!(levenshtein(&a, &c) <= levenshtein(&a, &b) + levenshtein(&b, &c));
        let (la, lb) = (a.chars().count(), b.chars().count());
        prop_assert!(levenshtein(&a, &b) >= la.abs_diff(lb));
        prop_assert!(levenshtein(&a, &b) <= la.max(lb));
    }

    #[test]
    fn case_insensitive_accuracy_dominates(
        gt in prop::collection::vec("[aA]{1,3}", 1..4),
        pred in prop::collection::vec("[aA]{1,3}", 0..4),
    ) {
        let r = evaluate_case("c", &gt, &pred).unwrap();
        prop_assert!(r.exact_ci || !r.exact);
        prop_assert!((0.0..=1.0).contains(&r.word_accuracy));
        prop_assert_eq!(r.matched.len(), gt.len());
    }

    #[test]
    fn clip_ignores_positive_scale(
        rows in prop::collection::vec((prop::collection::vec(-1.0..1.0f32, 4), prop::collection::vec(-1.0..1.0f32, 4)), 1..6),
        k in 0.01..100.0f32,
    ) {
        prop_assume!(rows.iter().all(|(a, b)| a.iter().any(|v| v.abs() > 1e-3) && b.iter().any(|v| v.abs() > 1e-3)));
        let images: Vec<Vec<f32>> = rows.iter().map(|r| r.0.clone()).collect();
        let texts: Vec<Vec<f32>> = rows.iter().map(|r| r.1.clone()).collect();
        let scaled: Vec<Vec<f32>> = images.iter().map(|r| r.iter().map(|v| v * k).collect()).collect();
        let base = clip_score(&EmbeddingSet::from_rows(&images).unwrap(), &EmbeddingSet::from_rows(&texts).unwrap()).unwrap();
        let other = clip_score(&EmbeddingSet::from_rows(&scaled).unwrap(), &EmbeddingSet::from_rows(&texts).unwrap()).unwrap();
        for (x, y) in base.per_case.iter().zip(&other.per_case) {
            prop_assert!((x - y).abs() < 1e-4, "{} vs {}", x, y);
            prop_assert!((-100.0 - 1e-9..=100.0 + 1e-9).contains(x));
        }
    }

    #[test]
    fn fid_is_symmetric_and_nonnegative(
        a in prop::collection::vec(prop::collection::vec(-2.0..2.0f32, 3), 4..20),
        b in prop::collection::vec(prop::collection::vec(-2.0..2.0f32, 3), 4..20),
    ) {
        let (a, b) = (EmbeddingSet::from_rows(&a).unwrap(), EmbeddingSet::from_rows(&b).unwrap());
        let (ab, ba) = (fid(&a, &b).unwrap(), fid(&b, &a).unwrap());
        prop_assert!(ab >= 0.0);
        prop_assert!((ab - ba).abs() < 1e-9, "{} vs {}", ab, ba);
        prop_assert!(fid(&a, &a).unwrap().abs() < 1e-9);
    }
}

fn kept(records: &[OcrRecord], config: &CurationConfig) -> BTreeSet<String> {
    records
        .iter()
        .filter(|r| filter_record(r, config) == Decision::Keep)
        .map(|r| r.image_id.clone())
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn stricter_thresholds_keep_subsets(
        seed in any::<u64>(),
        aesthetic in (4.0..6.0f64, 0.0..1.0f64),
        area in (0.0..0.2f64, 0.0..0.2f64),
        boxes in (1usize..8, 0usize..4),
        margin in (0.0..0.05f64, 0.0..0.05f64),
    ) {
        let records = synthetic_records(200, seed);
        let loose = CurationConfig {
            aesthetic_min: aesthetic.0,
            area_min_frac: area.0,
            max_boxes: boxes.0 + boxes.1,
            border_margin_frac: margin.0,
        };
        let base = kept(&records, &loose);
        let stricter = [
            CurationConfig { aesthetic_min: aesthetic.0 + aesthetic.1, ..loose },
            CurationConfig { area_min_frac: area.0 + area.1, ..loose },
            CurationConfig { max_boxes: boxes.0, ..loose },
            CurationConfig { border_margin_frac: margin.0 + margin.1, ..loose },
        ];
        for strict in stricter {
            prop_assert!(kept(&records, &strict).is_subset(&base), "{:?}", strict);
        }
    }

    #[test]
    fn manifest_partitions_input(seed in any::<u64>()) {
        let records = synthetic_records(120, seed);
        let m = build_manifest(to_jsonl(&records).as_bytes(), &CurationConfig::default(), None).unwrap();
        let mut seqs: Vec<usize> = m.kept.iter().map(|k| k.seq).chain(m.rejected.iter().map(|r| r.seq)).collect();
        seqs.sort();
        prop_assert_eq!(seqs, (0..records.len()).collect::<Vec<_>>());
        prop_assert_eq!(m.stats.total(), m.kept.len());
    }

    #[test]
    fn sampled_words_are_distinct_members(seed in any::<u64>(), n in 0usize..60) {
        let buckets = build_buckets(&frequency_list(60, seed)).unwrap();
        let all: BTreeSet<&String> = buckets.iter().flat_map(|b| b.words.iter().map(|(w, _)| w)).collect();
        prop_assert_eq!(all.len(), 240);
        for b in &buckets {
            prop_assert!(b.words.iter().all(|(_, rank)| Bucket::for_rank(*rank) == b.bucket));
            let words = sample_words(b, n, seed).unwrap();
            let distinct: BTreeSet<&String> = words.iter().collect();
            prop_assert_eq!(distinct.len(), n);
            prop_assert!(words.iter().all(|w| b.words.iter().any(|(x, _)| x == w)));
        }
    }
}

#[test]
fn creative_templates_are_uniform() {
    let templates: Vec<String> = ["One <word>.", "Two <word>!", "Three <word>?"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let mut r = rng(4);
    let words: Vec<String> = (0..3000)
        .map(|i| format!("{}{i}", pseudo_word(&mut r)))
        .collect();
    let cases = make_prompts(
        &words,
        Bucket::Top1k,
        BenchKind::Creative,
        &templates,
        11,
        FontPreset::Medium,
    )
    .unwrap();
    assert_eq!(cases.len(), 12_000);
    let mut counts = [0f64; 3];
    for c in &cases {
        let i = templates
            .iter()
            .position(|t| c.prompt == t.replace("<word>", &c.word))
            .expect("prompt comes from a template");
        counts[i] += 1.0;
    }
    let expected = cases.len() as f64 / 3.0;
    let chi2: f64 = counts
        .iter()
        .map(|c| (c - expected).powi(2) / expected)
        .sum();
    // 2 degrees of freedom, p = 0.001
    assert!(chi2 < 13.816, "chi-square {chi2} for {counts:?}");
}
