//! Shared fixtures and independent oracles for the integration suites.

#![allow(dead_code)]

use glyphctl_core::curation::{OcrBox, OcrRecord};
use glyphctl_core::geometry::Point;
use glyphctl_core::instruction::{CanvasSpec, GlyphInstructionSet, TextBox};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Full `(|a|+1) × (|b|+1)` edit-distance table.
pub fn levenshtein_table<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    let mut t = vec![vec![0usize; b.len() + 1]; a.len() + 1];
    for (i, row) in t.iter_mut().enumerate() {
        row[0] = i;
    }
    for (j, v) in t[0].iter_mut().enumerate() {
        *v = j;
    }
    for i in 1..=a.len() {
        for j in 1..=b.len() {
            let cost = if a[i - 1] == b[j - 1] { 0 } else { 1 };
            t[i][j] = (t[i - 1][j] + 1)
                .min(t[i][j - 1] + 1)
                .min(t[i - 1][j - 1] + cost);
        }
    }
    t[a.len()][b.len()]
}

const ALPHABET: &[char] = &['a', 'b', 'c', 'd', 'A', 'é', 'ß', ' ', '漢'];

pub fn random_string(r: &mut ChaCha8Rng, max_len: usize) -> String {
    let len = r.random_range(0..=max_len);
    (0..len)
        .map(|_| ALPHABET[r.random_range(0..ALPHABET.len())])
        .collect()
}

const VOCAB: &[&str] = &[
    "free", "Free", "beer", "bear", "OPEN", "open", "cafe", "sale", "Hello", "world", "a",
];

pub fn random_words(r: &mut ChaCha8Rng, min: usize, max: usize) -> Vec<String> {
    let n = r.random_range(min..=max);
    (0..n)
        .map(|_| VOCAB[r.random_range(0..VOCAB.len())].to_string())
        .collect()
}

/// Lowercase pseudo-word of 3..=10 letters.
pub fn pseudo_word(r: &mut ChaCha8Rng) -> String {
    let len = r.random_range(3..=10);
    (0..len)
        .map(|_| char::from(b'a' + r.random_range(0..26u8)))
        .collect()
}

/// Splits that minimize the longest row, first in lexicographic order of
/// break positions, by enumerating every contiguous partition.
pub fn split_rows_brute_force(words: &[&str], rows: usize) -> Vec<String> {
    fn recurse(
        words: &[&str],
        start: usize,
        rows_left: usize,
        breaks: &mut Vec<usize>,
        best: &mut Option<(usize, Vec<usize>)>,
    ) {
        if rows_left == 1 {
            let mut all = breaks.clone();
            all.push(words.len());
            let mut prev = 0;
            let mut longest = 0;
            for &b in &all {
                longest = longest.max(words[prev..b].join(" ").chars().count());
                prev = b;
            }
            if best.as_ref().is_none_or(|(l, _)| longest < *l) {
                *best = Some((longest, all));
            }
            return;
        }
        for end in start + 1..=words.len() - (rows_left - 1) {
            breaks.push(end);
            recurse(words, end, rows_left - 1, breaks, best);
            breaks.pop();
        }
    }
    let mut best = None;
    recurse(words, 0, rows, &mut Vec::new(), &mut best);
    let (_, breaks) = best.expect("rows <= words");
    let mut prev = 0;
    breaks
        .into_iter()
        .map(|b| {
            let s = words[prev..b].join(" ");
            prev = b;
            s
        })
        .collect()
}

pub fn random_instruction_set(r: &mut ChaCha8Rng) -> GlyphInstructionSet {
    let canvas = CanvasSpec {
        width: r.random_range(128..=640),
        height: r.random_range(128..=640),
    };
    let n = r.random_range(0..=4);
    let boxes = (0..n)
        .map(|_| {
            let words: Vec<String> = (0..r.random_range(1..=4)).map(|_| pseudo_word(r)).collect();
            let mut tb = TextBox::new(
                words.join(" "),
                r.random_range(0.0..0.9),
                r.random_range(0.0..0.9),
                r.random_range(0.05..=0.6),
            )
            .with_yaw(r.random_range(-180.0..=180.0))
            .with_rows(r.random_range(1..=words.len() as u32));
            if r.random_bool(0.5) {
                tb = tb.with_ratio(r.random_range(0.5..8.0));
            }
            tb
        })
        .collect();
    GlyphInstructionSet::new(canvas, boxes)
}

pub fn rect_quad(x0: f64, y0: f64, x1: f64, y1: f64) -> [Point; 4] {
    [
        Point::new(x0, y0),
        Point::new(x1, y0),
        Point::new(x1, y1),
        Point::new(x0, y1),
    ]
}

pub fn ocr_box(q: [Point; 4], text: &str) -> OcrBox {
    OcrBox {
        quad: q,
        text: text.to_string(),
        conf: 0.9,
    }
}

/// A record that passes every default rule: aesthetic 5.0 and one centered
/// box covering 10% of a 512×512 image.
pub fn compliant_record(id: &str) -> OcrRecord {
    let side = (0.10f64 * 512.0 * 512.0).sqrt();
    let lo = 256.0 - side / 2.0;
    OcrRecord {
        image_id: id.to_string(),
        width: 512,
        height: 512,
        caption: format!("caption for {id}"),
        aesthetic: 5.0,
        boxes: vec![ocr_box(rect_quad(lo, lo, lo + side, lo + side), "OPEN")],
    }
}

/// Four records, each tripping exactly one of the aesthetic, border, area
/// and box-count rules.
pub fn rule_fixture() -> Vec<OcrRecord> {
    let mut low = compliant_record("low-aesthetic");
    low.aesthetic = 4.4;

    let mut border = compliant_record("border-only");
    border.boxes = vec![ocr_box(rect_quad(100.0, 0.0, 400.0, 120.0), "BANNER")];

    let mut small = compliant_record("small-area");
    let side = (0.04f64 * 512.0 * 512.0).sqrt();
    small.boxes = vec![ocr_box(
        rect_quad(200.0, 200.0, 200.0 + side, 200.0 + side),
        "tiny",
    )];

    let mut many = compliant_record("too-many-boxes");
    many.boxes = (0..6)
        .map(|i| {
            let x = 60.0 + 65.0 * i as f64;
            ocr_box(rect_quad(x, 150.0, x + 55.0, 350.0), "word")
        })
        .collect();
    vec![low, border, small, many]
}

/// Synthetic stream mixing compliant and rule-breaking records.
pub fn synthetic_records(n: usize, seed: u64) -> Vec<OcrRecord> {
    let mut r = rng(seed);
    (0..n)
        .map(|i| {
            let (w, h) = (r.random_range(256..=1024u32), r.random_range(256..=1024u32));
            let (wf, hf) = (f64::from(w), f64::from(h));
            let boxes = (0..r.random_range(0..=7))
                .map(|_| {
                    let bw = r.random_range(0.05..0.5) * wf;
                    let bh = r.random_range(0.03..0.3) * hf;
                    let x = r.random_range(0.0..wf - bw);
                    let y = r.random_range(0.0..hf - bh);
                    let words: Vec<String> = (0..r.random_range(1..=3))
                        .map(|_| pseudo_word(&mut r))
                        .collect();
                    ocr_box(rect_quad(x, y, x + bw, y + bh), &words.join(" "))
                })
                .collect();
            OcrRecord {
                image_id: format!("synthetic-{i:05}"),
                width: w,
                height: h,
                caption: format!("image {i}"),
                aesthetic: r.random_range(3.5..7.0),
                boxes,
            }
        })
        .collect()
}

pub fn to_jsonl(records: &[OcrRecord]) -> String {
    records
        .iter()
        .map(|r| serde_json::to_string(r).unwrap() + "\n")
        .collect()
}

/// Word list with `per_bucket` lowercase words in each rank band.
pub fn frequency_list(per_bucket: usize, seed: u64) -> Vec<(String, u64)> {
    let mut r = rng(seed);
    let mut seen = std::collections::HashSet::new();
    let bands: [(u64, u64); 4] = [
        (1, 1000),
        (1001, 10_000),
        (10_001, 100_000),
        (100_001, 1_000_000),
    ];
    let mut out = Vec::new();
    for (lo, hi) in bands {
        let mut ranks = std::collections::HashSet::new();
        while ranks.len() < per_bucket {
            ranks.insert(r.random_range(lo..=hi));
        }
        let mut ranks: Vec<u64> = ranks.into_iter().collect();
        ranks.sort();
        for rank in ranks {
            let word = loop {
                let w = pseudo_word(&mut r);
                if seen.insert(w.clone()) {
                    break w;
                }
            };
            out.push((word, rank));
        }
    }
    out
}
