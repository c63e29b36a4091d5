//! Word-frequency benchmark construction: rank buckets, seeded word
//! sampling, prompt cases and on-disk emission.

use std::fmt;
use std::io::BufRead;
use std::path::Path;
use std::str::FromStr;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::curation::{sanitize_file_stem, write_jsonl};
use crate::instruction::{CanvasSpec, GlyphInstructionSet, TextBox};
use crate::render::{render, ImageIoError};

pub const WORDS_PER_BUCKET: usize = 100;
pub const REPLICATES: u32 = 4;
pub const BOX_Y: f64 = 0.45;
pub const SIMPLE_TEMPLATE: &str = "A sign that says \"<word>\".";
pub const CREATIVE_TEMPLATES: [&str; 2] = [
    "Little panda holding a sign that says \"<word>\".",
    "A photographer wears a t-shirt with the word \"<word>\" printed on it.",
];
pub const PLACEHOLDER: &str = "<word>";
pub const CASES_FILE: &str = "cases.jsonl";

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("line {line}: {message}")]
    MalformedEntry { line: usize, message: String },
    #[error("bucket {bucket} holds {available} words, {requested} requested")]
    BucketTooSmall {
        bucket: Bucket,
        available: usize,
        requested: usize,
    },
    #[error("template file contains no templates")]
    EmptyTemplateFile,
    #[error("template on line {line} lacks the `<word>` placeholder")]
    MissingPlaceholder { line: usize },
    #[error("i/o failure: {0}")]
    IoFailure(#[from] std::io::Error),
    #[error("i/o failure: {0}")]
    Image(#[from] ImageIoError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Bucket {
    #[serde(rename = "top1k")]
    Top1k,
    #[serde(rename = "1k_10k")]
    From1kTo10k,
    #[serde(rename = "10k_100k")]
    From10kTo100k,
    #[serde(rename = "100k_plus")]
    Above100k,
}

impl Bucket {
    pub const ALL: [Bucket; 4] = [
        Bucket::Top1k,
        Bucket::From1kTo10k,
        Bucket::From10kTo100k,
        Bucket::Above100k,
    ];

    pub fn for_rank(rank: u64) -> Bucket {
        match rank {
            0..=1_000 => Bucket::Top1k,
            1_001..=10_000 => Bucket::From1kTo10k,
            10_001..=100_000 => Bucket::From10kTo100k,
            _ => Bucket::Above100k,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Bucket::Top1k => "top1k",
            Bucket::From1kTo10k => "1k_10k",
            Bucket::From10kTo100k => "10k_100k",
            Bucket::Above100k => "100k_plus",
        }
    }

    fn index(self) -> u64 {
        Bucket::ALL.iter().position(|&b| b == self).expect("listed") as u64
    }
}

impl fmt::Display for Bucket {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Bucket {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Bucket::ALL
            .into_iter()
            .find(|b| b.name() == s)
            .ok_or_else(|| format!("unknown bucket `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrequencyBucket {
    pub bucket: Bucket,
    /// `(word, rank)` sorted by rank.
    pub words: Vec<(String, u64)>,
}

/// Parses the `word<TAB>rank` list. Blank lines are ignored.
pub fn read_frequency_list<R: BufRead>(input: R) -> Result<Vec<(String, u64)>, BenchError> {
    let mut out = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        let line = line.trim_end_matches(['\r', '\n']);
        if line.trim().is_empty() {
            continue;
        }
        let malformed = |message: String| BenchError::MalformedEntry {
            line: i + 1,
            message,
        };
        let (word, rank) = line
            .split_once('\t')
            .ok_or_else(|| malformed("expected `word<TAB>rank`".into()))?;
        let rank: i64 = rank
            .trim()
            .parse()
            .map_err(|_| malformed(format!("rank `{}` is not an integer", rank.trim())))?;
        if rank <= 0 {
            return Err(malformed(format!("rank {rank} is not positive")));
        }
        out.push((word.to_string(), rank as u64));
    }
    Ok(out)
}

/// Sorts words into the four rank buckets.
pub fn build_buckets(freq_list: &[(String, u64)]) -> Result<[FrequencyBucket; 4], BenchError> {
    let mut buckets = Bucket::ALL.map(|bucket| FrequencyBucket {
        bucket,
        words: Vec::new(),
    });
    for (i, (word, rank)) in freq_list.iter().enumerate() {
        let malformed = |message: String| BenchError::MalformedEntry {
            line: i + 1,
            message,
        };
        if word.is_empty() || word.split_whitespace().count() != 1 || word.trim() != word {
            return Err(malformed(format!("`{word}` is not a single word")));
        }
        if *rank == 0 {
            return Err(malformed(format!("rank of `{word}` must be positive")));
        }
        let b = Bucket::for_rank(*rank);
        buckets[b.index() as usize]
            .words
            .push((word.clone(), *rank));
    }
    for b in &mut buckets {
        b.words
            .sort_by(|x, y| x.1.cmp(&y.1).then_with(|| x.0.cmp(&y.0)));
    }
    Ok(buckets)
}

/// Uniform sample of `n` words without replacement, in sampling order.
pub fn sample_words(
    bucket: &FrequencyBucket,
    n: usize,
    seed: u64,
) -> Result<Vec<String>, BenchError> {
    if n > bucket.words.len() {
        return Err(BenchError::BucketTooSmall {
            bucket: bucket.bucket,
            available: bucket.words.len(),
            requested: n,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(index::sample(&mut rng, bucket.words.len(), n)
        .into_iter()
        .map(|i| bucket.words[i].0.clone())
        .collect())
}

/// Per-bucket seed so that buckets draw independent streams.
pub fn bucket_seed(seed: u64, bucket: Bucket) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(bucket.index())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BenchKind {
    Simple,
    Creative,
}

impl FromStr for BenchKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "simple" => Ok(BenchKind::Simple),
            "creative" => Ok(BenchKind::Creative),
            _ => Err(format!("unknown bench kind `{s}`")),
        }
    }
}

/// Width of the benchmark text box as a fraction of the canvas.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum FontPreset {
    Small,
    #[default]
    Medium,
    Large,
}

impl FontPreset {
    pub fn box_width(self) -> f64 {
        match self {
            FontPreset::Small => 0.15,
            FontPreset::Medium => 0.30,
            FontPreset::Large => 0.60,
        }
    }
}

impl FromStr for FontPreset {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "small" => Ok(FontPreset::Small),
            "medium" => Ok(FontPreset::Medium),
            "large" => Ok(FontPreset::Large),
            _ => Err(format!("unknown font preset `{s}`")),
        }
    }
}

/// Reads a template file: one template per non-blank line, each containing
/// `<word>`.
pub fn read_templates<R: BufRead>(input: R) -> Result<Vec<String>, BenchError> {
    let mut out = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        if !t.contains(PLACEHOLDER) {
            return Err(BenchError::MissingPlaceholder { line: i + 1 });
        }
        out.push(t.to_string());
    }
    if out.is_empty() {
        return Err(BenchError::EmptyTemplateFile);
    }
    Ok(out)
}

pub fn default_creative_templates() -> Vec<String> {
    CREATIVE_TEMPLATES.iter().map(|s| s.to_string()).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptCase {
    pub case_id: String,
    pub word: String,
    pub bucket: Bucket,
    pub prompt: String,
    pub replicate: u32,
    pub font_preset: FontPreset,
    pub glyph_path: String,
    pub instructions: GlyphInstructionSet,
}

/// The single centered box used for every benchmark word.
pub fn bench_instructions(word: &str, preset: FontPreset) -> GlyphInstructionSet {
    let width = preset.box_width();
    GlyphInstructionSet::new(
        CanvasSpec::default(),
        vec![TextBox::new(word, (1.0 - width) / 2.0, BOX_Y, width)],
    )
}

/// Four cases per word. Creative cases draw their template uniformly from
/// `templates` with an RNG seeded by `seed`.
pub fn make_prompts(
    words: &[String],
    bucket: Bucket,
    kind: BenchKind,
    templates: &[String],
    seed: u64,
    preset: FontPreset,
) -> Result<Vec<PromptCase>, BenchError> {
    let simple = [SIMPLE_TEMPLATE.to_string()];
    let templates = match kind {
        BenchKind::Simple => &simple[..],
        BenchKind::Creative if templates.is_empty() => return Err(BenchError::EmptyTemplateFile),
        BenchKind::Creative => templates,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cases = Vec::with_capacity(words.len() * REPLICATES as usize);
    for word in words {
        let instructions = bench_instructions(word, preset);
        for replicate in 1..=REPLICATES {
            let template = match kind {
                BenchKind::Simple => &templates[0],
                BenchKind::Creative => &templates[rng.random_range(0..templates.len())],
            };
            let stem = format!("{}_{}_{replicate}", bucket.name(), sanitize_file_stem(word));
            cases.push(PromptCase {
                case_id: stem.clone(),
                word: word.clone(),
                bucket,
                prompt: template.replace(PLACEHOLDER, word),
                replicate,
                font_preset: preset,
                glyph_path: format!("glyphs/{stem}.png"),
                instructions: instructions.clone(),
            });
        }
    }
    Ok(cases)
}

#[derive(Debug, Clone)]
pub struct BenchOptions {
    pub kind: BenchKind,
    pub words_per_bucket: usize,
    pub seed: u64,
    pub preset: FontPreset,
    pub templates: Vec<String>,
}

impl Default for BenchOptions {
    fn default() -> Self {
        Self {
            kind: BenchKind::Simple,
            words_per_bucket: WORDS_PER_BUCKET,
            seed: 0,
            preset: FontPreset::default(),
            templates: default_creative_templates(),
        }
    }
}

/// Samples every bucket and builds its cases, in bucket order.
pub fn build_bench(
    buckets: &[FrequencyBucket],
    opts: &BenchOptions,
) -> Result<Vec<PromptCase>, BenchError> {
    let mut cases = Vec::new();
    for b in buckets {
        let seed = bucket_seed(opts.seed, b.bucket);
        let words = sample_words(b, opts.words_per_bucket, seed)?;
        cases.extend(make_prompts(
            &words,
            b.bucket,
            opts.kind,
            &opts.templates,
            seed,
            opts.preset,
        )?);
    }
    Ok(cases)
}

/// Writes `cases.jsonl` plus one glyph PNG per case under `out_dir/glyphs/`.
/// Rendering runs on the current rayon pool.
pub fn emit_bench(cases: &[PromptCase], out_dir: &Path) -> Result<(), BenchError> {
    std::fs::create_dir_all(out_dir.join("glyphs"))?;
    cases
        .par_iter()
        .try_for_each(|c| render(&c.instructions).save_png(out_dir.join(&c.glyph_path)))?;
    write_jsonl(&out_dir.join(CASES_FILE), cases)?;
    Ok(())
}
