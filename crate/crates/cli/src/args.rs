use std::net::SocketAddr;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use glyphctl_core::bench::{BenchKind, WORDS_PER_BUCKET};
use glyphctl_core::{CurationConfig, FontPreset};

#[derive(Debug, Parser)]
#[command(
    name = "glyphctl",
    version,
    about = "Glyph instruction rendering, dataset curation and benchmark scoring"
)]
pub struct Cli {
    /// Worker threads for record and case processing [default: available parallelism]
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Render an instruction file to a glyph image
    Render(RenderArgs),
    /// Filter OCR records into a dataset manifest with glyph images
    Curate(CurateArgs),
    /// Print kept/rejected counts and histograms without writing images
    Stats(StatsArgs),
    /// Sample benchmark words and emit prompt cases with glyph images
    Bench(BenchArgs),
    /// Score OCR predictions and embeddings against benchmark cases
    Eval(EvalArgs),
    /// Serve the HTTP API and the studio page
    Serve(ServeArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ImageFormat {
    Png,
    /// Width and height as u32 LE followed by row-major gray bytes
    Raw,
}

#[derive(Debug, clap::Args)]
pub struct RenderArgs {
    /// Instruction file (JSON)
    pub instructions: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t = ImageFormat::Png)]
    pub format: ImageFormat,
}

#[derive(Debug, clap::Args)]
pub struct Thresholds {
    #[arg(long, default_value_t = CurationConfig::default().aesthetic_min)]
    pub aesthetic_min: f64,
    /// Minimum summed box area as a fraction of the image
    #[arg(long, default_value_t = CurationConfig::default().area_min_frac)]
    pub area_min: f64,
    #[arg(long, default_value_t = CurationConfig::default().max_boxes)]
    pub max_boxes: usize,
    /// Border band thickness as a fraction of the shorter image side
    #[arg(long, default_value_t = CurationConfig::default().border_margin_frac)]
    pub border_margin: f64,
}

impl Thresholds {
    pub fn config(&self) -> CurationConfig {
        CurationConfig {
            aesthetic_min: self.aesthetic_min,
            area_min_frac: self.area_min,
            max_boxes: self.max_boxes,
            border_margin_frac: self.border_margin,
        }
    }
}

#[derive(Debug, clap::Args)]
pub struct CurateArgs {
    /// OCR records (JSONL)
    pub records: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub thresholds: Thresholds,
    /// Also write seeded splits of the kept records, e.g. `--splits 1000,100`
    #[arg(long, value_delimiter = ',')]
    pub splits: Vec<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, clap::Args)]
pub struct StatsArgs {
    /// OCR records (JSONL)
    pub records: PathBuf,
    #[command(flatten)]
    pub thresholds: Thresholds,
    /// Write the JSON summary here instead of stdout
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KindArg {
    Simple,
    Creative,
}

impl From<KindArg> for BenchKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Simple => BenchKind::Simple,
            KindArg::Creative => BenchKind::Creative,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PresetArg {
    Small,
    Medium,
    Large,
}

impl From<PresetArg> for FontPreset {
    fn from(p: PresetArg) -> Self {
        match p {
            PresetArg::Small => FontPreset::Small,
            PresetArg::Medium => FontPreset::Medium,
            PresetArg::Large => FontPreset::Large,
        }
    }
}

#[derive(Debug, clap::Args)]
pub struct BenchArgs {
    /// Word frequency list: `word<TAB>rank` per line
    pub freq: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t = KindArg::Simple)]
    pub kind: KindArg,
    #[arg(long, default_value_t = WORDS_PER_BUCKET)]
    pub words_per_bucket: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = PresetArg::Medium)]
    pub font_preset: PresetArg,
    /// Creative templates, one per line, each containing `<word>`
    #[arg(long)]
    pub templates: Option<PathBuf>,
}

#[derive(Debug, clap::Args)]
pub struct EvalArgs {
    /// Benchmark cases (JSONL)
    #[arg(long)]
    pub cases: PathBuf,
    /// OCR predictions (JSONL)
    #[arg(long)]
    pub predictions: PathBuf,
    #[arg(long, requires = "clip_text")]
    pub clip_image: Option<PathBuf>,
    #[arg(long, requires = "clip_image")]
    pub clip_text: Option<PathBuf>,
    #[arg(long, requires = "fid_gen")]
    pub fid_real: Option<PathBuf>,
    #[arg(long, requires = "fid_real")]
    pub fid_gen: Option<PathBuf>,
    /// Write the report here instead of stdout
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, clap::Args)]
pub struct ServeArgs {
    #[arg(long, default_value = "127.0.0.1:8080")]
    pub bind: SocketAddr,
    /// Creative templates served by `/api/templates`
    #[arg(long)]
    pub templates: Option<PathBuf>,
}
