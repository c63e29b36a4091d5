//! Deterministic tooling around glyph-conditioned text-to-image generation.
//!
//! - [`instruction`]: glyph instructions (canvas plus text boxes), parsing,
//!   validation and derivation from OCR detections.
//! - [`render`]: rasterizes instructions into whiteboard glyph images with
//!   the single bundled font.
//! - [`curation`]: filters OCR-annotated image records into a dataset
//!   manifest with glyph images and histograms.
//! - [`bench`]: builds word-frequency benchmarks (SimpleBench and
//!   CreativeBench cases).
//! - [`metrics`]: OCR accuracy, Levenshtein distance, CLIP score and FID.

pub mod bench;
pub mod curation;
pub mod font;
pub mod geometry;
pub mod instruction;
pub mod metrics;
pub mod raster;
pub mod render;

pub use bench::{Bucket, FontPreset, PromptCase};
pub use curation::{CurationConfig, DatasetManifest, OcrRecord};
pub use font::Font;
pub use instruction::{
    parse_instructions, validate, CanvasSpec, GlyphInstructionSet, TextBox, ValidationReport,
};
pub use metrics::{EmbeddingSet, EvalReport};
pub use render::{measure_ink, render, GlyphImage};
