//! Seeded workloads shared by the benchmarks.

use glyphctl_core::instruction::{CanvasSpec, GlyphInstructionSet, TextBox};
use glyphctl_core::EmbeddingSet;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A 512×512 canvas with `boxes` rotated multi-word boxes.
pub fn instruction_set(boxes: usize, seed: u64) -> GlyphInstructionSet {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    let boxes = (0..boxes)
        .map(|i| {
            TextBox::new(
                format!("Glyph {i} sample text"),
                r.random_range(0.05..0.5),
                r.random_range(0.05..0.8),
                r.random_range(0.2..0.45),
            )
            .with_yaw(r.random_range(-45.0..45.0))
            .with_rows(r.random_range(1..=2))
        })
        .collect();
    GlyphInstructionSet::new(CanvasSpec::default(), boxes)
}

/// Random lowercase string of `len` characters.
pub fn text(len: usize, seed: u64) -> String {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    (0..len)
        .map(|_| char::from(b'a' + r.random_range(0..26u8)))
        .collect()
}

/// `count × dim` uniform features in [-1, 1).
pub fn features(count: usize, dim: usize, seed: u64) -> EmbeddingSet {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    let data = (0..count * dim)
        .map(|_| r.random_range(-1.0..1.0f32))
        .collect();
    EmbeddingSet::new(count, dim, data).expect("sizes match")
}
