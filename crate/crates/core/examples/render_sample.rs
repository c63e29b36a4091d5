//! Renders a sample instruction set to `sample.png`.

use glyphctl_core::{render, CanvasSpec, GlyphInstructionSet, TextBox};

fn main() {
    let set = GlyphInstructionSet::new(
        CanvasSpec::default(),
        vec![
            TextBox::new("Hello World", 0.1, 0.1, 0.5).with_rows(2),
            TextBox::new("Rotated text", 0.2, 0.8, 0.6).with_yaw(30.0),
            TextBox::new("Ratio 3", 0.55, 0.15, 0.4).with_ratio(3.0),
            TextBox::new("glyph", 0.1, 0.95, 0.3).with_yaw(90.0),
        ],
    );
    let out = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "sample.png".into());
    render(&set).save_png(&out).expect("write png");
    println!("wrote {out}");
}
