//! Synthetic line rendering.
//!
//! Layout and advance widths are jitter-free, so line width depends only
//! on the text and style; all randomness (glyph jitter, wobble, pixel
//! noise) is drawn from a ChaCha stream seeded per line.

use std::fmt;
use std::str::FromStr;

use ndarray::Array2;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::font::{self, Seg, BASELINE, LETTER_SPACING};
use super::LineImage;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Target line height in pixels; one em maps to this many pixels.
pub const LINE_HEIGHT: usize = 40;
const MARGIN: f32 = 6.0;
const ARC_STEPS: usize = 24;

/// The two bundled looks: upright regular glyphs with mild noise, and
/// slanted jittered strokes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RenderStyle {
    Printed,
    Cursive,
}

impl RenderStyle {
    pub fn name(&self) -> &'static str {
        match self {
            RenderStyle::Printed => "printed",
            RenderStyle::Cursive => "cursive",
        }
    }

    fn thickness(&self) -> f32 {
        match self {
            RenderStyle::Printed => 2.2,
            RenderStyle::Cursive => 1.7,
        }
    }

    fn noise_sigma(&self) -> f64 {
        match self {
            RenderStyle::Printed => 0.03,
            RenderStyle::Cursive => 0.04,
        }
    }

    fn darkness(&self) -> f32 {
        match self {
            RenderStyle::Printed => 0.92,
            RenderStyle::Cursive => 0.85,
        }
    }

    fn slant(&self) -> f32 {
        match self {
            RenderStyle::Printed => 0.0,
            RenderStyle::Cursive => 0.25,
        }
    }

    /// Extra right margin so slanted ascenders stay inside the image.
    fn slant_margin(&self) -> f32 {
        self.slant() * (BASELINE * LINE_HEIGHT as f32)
    }
}

impl FromStr for RenderStyle {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "printed" => Ok(RenderStyle::Printed),
            "cursive" => Ok(RenderStyle::Cursive),
            other => Err(Error::UnknownStyle(other.to_string())),
        }
    }
}

impl fmt::Display for RenderStyle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

fn normal01<R: Rng>(rng: &mut R) -> f64 {
    let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
    let u2: f64 = rng.gen_range(0.0..1.0);
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

struct PxSeg {
    a: [f32; 2],
    b: [f32; 2],
    half: f32,
}

/// Max-blend `cov(x, y)` into the box of radius `reach` around a point.
fn splat<F: Fn(f32, f32) -> f32>(ink: &mut Array2<f32>, cx: f32, cy: f32, reach: f32, cov: F) {
    let (height, width) = ink.dim();
    let x0 = (cx - reach).floor().max(0.0) as usize;
    let x1 = ((cx + reach).ceil() as usize).min(width.saturating_sub(1));
    let y0 = (cy - reach).floor().max(0.0) as usize;
    let y1 = ((cy + reach).ceil() as usize).min(height.saturating_sub(1));
    for y in y0..=y1 {
        for x in x0..=x1 {
            let c = cov(x as f32 + 0.5, y as f32 + 0.5);
            if c > ink[(y, x)] {
                ink[(y, x)] = c;
            }
        }
    }
}

fn dist_to_segment(p: [f32; 2], a: [f32; 2], b: [f32; 2]) -> f32 {
    let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
    let len2 = dx * dx + dy * dy;
    let t = if len2 <= f32::EPSILON {
        0.0
    } else {
        (((p[0] - a[0]) * dx + (p[1] - a[1]) * dy) / len2).clamp(0.0, 1.0)
    };
    let (cx, cy) = (a[0] + t * dx, a[1] + t * dy);
    ((p[0] - cx).powi(2) + (p[1] - cy).powi(2)).sqrt()
}

/// Deterministic width of the rendered line, in pixels.
pub fn rendered_width(text: &str, style: RenderStyle) -> Result<usize> {
    if text.is_empty() {
        return Err(Error::EmptyText);
    }
    let mut advance = 0.0f32;
    for ch in text.chars() {
        let g = font::glyph(ch).ok_or_else(|| Error::UnsupportedChar {
            ch,
            style: style.name().to_string(),
        })?;
        advance += g.width + LETTER_SPACING;
    }
    let px = 2.0 * MARGIN + style.slant_margin() + advance * LINE_HEIGHT as f32;
    Ok((px.ceil() as usize).max(8))
}

/// Render `text` at height 40 with white background and dark strokes.
pub fn render_synthetic_line<T: Scalar>(
    text: &str,
    style: RenderStyle,
    seed: u64,
) -> Result<LineImage<T>> {
    let width = rendered_width(text, style)?;
    let height = LINE_HEIGHT;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let em = LINE_HEIGHT as f32;
    let baseline_px = BASELINE * em;

    // Per-glyph jitter scales with style; advances stay exact.
    let (scale_jit, base_jit, wobble_amp) = match style {
        RenderStyle::Printed => (0.0f32, 0.2f32, 0.0f32),
        RenderStyle::Cursive => (0.07, 1.0, 0.40),
    };
    let slant = match style {
        RenderStyle::Printed => 0.0,
        RenderStyle::Cursive => style.slant() + rng.gen_range(-0.05..0.05),
    };

    let mut segs: Vec<PxSeg> = Vec::new();
    let mut dots: Vec<([f32; 2], f32)> = Vec::new();
    let half = style.thickness() / 2.0;
    let mut pen = MARGIN + style.slant_margin() * 0.2;
    for ch in text.chars() {
        let g = font::glyph(ch).expect("width pass validated glyphs");
        let gscale = 1.0 + rng.gen_range(-1.0f32..1.0) * scale_jit;
        let dy = rng.gen_range(-1.0f32..1.0) * base_jit;
        let dx = rng.gen_range(-1.0f32..1.0) * base_jit * 0.5;
        let (wf, wp1, wp2) = (
            rng.gen_range(0.15f32..0.45),
            rng.gen_range(0.0f32..std::f32::consts::TAU),
            rng.gen_range(0.0f32..std::f32::consts::TAU),
        );
        let place = |p: [f32; 2]| -> [f32; 2] {
            // Scale about the baseline, shear, then wobble smoothly.
            let gx = p[0] * em * gscale;
            let gy = baseline_px + (p[1] * em - baseline_px) * gscale;
            let sheared_x = gx + slant * (baseline_px - gy);
            let mut x = pen + sheared_x + dx;
            let mut y = gy + dy;
            if wobble_amp > 0.0 {
                x += wobble_amp * (wf * y + wp1).sin();
                y += wobble_amp * (wf * x + wp2).sin();
            }
            [x, y]
        };
        for seg in g.segs {
            match seg {
                Seg::Poly(pts) => {
                    for w in pts.windows(2) {
                        segs.push(PxSeg { a: place(w[0]), b: place(w[1]), half });
                    }
                }
                Seg::Arc { c, r, a0, a1 } => {
                    let mut prev: Option<[f32; 2]> = None;
                    for k in 0..=ARC_STEPS {
                        let t = a0 + (a1 - a0) * k as f32 / ARC_STEPS as f32;
                        let p = place([c[0] + r[0] * t.cos(), c[1] + r[1] * t.sin()]);
                        if let Some(a) = prev {
                            segs.push(PxSeg { a, b: p, half });
                        }
                        prev = Some(p);
                    }
                }
                Seg::Dot(p) => {
                    dots.push((place(*p), (0.045 * em).max(half * 1.4)));
                }
            }
        }
        pen += (g.width + LETTER_SPACING) * em;
    }

    // Union of per-stroke coverages on a white page.
    let mut ink = Array2::<f32>::zeros((height, width));
    for s in &segs {
        let (cx, cy) = ((s.a[0] + s.b[0]) / 2.0, (s.a[1] + s.b[1]) / 2.0);
        let reach = ((s.a[0] - s.b[0]).powi(2) + (s.a[1] - s.b[1]).powi(2)).sqrt() / 2.0
            + s.half
            + 1.0;
        splat(&mut ink, cx, cy, reach, |x, y| {
            (s.half + 0.5 - dist_to_segment([x, y], s.a, s.b)).clamp(0.0, 1.0)
        });
    }
    for (p, r) in &dots {
        splat(&mut ink, p[0], p[1], r + 1.0, |x, y| {
            let d = ((x - p[0]).powi(2) + (y - p[1]).powi(2)).sqrt();
            (r + 0.5 - d).clamp(0.0, 1.0)
        });
    }

    let sigma = style.noise_sigma();
    let darkness = style.darkness() as f64;
    let pixels = Array2::from_shape_fn((height, width), |(y, x)| {
        let v = 1.0 - darkness * ink[(y, x)] as f64 + sigma * normal01(&mut rng);
        T::of(v.clamp(0.0, 1.0))
    });

    Ok(LineImage { id: format!("synth-{}-{seed:016x}", style.name()), pixels })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rendering_is_deterministic() {
        let a = render_synthetic_line::<f32>("a", RenderStyle::Printed, 1).unwrap();
        let b = render_synthetic_line::<f32>("a", RenderStyle::Printed, 1).unwrap();
        assert_eq!(a.pixels, b.pixels);
        let c = render_synthetic_line::<f32>("a", RenderStyle::Printed, 2).unwrap();
        assert_ne!(a.pixels, c.pixels, "different seeds vary the noise");
    }

    #[test]
    fn empty_text_is_rejected() {
        assert!(matches!(
            render_synthetic_line::<f32>("", RenderStyle::Printed, 1),
            Err(Error::EmptyText)
        ));
    }

    #[test]
    fn unsupported_char_is_rejected() {
        match render_synthetic_line::<f32>("aXa", RenderStyle::Printed, 1) {
            Err(Error::UnsupportedChar { ch, style }) => {
                assert_eq!(ch, 'X');
                assert_eq!(style, "printed");
            }
            other => panic!("expected unsupported char, got {other:?}"),
        }
    }

    #[test]
    fn width_grows_with_text_length() {
        let short = render_synthetic_line::<f32>("hi", RenderStyle::Printed, 1).unwrap();
        let long = render_synthetic_line::<f32>("hello world", RenderStyle::Printed, 1).unwrap();
        assert!(long.width() > short.width());
    }

    #[test]
    fn output_has_height_40_and_unit_range() {
        for style in [RenderStyle::Printed, RenderStyle::Cursive] {
            let img = render_synthetic_line::<f64>("the quick fox 42!", style, 9).unwrap();
            assert_eq!(img.height(), 40);
            assert!(img.width() >= 8);
            assert!(img.pixels.iter().all(|v| (0.0..=1.0).contains(v)));
        }
    }

    #[test]
    fn glyphs_leave_visible_ink() {
        // A line must contain genuinely dark pixels, not just noise.
        let img = render_synthetic_line::<f64>("mono", RenderStyle::Printed, 3).unwrap();
        let dark = img.pixels.iter().filter(|v| **v < 0.4).count();
        assert!(dark > 50, "only {dark} dark pixels");
    }

    #[test]
    fn style_parsing_round_trips() {
        assert_eq!("printed".parse::<RenderStyle>().unwrap(), RenderStyle::Printed);
        assert_eq!("cursive".parse::<RenderStyle>().unwrap(), RenderStyle::Cursive);
        assert!(matches!(
            "gothic".parse::<RenderStyle>(),
            Err(Error::UnknownStyle(s)) if s == "gothic"
        ));
    }
}
