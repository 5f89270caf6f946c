//! Built-in vector stroke font.
//!
//! Glyphs are polylines, elliptic arcs and dots in a unit em box with y
//! growing downward: cap height 0.15, x-height 0.40, baseline 0.78,
//! descender 0.98. One em maps to the 40 px line height at render time.
//! Coverage comes from the distance to each stroke, so the same outlines
//! rasterize cleanly at any thickness.

/// Vertical guides of the em box.
pub const CAP_TOP: f32 = 0.15;
pub const X_TOP: f32 = 0.40;
pub const BASELINE: f32 = 0.78;
pub const DESCENDER: f32 = 0.98;

/// Extra advance between glyphs, in em.
pub const LETTER_SPACING: f32 = 0.10;

pub enum Seg {
    /// Straight stroke through consecutive points.
    Poly(&'static [[f32; 2]]),
    /// Elliptic arc around `c` with radii `r`, parameter from `a0` to
    /// `a1` (radians; 0 points right, pi/2 points down).
    Arc { c: [f32; 2], r: [f32; 2], a0: f32, a1: f32 },
    /// Filled disc.
    Dot([f32; 2]),
}

pub struct Glyph {
    pub ch: char,
    /// Advance width in em (excludes LETTER_SPACING).
    pub width: f32,
    pub segs: &'static [Seg],
}

use std::f32::consts::PI;
const TAU: f32 = 2.0 * PI;

macro_rules! poly {
    ($($p:expr),+ $(,)?) => { Seg::Poly(&[$($p),+]) };
}

static GLYPHS: &[Glyph] = &[
    Glyph { ch: 'a', width: 0.50, segs: &[
        Seg::Arc { c: [0.23, 0.59], r: [0.19, 0.19], a0: 0.0, a1: TAU },
        poly!([0.46, 0.40], [0.46, 0.78]),
    ]},
    Glyph { ch: 'b', width: 0.50, segs: &[
        poly!([0.04, 0.15], [0.04, 0.78]),
        Seg::Arc { c: [0.25, 0.59], r: [0.21, 0.19], a0: 0.0, a1: TAU },
    ]},
    Glyph { ch: 'c', width: 0.46, segs: &[
        Seg::Arc { c: [0.25, 0.59], r: [0.21, 0.19], a0: 0.7, a1: TAU - 0.7 },
    ]},
    Glyph { ch: 'd', width: 0.50, segs: &[
        poly!([0.46, 0.15], [0.46, 0.78]),
        Seg::Arc { c: [0.25, 0.59], r: [0.21, 0.19], a0: 0.0, a1: TAU },
    ]},
    Glyph { ch: 'e', width: 0.48, segs: &[
        poly!([0.05, 0.57], [0.45, 0.57]),
        Seg::Arc { c: [0.25, 0.59], r: [0.20, 0.19], a0: -PI, a1: 0.9 },
    ]},
    Glyph { ch: 'f', width: 0.40, segs: &[
        poly!([0.27, 0.24], [0.27, 0.78]),
        Seg::Arc { c: [0.38, 0.24], r: [0.11, 0.09], a0: PI, a1: 1.6 * PI },
        poly!([0.10, 0.40], [0.42, 0.40]),
    ]},
    Glyph { ch: 'g', width: 0.50, segs: &[
        Seg::Arc { c: [0.23, 0.59], r: [0.19, 0.19], a0: 0.0, a1: TAU },
        poly!([0.42, 0.40], [0.42, 0.85]),
        Seg::Arc { c: [0.28, 0.85], r: [0.14, 0.11], a0: 0.0, a1: PI },
    ]},
    Glyph { ch: 'h', width: 0.50, segs: &[
        poly!([0.05, 0.15], [0.05, 0.78]),
        Seg::Arc { c: [0.25, 0.62], r: [0.20, 0.22], a0: PI, a1: TAU },
        poly!([0.45, 0.62], [0.45, 0.78]),
    ]},
    Glyph { ch: 'i', width: 0.20, segs: &[
        poly!([0.10, 0.40], [0.10, 0.78]),
        Seg::Dot([0.10, 0.28]),
    ]},
    Glyph { ch: 'j', width: 0.26, segs: &[
        poly!([0.15, 0.40], [0.15, 0.85]),
        Seg::Arc { c: [0.02, 0.85], r: [0.13, 0.11], a0: 0.0, a1: 0.9 * PI },
        Seg::Dot([0.15, 0.28]),
    ]},
    Glyph { ch: 'k', width: 0.48, segs: &[
        poly!([0.05, 0.15], [0.05, 0.78]),
        poly!([0.42, 0.40], [0.05, 0.62]),
        poly!([0.16, 0.55], [0.45, 0.78]),
    ]},
    Glyph { ch: 'l', width: 0.20, segs: &[
        poly!([0.10, 0.15], [0.10, 0.78]),
    ]},
    Glyph { ch: 'm', width: 0.55, segs: &[
        poly!([0.04, 0.40], [0.04, 0.78]),
        Seg::Arc { c: [0.15, 0.60], r: [0.11, 0.20], a0: PI, a1: TAU },
        poly!([0.26, 0.60], [0.26, 0.78]),
        Seg::Arc { c: [0.37, 0.60], r: [0.11, 0.20], a0: PI, a1: TAU },
        poly!([0.48, 0.60], [0.48, 0.78]),
    ]},
    Glyph { ch: 'n', width: 0.50, segs: &[
        poly!([0.05, 0.40], [0.05, 0.78]),
        Seg::Arc { c: [0.25, 0.62], r: [0.20, 0.22], a0: PI, a1: TAU },
        poly!([0.45, 0.62], [0.45, 0.78]),
    ]},
    Glyph { ch: 'o', width: 0.50, segs: &[
        Seg::Arc { c: [0.25, 0.59], r: [0.21, 0.19], a0: 0.0, a1: TAU },
    ]},
    Glyph { ch: 'p', width: 0.50, segs: &[
        poly!([0.05, 0.40], [0.05, 0.95]),
        Seg::Arc { c: [0.26, 0.59], r: [0.20, 0.19], a0: 0.0, a1: TAU },
    ]},
    Glyph { ch: 'q', width: 0.50, segs: &[
        Seg::Arc { c: [0.24, 0.59], r: [0.20, 0.19], a0: 0.0, a1: TAU },
        poly!([0.44, 0.40], [0.44, 0.95]),
    ]},
    Glyph { ch: 'r', width: 0.40, segs: &[
        poly!([0.06, 0.40], [0.06, 0.78]),
        Seg::Arc { c: [0.26, 0.62], r: [0.20, 0.22], a0: PI, a1: 1.75 * PI },
    ]},
    Glyph { ch: 's', width: 0.46, segs: &[
        poly!(
            [0.42, 0.44], [0.25, 0.40], [0.08, 0.47], [0.25, 0.58],
            [0.42, 0.70], [0.25, 0.78], [0.08, 0.73],
        ),
    ]},
    Glyph { ch: 't', width: 0.42, segs: &[
        poly!([0.22, 0.20], [0.22, 0.72], [0.26, 0.78], [0.40, 0.76]),
        poly!([0.06, 0.40], [0.40, 0.40]),
    ]},
    Glyph { ch: 'u', width: 0.50, segs: &[
        poly!([0.05, 0.40], [0.05, 0.58]),
        Seg::Arc { c: [0.25, 0.58], r: [0.20, 0.20], a0: PI, a1: 0.0 },
        poly!([0.45, 0.40], [0.45, 0.78]),
    ]},
    Glyph { ch: 'v', width: 0.50, segs: &[
        poly!([0.04, 0.40], [0.25, 0.78], [0.46, 0.40]),
    ]},
    Glyph { ch: 'w', width: 0.56, segs: &[
        poly!([0.02, 0.40], [0.15, 0.78], [0.27, 0.48], [0.39, 0.78], [0.52, 0.40]),
    ]},
    Glyph { ch: 'x', width: 0.50, segs: &[
        poly!([0.05, 0.40], [0.45, 0.78]),
        poly!([0.45, 0.40], [0.05, 0.78]),
    ]},
    Glyph { ch: 'y', width: 0.50, segs: &[
        poly!([0.05, 0.40], [0.25, 0.78]),
        poly!([0.45, 0.40], [0.16, 0.95]),
    ]},
    Glyph { ch: 'z', width: 0.48, segs: &[
        poly!([0.06, 0.40], [0.44, 0.40], [0.06, 0.78], [0.44, 0.78]),
    ]},
    Glyph { ch: '0', width: 0.50, segs: &[
        Seg::Arc { c: [0.25, 0.465], r: [0.20, 0.315], a0: 0.0, a1: TAU },
    ]},
    Glyph { ch: '1', width: 0.46, segs: &[
        poly!([0.13, 0.26], [0.27, 0.15], [0.27, 0.78]),
        poly!([0.12, 0.78], [0.42, 0.78]),
    ]},
    Glyph { ch: '2', width: 0.50, segs: &[
        poly!([0.07, 0.30], [0.15, 0.15], [0.35, 0.15], [0.43, 0.30], [0.06, 0.78], [0.45, 0.78]),
    ]},
    Glyph { ch: '3', width: 0.50, segs: &[
        poly!(
            [0.08, 0.20], [0.28, 0.15], [0.42, 0.28], [0.24, 0.45],
            [0.44, 0.60], [0.28, 0.78], [0.07, 0.72],
        ),
    ]},
    Glyph { ch: '4', width: 0.50, segs: &[
        poly!([0.34, 0.78], [0.34, 0.15], [0.06, 0.58], [0.46, 0.58]),
    ]},
    Glyph { ch: '5', width: 0.50, segs: &[
        poly!([0.42, 0.15], [0.10, 0.15], [0.08, 0.45]),
        poly!([0.08, 0.45], [0.30, 0.42], [0.44, 0.58], [0.30, 0.78], [0.08, 0.72]),
    ]},
    Glyph { ch: '6', width: 0.50, segs: &[
        Seg::Arc { c: [0.25, 0.60], r: [0.19, 0.18], a0: 0.0, a1: TAU },
        poly!([0.40, 0.17], [0.12, 0.50]),
    ]},
    Glyph { ch: '7', width: 0.48, segs: &[
        poly!([0.06, 0.15], [0.45, 0.15], [0.18, 0.78]),
    ]},
    Glyph { ch: '8', width: 0.50, segs: &[
        Seg::Arc { c: [0.25, 0.30], r: [0.15, 0.15], a0: 0.0, a1: TAU },
        Seg::Arc { c: [0.25, 0.615], r: [0.18, 0.165], a0: 0.0, a1: TAU },
    ]},
    Glyph { ch: '9', width: 0.50, segs: &[
        Seg::Arc { c: [0.25, 0.33], r: [0.18, 0.17], a0: 0.0, a1: TAU },
        poly!([0.43, 0.30], [0.32, 0.78]),
    ]},
    Glyph { ch: ' ', width: 0.45, segs: &[] },
    Glyph { ch: '.', width: 0.20, segs: &[
        Seg::Dot([0.08, 0.74]),
    ]},
    Glyph { ch: ',', width: 0.20, segs: &[
        poly!([0.10, 0.72], [0.11, 0.78], [0.05, 0.88]),
    ]},
    Glyph { ch: '-', width: 0.42, segs: &[
        poly!([0.05, 0.57], [0.35, 0.57]),
    ]},
    Glyph { ch: '\'', width: 0.16, segs: &[
        poly!([0.08, 0.15], [0.06, 0.28]),
    ]},
    Glyph { ch: ':', width: 0.20, segs: &[
        Seg::Dot([0.08, 0.48]),
        Seg::Dot([0.08, 0.74]),
    ]},
    Glyph { ch: ';', width: 0.20, segs: &[
        Seg::Dot([0.09, 0.48]),
        poly!([0.10, 0.72], [0.11, 0.78], [0.05, 0.88]),
    ]},
    Glyph { ch: '!', width: 0.18, segs: &[
        poly!([0.08, 0.15], [0.08, 0.60]),
        Seg::Dot([0.08, 0.74]),
    ]},
    Glyph { ch: '?', width: 0.46, segs: &[
        poly!(
            [0.06, 0.28], [0.14, 0.15], [0.32, 0.15], [0.40, 0.28],
            [0.36, 0.42], [0.23, 0.50], [0.23, 0.60],
        ),
        Seg::Dot([0.23, 0.75]),
    ]},
];

pub fn glyph(ch: char) -> Option<&'static Glyph> {
    GLYPHS.iter().find(|g| g.ch == ch)
}

/// Every character the font can draw, in charset order.
pub fn supported_chars() -> Vec<char> {
    let mut cs: Vec<char> = GLYPHS.iter().map(|g| g.ch).collect();
    cs.sort_unstable();
    cs
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn glyph_table_is_consistent() {
        let chars = supported_chars();
        assert_eq!(chars.len(), GLYPHS.len(), "duplicate glyph chars");
        for g in GLYPHS {
            assert!(g.width > 0.0);
            for seg in g.segs {
                match seg {
                    Seg::Poly(pts) => {
                        assert!(pts.len() >= 2);
                        for p in *pts {
                            assert!((0.0..=0.6).contains(&p[0]), "{:?} x range", g.ch);
                            assert!((0.0..=1.0).contains(&p[1]), "{:?} y range", g.ch);
                        }
                    }
                    Seg::Arc { c, r, .. } => {
                        assert!(r[0] > 0.0 && r[1] > 0.0);
                        assert!(c[1] - r[1] >= 0.0 && c[1] + r[1] <= 1.0, "{:?} arc y", g.ch);
                    }
                    Seg::Dot(p) => assert!((0.0..=1.0).contains(&p[1])),
                }
            }
        }
        // The full lowercase + digits + punctuation repertoire.
        for ch in "abcdefghijklmnopqrstuvwxyz0123456789 .,-':;!?".chars() {
            assert!(glyph(ch).is_some(), "missing glyph {ch:?}");
        }
    }
}
