//! Corpora of text-line images.
//!
//! Lines come from the built-in synthetic renderer or from a manifest of
//! PNG files on disk. Either way every image is normalized to height 40
//! with intensities in [0, 1], and annotated entries carry an exact
//! index round trip of their transcription.

pub mod font;
mod manifest;
pub mod render;

use std::collections::{BTreeSet, HashMap, HashSet};

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub use manifest::{load_manifest, load_png, save_png, write_manifest};
pub use render::{render_synthetic_line, RenderStyle, LINE_HEIGHT};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::seeds::derive_seed;

/// Single-channel text-line image, intensities in [0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct LineImage<T: Scalar> {
    pub id: String,
    /// `[height, width]`, row 0 at the top.
    pub pixels: Array2<T>,
}

impl<T: Scalar> LineImage<T> {
    pub fn height(&self) -> usize {
        self.pixels.nrows()
    }

    pub fn width(&self) -> usize {
        self.pixels.ncols()
    }

    /// Transformer frames this line produces after width padding.
    pub fn frames(&self) -> usize {
        self.width().div_ceil(8)
    }
}

/// Ordered character inventory. The blank index used by the recognizer
/// is one past the last real symbol and never maps to a character.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Charset {
    symbols: Vec<char>,
    index: HashMap<char, usize>,
}

impl Charset {
    /// Deduplicates and sorts, so equal symbol sets compare equal.
    pub fn from_symbols(chars: impl IntoIterator<Item = char>) -> Self {
        let set: BTreeSet<char> = chars.into_iter().collect();
        let symbols: Vec<char> = set.into_iter().collect();
        let index = symbols.iter().enumerate().map(|(i, c)| (*c, i)).collect();
        Charset { symbols, index }
    }

    /// All characters the bundled font can render.
    pub fn full() -> Self {
        Charset::from_symbols(font::supported_chars())
    }

    pub fn symbols(&self) -> &[char] {
        &self.symbols
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn blank_index(&self) -> usize {
        self.symbols.len()
    }

    /// Logit width for a recognizer over this charset (symbols + blank).
    pub fn class_count(&self) -> usize {
        self.symbols.len() + 1
    }

    pub fn index_of(&self, ch: char) -> Option<usize> {
        self.index.get(&ch).copied()
    }

    pub fn char_at(&self, index: usize) -> Option<char> {
        self.symbols.get(index).copied()
    }

    pub fn encode(&self, text: &str) -> Result<Vec<usize>> {
        text.chars()
            .map(|ch| self.index_of(ch).ok_or(Error::CharsetMiss(ch)))
            .collect()
    }

    pub fn decode(&self, indices: &[usize]) -> Result<String> {
        indices
            .iter()
            .map(|&i| {
                self.char_at(i)
                    .ok_or_else(|| Error::Config(format!("label index {i} outside charset")))
            })
            .collect()
    }
}

/// Text plus its exact index encoding.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transcription {
    pub text: String,
    pub indices: Vec<usize>,
}

impl Transcription {
    pub fn new(text: &str, charset: &Charset) -> Result<Self> {
        let indices = charset.encode(text)?;
        Ok(Transcription { text: text.to_string(), indices })
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

#[derive(Debug, Clone)]
pub struct Entry<T: Scalar> {
    pub image: LineImage<T>,
    pub transcription: Option<Transcription>,
}

/// Immutable set of lines sharing one charset.
#[derive(Debug, Clone)]
pub struct Corpus<T: Scalar> {
    pub name: String,
    pub entries: Vec<Entry<T>>,
    pub charset: Charset,
}

impl<T: Scalar> Corpus<T> {
    /// Validates id uniqueness and charset coverage of annotations.
    pub fn new(name: &str, entries: Vec<Entry<T>>, charset: Charset) -> Result<Self> {
        let mut seen = HashSet::new();
        for e in &entries {
            if !seen.insert(e.image.id.clone()) {
                return Err(Error::DuplicateId(e.image.id.clone()));
            }
            if let Some(t) = &e.transcription {
                for ch in t.text.chars() {
                    if charset.index_of(ch).is_none() {
                        return Err(Error::CharsetMiss(ch));
                    }
                }
            }
        }
        Ok(Corpus { name: name.to_string(), entries, charset })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|e| e.image.id.as_str())
    }

    /// Deterministic sample of `n` entries without replacement.
    ///
    /// One seeded shuffle is prefix-taken, so for a fixed seed the size-m
    /// subset is contained in every size-n subset with m <= n.
    pub fn subset(&self, n: usize, seed: u64) -> Result<Corpus<T>> {
        if n > self.entries.len() {
            return Err(Error::SubsetTooLarge { requested: n, available: self.entries.len() });
        }
        let mut order: Vec<usize> = (0..self.entries.len()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, "subset", 0));
        order.shuffle(&mut rng);
        let entries = order[..n].iter().map(|&i| self.entries[i].clone()).collect();
        Ok(Corpus {
            name: format!("{}-sub{n}", self.name),
            entries,
            charset: self.charset.clone(),
        })
    }
}

/// Aspect-preserving bilinear resize to height 40 (width at least 8).
pub fn normalize_height<T: Scalar>(image: &LineImage<T>) -> Result<LineImage<T>> {
    let (h, w) = image.pixels.dim();
    if h == 0 || w == 0 {
        return Err(Error::ZeroAreaImage);
    }
    let th = LINE_HEIGHT;
    if h == th {
        let mut out = image.clone();
        if out.width() < 8 {
            out.pixels = pad_right(&out.pixels, 8);
        }
        return Ok(out);
    }
    let scale = th as f64 / h as f64;
    let tw = ((w as f64 * scale).round() as usize).max(8);
    let pixels = Array2::from_shape_fn((th, tw), |(y, x)| {
        let sy = ((y as f64 + 0.5) / scale - 0.5).clamp(0.0, (h - 1) as f64);
        let sx = ((x as f64 + 0.5) * w as f64 / tw as f64 - 0.5).clamp(0.0, (w - 1) as f64);
        let (y0, x0) = (sy.floor() as usize, sx.floor() as usize);
        let (y1, x1) = ((y0 + 1).min(h - 1), (x0 + 1).min(w - 1));
        let (fy, fx) = (sy - y0 as f64, sx - x0 as f64);
        let p = |yy: usize, xx: usize| image.pixels[(yy, xx)].to_f64c();
        let v = p(y0, x0) * (1.0 - fy) * (1.0 - fx)
            + p(y0, x1) * (1.0 - fy) * fx
            + p(y1, x0) * fy * (1.0 - fx)
            + p(y1, x1) * fy * fx;
        T::of(v.clamp(0.0, 1.0))
    });
    Ok(LineImage { id: image.id.clone(), pixels })
}

fn pad_right<T: Scalar>(pixels: &Array2<T>, min_width: usize) -> Array2<T> {
    let (h, w) = pixels.dim();
    if w >= min_width {
        return pixels.clone();
    }
    let mut out = Array2::from_elem((h, min_width), T::one());
    out.slice_mut(ndarray::s![.., ..w]).assign(pixels);
    out
}

const LEXICON: &[&str] = &[
    "the", "of", "and", "to", "in", "is", "was", "for", "with", "as", "his", "on", "that",
    "by", "at", "from", "are", "this", "be", "an", "it", "not", "or", "have", "but", "they",
    "which", "one", "you", "were", "her", "all", "she", "there", "would", "their", "we",
    "him", "been", "has", "when", "who", "will", "more", "no", "if", "out", "so", "said",
    "what", "up", "its", "about", "into", "than", "them", "can", "only", "other", "new",
    "some", "could", "time", "these", "two", "may", "then", "do", "first", "any", "my",
    "now", "such", "like", "our", "over", "man", "me", "even", "most", "made", "after",
    "also", "did", "many", "before", "must", "through", "years", "where", "much", "your",
    "way", "well", "down", "should", "because", "each", "just", "those", "people", "how",
    "too", "little", "state", "good", "very", "make", "world", "still", "own", "see",
    "men", "work", "long", "get", "here", "between", "both", "life", "being", "under",
    "never", "day", "same", "another", "know", "while", "last", "might", "great", "old",
    "year", "off", "come", "since", "against", "go", "came", "right", "used", "take",
    "three",
];

/// Pseudo-text for one synthetic line.
pub fn synth_text(seed: u64) -> String {
    use rand::Rng;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let words = rng.gen_range(3..=7);
    let mut parts: Vec<String> = Vec::with_capacity(words);
    for _ in 0..words {
        let roll: f64 = rng.gen();
        let mut w = if roll < 0.55 {
            LEXICON[rng.gen_range(0..LEXICON.len())].to_string()
        } else if roll < 0.65 {
            let digits = rng.gen_range(1..=4);
            (0..digits).map(|_| char::from(b'0' + rng.gen_range(0..10u8))).collect()
        } else {
            let len = rng.gen_range(2..=8);
            (0..len).map(|_| char::from(b'a' + rng.gen_range(0..26u8))).collect()
        };
        let deco: f64 = rng.gen();
        if deco < 0.04 {
            w = format!("{w}-{}", LEXICON[rng.gen_range(0..LEXICON.len())]);
        } else if deco < 0.07 {
            w.push_str("'s");
        } else if deco < 0.12 {
            w.push(',');
        } else if deco < 0.14 {
            w.push(*[';', ':'].iter().nth(rng.gen_range(0..2)).unwrap());
        }
        parts.push(w);
    }
    let mut text = parts.join(" ");
    let tail: f64 = rng.gen();
    if tail < 0.15 {
        text.push('.');
    } else if tail < 0.20 {
        text.push(*['?', '!'].iter().nth(rng.gen_range(0..2)).unwrap());
    }
    text
}

/// Fully synthetic annotated corpus over the font's complete charset.
pub fn synth_corpus<T: Scalar>(style: RenderStyle, lines: usize, seed: u64) -> Result<Corpus<T>> {
    let charset = Charset::full();
    let mut entries = Vec::with_capacity(lines);
    for i in 0..lines {
        let text = synth_text(derive_seed(seed, "text", i as u64));
        let mut image =
            render_synthetic_line::<T>(&text, style, derive_seed(seed, "render", i as u64))?;
        image.id = format!("{}-{i:05}", style.name());
        let transcription = Some(Transcription::new(&text, &charset)?);
        entries.push(Entry { image, transcription });
    }
    Corpus::new(&format!("synth-{}-{lines}", style.name()), entries, charset)
}

#[cfg(test)]
mod tests;
