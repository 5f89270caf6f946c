use std::collections::HashSet;

use ndarray::Array2;

use super::*;
use crate::error::Error;

fn image_of(id: &str, h: usize, w: usize, v: f64) -> LineImage<f64> {
    LineImage { id: id.to_string(), pixels: Array2::from_elem((h, w), v) }
}

#[test]
fn normalize_keeps_height_40_input() {
    let img = image_of("a", 40, 320, 0.5);
    let out = normalize_height(&img).unwrap();
    assert_eq!(out.pixels, img.pixels);
}

#[test]
fn normalize_halves_80_640() {
    let img = image_of("a", 80, 640, 0.25);
    let out = normalize_height(&img).unwrap();
    assert_eq!(out.pixels.dim(), (40, 320));
    assert!(out.pixels.iter().all(|v| (v - 0.25).abs() < 1e-9));
}

#[test]
fn normalize_rounds_width() {
    // round(100 * 40 / 60) = 67.
    let img = image_of("a", 60, 100, 0.75);
    let out = normalize_height(&img).unwrap();
    assert_eq!(out.pixels.dim(), (40, 67));
}

#[test]
fn normalize_enforces_minimum_width() {
    let img = image_of("a", 400, 30, 0.2);
    let out = normalize_height(&img).unwrap();
    assert_eq!(out.height(), 40);
    assert!(out.width() >= 8);
}

#[test]
fn normalize_rejects_zero_area() {
    let img = LineImage::<f64> { id: "z".into(), pixels: Array2::zeros((0, 10)) };
    assert!(matches!(normalize_height(&img), Err(Error::ZeroAreaImage)));
}

#[test]
fn normalize_preserves_value_range() {
    let img = LineImage::<f64> {
        id: "g".into(),
        pixels: Array2::from_shape_fn((57, 123), |(y, x)| ((y * 31 + x * 7) % 256) as f64 / 255.0),
    };
    let out = normalize_height(&img).unwrap();
    assert_eq!(out.height(), 40);
    assert!(out.pixels.iter().all(|v| (0.0..=1.0).contains(v)));
}

#[test]
fn charset_sorts_and_dedups() {
    let cs = Charset::from_symbols("banana".chars());
    assert_eq!(cs.symbols(), &['a', 'b', 'n']);
    assert_eq!(cs.len(), 3);
    assert_eq!(cs.blank_index(), 3);
    assert_eq!(cs.class_count(), 4);
    assert_eq!(cs.char_at(cs.blank_index()), None, "blank maps to no character");
}

#[test]
fn charset_encode_decode_round_trip() {
    let cs = Charset::full();
    let text = "hello, world 42!";
    let idx = cs.encode(text).unwrap();
    assert!(idx.iter().all(|&i| i != cs.blank_index()));
    assert_eq!(cs.decode(&idx).unwrap(), text);
    assert!(matches!(cs.encode("Uppercase"), Err(Error::CharsetMiss('U'))));
}

#[test]
fn transcription_round_trips() {
    let cs = Charset::full();
    let t = Transcription::new("some text.", &cs).unwrap();
    assert_eq!(cs.decode(&t.indices).unwrap(), t.text);
    assert_eq!(t.len(), 10);
}

#[test]
fn corpus_rejects_duplicate_ids() {
    let cs = Charset::full();
    let entries = vec![
        Entry { image: image_of("x", 40, 16, 1.0), transcription: None },
        Entry { image: image_of("x", 40, 16, 1.0), transcription: None },
    ];
    assert!(matches!(
        Corpus::new("c", entries, cs),
        Err(Error::DuplicateId(id)) if id == "x"
    ));
}

#[test]
fn corpus_rejects_uncovered_annotation() {
    let cs = Charset::from_symbols("ab".chars());
    let t = Transcription { text: "abc".into(), indices: vec![0, 1, 2] };
    let entries = vec![Entry { image: image_of("x", 40, 16, 1.0), transcription: Some(t) }];
    assert!(matches!(Corpus::new("c", entries, cs), Err(Error::CharsetMiss('c'))));
}

#[test]
fn synth_corpus_is_deterministic_and_valid() {
    let a = synth_corpus::<f32>(RenderStyle::Printed, 6, 42).unwrap();
    let b = synth_corpus::<f32>(RenderStyle::Printed, 6, 42).unwrap();
    assert_eq!(a.len(), 6);
    for (ea, eb) in a.entries.iter().zip(b.entries.iter()) {
        assert_eq!(ea.image.id, eb.image.id);
        assert_eq!(ea.image.pixels, eb.image.pixels);
        assert_eq!(ea.transcription, eb.transcription);
    }
    let c = synth_corpus::<f32>(RenderStyle::Printed, 6, 43).unwrap();
    assert_ne!(
        a.entries[0].image.pixels, c.entries[0].image.pixels,
        "different corpus seeds give different lines"
    );
    for e in &a.entries {
        assert_eq!(e.image.height(), 40);
        assert!(e.image.width() >= 8);
        assert!(e.transcription.is_some());
    }
}

#[test]
fn synth_text_stays_in_font_repertoire() {
    for seed in 0..200 {
        let text = synth_text(seed);
        assert!(!text.is_empty());
        for ch in text.chars() {
            assert!(font::glyph(ch).is_some(), "unsupported {ch:?} in {text:?}");
        }
    }
}

#[test]
fn subsets_are_nested_and_stable() {
    let corpus = synth_corpus::<f32>(RenderStyle::Printed, 50, 7).unwrap();
    let small = corpus.subset(10, 99).unwrap();
    let large = corpus.subset(30, 99).unwrap();
    let small_ids: HashSet<_> = small.ids().map(str::to_string).collect();
    let large_ids: HashSet<_> = large.ids().map(str::to_string).collect();
    assert_eq!(small_ids.len(), 10);
    assert_eq!(large_ids.len(), 30);
    assert!(small_ids.is_subset(&large_ids), "prefix property violated");

    let again = corpus.subset(10, 99).unwrap();
    let again_ids: Vec<_> = again.ids().collect();
    assert_eq!(small.ids().collect::<Vec<_>>(), again_ids, "subset is stable");

    let other = corpus.subset(10, 100).unwrap();
    let other_ids: HashSet<_> = other.ids().map(str::to_string).collect();
    assert_ne!(small_ids, other_ids, "different seeds draw different subsets");
}

#[test]
fn subset_edge_sizes() {
    let corpus = synth_corpus::<f32>(RenderStyle::Printed, 12, 3).unwrap();
    let all = corpus.subset(12, 1).unwrap();
    let all_ids: HashSet<_> = all.ids().map(str::to_string).collect();
    assert_eq!(all_ids, corpus.ids().map(str::to_string).collect());
    assert!(corpus.subset(0, 1).unwrap().is_empty());
    assert!(matches!(
        corpus.subset(13, 1),
        Err(Error::SubsetTooLarge { requested: 13, available: 12 })
    ));
}

#[test]
fn manifest_round_trip_preserves_ids_and_text() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = synth_corpus::<f32>(RenderStyle::Cursive, 5, 11).unwrap();
    let manifest = write_manifest(&corpus, dir.path()).unwrap();
    let loaded = load_manifest::<f32>(&manifest).unwrap();
    assert_eq!(loaded.len(), corpus.len());
    for (a, b) in corpus.entries.iter().zip(loaded.entries.iter()) {
        assert_eq!(a.image.id, b.image.id);
        assert_eq!(
            a.transcription.as_ref().map(|t| &t.text),
            b.transcription.as_ref().map(|t| &t.text)
        );
        assert_eq!(a.image.pixels.dim(), b.image.pixels.dim());
        // 8-bit quantization is the only loss.
        for (x, y) in a.image.pixels.iter().zip(b.image.pixels.iter()) {
            assert!((x - y).abs() <= 0.5 / 255.0 + 1e-6);
        }
    }
}

#[test]
fn manifest_supports_unannotated_lines() {
    let dir = tempfile::tempdir().unwrap();
    let mut corpus = synth_corpus::<f32>(RenderStyle::Printed, 3, 5).unwrap();
    corpus.entries[1].transcription = None;
    let manifest = write_manifest(&corpus, dir.path()).unwrap();
    let loaded = load_manifest::<f32>(&manifest).unwrap();
    assert!(loaded.entries[0].transcription.is_some());
    assert!(loaded.entries[1].transcription.is_none());
}

#[test]
fn manifest_reports_malformed_line_number() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("manifest.tsv");
    std::fs::write(&path, "ok\timages/a.png\tfoo\nbadline\n").unwrap();
    match load_manifest::<f32>(&path) {
        Err(Error::Manifest { line, .. }) => assert_eq!(line, 2),
        other => panic!("expected manifest error, got {other:?}"),
    }
}

#[test]
fn manifest_rejects_duplicate_ids() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("manifest.tsv");
    std::fs::write(&path, "a\timages/a.png\na\timages/b.png\n").unwrap();
    match load_manifest::<f32>(&path) {
        Err(Error::Manifest { line, msg, .. }) => {
            assert_eq!(line, 2);
            assert!(msg.contains("duplicate id"), "{msg}");
        }
        other => panic!("expected duplicate id error, got {other:?}"),
    }
}

#[test]
fn manifest_names_missing_image() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("manifest.tsv");
    std::fs::write(&path, "a\timages/gone.png\tabc\n").unwrap();
    match load_manifest::<f32>(&path) {
        Err(Error::MissingImage(p)) => assert!(p.ends_with("images/gone.png")),
        other => panic!("expected missing image error, got {other:?}"),
    }
}

#[test]
fn loaded_entries_satisfy_line_image_invariants() {
    let dir = tempfile::tempdir().unwrap();
    // Save a tall image; loading must normalize it to height 40.
    let img = LineImage::<f32> {
        id: "tall".into(),
        pixels: Array2::from_shape_fn((120, 300), |(y, _)| (y % 2) as f32),
    };
    manifest::save_png(&img, &dir.path().join("images/tall.png")).unwrap();
    std::fs::write(dir.path().join("manifest.tsv"), "tall\timages/tall.png\n").unwrap();
    let corpus = load_manifest::<f32>(&dir.path().join("manifest.tsv")).unwrap();
    let e = &corpus.entries[0];
    assert_eq!(e.image.height(), 40);
    assert_eq!(e.image.width(), 100);
    assert!(e.image.pixels.iter().all(|v| (0.0..=1.0).contains(v)));
}
