//! Manifest ingestion against real files on disk, and the generator
//! round-trip: synthesize → write → load reproduces the dataset.

use std::collections::BTreeMap;
use std::path::Path;

use fairexpr::schema::{
    load_manifest, AttributeSchema, ExpressionVocab, LoadOptions,
};
use fairexpr::synth::{generate, write_dataset, SynthConfig};
use fairexpr::Error;

fn write_png(path: &Path, side: u32, value: u8) {
    let img = image::RgbImage::from_pixel(side, side, image::Rgb([value, value, value]));
    img.save(path).unwrap();
}

fn raf_vocab() -> ExpressionVocab {
    ExpressionVocab::raf_default()
}

fn gender_schema() -> AttributeSchema {
    AttributeSchema::from_pairs(&[("gender", &["Male", "Female"])]).unwrap()
}

#[test]
fn unsure_gender_rows_are_dropped() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["a.png", "b.png", "c.png"] {
        write_png(&dir.path().join(name), 10, 128);
    }
    let manifest = dir.path().join("manifest.csv");
    std::fs::write(
        &manifest,
        "id,path,expression,gender\n\
         a,a.png,Happy,Male\n\
         b,b.png,Sad,Unsure\n\
         c,c.png,Anger,Female\n",
    )
    .unwrap();
    let entries = load_manifest(&manifest, &gender_schema(), &raf_vocab(), &LoadOptions::default()).unwrap();
    assert_eq!(entries.len(), 2);
    assert_eq!(entries[0].sample.id, "a");
    assert_eq!(entries[1].sample.id, "c");
}

#[test]
fn empty_manifest_loads_empty() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = dir.path().join("manifest.csv");
    std::fs::write(&manifest, "id,path,expression,gender\n").unwrap();
    let entries = load_manifest(&manifest, &gender_schema(), &raf_vocab(), &LoadOptions::default()).unwrap();
    assert!(entries.is_empty());
}

#[test]
fn expression_label_resolves_to_vocabulary_index() {
    let dir = tempfile::tempdir().unwrap();
    write_png(&dir.path().join("x.png"), 10, 99);
    let manifest = dir.path().join("manifest.csv");
    std::fs::write(&manifest, "id,path,expression,gender\nx,x.png,Happy,Male\n").unwrap();
    let entries = load_manifest(&manifest, &gender_schema(), &raf_vocab(), &LoadOptions::default()).unwrap();
    assert_eq!(entries[0].sample.expression, 3);
}

#[test]
fn loaded_images_are_resized_and_normalized() {
    let dir = tempfile::tempdir().unwrap();
    write_png(&dir.path().join("x.png"), 37, 200);
    let manifest = dir.path().join("manifest.csv");
    std::fs::write(&manifest, "id,path,expression,gender\nx,x.png,Fear,Female\n").unwrap();
    let entries = load_manifest(&manifest, &gender_schema(), &raf_vocab(), &LoadOptions::default()).unwrap();
    let image = &entries[0].sample.image;
    assert_eq!(image.dim(), (100, 100, 3));
    assert!(image.iter().all(|&v| (0.0..=1.0).contains(&v)));
    assert!((image[[50, 50, 0]] - 200.0 / 255.0).abs() < 1e-9);
}

#[test]
fn unknown_label_aborts_with_row_number() {
    let dir = tempfile::tempdir().unwrap();
    write_png(&dir.path().join("a.png"), 10, 1);
    write_png(&dir.path().join("b.png"), 10, 1);
    let manifest = dir.path().join("manifest.csv");
    std::fs::write(
        &manifest,
        "id,path,expression,gender\na,a.png,Happy,Male\nb,b.png,Joyful,Male\n",
    )
    .unwrap();
    let err = load_manifest(&manifest, &gender_schema(), &raf_vocab(), &LoadOptions::default()).unwrap_err();
    match err {
        Error::Row { row, message } => {
            assert_eq!(row, 3);
            assert!(message.contains("Joyful"), "{message}");
        }
        other => panic!("expected row error, got {other}"),
    }
}

#[test]
fn unreadable_image_reports_path() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("broken.png"), b"not a png").unwrap();
    let manifest = dir.path().join("manifest.csv");
    std::fs::write(&manifest, "id,path,expression,gender\nz,broken.png,Happy,Male\n").unwrap();
    let err = load_manifest(&manifest, &gender_schema(), &raf_vocab(), &LoadOptions::default()).unwrap_err();
    assert!(err.to_string().contains("broken.png"), "{err}");
}

#[test]
fn missing_manifest_is_fatal_io_error() {
    let err = load_manifest(
        Path::new("/nonexistent/manifest.csv"),
        &gender_schema(),
        &raf_vocab(),
        &LoadOptions::default(),
    )
    .unwrap_err();
    assert!(matches!(err, Error::Io { .. }));
}

#[test]
fn header_mismatch_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = dir.path().join("manifest.csv");
    std::fs::write(&manifest, "id,path,expression,race\n").unwrap();
    let err = load_manifest(&manifest, &gender_schema(), &raf_vocab(), &LoadOptions::default()).unwrap_err();
    assert!(err.to_string().contains("header"), "{err}");
}

#[test]
fn split_tags_are_parsed_when_present() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["a.png", "b.png"] {
        write_png(&dir.path().join(name), 10, 5);
    }
    let manifest = dir.path().join("manifest.csv");
    std::fs::write(
        &manifest,
        "id,path,expression,gender,split\na,a.png,Happy,Male,train\nb,b.png,Sad,Female,test\n",
    )
    .unwrap();
    let entries = load_manifest(&manifest, &gender_schema(), &raf_vocab(), &LoadOptions::default()).unwrap();
    assert_eq!(entries[0].split, Some(fairexpr::schema::Split::Train));
    assert_eq!(entries[1].split, Some(fairexpr::schema::Split::Test));
}

#[test]
fn generator_round_trips_through_manifest_exactly() {
    let schema = AttributeSchema::from_pairs(&[("gender", &["A", "B"])]).unwrap();
    let mut rho = BTreeMap::new();
    rho.insert("gender".to_string(), 0.8);
    let mut marginals = BTreeMap::new();
    marginals.insert("gender".to_string(), vec![0.7, 0.3]);
    let cfg = SynthConfig {
        n_samples: 12,
        image_side: 48,
        k: 4,
        schema: schema.clone(),
        rho,
        marginals,
        noise_std: 0.05,
        seed: 31,
    };
    let vocab = ExpressionVocab::from_labels(&["c0", "c1", "c2", "c3"]).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let (samples, manifest) = write_dataset(&cfg, vocab.labels(), dir.path()).unwrap();

    // Reload at the generator's own side; no exclusions apply.
    let opts = LoadOptions {
        resize_to: cfg.image_side,
        exclude: vec![],
    };
    let entries = load_manifest(&manifest, &schema, &vocab, &opts).unwrap();
    assert_eq!(entries.len(), samples.len());
    for (entry, sample) in entries.iter().zip(&samples) {
        assert_eq!(entry.sample.id, sample.id);
        assert_eq!(entry.sample.expression, sample.expression);
        assert_eq!(entry.sample.attributes, sample.attributes);
        // Images are quantized to the 8-bit grid before writing, so the
        // decoded pixels are bit-identical to the in-memory ones.
        assert_eq!(entry.sample.image, sample.image);
    }
}

#[test]
fn generated_samples_satisfy_ingestion_invariants() {
    let cfg = SynthConfig::raf_default(21, 5);
    let samples = generate(&cfg).unwrap();
    assert_eq!(samples.len(), 21);
    for s in &samples {
        assert_eq!(s.image.dim(), (100, 100, 3));
        assert!(s.image.iter().all(|&v| (0.0..=1.0).contains(&v)));
        cfg.schema.validate_attributes(&s.attributes).unwrap();
        assert!(s.expression < cfg.k);
    }
}
