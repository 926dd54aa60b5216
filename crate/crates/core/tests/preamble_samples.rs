use std::path::{Path, PathBuf};
use std::process::Command;

use rrs_core::staticval::synthesize_preamble;
use rrs_core::LanguageHint;

fn samples() -> Vec<PathBuf> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/fixtures/preamble");
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "c"))
        .collect();
    files.sort();
    files
}

#[test]
fn ten_samples_keep_function_text() {
    let files = samples();
    assert!(files.len() >= 10);
    for f in &files {
        let src = std::fs::read_to_string(f).unwrap();
        let p = synthesize_preamble(&src, LanguageHint::C).unwrap();
        assert!(p.source_with_preamble.ends_with(&src), "{}", f.display());
        let again = synthesize_preamble(&p.source_with_preamble, LanguageHint::C).unwrap();
        assert!(again.declarations.is_empty(), "{}: {:?}", f.display(), again.declarations);
    }
}

#[test]
fn self_contained_function_gets_empty_preamble() {
    let src = std::fs::read_to_string(samples().into_iter().find(|p| p.ends_with("10_selfcontained.c")).unwrap()).unwrap();
    assert!(synthesize_preamble(&src, LanguageHint::C).unwrap().declarations.is_empty());
}

// Skipped when clang is absent.
#[test]
fn clang_accepts_preambled_samples() {
    if Command::new("clang").arg("--version").output().is_err() {
        eprintln!("skipping: clang not installed");
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    for f in samples() {
        let src = std::fs::read_to_string(&f).unwrap();
        let p = synthesize_preamble(&src, LanguageHint::C).unwrap();
        let unit = dir.path().join(f.file_name().unwrap());
        std::fs::write(&unit, &p.source_with_preamble).unwrap();
        let out = Command::new("clang")
            .args(["-fsyntax-only", "-std=gnu11", "-Wno-everything"])
            .arg(&unit)
            .output()
            .unwrap();
        assert!(
            out.status.success(),
            "{}\n{}\n{}",
            f.display(),
            p.source_with_preamble,
            String::from_utf8_lossy(&out.stderr)
        );
    }
}
