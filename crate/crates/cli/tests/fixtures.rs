mod common;

use common::*;
use ezdps::model::{DatasetFile, LabeledSample};
use ezdps::pipeline;

/// PoA dataset: M = 20 draws whose labels match the fixed-point prediction on
/// exactly 17.
fn poa_dataset() -> DatasetFile {
    let fix = &FIXTURES[0];
    let model = make_model(fix);
    let d = make_samples(fix, 20, 901);
    let samples = d
        .samples
        .into_iter()
        .enumerate()
        .map(|(i, s)| {
            let y = pipeline::infer(&model, &s.x).unwrap().label();
            let t = if i % 7 == 3 { y % fix.s + 1 } else { y };
            LabeledSample { x: s.x, t }
        })
        .collect();
    DatasetFile::new(samples)
}

#[test]
#[ignore = "rewrites tests/fixtures"]
fn regenerate_fixtures() {
    let dir = fixtures_dir();
    std::fs::create_dir_all(&dir).unwrap();
    for (i, fix) in FIXTURES.iter().enumerate() {
        let model = make_model(fix);
        std::fs::write(dir.join(format!("{}.model.json", fix.name)), model.to_json()).unwrap();
        let samples = make_samples(fix, 40, 100 + i as u64);
        std::fs::write(dir.join(format!("{}.samples.json", fix.name)), samples.to_json()).unwrap();
    }
    std::fs::write(dir.join("poa_m20_k17.json"), poa_dataset().to_json()).unwrap();
}

#[test]
fn frozen_fixtures_load() {
    for fix in &FIXTURES {
        let model = load_model(fix.name);
        assert_eq!((model.pca.m, model.pca.k, model.svm.s, model.dwt.levels), (fix.m, fix.k, fix.s, 1));
        let d = load_dataset(&format!("{}.samples.json", fix.name));
        assert_eq!(d.samples.len(), 40);
        assert!(d.samples.iter().all(|s| s.x.len() == fix.m && s.t <= fix.s));
    }
    let d = load_dataset("poa_m20_k17.json");
    let model = load_model(FIXTURES[0].name);
    let tr = ezdps::zkpoa::trace(&model, &d).unwrap();
    let t: Vec<usize> = d.samples.iter().map(|s| s.t).collect();
    assert_eq!((d.samples.len(), tr.correct(&t)), (20, 17));
}

#[test]
fn models_separate_their_blobs() {
    for fix in &FIXTURES {
        let model = load_model(fix.name);
        let d = load_dataset(&format!("{}.samples.json", fix.name));
        let right = d.samples.iter().filter(|s| pipeline::infer(&model, &s.x).unwrap().label() == s.t).count();
        assert!(right >= 36, "{}: {right}/40", fix.name);
    }
}
