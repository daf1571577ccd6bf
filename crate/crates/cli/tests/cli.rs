mod common;

use std::path::{Path, PathBuf};

use common::*;
use ezdps::dwt::DwtParams;
use ezdps::model::ModelFile;
use ezdps::pca::PcaParams;
use ezdps::svm::{SvmClass, SvmParams};
use ezdps::Fxp;
use tempfile::TempDir;

fn model_path(name: &str) -> String {
    fixtures_dir().join(format!("{name}.model.json")).display().to_string()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

struct Session {
    dir: TempDir,
    model: String,
}

impl Session {
    fn new(name: &str) -> Session {
        let dir = TempDir::new().unwrap();
        std::fs::write(dir.path().join("secret.hex"), hex::encode(SECRET)).unwrap();
        Session { dir, model: model_path(name) }
    }

    fn path(&self, f: &str) -> PathBuf {
        self.dir.path().join(f)
    }

    fn commit(&self) -> Run {
        run(&["commit", "--model", &self.model, "--secret", s(&self.path("secret.hex")), "--commitment", s(&self.path("cm.json"))])
    }

    fn prove(&self, input: &Path, proof: &str) -> Run {
        run(&["prove", "--model", &self.model, "--secret", s(&self.path("secret.hex")), "--input", s(input), "--proof", s(&self.path(proof))])
    }

    fn verify(&self, cm: &Path, input: &Path, proof: &str) -> Run {
        run(&["verify", "--commitment", s(cm), "--input", s(input), "--proof", s(&self.path(proof))])
    }
}

#[test]
fn commit_prints_digest_and_reuses_the_secret() {
    let ses = Session::new("blobs_m16_s2");
    let a = ses.commit();
    assert_eq!(a.code, 0, "{}", a.stderr);
    let digest = a.stdout.trim();
    assert_eq!(digest.len(), 64);
    assert!(digest.chars().all(|c| c.is_ascii_hexdigit()));
    assert_eq!(ses.commit().stdout, a.stdout);
    let file = std::fs::read_to_string(ses.path("cm.json")).unwrap();
    assert!(file.contains(digest));

    // A fresh secret is sampled, stored apart from the commitment, and reused.
    let fresh = ses.path("new.hex");
    let b = run(&["commit", "--model", &ses.model, "--secret", s(&fresh)]);
    assert_eq!(b.code, 0);
    assert_ne!(b.stdout, a.stdout);
    assert_eq!(std::fs::read_to_string(&fresh).unwrap().trim().len(), 64);
    assert_eq!(run(&["commit", "--model", &ses.model, "--secret", s(&fresh)]).stdout, b.stdout);
}

#[test]
fn format_errors_exit_2() {
    let ses = Session::new("blobs_m16_s2");
    let text = std::fs::read_to_string(&ses.model).unwrap();
    let bad = ses.path("bad.json");
    std::fs::write(&bad, &text[..text.len() / 2]).unwrap();
    let r = run(&["commit", "--model", s(&bad), "--secret", s(&ses.path("secret.hex"))]);
    assert_eq!(r.code, 2);
    assert!(r.stderr.contains("model file"), "{}", r.stderr);
    assert_eq!(run(&["commit", "--model", &ses.model]).code, 2);
    assert_eq!(run(&["frobnicate"]).code, 2);
    let r = run(&["commit", "--model", &ses.model, "--secret", s(&ses.path("secret.hex")), "--security", "80"]);
    assert_eq!(r.code, 2);
    let missing = ses.path("nope.json");
    assert_eq!(run(&["inspect", "--model", s(&missing)]).code, 2);
}

#[test]
fn prove_verify_and_rejections() {
    let ses = Session::new("blobs_m16_s4");
    assert_eq!(ses.commit().code, 0);
    let d = load_dataset("blobs_m16_s4.samples.json");
    let x = write_sample(ses.dir.path(), "x.json", &d.samples[0].x);
    let p = ses.prove(&x, "p.bin");
    assert_eq!(p.code, 0, "{}", p.stderr);
    assert!(p.stdout.starts_with("label "));
    let cm = ses.path("cm.json");
    let v = ses.verify(&cm, &x, "p.bin");
    assert_eq!((v.code, v.stdout.trim()), (0, "ACCEPT"));

    let json = run(&["verify", "--commitment", s(&cm), "--input", s(&x), "--proof", s(&ses.path("p.bin")), "--json"]);
    let j: serde_json::Value = serde_json::from_str(&json.stdout).unwrap();
    assert_eq!(j["result"], "ACCEPT");

    // Another model's commitment.
    let other = Session::new("blobs_m16_s2");
    other.commit();
    let v = ses.verify(&other.path("cm.json"), &x, "p.bin");
    assert_eq!((v.code, v.stdout.trim()), (1, "REJECT"));

    // Another sample.
    let x2 = write_sample(ses.dir.path(), "x2.json", &d.samples[1].x);
    assert_eq!(ses.verify(&cm, &x2, "p.bin").code, 1);

    // Corrupted framing is a format error; a flipped payload byte is a reject.
    let bytes = std::fs::read(ses.path("p.bin")).unwrap();
    std::fs::write(ses.path("cut.bin"), &bytes[..bytes.len() - 3]).unwrap();
    assert_eq!(ses.verify(&cm, &x, "cut.bin").code, 2);
    std::fs::write(ses.path("magic.bin"), [b"XZDP", &bytes[4..]].concat()).unwrap();
    assert_eq!(ses.verify(&cm, &x, "magic.bin").code, 2);
    let mut flipped = bytes.clone();
    let last = flipped.len() - 40;
    flipped[last] ^= 1;
    std::fs::write(ses.path("flip.bin"), flipped).unwrap();
    assert_eq!(ses.verify(&cm, &x, "flip.bin").code, 1);
}

#[test]
fn proofs_are_deterministic() {
    let ses = Session::new("blobs_m16_s2");
    let d = load_dataset("blobs_m16_s2.samples.json");
    let x = write_sample(ses.dir.path(), "x.json", &d.samples[3].x);
    ses.prove(&x, "a.bin");
    ses.prove(&x, "b.bin");
    assert_eq!(std::fs::read(ses.path("a.bin")).unwrap(), std::fs::read(ses.path("b.bin")).unwrap());
}

#[test]
fn accuracy_commands() {
    let ses = Session::new("blobs_m16_s2");
    ses.commit();
    let ds = fixtures_dir().join("poa_m20_k17.json");
    let secret = ses.path("secret.hex");
    let prove = |psi: &str, out: &str| {
        run(&["prove-accuracy", "--model", &ses.model, "--secret", s(&secret), "--dataset", s(&ds), "--psi", psi, "--proof", s(&ses.path(out))])
    };
    let verify = |psi: &str, proof: &str| {
        run(&["verify-accuracy", "--commitment", s(&ses.path("cm.json")), "--dataset", s(&ds), "--psi", psi, "--proof", s(&ses.path(proof))])
    };
    let r = prove("0.85", "poa.bin");
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert!(r.stdout.contains("17 of 20"));
    assert_eq!(verify("0.85", "poa.bin").code, 0);
    assert_eq!(verify("0.80", "poa.bin").code, 0);
    assert_eq!(verify("0.90", "poa.bin").code, 1);
    let r = prove("0.90", "refused.bin");
    assert_eq!(r.code, 1);
    assert!(!ses.path("refused.bin").exists());
    assert_eq!(prove("1.5", "x.bin").code, 2);

    // An inference proof is not an accuracy proof.
    let d = load_dataset("blobs_m16_s2.samples.json");
    let x = write_sample(ses.dir.path(), "x.json", &d.samples[0].x);
    ses.prove(&x, "inf.bin");
    assert_eq!(verify("0.85", "inf.bin").code, 2);
}

/// A structurally valid model at the given dimensions with zero parameters.
fn blank_model(m: usize, k: usize, counts: &[usize]) -> ModelFile {
    let z = Fxp(0);
    let pca = PcaParams { m, k, x_bar: vec![z; m], v: vec![vec![z; m]; k] };
    let classes = counts.iter().map(|&t| SvmClass { sv: vec![vec![z; k]; t], coef: vec![z; t], bias: z }).collect();
    ModelFile::new(DwtParams::db4(z, 1), pca, SvmParams { s: counts.len(), gamma: Fxp::encode(0.01).unwrap(), classes })
}

fn inspect_json(model: &ModelFile) -> serde_json::Value {
    let dir = TempDir::new().unwrap();
    let p = dir.path().join("m.json");
    std::fs::write(&p, model.to_json()).unwrap();
    let r = run(&["inspect", "--model", s(&p), "--json"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    serde_json::from_str(&r.stdout).unwrap()
}

fn row<'a>(j: &'a serde_json::Value, stage: &str) -> &'a serde_json::Value {
    j["rows"].as_array().unwrap().iter().find(|r| r["stage"] == stage).unwrap()
}

#[test]
fn inspect_reference_dimensions() {
    let j = inspect_json(&blank_model(750, 33, &[14, 14, 13, 13]));
    assert_eq!((j["m"].as_u64(), j["k"].as_u64(), j["c"].as_u64()), (Some(750), Some(33), Some(4)));
    assert_eq!((j["n"].as_u64(), j["s"].as_u64(), j["t"].as_u64()), (Some(64), Some(4), Some(54)));
    assert_eq!(row(&j, "pca")["ezdps"], 750);
    assert_eq!(row(&j, "pca")["generic"], 24750);
    assert_eq!(row(&j, "thresholding")["ezdps"], 150348);
    assert_eq!(row(&j, "thresholding")["generic"], 248336);
    assert_eq!(row(&j, "svm kernel")["ezdps"], 8702);
    assert_eq!(row(&j, "svm classification")["ezdps"], 602);
    assert!(j["system"].is_null());
}

#[test]
fn inspect_matches_the_built_system() {
    for fix in &FIXTURES {
        let model = load_model(fix.name);
        let j = inspect_json(&model);
        let sys = &j["system"];
        assert_eq!(sys["pca"], row(&j, "pca")["ezdps"]);
        assert_eq!(sys["dwt.threshold"], row(&j, "thresholding")["ezdps"]);
        assert_eq!(sys["dwt.decompose"], row(&j, "decomposition (per level)")["ezdps"]);
        assert_eq!(sys["svm.kernel"], row(&j, "svm kernel")["ezdps"]);
        assert_eq!(sys["svm.classify"], row(&j, "svm classification")["ezdps"]);
        assert_eq!(sys["svm.decision"], j["t"]);
    }
    let text = run(&["inspect", "--model", &model_path("blobs_m16_s2")]);
    assert!(text.stdout.contains("m=16 k=4 c=4 n=64 s=2 t=8"), "{}", text.stdout);
}
