//! `ezdps` command-line tool.
//!
//! Exit codes: 0 success or ACCEPT, 1 REJECT or prover refusal, 2 usage,
//! I/O or format error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ezdps::accounting::{self, Dims, Report};
use ezdps::model::{DatasetFile, ModelFile, SampleFile};
use ezdps::pipeline::{self, Challenges, Claim, Digest, ProofBundle, PublicParams, ReferenceBackend};
use ezdps::{zkpoa, Error, Fxp};
use rand::RngCore;
use serde::{Deserialize, Serialize};
use serde_json::json;

#[derive(Parser)]
#[command(name = "ezdps", version, about = "Commit, prove and verify DWT-PCA-SVM inference")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Commit to a model. Reuses the secret file if it exists.
    Commit {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        secret: PathBuf,
        #[arg(long)]
        commitment: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Classify a sample and prove the label.
    Prove {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        secret: PathBuf,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        proof: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    Verify {
        #[arg(long)]
        commitment: PathBuf,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        proof: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Prove that at least floor(psi M) dataset samples are classified correctly.
    ProveAccuracy {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        secret: PathBuf,
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        psi: f64,
        #[arg(long)]
        proof: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    VerifyAccuracy {
        #[arg(long)]
        commitment: PathBuf,
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        psi: f64,
        #[arg(long)]
        proof: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Constraint counts per stage next to the generic baselines.
    Inspect {
        #[arg(long)]
        model: PathBuf,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args, Clone, Copy)]
struct Common {
    /// Machine-readable output.
    #[arg(long)]
    json: bool,
    #[arg(long, default_value_t = pipeline::DEFAULT_SECURITY)]
    security: u32,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CommitmentFile {
    digest: String,
}

enum Failure {
    Reject(String),
    Usage(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Failure {
        match e {
            Error::Refused(_) | Error::Unsatisfied(_) => Failure::Reject(e.to_string()),
            _ => Failure::Usage(e.to_string()),
        }
    }
}

type Outcome = Result<bool, Failure>;

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

fn params(c: &Common) -> Result<PublicParams, Failure> {
    Ok(pipeline::setup(c.security, pipeline::DEFAULT_MAX_MODEL_SIZE)?)
}

fn read_bytes(p: &Path) -> Result<Vec<u8>, Failure> {
    std::fs::read(p).map_err(|e| usage(format!("{}: {e}", p.display())))
}

fn write(p: &Path, bytes: &[u8]) -> Result<(), Failure> {
    std::fs::write(p, bytes).map_err(|e| usage(format!("{}: {e}", p.display())))
}

fn parse_hex32(text: &str, what: &str) -> Result<[u8; 32], Failure> {
    let v = hex::decode(text.trim()).map_err(|e| usage(format!("{what}: {e}")))?;
    v.try_into().map_err(|_| usage(format!("{what}: expected 32 bytes")))
}

fn read_secret(p: &Path) -> Result<[u8; 32], Failure> {
    let text = String::from_utf8(read_bytes(p)?).map_err(|_| usage("secret file is not text"))?;
    parse_hex32(&text, "secret file")
}

fn read_commitment(p: &Path) -> Result<Digest, Failure> {
    let text = String::from_utf8(read_bytes(p)?).map_err(|_| usage("commitment file is not text"))?;
    let f: CommitmentFile = serde_json::from_str(&text).map_err(|e| usage(format!("commitment file: {e}")))?;
    parse_hex32(&f.digest, "commitment digest")
}

fn read_proof(p: &Path, pp: &PublicParams) -> Result<ProofBundle, Failure> {
    Ok(ProofBundle::from_bytes(&read_bytes(p)?, pp.field)?)
}

fn verdict(ok: bool, common: &Common, fields: serde_json::Value) {
    let word = if ok { "ACCEPT" } else { "REJECT" };
    if common.json {
        let mut v = fields;
        v["result"] = json!(word);
        println!("{v}");
    } else {
        println!("{word}");
    }
}

fn commit(model: &Path, secret: &Path, out: Option<&Path>, c: &Common) -> Outcome {
    let pp = params(c)?;
    let model = ModelFile::load(model)?;
    let r = if secret.exists() {
        read_secret(secret)?
    } else {
        let mut r = [0u8; 32];
        rand::rngs::OsRng.fill_bytes(&mut r);
        write(secret, format!("{}\n", hex::encode(r)).as_bytes())?;
        r
    };
    let (cm, _) = pipeline::commit_model(&model, &r, &pp)?;
    let digest = hex::encode(cm);
    if let Some(out) = out {
        let f = CommitmentFile { digest: digest.clone() };
        write(out, serde_json::to_string_pretty(&f).expect("serializes").as_bytes())?;
    }
    if c.json {
        println!("{}", json!({ "digest": digest }));
    } else {
        println!("{digest}");
    }
    Ok(true)
}

fn prove(model: &Path, secret: &Path, input: &Path, proof: &Path, c: &Common) -> Outcome {
    let pp = params(c)?;
    let model = ModelFile::load(model)?;
    let r = read_secret(secret)?;
    let x = SampleFile::load(input)?;
    let (y, bundle) = pipeline::prove(&model, &r, &x.x, &pp, &ReferenceBackend)?;
    let bytes = bundle.to_bytes();
    write(proof, &bytes)?;
    if c.json {
        println!("{}", json!({ "label": y, "proof_bytes": bytes.len() }));
    } else {
        println!("label {y}");
    }
    Ok(true)
}

fn verify(commitment: &Path, input: &Path, proof: &Path, c: &Common) -> Outcome {
    let pp = params(c)?;
    let cm = read_commitment(commitment)?;
    let x = SampleFile::load(input)?;
    let bundle = read_proof(proof, &pp)?;
    let Claim::Inference { y } = bundle.claim else {
        return Err(usage("not an inference proof"));
    };
    let ok = pipeline::verify(&cm, &x.x, y as usize, &bundle, &pp, &ReferenceBackend);
    verdict(ok, c, json!({ "label": y }));
    Ok(ok)
}

fn prove_accuracy(model: &Path, secret: &Path, dataset: &Path, psi: f64, proof: &Path, c: &Common) -> Outcome {
    let pp = params(c)?;
    let model = ModelFile::load(model)?;
    let r = read_secret(secret)?;
    let d = DatasetFile::load(dataset)?;
    let k = zkpoa::threshold(psi, d.samples.len())?;
    let bundle = zkpoa::prove(&model, &r, &d, k, &pp, &ReferenceBackend)?;
    let bytes = bundle.to_bytes();
    write(proof, &bytes)?;
    if c.json {
        println!("{}", json!({ "k": k, "M": d.samples.len(), "proof_bytes": bytes.len() }));
    } else {
        println!("proved {k} of {} correct", d.samples.len());
    }
    Ok(true)
}

fn verify_accuracy(commitment: &Path, dataset: &Path, psi: f64, proof: &Path, c: &Common) -> Outcome {
    let pp = params(c)?;
    let cm = read_commitment(commitment)?;
    let d = DatasetFile::load(dataset)?;
    let k = zkpoa::threshold(psi, d.samples.len())?;
    let bundle = read_proof(proof, &pp)?;
    if !matches!(bundle.claim, Claim::Accuracy { .. }) {
        return Err(usage("not an accuracy proof"));
    }
    let ok = zkpoa::verify(&cm, &d, k, &bundle, &pp, &ReferenceBackend);
    verdict(ok, c, json!({ "k": k, "M": d.samples.len() }));
    Ok(ok)
}

/// Stage totals of the whole inference system for a loadable model.
fn system_counts(model: &ModelFile, pp: &PublicParams) -> Result<serde_json::Value, Failure> {
    let shape = model.shape();
    let x = vec![Fxp(0); shape.m];
    let cs = pipeline::build_inference(pp, &shape, &x, 1, None, &Challenges::placeholder(pp.field))?;
    let n = cs.counts();
    let mut v = json!({ "total": n.total });
    for p in ["dwt.decompose", "dwt.threshold", "dwt.reconstruct", "pca", "svm.kernel", "svm.decision", "svm.classify"] {
        v[p] = json!(n.prefix(p));
    }
    Ok(v)
}

fn print_report(r: &Report, system: &serde_json::Value) {
    let d = &r.dims;
    println!("m={} k={} c={} n={} s={} t={} levels={}", d.m, d.k, d.c, d.n, d.s(), d.t(), d.levels);
    println!("{:<28} {:>12} {:>12} {:>12}", "stage", "ezdps", "formula", "generic");
    for row in &r.rows {
        println!("{:<28} {:>12} {:>12} {:>12}", row.stage, row.ezdps, row.formula, row.generic);
    }
    println!("{:<28} {:>12}", "svm decision values", r.svm_decision);
    if let Some(obj) = system.as_object() {
        println!("whole system:");
        for (k, v) in obj {
            println!("  {k:<26} {v:>12}");
        }
    }
}

fn inspect(model: &Path, c: &Common) -> Outcome {
    let pp = params(c)?;
    let model = ModelFile::load_structure(model)?;
    let shape = model.shape();
    // Signal lengths that are not a power of two cannot be built end to end;
    // their decomposition is accounted down to length c.
    let (dims, system) = if model.validate().is_ok() {
        (Dims::from_shape(&shape), system_counts(&model, &pp)?)
    } else {
        (Dims::full(shape.m, shape.c, shape.k, shape.sv_counts.clone()), serde_json::Value::Null)
    };
    let report = accounting::report(&dims)?;
    if c.json {
        let d = &report.dims;
        let v = json!({
            "m": d.m, "k": d.k, "c": d.c, "n": d.n, "s": d.s(), "t": d.t(), "levels": d.levels,
            "rows": report.rows,
            "svm_decision": report.svm_decision,
            "system": system,
        });
        println!("{v}");
    } else {
        print_report(&report, &system);
    }
    Ok(true)
}

fn run(cli: Cli) -> Outcome {
    match &cli.cmd {
        Cmd::Commit { model, secret, commitment, common } => commit(model, secret, commitment.as_deref(), common),
        Cmd::Prove { model, secret, input, proof, common } => prove(model, secret, input, proof, common),
        Cmd::Verify { commitment, input, proof, common } => verify(commitment, input, proof, common),
        Cmd::ProveAccuracy { model, secret, dataset, psi, proof, common } => {
            prove_accuracy(model, secret, dataset, *psi, proof, common)
        }
        Cmd::VerifyAccuracy { commitment, dataset, psi, proof, common } => {
            verify_accuracy(commitment, dataset, *psi, proof, common)
        }
        Cmd::Inspect { model, common } => inspect(model, common),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Reject(msg)) => {
            eprintln!("rejected: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
