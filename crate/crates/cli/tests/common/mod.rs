//! Fixture generation, a double-precision reference pipeline and helpers
//! shared by the integration tests.
#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::Command;

use ezdps::dwt::DwtParams;
use ezdps::model::{DatasetFile, LabeledSample, ModelFile, SampleFile};
use ezdps::pca::PcaParams;
use ezdps::svm::{SvmClass, SvmParams};
use ezdps::Fxp;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

pub const SECRET: [u8; 32] = [7; 32];

pub struct Fixture {
    pub name: &'static str,
    pub m: usize,
    pub k: usize,
    pub s: usize,
    /// Support vectors drawn from each class.
    pub per_class: usize,
    pub seed: u64,
}

pub const FIXTURES: [Fixture; 3] = [
    Fixture { name: "blobs_m16_s2", m: 16, k: 4, s: 2, per_class: 3, seed: 11 },
    Fixture { name: "blobs_m16_s4", m: 16, k: 4, s: 4, per_class: 3, seed: 12 },
    Fixture { name: "blobs_m64_s4", m: 64, k: 6, s: 4, per_class: 3, seed: 13 },
];

pub const GAMMA: f64 = 0.05;
pub const ETA: f64 = 0.05;
const NOISE: f64 = 0.25;

pub fn fixtures_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

pub fn fx(v: f64) -> Fxp {
    Fxp::encode(v).unwrap()
}

/// Class centres and a sampler for noisy draws around them.
pub struct Blobs {
    pub centers: Vec<Vec<f64>>,
    rng: ChaCha8Rng,
}

impl Blobs {
    pub fn new(m: usize, s: usize, seed: u64) -> Blobs {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let unit = Normal::new(0.0, 1.0).unwrap();
        let centers = (0..s).map(|_| (0..m).map(|_| unit.sample(&mut rng)).collect()).collect();
        Blobs { centers, rng }
    }

    /// A draw from class `c` (1-based).
    pub fn draw(&mut self, c: usize) -> Vec<f64> {
        let noise = Normal::new(0.0, NOISE).unwrap();
        self.centers[c - 1].iter().map(|v| v + noise.sample(&mut self.rng)).collect()
    }

    pub fn labeled(&mut self, n: usize) -> Vec<(Vec<f64>, usize)> {
        let s = self.centers.len();
        (0..n)
            .map(|_| {
                let c = self.rng.gen_range(1..=s);
                (self.draw(c), c)
            })
            .collect()
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Orthonormal rows spanning the centred class means first, then random
/// directions.
fn basis(rng: &mut ChaCha8Rng, seeds: Vec<Vec<f64>>, m: usize, k: usize) -> Vec<Vec<f64>> {
    let unit = Normal::new(0.0, 1.0).unwrap();
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(k);
    let mut candidates = seeds.into_iter();
    while out.len() < k {
        let mut v = candidates.next().unwrap_or_else(|| (0..m).map(|_| unit.sample(rng)).collect());
        for b in &out {
            let p = dot(&v, b);
            v.iter_mut().zip(b).for_each(|(x, y)| *x -= p * y);
        }
        let n = dot(&v, &v).sqrt();
        if n > 1e-6 {
            out.push(v.into_iter().map(|x| x / n).collect());
        }
    }
    out
}

/// A synthetic model: PCA on the class geometry and, per class, kernels
/// centred on a few of its training draws plus one negatively weighted
/// draw from the next class.
pub fn make_model(fix: &Fixture) -> ModelFile {
    let mut blobs = Blobs::new(fix.m, fix.s, fix.seed);
    let mut rng = ChaCha8Rng::seed_from_u64(fix.seed ^ 0xfeed);
    let train: Vec<Vec<Vec<f64>>> = (1..=fix.s).map(|c| (0..fix.per_class + 1).map(|_| blobs.draw(c)).collect()).collect();
    let all: Vec<&Vec<f64>> = train.iter().flatten().collect();
    let mean: Vec<f64> = (0..fix.m).map(|j| all.iter().map(|x| x[j]).sum::<f64>() / all.len() as f64).collect();
    let centred = blobs.centers.iter().map(|c| c.iter().zip(&mean).map(|(a, b)| a - b).collect()).collect();
    let v = basis(&mut rng, centred, fix.m, fix.k);

    let dwt = DwtParams::db4(fx(ETA), 1);
    let pca = PcaParams {
        m: fix.m,
        k: fix.k,
        x_bar: mean.iter().map(|v| fx(*v)).collect(),
        v: v.iter().map(|r| r.iter().map(|x| fx(*x)).collect()).collect(),
    };
    let mut model = ModelFile::new(dwt, pca, SvmParams { s: fix.s, gamma: fx(GAMMA), classes: vec![] });
    let project = |x: &[f64]| -> Vec<f64> { Oracle::new(&model).features(x) };
    let mut classes = Vec::with_capacity(fix.s);
    for c in 0..fix.s {
        let mut sv: Vec<Vec<Fxp>> = train[c][..fix.per_class].iter().map(|x| project(x).iter().map(|v| fx(*v)).collect()).collect();
        let mut coef = vec![fx(1.0 / fix.per_class as f64); fix.per_class];
        let other = &train[(c + 1) % fix.s][fix.per_class];
        sv.push(project(other).iter().map(|v| fx(*v)).collect());
        coef.push(fx(-0.25));
        classes.push(SvmClass { sv, coef, bias: fx(-0.001 * c as f64) });
    }
    model.svm.classes = classes;
    model.validate().unwrap();
    model
}

/// Labeled draws quantized to Q31.32, labels are the generating class.
pub fn make_samples(fix: &Fixture, n: usize, seed: u64) -> DatasetFile {
    let mut blobs = Blobs::new(fix.m, fix.s, fix.seed);
    blobs.rng = ChaCha8Rng::seed_from_u64(seed);
    DatasetFile::new(
        blobs.labeled(n).into_iter().map(|(x, t)| LabeledSample { x: x.iter().map(|v| fx(*v)).collect(), t }).collect(),
    )
}

/// Double-precision evaluation of the same pipeline from the dequantized
/// model parameters.
pub struct Oracle {
    h: Vec<f64>,
    g: Vec<f64>,
    h_bar: Vec<f64>,
    g_bar: Vec<f64>,
    eta: f64,
    levels: usize,
    x_bar: Vec<f64>,
    v: Vec<Vec<f64>>,
    gamma: f64,
    classes: Vec<(Vec<Vec<f64>>, Vec<f64>, f64)>,
}

fn deq(v: &[Fxp]) -> Vec<f64> {
    v.iter().map(|x| x.decode()).collect()
}

impl Oracle {
    pub fn new(m: &ModelFile) -> Oracle {
        Oracle {
            h: deq(&m.dwt.h),
            g: deq(&m.dwt.g),
            h_bar: deq(&m.dwt.h_bar),
            g_bar: deq(&m.dwt.g_bar),
            eta: m.dwt.eta.decode(),
            levels: m.dwt.levels,
            x_bar: deq(&m.pca.x_bar),
            v: m.pca.v.iter().map(|r| deq(r)).collect(),
            gamma: m.svm.gamma.decode(),
            classes: m.svm.classes.iter().map(|c| (c.sv.iter().map(|s| deq(s)).collect(), deq(&c.coef), c.bias.decode())).collect(),
        }
    }

    fn filter(x: &[f64], k: &[f64], i: usize) -> f64 {
        k.iter().enumerate().map(|(j, kj)| kj * x[(2 * i + j) % x.len()]).sum()
    }

    pub fn denoise(&self, x: &[f64]) -> Vec<f64> {
        let mut input = x.to_vec();
        let mut details = vec![];
        for _ in 0..self.levels {
            let t = input.len() / 2;
            let a: Vec<f64> = (0..t).map(|i| Self::filter(&input, &self.h, i)).collect();
            let d: Vec<f64> = (0..t)
                .map(|i| Self::filter(&input, &self.g, i))
                .map(|z| z.signum() * (z.abs() - self.eta).max(0.0))
                .collect();
            details.push(d);
            input = a;
        }
        for d in details.iter().rev() {
            let y: Vec<f64> = input.iter().zip(d).flat_map(|(a, b)| [*a, *b]).collect();
            let n = y.len();
            let c = self.h_bar.len();
            let mut v = vec![0.0; n];
            for i in 0..n / 2 {
                v[(2 * i + c - 2) % n] = Self::filter(&y, &self.h_bar, i);
                v[(2 * i + c - 1) % n] = Self::filter(&y, &self.g_bar, i);
            }
            input = v;
        }
        input
    }

    pub fn features(&self, x: &[f64]) -> Vec<f64> {
        let xh = self.denoise(x);
        let diff: Vec<f64> = xh.iter().zip(&self.x_bar).map(|(a, b)| a - b).collect();
        self.v.iter().map(|r| dot(r, &diff)).collect()
    }

    pub fn decision(&self, x: &[f64]) -> Vec<f64> {
        let xt = self.features(x);
        self.classes
            .iter()
            .map(|(sv, coef, b)| {
                sv.iter()
                    .zip(coef)
                    .map(|(s, d)| {
                        let dist: f64 = s.iter().zip(&xt).map(|(a, b)| (a - b) * (a - b)).sum();
                        d * (-self.gamma * dist).exp()
                    })
                    .sum::<f64>()
                    + b
            })
            .collect()
    }

    /// 1-based arg max, lowest index on ties.
    pub fn label(&self, x: &[f64]) -> usize {
        let f = self.decision(x);
        let mut y = 0;
        for i in 1..f.len() {
            if f[i] > f[y] {
                y = i;
            }
        }
        y + 1
    }
}

pub fn load_model(name: &str) -> ModelFile {
    ModelFile::load(&fixtures_dir().join(format!("{name}.model.json"))).unwrap()
}

pub fn load_dataset(file: &str) -> DatasetFile {
    DatasetFile::load(&fixtures_dir().join(file)).unwrap()
}

pub fn write_sample(dir: &Path, name: &str, x: &[Fxp]) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, SampleFile::new(x.to_vec()).to_json()).unwrap();
    p
}

pub fn ezdps() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ezdps"))
}

pub struct Run {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

pub fn run(args: &[&str]) -> Run {
    let out = ezdps().args(args).output().unwrap();
    Run {
        code: out.status.code().unwrap_or(-1),
        stdout: String::from_utf8_lossy(&out.stdout).into_owned(),
        stderr: String::from_utf8_lossy(&out.stderr).into_owned(),
    }
}
