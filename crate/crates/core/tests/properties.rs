use ezdps::dwt::DwtParams;
use ezdps::field::PrimeField;
use ezdps::model::{ModelFile, ModelShape};
use ezdps::pca::PcaParams;
use ezdps::pipeline::{self, ProofBundle, ReferenceBackend};
use ezdps::svm::{SvmClass, SvmParams};
use ezdps::{Fe, Fxp};
use num_bigint::BigUint;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn fx(v: f64) -> Fxp {
    Fxp::encode(v).unwrap()
}

fn small_model(seed: u64) -> ModelFile {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (m, k) = (8, 3);
    let mut r = |a: f64| fx(rng.gen_range(-a..a));
    let pca = PcaParams {
        m,
        k,
        x_bar: (0..m).map(|_| r(0.5)).collect(),
        v: (0..k).map(|_| (0..m).map(|_| r(0.5)).collect()).collect(),
    };
    let classes = (0..3)
        .map(|_| SvmClass { sv: (0..2).map(|_| (0..k).map(|_| r(1.0)).collect()).collect(), coef: vec![r(1.0), r(1.0)], bias: r(0.1) })
        .collect();
    ModelFile::new(DwtParams::db4(fx(0.05), 1), pca, SvmParams { s: 3, gamma: fx(0.2), classes })
}

fn big(e: &Fe) -> BigUint {
    e.to_biguint()
}

#[test]
fn field_matches_bigint_oracle() {
    let f = PrimeField::ristretto();
    let p = f.modulus().clone();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..10_000 {
        let mut fe = || f.from_u128(rng.gen()) * f.pow2(128) + f.from_u128(rng.gen());
        let (a, b, c) = (fe(), fe(), fe());
        assert_eq!(big(&(a * b + c)), (big(&a) * big(&b) + big(&c)) % &p);
        assert_eq!(big(&(a - b)), (big(&a) + &p - big(&b)) % &p);
    }
}

proptest! {
    #[test]
    fn embedding_is_additive(a in -(1i64 << 61)..(1i64 << 61), b in -(1i64 << 61)..(1i64 << 61)) {
        let f = PrimeField::ristretto();
        let (x, y) = (Fxp(a), Fxp(b));
        prop_assert_eq!((x.checked_add(y).unwrap()).to_field(f), x.to_field(f) + y.to_field(f));
        prop_assert_eq!(Fxp::from_field(&x.to_field(f)).unwrap(), x);
    }

    #[test]
    fn mul_rescale_is_close(a in -1.0e4f64..1.0e4, b in -1.0e4f64..1.0e4) {
        let (x, y) = (fx(a), fx(b));
        // within one unit in the last place of the exact product
        let got = x.mul_rescale(y).unwrap().raw() as i128;
        let exact = x.raw() as i128 * y.raw() as i128;
        prop_assert!((exact - (got << 32)).abs() < 1i128 << 32);
    }

    #[test]
    fn shape_bytes_round_trip(c in 1usize..8, levels in 1usize..5, m in 1usize..5000, s in 1usize..6, eta: i64, gamma: i64) {
        let shape = ModelShape { c: 2 * c, levels, m, k: m.min(7), s, sv_counts: (1..=s).collect(), eta: Fxp(eta), gamma: Fxp(gamma) };
        prop_assert_eq!(ModelShape::from_bytes(&shape.to_bytes()).unwrap(), shape);
    }

    #[test]
    fn proof_parser_never_panics(bytes in proptest::collection::vec(any::<u8>(), 0..300)) {
        let _ = ProofBundle::from_bytes(&bytes, PrimeField::ristretto());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn serialized_bundles_verify_and_tampered_challenges_do_not(seed in 0u64..1000, which in 0usize..5) {
        let pp = pipeline::setup(128, pipeline::DEFAULT_MAX_MODEL_SIZE).unwrap();
        let model = small_model(seed);
        let secret = [seed as u8; 32];
        let (cm, _) = pipeline::commit_model(&model, &secret, &pp).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x: Vec<Fxp> = (0..8).map(|_| fx(rng.gen_range(-2.0..2.0))).collect();
        let (y, b) = match pipeline::prove(&model, &secret, &x, &pp, &ReferenceBackend) {
            Ok(v) => v,
            Err(ezdps::Error::Refused(_)) => return Ok(()),
            Err(e) => panic!("{e}"),
        };
        let again = ProofBundle::from_bytes(&b.to_bytes(), pp.field).unwrap();
        prop_assert_eq!(&again, &b);
        prop_assert!(pipeline::verify(&cm, &x, y, &again, &pp, &ReferenceBackend));
        let mut bad = again.clone();
        bad.challenges[which] += pp.field.one();
        prop_assert!(!pipeline::verify(&cm, &x, y, &bad, &pp, &ReferenceBackend));
    }
}
