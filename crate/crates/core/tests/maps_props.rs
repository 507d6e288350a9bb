mod common;

use common::{mk_congruence, mk_congruence_inverse, mk_literal, mk_scalar};
use effectkit::generate::random_mk_parameter;
use effectkit::linalg::random::{haar_unitary, random_effect_matrix, random_state_matrix, random_unit_vector};
use effectkit::linalg::{ComplexMatrix, RandomSource};
use effectkit::maps::{
    check_order_preservation, check_ortho_compatibility, check_trace_condition, replay_witness,
    suggest_matching_state, EffectMap, ORDER_TOL, ORTHO_TOL, TRACE_TOL,
};
use effectkit::trials::CheckOptions;
use effectkit::{apply_map, EffectMapSpec, Effect, Error, Ray, Result, State};
use proptest::prelude::*;

/// `E ↦ I − E`: reverses the order, commutes with the orthocomplement.
struct Complement(usize);

impl EffectMap for Complement {
    fn dim(&self) -> usize {
        self.0
    }

    fn apply(&self, e: &Effect) -> Result<Effect> {
        Ok(e.orthocomplement())
    }
}

fn mk_t(dim: usize, seed: u64) -> Effect {
    random_mk_parameter(dim, &mut RandomSource::new(seed)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn mk_matches_congruence_oracle(dim in 1usize..=5, seed in any::<u64>()) {
        let mut rng = RandomSource::new(seed);
        let t = mk_t(dim, seed ^ 1);
        let spec = EffectMapSpec::mk(t.clone()).unwrap();
        let e = random_effect_matrix(dim, &mut rng).unwrap();
        let got = apply_map(&spec, &Effect::new(e.clone()).unwrap()).unwrap();
        let want = mk_congruence(t.matrix(), &e);
        prop_assert!(got.matrix().distance(&want) <= 1e-9, "{}", got.matrix().distance(&want));
    }

    #[test]
    fn mk_inverse_matches_oracle(dim in 1usize..=5, seed in any::<u64>()) {
        let mut rng = RandomSource::new(seed);
        let t = mk_t(dim, seed ^ 2);
        let spec = EffectMapSpec::mk_inverse(t.clone()).unwrap();
        let y = random_effect_matrix(dim, &mut rng).unwrap();
        let got = apply_map(&spec, &Effect::new(y.clone()).unwrap()).unwrap();
        let want = mk_congruence_inverse(t.matrix(), &y);
        prop_assert!(got.matrix().distance(&want) <= 1e-8, "{}", got.matrix().distance(&want));
    }

    #[test]
    fn mk_round_trip(dim in 2usize..=6, seed in any::<u64>()) {
        let mut rng = RandomSource::new(seed);
        let t = mk_t(dim, seed ^ 3);
        let round = EffectMapSpec::compose(vec![
            EffectMapSpec::mk(t.clone()).unwrap(),
            EffectMapSpec::mk_inverse(t).unwrap(),
        ]).unwrap();
        for _ in 0..100 {
            let e = Effect::new(random_effect_matrix(dim, &mut rng).unwrap()).unwrap();
            let back = apply_map(&round, &e).unwrap();
            prop_assert!(back.matrix().distance(e.matrix()) <= 1e-8);
        }
    }

    #[test]
    fn mk_fixes_endpoints(dim in 1usize..=6, seed in any::<u64>()) {
        let spec = EffectMapSpec::mk(mk_t(dim, seed)).unwrap();
        prop_assert!(apply_map(&spec, &Effect::zero(dim)).unwrap().matrix().max_abs() <= 1e-10);
        let one = apply_map(&spec, &Effect::identity(dim)).unwrap();
        prop_assert!(one.matrix().distance(&ComplexMatrix::identity(dim)) <= 1e-10);
    }

    #[test]
    fn congruence_transports_strength(dim in 1usize..=6, seed in any::<u64>(), anti in any::<bool>()) {
        let mut rng = RandomSource::new(seed);
        let u = haar_unitary(dim, &mut rng).unwrap();
        let e = Effect::new(random_effect_matrix(dim, &mut rng).unwrap()).unwrap();
        let r = Ray::new(random_unit_vector(dim, &mut rng)).unwrap();
        let (spec, image) = if anti {
            (EffectMapSpec::antiunitary(u.clone()).unwrap(), u.mul_vec(&effectkit::linalg::conj_vec(r.vector())))
        } else {
            (EffectMapSpec::unitary(u.clone()).unwrap(), u.mul_vec(r.vector()))
        };
        let img = apply_map(&spec, &e).unwrap();
        let s = img.strength(&Ray::from_vector(&image).unwrap()).unwrap();
        prop_assert!((s - e.strength(&r).unwrap()).abs() <= 1e-8);
    }
}

#[test]
fn mk_literal_formula_agrees_away_from_the_floor() {
    let mut rng = RandomSource::new(31);
    for dim in 1..=4 {
        for _ in 0..20 {
            let values: Vec<f64> = (0..dim).map(|_| rng.uniform_range(0.3, 1.0)).collect();
            let t = Effect::new(effectkit::linalg::random::rotated_diagonal(&values, &mut rng).unwrap()).unwrap();
            let e = random_effect_matrix(dim, &mut rng).unwrap();
            let got = apply_map(&EffectMapSpec::mk(t.clone()).unwrap(), &Effect::new(e.clone()).unwrap()).unwrap();
            assert!(got.matrix().distance(&mk_literal(t.matrix(), &e)) <= 1e-9);
        }
    }
}

#[test]
fn mk_scalar_reduction() {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let t = Effect::new(ComplexMatrix::diag_real(&[1.0, h])).unwrap();
    let img = apply_map(&EffectMapSpec::mk(t).unwrap(), &Effect::new(ComplexMatrix::diag_real(&[0.3, 0.5])).unwrap())
        .unwrap();
    assert!((img.matrix()[(1, 1)].re - mk_scalar(h, 0.5)).abs() < 1e-12);
    assert!((mk_scalar(h, 0.5) - 0.6).abs() < 1e-15);
    // t = 1 leaves the direction fixed
    assert!((img.matrix()[(0, 0)].re - 0.3).abs() < 1e-12);
}

#[test]
fn mk_identity_parameter_is_identity() {
    let mut rng = RandomSource::new(8);
    for dim in 1..=5 {
        let spec = EffectMapSpec::mk(Effect::identity(dim)).unwrap();
        for _ in 0..100 {
            let e = Effect::new(random_effect_matrix(dim, &mut rng).unwrap()).unwrap();
            assert!(apply_map(&spec, &e).unwrap().matrix().distance(e.matrix()) <= 1e-10);
        }
    }
}

#[test]
fn mk_parameter_below_floor_is_rejected() {
    let t = Effect::new(ComplexMatrix::diag_real(&[1.0, 1e-4])).unwrap();
    assert!(matches!(EffectMapSpec::mk(t), Err(Error::InvalidMap(_))));
}

#[test]
fn order_checks() {
    let mut rng = RandomSource::new(1);
    let opts = CheckOptions::new(100);
    let u = EffectMapSpec::unitary(haar_unitary(3, &mut rng).unwrap()).unwrap();
    assert!(check_order_preservation(&u, 3, &opts, &mut rng).unwrap().passed());
    for dim in 2..=5 {
        let mk = EffectMapSpec::mk(mk_t(dim, dim as u64)).unwrap();
        let r = check_order_preservation(&mk, dim, &CheckOptions::new(200), &mut rng).unwrap();
        assert!(r.passed(), "dim {dim}: {}", r.max_residual);
    }
    let r = check_order_preservation(&Complement(3), 3, &opts, &mut rng).unwrap();
    assert!(!r.passed());
    assert!(!r.witnesses.is_empty());
    for w in &r.witnesses {
        assert!(replay_witness(&Complement(3), w, ORDER_TOL).unwrap().violated);
    }
}

#[test]
fn order_check_skips_backward_direction_in_dimension_one() {
    let mut rng = RandomSource::new(2);
    let r = check_order_preservation(&EffectMapSpec::mk(mk_t(1, 4)).unwrap(), 1, &CheckOptions::new(5), &mut rng)
        .unwrap();
    assert!(r.passed());
    assert_eq!(r.metrics["backward_skipped"], 5.0);
    assert!(!r.notes.is_empty());
}

#[test]
fn ortho_checks() {
    let mut rng = RandomSource::new(3);
    let opts = CheckOptions::new(100);
    let u = EffectMapSpec::unitary(haar_unitary(3, &mut rng).unwrap()).unwrap();
    assert!(check_ortho_compatibility(&u, 3, &opts, &mut rng).unwrap().passed());
    assert!(check_ortho_compatibility(&Complement(3), 3, &opts, &mut rng).unwrap().passed());

    let h = std::f64::consts::FRAC_1_SQRT_2;
    let mk = EffectMapSpec::mk(Effect::new(ComplexMatrix::diag_real(&[1.0, h])).unwrap()).unwrap();
    let r = check_ortho_compatibility(&mk, 2, &opts, &mut rng).unwrap();
    assert!(!r.passed());
    assert!(r.witnesses[0].residual > 0.01);
    for w in &r.witnesses {
        assert!(replay_witness(&mk, w, ORTHO_TOL).unwrap().violated);
    }

    let scalar = EffectMapSpec::mk(Effect::scalar(2, 0.8)).unwrap();
    let r = check_ortho_compatibility(&scalar, 2, &opts, &mut rng).unwrap();
    assert!(!r.passed());
    // scalar reduction at e = 1/2: f(1/2) + f(1/2) ≠ 1
    let f = mk_scalar(0.8, 0.5);
    assert!(r.max_residual >= (2.0 * f - 1.0).abs() * 2f64.sqrt() - 1e-12);
}

#[test]
fn mk_breaks_orthocomplement_for_sampled_parameters() {
    let mut rng = RandomSource::new(77);
    for i in 0..30 {
        let t = if i % 3 == 0 {
            Effect::scalar(2, rng.uniform_range(0.001, 0.99))
        } else {
            mk_t(2, 1000 + i)
        };
        let r = check_ortho_compatibility(&EffectMapSpec::mk(t).unwrap(), 2, &CheckOptions::new(50), &mut rng)
            .unwrap();
        assert!(r.max_residual > 1e-3);
    }
}

#[test]
fn trace_checks() {
    let mut rng = RandomSource::new(4);
    let opts = CheckOptions::new(100);
    for anti in [false, true] {
        let u = haar_unitary(3, &mut rng).unwrap();
        let spec = if anti {
            EffectMapSpec::antiunitary(u).unwrap()
        } else {
            EffectMapSpec::unitary(u).unwrap()
        };
        let d = State::new(random_state_matrix(3, &mut rng).unwrap()).unwrap();
        let dp = suggest_matching_state(&spec, &d).unwrap();
        assert!(check_trace_condition(&spec, &d, &dp, &opts, &mut rng).unwrap().passed());
    }
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let mk = EffectMapSpec::mk(Effect::new(ComplexMatrix::diag_real(&[1.0, h])).unwrap()).unwrap();
    let d = State::maximally_mixed(2);
    let r = check_trace_condition(&mk, &d, &d, &opts, &mut rng).unwrap();
    assert!(!r.passed());
    for w in &r.witnesses {
        assert!(replay_witness(&mk, w, TRACE_TOL).unwrap().violated);
    }
    assert!(suggest_matching_state(&mk, &d).is_none());
}

#[test]
fn suggest_matching_state_examples() {
    let mut rng = RandomSource::new(5);
    let d = State::new(random_state_matrix(3, &mut rng).unwrap()).unwrap();
    let same = suggest_matching_state(&EffectMapSpec::unitary(ComplexMatrix::identity(3)).unwrap(), &d).unwrap();
    assert!(same.matrix().distance(d.matrix()) < 1e-15);
    let real = State::new(ComplexMatrix::diag_real(&[0.2, 0.3, 0.5])).unwrap();
    let s = suggest_matching_state(&EffectMapSpec::antiunitary(ComplexMatrix::identity(3)).unwrap(), &real).unwrap();
    assert!(s.matrix().distance(real.matrix()) < 1e-15);
}

#[test]
fn parallel_runs_match_sequential_runs() {
    let spec = EffectMapSpec::mk(mk_t(3, 9)).unwrap();
    let d = State::maximally_mixed(3);
    let run = |parallel: bool| {
        let mut rng = RandomSource::new(42);
        let opts = CheckOptions::new(64).parallel(parallel);
        (
            check_order_preservation(&spec, 3, &opts, &mut rng).unwrap(),
            check_ortho_compatibility(&spec, 3, &opts, &mut rng).unwrap(),
            check_trace_condition(&spec, &d, &d, &opts, &mut rng).unwrap(),
        )
    };
    assert_eq!(run(false), run(true));
}

#[test]
fn map_spec_json_errors_name_fields() {
    let err = EffectMapSpec::from_json(r#"{"variant":"warp","matrix":null,"members":null}"#).unwrap_err();
    assert!(err.to_string().contains("variant"), "{err}");
    let err = EffectMapSpec::from_json(r#"{"variant":"unitary","matrix":null,"members":null}"#).unwrap_err();
    assert!(err.to_string().contains("matrix"), "{err}");
    let err = EffectMapSpec::from_json(r#"{"variant":"compose","matrix":null,"members":[]}"#).unwrap_err();
    assert!(err.to_string().contains("members"), "{err}");
}

#[test]
fn map_spec_json_round_trip() {
    let mut rng = RandomSource::new(6);
    let spec = EffectMapSpec::compose(vec![
        EffectMapSpec::antiunitary(haar_unitary(2, &mut rng).unwrap()).unwrap(),
        EffectMapSpec::mk(mk_t(2, 3)).unwrap(),
    ])
    .unwrap();
    assert_eq!(EffectMapSpec::from_json(&spec.to_json()).unwrap(), spec);
}
