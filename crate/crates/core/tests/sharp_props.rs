mod common;

use std::f64::consts::FRAC_1_SQRT_2;

use common::c;
use effectkit::linalg::random::{haar_unitary, random_projection_matrix, random_state_matrix, random_unit_vector};
use effectkit::linalg::{inner, ComplexMatrix, RandomSource};
use effectkit::num_complex::Complex64;
use effectkit::report::Probe;
use effectkit::sharp::{
    check_polarized_identity, check_projection_trace, check_ratio_identity, join, meet, proj_leq,
    random_scaled_unitary, random_semilinear, remark_dim2_twist, replay_theorem2_witness, twist_demonstration,
    twist_probe_pair, SCALAR_SPREAD_TOL, STAGE_FORCED, STAGE_NON_UNITARY, STAGE_PROJ_TRACE,
};
use effectkit::{
    extract_unitary, induced_map, projective_distance, theorem2_harness, FinalVerdict, Kind, PipelineConfig, Ray,
    RayMap, ScalarExtraction, SemilinearOperator, State, SubspaceProjection,
};
use proptest::prelude::*;

fn projection(dim: usize, rank: usize, rng: &mut RandomSource) -> SubspaceProjection {
    SubspaceProjection::new(random_projection_matrix(dim, rank, rng).unwrap()).unwrap()
}

fn state(dim: usize, rng: &mut RandomSource) -> State {
    State::new(random_state_matrix(dim, rng).unwrap()).unwrap()
}

/// `A D A*` normalized, with `conj(D)` for conjugating `A`.
fn transported(a: &SemilinearOperator, d: &State) -> State {
    let dm = if a.conjugating() { d.matrix().conj() } else { d.matrix().clone() };
    let m = (&(a.matrix() * &dm) * &a.matrix().adjoint()).hermitian_part();
    let tr = m.trace().re;
    State::new(m.scale(1.0 / tr)).unwrap()
}

fn pair_x_y(n: usize) -> (Vec<Complex64>, Vec<Complex64>) {
    let mut x = vec![c(0.0, 0.0); n];
    let mut y = x.clone();
    x[0] = c(FRAC_1_SQRT_2, 0.0);
    x[1] = c(FRAC_1_SQRT_2, 0.0);
    y[0] = c(FRAC_1_SQRT_2, 0.0);
    y[1] = c(-FRAC_1_SQRT_2, 0.0);
    (x, y)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn lattice_laws(dim in 2usize..=6, seed in any::<u64>()) {
        let mut rng = RandomSource::new(seed);
        let p = projection(dim, 1 + rng.index(dim - 1), &mut rng);
        let q = projection(dim, 1 + rng.index(dim - 1), &mut rng);
        prop_assert!(join(&p, &p).unwrap().matrix().distance(p.matrix()) <= 1e-9);
        prop_assert!(meet(&p, &p).unwrap().matrix().distance(p.matrix()) <= 1e-9);
        prop_assert_eq!(meet(&p, &p.complement()).unwrap().rank(), 0);
        prop_assert!(join(&p, &p.complement()).unwrap().matrix().distance(&ComplexMatrix::identity(dim)) <= 1e-9);
        let j = join(&p, &q).unwrap();
        let m = meet(&p, &q).unwrap();
        prop_assert!(proj_leq(&p, &j).unwrap() && proj_leq(&q, &j).unwrap());
        prop_assert!(proj_leq(&m, &p).unwrap() && proj_leq(&m, &q).unwrap());
    }

    #[test]
    fn induced_map_is_a_lattice_morphism(dim in 2usize..=5, seed in any::<u64>()) {
        let mut rng = RandomSource::new(seed);
        let a = random_semilinear(dim, &mut rng).unwrap();
        let p = projection(dim, 1, &mut rng);
        let q = projection(dim, 1, &mut rng);
        let lhs = induced_map(&a, &join(&p, &q).unwrap()).unwrap();
        let rhs = join(&induced_map(&a, &p).unwrap(), &induced_map(&a, &q).unwrap()).unwrap();
        prop_assert!(lhs.matrix().distance(rhs.matrix()) <= 1e-8);
        let big = join(&p, &q).unwrap();
        prop_assert!(proj_leq(&induced_map(&a, &p).unwrap(), &induced_map(&a, &big).unwrap()).unwrap());
        prop_assert_eq!(induced_map(&a, &big).unwrap().rank(), big.rank());
    }

    #[test]
    fn conjugation_is_invisible_on_real_subspaces(dim in 2usize..=5, seed in any::<u64>()) {
        let mut rng = RandomSource::new(seed);
        let real = ComplexMatrix::from_fn(dim, dim, |_, _| c(rng.normal(), 0.0));
        let Ok(lin) = SemilinearOperator::new(real.clone(), false) else { return Ok(()) };
        let anti = SemilinearOperator::new(real, true).unwrap();
        let v: Vec<Complex64> = (0..dim).map(|_| c(rng.normal(), 0.0)).collect();
        let p = SubspaceProjection::span(&[v], dim);
        let a = induced_map(&lin, &p).unwrap();
        let b = induced_map(&anti, &p).unwrap();
        prop_assert!(a.matrix().distance(b.matrix()) <= 1e-10);
    }

    #[test]
    fn unitary_induces_congruence(dim in 2usize..=6, seed in any::<u64>()) {
        let mut rng = RandomSource::new(seed);
        let u = haar_unitary(dim, &mut rng).unwrap();
        let a = SemilinearOperator::linear(u.clone()).unwrap();
        let p = projection(dim, 1 + rng.index(dim - 1), &mut rng);
        let img = induced_map(&a, &p).unwrap();
        prop_assert!(img.matrix().distance(&p.matrix().congruence(&u).unwrap()) <= 1e-10);
    }

    #[test]
    fn extraction_commutes_with_scaling(dim in 2usize..=5, seed in any::<u64>(), k in 0.1f64..10.0, scalar in any::<bool>()) {
        let mut rng = RandomSource::new(seed);
        let a = if scalar {
            random_scaled_unitary(dim, rng.uniform_range(0.5, 2.0), rng.bernoulli(0.5), &mut rng).unwrap()
        } else {
            random_semilinear(dim, &mut rng).unwrap()
        };
        let b = a.scaled(k).unwrap();
        match (extract_unitary(&a, SCALAR_SPREAD_TOL).unwrap(), extract_unitary(&b, SCALAR_SPREAD_TOL).unwrap()) {
            (ScalarExtraction::Scalar { mu: ma, operator: ua, .. }, ScalarExtraction::Scalar { mu: mb, operator: ub, .. }) => {
                prop_assert!((mb - k * k * ma).abs() <= 1e-10 * mb);
                prop_assert!(projective_distance(ua.matrix(), ub.matrix()).unwrap() <= 1e-10);
            }
            (ScalarExtraction::NotScalar { .. }, ScalarExtraction::NotScalar { .. }) => {}
            (x, y) => prop_assert!(false, "scalarity changed under scaling: {:?} vs {:?}", x, y),
        }
    }

    #[test]
    fn trace_condition_implies_identities(dim in 2usize..=5, seed in any::<u64>()) {
        let mut rng = RandomSource::new(seed);
        let a = random_scaled_unitary(dim, rng.uniform_range(0.5, 2.0), rng.bernoulli(0.5), &mut rng).unwrap();
        let d = state(dim, &mut rng);
        let dp = transported(&a, &d);
        let trace = check_projection_trace(&a, &d, &dp, 50, 1e-10, &mut rng).unwrap();
        if trace.passed() {
            prop_assert!(check_ratio_identity(&a, &d, &dp, 50, &mut rng).unwrap().passed());
            let (polar, ortho) = check_polarized_identity(&a, &d, &dp, 50, &mut rng).unwrap();
            prop_assert!(polar.passed() && ortho.passed());
        }
    }

    #[test]
    fn twist_is_bijective(seed in any::<u64>(), kappa in -3.0f64..3.0) {
        let mut rng = RandomSource::new(seed);
        let d = loop {
            let d = state(2, &mut rng);
            if !d.is_scalar(1e-6) { break d; }
        };
        let t = remark_dim2_twist(&d, kappa).unwrap();
        let inv = t.inverse();
        for _ in 0..10 {
            let r = Ray::new(random_unit_vector(2, &mut rng)).unwrap();
            let back = inv.map_ray(&t.map_ray(&r).unwrap()).unwrap();
            prop_assert!(1.0 - back.overlap(&r) <= 1e-10);
        }
    }
}

#[test]
fn induced_map_examples() {
    let a = SemilinearOperator::linear(ComplexMatrix::diag_real(&[1.0, 2.0])).unwrap();
    let p = SubspaceProjection::span(&[vec![c(1.0, 0.0), c(1.0, 0.0)]], 2);
    let img = induced_map(&a, &p).unwrap();
    let v = common::unit(&[c(1.0, 0.0), c(2.0, 0.0)]);
    assert!(img.matrix().distance(&ComplexMatrix::outer(&v, &v)) <= 1e-12);
    let e1 = SubspaceProjection::span(&[vec![c(1.0, 0.0), c(0.0, 0.0)]], 2);
    let scale = SemilinearOperator::linear(ComplexMatrix::diag_real(&[2.0, 1.0])).unwrap();
    assert!(induced_map(&scale, &e1).unwrap().matrix().distance(e1.matrix()) <= 1e-12);
}

#[test]
fn ratio_identity_examples() {
    let mut rng = RandomSource::new(1);
    let u = haar_unitary(3, &mut rng).unwrap();
    let a = SemilinearOperator::linear(u).unwrap();
    let d = state(3, &mut rng);
    assert!(check_ratio_identity(&a, &d, &transported(&a, &d), 100, &mut rng).unwrap().passed());

    let a = SemilinearOperator::linear(ComplexMatrix::diag_real(&[1.0, 2.0])).unwrap();
    let d = State::new(ComplexMatrix::diag_real(&[0.7, 0.3])).unwrap();
    let r = check_ratio_identity(&a, &d, &d, 100, &mut rng).unwrap();
    assert!(!r.passed());
    let (x, _) = pair_x_y(2);
    let w = effectkit::report::Witness {
        probe: Probe::RatioIdentity { x: ComplexMatrix::column_vector(&x) },
        residual: 0.0,
    };
    let o = replay_theorem2_witness(&a, &d, &d, &w).unwrap();
    // left side (0.7 + 4·0.3)/5 = 0.38, right side 0.5
    assert!(o.violated && (o.residual - 0.12).abs() < 1e-12);
}

#[test]
fn ratio_identity_equals_trace_defect() {
    let mut rng = RandomSource::new(2);
    let mut worst = 0.0f64;
    for i in 0..100 {
        let dim = 2 + i % 4;
        let a = random_semilinear(dim, &mut rng).unwrap();
        let d = state(dim, &mut rng);
        let dp = state(dim, &mut rng);
        let r = check_ratio_identity(&a, &d, &dp, 1, &mut rng).unwrap();
        worst = worst.max(r.metrics["equivalence_gap"]);
    }
    assert!(worst <= 1e-12, "{worst}");
}

#[test]
fn polarized_identity_examples() {
    let mut rng = RandomSource::new(3);
    let u = haar_unitary(3, &mut rng).unwrap();
    let a = SemilinearOperator::linear(u.clone()).unwrap();
    let d = state(3, &mut rng);
    let (p, o) = check_polarized_identity(&a, &d, &transported(&a, &d), 100, &mut rng).unwrap();
    assert!(p.passed() && o.passed());

    let a3 = SemilinearOperator::linear(u.scale(3.0)).unwrap();
    let (_, o) = check_polarized_identity(&a3, &d, &state(3, &mut rng), 100, &mut rng).unwrap();
    assert!(o.passed());

    let a = SemilinearOperator::linear(ComplexMatrix::diag_real(&[1.0, 2.0])).unwrap();
    let d = State::new(ComplexMatrix::diag_real(&[0.7, 0.3])).unwrap();
    let (_, o) = check_polarized_identity(&a, &d, &state(2, &mut rng), 100, &mut rng).unwrap();
    assert!(!o.passed());
    let (x, y) = pair_x_y(2);
    match &o.witnesses[0].probe {
        Probe::OrthogonalPair { x: wx, y: wy } => {
            assert!(wx.column(0) == x && wy.column(0) == y);
        }
        other => panic!("{other:?}"),
    }
    assert!((inner(&d.matrix().mul_vec(&x), &y).re - 0.2).abs() < 1e-12);
    assert!((inner(&a.gram().mul_vec(&x), &y).re + 1.5).abs() < 1e-12);
    assert!((o.witnesses[0].residual - 0.3).abs() < 1e-12);
}

#[test]
fn extract_unitary_examples() {
    let mut rng = RandomSource::new(4);
    let u = haar_unitary(4, &mut rng).unwrap();
    match extract_unitary(&SemilinearOperator::linear(u.scale(3.0)).unwrap(), SCALAR_SPREAD_TOL).unwrap() {
        ScalarExtraction::Scalar { mu, operator, .. } => {
            assert!((mu - 9.0).abs() <= 1e-9);
            assert!(projective_distance(operator.matrix(), &u).unwrap() <= 1e-12);
            assert!(operator.matrix().unitarity_residual() <= 10.0 * SCALAR_SPREAD_TOL);
        }
        other => panic!("{other:?}"),
    }
    let diag = SemilinearOperator::linear(ComplexMatrix::diag_real(&[1.0, 2.0])).unwrap();
    assert!(matches!(
        extract_unitary(&diag, SCALAR_SPREAD_TOL).unwrap(),
        ScalarExtraction::NotScalar { .. }
    ));

    let anti = SemilinearOperator::new(u.scale(2.0), true).unwrap();
    match extract_unitary(&anti, SCALAR_SPREAD_TOL).unwrap() {
        ScalarExtraction::Scalar { mu, operator, .. } => {
            assert!((mu - 4.0).abs() <= 1e-9);
            assert!(operator.conjugating());
            for _ in 0..20 {
                let p = projection(4, 1 + rng.index(3), &mut rng);
                let lhs = induced_map(&anti, &p).unwrap();
                let rhs = induced_map(&operator, &p).unwrap();
                assert!(lhs.matrix().distance(rhs.matrix()) <= 1e-10);
                let direct = p.matrix().conj().congruence(operator.matrix()).unwrap();
                assert!(lhs.matrix().distance(&direct) <= 1e-10);
            }
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn harness_certifies_unitary() {
    let mut rng = RandomSource::new(5);
    let u = haar_unitary(3, &mut rng).unwrap();
    let a = SemilinearOperator::linear(u.clone()).unwrap();
    let d = state(3, &mut rng);
    let report = theorem2_harness(&a, &d, &transported(&a, &d), &PipelineConfig::with_seed(5)).unwrap();
    match report.final_verdict {
        FinalVerdict::CertifiedAutomorphism { kind, unitary, mu } => {
            assert_eq!(kind, Kind::Linear);
            assert!(projective_distance(&unitary, &u).unwrap() <= 1e-8);
            assert!((mu.unwrap() - 1.0).abs() <= 1e-9);
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn harness_refutes_non_scalar_gram() {
    let a = SemilinearOperator::linear(ComplexMatrix::diag_real(&[1.0, 2.0, 1.0])).unwrap();
    let d = State::new(ComplexMatrix::diag_real(&[0.5, 0.3, 0.2])).unwrap();
    let mut rng = RandomSource::new(6);
    for dp in [d.clone(), transported(&a, &d), state(3, &mut rng)] {
        let report = theorem2_harness(&a, &d, &dp, &PipelineConfig::with_seed(6)).unwrap();
        assert_eq!(report.refuted_stage(), Some(STAGE_PROJ_TRACE));
        let w = &report.stage(STAGE_PROJ_TRACE).unwrap().witnesses;
        assert!(!w.is_empty());
        assert!(replay_theorem2_witness(&a, &d, &dp, &w[0]).unwrap().violated);
    }
}

#[test]
fn harness_on_scalar_state_is_degenerate() {
    let mut rng = RandomSource::new(7);
    let a = random_semilinear(3, &mut rng).unwrap();
    let d = State::maximally_mixed(3);
    let report = theorem2_harness(&a, &d, &d, &PipelineConfig::with_seed(7)).unwrap();
    assert_eq!(
        report.final_verdict,
        FinalVerdict::HypothesisDegenerate { demonstration_passed: true }
    );
    assert!(report.stage(STAGE_FORCED).unwrap().residual <= 1e-10);
    let demo = report.stage(STAGE_NON_UNITARY).unwrap();
    assert!(demo.data["image_overlap"] > 0.1);
    // a different D′ cannot satisfy the condition
    let other = State::new(ComplexMatrix::diag_real(&[0.5, 0.3, 0.2])).unwrap();
    let report = theorem2_harness(&a, &d, &other, &PipelineConfig::with_seed(7)).unwrap();
    assert_eq!(report.refuted_stage(), Some(STAGE_FORCED));
}

#[test]
fn twist_examples() {
    let d = State::new(ComplexMatrix::diag_real(&[0.75, 0.25])).unwrap();
    let report = twist_demonstration(&d, 1.0, &PipelineConfig::with_seed(8)).unwrap();
    assert_eq!(
        report.final_verdict,
        FinalVerdict::HypothesisDegenerate { demonstration_passed: true }
    );
    assert!(report.stages[0].residual <= 1e-10);
    let t = remark_dim2_twist(&d, 1.0).unwrap();
    let (p, q) = twist_probe_pair(&t);
    assert!(p.overlap(&q) <= 1e-15);
    // image overlap sin(π/4)·|sin(κ/√2)|
    let expected = FRAC_1_SQRT_2 * FRAC_1_SQRT_2.sin().abs();
    let got = t.map_ray(&p).unwrap().overlap(&t.map_ray(&q).unwrap());
    assert!((got - expected).abs() < 1e-12, "{got} vs {expected}");
    assert!(got > 0.1);

    let zero = twist_demonstration(&d, 0.0, &PipelineConfig::with_seed(8)).unwrap();
    assert_eq!(
        zero.final_verdict,
        FinalVerdict::HypothesisDegenerate { demonstration_passed: false }
    );
}
