mod common;

use effectkit::generate::random_mk_parameter;
use effectkit::linalg::random::{haar_unitary, random_state_matrix, random_unit_vector};
use effectkit::linalg::{ComplexMatrix, RandomSource};
use effectkit::maps::suggest_matching_state;
use effectkit::num_complex::Complex64;
use effectkit::reconstruction::{
    phase_consistency, replay_stage_witness, FnRayMap, InducedRayMap, STAGE_DIM2, STAGE_ORTHOGONALITY, STAGE_TRACE,
};
use effectkit::report::Probe;
use effectkit::{
    apply_map, classify_theorem1, projective_distance, reconstruct_wigner, EffectMapSpec, Effect, FinalVerdict,
    ImplementingOperator, Kind, PipelineConfig, Ray, RayMap, State,
};
use proptest::prelude::*;

fn congruence(dim: usize, anti: bool, rng: &mut RandomSource) -> (ComplexMatrix, ImplementingOperator) {
    let u = haar_unitary(dim, rng).unwrap();
    let kind = if anti { Kind::Antilinear } else { Kind::Linear };
    (u.clone(), ImplementingOperator::new(kind, u))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn reconstruction_recovers_generator(dim in 1usize..=8, seed in any::<u64>(), anti in any::<bool>()) {
        let mut rng = RandomSource::new(seed);
        let (u, op) = congruence(dim, anti, &mut rng);
        let r = reconstruct_wigner(&op, &mut rng).unwrap();
        let want = if dim == 1 { Kind::Linear } else { op.kind };
        prop_assert_eq!(r.kind, want);
        prop_assert!(projective_distance(&r.unitary, &u).unwrap() <= 1e-6);
        prop_assert!(r.unitary.unitarity_residual() <= 1e-8);
    }

    #[test]
    fn reconstruction_is_phase_equivariant(dim in 2usize..=6, seed in any::<u64>(), anti in any::<bool>()) {
        let mut rng = RandomSource::new(seed);
        let (_, op) = congruence(dim, anti, &mut rng);
        let base = reconstruct_wigner(&op, &mut RandomSource::new(1)).unwrap();
        // the same ray map, fed with phase-shifted representatives
        let shifted = FnRayMap::new(dim, |r: &Ray| {
            let theta = 0.37 + 11.0 * r.vector()[0].norm();
            let v: Vec<Complex64> = r.vector().iter().map(|z| z * Complex64::from_polar(1.0, theta)).collect();
            op.map_ray(&Ray::new(v)?)
        });
        let other = reconstruct_wigner(&shifted, &mut RandomSource::new(1)).unwrap();
        prop_assert_eq!(other.kind, base.kind);
        prop_assert!(projective_distance(&other.unitary, &base.unitary).unwrap() <= 1e-10);
    }

    #[test]
    fn induced_rays_are_well_defined(dim in 2usize..=5, seed in any::<u64>()) {
        let mut rng = RandomSource::new(seed);
        let spec = EffectMapSpec::mk(random_mk_parameter(dim, &mut rng).unwrap()).unwrap();
        let oracle = InducedRayMap::new(&spec);
        prop_assert!(phase_consistency(&oracle, 10, &mut rng).unwrap() <= 1e-9);
    }
}

#[test]
fn projective_distance_is_continuous() {
    let mut rng = RandomSource::new(3);
    let u = haar_unitary(4, &mut rng).unwrap();
    let noise = effectkit::linalg::random::complex_gaussian_matrix(4, 4, &mut rng).scale(1e-6);
    // re-unitarize the perturbation by in-order Gram–Schmidt
    let p = &u + &noise;
    let mut v = ComplexMatrix::zeros(4, 4);
    for j in 0..4 {
        let mut col = p.column(j);
        for k in 0..j {
            let q = v.column(k);
            let c = effectkit::linalg::inner(&col, &q);
            for (x, y) in col.iter_mut().zip(&q) {
                *x -= c * y;
            }
        }
        v.set_column(j, &effectkit::linalg::normalized(&col));
    }
    let d = projective_distance(&u, &v).unwrap();
    assert!(d <= 1e-5, "{d}");
}

#[test]
fn identity_oracle() {
    let op = ImplementingOperator::new(Kind::Linear, ComplexMatrix::identity(5));
    let r = reconstruct_wigner(&op, &mut RandomSource::new(0)).unwrap();
    assert!(projective_distance(&r.unitary, &ComplexMatrix::identity(5)).unwrap() <= 1e-10);
}

fn classify(spec: &EffectMapSpec, dim: usize, seed: u64) -> effectkit::ClassificationReport {
    let mut rng = RandomSource::new(seed ^ 0xABCD);
    let d = State::new(random_state_matrix(dim, &mut rng).unwrap()).unwrap();
    let dp = suggest_matching_state(spec, &d).unwrap_or_else(|| d.clone());
    classify_theorem1(spec, &d, &dp, dim, &PipelineConfig::with_seed(seed)).unwrap()
}

#[test]
fn congruences_are_certified() {
    let mut rng = RandomSource::new(10);
    for dim in 2..=6 {
        for anti in [false, true] {
            let (u, op) = congruence(dim, anti, &mut rng);
            let spec = op.as_spec();
            let report = classify(&spec, dim, dim as u64);
            match &report.final_verdict {
                FinalVerdict::CertifiedAutomorphism { kind, unitary, .. } => {
                    assert_eq!(*kind, op.kind);
                    assert!(projective_distance(unitary, &u).unwrap() <= 1e-6);
                }
                other => panic!("dim {dim} anti {anti}: {other:?}"),
            }
            assert!(report.stages.iter().all(|s| s.passed() && s.residual <= 1e-7));
            if dim == 2 {
                assert!(report.stage(STAGE_DIM2).is_some());
            }
        }
    }
}

#[test]
fn scalar_fixing_is_exact_for_congruences() {
    let mut rng = RandomSource::new(11);
    let (_, op) = congruence(4, true, &mut rng);
    let spec = op.as_spec();
    for lambda in [0.0, 0.25, 0.5, 0.75, 1.0] {
        let s = Effect::scalar(4, lambda);
        assert!(apply_map(&spec, &s).unwrap().matrix().distance(s.matrix()) <= 1e-12);
    }
}

#[test]
fn orthogonality_stage_transports_strength() {
    let mut rng = RandomSource::new(12);
    let (_, op) = congruence(3, false, &mut rng);
    let report = classify(&op.as_spec(), 3, 12);
    let stage = report.stage(STAGE_ORTHOGONALITY).unwrap();
    assert!(stage.passed());
    // residual covers both strength deviations and the image overlap
    assert!(stage.residual <= 1e-7);
}

#[test]
fn mk_maps_are_refuted_with_replayable_witnesses() {
    let mut rng = RandomSource::new(13);
    for i in 0..10u64 {
        let dim = 2 + (i as usize % 4);
        let spec = EffectMapSpec::mk(random_mk_parameter(dim, &mut rng).unwrap()).unwrap();
        let seed = 500 + i;
        let report = classify(&spec, dim, seed);
        let stage = report.refuted_stage().expect("never certified");
        assert!(stage == STAGE_TRACE || stage == STAGE_ORTHOGONALITY, "{stage}");
        let failing = report.stage(stage).unwrap();
        assert!(!failing.witnesses.is_empty());
        let config = PipelineConfig::with_seed(seed);
        for w in &failing.witnesses {
            assert!(replay_stage_witness(&spec, w, &config).unwrap().violated);
        }
    }
}

#[test]
fn identity_parameter_is_certified() {
    let spec = EffectMapSpec::mk(Effect::identity(3)).unwrap();
    let report = classify(&spec, 3, 1);
    // Φ_I is the identity, so the trace condition holds with D′ = D
    assert!(report.is_certified(), "{:?}", report.final_verdict);
}

#[test]
fn ray_map_from_closure_reports_dimension() {
    let m = FnRayMap::new(3, |r: &Ray| Ok(r.clone()));
    assert_eq!(m.dim(), 3);
    let r = Ray::new(random_unit_vector(3, &mut RandomSource::new(1))).unwrap();
    assert_eq!(m.map_ray(&r).unwrap(), r);
}

#[test]
fn witnesses_serialize_with_probe_tag() {
    let spec = EffectMapSpec::mk(random_mk_parameter(2, &mut RandomSource::new(2)).unwrap()).unwrap();
    let report = classify(&spec, 2, 3);
    let json = report.to_json_pretty();
    assert!(json.contains("\"probe\""));
    assert!(json.contains("\"status\": \"refuted\""));
    let back: effectkit::ClassificationReport = serde_json::from_str(&json).unwrap();
    assert_eq!(back, report);
    assert!(matches!(back.stages[1].witnesses[0].probe, Probe::Trace { .. }));
}
