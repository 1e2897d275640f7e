//! Property checks on the public API: isometry and inverse relations of the
//! purified oracles, algebraic identities of the Haar utilities, and bit-string
//! bookkeeping.

use haarglue::glued::{apply_v_glued, apply_v_glued_dag, glued_unitary, GluedLayout, Variant};
use haarglue::haar_oracle::{weingarten_twirl, PermutationOperator};
use haarglue::linalg::{haar_sample, haar_sample_with, pure_density, trace_distance, unitarity_defect, C64};
use haarglue::path_recording::{apply_v, apply_v_dag, enumerate_single_dbs, Arity, PurifiedState, SystemLayout};
use haarglue::relations::{join, split, BitStr};
use haarglue::stretch::brickwork_chain;
use haarglue::structure::{is_good, parametrize, unparametrize};
use nalgebra::DVector;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

fn amplitudes(len: usize) -> impl Strategy<Value = Vec<(f64, f64)>> {
    proptest::collection::vec((-1.0..1.0f64, -1.0..1.0f64), len)
}

/// A superposition over (sys, D) with |D| ≤ 1 on a 2-qubit query register.
fn single_state(amps: &[(f64, f64)]) -> PurifiedState {
    let lay = SystemLayout::new(2, 0);
    let dbs = enumerate_single_dbs(2, 1);
    let mut psi = PurifiedState::new(lay, Arity::Single);
    for (i, &(re, im)) in amps.iter().enumerate() {
        psi.add((i % 4) as u64, dbs[(i / 4) % dbs.len()].clone(), C64::new(re, im));
    }
    psi
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn v_is_an_isometry_on_small_databases(amps in amplitudes(24)) {
        let psi = single_state(&amps);
        let out = apply_v(&psi).unwrap();
        prop_assert!((out.norm() - psi.norm()).abs() < 1e-10);
        prop_assert!(apply_v_dag(&out).unwrap().distance(&psi) < 1e-10);
    }

    #[test]
    fn v_preserves_inner_products(a in amplitudes(16), b in amplitudes(16)) {
        let (x, y) = (single_state(&a), single_state(&b));
        let (vx, vy) = (apply_v(&x).unwrap(), apply_v(&y).unwrap());
        prop_assert!((vx.inner(&vy) - x.inner(&y)).norm() < 1e-10);
    }

    #[test]
    fn glued_v_inverts_on_empty_databases(amps in amplitudes(8), mid in any::<bool>()) {
        let g = GluedLayout::new(1, 1, 0).unwrap();
        let variant = if mid { Variant::Mid } else { Variant::Plain };
        let mut psi = g.empty_state(0).empty_like();
        for (sys, &(re, im)) in amps.iter().enumerate() {
            psi.axpy(C64::new(re, im), &g.empty_state(sys as u64));
        }
        let out = apply_v_glued(&psi, &g, variant).unwrap();
        prop_assert!((out.norm() - psi.norm()).abs() < 1e-10);
        prop_assert!(apply_v_glued_dag(&out, &g, variant).unwrap().distance(&psi) < 1e-10);
        for (key, _) in out.iter() {
            prop_assert!(is_good(&key.1, &g));
        }
    }

    #[test]
    fn good_databases_round_trip(seed in any::<u64>(), sys in 0u64..8) {
        let g = GluedLayout::new(1, 1, 0).unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let u = haar_sample_with(8, &mut rng).unwrap();
        let mut psi = g.empty_state(sys);
        psi = psi.apply_system(&u).unwrap();
        let out = apply_v_glued(&psi, &g, Variant::Plain).unwrap();
        for (key, _) in out.iter() {
            let (s, labels) = parametrize(&key.1, &g).unwrap();
            prop_assert_eq!(&unparametrize(&s, &labels, &g).unwrap(), &key.1);
        }
    }

    #[test]
    fn haar_samples_are_unitary(seed in any::<u64>(), q in 1u32..5) {
        prop_assert!(unitarity_defect(&haar_sample(1 << q, seed).unwrap()) < 1e-10);
    }

    #[test]
    fn glued_placement_is_unitary(seed in any::<u64>()) {
        let g = GluedLayout::new(1, 1, 0).unwrap();
        let us: Vec<_> = (0..3).map(|k| haar_sample(4, seed.wrapping_add(k)).unwrap()).collect();
        prop_assert!(unitarity_defect(&glued_unitary(&us[0], &us[1], &us[2], &g).unwrap()) < 1e-10);
        prop_assert!(unitarity_defect(&brickwork_chain(&us, 1).unwrap()) < 1e-10);
    }

    #[test]
    fn twirl_is_idempotent(seed in any::<u64>()) {
        let x = haar_sample(4, seed).unwrap();
        let once = weingarten_twirl(2, 2, &x).unwrap();
        let twice = weingarten_twirl(2, 2, &once).unwrap();
        prop_assert!((once - twice).norm() < 1e-10);
    }

    #[test]
    fn permutation_operators_compose(perm in Just(vec![0usize, 1, 2]).prop_shuffle(), other in Just(vec![0usize, 1, 2]).prop_shuffle()) {
        let p = PermutationOperator::new(2, perm).unwrap();
        let q = PermutationOperator::new(2, other).unwrap();
        let pq = p.compose(&q).unwrap();
        prop_assert!((pq.matrix() - p.matrix() * q.matrix()).norm() < 1e-12);
        prop_assert_eq!(p.compose(&p.inverse()).unwrap().perm, vec![0, 1, 2]);
    }

    #[test]
    fn trace_distance_is_a_bounded_metric(a in amplitudes(4), b in amplitudes(4)) {
        let v = |amps: &[(f64, f64)]| {
            let s = DVector::from_iterator(4, amps.iter().map(|&(re, im)| C64::new(re, im)));
            let n = s.norm().max(1e-6);
            pure_density(&(s / C64::new(n, 0.0)))
        };
        let (r, s) = (v(&a), v(&b));
        prop_assume!((r.trace().re - 1.0).abs() < 1e-9 && (s.trace().re - 1.0).abs() < 1e-9);
        let d = trace_distance(&r, &s).unwrap();
        prop_assert!((-1e-12..=1.0 + 1e-12).contains(&d));
        prop_assert!((d - trace_distance(&s, &r).unwrap()).abs() < 1e-12);
        prop_assert!(trace_distance(&r, &r).unwrap() < 1e-12);
    }

    #[test]
    fn split_join_round_trip(n in 1u32..6, lambda in 1u32..6, raw in any::<u64>()) {
        let w = 2 * n + lambda;
        let x = BitStr::new(w, raw & ((1 << w) - 1)).unwrap();
        let (l, m, r) = split(x, n, lambda).unwrap();
        prop_assert_eq!(join(l, m, r), x);
    }
}
