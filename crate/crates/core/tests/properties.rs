use proptest::prelude::*;

use proper_regret::downstream::{zero_one_bound_check, ranking_bound_check};
use proper_regret::generators::AffineShift;
use proper_regret::modulus::{closed_form_derivative, inverse_modulus, modulus_closed_form, modulus_curve, CurveMethod, SearchConfig};
use proper_regret::proper_loss::{bayes_risk, conditional_risk, jensen_gap, savage_loss, surrogate_regret};
use proper_regret::simplex::p_norm;
use proper_regret::{ConvexGenerator, Family, GeneratorSpec, PNorm, ProbVec};

fn generators(n: usize) -> Vec<GeneratorSpec> {
    use Family::*;
    let mut v = vec![GeneratorSpec::new(Shannon, None, n).unwrap()];
    for (f, a) in [(SquaredAlphaNorm, 1.5), (SquaredAlphaNorm, 2.0), (SquaredAlphaNorm, 3.0), (AlphaNorm, 2.0), (AlphaNorm, 4.0), (Tsallis, 1.5), (Tsallis, 2.5), (Tsallis, 4.0), (MaxPower, 2.0), (MaxPower, 3.0)] {
        v.push(GeneratorSpec::new(f, Some(a), n).unwrap());
    }
    v
}

fn simplex_point(n: usize) -> impl Strategy<Value = ProbVec> {
    prop::collection::vec(0.0f64..1.0, n).prop_filter_map("zero mass", |w| {
        let s: f64 = w.iter().sum();
        if s < 1e-6 {
            return None;
        }
        ProbVec::new(w.iter().map(|x| x / s).collect()).ok()
    })
}

fn interior_point(n: usize) -> impl Strategy<Value = ProbVec> {
    prop::collection::vec(0.01f64..1.0, n).prop_map(|w| {
        let s: f64 = w.iter().sum();
        ProbVec::new(w.iter().map(|x| x / s).collect()).unwrap()
    })
}

fn p_norm_strategy() -> impl Strategy<Value = PNorm> {
    prop_oneof![Just(PNorm::ONE), Just(PNorm::TWO), Just(PNorm::Infinity), (1.0f64..6.0).prop_map(|p| PNorm::new(p).unwrap())]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn binary_distance_is_scaled_first_coordinate(a in 0.0f64..=1.0, b in 0.0f64..=1.0, p in p_norm_strategy()) {
        let d = p_norm(&[a - b, b - a], p).unwrap();
        let expected = 2f64.powf(p.reciprocal()) * (a - b).abs();
        prop_assert!((d - expected).abs() <= 1e-12);
    }

    #[test]
    fn jensen_gap_ignores_affine_terms(
        q in simplex_point(3), q_check in simplex_point(3),
        slope in prop::collection::vec(-5.0f64..5.0, 3), offset in -5.0f64..5.0,
    ) {
        for g in generators(3) {
            let shifted = AffineShift::new(g, slope.clone(), offset).unwrap();
            let a = jensen_gap(&g, &q, &q_check).unwrap();
            let b = jensen_gap(&shifted, &q, &q_check).unwrap();
            prop_assert!((a - b).abs() <= 1e-10, "{:?}: {a} vs {b}", g.info());
        }
    }

    #[test]
    fn savage_identities(q in interior_point(3), q_hat in interior_point(3)) {
        for g in generators(3) {
            let own = conditional_risk(&g, &q_hat, &q_hat).unwrap();
            prop_assert!((own + g.value(q_hat.as_slice())).abs() <= 1e-9);
            let reg = surrogate_regret(&g, &q, &q_hat).unwrap().value();
            let diff = conditional_risk(&g, &q, &q_hat).unwrap() - bayes_risk(&g, &q).unwrap();
            prop_assert!(reg >= 0.0);
            prop_assert!((reg - diff).abs() <= 1e-9, "{:?}: {reg} vs {diff}", g.info());
            let l = savage_loss(&g, &q_hat).unwrap();
            prop_assert!((l.expected(q.as_slice()) - conditional_risk(&g, &q, &q_hat).unwrap()).abs() <= 1e-12);
        }
    }

    #[test]
    fn regret_vanishes_only_on_the_diagonal(q in interior_point(3), q_hat in interior_point(3)) {
        for g in generators(3).into_iter().filter(|g| g.is_strict()) {
            let reg = surrogate_regret(&g, &q, &q_hat).unwrap().value();
            let d = p_norm(&q.as_slice().iter().zip(q_hat.as_slice()).map(|(a, b)| a - b).collect::<Vec<_>>(), PNorm::TWO).unwrap();
            if d > 1e-3 {
                prop_assert!(reg > 0.0, "{:?}", g.info());
            }
            prop_assert!(surrogate_regret(&g, &q, &q).unwrap().value().abs() <= 1e-12);
        }
    }

    #[test]
    fn closed_form_modulus_bounds_half_regret(a in 0.0f64..=1.0, b in 0.0f64..=1.0, p in p_norm_strategy()) {
        let (q, q_hat) = (ProbVec::binary(a).unwrap(), ProbVec::binary(b).unwrap());
        let d = p_norm(&[a - b, b - a], p).unwrap();
        for g in generators(2) {
            let reg = surrogate_regret(&g, &q, &q_hat).unwrap().value();
            if reg.is_infinite() {
                continue;
            }
            let w = modulus_closed_form(&g, p, d).unwrap();
            prop_assert!(w <= 0.5 * reg + 1e-9, "{:?} d={d}: {w} > {}", g.info(), 0.5 * reg);
        }
    }

    #[test]
    fn closed_forms_increase_with_r(r1 in 0.0f64..=2.0, r2 in 0.0f64..=2.0) {
        let (lo, hi) = if r1 <= r2 { (r1, r2) } else { (r2, r1) };
        for g in generators(2) {
            let (a, b) = (modulus_closed_form(&g, PNorm::ONE, lo).unwrap(), modulus_closed_form(&g, PNorm::ONE, hi).unwrap());
            prop_assert!(b >= a - 1e-15);
            prop_assert!(closed_form_derivative(&g, PNorm::ONE, hi.max(1e-6)).unwrap() >= -1e-12);
        }
    }

    #[test]
    fn plug_in_classification_bound(q in simplex_point(4), q_hat in simplex_point(4), p in p_norm_strategy()) {
        let c = zero_one_bound_check(&q, &q_hat, p).unwrap();
        prop_assert!(c.pass, "{c:?}");
    }

    #[test]
    fn ranking_bound(q in 0.0f64..=1.0, qp in 0.0f64..=1.0, h in 0.0f64..=1.0, hp in 0.0f64..=1.0) {
        prop_assert!(ranking_bound_check(q, qp, h, hp).unwrap().pass);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn inverse_modulus_undoes_the_curve(k in 1usize..200) {
        let g = GeneratorSpec::shannon(2).unwrap();
        let grid: Vec<f64> = (0..=200).map(|i| 2.0 * i as f64 / 200.0).collect();
        let curve = modulus_curve(&g, PNorm::ONE, &grid, CurveMethod::Closed, &SearchConfig::default()).unwrap();
        let r = grid[k];
        let back = inverse_modulus(&curve, curve.omegas()[k]).unwrap();
        prop_assert!((back - r).abs() < 1e-8, "{back} vs {r}");
    }
}
