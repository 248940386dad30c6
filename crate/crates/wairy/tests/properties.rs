//! Property-based checks: ring laws and canonicality of the scalar field
//! (cross-checked against a floating evaluation at a numerical root of
//! unity), partition profile round trips, and the Jacobi/ring-action laws
//! of the operator algebra.

use proptest::prelude::*;
use wairy::partitions::{find_partition_with_profile, Partition};
use wairy::scalar::{CycloScalar, ScalarCtx};
use wairy::weyl::{
    apply, normal_order_product, operator_commutator, GradedOperator, Mode, Poly, PolyKey, Window,
};

fn scalar_strategy(order: u32, symbols: u32) -> impl Strategy<Value = CycloScalar> {
    let ctx = ScalarCtx::new(order, symbols);
    let deg = ctx.phi_degree();
    let term = (
        0..deg,
        -6i64..=6,
        1i64..=4,
        proptest::collection::vec(0u32..=2, (symbols - 1) as usize),
    );
    proptest::collection::vec(term, 0..4).prop_map(move |terms| {
        let mut acc = ctx.zero();
        for (pow, num, den, cexps) in terms {
            let mut t = ctx
                .root_power(pow as i64)
                .scale(&wairy::scalar::Rat::new(num.into(), den.into()));
            for (j, &e) in cexps.iter().enumerate() {
                for _ in 0..e {
                    t = t.try_mul(&ctx.c_symbol(j as u32 + 1).unwrap()).unwrap();
                }
            }
            acc = acc.try_add(&t).unwrap();
        }
        acc
    })
}

/// Numerical evaluation at omega = exp(2 pi i / N), C_j mapped to small
/// reals with the last symbol eliminated. Test-only; the core never
/// touches floats.
fn eval_f64(x: &CycloScalar, c: &[f64]) -> (f64, f64) {
    let v = x.to_json();
    let order = v["N"].as_u64().unwrap() as f64;
    let mut re = 0.0;
    let mut im = 0.0;
    for t in v["terms"].as_array().unwrap() {
        let pow = t["omega_pow"].as_u64().unwrap() as f64;
        let num: f64 = t["num"].as_str().unwrap().parse().unwrap();
        let den: f64 = t["den"].as_str().unwrap().parse().unwrap();
        let mut mag = num / den;
        for (j, e) in t["c_monomial"].as_array().unwrap().iter().enumerate() {
            mag *= c[j].powi(e.as_u64().unwrap() as i32);
        }
        let angle = 2.0 * std::f64::consts::PI * pow / order;
        re += mag * angle.cos();
        im += mag * angle.sin();
    }
    (re, im)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn scalar_ring_laws(a in scalar_strategy(6, 2), b in scalar_strategy(6, 2), c in scalar_strategy(6, 2)) {
        let ctx = ScalarCtx::new(6, 2);
        prop_assert!(a.try_add(&a.neg()).unwrap().is_zero());
        prop_assert_eq!(a.try_mul(&ctx.one()).unwrap(), a.clone());
        prop_assert_eq!(
            a.try_add(&b).unwrap(),
            b.try_add(&a).unwrap()
        );
        prop_assert_eq!(
            a.try_mul(&b).unwrap().try_mul(&c).unwrap(),
            a.try_mul(&b.try_mul(&c).unwrap()).unwrap()
        );
        prop_assert_eq!(
            a.try_mul(&b.try_add(&c).unwrap()).unwrap(),
            a.try_mul(&b).unwrap().try_add(&a.try_mul(&c).unwrap()).unwrap()
        );
        if !a.is_zero() && a.is_c_free() {
            prop_assert!(a.try_mul(&a.invert().unwrap()).unwrap().is_one());
        }
    }

    #[test]
    fn scalar_canonical_form_dual_route(a in scalar_strategy(4, 2), b in scalar_strategy(4, 2)) {
        // Two algebraic routes to the same value must coincide exactly,
        // and the exact result must agree with a floating evaluation.
        let s1 = a.try_add(&b).unwrap().try_mul(&a.try_sub(&b).unwrap()).unwrap();
        let s2 = a.try_mul(&a).unwrap().try_sub(&b.try_mul(&b).unwrap()).unwrap();
        prop_assert_eq!(&s1, &s2);
        let c = [0.7314];
        let (re1, im1) = eval_f64(&s1, &c);
        let (ra, ia) = eval_f64(&a, &c);
        let (rb, ib) = eval_f64(&b, &c);
        // a^2 - b^2 in floating complex arithmetic.
        let re2 = ra * ra - ia * ia - (rb * rb - ib * ib);
        let im2 = 2.0 * ra * ia - 2.0 * rb * ib;
        prop_assert!((re1 - re2).abs() < 1e-6 && (im1 - im2).abs() < 1e-6,
            "float cross-check: ({re1},{im1}) vs ({re2},{im2})");
    }

    #[test]
    fn scalar_json_round_trip(a in scalar_strategy(6, 3)) {
        let s = a.to_json_string();
        let back = CycloScalar::from_json_str(&s).unwrap();
        prop_assert_eq!(back.to_json_string(), s);
    }

    #[test]
    fn partition_profile_round_trip(parts in proptest::collection::vec(1u32..=5, 1..5)) {
        let mut parts = parts;
        parts.sort_unstable_by(|x, y| y.cmp(x));
        let p = Partition::new(parts).unwrap();
        let profile = p.lambda_profile();
        let found = find_partition_with_profile(p.sum(), &profile).found().unwrap();
        prop_assert_eq!(found.lambda_profile(), profile);
    }
}

fn small_operator_strategy() -> impl Strategy<Value = GradedOperator> {
    let window = Window::new(4, 24);
    let ctx = ScalarCtx::new(4, 1);
    let mode = prop_oneof![(-2i64..=-1), (1i64..=2)].prop_map(|m| Mode::new(1, m));
    let term = (
        proptest::collection::vec(mode, 0..3),
        -3i64..=3,
        0u32..=1,
    );
    proptest::collection::vec(term, 1..3).prop_map(move |terms| {
        let mut op = GradedOperator::zero(window);
        for (modes, coeff, hbar) in terms {
            op.add_normal_term(ctx.integer(coeff), 2 * hbar, &modes, true)
                .unwrap();
        }
        op
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn jacobi_identity(a in small_operator_strategy(), b in small_operator_strategy(), c in small_operator_strategy()) {
        let ab_c = operator_commutator(&operator_commutator(&a, &b).unwrap(), &c).unwrap();
        let bc_a = operator_commutator(&operator_commutator(&b, &c).unwrap(), &a).unwrap();
        let ca_b = operator_commutator(&operator_commutator(&c, &a).unwrap(), &b).unwrap();
        let sum = ab_c.add(&bc_a).unwrap().add(&ca_b).unwrap();
        prop_assert!(sum.is_zero(), "Jacobi violated: {sum}");
    }

    #[test]
    fn apply_is_ring_action(a in small_operator_strategy(), b in small_operator_strategy()) {
        let ctx = ScalarCtx::new(4, 1);
        let mut f = Poly::zero();
        f.add_term(PolyKey { hbar_half: 0, vars: vec![(1, 1), (1, 2)] }, ctx.one());
        f.add_term(PolyKey { hbar_half: 0, vars: vec![(1, 2), (1, 2)] }, ctx.integer(3));
        let lhs = apply(&a, &apply(&b, &f));
        let rhs = apply(&normal_order_product(&a, &b).unwrap(), &f);
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn product_degree_bound(a in small_operator_strategy(), b in small_operator_strategy()) {
        // Grading degrees are additive under the normal-ordered product:
        // every result term has the degree of some pair of factor terms.
        let prod = normal_order_product(&a, &b).unwrap();
        let degrees: std::collections::BTreeSet<u32> = a
            .terms()
            .flat_map(|(ka, _)| b.terms().map(move |(kb, _)| ka.degree() + kb.degree()))
            .collect();
        for (k, _) in prod.terms() {
            prop_assert!(degrees.contains(&k.degree()));
        }
    }
}
