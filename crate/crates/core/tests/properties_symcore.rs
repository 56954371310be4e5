use std::collections::BTreeMap;

use proptest::prelude::*;

use mvfield::numeric::fd_check;
use mvfield::symcore::{mat_vec, parse_expr, solve_linear, total_derivative, zero_test, ChartSpec, Expr, Symbol};

fn chart() -> ChartSpec {
    ChartSpec::new(2, 1).unwrap()
}

fn coords() -> Vec<Symbol> {
    let c = chart();
    let mut out = c.base();
    out.extend(c.fields());
    out.extend(c.velocities());
    out
}

fn leaf() -> impl Strategy<Value = Expr> {
    prop_oneof![
        (-3i64..=3).prop_map(Expr::int),
        (1i64..=4, 2i64..=5).prop_map(|(p, q)| Expr::rational(p, q)),
        proptest::sample::select(coords()).prop_map(Expr::sym),
    ]
}

fn expr() -> impl Strategy<Value = Expr> {
    leaf().prop_recursive(3, 16, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| &a + &b),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| &a - &b),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| &a * &b),
            inner.clone().prop_map(|a| a.pow(2)),
            inner.clone().prop_map(|a| a.sin()),
            inner.prop_map(|a| a.cos()),
        ]
    })
}

fn point() -> impl Strategy<Value = BTreeMap<Symbol, f64>> {
    proptest::collection::vec(-1.0f64..1.0, coords().len())
        .prop_map(|vals| coords().into_iter().zip(vals).collect())
}

fn entry() -> impl Strategy<Value = Expr> {
    let c = chart();
    prop_oneof![
        (-2i64..=2).prop_map(Expr::int),
        Just(Expr::sym(Symbol::x(0))),
        Just(Expr::sym(Symbol::y(0))),
        Just(parse_expr("x1 + 1", &c).unwrap()),
    ]
}

fn system() -> impl Strategy<Value = (Vec<Vec<Expr>>, Vec<Expr>)> {
    (1usize..=3, 1usize..=4).prop_flat_map(|(r, c)| {
        (
            proptest::collection::vec(proptest::collection::vec(entry(), c), r),
            proptest::collection::vec(entry(), r),
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn mixed_partials_commute(e in expr(), a in 0usize..5, b in 0usize..5) {
        let (a, b) = (&coords()[a], &coords()[b]);
        prop_assert_eq!(e.diff(a).diff(b), e.diff(b).diff(a));
    }

    #[test]
    fn derivative_matches_central_difference(e in expr(), k in 0usize..5, p in point()) {
        let s = &coords()[k];
        let r = fd_check(&e, s, &p, 1e-5).unwrap();
        prop_assert!(r.error < 1e-6, "{} by {}: {:?}", e, s, r);
    }

    #[test]
    fn total_derivative_is_a_derivation(e in expr(), g in expr(), mu in 0usize..2) {
        let c = chart();
        let d = |x: &Expr| total_derivative(x, mu, &c).unwrap();
        let lhs = d(&(&e * &g));
        let rhs = &(&d(&e) * &g) + &(&e * &d(&g));
        prop_assert!(zero_test(&(&lhs - &rhs)).is_proven_zero());
    }

    #[test]
    fn print_then_parse_is_identity(e in expr()) {
        let back = parse_expr(&e.to_string(), &chart()).unwrap();
        prop_assert_eq!(back, e);
    }

    #[test]
    fn linear_solutions_check_out((m, rhs) in system()) {
        let sol = solve_linear(&m, &rhs).unwrap();
        if sol.compatible {
            for (lhs, r) in mat_vec(&m, &sol.particular).iter().zip(&rhs) {
                prop_assert!(zero_test(&(lhs - r)).is_proven_zero());
            }
        } else {
            prop_assert!(!sol.inconsistent_rows.is_empty());
        }
        prop_assert_eq!(sol.null_basis.len(), sol.free_count);
        prop_assert_eq!(sol.rank + sol.free_count, m[0].len());
        for n in &sol.null_basis {
            prop_assert!(mat_vec(&m, n).iter().all(|e| zero_test(e).is_proven_zero()));
        }
    }
}
