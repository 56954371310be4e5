use proptest::prelude::*;

use mvfield::extcalc::{contract, decomposable, ext_d, wedge, DiffForm, Space, VectorField};
use mvfield::mvf::MvfFamily;
use mvfield::symcore::{parse_expr, ChartSpec, Expr, Symbol};

fn space() -> Space {
    Space::jet(ChartSpec::new(2, 1).unwrap())
}

const POOL: &[&str] = &[
    "1",
    "-2",
    "x1",
    "y1*v1_2",
    "x2^2 - v1_1",
    "1/3*y1^2*x1",
    "sin(y1)",
    "exp(x2)*v1_1",
    "cos(v1_2 + x1)",
];

fn coefficient() -> impl Strategy<Value = Expr> {
    proptest::sample::select(POOL).prop_map(|t| parse_expr(t, &space().chart).unwrap())
}

fn form(max_degree: usize) -> impl Strategy<Value = DiffForm> {
    let coords = space().coords();
    let k = coords.len();
    (0..=max_degree).prop_flat_map(move |deg| {
        let coords = coords.clone();
        proptest::collection::vec((coefficient(), proptest::sample::subsequence((0..k).collect::<Vec<_>>(), deg)), 1..4)
            .prop_map(move |terms| {
                let mut out = DiffForm::zero(space(), deg);
                for (c, idx) in terms {
                    let cs: Vec<Symbol> = idx.iter().map(|&i| coords[i].clone()).collect();
                    out = out.add(&DiffForm::monomial(space(), c, &cs).unwrap());
                }
                out
            })
    })
}

fn vector_field() -> impl Strategy<Value = VectorField> {
    proptest::collection::vec(coefficient(), space().coords().len()).prop_map(|cs| {
        VectorField::from_components(space(), space().coords().into_iter().zip(cs)).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn d_squared_vanishes(a in form(3)) {
        prop_assert!(ext_d(&ext_d(&a)).is_zero());
    }

    #[test]
    fn leibniz_rule(a in form(2), b in form(2)) {
        let lhs = ext_d(&wedge(&a, &b).unwrap());
        let sign = if a.degree() % 2 == 0 { Expr::one() } else { -Expr::one() };
        let rhs = wedge(&ext_d(&a), &b)
            .unwrap()
            .add(&wedge(&a, &ext_d(&b)).unwrap().scale(&sign));
        prop_assert!(lhs.sub(&rhs).is_zero());
    }

    #[test]
    fn contraction_is_factor_antisymmetric(x in vector_field(), y in vector_field(), w in form(4)) {
        prop_assume!(w.degree() >= 2);
        let xy = contract(&decomposable(&[x.clone(), y.clone()]).unwrap(), &w).unwrap();
        let yx = contract(&decomposable(&[y, x]).unwrap(), &w).unwrap();
        prop_assert!(xy.add(&yx).is_zero());
    }

    #[test]
    fn normalized_members_have_unit_volume(g in proptest::collection::vec(coefficient(), 4)) {
        let chart = space().chart;
        let g = vec![vec![vec![g[0].clone(), g[1].clone()], vec![g[2].clone(), g[3].clone()]]];
        let x = MvfFamily::semi_holonomic(chart, g).unwrap();
        let vol = contract(&x.to_multivec(), &DiffForm::volume(space())).unwrap();
        prop_assert_eq!(vol.degree(), 0);
        prop_assert!(vol.sub(&DiffForm::scalar(space(), Expr::one())).is_zero());
    }
}
