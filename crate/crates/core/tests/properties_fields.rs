use std::collections::BTreeMap;

use proptest::prelude::*;

use mvfield::connection::{connection_to_mvf, curvature, mvf_to_connection, ComponentKind, Flatness};
use mvfield::hamiltonian::{legendre_of, HamiltonianSystem};
use mvfield::lagrangian::LagrangianSystem;
use mvfield::mvf::MvfFamily;
use mvfield::numeric::{el_residual_grid, Grid, GridSection};
use mvfield::symcore::{parse_expr, zero_test, ChartSpec, Expr};

fn chart(m: usize, n: usize) -> ChartSpec {
    ChartSpec::new(m, n).unwrap()
}

fn zero(e: &Expr) -> bool {
    zero_test(e).is_proven_zero()
}

/// `Σ k_i (v_i)² + cross·v_1 v_last + potential`, with nonzero `k_i`.
fn quadratic_lagrangian(m: usize, n: usize) -> impl Strategy<Value = LagrangianSystem> {
    let k = n * m;
    let weights = proptest::collection::vec(prop_oneof![-3i64..=-1, 1i64..=3], k);
    let potential = proptest::sample::select(vec!["0", "-1/2*y1^2", "x1*y1", "cos(y1)", "y1*v1_1"]);
    (weights, 0i64..=1, potential).prop_map(move |(w, cross, pot)| {
        let c = chart(m, n);
        let vel = c.velocities();
        let mut e = parse_expr(pot, &c).unwrap();
        for (wi, v) in w.iter().zip(&vel) {
            e = &e + &(&Expr::rational(*wi, 2) * &Expr::sym(v.clone()).pow(2));
        }
        if k > 1 && cross == 1 {
            e = &e + &(&Expr::rational(1, 7) * &(&Expr::sym(vel[0].clone()) * &Expr::sym(vel[k - 1].clone())));
        }
        LagrangianSystem::new(c, e).unwrap()
    })
}

fn quadratic_hamiltonian(m: usize, n: usize) -> impl Strategy<Value = HamiltonianSystem> {
    let weights = proptest::collection::vec(prop_oneof![-3i64..=-1, 1i64..=3], n * m);
    weights.prop_map(move |w| {
        let c = chart(m, n);
        let mut e = parse_expr("1/2*y1^2 + x1*y1", &c).unwrap();
        for (wi, p) in w.iter().zip(c.momenta()) {
            e = &e + &(&Expr::rational(*wi, 2) * &Expr::sym(p).pow(2));
        }
        HamiltonianSystem::new(c, e).unwrap()
    })
}

const G_POOL: &[&str] = &["0", "1", "-1", "2/3", "y1", "v1_2", "x1*v1_1", "-y1"];

fn jet_member() -> impl Strategy<Value = MvfFamily> {
    proptest::collection::vec(proptest::sample::select(G_POOL), 4).prop_map(|ts| {
        let c = chart(2, 1);
        let e = |t: &str| parse_expr(t, &c).unwrap();
        let g = vec![vec![vec![e(ts[0]), e(ts[1])], vec![e(ts[2]), e(ts[3])]]];
        MvfFamily::semi_holonomic(c, g).unwrap()
    })
}

fn constant_symmetric() -> impl Strategy<Value = MvfFamily> {
    proptest::collection::vec(-4i64..=4, 3).prop_map(|k| {
        let c = chart(2, 1);
        let g = vec![vec![
            vec![Expr::int(k[0]), Expr::int(k[1])],
            vec![Expr::int(k[1]), Expr::int(k[2])],
        ]];
        MvfFamily::semi_holonomic(c, g).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn hessian_is_symmetric(sys in quadratic_lagrangian(2, 2)) {
        let h = sys.hessian();
        for (i, row) in h.iter().enumerate() {
            for (j, hij) in row.iter().enumerate() {
                prop_assert!(zero(&(hij - &h[j][i])));
            }
        }
    }

    #[test]
    fn el_identity_holds(sys in quadratic_lagrangian(2, 1)) {
        prop_assert!(sys.el_identity().iter().all(zero));
    }

    #[test]
    fn solved_members_annihilate_omega(sys in quadratic_lagrangian(2, 1), draws in proptest::collection::vec(-3i64..=3, 6)) {
        let fam = sys.solve_el_mvf().unwrap().family;
        let c = sys.chart();
        let basis = [Expr::one(), parse_expr("y1", &c).unwrap(), parse_expr("x2*v1_1", &c).unwrap()];
        let assign: BTreeMap<String, Expr> = fam
            .params
            .iter()
            .enumerate()
            .map(|(i, p)| {
                let e = &(&Expr::int(draws[2 * i % 6]) * &basis[i % 3]) + &Expr::int(draws[(2 * i + 1) % 6]);
                (p.clone(), e)
            })
            .collect();
        let x = fam.instantiate(&assign).unwrap();
        prop_assert!(sys.contraction_residual(&x).unwrap().all_proven_zero());
    }

    #[test]
    fn curvature_is_antisymmetric(x in jet_member()) {
        let conn = mvf_to_connection(&x).unwrap();
        let ab = conn.pair_components(0, 1);
        let ba = conn.pair_components(1, 0);
        prop_assert_eq!(ab.len(), ba.len());
        for (p, q) in ab.iter().zip(&ba) {
            prop_assert_eq!(&p.coord, &q.coord);
            prop_assert!(zero(&(&p.value + &q.value)));
        }
    }

    #[test]
    fn constant_symmetric_is_flat(x in constant_symmetric()) {
        let r = curvature(&mvf_to_connection(&x).unwrap());
        prop_assert_eq!(r.flatness, Flatness::Flat);
    }

    #[test]
    fn flat_implies_symmetric(x in jet_member()) {
        let r = curvature(&mvf_to_connection(&x).unwrap());
        if r.flatness == Flatness::Flat {
            prop_assert!(zero(&(&x.g[0][0][1] - &x.g[0][1][0])));
            prop_assert!(r.group(ComponentKind::Field).all(|k| k.verdict.is_proven_zero()));
        }
    }

    #[test]
    fn connection_round_trip(x in jet_member()) {
        prop_assert_eq!(connection_to_mvf(&mvf_to_connection(&x).unwrap()), x);
    }

    #[test]
    fn legendre_round_trip(sys in quadratic_lagrangian(2, 1)) {
        let (map, _) = legendre_of(&sys).unwrap();
        prop_assert!(map.hyper_regular);
        prop_assert!(map.round_trip_residuals().unwrap().iter().all(zero));
    }

    #[test]
    fn force_block_has_full_rank(h in quadratic_hamiltonian(2, 2)) {
        let sol = h.hdw_solve().unwrap();
        prop_assert_eq!(sol.f_solution.rank, 4);
        prop_assert_eq!(sol.family.free_count, 6);
    }
}

#[test]
fn grid_reports_are_bitwise_deterministic() {
    let c = chart(2, 1);
    let sys = LagrangianSystem::new(c, parse_expr("1/2*(v1_1^2 - v1_2^2 - y1^2)", &c).unwrap()).unwrap();
    let grid = Grid::uniform(2, 61, 0.0, 1.0).unwrap();
    let y = parse_expr("cos(5/4*x1 + 3/4*x2) + 1/10*x1^3", &c).unwrap();
    let s = GridSection::sample(grid, &[y], None).unwrap();
    let parallel = el_residual_grid(&sys, &s, 1e-3).unwrap();
    let serial = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap()
        .install(|| el_residual_grid(&sys, &s, 1e-3).unwrap());
    assert_eq!(parallel, serial);
    let bits = |r: &mvfield::numeric::ResidualReport| r.equations[0].rms.to_bits();
    assert_eq!(bits(&parallel), bits(&serial));
}
