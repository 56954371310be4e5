//! Acceptance suite. Runs every criterion, prints one line per criterion and
//! exits nonzero if any fails.
//!
//! Tolerances and sizes are pinned in the constants below.

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use mvfield::connection::{classify, ComponentKind, Flatness, HolonomyClass};
use mvfield::hamiltonian::{fl_relatedness, hamiltonian_image, hdw_pullback, legendre_of, HamiltonianSystem};
use mvfield::lagrangian::LagrangianSystem;
use mvfield::mvf::MvfFamily;
use mvfield::numeric::{
    el_residual_grid, fd_check, integrate_flat, second_order_residual_grid, Grid, GridSection, InitialData,
};
use mvfield::symcore::{parse_expr, zero_test, ChartSpec, Expr, Symbol};

const DOF_BUDGET: Duration = Duration::from_secs(10);
const CONTRACTION_DRAWS: usize = 20;
const FLAT_GRID_NODES: usize = 64;
const FLAT_MAX_ERROR: f64 = 1e-6;
const FLAT_RESIDUAL: f64 = 1e-6;
const FLAT_BUDGET: Duration = Duration::from_secs(5);
const RATIO_RANGE: (f64, f64) = (3.5, 4.5);
const WAVE_RESIDUAL_AT_1E2: f64 = 1e-4;
const FD_TRIPLES: usize = 100;
const FD_STEP: f64 = 1e-5;
const FD_TOLERANCE: f64 = 1e-6;
const SEED: u64 = 0x5eed_0001;

type Outcome = Result<String, String>;

fn chart(m: usize, n: usize) -> ChartSpec {
    ChartSpec::new(m, n).unwrap()
}

fn lag(m: usize, n: usize, text: &str) -> LagrangianSystem {
    let c = chart(m, n);
    LagrangianSystem::new(c, parse_expr(text, &c).unwrap()).unwrap()
}

fn ham(m: usize, n: usize, text: &str) -> HamiltonianSystem {
    let c = chart(m, n);
    HamiltonianSystem::new(c, parse_expr(text, &c).unwrap()).unwrap()
}

/// Regular Lagrangians used across criteria, as `(name, m, N, L)`.
const CORPUS: &[(&str, usize, usize, &str)] = &[
    ("free-1d", 1, 1, "1/2*v1_1^2"),
    ("oscillator-pair", 1, 2, "1/2*(v1_1^2 + v2_1^2) - y1*y2"),
    ("klein-gordon", 2, 1, "1/2*(v1_1^2 - v1_2^2 - y1^2)"),
    ("laplace", 2, 1, "1/2*(v1_1^2 + v1_2^2)"),
    ("sine-gordon", 2, 1, "1/2*(v1_1^2 - v1_2^2) + cos(y1)"),
    ("coupled", 2, 2, "1/2*(v1_1^2 + v1_2^2 + v2_1^2 + v2_2^2) + 1/3*v1_1*v2_2 - y1*y2 + x1*y2"),
    ("wave-3d", 3, 1, "1/2*(v1_1^2 - v1_2^2 - v1_3^2)"),
    ("graded-medium", 1, 1, "1/2*exp(x1)*v1_1^2 - 1/2*y1^2"),
];

fn corpus() -> Vec<(&'static str, LagrangianSystem)> {
    CORPUS.iter().map(|&(name, m, n, l)| (name, lag(m, n, l))).collect()
}

/// Quadratic Lagrangian with mixed signature, a velocity cross term when
/// `N ≥ 2`, a field coupling and explicit base dependence.
fn generic_lagrangian(m: usize, n: usize) -> LagrangianSystem {
    let mut terms = Vec::new();
    for a in 1..=n {
        for mu in 1..=m {
            let w = [1, -1, 2][mu - 1] * (a as i64);
            terms.push(format!("{w}/2*v{a}_{mu}^2"));
        }
        terms.push(format!("-1/2*y{a}^2"));
    }
    if n >= 2 {
        terms.push("1/5*v1_1*v2_1".into());
        terms.push("y1*y2".into());
    }
    terms.push("x1*y1".into());
    lag(m, n, &terms.join(" + "))
}

fn generic_hamiltonian(m: usize, n: usize) -> HamiltonianSystem {
    let mut terms = Vec::new();
    for a in 1..=n {
        for mu in 1..=m {
            let w = [1, -1, 3][mu - 1];
            terms.push(format!("{w}/2*p{a}_{mu}^2"));
        }
        terms.push(format!("1/2*y{a}^2"));
    }
    if n >= 2 {
        terms.push("y1*y2".into());
    }
    terms.push("x1*y1".into());
    ham(m, n, &terms.join(" + "))
}

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn proven_zero(e: &Expr) -> bool {
    zero_test(e).is_proven_zero()
}

fn free_counts() -> Outcome {
    let start = Instant::now();
    let mut seen = Vec::new();
    for (m, n) in [(1, 1), (1, 2), (2, 1), (2, 2), (3, 1)] {
        let expected = n * (m * m - 1);
        let l = generic_lagrangian(m, n).solve_el_mvf().map_err(|e| e.to_string())?;
        let h = generic_hamiltonian(m, n).hdw_solve().map_err(|e| e.to_string())?;
        ensure(
            l.family.free_count == expected && h.family.free_count == expected,
            format!(
                "(m, N) = ({m}, {n}): Lagrangian {}, Hamiltonian {}, expected {expected}",
                l.family.free_count, h.family.free_count
            ),
        )?;
        seen.push(format!("({m},{n})→{expected}"));
    }
    let took = start.elapsed();
    ensure(took < DOF_BUDGET, format!("took {took:?}"))?;
    Ok(format!("{} in {:.2?}", seen.join(" "), took))
}

fn forcing() -> Outcome {
    let mut count = 0;
    for (name, sys) in corpus() {
        let rec = sys.semi_holonomy_forcing().map_err(|e| format!("{name}: {e}"))?;
        for (a, row) in rec.f.iter().enumerate() {
            for (mu, f) in row.iter().enumerate() {
                let f = f.as_ref().ok_or(format!("{name}: F{}_{} free", a + 1, mu + 1))?;
                ensure(
                    proven_zero(&(f - &Expr::sym(Symbol::v(a, mu)))),
                    format!("{name}: F{}_{} = {f}", a + 1, mu + 1),
                )?;
                count += 1;
            }
        }
    }
    Ok(format!("{count} entries equal v across {} Lagrangians", CORPUS.len()))
}

fn random_poly(rng: &mut ChaCha8Rng, coords: &[Symbol]) -> Expr {
    let mut e = Expr::int(rng.random_range(-3..=3));
    for _ in 0..rng.random_range(1..=3) {
        let mut t = Expr::int(rng.random_range(-3..=3));
        for _ in 0..rng.random_range(1..=2) {
            t = &t * &Expr::sym(coords.choose(rng).unwrap().clone());
        }
        e = &e + &t;
    }
    e
}

fn draws(rng: &mut ChaCha8Rng, family: &MvfFamily, coords: &[Symbol]) -> Vec<MvfFamily> {
    (0..CONTRACTION_DRAWS)
        .map(|_| {
            let assign: BTreeMap<String, Expr> =
                family.params.iter().map(|p| (p.clone(), random_poly(rng, coords))).collect();
            family.instantiate(&assign).unwrap()
        })
        .collect()
}

fn contraction_vanishing() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut checked = 0;
    let lagrangians = [lag(2, 1, CORPUS[2].3), generic_lagrangian(2, 2)];
    for sys in &lagrangians {
        let fam = sys.solve_el_mvf().map_err(|e| e.to_string())?.family;
        let coords = sys.space().coords();
        for x in draws(&mut rng, &fam, &coords) {
            let r = sys.contraction_residual(&x).map_err(|e| e.to_string())?;
            if let Some(bad) = r.entries().find(|e| !e.verdict.is_proven_zero()) {
                return Err(format!("X_L coefficient on {} is {}", bad.coord, bad.value));
            }
            checked += 1;
        }
    }
    let hamiltonians = [ham(2, 1, "1/2*(p1_1^2 - p1_2^2 + y1^2)"), generic_hamiltonian(2, 2)];
    for sys in &hamiltonians {
        let fam = sys.hdw_solve().map_err(|e| e.to_string())?.family;
        let coords = sys.space().coords();
        for x in draws(&mut rng, &fam, &coords) {
            let r = sys.hdw_residual(&x).map_err(|e| e.to_string())?;
            if let Some(bad) = r.entries().find(|e| !e.verdict.is_proven_zero()) {
                return Err(format!("X_H coefficient on {} is {}", bad.coord, bad.value));
            }
            checked += 1;
        }
    }
    Ok(format!("{checked} instantiated members, every dv/dp, dy, dx coefficient proven zero"))
}

fn cartan_cross_check() -> Outcome {
    for (name, m, n, l) in [CORPUS[2], CORPUS[3], CORPUS[0]] {
        let forms = lag(m, n, l).cartan_forms();
        ensure(forms.consistent(), format!("{name}: −dΘ_L − display = {}", forms.mismatch()))?;
    }
    Ok("klein-gordon, laplace, free: −dΘ_L matches the coefficient display termwise".into())
}

fn el_identity() -> Outcome {
    for (name, sys) in corpus() {
        for (a, e) in sys.el_identity().iter().enumerate() {
            ensure(proven_zero(e), format!("{name}: row {} leaves {e}", a + 1))?;
        }
    }
    Ok(format!("{} Lagrangians", CORPUS.len()))
}

fn legendre_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ 6);
    for (name, m, n, l) in [CORPUS[2], CORPUS[3]] {
        let sys = lag(m, n, l);
        let (map, h) = legendre_of(&sys).map_err(|e| format!("{name}: {e}"))?;
        let (first, second) = hdw_pullback(&sys, &map, &h);
        ensure(first.iter().flatten().all(proven_zero), format!("{name}: ∂H/∂p does not pull back to v"))?;
        for (a, (s, el)) in second.iter().zip(sys.euler_lagrange()).enumerate() {
            ensure(proven_zero(&(s + &el)), format!("{name}: field equation {} differs from EL", a + 1))?;
        }
        let fam = sys.solve_el_mvf().map_err(|e| e.to_string())?.family;
        let coords = sys.space().coords();
        for x_l in draws(&mut rng, &fam, &coords).into_iter().take(3) {
            let x_h = hamiltonian_image(&map, &x_l).ok_or(format!("{name}: no Hamiltonian image"))?;
            let res = h.hdw_residual(&x_h).map_err(|e| e.to_string())?;
            ensure(res.all_proven_zero(), format!("{name}: image does not solve the HDW equations"))?;
            let rel = fl_relatedness(&sys, &x_l, &x_h).map_err(|e| format!("{name}: {e}"))?;
            ensure(rel.f.is_one(), format!("{name}: f = {}", rel.f))?;
        }
    }
    Ok("klein-gordon, laplace: pullback reproduces EL, f = 1 on 3 members each".into())
}

fn flatness_discrimination() -> Outcome {
    let c = chart(2, 1);
    let e = |t: &str| parse_expr(t, &c).unwrap();
    let member = |g: [[&str; 2]; 2]| {
        let g = vec![g.iter().map(|row| row.iter().map(|t| e(t)).collect()).collect()];
        MvfFamily::semi_holonomic(c, g).unwrap()
    };
    let laplace = classify(&member([["1", "0"], ["0", "-1"]])).unwrap();
    ensure(
        laplace.curvature.flatness == Flatness::Flat && laplace.class == HolonomyClass::Holonomic,
        format!("laplace member: {}", laplace.curvature.flatness.label()),
    )?;
    let kg = classify(&member([["-y1", "0"], ["0", "0"]])).unwrap();
    let witness = kg.curvature.first_nonzero().ok_or("klein-gordon member has no nonzero component")?;
    ensure(kg.curvature.flatness == Flatness::NonFlat, "klein-gordon member not reported non-flat")?;
    let asym = classify(&member([["0", "1"], ["0", "0"]])).unwrap();
    ensure(
        asym.curvature
            .group(ComponentKind::Field)
            .any(|k| k.verdict.is_proven_nonzero()),
        "asymmetric G passes the symmetry group",
    )?;
    Ok(format!(
        "laplace flat; klein-gordon non-flat ({} along {} = {}); asymmetric G breaks symmetry",
        witness.kind.label(kg.curvature.bundle),
        witness.coord,
        witness.value
    ))
}

fn flat_integration() -> Outcome {
    let start = Instant::now();
    let c = chart(2, 1);
    let g = vec![vec![vec![Expr::one(), Expr::zero()], vec![Expr::zero(), -Expr::one()]]];
    let x = MvfFamily::semi_holonomic(c, g).unwrap();
    let grid = Grid::uniform(2, FLAT_GRID_NODES, 0.0, 1.0).unwrap();
    let init = InitialData {
        y: vec![0.0],
        v: vec![vec![0.0, 0.0]],
    };
    let out = integrate_flat(&x, &init, &grid, FLAT_RESIDUAL).map_err(|e| e.to_string())?;
    let err = (0..grid.len())
        .map(|i| {
            let p = grid.coords(i);
            (out.section.y[0][i] - 0.5 * (p[0] * p[0] - p[1] * p[1])).abs()
        })
        .fold(0.0, f64::max);
    let res = second_order_residual_grid(&x, &out.section, FLAT_RESIDUAL).map_err(|e| e.to_string())?;
    let took = start.elapsed();
    ensure(err < FLAT_MAX_ERROR, format!("max error {err:e}"))?;
    ensure(res.pass, format!("integrability residual {:e}", res.max_abs()))?;
    ensure(took < FLAT_BUDGET, format!("took {took:?}"))?;
    Ok(format!(
        "{n}×{n} grid: max error {err:.1e}, integrability residual {:.1e}, {took:.2?}",
        res.max_abs(),
        n = FLAT_GRID_NODES
    ))
}

fn wave_residual(h: f64) -> Result<f64, String> {
    let c = chart(2, 1);
    let sys = lag(2, 1, CORPUS[2].3);
    let nodes = (1.0 / h).round() as usize + 1;
    let grid = Grid::uniform(2, nodes, 0.0, 1.0).unwrap();
    let y = parse_expr("cos(5/4*x1 + 3/4*x2)", &c).unwrap();
    let s = GridSection::sample(grid, &[y], None).map_err(|e| e.to_string())?;
    Ok(el_residual_grid(&sys, &s, f64::INFINITY).map_err(|e| e.to_string())?.max_abs())
}

fn convergence() -> Outcome {
    let coarse = wave_residual(2e-2)?;
    let fine = wave_residual(1e-2)?;
    let ratio = coarse / fine;
    ensure(
        (RATIO_RANGE.0..=RATIO_RANGE.1).contains(&ratio),
        format!("ratio {ratio:.3} ({coarse:e} / {fine:e})"),
    )?;
    ensure(fine < WAVE_RESIDUAL_AT_1E2, format!("residual {fine:e} at h = 1e-2"))?;
    Ok(format!("ratio {ratio:.3}, max residual {fine:.2e} at h = 1e-2"))
}

fn derivative_validation() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ 10);
    let mut pool: Vec<(ChartSpec, Expr)> = Vec::new();
    for (_, sys) in corpus() {
        pool.push((sys.chart(), sys.lagrangian().clone()));
        pool.extend(sys.euler_lagrange().into_iter().map(|e| (sys.chart(), e)));
    }
    pool.retain(|(_, e)| !e.is_constant());
    let mut worst = 0.0f64;
    for _ in 0..FD_TRIPLES {
        let (c, e) = pool.choose(&mut rng).unwrap();
        let syms: Vec<Symbol> = e.symbols().into_iter().collect();
        let s = syms.choose(&mut rng).unwrap().clone();
        let mut all = c.base();
        all.extend(c.fields());
        all.extend(c.velocities());
        all.extend(c.second_order());
        let point: BTreeMap<Symbol, f64> = all.into_iter().map(|s| (s, rng.random_range(-1.0..1.0))).collect();
        let r = fd_check(e, &s, &point, FD_STEP).map_err(|err| err.to_string())?;
        ensure(r.error < FD_TOLERANCE, format!("∂({e})/∂{s}: error {:e}", r.error))?;
        worst = worst.max(r.error);
    }
    Ok(format!("{FD_TRIPLES} triples, worst relative error {worst:.1e}"))
}

fn singular_reporting() -> Outcome {
    let r = lag(1, 2, "1/2*v1_1^2").singular_report().map_err(|e| e.to_string())?;
    ensure(r.hessian_rank == 1 && r.hessian_size == 2, format!("rank {} of {}", r.hessian_rank, r.hessian_size))?;
    ensure(r.el_solution.compatible, "degenerate row of ½(v¹)² reported incompatible")?;
    let bad = lag(1, 2, "v1_1*y2").singular_report().map_err(|e| e.to_string())?;
    ensure(!bad.el_solution.compatible, "v¹·y² reported compatible")?;
    let rows: Vec<String> = bad
        .el_solution
        .inconsistent_rows
        .iter()
        .map(|(i, r)| format!("row {}: 0 = {r}", i + 1))
        .collect();
    Ok(format!("½(v¹)²: rank 1 of 2, compatible; v¹·y²: incompatible ({})", rows.join(", ")))
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 11] = [
        ("free-function counts N(m²−1)", free_counts),
        ("semi-holonomy forcing F = v", forcing),
        ("contraction vanishing on random members", contraction_vanishing),
        ("Poincaré–Cartan form cross-check", cartan_cross_check),
        ("EL / coefficient-system identity", el_identity),
        ("Legendre equivalence and FL-relatedness", legendre_equivalence),
        ("flatness discrimination", flatness_discrimination),
        ("flat integration of the Laplace member", flat_integration),
        ("second-order convergence on the KG plane wave", convergence),
        ("finite-difference derivative validation", derivative_validation),
        ("singular Lagrangian reporting", singular_reporting),
    ];
    let mut failed = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let outcome = std::panic::catch_unwind(run).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        match outcome {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail}", k + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {detail}", k + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
