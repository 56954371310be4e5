use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_traits::{ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::expr::Expr;
use super::poly::Rational;
use super::symbol::Symbol;

/// Number of random points used for expressions with kernel atoms.
pub const SAMPLE_COUNT: usize = 16;
/// Absolute threshold below which a sampled value counts as zero.
pub const SAMPLE_TOLERANCE: f64 = 1e-9;
/// A sampled value above this magnitude certifies a nonzero expression.
pub const WITNESS_THRESHOLD: f64 = 1e-6;

const SEED: u64 = 0x006d_7666_6965_6c64;
const EXACT_ATTEMPTS: usize = 64;

/// A point at which an expression was evaluated.
pub type Witness = BTreeMap<Symbol, Rational>;

#[derive(Debug, Clone, PartialEq)]
pub enum ZeroVerdict {
    /// The canonical numerator is the zero polynomial.
    ProvenZero,
    /// Nonzero at the given rational point.
    ProvenNonzero(Witness),
    /// Below [`SAMPLE_TOLERANCE`] at this many random points, but not
    /// canonically zero.
    NumericallyZero(usize),
    Undecided,
}

impl ZeroVerdict {
    pub fn is_proven_zero(&self) -> bool {
        matches!(self, ZeroVerdict::ProvenZero)
    }

    pub fn is_proven_nonzero(&self) -> bool {
        matches!(self, ZeroVerdict::ProvenNonzero(_))
    }

    /// Zero either by proof or by sampling.
    pub fn is_zero_like(&self) -> bool {
        matches!(
            self,
            ZeroVerdict::ProvenZero | ZeroVerdict::NumericallyZero(_)
        )
    }

    pub fn label(&self) -> &'static str {
        match self {
            ZeroVerdict::ProvenZero => "proven-zero",
            ZeroVerdict::ProvenNonzero(_) => "proven-nonzero",
            ZeroVerdict::NumericallyZero(_) => "numerically-zero",
            ZeroVerdict::Undecided => "undecided",
        }
    }
}

fn random_rational(rng: &mut ChaCha8Rng) -> Rational {
    let p: i64 = rng.random_range(-40..=40);
    let q: i64 = rng.random_range(1..=19);
    Rational::new(BigInt::from(p), BigInt::from(q))
}

/// Decide whether `e` vanishes identically.
///
/// Polynomial and rational expressions without kernels are decided exactly:
/// a nonzero numerator is certified by an exact rational evaluation. With
/// kernels, a canonically nonzero expression is sampled at
/// [`SAMPLE_COUNT`] random rational points.
pub fn zero_test(e: &Expr) -> ZeroVerdict {
    if e.is_zero() {
        return ZeroVerdict::ProvenZero;
    }
    let symbols: Vec<Symbol> = e.symbols().into_iter().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    if !e.has_kernels() {
        for attempt in 0..EXACT_ATTEMPTS {
            let point: Witness = symbols
                .iter()
                .map(|s| {
                    // Start with small integers for readable witnesses.
                    let v = if attempt < 4 {
                        Rational::from_integer(BigInt::from(attempt as i64 + 1))
                    } else {
                        random_rational(&mut rng)
                    };
                    (s.clone(), v)
                })
                .collect();
            if let Some(v) = e.eval_exact(&|s| point.get(s).cloned()) {
                if !v.is_zero() {
                    return ZeroVerdict::ProvenNonzero(point);
                }
            }
        }
        return ZeroVerdict::Undecided;
    }
    let mut all_small = true;
    for _ in 0..SAMPLE_COUNT {
        let point: Witness = symbols
            .iter()
            .map(|s| (s.clone(), random_rational(&mut rng) / Rational::from_integer(BigInt::from(10))))
            .collect();
        let value = e.eval_f64(&|s| point.get(s).and_then(|r| r.to_f64()));
        match value {
            Ok(v) if v.abs() > WITNESS_THRESHOLD => return ZeroVerdict::ProvenNonzero(point),
            Ok(v) if v.abs() <= SAMPLE_TOLERANCE => {}
            _ => all_small = false,
        }
    }
    if all_small {
        ZeroVerdict::NumericallyZero(SAMPLE_COUNT)
    } else {
        ZeroVerdict::Undecided
    }
}
