//! Sampled region-equivalence oracle.
//!
//! Membership of each sampled point is decided exactly: a float evaluation
//! with a conservative error margin settles the clear cases, and anything
//! within the margin of a facet is re-evaluated in rational arithmetic.
//! Points are dyadic fractions of the box, so their exact coordinates can be
//! reconstructed on demand; the float fast path never touches a bignum.

use num::{BigInt, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{rational_to_f64, LinearSystem, PolyError, Rational, Var};

/// Relative slack under which the float path refuses to decide a row.
const FLOAT_MARGIN: f64 = 1e-9;

const DYADIC_BITS: u32 = 53;

/// Draws `n` points from a box enclosing both systems (seeded, reproducible)
/// and reports whether membership agrees on every point.
///
/// Per-variable sampling range is `[0, 1.2 * max single-user bound]` taken
/// from whichever system has such a bound, else `[0, 100]`: rate regions live
/// in the nonnegative orthant with finite single-user caps.
pub fn equivalent_on_samples(
    a: &LinearSystem,
    b: &LinearSystem,
    n: usize,
    seed: u64,
) -> Result<bool, PolyError> {
    let mut va: Vec<Var> = a.vars().to_vec();
    let mut vb: Vec<Var> = b.vars().to_vec();
    va.sort();
    vb.sort();
    if va != vb {
        return Err(PolyError::VariableSetMismatch);
    }
    let vars = va;

    let hi: Vec<Rational> = vars.iter().map(|&v| sample_cap(v, a, b)).collect();
    let hi_f64: Vec<f64> = hi.iter().map(rational_to_f64).collect();

    let ea = Evaluator::new(a, &vars);
    let eb = Evaluator::new(b, &vars);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut point = SamplePoint {
        numerators: vec![0; vars.len()],
        f64s: vec![0.0; vars.len()],
        hi: &hi,
    };
    let scale = 1.0 / (1u64 << DYADIC_BITS) as f64;
    for _ in 0..n {
        for j in 0..vars.len() {
            let k: u64 = rng.gen_range(0..=(1u64 << DYADIC_BITS));
            point.numerators[j] = k;
            point.f64s[j] = k as f64 * scale * hi_f64[j];
        }
        if ea.contains(&point) != eb.contains(&point) {
            return Ok(false);
        }
    }
    Ok(true)
}

fn sample_cap(v: Var, a: &LinearSystem, b: &LinearSystem) -> Rational {
    let cap = a
        .rows()
        .iter()
        .chain(b.rows().iter())
        .filter_map(|row| match row.single_var_cap() {
            Some((u, cap)) if u == v => Some(cap),
            _ => None,
        })
        .max();
    match cap {
        Some(c) if c.is_positive() => c * Rational::new(6.into(), 5.into()),
        Some(_) => Rational::zero(),
        None => Rational::from_integer(100.into()),
    }
}

/// A sampled point `x_j = (k_j / 2^53) * hi_j`: floats up front, exact
/// coordinates reconstructed only when a row needs them.
struct SamplePoint<'a> {
    numerators: Vec<u64>,
    f64s: Vec<f64>,
    hi: &'a [Rational],
}

impl SamplePoint<'_> {
    fn exact(&self, j: usize) -> Rational {
        Rational::new(
            BigInt::from(self.numerators[j]),
            BigInt::from(1u64 << DYADIC_BITS),
        ) * &self.hi[j]
    }
}

/// Per-system membership evaluator with cached float images of each row.
struct Evaluator {
    rows: Vec<RowEval>,
}

struct RowEval {
    // (index into the canonical var order, exact coefficient, float image)
    terms: Vec<(usize, Rational, f64)>,
    bound: Rational,
    bound_f64: f64,
}

impl Evaluator {
    fn new(sys: &LinearSystem, vars: &[Var]) -> Self {
        let rows = sys
            .rows()
            .iter()
            .map(|row| RowEval {
                terms: row
                    .terms()
                    .map(|(v, c)| {
                        let j = vars.binary_search(&v).expect("var in canonical order");
                        (j, c.clone(), rational_to_f64(c))
                    })
                    .collect(),
                bound: row.bound().clone(),
                bound_f64: rational_to_f64(row.bound()),
            })
            .collect();
        Self { rows }
    }

    fn contains(&self, point: &SamplePoint) -> bool {
        self.rows.iter().all(|row| row.holds(point))
    }
}

impl RowEval {
    fn holds(&self, point: &SamplePoint) -> bool {
        let mut lhs = 0.0f64;
        let mut magnitude = 0.0f64;
        for (j, _, c) in &self.terms {
            let t = c * point.f64s[*j];
            lhs += t;
            magnitude += t.abs();
        }
        let diff = lhs - self.bound_f64;
        let margin = FLOAT_MARGIN * (magnitude + self.bound_f64.abs() + 1.0);
        if diff.is_finite() && margin.is_finite() {
            if diff > margin {
                return false;
            }
            if diff < -margin {
                return true;
            }
        }
        // Too close to the facet (or overflowed): decide exactly.
        let mut exact = Rational::zero();
        for (j, c, _) in &self.terms {
            exact += c * point.exact(*j);
        }
        exact <= self.bound
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polyhedra::{rational_from_f64, LinearIneq};

    fn single(vars: Vec<Var>, rows: Vec<(Vec<(Var, i64)>, f64)>) -> LinearSystem {
        let mut sys = LinearSystem::new(vars);
        for (terms, bound) in rows {
            sys.push(LinearIneq::new(
                terms
                    .into_iter()
                    .map(|(v, c)| (v, Rational::from_integer(c.into()))),
                rational_from_f64(bound),
            ));
        }
        sys
    }

    #[test]
    fn identical_systems_agree() {
        let s = single(
            vec![Var::R(1), Var::R(2)],
            vec![
                (vec![(Var::R(1), 1)], 1.0),
                (vec![(Var::R(2), 1)], 1.0),
                (vec![(Var::R(1), 1), (Var::R(2), 1)], 1.5),
            ],
        );
        assert!(equivalent_on_samples(&s, &s.clone(), 1000, 7).unwrap());
    }

    #[test]
    fn nearby_bounds_disagree() {
        let a = single(vec![Var::R(1)], vec![(vec![(Var::R(1), 1)], 1.0)]);
        let b = single(vec![Var::R(1)], vec![(vec![(Var::R(1), 1)], 0.9)]);
        // Points in (0.9, 1] witness the disagreement.
        assert!(!equivalent_on_samples(&a, &b, 10_000, 7).unwrap());
    }

    #[test]
    fn small_facet_shift_is_still_caught() {
        // A shift just above the float margin lands samples between the two
        // facets often enough over [0, 1.2] to be witnessed.
        let a = single(vec![Var::R(1)], vec![(vec![(Var::R(1), 1)], 1.0)]);
        let b = single(vec![Var::R(1)], vec![(vec![(Var::R(1), 1)], 1.0 - 1e-4)]);
        assert!(!equivalent_on_samples(&a, &b, 200_000, 13).unwrap());
    }

    #[test]
    fn variable_mismatch_is_an_error() {
        let a = single(vec![Var::R(1)], vec![(vec![(Var::R(1), 1)], 1.0)]);
        let b = single(vec![Var::R(2)], vec![(vec![(Var::R(2), 1)], 1.0)]);
        assert_eq!(
            equivalent_on_samples(&a, &b, 10, 0),
            Err(PolyError::VariableSetMismatch)
        );
    }

    #[test]
    fn empty_variable_systems_are_equivalent() {
        let a = LinearSystem::new(vec![]);
        let b = LinearSystem::new(vec![]);
        assert!(equivalent_on_samples(&a, &b, 10, 0).unwrap());
    }
}
