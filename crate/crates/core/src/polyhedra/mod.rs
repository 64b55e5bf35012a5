//! Exact-rational linear inequality systems.
//!
//! Every inequality is `sum_v coeff_v * v <= bound` over named rate variables.
//! All row operations (Fourier-Motzkin pairing, redundancy certificates) are
//! carried out in arbitrary-precision rational arithmetic: FM pairing amplifies
//! rounding error catastrophically, so floats appear only at the
//! membership-tolerance boundary and as a certified fast path for sampled
//! membership (any sample too close to a facet falls back to exact
//! evaluation).
//!
//! The text format is one inequality per line, e.g. `1*R1 + 1*T2 <= 3/2`,
//! with rational literals `p/q` and rows in construction order.

pub(crate) mod lp;
mod sample;

pub use sample::equivalent_on_samples;

use std::collections::BTreeMap;
use std::fmt;

use num::{BigRational, Signed, ToPrimitive, Zero};
use thiserror::Error;

/// Exactness carrier for all row operations: arbitrary-precision rational,
/// always in lowest terms with a positive denominator.
pub type Rational = BigRational;

/// Exact binary-to-rational conversion of a finite double.
pub fn rational_from_f64(x: f64) -> Rational {
    Rational::from_float(x).expect("value must be finite")
}

/// Best-effort double for a rational (approximate for huge numerators).
pub fn rational_to_f64(x: &Rational) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PolyError {
    #[error("variable {0} is not part of the system")]
    UnknownVariable(Var),
    #[error("point does not assign variable {0}")]
    MissingAssignment(Var),
    #[error("systems are over different variable sets")]
    VariableSetMismatch,
}

/// A rate-region variable.
///
/// `R(i)` is user i's rate, `T(i)` the rate of the common part of user i's
/// message, and `S` a sum rate introduced by substitution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Var {
    R(u32),
    T(u32),
    S,
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Var::R(i) => write!(f, "R{i}"),
            Var::T(i) => write!(f, "T{i}"),
            Var::S => write!(f, "S"),
        }
    }
}

/// One inequality `sum_v coeff_v * v <= bound`. Zero coefficients are never
/// stored.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinearIneq {
    coeffs: BTreeMap<Var, Rational>,
    bound: Rational,
}

impl LinearIneq {
    pub fn new<I>(terms: I, bound: Rational) -> Self
    where
        I: IntoIterator<Item = (Var, Rational)>,
    {
        let mut coeffs: BTreeMap<Var, Rational> = BTreeMap::new();
        for (v, c) in terms {
            *coeffs.entry(v).or_insert_with(Rational::zero) += c;
        }
        coeffs.retain(|_, c| !c.is_zero());
        Self { coeffs, bound }
    }

    /// Convenience constructor from integer coefficients and a float bound.
    pub fn from_f64<I>(terms: I, bound: f64) -> Self
    where
        I: IntoIterator<Item = (Var, i64)>,
    {
        Self::new(
            terms
                .into_iter()
                .map(|(v, c)| (v, Rational::from_integer(c.into()))),
            rational_from_f64(bound),
        )
    }

    pub fn coeff(&self, v: Var) -> Option<&Rational> {
        self.coeffs.get(&v)
    }

    pub fn terms(&self) -> impl Iterator<Item = (Var, &Rational)> {
        self.coeffs.iter().map(|(v, c)| (*v, c))
    }

    pub fn bound(&self) -> &Rational {
        &self.bound
    }

    pub fn is_constant(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// `0 <= c` with `c >= 0`: trivially true, carries no information.
    pub fn is_vacuous(&self) -> bool {
        self.is_constant() && !self.bound.is_negative()
    }

    /// `0 <= c` with `c < 0`: witnesses an empty feasible set.
    pub fn is_infeasible_constant(&self) -> bool {
        self.is_constant() && self.bound.is_negative()
    }

    /// For a row `c*v <= b` with a single positive coefficient, the implied
    /// upper bound `b/c` on `v`.
    fn single_var_cap(&self) -> Option<(Var, Rational)> {
        if self.coeffs.len() != 1 {
            return None;
        }
        let (v, c) = self.coeffs.iter().next().unwrap();
        if c.is_positive() {
            Some((*v, &self.bound / c))
        } else {
            None
        }
    }

    /// True when the row only states `v >= lower` for some `lower <= 0`,
    /// i.e. it is implied by the ambient nonnegative orthant of rate space.
    pub fn is_orthant_implied(&self) -> bool {
        if self.coeffs.len() != 1 || self.bound.is_negative() {
            return false;
        }
        self.coeffs.values().next().unwrap().is_negative()
    }

    /// Positive combination `pos_scale * self + neg_scale * other` used by FM
    /// pairing; both scales must be positive.
    fn scaled_sum(&self, self_scale: &Rational, other: &Self, other_scale: &Rational) -> Self {
        debug_assert!(self_scale.is_positive() && other_scale.is_positive());
        let mut coeffs = BTreeMap::new();
        for (v, c) in &self.coeffs {
            coeffs.insert(*v, c * self_scale);
        }
        for (v, c) in &other.coeffs {
            *coeffs.entry(*v).or_insert_with(Rational::zero) += c * other_scale;
        }
        coeffs.retain(|_, c| !c.is_zero());
        Self {
            coeffs,
            bound: &self.bound * self_scale + &other.bound * other_scale,
        }
    }
}

impl fmt::Display for LinearIneq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.coeffs.is_empty() {
            return write!(f, "0 <= {}", self.bound);
        }
        let lhs = self
            .coeffs
            .iter()
            .map(|(v, c)| format!("{c}*{v}"))
            .collect::<Vec<_>>()
            .join(" + ");
        write!(f, "{lhs} <= {}", self.bound)
    }
}

/// An ordered list of inequalities over an ordered variable list.
///
/// Immutable once built; all operations return new systems. Rows keep their
/// construction order so output is reproducible byte for byte.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinearSystem {
    vars: Vec<Var>,
    rows: Vec<LinearIneq>,
}

impl LinearSystem {
    pub fn new(vars: Vec<Var>) -> Self {
        let mut seen = vars.clone();
        seen.sort();
        seen.dedup();
        assert_eq!(seen.len(), vars.len(), "duplicate variable in system");
        Self { vars, rows: Vec::new() }
    }

    pub fn push(&mut self, row: LinearIneq) {
        for (v, _) in row.terms() {
            assert!(self.vars.contains(&v), "row uses unknown variable {v}");
        }
        self.rows.push(row);
    }

    pub fn vars(&self) -> &[Var] {
        &self.vars
    }

    pub fn rows(&self) -> &[LinearIneq] {
        &self.rows
    }

    pub fn has_var(&self, v: Var) -> bool {
        self.vars.contains(&v)
    }

    /// Projects the feasible set onto the remaining variables by pairing every
    /// positive-coefficient row of `v` with every negative-coefficient row.
    ///
    /// Rows not involving `v` are carried over. Vacuous constant rows are
    /// dropped; infeasible constant rows are kept so emptiness stays visible.
    pub fn fm_eliminate(&self, v: Var) -> Result<LinearSystem, PolyError> {
        if !self.has_var(v) {
            return Err(PolyError::UnknownVariable(v));
        }
        let vars = self.vars.iter().copied().filter(|&u| u != v).collect();
        let mut out = LinearSystem::new(vars);

        let mut pos: Vec<(&LinearIneq, Rational)> = Vec::new();
        let mut neg: Vec<(&LinearIneq, Rational)> = Vec::new();
        for row in &self.rows {
            match row.coeff(v) {
                None => out.push_unless_vacuous(row.clone()),
                Some(c) if c.is_positive() => pos.push((row, c.clone())),
                Some(c) => neg.push((row, -c.clone())),
            }
        }
        for (p, a) in &pos {
            for (n, c) in &neg {
                // c*(p) + a*(n) cancels v exactly.
                let mut combined = p.scaled_sum(c, n, a);
                combined.coeffs.remove(&v);
                out.push_unless_vacuous(combined);
            }
        }
        Ok(out)
    }

    fn push_unless_vacuous(&mut self, row: LinearIneq) {
        if !row.is_vacuous() {
            self.push(row);
        }
    }

    /// Replaces `v` by the linear expression `sum terms` everywhere. Variables
    /// appearing only in `terms` are appended to the variable list.
    pub fn substitute(&self, v: Var, terms: &[(Var, Rational)]) -> Result<LinearSystem, PolyError> {
        if !self.has_var(v) {
            return Err(PolyError::UnknownVariable(v));
        }
        let mut vars: Vec<Var> = self.vars.iter().copied().filter(|&u| u != v).collect();
        for (u, _) in terms {
            if !vars.contains(u) {
                vars.push(*u);
            }
        }
        let mut out = LinearSystem::new(vars);
        for row in &self.rows {
            let replaced = match row.coeff(v) {
                None => row.clone(),
                Some(c) => {
                    let scale = c.clone();
                    let mut new_terms: Vec<(Var, Rational)> = row
                        .terms()
                        .filter(|(u, _)| *u != v)
                        .map(|(u, c)| (u, c.clone()))
                        .collect();
                    for (u, c) in terms {
                        new_terms.push((*u, c * &scale));
                    }
                    LinearIneq::new(new_terms, row.bound.clone())
                }
            };
            out.push_unless_vacuous(replaced);
        }
        Ok(out)
    }

    /// Returns a system with the same feasible set and no row implied by the
    /// others.
    ///
    /// Cheap certificates run first (identical coefficient patterns, sums of
    /// single-variable caps); anything else is settled by a small exact linear
    /// program, so a non-redundant row is never removed.
    pub fn remove_redundant(&self) -> LinearSystem {
        // An infeasible constant row makes the set empty; everything else is
        // then vacuously implied.
        if let Some(row) = self.rows.iter().find(|r| r.is_infeasible_constant()) {
            let mut out = LinearSystem::new(self.vars.clone());
            out.push(row.clone());
            return out;
        }

        let mut keep: Vec<LinearIneq> =
            self.rows.iter().filter(|r| !r.is_vacuous()).cloned().collect();

        // Identical coefficient pattern: only the smallest bound matters.
        let mut best: BTreeMap<Vec<(Var, Rational)>, Rational> = BTreeMap::new();
        for row in &keep {
            let key: Vec<_> = row.terms().map(|(v, c)| (v, c.clone())).collect();
            match best.get_mut(&key) {
                Some(b) if &row.bound >= b => {}
                _ => {
                    best.insert(key, row.bound.clone());
                }
            }
        }
        let mut first_of_pattern: Vec<LinearIneq> = Vec::new();
        for row in keep.drain(..) {
            let key: Vec<_> = row.terms().map(|(v, c)| (v, c.clone())).collect();
            if best.get(&key) == Some(&row.bound) {
                first_of_pattern.push(row);
                best.remove(&key);
            }
        }
        keep = first_of_pattern;

        // LP-certified removal, one row at a time against the current set.
        let mut i = 0;
        while i < keep.len() {
            let row = keep[i].clone();
            let others: Vec<&LinearIneq> =
                keep.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, r)| r).collect();
            if implied_by_caps(&row, &others) || implied_by_lp(&row, &others) {
                keep.remove(i);
            } else {
                i += 1;
            }
        }

        let mut out = LinearSystem::new(self.vars.clone());
        for row in keep {
            out.push(row);
        }
        out
    }

    /// True iff every inequality holds at `point` within additive tolerance
    /// `tol` (floating-point evaluation).
    pub fn contains(&self, point: &BTreeMap<Var, f64>, tol: f64) -> Result<bool, PolyError> {
        for &v in &self.vars {
            if !point.contains_key(&v) {
                return Err(PolyError::MissingAssignment(v));
            }
        }
        Ok(self.rows.iter().all(|row| {
            let lhs: f64 = row
                .terms()
                .map(|(v, c)| rational_to_f64(c) * point[&v])
                .sum();
            lhs <= rational_to_f64(&row.bound) + tol
        }))
    }
}

impl fmt::Display for LinearSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for row in &self.rows {
            writeln!(f, "{row}")?;
        }
        Ok(())
    }
}

/// Sufficient redundancy certificate: every coefficient of `row` is positive
/// and the matching single-variable caps in `others` already add up to at
/// most the row's bound.
fn implied_by_caps(row: &LinearIneq, others: &[&LinearIneq]) -> bool {
    let mut caps: BTreeMap<Var, Rational> = BTreeMap::new();
    for other in others {
        if let Some((v, cap)) = other.single_var_cap() {
            match caps.get_mut(&v) {
                Some(existing) if *existing <= cap => {}
                _ => {
                    caps.insert(v, cap);
                }
            }
        }
    }
    let mut total = Rational::zero();
    for (v, c) in row.terms() {
        if !c.is_positive() {
            return false;
        }
        match caps.get(&v) {
            Some(cap) if !cap.is_negative() => total += c * cap,
            _ => return false,
        }
    }
    total <= *row.bound()
}

/// Exact certificate: maximize the row's left-hand side subject to the other
/// rows; the row is implied iff the maximum does not exceed its bound.
fn implied_by_lp(row: &LinearIneq, others: &[&LinearIneq]) -> bool {
    let objective: BTreeMap<Var, Rational> =
        row.terms().map(|(v, c)| (v, c.clone())).collect();
    match lp::maximize(&objective, others) {
        lp::LpOutcome::Optimal(max) => max <= *row.bound(),
        lp::LpOutcome::Infeasible => true,
        lp::LpOutcome::Unbounded => false,
    }
}
