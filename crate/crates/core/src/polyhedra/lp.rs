//! Exact-rational simplex for the tiny redundancy certificates.
//!
//! Maximizes a linear objective over `A x <= b` with free variables. Free
//! variables are split as `x = x+ - x-`, feasibility is reached with a single
//! artificial column when some bound is negative, and Bland's rule guarantees
//! termination. Problems here are a few dozen rows and columns at most, so a
//! dense rational tableau is entirely adequate.

use std::collections::BTreeMap;

use num::{One, Signed, Zero};

use super::{LinearIneq, Rational, Var};

#[derive(Debug)]
pub(crate) enum LpOutcome {
    Infeasible,
    Unbounded,
    Optimal(Rational),
}

/// Maximize `objective . x` subject to the rows (x free).
pub(crate) fn maximize(objective: &BTreeMap<Var, Rational>, rows: &[&LinearIneq]) -> LpOutcome {
    // Variable order: union of everything mentioned, split into (+,-) pairs.
    let mut vars: Vec<Var> = objective.keys().copied().collect();
    for row in rows {
        for (v, _) in row.terms() {
            if !vars.contains(&v) {
                vars.push(v);
            }
        }
    }
    vars.sort();

    for row in rows {
        if row.is_infeasible_constant() {
            return LpOutcome::Infeasible;
        }
    }
    let rows: Vec<&&LinearIneq> = rows.iter().filter(|r| !r.is_constant()).collect();

    let n_split = 2 * vars.len();
    let m = rows.len();
    if m == 0 {
        // No constraints: any nonzero objective is unbounded.
        return if objective.values().all(Zero::is_zero) {
            LpOutcome::Optimal(Rational::zero())
        } else {
            LpOutcome::Unbounded
        };
    }

    let col_of = |v: Var| 2 * vars.binary_search(&v).unwrap();

    // Tableau columns: split structurals, slacks, [artificial]; plus rhs.
    let needs_phase1 = rows.iter().any(|r| r.bound().is_negative());
    let art_col = n_split + m;
    let ncols = n_split + m + usize::from(needs_phase1);

    let mut a = vec![vec![Rational::zero(); ncols]; m];
    let mut b = vec![Rational::zero(); m];
    let mut basis = vec![0usize; m];
    for (i, row) in rows.iter().enumerate() {
        for (v, c) in row.terms() {
            let j = col_of(v);
            a[i][j] = c.clone();
            a[i][j + 1] = -c.clone();
        }
        a[i][n_split + i] = Rational::one();
        if needs_phase1 {
            a[i][art_col] = -Rational::one();
        }
        b[i] = row.bound().clone();
        basis[i] = n_split + i;
    }

    let mut t = Tableau { a, b, basis, ncols };

    if needs_phase1 {
        // Aux objective: maximize -x_art.
        let mut z = vec![Rational::zero(); t.ncols];
        z[art_col] = -Rational::one();
        let mut value = Rational::zero();

        // Special first pivot makes the dictionary feasible.
        let leave = (0..m)
            .min_by(|&i, &j| t.b[i].cmp(&t.b[j]).then(i.cmp(&j)))
            .unwrap();
        t.pivot(leave, art_col, &mut z, &mut value);
        debug_assert!(t.b.iter().all(|x| !x.is_negative()));

        if !t.run(&mut z, &mut value) {
            unreachable!("auxiliary problem is bounded by construction");
        }
        if value.is_negative() {
            return LpOutcome::Infeasible;
        }
        // Drive the artificial variable out of the basis if it lingers at 0.
        if let Some(r) = t.basis.iter().position(|&v| v == art_col) {
            if let Some(j) = (0..n_split + m).find(|&j| !t.a[r][j].is_zero()) {
                let mut dummy_z = vec![Rational::zero(); t.ncols];
                let mut dummy_v = Rational::zero();
                t.pivot(r, j, &mut dummy_z, &mut dummy_v);
            } else {
                t.drop_row(r);
            }
        }
        t.zero_column(art_col);
    }

    // Phase 2: reduced costs of the real objective under the current basis.
    let mut z = vec![Rational::zero(); t.ncols];
    for (v, c) in objective {
        if c.is_zero() {
            continue;
        }
        let j = col_of(*v);
        z[j] = c.clone();
        z[j + 1] = -c.clone();
    }
    let mut value = Rational::zero();
    for i in 0..t.b.len() {
        let cb = z[t.basis[i]].clone();
        if cb.is_zero() {
            continue;
        }
        value += &cb * &t.b[i];
        for j in 0..t.ncols {
            let delta = &cb * &t.a[i][j];
            z[j] -= delta;
        }
    }

    if t.run(&mut z, &mut value) {
        LpOutcome::Optimal(value)
    } else {
        LpOutcome::Unbounded
    }
}

struct Tableau {
    a: Vec<Vec<Rational>>,
    b: Vec<Rational>,
    basis: Vec<usize>,
    ncols: usize,
}

impl Tableau {
    /// Bland-rule simplex loop. Returns false on unboundedness.
    fn run(&mut self, z: &mut [Rational], value: &mut Rational) -> bool {
        loop {
            let Some(enter) = (0..self.ncols).find(|&j| z[j].is_positive()) else {
                return true;
            };
            let mut leave: Option<usize> = None;
            let mut best: Option<Rational> = None;
            for i in 0..self.b.len() {
                if !self.a[i][enter].is_positive() {
                    continue;
                }
                let ratio = &self.b[i] / &self.a[i][enter];
                let better = match &best {
                    None => true,
                    Some(r) => {
                        ratio < *r
                            || (ratio == *r
                                && self.basis[i] < self.basis[leave.unwrap()])
                    }
                };
                if better {
                    best = Some(ratio);
                    leave = Some(i);
                }
            }
            let Some(r) = leave else {
                return false;
            };
            self.pivot(r, enter, z, value);
        }
    }

    fn pivot(&mut self, r: usize, enter: usize, z: &mut [Rational], value: &mut Rational) {
        let inv = {
            let p = &self.a[r][enter];
            debug_assert!(!p.is_zero());
            Rational::one() / p
        };
        for j in 0..self.ncols {
            self.a[r][j] *= &inv;
        }
        self.b[r] *= &inv;

        for i in 0..self.b.len() {
            if i == r || self.a[i][enter].is_zero() {
                continue;
            }
            let factor = self.a[i][enter].clone();
            for j in 0..self.ncols {
                let delta = &factor * &self.a[r][j];
                self.a[i][j] -= delta;
            }
            debug_assert!(self.a[i][enter].is_zero());
            let delta = &factor * &self.b[r];
            self.b[i] -= delta;
        }

        if !z[enter].is_zero() {
            let factor = z[enter].clone();
            for j in 0..self.ncols {
                let delta = &factor * &self.a[r][j];
                z[j] -= delta;
            }
            debug_assert!(z[enter].is_zero());
            *value += &factor * &self.b[r];
        }
        self.basis[r] = enter;
    }

    fn drop_row(&mut self, r: usize) {
        self.a.remove(r);
        self.b.remove(r);
        self.basis.remove(r);
    }

    fn zero_column(&mut self, col: usize) {
        for row in &mut self.a {
            row[col] = Rational::zero();
        }
    }
}
