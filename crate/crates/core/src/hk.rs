//! Han-Kobayashi achievable rate regions for simple HK schemes.
//!
//! A simple HK scheme uses Gaussian signaling, no time sharing, and no
//! common-private power splitting: each interfering message is either fully
//! decoded or fully treated as noise. The decode set picks which. This module
//! builds both the pre-elimination systems (with the common-message rate
//! variables still present) and the simplified closed-form regions, plus the
//! sum-rate constraint families the capacity conditions are stated over.
//!
//! All rates are bits per channel use; mutual-information constants are
//! evaluated in floating point and converted to exact rationals at system
//! construction time.

use thiserror::Error;

use crate::channel::{ManyToOneChannel, OneToManyChannel};
use crate::polyhedra::{LinearIneq, LinearSystem, Var};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum HkError {
    #[error("SNR must be nonnegative")]
    NegativeSnr,
    #[error("decode set has {expected:?} topology, channel is {got:?}")]
    TopologyMismatch { expected: Topology, got: Topology },
    #[error("decode set index {0} is outside the legal range {1}")]
    IndexOutOfRange(usize, &'static str),
}

/// Gaussian point-to-point capacity `c(x) = (1/2) log2(1 + x)` in bits per
/// channel use.
pub fn gaussian_c(snr: f64) -> Result<f64, HkError> {
    if snr < 0.0 {
        return Err(HkError::NegativeSnr);
    }
    Ok(cap(snr))
}

pub(crate) fn cap(snr: f64) -> f64 {
    debug_assert!(snr >= 0.0);
    0.5 * (1.0 + snr).log2()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Topology {
    ManyToOne,
    OneToMany,
}

/// The subset of interfering messages that gets decoded.
///
/// Many-to-one: `B` is a subset of `{2..K}`, the transmit messages decoded at
/// receiver 1. One-to-many: `I` is a subset of `{1..K-1}`, the receivers that
/// decode transmitter K; `J` is implicitly the complement.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DecodeSet {
    topology: Topology,
    indices: Vec<usize>,
}

impl DecodeSet {
    pub fn many_to_one<I: IntoIterator<Item = usize>>(indices: I) -> Self {
        Self::build(Topology::ManyToOne, indices)
    }

    pub fn one_to_many<I: IntoIterator<Item = usize>>(indices: I) -> Self {
        Self::build(Topology::OneToMany, indices)
    }

    fn build<I: IntoIterator<Item = usize>>(topology: Topology, indices: I) -> Self {
        let mut indices: Vec<usize> = indices.into_iter().collect();
        indices.sort_unstable();
        indices.dedup();
        Self { topology, indices }
    }

    pub fn topology(&self) -> Topology {
        self.topology
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.indices.binary_search(&i).is_ok()
    }

    /// Every subset of `{2..K}`, in bitmask order (empty set first).
    pub fn all_many_to_one(users: usize) -> Vec<DecodeSet> {
        subsets_of(&(2..=users).collect::<Vec<_>>())
            .into_iter()
            .map(DecodeSet::many_to_one)
            .collect()
    }

    /// Every subset of `{1..K-1}`, in bitmask order.
    pub fn all_one_to_many(users: usize) -> Vec<DecodeSet> {
        subsets_of(&(1..users).collect::<Vec<_>>())
            .into_iter()
            .map(DecodeSet::one_to_many)
            .collect()
    }

    fn check_m2o(&self, c: &ManyToOneChannel) -> Result<(), HkError> {
        if self.topology != Topology::ManyToOne {
            return Err(HkError::TopologyMismatch {
                expected: self.topology,
                got: Topology::ManyToOne,
            });
        }
        for &i in &self.indices {
            if i < 2 || i > c.users() {
                return Err(HkError::IndexOutOfRange(i, "2..=K"));
            }
        }
        Ok(())
    }

    fn check_o2m(&self, c: &OneToManyChannel) -> Result<(), HkError> {
        if self.topology != Topology::OneToMany {
            return Err(HkError::TopologyMismatch {
                expected: self.topology,
                got: Topology::OneToMany,
            });
        }
        for &i in &self.indices {
            if i < 1 || i >= c.users() {
                return Err(HkError::IndexOutOfRange(i, "1..K"));
            }
        }
        Ok(())
    }
}

pub(crate) fn subsets_of(base: &[usize]) -> Vec<Vec<usize>> {
    let mut out = Vec::with_capacity(1 << base.len());
    for mask in 0u32..(1 << base.len()) {
        out.push(
            base.iter()
                .enumerate()
                .filter(|(j, _)| mask >> j & 1 == 1)
                .map(|(_, &i)| i)
                .collect(),
        );
    }
    out
}

/// Which Gaussian mutual-information constant a value instantiates.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum MiRole {
    /// I(X_i; Y_i) — user i's own link, interference (if any) as noise.
    Own(usize),
    /// I(X_i; Y_i | U_i) — own link given the common part (zero when the
    /// whole message is common).
    OwnGivenCommon(usize),
    /// I(U_N, X_1; Y_1 | U_{B-N}) for N a subset of B (many-to-one rx 1).
    Rx1Joint(Vec<usize>),
    /// I(X_i, U; Y_i) — joint decoding of user i and the interferer.
    JointWithInterference(usize),
}

/// The evaluated mutual-information constants appearing as right-hand sides.
#[derive(Debug, Clone, PartialEq)]
pub struct MiTermTable {
    entries: Vec<(MiRole, f64)>,
}

impl MiTermTable {
    pub fn get(&self, role: &MiRole) -> Option<f64> {
        self.entries.iter().find(|(r, _)| r == role).map(|(_, v)| *v)
    }

    pub fn entries(&self) -> &[(MiRole, f64)] {
        &self.entries
    }
}

/// Mutual-information constants of the many-to-one simple HK scheme with
/// decode set `b`: common parts of decoded users carry the whole message, and
/// undecoded interference adds `sum_{j not in B} h_j^2 P_j` to receiver 1's
/// noise.
pub fn m2o_mi_terms(c: &ManyToOneChannel, b: &DecodeSet) -> Result<MiTermTable, HkError> {
    b.check_m2o(c)?;
    let k = c.users();
    let outside: Vec<usize> = (2..=k).filter(|&i| !b.contains(i)).collect();
    let noise = 1.0 + c.interference_from(outside.iter().copied());
    let mut entries = Vec::new();
    for n in subsets_of(b.indices()) {
        let signal = c.power(1) + c.interference_from(n.iter().copied());
        entries.push((MiRole::Rx1Joint(n), cap(signal / noise)));
    }
    for i in 2..=k {
        entries.push((MiRole::Own(i), cap(c.power(i))));
        if b.contains(i) {
            entries.push((MiRole::OwnGivenCommon(i), 0.0));
        }
    }
    Ok(MiTermTable { entries })
}

/// Mutual-information constants of the one-to-many simple HK scheme where the
/// receivers in `i_set` decode transmitter K.
pub fn o2m_mi_terms(c: &OneToManyChannel, i_set: &DecodeSet) -> Result<MiTermTable, HkError> {
    i_set.check_o2m(c)?;
    let k = c.users();
    let mut entries = Vec::new();
    for i in 1..k {
        if i_set.contains(i) {
            entries.push((MiRole::OwnGivenCommon(i), cap(c.power(i))));
            entries.push((
                MiRole::JointWithInterference(i),
                0.5 * (1.0 + c.power(i) + c.interference_at(i)).log2(),
            ));
        } else {
            entries.push((MiRole::Own(i), cap(c.power(i) / (1.0 + c.interference_at(i)))));
        }
    }
    entries.push((MiRole::Own(k), cap(c.power(k))));
    entries.push((MiRole::OwnGivenCommon(k), 0.0));
    Ok(MiTermTable { entries })
}

/// Pre-elimination many-to-one system over `(R_1..R_K, T_i for i in B)`.
///
/// Rows: `R_1 + sum_{i in N} T_i <= I(U_N, X_1; Y_1 | U_{B-N})` for every
/// subset N of B, and per decoded user `R_i - T_i <= 0`, `0 <= T_i <= R_i`,
/// plus the own-link rows `R_i <= c(P_i)`.
pub fn m2o_full_system(c: &ManyToOneChannel, b: &DecodeSet) -> Result<LinearSystem, HkError> {
    let terms = m2o_mi_terms(c, b)?;
    let k = c.users();
    let mut vars: Vec<Var> = (1..=k as u32).map(Var::R).collect();
    vars.extend(b.indices().iter().map(|&i| Var::T(i as u32)));
    let mut sys = LinearSystem::new(vars);

    for n in subsets_of(b.indices()) {
        let rhs = terms.get(&MiRole::Rx1Joint(n.clone())).unwrap();
        let mut row = vec![(Var::R(1), 1i64)];
        row.extend(n.iter().map(|&i| (Var::T(i as u32), 1i64)));
        sys.push(LinearIneq::from_f64(row, rhs));
    }
    for &i in b.indices() {
        let (r, t) = (Var::R(i as u32), Var::T(i as u32));
        // R_i - T_i <= I(X_i; Y_i | U_i) = 0 under the simple scheme.
        sys.push(LinearIneq::from_f64([(r, 1), (t, -1)], 0.0));
        sys.push(LinearIneq::from_f64([(t, 1), (r, -1)], 0.0));
        sys.push(LinearIneq::from_f64([(t, -1)], 0.0));
    }
    for i in 2..=k {
        let rhs = terms.get(&MiRole::Own(i)).unwrap();
        sys.push(LinearIneq::from_f64([(Var::R(i as u32), 1)], rhs));
    }
    Ok(sys)
}

/// Simplified many-to-one region over `(R_1..R_K)`: one row
/// `R_1 + sum_{j in N} R_j <= c((P_1 + sum_N h^2 P) / (1 + sum_{not B} h^2 P))`
/// per subset N of B, plus `R_i <= c(P_i)`.
pub fn m2o_region(c: &ManyToOneChannel, b: &DecodeSet) -> Result<LinearSystem, HkError> {
    let terms = m2o_mi_terms(c, b)?;
    let k = c.users();
    let mut sys = LinearSystem::new((1..=k as u32).map(Var::R).collect());
    for n in subsets_of(b.indices()) {
        let rhs = terms.get(&MiRole::Rx1Joint(n.clone())).unwrap();
        let mut row = vec![(Var::R(1), 1i64)];
        row.extend(n.iter().map(|&i| (Var::R(i as u32), 1i64)));
        sys.push(LinearIneq::from_f64(row, rhs));
    }
    for i in 2..=k {
        let rhs = terms.get(&MiRole::Own(i)).unwrap();
        sys.push(LinearIneq::from_f64([(Var::R(i as u32), 1)], rhs));
    }
    Ok(sys)
}

/// Pre-elimination one-to-many system over `(R_1..R_K, T)` where `T` is the
/// rate of the interferer's common part.
pub fn o2m_full_system(c: &OneToManyChannel, i_set: &DecodeSet) -> Result<LinearSystem, HkError> {
    let terms = o2m_mi_terms(c, i_set)?;
    let k = c.users();
    let t = Var::T(k as u32);
    let mut vars: Vec<Var> = (1..=k as u32).map(Var::R).collect();
    vars.push(t);
    let mut sys = LinearSystem::new(vars);

    for i in 1..k {
        let r = Var::R(i as u32);
        if i_set.contains(i) {
            sys.push(LinearIneq::from_f64(
                [(r, 1)],
                terms.get(&MiRole::OwnGivenCommon(i)).unwrap(),
            ));
            sys.push(LinearIneq::from_f64(
                [(r, 1), (t, 1)],
                terms.get(&MiRole::JointWithInterference(i)).unwrap(),
            ));
        } else {
            sys.push(LinearIneq::from_f64([(r, 1)], terms.get(&MiRole::Own(i)).unwrap()));
        }
    }
    let rk = Var::R(k as u32);
    // R_K - T <= I(X_K; Y_K | U) = 0, T >= 0, T <= R_K, R_K <= c(P_K).
    sys.push(LinearIneq::from_f64([(rk, 1), (t, -1)], 0.0));
    sys.push(LinearIneq::from_f64([(t, 1), (rk, -1)], 0.0));
    sys.push(LinearIneq::from_f64([(t, -1)], 0.0));
    sys.push(LinearIneq::from_f64([(rk, 1)], terms.get(&MiRole::Own(k)).unwrap()));
    Ok(sys)
}

/// Simplified one-to-many region over `(R_1..R_K)`.
pub fn o2m_region(c: &OneToManyChannel, i_set: &DecodeSet) -> Result<LinearSystem, HkError> {
    let terms = o2m_mi_terms(c, i_set)?;
    let k = c.users();
    let mut sys = LinearSystem::new((1..=k as u32).map(Var::R).collect());
    let rk = Var::R(k as u32);
    for i in 1..k {
        let r = Var::R(i as u32);
        if i_set.contains(i) {
            sys.push(LinearIneq::from_f64(
                [(r, 1)],
                terms.get(&MiRole::OwnGivenCommon(i)).unwrap(),
            ));
            sys.push(LinearIneq::from_f64(
                [(r, 1), (rk, 1)],
                terms.get(&MiRole::JointWithInterference(i)).unwrap(),
            ));
        } else {
            sys.push(LinearIneq::from_f64([(r, 1)], terms.get(&MiRole::Own(i)).unwrap()));
        }
    }
    sys.push(LinearIneq::from_f64([(rk, 1)], terms.get(&MiRole::Own(k)).unwrap()));
    Ok(sys)
}

/// A sum-rate upper bound and the case of the constraint family it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct SumRateBound {
    pub label: SumRateLabel,
    pub bits: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum SumRateLabel {
    /// Many-to-one: the subset M of B whose users contribute their clean
    /// single-user rates.
    Subset(Vec<usize>),
    /// One-to-many, full decode: the all-single-user-rates bound.
    AllSingleUser,
    /// One-to-many, full decode: user i's single-user rate replaced by the
    /// joint bound with the interferer.
    JointWith(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SumRateConstraintSet {
    pub bounds: Vec<SumRateBound>,
}

impl SumRateConstraintSet {
    /// The binding bound; ties pick the lexicographically smallest label.
    pub fn min_bound(&self) -> &SumRateBound {
        self.bounds
            .iter()
            .min_by(|a, b| {
                a.bits
                    .partial_cmp(&b.bits)
                    .expect("bounds are finite")
                    .then_with(|| a.label.cmp(&b.label))
            })
            .expect("constraint set is never empty")
    }

    /// The bound for a given label, if present.
    pub fn bound_for(&self, label: &SumRateLabel) -> Option<f64> {
        self.bounds.iter().find(|b| &b.label == label).map(|b| b.bits)
    }

    /// One-row-per-bound system over the sum-rate variable `S`.
    pub fn as_system(&self) -> LinearSystem {
        let mut sys = LinearSystem::new(vec![Var::S]);
        for b in &self.bounds {
            sys.push(LinearIneq::from_f64([(Var::S, 1)], b.bits));
        }
        sys
    }
}

/// The 2^|B| sum-rate constraints of the many-to-one simple HK scheme: for
/// every subset M of B,
/// `S <= sum_{i not in B} c(P_i) + sum_{i in M} c(P_i)
///     + c((P_1 + sum_{B-M} h^2 P) / (1 + sum_{not B} h^2 P))`
/// with `i not in B` ranging over interferers 2..K only.
pub fn m2o_sumrate_constraints(
    c: &ManyToOneChannel,
    b: &DecodeSet,
) -> Result<SumRateConstraintSet, HkError> {
    b.check_m2o(c)?;
    let k = c.users();
    let outside: Vec<usize> = (2..=k).filter(|&i| !b.contains(i)).collect();
    let outside_rate: f64 = outside.iter().map(|&i| cap(c.power(i))).sum();
    let noise = 1.0 + c.interference_from(outside.iter().copied());
    let bounds = subsets_of(b.indices())
        .into_iter()
        .map(|m| {
            let clean: f64 = m.iter().map(|&i| cap(c.power(i))).sum();
            let decoded_noise: Vec<usize> =
                b.indices().iter().copied().filter(|i| !m.contains(i)).collect();
            let rx1 = cap((c.power(1) + c.interference_from(decoded_noise)) / noise);
            SumRateBound { label: SumRateLabel::Subset(m), bits: outside_rate + clean + rx1 }
        })
        .collect();
    Ok(SumRateConstraintSet { bounds })
}

/// The least of the 2^|B| bounds, with the minimizing subset.
pub fn m2o_achievable_sumrate(
    c: &ManyToOneChannel,
    b: &DecodeSet,
) -> Result<(f64, Vec<usize>), HkError> {
    let set = m2o_sumrate_constraints(c, b)?;
    let best = set.min_bound();
    let SumRateLabel::Subset(m) = &best.label else { unreachable!() };
    Ok((best.bits, m.clone()))
}

/// The K sum-rate constraints of the one-to-many scheme that decodes the
/// interferer everywhere: the all-single-user bound, and for each i <= K-1
/// the bound with user i's rate merged into a joint term.
pub fn o2m_sumrate_constraints_full_decode(c: &OneToManyChannel) -> SumRateConstraintSet {
    let k = c.users();
    let singles: Vec<f64> = (1..=k).map(|i| cap(c.power(i))).collect();
    let mut bounds = vec![SumRateBound {
        label: SumRateLabel::AllSingleUser,
        bits: singles.iter().sum(),
    }];
    for i in 1..k {
        let others: f64 = (1..k).filter(|&j| j != i).map(|j| singles[j - 1]).sum();
        let joint = 0.5 * (1.0 + c.power(i) + c.interference_at(i)).log2();
        bounds.push(SumRateBound { label: SumRateLabel::JointWith(i), bits: others + joint });
    }
    SumRateConstraintSet { bounds }
}

/// Maximum achievable sum rate of the one-to-many scheme with decode set
/// `i_set`: undecoded receivers contribute their treat-as-noise rates, and
/// the decoded part reduces to the full-decode bounds of the subchannel on
/// `I + {K}`.
pub fn o2m_achievable_sumrate(c: &OneToManyChannel, i_set: &DecodeSet) -> Result<f64, HkError> {
    i_set.check_o2m(c)?;
    let k = c.users();
    let noise_part: f64 = (1..k)
        .filter(|i| !i_set.contains(*i))
        .map(|i| cap(c.power(i) / (1.0 + c.interference_at(i))))
        .sum();
    if i_set.is_empty() {
        return Ok(noise_part + cap(c.power(k)));
    }
    let mut powers: Vec<f64> = i_set.indices().iter().map(|&i| c.power(i)).collect();
    powers.push(c.power(k));
    let gains: Vec<f64> = i_set.indices().iter().map(|&i| c.gain(i)).collect();
    let reduced = OneToManyChannel::new(powers, gains).expect("valid subchannel");
    let decode_part = o2m_sumrate_constraints_full_decode(&reduced).min_bound().bits;
    Ok(noise_part + decode_part)
}


#[cfg(test)]
mod lp_oracle_tests {
    //! Second route to the achievable sum rates: maximize sum R_i over the
    //! simplified region with the exact simplex and compare against the
    //! min-of-bounds formulas. Elimination exactness makes the two agree.

    use super::*;
    use crate::polyhedra::lp::{maximize, LpOutcome};
    use crate::polyhedra::{LinearIneq, LinearSystem, Rational};
    use std::collections::BTreeMap;

    fn lp_max_sum(region: &LinearSystem) -> f64 {
        let mut rows: Vec<LinearIneq> = region.rows().to_vec();
        for &v in region.vars() {
            rows.push(LinearIneq::from_f64([(v, -1)], 0.0));
        }
        let refs: Vec<&LinearIneq> = rows.iter().collect();
        let objective: BTreeMap<Var, Rational> = region
            .vars()
            .iter()
            .map(|&v| (v, Rational::from_integer(1.into())))
            .collect();
        match maximize(&objective, &refs) {
            LpOutcome::Optimal(v) => crate::polyhedra::rational_to_f64(&v),
            other => panic!("region LP must be bounded and feasible, got {other:?}"),
        }
    }

    #[test]
    fn achievable_sumrate_agrees_with_region_lp() {
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(77);
        for _ in 0..20 {
            let k = rand::Rng::gen_range(&mut rng, 2..=4);
            let c = crate::fmcheck::random_many_to_one(k, &mut rng);
            for b in DecodeSet::all_many_to_one(k) {
                let (bits, _) = m2o_achievable_sumrate(&c, &b).unwrap();
                let lp = lp_max_sum(&m2o_region(&c, &b).unwrap());
                assert!((bits - lp).abs() < 1e-9, "B={:?}: {bits} vs {lp}", b.indices());
            }
            let c = crate::fmcheck::random_one_to_many(k, &mut rng);
            for i_set in DecodeSet::all_one_to_many(k) {
                let bits = o2m_achievable_sumrate(&c, &i_set).unwrap();
                let lp = lp_max_sum(&o2m_region(&c, &i_set).unwrap());
                assert!((bits - lp).abs() < 1e-9, "I={:?}: {bits} vs {lp}", i_set.indices());
            }
        }
    }
}
