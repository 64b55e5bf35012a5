//! Sum-capacity conditions and channel classification.
//!
//! Four families of channel conditions certify that a simple HK scheme is
//! sum-rate optimal:
//!
//! * `MI k_0` (many-to-one): decoding all of B jointly with the desired
//!   signal dominates, and the residual interference gains are weak.
//! * `MI k_1` (many-to-one): the bound that treats one decoded user k as part
//!   of a joint decoding step dominates, certified by a genie whose noise
//!   correlation rho satisfies `rho h_k = 1 + sum_{i not in B} h_i^2 P_i`.
//! * `OI_k` (one-to-many): receivers in I see strong interference, the rest
//!   can treat it as noise.
//! * `OI_{K-1,1}` (one-to-many): everyone decodes, and one receiver l with
//!   moderate gain pins the dominant bound.
//!
//! `classify` runs every check over all decode sets (relabeling is implicit:
//! decode sets are arbitrary index sets, not just prefixes) and reports either
//! the capacity with its witnesses or the best simple-HK sum rate.
//!
//! All condition inequalities are evaluated inclusively, so the regime maps
//! are closed sets; overlapping regimes must agree on the capacity value.

use serde::Serialize;
use thiserror::Error;

use crate::channel::{Channel, ManyToOneChannel, OneToManyChannel};
use crate::hk::{
    cap, m2o_achievable_sumrate, m2o_sumrate_constraints, o2m_achievable_sumrate, DecodeSet,
    HkError, SumRateLabel,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CapacityError {
    #[error(transparent)]
    Hk(#[from] HkError),
    #[error("special index {0} is not in the decode set")]
    SpecialIndexNotInSet(usize),
    #[error("index {0} must lie in 1..K")]
    BadReceiverIndex(usize),
    #[error("capacity formula called although the channel conditions fail")]
    ConditionsNotMet,
}

/// Which condition inequality a check instantiates. Rendered to text only
/// when a witness is actually reported, which keeps the grid sweeps off the
/// allocator.
#[derive(Debug, Clone, PartialEq)]
pub enum ConditionId {
    /// Joint decoding of all of B dominates at the subset N excluded.
    MiK0Dominance { excluded: Vec<usize> },
    /// Residual gains weak enough to treat as noise.
    MiK0ResidualGains,
    /// The pivot bound is below the bound at subset M.
    MiK1Dominance { against: Vec<usize> },
    /// Genie noise correlation constraint.
    MiK1Genie { rho: f64 },
    /// Printed product form of the dominance condition at subset N.
    MiK1Printed { subset: Vec<usize> },
    /// Interference strong enough to decode at this receiver.
    OiStrongInterference { receiver: usize },
    /// Combined gain ratio of the treat-as-noise receivers.
    OiNoisyResidual,
    OiPivotLower { l: usize },
    OiPivotUpper { l: usize },
    OiPivotRatio { l: usize, other: usize },
}

impl std::fmt::Display for ConditionId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        fn list(xs: &[usize]) -> String {
            xs.iter().map(ToString::to_string).collect::<Vec<_>>().join(",")
        }
        match self {
            Self::MiK0Dominance { excluded } => {
                write!(f, "mi_k0 dominance N={{{}}}", list(excluded))
            }
            Self::MiK0ResidualGains => write!(f, "mi_k0 residual gains: sum h^2 <= 1"),
            Self::MiK1Dominance { against } => {
                write!(f, "mi_k1 dominance vs M={{{}}}", list(against))
            }
            Self::MiK1Genie { rho } => {
                write!(f, "mi_k1 genie: sum h^2 <= 1 - rho^2 (rho={rho:.6})")
            }
            Self::MiK1Printed { subset } => write!(f, "mi_k1 printed N={{{}}}", list(subset)),
            Self::OiStrongInterference { receiver } => {
                write!(f, "oi_k strong interference at rx {receiver}: 1 + P <= h^2")
            }
            Self::OiNoisyResidual => write!(f, "oi_k noisy residual: sum <= 1"),
            Self::OiPivotLower { l } => write!(f, "oi_km1_1 lower: 1 <= h_{l}^2"),
            Self::OiPivotUpper { l } => write!(f, "oi_km1_1 upper: h_{l}^2 <= 1 + P_{l}"),
            Self::OiPivotRatio { l, other } => {
                write!(f, "oi_km1_1 ratio: h_{l}^2/(1+P_{l}) <= h_{other}^2/(1+P_{other})")
            }
        }
    }
}

/// One evaluated condition inequality `lhs <= rhs`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionCheck {
    pub id: ConditionId,
    pub lhs: f64,
    pub rhs: f64,
}

impl Serialize for ConditionCheck {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut s = serializer.serialize_struct("ConditionCheck", 4)?;
        s.serialize_field("condition", &self.id.to_string())?;
        s.serialize_field("lhs", &self.lhs)?;
        s.serialize_field("rhs", &self.rhs)?;
        s.serialize_field("margin", &self.margin())?;
        s.end()
    }
}

impl ConditionCheck {
    fn new(id: ConditionId, lhs: f64, rhs: f64) -> Self {
        Self { id, lhs, rhs }
    }

    /// Inclusive comparison; boundary points pass.
    pub fn holds(&self) -> bool {
        self.lhs <= self.rhs
    }

    /// Slack `rhs - lhs`; nonnegative when the condition holds.
    pub fn margin(&self) -> f64 {
        self.rhs - self.lhs
    }
}

fn all_hold(checks: &[ConditionCheck]) -> bool {
    checks.iter().all(ConditionCheck::holds)
}

/// Genie noise correlation certifying an `MI k_1` converse.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GenieParams {
    pub rho: f64,
}

/// A capacity-known regime, tagged with the scheme that achieves it.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "regime")]
pub enum Regime {
    #[serde(rename = "MI_k0")]
    MiK0 { decode_set: Vec<usize> },
    #[serde(rename = "MI_k1")]
    MiK1 { decode_set: Vec<usize>, k: usize },
    #[serde(rename = "OI_k")]
    OiK { decode_set: Vec<usize> },
    #[serde(rename = "OI_Km1_1")]
    OiKm11 { l: usize },
    Unknown,
}

/// Channel conditions for decoding all of B at receiver 1 (`MI k_0`):
/// for every proper subset N of B,
/// `prod_{i in B-N} (1+P_i) * (1 + X + P_1) <= 1 + sum_{i not in N} h_i^2 P_i + P_1`
/// with `X = sum_{j not in B} h_j^2 P_j`, plus `sum_{j not in B} h_j^2 <= 1`.
/// B empty reduces to the gain-sum condition alone (treating all interference
/// as noise).
pub fn check_mi_k0(
    c: &ManyToOneChannel,
    b: &DecodeSet,
) -> Result<(bool, Vec<ConditionCheck>), CapacityError> {
    // Surface bad decode sets through the same path as the region builders.
    m2o_sumrate_constraints(c, b)?;
    let k = c.users();
    let outside: Vec<usize> = (2..=k).filter(|&i| !b.contains(i)).collect();
    let x = c.interference_from(outside.iter().copied());

    let mut checks = Vec::new();
    for n in proper_subsets(b.indices()) {
        let rest: Vec<usize> = b.indices().iter().copied().filter(|i| !n.contains(i)).collect();
        let lhs = rest.iter().map(|&i| 1.0 + c.power(i)).product::<f64>() * (1.0 + x + c.power(1));
        let rhs = 1.0
            + (2..=k)
                .filter(|i| !n.contains(i))
                .map(|i| c.gain(i).powi(2) * c.power(i))
                .sum::<f64>()
            + c.power(1);
        checks.push(ConditionCheck::new(ConditionId::MiK0Dominance { excluded: n }, lhs, rhs));
    }
    let gain_sum: f64 = outside.iter().map(|&j| c.gain(j).powi(2)).sum();
    checks.push(ConditionCheck::new(ConditionId::MiK0ResidualGains, gain_sum, 1.0));
    Ok((all_hold(&checks), checks))
}

/// Sum capacity when `check_mi_k0` holds:
/// `c(P_1 / (1 + sum_{j not in B} h_j^2 P_j)) + sum_{i=2..K} c(P_i)`.
pub fn sum_capacity_mi_k0(c: &ManyToOneChannel, b: &DecodeSet) -> Result<f64, CapacityError> {
    let (ok, _) = check_mi_k0(c, b)?;
    if !ok {
        return Err(CapacityError::ConditionsNotMet);
    }
    let k = c.users();
    let outside = (2..=k).filter(|&i| !b.contains(i));
    let noise = 1.0 + c.interference_from(outside);
    Ok(cap(c.power(1) / noise) + (2..=k).map(|i| cap(c.power(i))).sum::<f64>())
}

/// Channel conditions for `MI k_1` with special index k in B.
///
/// (i) Dominance: the sum-rate bound at `M = B - {k}` is the least of the
/// 2^|B| bounds, checked directly on the evaluated bounds (this is the form
/// the achievability argument actually uses). The printed product-form
/// conditions are evaluated alongside and any disagreement is logged.
/// (ii) Genie: with `rho = (1 + sum_{i not in B} h_i^2 P_i) / h_k`, require
/// `sum_{i not in B} h_i^2 <= 1 - rho^2`.
pub fn check_mi_k1(
    c: &ManyToOneChannel,
    b: &DecodeSet,
    k: usize,
) -> Result<(bool, GenieParams, Vec<ConditionCheck>), CapacityError> {
    if !b.contains(k) {
        return Err(CapacityError::SpecialIndexNotInSet(k));
    }
    let bounds = m2o_sumrate_constraints(c, b)?;
    let target: Vec<usize> = b.indices().iter().copied().filter(|&i| i != k).collect();
    let target_bits = bounds
        .bound_for(&SumRateLabel::Subset(target.clone()))
        .expect("target subset is in the family");

    let mut checks = Vec::new();
    for bound in &bounds.bounds {
        let SumRateLabel::Subset(m) = &bound.label else { unreachable!() };
        if *m == target {
            continue;
        }
        checks.push(ConditionCheck::new(
            ConditionId::MiK1Dominance { against: m.clone() },
            target_bits,
            bound.bits,
        ));
    }

    let users = c.users();
    let outside: Vec<usize> = (2..=users).filter(|&i| !b.contains(i)).collect();
    let x = c.interference_from(outside.iter().copied());
    let rho = (1.0 + x) / c.gain(k);
    let gain_sum: f64 = outside.iter().map(|&j| c.gain(j).powi(2)).sum();
    checks.push(ConditionCheck::new(
        ConditionId::MiK1Genie { rho },
        gain_sum,
        1.0 - rho * rho,
    ));

    let ok = all_hold(&checks);
    let printed = mi_k1_printed_conditions(c, b, k)?;
    let printed_ok = all_hold(&printed);
    if ok != printed_ok {
        log::warn!(
            "mi_k1 direct dominance ({ok}) disagrees with printed product form ({printed_ok}) \
             for B={{{}}}, k={k}; keeping the direct evaluation",
            join(b.indices()),
        );
    }
    Ok((ok, GenieParams { rho }, checks))
}

/// The product-form dominance conditions as printed: for every subset N of B
/// other than `B - {k}`,
/// `prod_{i in {2..K}-(B-N)} (1+P_i) * (1 + P_1 + X + sum_{i in B-N} h_i^2 P_i)`
/// `>= prod_{i in {2..K}-{k}} (1+P_i) * (1 + P_1 + X + h_k^2 P_k)`.
pub fn mi_k1_printed_conditions(
    c: &ManyToOneChannel,
    b: &DecodeSet,
    k: usize,
) -> Result<Vec<ConditionCheck>, CapacityError> {
    if !b.contains(k) {
        return Err(CapacityError::SpecialIndexNotInSet(k));
    }
    let users = c.users();
    let outside = (2..=users).filter(|&i| !b.contains(i));
    let x = c.interference_from(outside);
    let rhs = (2..=users)
        .filter(|&i| i != k)
        .map(|i| 1.0 + c.power(i))
        .product::<f64>()
        * (1.0 + c.power(1) + x + c.gain(k).powi(2) * c.power(k));

    let mut checks = Vec::new();
    for n in crate::hk::subsets_of(b.indices()) {
        let rest: Vec<usize> = b.indices().iter().copied().filter(|i| !n.contains(i)).collect();
        if rest == [k] {
            continue; // N = B - {k}: both sides coincide.
        }
        let lhs = (2..=users)
            .filter(|i| !rest.contains(i))
            .map(|i| 1.0 + c.power(i))
            .product::<f64>()
            * (1.0 + c.power(1) + x + c.interference_from(rest.iter().copied()));
        // Stored as "rhs <= lhs" so that inclusive >= holds.
        checks.push(ConditionCheck::new(ConditionId::MiK1Printed { subset: n }, rhs, lhs));
    }
    Ok(checks)
}

/// Sum capacity when `check_mi_k1` holds:
/// `sum_{i=2..K, i != k} c(P_i) + c((P_1 + h_k^2 P_k) / (1 + sum_{not B} h^2 P))`.
pub fn sum_capacity_mi_k1(
    c: &ManyToOneChannel,
    b: &DecodeSet,
    k: usize,
) -> Result<f64, CapacityError> {
    let (ok, _, _) = check_mi_k1(c, b, k)?;
    if !ok {
        return Err(CapacityError::ConditionsNotMet);
    }
    let users = c.users();
    let outside = (2..=users).filter(|&i| !b.contains(i));
    let noise = 1.0 + c.interference_from(outside);
    let joint = cap((c.power(1) + c.gain(k).powi(2) * c.power(k)) / noise);
    Ok((2..=users).filter(|&i| i != k).map(|i| cap(c.power(i))).sum::<f64>() + joint)
}

/// Channel conditions for `OI_k`: `1 + P_i <= h_i^2` for every i in I, and
/// `sum_{j in J} (h_j^2 P_K + h_j^2) / (h_j^2 P_K + 1) <= 1`.
pub fn check_oi_k(
    c: &OneToManyChannel,
    i_set: &DecodeSet,
) -> Result<(bool, Vec<ConditionCheck>), CapacityError> {
    o2m_achievable_sumrate(c, i_set)?;
    let k = c.users();
    let mut checks = Vec::new();
    for &i in i_set.indices() {
        checks.push(ConditionCheck::new(
            ConditionId::OiStrongInterference { receiver: i },
            1.0 + c.power(i),
            c.gain(i).powi(2),
        ));
    }
    let j_sum: f64 = (1..k)
        .filter(|i| !i_set.contains(*i))
        .map(|j| {
            let h2 = c.gain(j).powi(2);
            (h2 * c.power(k) + h2) / (h2 * c.power(k) + 1.0)
        })
        .sum();
    checks.push(ConditionCheck::new(ConditionId::OiNoisyResidual, j_sum, 1.0));
    Ok((all_hold(&checks), checks))
}

/// Sum capacity when `check_oi_k` holds:
/// `sum_{i in I} c(P_i) + c(P_K) + sum_{j in J} c(P_j / (1 + h_j^2 P_K))`.
pub fn sum_capacity_oi_k(c: &OneToManyChannel, i_set: &DecodeSet) -> Result<f64, CapacityError> {
    let (ok, _) = check_oi_k(c, i_set)?;
    if !ok {
        return Err(CapacityError::ConditionsNotMet);
    }
    let k = c.users();
    let decoded: f64 = i_set.indices().iter().map(|&i| cap(c.power(i))).sum();
    let noisy: f64 = (1..k)
        .filter(|i| !i_set.contains(*i))
        .map(|j| cap(c.power(j) / (1.0 + c.interference_at(j))))
        .sum();
    Ok(decoded + cap(c.power(k)) + noisy)
}

/// Channel conditions for `OI_{K-1,1}` with pivot receiver l:
/// `1 <= h_l^2 <= 1 + P_l` and `h_l^2/(1+P_l) <= h_i^2/(1+P_i)` for all
/// other receivers i.
pub fn check_oi_km1_1(
    c: &OneToManyChannel,
    l: usize,
) -> Result<(bool, Vec<ConditionCheck>), CapacityError> {
    let k = c.users();
    if l < 1 || l >= k {
        return Err(CapacityError::BadReceiverIndex(l));
    }
    let hl2 = c.gain(l).powi(2);
    let mut checks = vec![
        ConditionCheck::new(ConditionId::OiPivotLower { l }, 1.0, hl2),
        ConditionCheck::new(ConditionId::OiPivotUpper { l }, hl2, 1.0 + c.power(l)),
    ];
    for i in 1..k {
        if i == l {
            continue;
        }
        checks.push(ConditionCheck::new(
            ConditionId::OiPivotRatio { l, other: i },
            hl2 / (1.0 + c.power(l)),
            c.gain(i).powi(2) / (1.0 + c.power(i)),
        ));
    }
    Ok((all_hold(&checks), checks))
}

/// Sum capacity when `check_oi_km1_1` holds:
/// `sum_{j != l, j <= K-1} c(P_j) + (1/2) log2(1 + P_l + h_l^2 P_K)`.
pub fn sum_capacity_oi_km1_1(c: &OneToManyChannel, l: usize) -> Result<f64, CapacityError> {
    let (ok, _) = check_oi_km1_1(c, l)?;
    if !ok {
        return Err(CapacityError::ConditionsNotMet);
    }
    let k = c.users();
    let others: f64 = (1..k).filter(|&j| j != l).map(|j| cap(c.power(j))).sum();
    Ok(others + 0.5 * (1.0 + c.power(l) + c.interference_at(l)).log2())
}

/// A regime whose conditions passed, with the capacity and its witnesses.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegimeMatch {
    #[serde(flatten)]
    pub regime: Regime,
    pub sum_capacity_bits: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
    pub witness: Vec<ConditionCheck>,
}

/// Regime tag, capacity (when known), and the best simple-HK sum rate.
///
/// `matches` holds every passing regime in search order (k_0-type checks
/// before k_1-type, larger decode sets first); when several pass their
/// capacities agree up to floating-point noise. An empty list means Unknown.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassificationResult {
    pub matches: Vec<RegimeMatch>,
    pub best_achievable_bits: f64,
    pub best_decode_set: DecodeSet,
}

impl ClassificationResult {
    pub fn regime(&self) -> Regime {
        self.matches.first().map(|m| m.regime.clone()).unwrap_or(Regime::Unknown)
    }

    pub fn is_known(&self) -> bool {
        !self.matches.is_empty()
    }

    pub fn sum_capacity_bits(&self) -> Option<f64> {
        self.matches.first().map(|m| m.sum_capacity_bits)
    }

    /// JSON result: regime fields at the top level, plus the achievability
    /// data; Unknown carries `best_achievable_bits` and `best_decode_set`.
    pub fn to_json(&self) -> serde_json::Value {
        match self.matches.first() {
            Some(first) => {
                let mut value = serde_json::to_value(first).expect("serializable");
                let obj = value.as_object_mut().unwrap();
                obj.insert(
                    "best_achievable_bits".into(),
                    serde_json::json!(self.best_achievable_bits),
                );
                if self.matches.len() > 1 {
                    obj.insert(
                        "also_passing".into(),
                        serde_json::to_value(&self.matches[1..]).expect("serializable"),
                    );
                }
                value
            }
            None => serde_json::json!({
                "regime": "Unknown",
                "best_achievable_bits": self.best_achievable_bits,
                "best_decode_set": self.best_decode_set.indices(),
            }),
        }
    }
}

/// Decode sets ordered for classification: larger sets first, then
/// lexicographic. Purely a reporting order; every passing regime is returned.
fn search_order(mut sets: Vec<DecodeSet>) -> Vec<DecodeSet> {
    sets.sort_by(|a, b| b.len().cmp(&a.len()).then_with(|| a.indices().cmp(b.indices())));
    sets
}

/// Runs every condition set over all decode sets (and special indices) for
/// the channel's topology.
pub fn classify(channel: &Channel) -> ClassificationResult {
    match channel {
        Channel::ManyToOne(c) => classify_m2o(c),
        Channel::OneToMany(c) => classify_o2m(c),
    }
}

fn classify_m2o(c: &ManyToOneChannel) -> ClassificationResult {
    let all = DecodeSet::all_many_to_one(c.users());
    let mut matches = Vec::new();
    for b in search_order(all.clone()) {
        let (ok, witness) = check_mi_k0(c, &b).expect("legal decode set");
        if ok {
            matches.push(RegimeMatch {
                regime: Regime::MiK0 { decode_set: b.indices().to_vec() },
                sum_capacity_bits: sum_capacity_mi_k0(c, &b).expect("conditions hold"),
                rho: None,
                witness,
            });
        }
    }
    for b in search_order(all.clone()) {
        for &k in b.indices() {
            let (ok, genie, witness) = check_mi_k1(c, &b, k).expect("legal decode set");
            if ok {
                matches.push(RegimeMatch {
                    regime: Regime::MiK1 { decode_set: b.indices().to_vec(), k },
                    sum_capacity_bits: sum_capacity_mi_k1(c, &b, k).expect("conditions hold"),
                    rho: Some(genie.rho),
                    witness,
                });
            }
        }
    }

    let (best_bits, best_set) = all
        .iter()
        .map(|b| (m2o_achievable_sumrate(c, b).expect("legal decode set").0, b))
        .fold(None::<(f64, &DecodeSet)>, |acc, (bits, b)| match acc {
            Some((best, _)) if best >= bits => acc,
            _ => Some((bits, b)),
        })
        .expect("at least one decode set");

    ClassificationResult {
        matches,
        best_achievable_bits: best_bits,
        best_decode_set: best_set.clone(),
    }
}

fn classify_o2m(c: &OneToManyChannel) -> ClassificationResult {
    let all = DecodeSet::all_one_to_many(c.users());
    let mut matches = Vec::new();
    for i_set in search_order(all.clone()) {
        let (ok, witness) = check_oi_k(c, &i_set).expect("legal decode set");
        if ok {
            matches.push(RegimeMatch {
                regime: Regime::OiK { decode_set: i_set.indices().to_vec() },
                sum_capacity_bits: sum_capacity_oi_k(c, &i_set).expect("conditions hold"),
                rho: None,
                witness,
            });
        }
    }
    for l in 1..c.users() {
        let (ok, witness) = check_oi_km1_1(c, l).expect("legal index");
        if ok {
            matches.push(RegimeMatch {
                regime: Regime::OiKm11 { l },
                sum_capacity_bits: sum_capacity_oi_km1_1(c, l).expect("conditions hold"),
                rho: None,
                witness,
            });
        }
    }

    let (best_bits, best_set) = all
        .iter()
        .map(|i_set| (o2m_achievable_sumrate(c, i_set).expect("legal decode set"), i_set))
        .fold(None::<(f64, &DecodeSet)>, |acc, (bits, s)| match acc {
            Some((best, _)) if best >= bits => acc,
            _ => Some((bits, s)),
        })
        .expect("at least one decode set");

    ClassificationResult {
        matches,
        best_achievable_bits: best_bits,
        best_decode_set: best_set.clone(),
    }
}

fn proper_subsets(base: &[usize]) -> Vec<Vec<usize>> {
    crate::hk::subsets_of(base)
        .into_iter()
        .filter(|n| n.len() < base.len())
        .collect()
}

fn join(indices: &[usize]) -> String {
    indices.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(",")
}
