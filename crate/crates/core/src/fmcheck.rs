//! Randomized verification that Fourier-Motzkin elimination of the
//! pre-elimination HK systems reproduces the closed-form simplified regions
//! and sum-rate bounds.
//!
//! Four pipelines, one per derivation:
//!
//! * many-to-one region: eliminate the common-part rates T_2..T_K;
//! * many-to-one sum rate: substitute `R_1 = S - sum R_i`, eliminate
//!   R_2..R_K, compare against the 2^|B| sum-rate bounds;
//! * one-to-many region: eliminate the single common-part rate T;
//! * one-to-many sum rate (full decode): substitute `R_K = S - sum R_i`,
//!   eliminate R_1..R_{K-1}, compare against the K bounds.
//!
//! Redundancy pruning runs after every elimination step to keep intermediate
//! row growth bounded. Elimination can synthesize rows that merely restate
//! `R_i >= 0`; rate regions live in the nonnegative orthant, so such rows are
//! stripped before comparing. Comparison is sampled membership with exact
//! arithmetic.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::channel::{ManyToOneChannel, OneToManyChannel};
use crate::hk::{
    m2o_full_system, m2o_region, m2o_sumrate_constraints, o2m_full_system, o2m_region,
    o2m_sumrate_constraints_full_decode, DecodeSet, HkError, Topology,
};
use crate::par;
use crate::polyhedra::{equivalent_on_samples, LinearSystem, PolyError, Rational, Var};

/// Row growth is worst-case exponential in K; refuse anything bigger.
pub const MAX_VERIFY_USERS: usize = 5;

#[derive(Debug, Error, PartialEq)]
pub enum FmCheckError {
    #[error("verification supports K <= {MAX_VERIFY_USERS}, got {0}")]
    TooManyUsers(usize),
    #[error("need at least 2 users, got {0}")]
    TooFewUsers(usize),
    #[error(transparent)]
    Hk(#[from] HkError),
    #[error(transparent)]
    Poly(#[from] PolyError),
}

/// Eliminates the given variables in order, pruning after every step.
pub fn eliminate_in_order(
    sys: &LinearSystem,
    order: &[Var],
) -> Result<LinearSystem, PolyError> {
    let mut current = sys.clone();
    for &v in order {
        current = current.fm_eliminate(v)?.remove_redundant();
    }
    Ok(current)
}

/// Drops rows implied by the ambient nonnegative orthant (`v >= lower` with
/// `lower <= 0`).
pub fn strip_orthant_rows(sys: &LinearSystem) -> LinearSystem {
    let mut out = LinearSystem::new(sys.vars().to_vec());
    for row in sys.rows() {
        if !row.is_orthant_implied() {
            out.push(row.clone());
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pipeline {
    Region,
    SumRate,
}

/// Result of one pipeline run on one (channel, decode set) pair.
#[derive(Debug, Clone)]
pub struct PipelineOutcome {
    pub pipeline: Pipeline,
    pub decode_set: Vec<usize>,
    pub equivalent: bool,
    pub eliminated_rows: usize,
    pub closed_form_rows: usize,
    /// Text dump of both systems, present only on mismatch.
    pub mismatch_dump: Option<String>,
}

fn outcome(
    pipeline: Pipeline,
    decode_set: &[usize],
    equivalent: bool,
    eliminated: &LinearSystem,
    closed: &LinearSystem,
) -> PipelineOutcome {
    PipelineOutcome {
        pipeline,
        decode_set: decode_set.to_vec(),
        equivalent,
        eliminated_rows: eliminated.rows().len(),
        closed_form_rows: closed.rows().len(),
        mismatch_dump: (!equivalent)
            .then(|| format!("eliminated:\n{eliminated}closed form:\n{closed}")),
    }
}

/// Eliminates the common-part rates from the many-to-one pre-system and
/// compares against the closed-form region.
pub fn verify_m2o_region(
    c: &ManyToOneChannel,
    b: &DecodeSet,
    samples: usize,
    seed: u64,
) -> Result<PipelineOutcome, FmCheckError> {
    let full = m2o_full_system(c, b)?;
    let order: Vec<Var> = b.indices().iter().map(|&i| Var::T(i as u32)).collect();
    let eliminated = strip_orthant_rows(&eliminate_in_order(&full, &order)?);
    let closed = m2o_region(c, b)?;
    let equivalent = equivalent_on_samples(&eliminated, &closed, samples, seed)?;
    Ok(outcome(Pipeline::Region, b.indices(), equivalent, &eliminated, &closed))
}

/// Substitutes the sum rate into the simplified many-to-one region,
/// eliminates R_2..R_K, and compares against the sum-rate constraint family.
pub fn verify_m2o_sumrate(
    c: &ManyToOneChannel,
    b: &DecodeSet,
    samples: usize,
    seed: u64,
) -> Result<PipelineOutcome, FmCheckError> {
    let region = m2o_region(c, b)?;
    let k = c.users();
    // R_1 = S - sum_{i=2..K} R_i.
    let mut replacement = vec![(Var::S, Rational::from_integer(1.into()))];
    for i in 2..=k {
        replacement.push((Var::R(i as u32), Rational::from_integer((-1).into())));
    }
    let substituted = region.substitute(Var::R(1), &replacement)?;
    let order: Vec<Var> = (2..=k).map(|i| Var::R(i as u32)).collect();
    let eliminated = eliminate_in_order(&substituted, &order)?;
    let closed = m2o_sumrate_constraints(c, b)?.as_system();
    let equivalent = equivalent_on_samples(&eliminated, &closed, samples, seed)?;
    Ok(outcome(Pipeline::SumRate, b.indices(), equivalent, &eliminated, &closed))
}

/// Eliminates the common-part rate T from the one-to-many pre-system and
/// compares against the closed-form region.
pub fn verify_o2m_region(
    c: &OneToManyChannel,
    i_set: &DecodeSet,
    samples: usize,
    seed: u64,
) -> Result<PipelineOutcome, FmCheckError> {
    let full = o2m_full_system(c, i_set)?;
    let eliminated =
        strip_orthant_rows(&eliminate_in_order(&full, &[Var::T(c.users() as u32)])?);
    let closed = o2m_region(c, i_set)?;
    let equivalent = equivalent_on_samples(&eliminated, &closed, samples, seed)?;
    Ok(outcome(Pipeline::Region, i_set.indices(), equivalent, &eliminated, &closed))
}

/// Full-decode one-to-many sum rate: substitute `R_K = S - sum R_i`,
/// eliminate R_1..R_{K-1}, compare against the K-bound family.
pub fn verify_o2m_sumrate(
    c: &OneToManyChannel,
    samples: usize,
    seed: u64,
) -> Result<PipelineOutcome, FmCheckError> {
    let k = c.users();
    let i_set = DecodeSet::one_to_many(1..k);
    let region = o2m_region(c, &i_set)?;
    let mut replacement = vec![(Var::S, Rational::from_integer(1.into()))];
    for i in 1..k {
        replacement.push((Var::R(i as u32), Rational::from_integer((-1).into())));
    }
    let substituted = region.substitute(Var::R(k as u32), &replacement)?;
    let order: Vec<Var> = (1..k).map(|i| Var::R(i as u32)).collect();
    let eliminated = eliminate_in_order(&substituted, &order)?;
    let closed = o2m_sumrate_constraints_full_decode(c).as_system();
    let equivalent = equivalent_on_samples(&eliminated, &closed, samples, seed)?;
    Ok(outcome(Pipeline::SumRate, i_set.indices(), equivalent, &eliminated, &closed))
}

/// Seeded random channel with generic parameters (powers in [0.2, 4], gains
/// in [0, 2.5]).
pub fn random_many_to_one(users: usize, rng: &mut impl Rng) -> ManyToOneChannel {
    let powers = (0..users).map(|_| rng.gen_range(0.2..4.0)).collect();
    let gains = (0..users - 1).map(|_| rng.gen_range(0.0..2.5)).collect();
    ManyToOneChannel::new(powers, gains).expect("generated channel is valid")
}

pub fn random_one_to_many(users: usize, rng: &mut impl Rng) -> OneToManyChannel {
    let powers = (0..users).map(|_| rng.gen_range(0.2..4.0)).collect();
    let gains = (0..users - 1).map(|_| rng.gen_range(0.0..2.5)).collect();
    OneToManyChannel::new(powers, gains).expect("generated channel is valid")
}

#[derive(Debug, Clone, Copy)]
pub struct VerifyConfig {
    pub topology: Topology,
    pub users: usize,
    pub trials: usize,
    pub samples: usize,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub struct TrialOutcome {
    pub trial: usize,
    pub outcomes: Vec<PipelineOutcome>,
}

impl TrialOutcome {
    pub fn passed(&self) -> bool {
        self.outcomes.iter().all(|o| o.equivalent)
    }
}

#[derive(Debug, Clone)]
pub struct VerifyReport {
    pub trials: Vec<TrialOutcome>,
}

impl VerifyReport {
    pub fn passed(&self) -> usize {
        self.trials.iter().filter(|t| t.passed()).count()
    }

    pub fn total(&self) -> usize {
        self.trials.len()
    }

    pub fn all_passed(&self) -> bool {
        self.passed() == self.total()
    }
}

/// Runs every pipeline over every decode set for `trials` random channels.
/// Trials run concurrently; each derives its own rng stream from the seed, so
/// the report does not depend on scheduling.
pub fn run_verify(cfg: &VerifyConfig) -> Result<VerifyReport, FmCheckError> {
    if cfg.users > MAX_VERIFY_USERS {
        return Err(FmCheckError::TooManyUsers(cfg.users));
    }
    if cfg.users < 2 {
        return Err(FmCheckError::TooFewUsers(cfg.users));
    }
    let specs: Vec<(usize, VerifyConfig)> = (0..cfg.trials).map(|t| (t, *cfg)).collect();
    let trials = par::map_collect(specs, |(trial, cfg)| run_trial(*trial, cfg));
    let mut report = Vec::with_capacity(trials.len());
    for t in trials {
        report.push(t?);
    }
    Ok(VerifyReport { trials: report })
}

fn run_trial(trial: usize, cfg: &VerifyConfig) -> Result<TrialOutcome, FmCheckError> {
    let trial_seed = cfg.seed.wrapping_add(0x9E37_79B9_7F4A_7C15u64.wrapping_mul(trial as u64 + 1));
    let mut rng = ChaCha8Rng::seed_from_u64(trial_seed);
    let mut outcomes = Vec::new();
    match cfg.topology {
        Topology::ManyToOne => {
            let c = random_many_to_one(cfg.users, &mut rng);
            for (j, b) in DecodeSet::all_many_to_one(cfg.users).iter().enumerate() {
                let seed = trial_seed ^ (j as u64) << 32;
                outcomes.push(verify_m2o_region(&c, b, cfg.samples, seed)?);
                outcomes.push(verify_m2o_sumrate(&c, b, cfg.samples, seed ^ 1)?);
            }
        }
        Topology::OneToMany => {
            let c = random_one_to_many(cfg.users, &mut rng);
            for (j, i_set) in DecodeSet::all_one_to_many(cfg.users).iter().enumerate() {
                let seed = trial_seed ^ (j as u64) << 32;
                outcomes.push(verify_o2m_region(&c, i_set, cfg.samples, seed)?);
            }
            outcomes.push(verify_o2m_sumrate(&c, cfg.samples, trial_seed ^ 0xFACE)?);
        }
    }
    Ok(TrialOutcome { trial, outcomes })
}
