//! Achievable rate regions and sum capacities for Gaussian many-to-one and
//! one-to-many interference channels.
//!
//! The crate is organized around five pieces:
//!
//! * [`channel`] — channel parameter containers in standard form (unit direct
//!   gains, unit noise) and conversion of general-form channels.
//! * [`polyhedra`] — exact-rational linear inequality systems with
//!   Fourier-Motzkin elimination, redundancy pruning, and sampled
//!   region-equivalence oracles.
//! * [`hk`] — Han-Kobayashi achievable rate regions and sum-rate bounds for
//!   simple HK schemes (Gaussian signaling, no time sharing, no power
//!   splitting), pre- and post-elimination.
//! * [`capacity`] — closed-form sum-capacity conditions (interference-decoding
//!   and genie-certified regimes) and channel classification.
//! * [`sweep`] / [`fmcheck`] — gain-plane regime maps as CSV, and randomized
//!   verification that the eliminated systems match the closed forms.
//!
//! All rates are in bits per channel use (logarithms base 2).

pub mod capacity;
pub mod channel;
pub mod fmcheck;
pub mod hk;
pub mod polyhedra;
pub mod sweep;

mod par;

pub use capacity::{classify, ClassificationResult, Regime};
pub use channel::{Channel, GeneralChannelForm, ManyToOneChannel, OneToManyChannel};
pub use hk::{gaussian_c, DecodeSet, Topology};
pub use polyhedra::{LinearIneq, LinearSystem, Rational, Var};
