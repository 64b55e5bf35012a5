//! Channel parameter containers in standard form.
//!
//! Standard form normalizes every direct gain and every noise variance to 1;
//! powers and cross-gains absorb the scaling. Gains are stored as given
//! (possibly negative): every condition in this crate depends on the squared
//! gain only, so the sign is immaterial. Powers of exactly 0 are permitted
//! (degenerate users), which lets parameter sweeps touch the axes cleanly.
//!
//! All types are immutable after construction and safe to share between
//! concurrent workers.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ChannelError {
    #[error("channel needs at least 2 users, got {0}")]
    TooFewUsers(usize),
    #[error("powers must have length {expected}, got {got}")]
    PowerLength { expected: usize, got: usize },
    #[error("gains must have length {expected}, got {got}")]
    GainLength { expected: usize, got: usize },
    #[error("power P{index} must be nonnegative, got {value}")]
    NegativePower { index: usize, value: f64 },
    #[error("power P{index} must be finite")]
    NonFinitePower { index: usize },
    #[error("gain h{index} must be finite")]
    NonFiniteGain { index: usize },
    #[error("direct gain for user {0} must be nonzero")]
    ZeroDirectGain(usize),
    #[error("noise variance at receiver {index} must be positive, got {value}")]
    NonpositiveNoise { index: usize, value: f64 },
    #[error("direct gains must have length {expected}, got {got}")]
    DirectGainLength { expected: usize, got: usize },
    #[error("noise variances must have length {expected}, got {got}")]
    NoiseLength { expected: usize, got: usize },
}

/// Which of the two one-sided-interference topologies a channel has.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ChannelKind {
    ManyToOne,
    OneToMany,
}

/// K-user channel where only receiver 1 experiences interference:
/// `y1 = x1 + sum_{i=2..K} h_i x_i + z1`, `y_i = x_i + z_i` otherwise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawChannel")]
pub struct ManyToOneChannel {
    /// P_1..P_K.
    powers: Vec<f64>,
    /// h_2..h_K (cross-gains into receiver 1).
    gains: Vec<f64>,
}

/// K-user channel where only transmitter K causes interference:
/// `y_i = x_i + h_i x_K + z_i` for i < K, `y_K = x_K + z_K`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawChannel")]
pub struct OneToManyChannel {
    /// P_1..P_K.
    powers: Vec<f64>,
    /// h_1..h_{K-1} (cross-gains from transmitter K).
    gains: Vec<f64>,
}

/// Either topology, tagged; this is the JSON channel descriptor
/// `{"kind":"many-to-one"|"one-to-many","powers":[...],"gains":[...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Channel {
    ManyToOne(ManyToOneChannel),
    OneToMany(OneToManyChannel),
}

impl Channel {
    pub fn kind(&self) -> ChannelKind {
        match self {
            Channel::ManyToOne(_) => ChannelKind::ManyToOne,
            Channel::OneToMany(_) => ChannelKind::OneToMany,
        }
    }

    pub fn users(&self) -> usize {
        match self {
            Channel::ManyToOne(c) => c.users(),
            Channel::OneToMany(c) => c.users(),
        }
    }
}

#[derive(Deserialize)]
struct RawChannel {
    powers: Vec<f64>,
    gains: Vec<f64>,
}

impl TryFrom<RawChannel> for ManyToOneChannel {
    type Error = ChannelError;
    fn try_from(raw: RawChannel) -> Result<Self, Self::Error> {
        ManyToOneChannel::new(raw.powers, raw.gains).map_err(first_error)
    }
}

impl TryFrom<RawChannel> for OneToManyChannel {
    type Error = ChannelError;
    fn try_from(raw: RawChannel) -> Result<Self, Self::Error> {
        OneToManyChannel::new(raw.powers, raw.gains).map_err(first_error)
    }
}

fn first_error(mut errors: Vec<ChannelError>) -> ChannelError {
    errors.remove(0)
}

/// All invariant violations for the given parameter vectors (empty = valid).
pub fn validate(powers: &[f64], gains: &[f64]) -> Vec<ChannelError> {
    let mut errors = Vec::new();
    let k = powers.len();
    if k < 2 {
        errors.push(ChannelError::TooFewUsers(k));
    }
    if k >= 1 && gains.len() != k - 1 {
        errors.push(ChannelError::GainLength {
            expected: k.saturating_sub(1),
            got: gains.len(),
        });
    }
    for (i, &p) in powers.iter().enumerate() {
        if !p.is_finite() {
            errors.push(ChannelError::NonFinitePower { index: i + 1 });
        } else if p < 0.0 {
            errors.push(ChannelError::NegativePower { index: i + 1, value: p });
        }
    }
    for (i, &h) in gains.iter().enumerate() {
        if !h.is_finite() {
            errors.push(ChannelError::NonFiniteGain { index: i + 1 });
        }
    }
    errors
}

impl ManyToOneChannel {
    pub fn new(powers: Vec<f64>, gains: Vec<f64>) -> Result<Self, Vec<ChannelError>> {
        let errors = validate(&powers, &gains);
        if errors.is_empty() {
            Ok(Self { powers, gains })
        } else {
            Err(errors)
        }
    }

    pub fn users(&self) -> usize {
        self.powers.len()
    }

    /// P_i, 1-based.
    pub fn power(&self, i: usize) -> f64 {
        self.powers[i - 1]
    }

    /// h_i for i in 2..=K.
    pub fn gain(&self, i: usize) -> f64 {
        self.gains[i - 2]
    }

    pub fn powers(&self) -> &[f64] {
        &self.powers
    }

    pub fn gains(&self) -> &[f64] {
        &self.gains
    }

    /// Interference power at receiver 1 from the users in `from` (h_i^2 P_i).
    pub fn interference_from<I: IntoIterator<Item = usize>>(&self, from: I) -> f64 {
        from.into_iter()
            .map(|i| self.gain(i).powi(2) * self.power(i))
            .sum()
    }
}

impl OneToManyChannel {
    pub fn new(powers: Vec<f64>, gains: Vec<f64>) -> Result<Self, Vec<ChannelError>> {
        let errors = validate(&powers, &gains);
        if errors.is_empty() {
            Ok(Self { powers, gains })
        } else {
            Err(errors)
        }
    }

    pub fn users(&self) -> usize {
        self.powers.len()
    }

    /// P_i, 1-based.
    pub fn power(&self, i: usize) -> f64 {
        self.powers[i - 1]
    }

    /// h_i for i in 1..=K-1.
    pub fn gain(&self, i: usize) -> f64 {
        self.gains[i - 1]
    }

    pub fn powers(&self) -> &[f64] {
        &self.powers
    }

    pub fn gains(&self) -> &[f64] {
        &self.gains
    }

    /// Interference power h_i^2 P_K seen at receiver i.
    pub fn interference_at(&self, i: usize) -> f64 {
        self.gain(i).powi(2) * self.power(self.users())
    }
}

/// A many-to-one or one-to-many channel not yet in standard form: arbitrary
/// direct gains and noise variances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneralChannelForm {
    pub kind: ChannelKind,
    /// Direct gain of each user's own link, users 1..K.
    pub direct_gains: Vec<f64>,
    /// Cross gains: into receiver 1 (many-to-one, users 2..K) or from
    /// transmitter K (one-to-many, receivers 1..K-1).
    pub cross_gains: Vec<f64>,
    /// Transmit power constraints, users 1..K.
    pub powers: Vec<f64>,
    /// Noise variance at each receiver, 1..K.
    pub noise_variances: Vec<f64>,
}

impl GeneralChannelForm {
    fn validate(&self) -> Result<(), ChannelError> {
        let k = self.powers.len();
        if k < 2 {
            return Err(ChannelError::TooFewUsers(k));
        }
        if self.direct_gains.len() != k {
            return Err(ChannelError::DirectGainLength { expected: k, got: self.direct_gains.len() });
        }
        if self.noise_variances.len() != k {
            return Err(ChannelError::NoiseLength { expected: k, got: self.noise_variances.len() });
        }
        if self.cross_gains.len() != k - 1 {
            return Err(ChannelError::GainLength { expected: k - 1, got: self.cross_gains.len() });
        }
        for (i, &d) in self.direct_gains.iter().enumerate() {
            if d == 0.0 || !d.is_finite() {
                return Err(ChannelError::ZeroDirectGain(i + 1));
            }
        }
        for (i, &s) in self.noise_variances.iter().enumerate() {
            if !(s > 0.0) || !s.is_finite() {
                return Err(ChannelError::NonpositiveNoise { index: i + 1, value: s });
            }
        }
        for (i, &p) in self.powers.iter().enumerate() {
            if !p.is_finite() || p < 0.0 {
                return Err(ChannelError::NegativePower { index: i + 1, value: p });
            }
        }
        Ok(())
    }

    /// SINR at receiver `i` (1-based), treating all interference as noise.
    /// Used as the conversion oracle: standard-form conversion preserves it.
    pub fn sinr(&self, i: usize) -> f64 {
        let k = self.powers.len();
        let signal = self.direct_gains[i - 1].powi(2) * self.powers[i - 1];
        let noise = self.noise_variances[i - 1];
        let interference = match self.kind {
            ChannelKind::ManyToOne if i == 1 => (2..=k)
                .map(|j| self.cross_gains[j - 2].powi(2) * self.powers[j - 1])
                .sum(),
            ChannelKind::OneToMany if i < k => {
                self.cross_gains[i - 1].powi(2) * self.powers[k - 1]
            }
            _ => 0.0,
        };
        signal / (noise + interference)
    }
}

/// Converts a general-form channel to standard form: unit direct gains and
/// unit noise variance, powers scaled by squared direct gain over noise
/// variance, cross-gains scaled so received interference power is preserved.
pub fn to_standard_form(g: &GeneralChannelForm) -> Result<Channel, ChannelError> {
    g.validate()?;
    let k = g.powers.len();
    let powers: Vec<f64> = (0..k)
        .map(|i| g.direct_gains[i].powi(2) * g.powers[i] / g.noise_variances[i])
        .collect();
    match g.kind {
        ChannelKind::ManyToOne => {
            let sigma1 = g.noise_variances[0].sqrt();
            let gains: Vec<f64> = (2..=k)
                .map(|j| {
                    let sigma_j = g.noise_variances[j - 1].sqrt();
                    g.cross_gains[j - 2] * sigma_j / (sigma1 * g.direct_gains[j - 1])
                })
                .collect();
            Ok(Channel::ManyToOne(
                ManyToOneChannel::new(powers, gains).map_err(first_error)?,
            ))
        }
        ChannelKind::OneToMany => {
            let sigma_k = g.noise_variances[k - 1].sqrt();
            let gains: Vec<f64> = (1..k)
                .map(|i| {
                    let sigma_i = g.noise_variances[i - 1].sqrt();
                    g.cross_gains[i - 1] * sigma_k / (sigma_i * g.direct_gains[k - 1])
                })
                .collect();
            Ok(Channel::OneToMany(
                OneToManyChannel::new(powers, gains).map_err(first_error)?,
            ))
        }
    }
}

/// SINR at receiver `i` of a standard-form channel, all interference as noise.
pub fn standard_sinr(ch: &Channel, i: usize) -> f64 {
    match ch {
        Channel::ManyToOne(c) => {
            if i == 1 {
                c.power(1) / (1.0 + c.interference_from(2..=c.users()))
            } else {
                c.power(i)
            }
        }
        Channel::OneToMany(c) => {
            if i < c.users() {
                c.power(i) / (1.0 + c.interference_at(i))
            } else {
                c.power(i)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn scaled_chain(beta: f64) -> GeneralChannelForm {
        // Direct gains (beta, sqrt(beta), sqrt(beta)), cross gains beta into
        // receiver 1, unit powers and noise.
        GeneralChannelForm {
            kind: ChannelKind::ManyToOne,
            direct_gains: vec![beta, beta.sqrt(), beta.sqrt()],
            cross_gains: vec![beta, beta],
            powers: vec![1.0, 1.0, 1.0],
            noise_variances: vec![1.0, 1.0, 1.0],
        }
    }

    #[test]
    fn scaled_chain_beta2_standard_form() {
        let std = to_standard_form(&scaled_chain(2.0)).unwrap();
        let Channel::ManyToOne(c) = std else { panic!("kind preserved") };
        let root2 = 2.0f64.sqrt();
        // (sqrt(2))^2 is off by one ulp, hence the tolerance on P2, P3.
        for (got, want) in c.powers().iter().zip([4.0, 2.0, 2.0]) {
            assert!((got - want).abs() < 1e-12, "{got} vs {want}");
        }
        assert!((c.gain(2) - root2).abs() < 1e-15);
        assert!((c.gain(3) - root2).abs() < 1e-15);
    }

    #[test]
    fn standard_input_is_unchanged() {
        let g = GeneralChannelForm {
            kind: ChannelKind::OneToMany,
            direct_gains: vec![1.0, 1.0, 1.0],
            cross_gains: vec![0.7, 1.3],
            powers: vec![1.0, 2.0, 3.0],
            noise_variances: vec![1.0, 1.0, 1.0],
        };
        let std = to_standard_form(&g).unwrap();
        let Channel::OneToMany(c) = std else { panic!("kind preserved") };
        assert_eq!(c.powers(), &[1.0, 2.0, 3.0]);
        assert_eq!(c.gains(), &[0.7, 1.3]);
    }

    #[test]
    fn single_link_power_rescaling() {
        // Direct gain 2, noise variance 4, unit power: P1 = 4 * 1 / 4 = 1,
        // with the per-receiver SNR unchanged by conversion.
        let g = GeneralChannelForm {
            kind: ChannelKind::ManyToOne,
            direct_gains: vec![2.0, 1.0],
            cross_gains: vec![0.0],
            powers: vec![1.0, 1.0],
            noise_variances: vec![4.0, 1.0],
        };
        let std = to_standard_form(&g).unwrap();
        let Channel::ManyToOne(c) = &std else { panic!() };
        assert_eq!(c.power(1), 1.0);
        assert_eq!(g.sinr(1), standard_sinr(&std, 1));
    }

    #[test]
    fn conversion_rejects_bad_parameters() {
        let mut g = scaled_chain(2.0);
        g.direct_gains[1] = 0.0;
        assert_eq!(to_standard_form(&g), Err(ChannelError::ZeroDirectGain(2)));

        let mut g = scaled_chain(2.0);
        g.noise_variances[0] = 0.0;
        assert!(matches!(
            to_standard_form(&g),
            Err(ChannelError::NonpositiveNoise { index: 1, .. })
        ));
    }

    #[test]
    fn conversion_preserves_every_sinr() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for trial in 0..200 {
            let k = rng.gen_range(2..=5);
            let kind = if trial % 2 == 0 { ChannelKind::ManyToOne } else { ChannelKind::OneToMany };
            let g = GeneralChannelForm {
                kind,
                direct_gains: (0..k).map(|_| rng.gen_range(0.1..3.0)).collect(),
                cross_gains: (0..k - 1).map(|_| rng.gen_range(-2.0..2.0)).collect(),
                powers: (0..k).map(|_| rng.gen_range(0.0..5.0)).collect(),
                noise_variances: (0..k).map(|_| rng.gen_range(0.1..4.0)).collect(),
            };
            let std = to_standard_form(&g).unwrap();
            for i in 1..=k {
                let before = g.sinr(i);
                let after = standard_sinr(&std, i);
                assert!(
                    (before - after).abs() <= 1e-12 * before.abs().max(1.0),
                    "SINR changed at receiver {i}: {before} vs {after}"
                );
            }
        }
    }

    #[test]
    fn conversion_is_idempotent_on_standard_form() {
        let c = ManyToOneChannel::new(vec![2.0, 2.0, 2.0], vec![0.5, 1.5]).unwrap();
        let g = GeneralChannelForm {
            kind: ChannelKind::ManyToOne,
            direct_gains: vec![1.0; 3],
            cross_gains: c.gains().to_vec(),
            powers: c.powers().to_vec(),
            noise_variances: vec![1.0; 3],
        };
        assert_eq!(to_standard_form(&g).unwrap(), Channel::ManyToOne(c));
    }

    #[test]
    fn validate_reports_all_violations() {
        assert!(validate(&[1.0, 1.0, 1.0], &[0.5, 0.5]).is_empty());
        let errs = validate(&[1.0, -1.0, 1.0], &[0.5]);
        assert!(errs.contains(&ChannelError::GainLength { expected: 2, got: 1 }));
        assert!(errs.contains(&ChannelError::NegativePower { index: 2, value: -1.0 }));
    }

    #[test]
    fn channel_descriptor_round_trips() {
        let json = r#"{"kind":"many-to-one","powers":[2.0,2.0,2.0],"gains":[0.5,0.5]}"#;
        let ch: Channel = serde_json::from_str(json).unwrap();
        assert_eq!(ch.kind(), ChannelKind::ManyToOne);
        assert_eq!(ch.users(), 3);
        let back = serde_json::to_string(&ch).unwrap();
        let again: Channel = serde_json::from_str(&back).unwrap();
        assert_eq!(ch, again);

        let bad = r#"{"kind":"one-to-many","powers":[1.0,-2.0],"gains":[0.5]}"#;
        assert!(serde_json::from_str::<Channel>(bad).is_err());
    }
}
