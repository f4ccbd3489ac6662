//! Protocol configuration: user count, slot-access schedule, slot count.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Slot-access schedule. Either a single load parameter `beta` for the whole
/// contention period, or a two-stage schedule that switches from `beta1` to
/// `beta2` once the slot index exceeds `m_star`.
///
/// Each user transmits in a slot independently with probability
/// `beta / n` (per-slot `beta1/n` or `beta2/n` for two-stage schedules).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Schedule {
    Single { beta: f64 },
    TwoStage { beta1: f64, beta2: f64, m_star: u32 },
}

/// A fully specified evaluation point: `n` contending users, a slot-access
/// schedule, and a contention period of `m` slots.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProtocolConfig {
    pub n: u32,
    #[serde(flatten)]
    pub schedule: Schedule,
    pub m: u32,
}

impl ProtocolConfig {
    /// Single-`beta` configuration.
    pub fn single(n: u32, beta: f64, m: u32) -> Result<Self> {
        let config = ProtocolConfig {
            n,
            schedule: Schedule::Single { beta },
            m,
        };
        config.validate()?;
        Ok(config)
    }

    /// Two-stage configuration switching from `beta1` to `beta2` after slot
    /// `m_star`.
    pub fn two_stage(n: u32, beta1: f64, beta2: f64, m_star: u32, m: u32) -> Result<Self> {
        let config = ProtocolConfig {
            n,
            schedule: Schedule::TwoStage {
                beta1,
                beta2,
                m_star,
            },
            m,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidConfig("n must be at least 1".into()));
        }
        if self.m == 0 {
            return Err(Error::InvalidConfig("m must be at least 1".into()));
        }
        let check_beta = |name: &str, beta: f64| -> Result<()> {
            if !beta.is_finite() || beta < 0.0 || beta > self.n as f64 {
                return Err(Error::InvalidConfig(format!(
                    "{name} = {beta} must lie in [0, n] so that the slot access \
                     probability stays in [0, 1]"
                )));
            }
            Ok(())
        };
        match self.schedule {
            Schedule::Single { beta } => check_beta("beta", beta)?,
            Schedule::TwoStage {
                beta1,
                beta2,
                m_star,
            } => {
                check_beta("beta1", beta1)?;
                check_beta("beta2", beta2)?;
                if m_star == 0 {
                    return Err(Error::InvalidConfig("m_star must be at least 1".into()));
                }
            }
        }
        Ok(())
    }

    /// Same configuration evaluated at a different contention period length.
    pub fn with_m(mut self, m: u32) -> Self {
        self.m = m;
        self
    }

    /// Slot access probability for the zero-based slot index `slot`.
    pub fn slot_probability(&self, slot: u32) -> f64 {
        let n = self.n as f64;
        match self.schedule {
            Schedule::Single { beta } => beta / n,
            Schedule::TwoStage {
                beta1,
                beta2,
                m_star,
            } => {
                if slot < m_star {
                    beta1 / n
                } else {
                    beta2 / n
                }
            }
        }
    }

    /// Whether the schedule actually mixes two distinct access probabilities
    /// at this evaluation point. For `m <= m_star`, or when `beta1 == beta2`,
    /// a two-stage schedule degenerates to a single-`beta` one.
    pub fn is_effectively_two_stage(&self) -> bool {
        match self.schedule {
            Schedule::Single { .. } => false,
            Schedule::TwoStage {
                beta1,
                beta2,
                m_star,
            } => self.m > m_star && beta1 != beta2,
        }
    }
}
