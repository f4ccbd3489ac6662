//! Slot-degree distributions for single-`beta` and two-stage schedules.
//!
//! The degree of a slot is the number of users that transmitted in it. With
//! `n` users each transmitting independently with probability `p = beta/n`,
//! the slot degree is `Binomial(n, p)`; a Poisson approximation with mean
//! `beta` is also provided, truncated to the feasible range `0..=n` and
//! renormalized. Two-stage schedules evaluated past the switch slot yield a
//! convex mixture of the two per-stage binomials.

use serde::Serialize;

use crate::config::{ProtocolConfig, Schedule};
use crate::error::{Error, Result};

/// Which slot-degree model the analysis pipeline should build from a
/// configuration: the exact binomial or the Poisson approximation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum OmegaMode {
    Binomial,
    Poisson,
}

/// Probability distribution of slot degrees `0..=n`.
///
/// Entries are kept for every degree up to `n` even though the mass far
/// above the mean is negligible; downstream sums index arbitrary degrees and
/// must find exact entries.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DegreeDistribution {
    omega: Vec<f64>,
}

impl DegreeDistribution {
    /// Wrap a raw pmf over degrees `0..=n` (so `omega.len() == n + 1`).
    /// Entries must be nonnegative and sum to 1 within 1e-12.
    pub fn new(omega: Vec<f64>) -> Result<Self> {
        if omega.is_empty() {
            return Err(Error::InvalidConfig(
                "degree distribution needs at least degree 0".into(),
            ));
        }
        if omega.iter().any(|&w| !(0.0..=1.0).contains(&w)) {
            return Err(Error::InvalidConfig(
                "degree distribution entries must lie in [0, 1]".into(),
            ));
        }
        let total: f64 = omega.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidConfig(format!(
                "degree distribution sums to {total}, expected 1 within 1e-12"
            )));
        }
        Ok(DegreeDistribution { omega })
    }

    /// Number of users `n` (largest representable degree).
    pub fn n(&self) -> u32 {
        (self.omega.len() - 1) as u32
    }

    /// Probability of a slot having degree `d`; zero above `n`.
    pub fn prob(&self, d: u32) -> f64 {
        self.omega.get(d as usize).copied().unwrap_or(0.0)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.omega
    }

    /// Mean slot degree.
    pub fn mean(&self) -> f64 {
        self.omega
            .iter()
            .enumerate()
            .map(|(d, &w)| d as f64 * w)
            .sum()
    }
}

/// Exact binomial slot-degree distribution for `n` users at load `beta`.
///
/// Computed by the multiplicative pmf recurrence, falling back to log-domain
/// accumulation when the first term underflows; stable for `n` up to 1e4.
pub fn binomial_omega(n: u32, beta: f64) -> Result<DegreeDistribution> {
    if n == 0 {
        return Err(Error::InvalidConfig("n must be at least 1".into()));
    }
    if !beta.is_finite() || beta < 0.0 || beta > n as f64 {
        return Err(Error::InvalidConfig(format!(
            "beta = {beta} must lie in [0, n]"
        )));
    }
    Ok(DegreeDistribution {
        omega: binomial_pmf(n, beta / n as f64),
    })
}

/// Poisson approximation with mean `beta`, truncated to degrees `0..=n` and
/// renormalized so it remains a valid pmf. Slot degree cannot exceed `n`, so
/// the truncation only discards mass the exact model never had.
pub fn poisson_omega(n: u32, beta: f64) -> Result<DegreeDistribution> {
    if n == 0 {
        return Err(Error::InvalidConfig("n must be at least 1".into()));
    }
    if !beta.is_finite() || beta < 0.0 {
        return Err(Error::InvalidConfig(format!("beta = {beta} must be >= 0")));
    }
    let len = n as usize + 1;
    let mut omega = vec![0.0; len];
    if beta == 0.0 {
        omega[0] = 1.0;
        return Ok(DegreeDistribution { omega });
    }
    let start = (-beta).exp();
    if start > 0.0 {
        let mut term = start;
        for (d, slot) in omega.iter_mut().enumerate() {
            *slot = term;
            term *= beta / (d as f64 + 1.0);
        }
    } else {
        // Mean far above 700: build log-terms and shift by the maximum.
        let ln_beta = beta.ln();
        let mut ln_term = -beta;
        let mut ln_terms = Vec::with_capacity(len);
        for d in 0..len {
            ln_terms.push(ln_term);
            ln_term += ln_beta - ((d + 1) as f64).ln();
        }
        let max = ln_terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        for (slot, lt) in omega.iter_mut().zip(&ln_terms) {
            *slot = (lt - max).exp();
        }
    }
    normalize(&mut omega);
    Ok(DegreeDistribution { omega })
}

/// Slot-degree distribution of a schedule evaluated over `m` slots.
///
/// For a two-stage schedule with `m > m_star` this is the convex mixture of
/// the two per-stage binomials with weights `m_star/m` and `(m - m_star)/m`;
/// otherwise it reduces to the plain binomial of the active `beta`.
pub fn two_stage_omega(config: &ProtocolConfig) -> Result<DegreeDistribution> {
    config.validate()?;
    omega_for_config(config, OmegaMode::Binomial)
}

/// Build the slot-degree distribution a configuration induces, using either
/// the exact binomial or the Poisson approximation as the per-stage model.
pub fn omega_for_config(config: &ProtocolConfig, mode: OmegaMode) -> Result<DegreeDistribution> {
    config.validate()?;
    let n = config.n;
    let base = |beta: f64| -> Result<DegreeDistribution> {
        match mode {
            OmegaMode::Binomial => binomial_omega(n, beta),
            OmegaMode::Poisson => poisson_omega(n, beta),
        }
    };
    match config.schedule {
        Schedule::Single { beta } => base(beta),
        Schedule::TwoStage {
            beta1,
            beta2,
            m_star,
        } => {
            if config.m <= m_star {
                return base(beta1);
            }
            let first = base(beta1)?;
            let second = base(beta2)?;
            let w1 = m_star as f64 / config.m as f64;
            let w2 = (config.m - m_star) as f64 / config.m as f64;
            let omega = first
                .as_slice()
                .iter()
                .zip(second.as_slice())
                .map(|(&a, &b)| w1 * a + w2 * b)
                .collect();
            Ok(DegreeDistribution { omega })
        }
    }
}

fn binomial_pmf(n: u32, p: f64) -> Vec<f64> {
    let len = n as usize + 1;
    let mut omega = vec![0.0; len];
    if p <= 0.0 {
        omega[0] = 1.0;
        return omega;
    }
    if p >= 1.0 {
        omega[len - 1] = 1.0;
        return omega;
    }
    let start = (1.0 - p).powi(n as i32);
    if start > 0.0 {
        let ratio = p / (1.0 - p);
        let mut term = start;
        for (d, slot) in omega.iter_mut().enumerate() {
            *slot = term;
            term *= (n as usize - d) as f64 / (d as f64 + 1.0) * ratio;
        }
    } else {
        // Log-domain: ln C(n, d) accumulated incrementally.
        let (ln_p, ln_q) = (p.ln(), (1.0 - p).ln());
        let mut ln_c = 0.0f64;
        for (d, slot) in omega.iter_mut().enumerate() {
            *slot = (ln_c + d as f64 * ln_p + (n as usize - d) as f64 * ln_q).exp();
            ln_c += ((n as usize - d) as f64).ln() - (d as f64 + 1.0).ln();
        }
    }
    normalize(&mut omega);
    omega
}

fn normalize(omega: &mut [f64]) {
    let total: f64 = omega.iter().sum();
    debug_assert!(total > 0.0);
    for w in omega.iter_mut() {
        *w /= total;
    }
}
