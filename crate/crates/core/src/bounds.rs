//! Lower bounds on the packet error rate.
//!
//! A user that never transmits can never be resolved, so the probability of
//! that event lower-bounds the PER: `(1 - beta/n)^m` for a single-`beta`
//! schedule, with `exp(-beta * m/n)` as its large-`m` approximation. For
//! two-stage schedules the same event has probability
//! `(1 - p1)^min(m, m*) * (1 - p2)^max(m - m*, 0)`; that case is a natural
//! extension of the single-stage bound and is flagged as such.

use serde::Serialize;

use crate::config::{ProtocolConfig, Schedule};

/// PER lower bounds for one configuration.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct BoundResult {
    /// Probability that a user never transmits.
    pub exact_bound: f64,
    /// Exponential approximation of the same quantity.
    pub exponential_bound: f64,
    /// True when the configuration is two-stage, where the bound is an
    /// extension of the single-`beta` form rather than a quoted result.
    pub two_stage_extension: bool,
}

/// Lower bound on the PER of `config`: the probability that a user does not
/// transmit in any slot.
pub fn per_lower_bound(config: &ProtocolConfig) -> BoundResult {
    let n = config.n as f64;
    let m = config.m;
    match config.schedule {
        Schedule::Single { beta } => BoundResult {
            exact_bound: (1.0 - beta / n).powi(m as i32),
            exponential_bound: (-beta * m as f64 / n).exp(),
            two_stage_extension: false,
        },
        Schedule::TwoStage {
            beta1,
            beta2,
            m_star,
        } => {
            let first = m.min(m_star);
            let second = m.saturating_sub(m_star);
            BoundResult {
                exact_bound: (1.0 - beta1 / n).powi(first as i32)
                    * (1.0 - beta2 / n).powi(second as i32),
                exponential_bound: (-(beta1 * first as f64 + beta2 * second as f64) / n).exp(),
                two_stage_extension: true,
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn beta_zero_gives_trivial_bounds() {
        let config = ProtocolConfig::single(10, 0.0, 25).unwrap();
        let b = per_lower_bound(&config);
        assert_eq!(b.exact_bound, 1.0);
        assert_eq!(b.exponential_bound, 1.0);
    }

    #[test]
    fn exponential_bound_direct_value() {
        let config = ProtocolConfig::single(100, 2.5, 200).unwrap();
        let b = per_lower_bound(&config);
        assert!((b.exponential_bound - (-5.0f64).exp()).abs() < 1e-15);
        assert!((b.exponential_bound - 6.7379469990855e-3).abs() < 1e-13);
        assert!(!b.two_stage_extension);
    }

    #[test]
    fn exact_bound_never_exceeds_exponential() {
        for &(n, beta, m) in &[(50u32, 2.47f64, 66u32), (100, 2.62, 126), (200, 2.71, 240)] {
            let b = per_lower_bound(&ProtocolConfig::single(n, beta, m).unwrap());
            assert!(b.exact_bound <= b.exponential_bound);
            assert!((0.0..=1.0).contains(&b.exact_bound));
            assert!((0.0..=1.0).contains(&b.exponential_bound));
        }
    }

    #[test]
    fn bounds_agree_for_small_load_per_slot() {
        // The two forms differ by exp(O(m * (beta/n)^2)); at beta/n = 0.0125
        // they stay within 5% relative even for m = 400.
        for &m in &[50u32, 100, 200, 400] {
            let b = per_lower_bound(&ProtocolConfig::single(200, 2.5, m).unwrap());
            let rel = (b.exponential_bound - b.exact_bound) / b.exact_bound;
            assert!(
                (0.0..0.05).contains(&rel),
                "m={m}: exact {} exp {} rel {rel}",
                b.exact_bound,
                b.exponential_bound
            );
        }
    }

    #[test]
    fn two_stage_bound_multiplies_stage_factors() {
        let config = ProtocolConfig::two_stage(50, 2.47, 4.05, 66, 100).unwrap();
        let b = per_lower_bound(&config);
        let expected = (1.0 - 2.47 / 50.0f64).powi(66) * (1.0 - 4.05 / 50.0f64).powi(34);
        assert!((b.exact_bound - expected).abs() < 1e-15);
        assert!(b.two_stage_extension);

        // At or below the switch the second stage contributes nothing.
        let early = per_lower_bound(&config.with_m(66));
        assert!((early.exact_bound - (1.0 - 2.47 / 50.0f64).powi(66)).abs() < 1e-15);
    }
}
