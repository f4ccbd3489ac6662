//! Exhaustive ground truth for tiny instances: enumerate every user-slot
//! incidence matrix, weight it by its Bernoulli edge probabilities, peel it,
//! and accumulate exact PER and throughput.

use crate::config::ProtocolConfig;
use crate::error::{Error, Result};
use crate::exec::map_indices;

/// Upper bound on `n * m` for enumeration; 2^24 graphs peel in well under a
/// minute and the oracle is a verification fixture, not a feature.
pub const MAX_ENUMERATION_EDGES: u32 = 24;

/// Exact reference values from exhaustive enumeration.
#[derive(Debug, Clone, Copy)]
pub struct OracleResult {
    pub exact_per: f64,
    pub exact_throughput: f64,
    pub enumerated_graphs: u64,
    /// Total probability over all enumerated graphs; 1 up to float error.
    pub probability_sum: f64,
}

/// Enumerate all `2^(n*m)` incidence matrices of `config` and compute the
/// exact PER and throughput of the peeling decoder.
pub fn enumerate_exact(config: &ProtocolConfig) -> Result<OracleResult> {
    config.validate()?;
    let edges = config.n * config.m;
    if edges > MAX_ENUMERATION_EDGES {
        return Err(Error::EnumerationTooLarge {
            edges,
            bound: MAX_ENUMERATION_EDGES,
        });
    }
    let slot_probs: Vec<f64> = (0..config.m).map(|j| config.slot_probability(j)).collect();
    Ok(enumerate_with_slot_probs(config.n, &slot_probs))
}

/// Enumeration core over explicit per-slot edge probabilities.
fn enumerate_with_slot_probs(n: u32, slot_probs: &[f64]) -> OracleResult {
    let m = slot_probs.len();
    let graphs: u64 = 1 << (n as usize * m);

    // weight[j][k]: probability that slot j has exactly this user subset,
    // which depends only on its size k.
    let weights: Vec<Vec<f64>> = slot_probs
        .iter()
        .map(|&p| {
            (0..=n)
                .map(|k| p.powi(k as i32) * (1.0 - p).powi((n - k) as i32))
                .collect()
        })
        .collect();

    // Partition the graph space into contiguous chunks; chunks are summed
    // independently and then combined in index order, so the result does not
    // depend on the execution schedule.
    let chunks = 64u64.min(graphs);
    let chunk_len = graphs / chunks;
    let partials = map_indices(chunks as usize, |chunk| {
        let start = chunk as u64 * chunk_len;
        let end = if chunk as u64 == chunks - 1 {
            graphs
        } else {
            start + chunk_len
        };
        let mut total = KahanSum::default();
        let mut weighted_unresolved = KahanSum::default();
        let mut slot_users = vec![0u32; m];
        for graph in start..end {
            let mut weight = 1.0;
            for (j, users) in slot_users.iter_mut().enumerate() {
                *users = ((graph >> (j as u32 * n)) & ((1 << n) - 1)) as u32;
                weight *= weights[j][users.count_ones() as usize];
            }
            if weight == 0.0 {
                continue;
            }
            let resolved = peel_bitmask(&mut slot_users);
            total.add(weight);
            weighted_unresolved.add(weight * (n - resolved) as f64);
        }
        (total.value(), weighted_unresolved.value())
    });

    let mut probability_sum = 0.0;
    let mut expected_unresolved = 0.0;
    for (total, unresolved) in partials {
        probability_sum += total;
        expected_unresolved += unresolved;
    }

    let exact_per = expected_unresolved / n as f64;
    OracleResult {
        exact_per,
        exact_throughput: n as f64 * (1.0 - exact_per) / m as f64,
        enumerated_graphs: graphs,
        probability_sum,
    }
}

/// Peel a graph given as per-slot user bitmasks; returns the number of
/// resolved users. Destroys the masks.
fn peel_bitmask(slots: &mut [u32]) -> u32 {
    let mut resolved = 0u32;
    loop {
        let mut progressed = false;
        for j in 0..slots.len() {
            if slots[j].count_ones() == 1 {
                let user = slots[j];
                for s in slots.iter_mut() {
                    *s &= !user;
                }
                resolved += 1;
                progressed = true;
            }
        }
        if !progressed {
            return resolved;
        }
    }
}

#[derive(Debug, Default, Clone, Copy)]
struct KahanSum {
    sum: f64,
    carry: f64,
}

impl KahanSum {
    fn add(&mut self, x: f64) {
        let y = x - self.carry;
        let t = self.sum + y;
        self.carry = (t - self.sum) - y;
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum
    }
}
