//! Monte Carlo verification: sample contention periods, run the peeling
//! decoder, aggregate PER and throughput with standard errors.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::ProtocolConfig;
use crate::error::{Error, Result};
use crate::exec::{map_indices, map_indices_serial};

/// Bipartite user-slot graph of one contention period: per-slot lists of the
/// users that transmitted in that slot.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContentionGraph {
    n: u32,
    slots: Vec<Vec<u32>>,
}

impl ContentionGraph {
    /// Wrap explicit incidence lists. Every user index must be below `n` and
    /// appear at most once per slot.
    pub fn new(n: u32, slots: Vec<Vec<u32>>) -> Result<Self> {
        for (j, slot) in slots.iter().enumerate() {
            let mut seen = vec![false; n as usize];
            for &user in slot {
                if user >= n {
                    return Err(Error::InvalidConfig(format!(
                        "slot {j} references user {user} >= n = {n}"
                    )));
                }
                if seen[user as usize] {
                    return Err(Error::InvalidConfig(format!(
                        "slot {j} lists user {user} twice"
                    )));
                }
                seen[user as usize] = true;
            }
        }
        Ok(ContentionGraph { n, slots })
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn m(&self) -> u32 {
        self.slots.len() as u32
    }

    pub fn slots(&self) -> &[Vec<u32>] {
        &self.slots
    }

    pub fn edge_count(&self) -> usize {
        self.slots.iter().map(Vec::len).sum()
    }
}

/// Sample one contention period: every (user, slot) edge is present
/// independently with the slot's access probability.
pub fn sample_graph<R: Rng>(config: &ProtocolConfig, rng: &mut R) -> ContentionGraph {
    let n = config.n;
    let mut slots = Vec::with_capacity(config.m as usize);
    for slot in 0..config.m {
        let p = config.slot_probability(slot);
        let mut present = Vec::new();
        if p >= 1.0 {
            present.extend(0..n);
        } else if p > 0.0 {
            for user in 0..n {
                if rng.gen_bool(p) {
                    present.push(user);
                }
            }
        }
        slots.push(present);
    }
    ContentionGraph { n, slots }
}

/// Run the peeling decoder: repeatedly take a slot of reduced degree 1,
/// resolve its user, and erase that user's edges everywhere (successive
/// interference cancellation). Returns the sorted resolved user indices.
///
/// The resolved set does not depend on which singleton is taken first; this
/// variant always takes the most recently discovered one.
pub fn peel(graph: &ContentionGraph) -> Vec<u32> {
    peel_with_selector(graph, |worklist| worklist.pop().expect("nonempty"))
}

/// As [`peel`], but every step resolves a uniformly chosen current
/// singleton. Exists to exercise the order-independence of the decoder.
pub fn peel_with_rng<R: Rng>(graph: &ContentionGraph, rng: &mut R) -> Vec<u32> {
    peel_with_selector(graph, |worklist| {
        let i = rng.gen_range(0..worklist.len());
        worklist.swap_remove(i)
    })
}

fn peel_with_selector<S>(graph: &ContentionGraph, mut select: S) -> Vec<u32>
where
    S: FnMut(&mut Vec<u32>) -> u32,
{
    let n = graph.n as usize;
    let m = graph.slots.len();

    // Per-slot reduced degree plus an xor accumulator of the unresolved
    // users in the slot: once the degree drops to 1 the accumulator is
    // exactly the remaining user.
    let mut degree: Vec<u32> = vec![0; m];
    let mut acc: Vec<u32> = vec![0; m];
    let mut user_degree: Vec<u32> = vec![0; n];
    for (j, slot) in graph.slots.iter().enumerate() {
        degree[j] = slot.len() as u32;
        for &user in slot {
            acc[j] ^= user;
            user_degree[user as usize] += 1;
        }
    }

    // CSR adjacency user -> slots.
    let mut offsets = vec![0usize; n + 1];
    for user in 0..n {
        offsets[user + 1] = offsets[user] + user_degree[user] as usize;
    }
    let mut slots_of = vec![0u32; offsets[n]];
    let mut cursor = offsets.clone();
    for (j, slot) in graph.slots.iter().enumerate() {
        for &user in slot {
            slots_of[cursor[user as usize]] = j as u32;
            cursor[user as usize] += 1;
        }
    }

    let mut worklist: Vec<u32> = (0..m as u32).filter(|&j| degree[j as usize] == 1).collect();
    let mut resolved = vec![false; n];
    while !worklist.is_empty() {
        let j = select(&mut worklist) as usize;
        if degree[j] != 1 {
            continue; // stale entry, slot lost its last user meanwhile
        }
        let user = acc[j] as usize;
        debug_assert!(!resolved[user]);
        resolved[user] = true;
        for &t in &slots_of[offsets[user]..offsets[user + 1]] {
            let t = t as usize;
            degree[t] -= 1;
            acc[t] ^= user as u32;
            if degree[t] == 1 {
                worklist.push(t as u32);
            }
        }
    }

    (0..n as u32).filter(|&u| resolved[u as usize]).collect()
}

/// Aggregate outcome of repeated contention-period simulations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimulationResult {
    pub trials: u32,
    pub mean_per: f64,
    pub mean_throughput: f64,
    pub stderr_per: f64,
    pub stderr_throughput: f64,
    pub seed: u64,
}

/// Simulate `trials` independent contention periods and aggregate the
/// outcomes. Each trial draws from its own generator keyed by
/// `(seed, trial index)`, so results are bit-identical whether trials run
/// serially or in parallel.
pub fn simulate(config: &ProtocolConfig, trials: u32, seed: u64) -> Result<SimulationResult> {
    config.validate()?;
    require_trials(trials)?;
    let counts = map_indices(trials as usize, |t| run_trial(config, seed, t as u64));
    Ok(aggregate(config, trials, seed, &counts))
}

/// [`simulate`] forced onto a single thread. Produces bit-identical results;
/// kept for benchmarking the parallel speedup.
pub fn simulate_serial(
    config: &ProtocolConfig,
    trials: u32,
    seed: u64,
) -> Result<SimulationResult> {
    config.validate()?;
    require_trials(trials)?;
    let counts = map_indices_serial(trials as usize, |t| run_trial(config, seed, t as u64));
    Ok(aggregate(config, trials, seed, &counts))
}

fn require_trials(trials: u32) -> Result<()> {
    if trials == 0 {
        return Err(Error::InvalidConfig("trials must be at least 1".into()));
    }
    Ok(())
}

fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    // Injective mapping of (seed, trial) into the 256-bit key space.
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&trial.to_le_bytes());
    key[16..24].copy_from_slice(b"frameles");
    ChaCha8Rng::from_seed(key)
}

fn run_trial(config: &ProtocolConfig, seed: u64, trial: u64) -> u32 {
    let mut rng = trial_rng(seed, trial);
    let graph = sample_graph(config, &mut rng);
    peel(&graph).len() as u32
}

fn aggregate(config: &ProtocolConfig, trials: u32, seed: u64, counts: &[u32]) -> SimulationResult {
    let n = config.n as f64;
    let m = config.m as f64;
    let t = trials as f64;

    let mean_resolved = counts.iter().map(|&k| k as f64).sum::<f64>() / t;
    let variance = if trials > 1 {
        counts
            .iter()
            .map(|&k| {
                let d = k as f64 - mean_resolved;
                d * d
            })
            .sum::<f64>()
            / (t - 1.0)
    } else {
        0.0
    };
    let stderr_resolved = (variance / t).sqrt();

    SimulationResult {
        trials,
        mean_per: (n - mean_resolved) / n,
        mean_throughput: mean_resolved / m,
        stderr_per: stderr_resolved / n,
        stderr_throughput: stderr_resolved / m,
        seed,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn graph(n: u32, slots: &[&[u32]]) -> ContentionGraph {
        ContentionGraph::new(n, slots.iter().map(|s| s.to_vec()).collect()).unwrap()
    }

    #[test]
    fn peel_resolves_chained_cancellations() {
        // Slot 2 is a singleton; cancelling its user frees slot 0, which in
        // turn frees slot 1.
        let g = graph(3, &[&[0, 1], &[0, 2], &[1]]);
        assert_eq!(peel(&g), vec![0, 1, 2]);
    }

    #[test]
    fn peel_on_empty_graph_resolves_nobody() {
        let g = graph(3, &[&[], &[]]);
        assert_eq!(peel(&g), Vec::<u32>::new());
    }

    #[test]
    fn peel_stuck_collision_resolves_nobody() {
        let g = graph(2, &[&[0, 1]]);
        assert_eq!(peel(&g), Vec::<u32>::new());
    }

    #[test]
    fn peel_selection_order_does_not_change_the_resolved_set() {
        use rand::SeedableRng;
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let config = ProtocolConfig::single(20, 2.0, 24).unwrap();
        for _ in 0..30 {
            let g = sample_graph(&config, &mut rng);
            let fifo = peel(&g);
            for round in 0..3 {
                let mut order_rng = ChaCha8Rng::seed_from_u64(1000 + round);
                assert_eq!(fifo, peel_with_rng(&g, &mut order_rng));
            }
        }
    }

    #[test]
    fn sample_graph_beta_zero_and_beta_n() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let empty = sample_graph(&ProtocolConfig::single(5, 0.0, 4).unwrap(), &mut rng);
        assert_eq!(empty.edge_count(), 0);
        let full = sample_graph(&ProtocolConfig::single(5, 5.0, 4).unwrap(), &mut rng);
        assert_eq!(full.edge_count(), 20);
        assert!(full.slots().iter().all(|s| s.len() == 5));
    }

    #[test]
    fn graph_constructor_validates() {
        assert!(ContentionGraph::new(2, vec![vec![2]]).is_err());
        assert!(ContentionGraph::new(2, vec![vec![1, 1]]).is_err());
        assert!(ContentionGraph::new(2, vec![vec![0, 1], vec![]]).is_ok());
    }

    #[test]
    fn simulation_is_deterministic_and_schedule_independent() {
        let config = ProtocolConfig::single(40, 2.2, 50).unwrap();
        let a = simulate(&config, 400, 9).unwrap();
        let b = simulate(&config, 400, 9).unwrap();
        let c = simulate_serial(&config, 400, 9).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.mean_per.to_bits(), c.mean_per.to_bits());
        assert_eq!(a.stderr_per.to_bits(), c.stderr_per.to_bits());
        assert_eq!(a.mean_throughput.to_bits(), c.mean_throughput.to_bits());
        assert_eq!(a.stderr_throughput.to_bits(), c.stderr_throughput.to_bits());
        let other_seed = simulate(&config, 400, 10).unwrap();
        assert_ne!(a.mean_per.to_bits(), other_seed.mean_per.to_bits());
    }

    #[test]
    fn single_user_simulation_matches_closed_form() {
        // One user is resolved iff it ever transmits: per = (1 - p)^m.
        let config = ProtocolConfig::single(1, 0.5, 5).unwrap();
        let result = simulate(&config, 200_000, 3).unwrap();
        let expected = 0.5f64.powi(5);
        assert!(
            (result.mean_per - expected).abs() < 4.0 * result.stderr_per,
            "mean {} expected {expected} stderr {}",
            result.mean_per,
            result.stderr_per
        );
    }

    #[test]
    fn sampled_degree_histogram_matches_binomial_pmf() {
        use statrs::distribution::{ChiSquared, ContinuousCDF};

        let config = ProtocolConfig::single(100, 2.5, 100).unwrap();
        let omega = crate::degree::binomial_omega(100, 2.5).unwrap();
        let total_slots = 100_000u32;
        let mut histogram = vec![0u64; 101];
        let mut rng = ChaCha8Rng::seed_from_u64(20);
        for _ in 0..(total_slots / 100) {
            let g = sample_graph(&config, &mut rng);
            for slot in g.slots() {
                histogram[slot.len()] += 1;
            }
        }

        // Pool the tail so every bin has expected count >= 5.
        let mut observed = Vec::new();
        let mut expected = Vec::new();
        let mut tail_obs = 0.0;
        let mut tail_exp = 0.0;
        for (d, &count) in histogram.iter().enumerate() {
            let e = omega.prob(d as u32) * total_slots as f64;
            if e >= 5.0 {
                observed.push(count as f64);
                expected.push(e);
            } else {
                tail_obs += count as f64;
                tail_exp += e;
            }
        }
        observed.push(tail_obs);
        expected.push(tail_exp);

        let statistic: f64 = observed
            .iter()
            .zip(&expected)
            .map(|(&o, &e)| (o - e) * (o - e) / e)
            .sum();
        let dof = (observed.len() - 1) as f64;
        let p_value = 1.0 - ChiSquared::new(dof).unwrap().cdf(statistic);
        assert!(
            p_value > 0.01,
            "chi-square p-value {p_value} (statistic {statistic}, dof {dof})"
        );
    }

    #[test]
    fn zero_degree_user_is_never_resolved() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let config = ProtocolConfig::single(15, 1.5, 20).unwrap();
        for _ in 0..50 {
            let g = sample_graph(&config, &mut rng);
            let mut edges = [0u32; 15];
            for slot in g.slots() {
                for &u in slot {
                    edges[u as usize] += 1;
                }
            }
            let resolved = peel(&g);
            assert!(resolved.len() <= 15);
            for &u in &resolved {
                assert!(edges[u as usize] > 0, "user {u} has no edges");
            }
        }
    }
}
