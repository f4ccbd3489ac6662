//! Exact finite-length analysis of the SIC peeling decoder.
//!
//! The decoder is modelled as a finite state machine over `(cloud, ripple)`
//! cardinalities, indexed by the number `u` of still-unresolved users. The
//! cloud holds slots of reduced degree >= 2, the ripple slots of reduced
//! degree exactly 1. Starting from a multinomial initial distribution over
//! the `m` slots, each resolution step applies an exact two-part transition:
//! a binomial number of ripple slots departs (they were connected to the
//! user just resolved) and a binomial number of cloud slots enters the
//! ripple (their reduced degree dropped to 1). Paths whose ripple empties
//! with `u` users unresolved are absorbed as decoding failures at stage `u`.
//!
//! The per-stage cloud-to-ripple probability factors through to a ratio of
//! hypergeometric-style sums over the slot-degree distribution; all binomial
//! coefficient ratios are evaluated as stable incremental products.

use crate::config::ProtocolConfig;
use crate::degree::{omega_for_config, DegreeDistribution, OmegaMode};
use crate::error::{Error, Result};
use crate::num::{binomial_scan, ln_factorial_table};

/// Default floor below which the cloud-membership probability is treated as
/// degenerate rather than divided by.
pub const DEFAULT_DENOMINATOR_FLOOR: f64 = 1e-300;

/// Default per-state probability below which mass is pruned (and ledgered).
pub const DEFAULT_PRUNE_THRESHOLD: f64 = 1e-15;

/// Live mass on cloud states below this is treated as numerically absent
/// when deciding whether a degenerate cloud probability actually matters.
const VACUOUS_CLOUD_MASS: f64 = 1e-12;

/// Decoder state: number of cloud slots and ripple slots.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DecoderState {
    pub cloud: u32,
    pub ripple: u32,
}

/// Probability distribution over decoder states at a fixed stage, together
/// with the ledger of absorbed failure mass per stage and pruned mass.
///
/// At every stage, live mass + absorbed failure mass + pruned mass +
/// success mass (mass that reached stage 0) accounts for all probability.
#[derive(Debug, Clone)]
pub struct StateDistribution {
    unresolved: u32,
    m: u32,
    /// Sparse map, sorted by (cloud, ripple).
    mass: Vec<(DecoderState, f64)>,
    /// Index `u`: probability absorbed with an empty ripple and `u` users
    /// unresolved. Entry 0 is unused and stays zero.
    failure_mass_by_u: Vec<f64>,
    pruned_mass: f64,
}

impl StateDistribution {
    /// Number of unresolved users this distribution is indexed by.
    pub fn unresolved(&self) -> u32 {
        self.unresolved
    }

    /// Contention period length governing the state space (`cloud + ripple <= m`).
    pub fn m(&self) -> u32 {
        self.m
    }

    /// Total user count `n` (the failure ledger is indexed by `0..=n`).
    pub fn n(&self) -> u32 {
        (self.failure_mass_by_u.len() - 1) as u32
    }

    pub fn iter(&self) -> impl Iterator<Item = (DecoderState, f64)> + '_ {
        self.mass.iter().copied()
    }

    /// Probability of one decoder state (zero if absent).
    pub fn mass_of(&self, cloud: u32, ripple: u32) -> f64 {
        let key = DecoderState { cloud, ripple };
        match self.mass.binary_search_by(|(s, _)| s.cmp(&key)) {
            Ok(i) => self.mass[i].1,
            Err(_) => 0.0,
        }
    }

    pub fn failure_mass_by_u(&self) -> &[f64] {
        &self.failure_mass_by_u
    }

    pub fn pruned_mass(&self) -> f64 {
        self.pruned_mass
    }

    /// Total probability still in live states.
    pub fn live_mass(&self) -> f64 {
        self.mass.iter().map(|&(_, w)| w).sum()
    }

    /// Total probability on states with a nonempty cloud.
    pub fn cloud_mass(&self) -> f64 {
        self.mass
            .iter()
            .filter(|&&(s, _)| s.cloud > 0)
            .map(|&(_, w)| w)
            .sum()
    }

    /// Live + absorbed + pruned probability; 1 up to floating error while
    /// no mass has reached stage 0, and excludes success mass afterwards.
    pub fn ledger_total(&self) -> f64 {
        self.live_mass() + self.failure_mass_by_u.iter().sum::<f64>() + self.pruned_mass
    }

    /// Drop states with probability below `threshold`, adding the removed
    /// mass to the pruned ledger. Returns the mass removed by this call.
    pub fn prune(&mut self, threshold: f64) -> f64 {
        if threshold <= 0.0 {
            return 0.0;
        }
        let mut dropped = 0.0;
        self.mass.retain(|&(_, w)| {
            if w < threshold {
                dropped += w;
                false
            } else {
                true
            }
        });
        self.pruned_mass += dropped;
        dropped
    }

    /// Largest `cloud + ripple` over live states.
    fn extent(&self) -> u32 {
        self.mass
            .iter()
            .map(|&(s, _)| s.cloud + s.ripple)
            .max()
            .unwrap_or(0)
    }

    /// Build a distribution from explicit state probabilities. Intended for
    /// tests and diagnostics; entries are sorted and merged.
    pub fn from_parts(
        unresolved: u32,
        m: u32,
        n: u32,
        entries: impl IntoIterator<Item = ((u32, u32), f64)>,
    ) -> Result<Self> {
        let mut mass: Vec<(DecoderState, f64)> = Vec::new();
        for ((cloud, ripple), w) in entries {
            if cloud + ripple > m {
                return Err(Error::InvalidConfig(format!(
                    "state ({cloud}, {ripple}) exceeds m = {m}"
                )));
            }
            if !(0.0..=1.0).contains(&w) {
                return Err(Error::InvalidConfig(format!(
                    "state probability {w} out of range"
                )));
            }
            mass.push((DecoderState { cloud, ripple }, w));
        }
        mass.sort_by_key(|e| e.0);
        mass.dedup_by(|later, earlier| {
            if later.0 == earlier.0 {
                earlier.1 += later.1;
                true
            } else {
                false
            }
        });
        Ok(StateDistribution {
            unresolved,
            m,
            mass,
            failure_mass_by_u: vec![0.0; n as usize + 1],
            pruned_mass: 0.0,
        })
    }
}

/// Initial decoder-state distribution over `m` slots: each slot lands in the
/// cloud, the ripple, or the degree-0 pool independently with probabilities
/// `1 - omega_1 - omega_0`, `omega_1`, `omega_0`, giving a multinomial over
/// `(cloud, ripple)` pairs with `cloud + ripple <= m`.
pub fn initial_state(omega: &DegreeDistribution, m: u32) -> StateDistribution {
    let n = omega.n();
    let p_zero = omega.prob(0);
    let p_ripple = omega.prob(1);
    let p_cloud = (1.0 - p_zero - p_ripple).max(0.0);

    let ln_fact = ln_factorial_table(m);
    let ln_term = |p: f64, k: u32| if k == 0 { 0.0 } else { k as f64 * p.ln() };

    let mut mass = Vec::new();
    for cloud in 0..=m {
        if p_cloud == 0.0 && cloud > 0 {
            break;
        }
        for ripple in 0..=(m - cloud) {
            if p_ripple == 0.0 && ripple > 0 {
                break;
            }
            let zeros = m - cloud - ripple;
            if p_zero == 0.0 && zeros > 0 {
                continue;
            }
            let ln_multi = ln_fact[m as usize]
                - ln_fact[cloud as usize]
                - ln_fact[ripple as usize]
                - ln_fact[zeros as usize];
            let w = (ln_multi
                + ln_term(p_cloud, cloud)
                + ln_term(p_ripple, ripple)
                + ln_term(p_zero, zeros))
            .exp();
            if w > 0.0 {
                mass.push((DecoderState { cloud, ripple }, w));
            }
        }
    }

    StateDistribution {
        unresolved: n,
        m,
        mass,
        failure_mass_by_u: vec![0.0; n as usize + 1],
        pruned_mass: 0.0,
    }
}

/// Probability that a generic cloud slot enters the ripple in the transition
/// from `unresolved` to `unresolved - 1` users.
///
/// This is the ratio of (a) the probability that a slot has reduced degree
/// exactly 2 with one edge on the user being resolved and one on a user that
/// remains unresolved, to (b) the probability that the slot is in the cloud
/// at this stage. Uses the default denominator floor.
pub fn cloud_exit_probability(omega: &DegreeDistribution, unresolved: u32) -> Result<f64> {
    cloud_exit_probability_with_floor(omega, unresolved, DEFAULT_DENOMINATOR_FLOOR)
}

/// As [`cloud_exit_probability`], with an explicit degenerate floor for the
/// cloud-membership probability.
pub fn cloud_exit_probability_with_floor(
    omega: &DegreeDistribution,
    unresolved: u32,
    floor: f64,
) -> Result<f64> {
    let n = omega.n();
    assert!(
        (1..=n).contains(&unresolved),
        "unresolved must lie in 1..=n"
    );
    let u = unresolved;
    let nf = n as f64;
    let uf = u as f64;

    // Numerator: sum over degrees d of
    //   omega_d * d * (d-1) * (1/n) * ((u-1)/(n-1)) * C(n-u, d-2)/C(n-2, d-2)
    // for d in 2..=min(n-u+2, n). The coefficient ratio is accumulated as a
    // product of factors (n-u-j)/(n-2-j), all in [0, 1].
    let mut numerator = 0.0;
    if n >= 2 {
        let d_max = (n - u + 2).min(n);
        let mut ratio = 1.0; // C(n-u, d-2)/C(n-2, d-2) at d = 2
        let scale = (uf - 1.0) / (nf * (nf - 1.0));
        let mut d = 2u32;
        while d <= d_max {
            let df = d as f64;
            numerator += omega.prob(d) * df * (df - 1.0) * scale * ratio;
            if d < d_max {
                let j = (d - 2) as f64;
                ratio *= (nf - uf - j) / (nf - 2.0 - j);
            }
            d += 1;
        }
    }

    let denominator = cloud_membership_probability(omega, u);
    if denominator < floor {
        return Err(Error::DegenerateDistribution {
            unresolved: u,
            denominator,
            floor,
        });
    }
    Ok((numerator / denominator).clamp(0.0, 1.0))
}

/// Probability that a slot is in the cloud (reduced degree >= 2) when `u`
/// users are unresolved: one minus the ripple-membership and reduced-degree-0
/// probabilities.
fn cloud_membership_probability(omega: &DegreeDistribution, u: u32) -> f64 {
    let n = omega.n();
    let (nf, uf) = (n as f64, u as f64);

    // Ripple membership: sum over d in 1..=min(n-u+1, n) of
    //   omega_d * u * C(n-u, d-1)/C(n, d), seeded with d = 1 where the ratio
    //   is 1/n.
    let mut ripple = 0.0;
    {
        let d_max = (n - u + 1).min(n);
        let mut ratio = 1.0 / nf;
        let mut d = 1u32;
        while d <= d_max {
            ripple += omega.prob(d) * uf * ratio;
            if d < d_max {
                let df = d as f64;
                ratio *= (nf - uf - df + 1.0) / df * (df + 1.0) / (nf - df);
            }
            d += 1;
        }
    }

    // Reduced degree 0: sum over d in 0..=min(n-u, n) of
    //   omega_d * C(n-u, d)/C(n, d).
    let mut zero = 0.0;
    {
        let d_max = (n - u).min(n);
        let mut ratio = 1.0;
        let mut d = 0u32;
        while d <= d_max {
            zero += omega.prob(d) * ratio;
            if d < d_max {
                let df = d as f64;
                ratio *= (nf - uf - df) / (nf - df);
            }
            d += 1;
        }
    }

    1.0 - ripple - zero
}

/// Binomial pmf rows for every trial count `0..=max_count` at a fixed
/// success probability, with sub-`TAIL_TRIM` tail terms dropped. The exact
/// dropped mass is recorded per row so callers can ledger it.
#[derive(Debug, Default)]
struct PmfTable {
    /// Per row: first retained `k` and the range into `weights`.
    rows: Vec<(u32, usize, usize)>,
    weights: Vec<f64>,
    skipped: Vec<f64>,
}

/// Pmf terms below this are dropped from scatter loops and ledgered as
/// pruned mass. Each row loses at most ~1e-16 this way, so whole runs stay
/// far below the 1e-9 conservation budget.
const TAIL_TRIM: f64 = 1e-18;

impl PmfTable {
    fn build(&mut self, max_count: u32, p: f64, tmp: &mut Vec<f64>) {
        self.rows.clear();
        self.weights.clear();
        self.skipped.clear();
        for count in 0..=max_count {
            tmp.clear();
            tmp.resize(count as usize + 1, 0.0);
            binomial_scan(count, p, |k, w| tmp[k as usize] = w);
            let first = tmp.iter().position(|&w| w >= TAIL_TRIM).unwrap_or(0);
            let last = tmp.iter().rposition(|&w| w >= TAIL_TRIM).unwrap_or(0);
            let skipped: f64 =
                tmp[..first].iter().sum::<f64>() + tmp[last + 1..].iter().sum::<f64>();
            let start = self.weights.len();
            self.weights.extend_from_slice(&tmp[first..=last]);
            self.rows.push((first as u32, start, last - first + 1));
            self.skipped.push(skipped);
        }
    }

    #[inline]
    fn row(&self, count: u32) -> (u32, &[f64], f64) {
        let (first, start, len) = self.rows[count as usize];
        (
            first,
            &self.weights[start..start + len],
            self.skipped[count as usize],
        )
    }
}

/// Reusable dense buffers for [`transition`]; the active triangle is cleared
/// lazily as it is read, so buffers stay zero between calls.
#[derive(Debug, Default)]
pub struct TransitionScratch {
    after_departures: Vec<f64>,
    after_arrivals: Vec<f64>,
    width: usize,
    departures_pmf: PmfTable,
    arrivals_pmf: PmfTable,
    tmp: Vec<f64>,
}

impl TransitionScratch {
    pub fn new() -> Self {
        Self::default()
    }

    fn ensure(&mut self, m: u32) {
        let width = m as usize + 1;
        if self.width < width {
            self.after_departures = vec![0.0; width * width];
            self.after_arrivals = vec![0.0; width * width];
            self.width = width;
        }
    }
}

/// One exact decoding transition: from the distribution at `u` unresolved
/// users to the distribution at `u - 1`, with `q` the per-cloud-slot
/// probability of entering the ripple.
///
/// States with an empty ripple are absorbed into the failure ledger at stage
/// `u` (decoding stops there). For live states the transition factors into
/// two independent binomial convolutions: ripple departures (the selected
/// slot plus each remaining ripple slot independently with probability
/// `1/u`) applied over the old ripple, then cloud-to-ripple arrivals with
/// probability `q` over the old cloud.
pub fn transition(dist: &StateDistribution, q: f64) -> StateDistribution {
    let mut scratch = TransitionScratch::new();
    transition_with_scratch(dist, q, &mut scratch)
}

pub(crate) fn transition_with_scratch(
    dist: &StateDistribution,
    q: f64,
    scratch: &mut TransitionScratch,
) -> StateDistribution {
    let u = dist.unresolved;
    assert!(u >= 1, "transition requires at least one unresolved user");
    debug_assert!((-1e-9..=1.0 + 1e-9).contains(&q), "q out of range: {q}");
    let q = q.clamp(0.0, 1.0);

    scratch.ensure(dist.m);
    let width = scratch.width;
    let extent = dist.extent();
    let mut failure_mass_by_u = dist.failure_mass_by_u.clone();
    let mut tail_pruned = 0.0;

    // Departures: the selected slot always leaves, each of the other
    // ripple - 1 slots leaves independently with probability 1/u. One pmf
    // row per distinct ripple size serves every state in the stage.
    scratch
        .departures_pmf
        .build(extent.saturating_sub(1), 1.0 / u as f64, &mut scratch.tmp);
    let inter = &mut scratch.after_departures;
    let mut absorbed = 0.0;
    let mut live_in = 0.0;
    for &(state, w) in &dist.mass {
        if state.ripple == 0 {
            absorbed += w;
            continue;
        }
        live_in += w;
        let base = state.cloud as usize * width + state.ripple as usize - 1;
        let (first, row, skipped) = scratch.departures_pmf.row(state.ripple - 1);
        let top = base - first as usize;
        for (i, &pw) in row.iter().enumerate() {
            inter[top - i] += w * pw;
        }
        tail_pruned += w * skipped;
    }
    failure_mass_by_u[u as usize] += absorbed;

    // Arrivals: each cloud slot enters the ripple independently with
    // probability q; one pmf row per distinct cloud size.
    scratch.arrivals_pmf.build(extent, q, &mut scratch.tmp);
    let out = &mut scratch.after_arrivals;
    for cloud in 0..=extent as usize {
        let base = cloud * width;
        let (first, row, skipped) = scratch.arrivals_pmf.row(cloud as u32);
        for ripple in 0..=(extent as usize - cloud) {
            let w = inter[base + ripple];
            if w == 0.0 {
                continue;
            }
            inter[base + ripple] = 0.0;
            // Target (cloud - k, ripple + k): index moves by k*(1 - width).
            let start = (cloud - first as usize) * width + ripple + first as usize;
            for (i, &pw) in row.iter().enumerate() {
                out[start - i * (width - 1)] += w * pw;
            }
            tail_pruned += w * skipped;
        }
    }

    let mut mass = Vec::with_capacity(dist.mass.len());
    let mut live_out = 0.0;
    for cloud in 0..=extent as usize {
        let base = cloud * width;
        for ripple in 0..=(extent as usize - cloud) {
            let w = out[base + ripple];
            if w == 0.0 {
                continue;
            }
            out[base + ripple] = 0.0;
            live_out += w;
            mass.push((
                DecoderState {
                    cloud: cloud as u32,
                    ripple: ripple as u32,
                },
                w,
            ));
        }
    }
    debug_assert!(
        (live_out + tail_pruned - live_in).abs() <= 1e-12 * live_in.max(1.0),
        "transition lost mass: {live_in} -> {live_out}"
    );

    StateDistribution {
        unresolved: u - 1,
        m: dist.m,
        mass,
        failure_mass_by_u,
        pruned_mass: dist.pruned_mass + tail_pruned,
    }
}

/// Options controlling [`analyze`].
#[derive(Debug, Clone, Copy)]
pub struct AnalyzeOptions {
    pub omega_mode: OmegaMode,
    /// States below this probability are dropped and ledgered as pruned.
    pub prune_threshold: f64,
    /// Cloud-membership probability below this raises
    /// [`Error::DegenerateDistribution`] unless the live cloud mass is zero.
    pub denominator_floor: f64,
}

impl Default for AnalyzeOptions {
    fn default() -> Self {
        AnalyzeOptions {
            omega_mode: OmegaMode::Binomial,
            prune_threshold: DEFAULT_PRUNE_THRESHOLD,
            denominator_floor: DEFAULT_DENOMINATOR_FLOOR,
        }
    }
}

/// Outcome of one exact analysis run.
#[derive(Debug, Clone)]
pub struct AnalysisResult {
    pub config: ProtocolConfig,
    /// Packet error rate: probability a user is unresolved when decoding
    /// ends. Pruned mass is counted as failure, making this pessimistic by
    /// at most `pruned_mass`.
    pub per: f64,
    /// Resolved users per slot, `n * (1 - per) / m`.
    pub throughput: f64,
    /// Index `u`: probability that decoding stopped with `u` unresolved.
    pub failure_profile: Vec<f64>,
    /// Absolute gap between 1 and the success + failure + pruned ledger.
    pub conservation_defect: f64,
    pub pruned_mass: f64,
    /// True when the slot-degree model is approximate for this
    /// configuration (Poisson mode, or a two-stage schedule past its
    /// switch point, which the per-slot-independent state machine does not
    /// model exactly).
    pub approximate: bool,
}

/// Slot-degree distribution with the per-stage cloud-exit probabilities
/// precomputed. Lets sweeps over `m` share the stage-probability work, which
/// depends only on the degree distribution.
pub struct PreparedOmega {
    omega: DegreeDistribution,
    /// Index `u` in 1..=n; `Err` carries the degenerate denominator.
    stage_q: Vec<std::result::Result<f64, f64>>,
}

impl PreparedOmega {
    pub fn new(omega: DegreeDistribution, denominator_floor: f64) -> Self {
        let n = omega.n();
        let mut stage_q = vec![Ok(0.0); n as usize + 1];
        for u in 1..=n {
            stage_q[u as usize] =
                match cloud_exit_probability_with_floor(&omega, u, denominator_floor) {
                    Ok(q) => Ok(q),
                    Err(Error::DegenerateDistribution { denominator, .. }) => Err(denominator),
                    Err(_) => unreachable!("cloud_exit_probability only degenerates"),
                };
        }
        PreparedOmega { omega, stage_q }
    }

    pub fn omega(&self) -> &DegreeDistribution {
        &self.omega
    }
}

/// Exact PER and throughput for one configuration via the decoder state
/// recursion: multinomial initial state, one transition per resolved user,
/// absorption of empty-ripple states into the failure ledger.
pub fn analyze(config: &ProtocolConfig, options: &AnalyzeOptions) -> Result<AnalysisResult> {
    config.validate()?;
    let omega = omega_for_config(config, options.omega_mode)?;
    let prepared = PreparedOmega::new(omega, options.denominator_floor);
    analyze_prepared(config, &prepared, options)
}

pub(crate) fn analyze_prepared(
    config: &ProtocolConfig,
    prepared: &PreparedOmega,
    options: &AnalyzeOptions,
) -> Result<AnalysisResult> {
    let n = config.n;
    let m = config.m;
    debug_assert_eq!(prepared.omega.n(), n);

    let mut dist = initial_state(&prepared.omega, m);
    dist.prune(options.prune_threshold);
    let mut scratch = TransitionScratch::new();

    for u in (1..=n).rev() {
        if dist.mass.is_empty() {
            break;
        }
        let q = match prepared.stage_q[u as usize] {
            Ok(q) => q,
            Err(denominator) => {
                // A vanishing cloud-membership probability only matters if
                // live mass actually sits on cloud states; otherwise the
                // arrival step is vacuous.
                if dist.cloud_mass() <= VACUOUS_CLOUD_MASS {
                    0.0
                } else {
                    return Err(Error::DegenerateDistribution {
                        unresolved: u,
                        denominator,
                        floor: options.denominator_floor,
                    });
                }
            }
        };
        dist = transition_with_scratch(&dist, q, &mut scratch);
        dist.prune(options.prune_threshold);
        debug_assert!(
            (dist.ledger_total() - 1.0).abs() < 1e-9,
            "stage ledger off: {}",
            dist.ledger_total()
        );
    }

    let success_mass = dist.live_mass();
    let failure_profile = dist.failure_mass_by_u.clone();
    let pruned_mass = dist.pruned_mass;
    let nf = n as f64;
    let absorbed_per: f64 = failure_profile
        .iter()
        .enumerate()
        .map(|(u, &w)| u as f64 / nf * w)
        .sum();
    // Pruned mass is counted as if fully unresolved: pessimistic.
    let per = (absorbed_per + pruned_mass).clamp(0.0, 1.0);
    let throughput = nf * (1.0 - per) / m as f64;
    let conservation_defect =
        (1.0 - (success_mass + failure_profile.iter().sum::<f64>() + pruned_mass)).abs();

    Ok(AnalysisResult {
        config: *config,
        per,
        throughput,
        failure_profile,
        conservation_defect,
        pruned_mass,
        approximate: options.omega_mode == OmegaMode::Poisson || config.is_effectively_two_stage(),
    })
}
