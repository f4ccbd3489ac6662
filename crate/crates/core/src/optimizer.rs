//! Grid-search optimization of protocol parameters and sweep generation.
//!
//! Both searches are coarse-to-fine grid scans over exact analysis runs:
//! derivative-free, cheap per point, and reproducible. Grid points are
//! independent analyses and evaluate in parallel; results are assembled in
//! grid order so the argmax/argmin scan is deterministic, with ties broken
//! toward smaller parameter values.

use crate::analysis::{analyze, analyze_prepared, AnalyzeOptions, PreparedOmega};
use crate::config::{ProtocolConfig, Schedule};
use crate::degree::{omega_for_config, OmegaMode};
use crate::error::{Error, Result};
use crate::exec::map_indices;
use crate::monte_carlo::{simulate, SimulationResult};

/// One evaluated grid point of a peak-throughput search.
#[derive(Debug, Clone, Copy)]
pub struct TracePoint {
    pub beta: f64,
    pub m: u32,
    pub per: f64,
    pub throughput: f64,
    pub conservation_defect: f64,
    pub pruned_mass: f64,
}

/// Result of a peak-throughput search.
#[derive(Debug, Clone)]
pub struct PeakResult {
    pub n: u32,
    pub beta_max: f64,
    pub t_max: f64,
    pub m_max: u32,
    /// Every evaluated grid point, sorted by (beta, m).
    pub search_trace: Vec<TracePoint>,
    pub worst_conservation_defect: f64,
    pub worst_pruned_mass: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct PeakSearchOptions {
    pub beta_range: (f64, f64),
    /// Coarse grid step in beta.
    pub beta_step: f64,
    /// Refinement step in beta around the coarse incumbent.
    pub beta_refine_step: f64,
    /// Contention period lengths scanned as a fraction of n.
    pub m_ratio_range: (f64, f64),
    /// Coarse grid step in m; refinement always uses step 1.
    pub m_step: u32,
    pub prune_threshold: f64,
}

impl Default for PeakSearchOptions {
    fn default() -> Self {
        PeakSearchOptions {
            beta_range: (1.5, 3.5),
            beta_step: 0.05,
            beta_refine_step: 0.01,
            m_ratio_range: (1.0, 1.8),
            m_step: 2,
            prune_threshold: crate::analysis::DEFAULT_PRUNE_THRESHOLD,
        }
    }
}

/// Find the `beta` whose best-case throughput over the scanned `m` range is
/// largest: a coarse pass over the full grid, then a refinement pass around
/// the incumbent.
pub fn optimize_peak(n: u32, options: &PeakSearchOptions) -> Result<PeakResult> {
    if n == 0 {
        return Err(Error::InvalidConfig("n must be at least 1".into()));
    }
    let (beta_lo, beta_hi) = options.beta_range;
    let (ratio_lo, ratio_hi) = options.m_ratio_range;
    if beta_lo > beta_hi || ratio_lo > ratio_hi {
        return Err(Error::InvalidConfig("empty search grid".into()));
    }
    let m_lo = ((ratio_lo * n as f64).ceil() as u32).max(1);
    let m_hi = ((ratio_hi * n as f64).floor() as u32).max(m_lo);

    let betas = float_grid(beta_lo, beta_hi, options.beta_step, n);
    let ms: Vec<u32> = (m_lo..=m_hi)
        .step_by(options.m_step.max(1) as usize)
        .collect();
    let analyze_options = AnalyzeOptions {
        prune_threshold: options.prune_threshold,
        ..AnalyzeOptions::default()
    };
    let mut trace = evaluate_beta_grid(n, &betas, &ms, &analyze_options)?;

    let incumbent = *argmax_by_throughput(&trace).expect("nonempty grid");
    let fine_betas = float_grid(
        (incumbent.beta - options.beta_step).max(beta_lo),
        (incumbent.beta + options.beta_step).min(beta_hi),
        options.beta_refine_step,
        n,
    );
    let fine_lo = incumbent.m.saturating_sub(options.m_step + 1).max(m_lo);
    let fine_hi = (incumbent.m + options.m_step + 1).min(m_hi);
    let fine_ms: Vec<u32> = (fine_lo..=fine_hi).collect();
    trace.extend(evaluate_beta_grid(
        n,
        &fine_betas,
        &fine_ms,
        &analyze_options,
    )?);

    trace.sort_by(|a, b| a.beta.total_cmp(&b.beta).then(a.m.cmp(&b.m)));
    trace.dedup_by(|a, b| a.beta == b.beta && a.m == b.m);

    let best = *argmax_by_throughput(&trace).expect("nonempty grid");
    let worst_conservation_defect = trace
        .iter()
        .map(|t| t.conservation_defect)
        .fold(0.0, f64::max);
    let worst_pruned_mass = trace.iter().map(|t| t.pruned_mass).fold(0.0, f64::max);
    Ok(PeakResult {
        n,
        beta_max: best.beta,
        t_max: best.throughput,
        m_max: best.m,
        search_trace: trace,
        worst_conservation_defect,
        worst_pruned_mass,
    })
}

/// One evaluated grid point of an error-floor search.
#[derive(Debug, Clone, Copy)]
pub struct FloorTracePoint {
    pub beta2: f64,
    pub per: f64,
    pub throughput: f64,
    pub conservation_defect: f64,
    pub pruned_mass: f64,
}

/// Result of a two-stage error-floor search.
#[derive(Debug, Clone)]
pub struct TwoStageResult {
    pub n: u32,
    pub beta1: f64,
    pub beta2: f64,
    pub m_star: u32,
    pub target_m: u32,
    pub per_at_target: f64,
    pub search_trace: Vec<FloorTracePoint>,
    pub worst_conservation_defect: f64,
    pub worst_pruned_mass: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct FloorSearchOptions {
    pub beta2_range: (f64, f64),
    pub beta2_step: f64,
    pub beta2_refine_step: f64,
    /// The PER is minimized at `m = round(target_ratio * n)`.
    pub target_ratio: f64,
    pub prune_threshold: f64,
}

impl Default for FloorSearchOptions {
    fn default() -> Self {
        FloorSearchOptions {
            beta2_range: (2.0, 8.0),
            beta2_step: 0.05,
            beta2_refine_step: 0.01,
            target_ratio: 2.0,
            prune_threshold: crate::analysis::DEFAULT_PRUNE_THRESHOLD,
        }
    }
}

/// Find the second-stage `beta2` minimizing the PER of the two-stage scheme
/// at `m = round(target_ratio * n)`, with the first stage fixed.
pub fn optimize_floor(
    n: u32,
    beta1: f64,
    m_star: u32,
    options: &FloorSearchOptions,
) -> Result<TwoStageResult> {
    let target_m = ((options.target_ratio * n as f64).round() as u32).max(1);
    let (lo, hi) = options.beta2_range;
    if lo > hi {
        return Err(Error::InvalidConfig("empty beta2 grid".into()));
    }
    let analyze_options = AnalyzeOptions {
        prune_threshold: options.prune_threshold,
        ..AnalyzeOptions::default()
    };

    let eval = |betas: &[f64]| -> Result<Vec<FloorTracePoint>> {
        let results = map_indices(betas.len(), |i| {
            let config = ProtocolConfig::two_stage(n, beta1, betas[i], m_star, target_m)?;
            let r = analyze(&config, &analyze_options)?;
            Ok(FloorTracePoint {
                beta2: betas[i],
                per: r.per,
                throughput: r.throughput,
                conservation_defect: r.conservation_defect,
                pruned_mass: r.pruned_mass,
            })
        });
        results.into_iter().collect()
    };

    let mut trace = eval(&float_grid(lo, hi, options.beta2_step, n))?;
    let incumbent = *argmin_by_per(&trace).ok_or_else(|| {
        Error::InvalidConfig("beta2 grid is empty after clamping to [0, n]".into())
    })?;
    trace.extend(eval(&float_grid(
        (incumbent.beta2 - options.beta2_step).max(lo),
        (incumbent.beta2 + options.beta2_step).min(hi),
        options.beta2_refine_step,
        n,
    ))?);

    trace.sort_by(|a, b| a.beta2.total_cmp(&b.beta2));
    trace.dedup_by(|a, b| a.beta2 == b.beta2);

    let best = *argmin_by_per(&trace).expect("nonempty grid");
    let worst_conservation_defect = trace
        .iter()
        .map(|t| t.conservation_defect)
        .fold(0.0, f64::max);
    let worst_pruned_mass = trace.iter().map(|t| t.pruned_mass).fold(0.0, f64::max);
    Ok(TwoStageResult {
        n,
        beta1,
        beta2: best.beta2,
        m_star,
        target_m,
        per_at_target: best.per,
        search_trace: trace,
        worst_conservation_defect,
        worst_pruned_mass,
    })
}

/// One row of a throughput/PER sweep over `m`.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub config: ProtocolConfig,
    pub m_over_n: f64,
    pub per: f64,
    pub throughput: f64,
    pub conservation_defect: f64,
    pub pruned_mass: f64,
    pub approximate: bool,
    /// Monte Carlo overlay, when requested.
    pub simulation: Option<SimulationResult>,
}

#[derive(Debug, Clone, Copy)]
pub struct SweepOptions {
    pub omega_mode: OmegaMode,
    pub prune_threshold: f64,
    /// Simulate this many contention periods per row as an overlay.
    pub simulate_trials: Option<u32>,
    pub seed: u64,
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions {
            omega_mode: OmegaMode::Binomial,
            prune_threshold: crate::analysis::DEFAULT_PRUNE_THRESHOLD,
            simulate_trials: None,
            seed: 1,
        }
    }
}

/// Evaluate `base` at each contention period length in `ms`.
pub fn sweep(base: &ProtocolConfig, ms: &[u32], options: &SweepOptions) -> Result<Vec<SweepRow>> {
    base.validate()?;
    let analyze_options = AnalyzeOptions {
        omega_mode: options.omega_mode,
        prune_threshold: options.prune_threshold,
        ..AnalyzeOptions::default()
    };

    // For a single-beta schedule the degree distribution (and with it the
    // per-stage machinery) is shared by every m.
    let shared = match base.schedule {
        Schedule::Single { .. } => Some(PreparedOmega::new(
            omega_for_config(base, options.omega_mode)?,
            analyze_options.denominator_floor,
        )),
        Schedule::TwoStage { .. } => None,
    };

    let rows = map_indices(ms.len(), |i| -> Result<SweepRow> {
        let config = base.with_m(ms[i]);
        let analysis = match &shared {
            Some(prepared) => analyze_prepared(&config, prepared, &analyze_options)?,
            None => analyze(&config, &analyze_options)?,
        };
        let simulation = match options.simulate_trials {
            Some(trials) => {
                // Decorrelate rows while keeping the whole sweep a pure
                // function of the master seed.
                let row_seed = options
                    .seed
                    .wrapping_add((config.m as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
                Some(simulate(&config, trials, row_seed)?)
            }
            None => None,
        };
        Ok(SweepRow {
            config,
            m_over_n: config.m as f64 / config.n as f64,
            per: analysis.per,
            throughput: analysis.throughput,
            conservation_defect: analysis.conservation_defect,
            pruned_mass: analysis.pruned_mass,
            approximate: analysis.approximate,
            simulation,
        })
    });
    rows.into_iter().collect()
}

/// Evaluate the full (beta, m) product grid; one prepared degree
/// distribution per beta, rows flattened in grid order.
fn evaluate_beta_grid(
    n: u32,
    betas: &[f64],
    ms: &[u32],
    options: &AnalyzeOptions,
) -> Result<Vec<TracePoint>> {
    let per_beta = map_indices(betas.len(), |i| -> Result<Vec<TracePoint>> {
        let beta = betas[i];
        let base = ProtocolConfig::single(n, beta, ms[0])?;
        let prepared = PreparedOmega::new(
            omega_for_config(&base, options.omega_mode)?,
            options.denominator_floor,
        );
        ms.iter()
            .map(|&m| {
                let r = analyze_prepared(&base.with_m(m), &prepared, options)?;
                Ok(TracePoint {
                    beta,
                    m,
                    per: r.per,
                    throughput: r.throughput,
                    conservation_defect: r.conservation_defect,
                    pruned_mass: r.pruned_mass,
                })
            })
            .collect()
    });
    let mut trace = Vec::with_capacity(betas.len() * ms.len());
    for rows in per_beta {
        trace.extend(rows?);
    }
    Ok(trace)
}

/// Inclusive float grid clamped to the feasible beta range `[0, n]`.
fn float_grid(lo: f64, hi: f64, step: f64, n: u32) -> Vec<f64> {
    debug_assert!(step > 0.0);
    let count = ((hi - lo) / step + 1e-9).floor() as usize;
    (0..=count)
        .map(|i| lo + i as f64 * step)
        .filter(|&b| (0.0..=n as f64).contains(&b))
        .collect()
}

fn argmax_by_throughput(trace: &[TracePoint]) -> Option<&TracePoint> {
    let mut best: Option<&TracePoint> = None;
    for point in trace {
        if best.is_none_or(|b| point.throughput > b.throughput) {
            best = Some(point);
        }
    }
    best
}

fn argmin_by_per(trace: &[FloorTracePoint]) -> Option<&FloorTracePoint> {
    let mut best: Option<&FloorTracePoint> = None;
    for point in trace {
        if best.is_none_or(|b| point.per < b.per) {
            best = Some(point);
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::enumerate_exact;

    #[test]
    fn float_grid_is_inclusive_and_clamped() {
        let grid = float_grid(1.5, 3.5, 0.5, 100);
        assert_eq!(grid, vec![1.5, 2.0, 2.5, 3.0, 3.5]);
        let clamped = float_grid(1.5, 3.5, 0.5, 2);
        assert_eq!(clamped, vec![1.5, 2.0]);
    }

    #[test]
    fn peak_result_is_internally_consistent() {
        let options = PeakSearchOptions {
            beta_range: (1.6, 2.4),
            beta_step: 0.2,
            beta_refine_step: 0.1,
            m_ratio_range: (1.0, 1.6),
            m_step: 2,
            ..PeakSearchOptions::default()
        };
        let result = optimize_peak(8, &options).unwrap();
        let trace_max = result
            .search_trace
            .iter()
            .map(|t| t.throughput)
            .fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(result.t_max, trace_max);
        assert!(result.search_trace.iter().any(|t| t.beta == result.beta_max
            && t.m == result.m_max
            && t.throughput == trace_max));
        assert!(result.worst_conservation_defect < 1e-9);
        assert!(result.worst_pruned_mass < 1e-9);
    }

    #[test]
    fn refining_the_grid_never_loses_throughput() {
        let coarse = optimize_peak(
            8,
            &PeakSearchOptions {
                beta_range: (1.6, 2.8),
                beta_step: 0.4,
                beta_refine_step: 0.2,
                m_ratio_range: (1.0, 1.5),
                m_step: 4,
                ..PeakSearchOptions::default()
            },
        )
        .unwrap();
        let fine = optimize_peak(
            8,
            &PeakSearchOptions {
                beta_range: (1.6, 2.8),
                beta_step: 0.2,
                beta_refine_step: 0.1,
                m_ratio_range: (1.0, 1.5),
                m_step: 2,
                ..PeakSearchOptions::default()
            },
        )
        .unwrap();
        assert!(fine.t_max >= coarse.t_max - 1e-12);
    }

    #[test]
    fn floor_result_is_internally_consistent() {
        let options = FloorSearchOptions {
            beta2_range: (2.0, 4.0),
            beta2_step: 0.5,
            beta2_refine_step: 0.25,
            target_ratio: 2.0,
            ..FloorSearchOptions::default()
        };
        let result = optimize_floor(8, 2.0, 10, &options).unwrap();
        assert_eq!(result.target_m, 16);
        let trace_min = result
            .search_trace
            .iter()
            .map(|t| t.per)
            .fold(f64::INFINITY, f64::min);
        assert_eq!(result.per_at_target, trace_min);
        assert!(result
            .search_trace
            .iter()
            .any(|t| t.beta2 == result.beta2 && t.per == trace_min));
    }

    #[test]
    fn sweep_matches_oracle_on_tiny_instances() {
        let base = ProtocolConfig::single(3, 1.5, 1).unwrap();
        let ms: Vec<u32> = (1..=5).collect();
        let rows = sweep(&base, &ms, &SweepOptions::default()).unwrap();
        for row in &rows {
            let oracle = enumerate_exact(&row.config).unwrap();
            assert!(
                (row.per - oracle.exact_per).abs() < 1e-12,
                "m={}: dp {} oracle {}",
                row.config.m,
                row.per,
                oracle.exact_per
            );
            assert!((row.throughput - oracle.exact_throughput).abs() < 1e-12);
        }
    }

    #[test]
    fn sweep_with_beta_zero_is_flat() {
        let base = ProtocolConfig::single(5, 0.0, 1).unwrap();
        let rows = sweep(&base, &[1, 3, 5, 8], &SweepOptions::default()).unwrap();
        for row in &rows {
            assert_eq!(row.per, 1.0);
            assert_eq!(row.throughput, 0.0);
        }
    }

    #[test]
    fn sweep_overlay_is_reproducible() {
        let base = ProtocolConfig::single(10, 1.5, 1).unwrap();
        let options = SweepOptions {
            simulate_trials: Some(200),
            seed: 5,
            ..SweepOptions::default()
        };
        let a = sweep(&base, &[8, 12], &options).unwrap();
        let b = sweep(&base, &[8, 12], &options).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.simulation, y.simulation);
        }
        // Different rows draw from different streams.
        assert_ne!(
            a[0].simulation.unwrap().mean_per.to_bits(),
            a[1].simulation.unwrap().mean_per.to_bits()
        );
    }
}
