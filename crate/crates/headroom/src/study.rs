//! Experiment 1: the Monte Carlo collapse study.
//!
//! Samples stress configurations uniformly over a box of (uncertainty,
//! constraint) values at fixed capacity, evaluates the degradation model with
//! accuracy noise, and records which trials collapse. The trials are then
//! grouped into equal-count quantile bins by headroom ratio, which is the
//! empirical collapse curve the logistic fit consumes.
//!
//! Every trial draws from its own substreams, so results are identical
//! regardless of execution order or worker count.

use std::error::Error;
use std::fmt;

use rayon::prelude::*;

use crate::model::{DegradationParams, SystemState};
use crate::rng::{RandomSource, StreamId};

/// Stream-namespace tag for this experiment.
pub const STUDY_EXPERIMENT_TAG: u16 = 1;

/// Variable tags within one trial's stream family.
const VAR_U: u16 = 0;
const VAR_K: u16 = 1;
const VAR_ACC_NOISE: u16 = 2;

/// Configuration of the collapse study.
#[derive(Debug, Clone, PartialEq)]
pub struct StudyConfig {
    /// Number of Monte Carlo trials.
    pub n_trials: u32,
    /// Uncertainty sampling range `[u_lo, u_hi)`.
    pub u_lo: f64,
    pub u_hi: f64,
    /// Constraint sampling range `[k_lo, k_hi)`.
    pub k_lo: f64,
    pub k_hi: f64,
    /// Fixed capacity for every trial.
    pub capacity_c: f64,
    /// Degradation model evaluated per trial.
    pub degradation: DegradationParams,
    /// Number of quantile bins for the empirical collapse curve.
    pub n_bins: u32,
    /// Master seed for substream derivation.
    pub master_seed: u64,
}

impl Default for StudyConfig {
    fn default() -> Self {
        StudyConfig {
            n_trials: 400,
            u_lo: 0.10,
            u_hi: 1.80,
            k_lo: 0.05,
            k_hi: 0.90,
            capacity_c: 1.0,
            degradation: DegradationParams::default(),
            n_bins: 8,
            master_seed: crate::DEFAULT_MASTER_SEED,
        }
    }
}

/// One completed trial.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialRecord {
    pub trial_index: u32,
    pub u: f64,
    pub k: f64,
    pub ihr: f64,
    pub accuracy: f64,
    pub collapsed: bool,
}

/// One quantile bin of the empirical collapse curve.
///
/// `lower` is exclusive and `upper` inclusive, with `upper` the maximum ratio
/// inside the group. The first bin's `lower` is its own minimum ratio (the
/// exclusive label is vacuous there). Membership is positional — trials are
/// sorted by ratio and split into contiguous groups — not an interval test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BinSummary {
    pub lower: f64,
    pub upper: f64,
    pub mean_ihr: f64,
    pub collapse_prob: f64,
    pub count: u32,
}

/// Error from binning an empty trial list.
#[derive(Debug, Clone, PartialEq)]
pub struct EmptyTrialsError;

impl fmt::Display for EmptyTrialsError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "cannot bin an empty trial list")
    }
}

impl Error for EmptyTrialsError {}

/// Runs a single trial: three substream draws (uncertainty, constraint,
/// accuracy noise), one degradation evaluation.
///
/// Pure in `(config, trial_index)` — calling twice yields identical records.
pub fn sample_trial(config: &StudyConfig, trial_index: u32) -> TrialRecord {
    let mut u_src = RandomSource::derive(
        config.master_seed,
        StreamId::new(STUDY_EXPERIMENT_TAG, trial_index, VAR_U),
    );
    let mut k_src = RandomSource::derive(
        config.master_seed,
        StreamId::new(STUDY_EXPERIMENT_TAG, trial_index, VAR_K),
    );
    let mut noise_src = RandomSource::derive(
        config.master_seed,
        StreamId::new(STUDY_EXPERIMENT_TAG, trial_index, VAR_ACC_NOISE),
    );

    let u = u_src
        .next_uniform(config.u_lo, config.u_hi)
        .expect("config validation guarantees u_lo < u_hi");
    let k = k_src
        .next_uniform(config.k_lo, config.k_hi)
        .expect("config validation guarantees k_lo < k_hi");
    let eps = noise_src
        .next_normal(0.0, config.degradation.accuracy_noise_sd)
        .expect("config validation guarantees accuracy_noise_sd >= 0");

    let state = SystemState::new(config.capacity_c, u, k);
    let ihr = state
        .ihr()
        .expect("sampling ranges keep u + k strictly positive");
    let accuracy = config.degradation.degraded_accuracy(&state, eps);
    TrialRecord {
        trial_index,
        u,
        k,
        ihr,
        accuracy,
        collapsed: config.degradation.is_collapse(accuracy),
    }
}

/// Runs the full study; records come back in trial order regardless of the
/// parallel schedule. A zero-trial config yields an empty list.
pub fn run_experiment1(config: &StudyConfig) -> Vec<TrialRecord> {
    (0..config.n_trials)
        .into_par_iter()
        .map(|i| sample_trial(config, i))
        .collect()
}

/// Fraction of trials that collapsed; 0 for an empty list.
pub fn collapse_fraction(trials: &[TrialRecord]) -> f64 {
    if trials.is_empty() {
        return 0.0;
    }
    trials.iter().filter(|t| t.collapsed).count() as f64 / trials.len() as f64
}

/// Sorts trials by headroom ratio and splits them into `n_bins` contiguous
/// equal-count groups.
///
/// With `n = q * n_bins + r`, the first `r` groups take `q + 1` trials.
/// Exact-ratio ties keep trial-index order, so the grouping is deterministic.
/// A bin count exceeding the trial count is clamped down so every group stays
/// non-empty (config validation keeps real runs away from that edge).
pub fn quantile_bins(
    trials: &[TrialRecord],
    n_bins: u32,
) -> Result<Vec<BinSummary>, EmptyTrialsError> {
    if trials.is_empty() {
        return Err(EmptyTrialsError);
    }
    let n_bins = (n_bins as usize).min(trials.len()).max(1);

    let mut sorted: Vec<&TrialRecord> = trials.iter().collect();
    sorted.sort_by(|a, b| {
        a.ihr
            .total_cmp(&b.ihr)
            .then_with(|| a.trial_index.cmp(&b.trial_index))
    });

    let q = sorted.len() / n_bins;
    let r = sorted.len() % n_bins;
    let mut bins = Vec::with_capacity(n_bins);
    let mut start = 0usize;
    let mut prev_upper = None;
    for b in 0..n_bins {
        let size = if b < r { q + 1 } else { q };
        let group = &sorted[start..start + size];
        start += size;

        let mean_ihr = group.iter().map(|t| t.ihr).sum::<f64>() / group.len() as f64;
        let collapsed = group.iter().filter(|t| t.collapsed).count();
        let upper = group.last().expect("groups are non-empty").ihr;
        let lower = prev_upper.unwrap_or_else(|| group.first().expect("non-empty").ihr);
        prev_upper = Some(upper);
        bins.push(BinSummary {
            lower,
            upper,
            mean_ihr,
            collapse_prob: collapsed as f64 / group.len() as f64,
            count: group.len() as u32,
        });
    }
    Ok(bins)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn trials_stay_inside_sampling_ranges() {
        let config = StudyConfig::default();
        for t in run_experiment1(&config) {
            assert!((config.u_lo..config.u_hi).contains(&t.u), "u = {}", t.u);
            assert!((config.k_lo..config.k_hi).contains(&t.k), "k = {}", t.k);
        }
    }

    #[test]
    fn trial_ratio_respects_range_bounds() {
        // Ratio bounds forced by the sampling box: (1/2.70, 1/0.15].
        let config = StudyConfig::default();
        for t in run_experiment1(&config) {
            assert!(t.ihr > 1.0 / 2.70 && t.ihr <= 1.0 / 0.15, "ihr = {}", t.ihr);
        }
    }

    #[test]
    fn sample_trial_is_deterministic() {
        let config = StudyConfig::default();
        for i in [0, 17, 399] {
            assert_eq!(sample_trial(&config, i), sample_trial(&config, i));
        }
    }

    #[test]
    fn zero_noise_trial_composes_core_arithmetic() {
        // With zero accuracy noise and a box pinned to one point, the trial
        // reproduces the deterministic reference accuracy.
        let mut config = StudyConfig {
            u_lo: 0.55,
            u_hi: 0.55 + 1e-12,
            k_lo: 0.35,
            k_hi: 0.35 + 1e-12,
            ..StudyConfig::default()
        };
        config.degradation.accuracy_noise_sd = 0.0;
        let t = sample_trial(&config, 0);
        assert!((t.accuracy - 0.7221).abs() < 1e-9);
        assert!(t.collapsed);
    }

    #[test]
    fn run_returns_records_in_trial_order() {
        let config = StudyConfig {
            n_trials: 250,
            ..StudyConfig::default()
        };
        let trials = run_experiment1(&config);
        assert_eq!(trials.len(), 250);
        for (i, t) in trials.iter().enumerate() {
            assert_eq!(t.trial_index, i as u32);
        }
    }

    #[test]
    fn zero_trials_yield_an_empty_list() {
        let config = StudyConfig {
            n_trials: 0,
            ..StudyConfig::default()
        };
        assert!(run_experiment1(&config).is_empty());
        assert_eq!(collapse_fraction(&[]), 0.0);
    }

    #[test]
    fn rerun_reproduces_the_full_trial_list() {
        let config = StudyConfig::default();
        assert_eq!(run_experiment1(&config), run_experiment1(&config));
    }

    #[test]
    fn different_seeds_give_different_trials() {
        let a = run_experiment1(&StudyConfig::default());
        let b = run_experiment1(&StudyConfig {
            master_seed: 1,
            ..StudyConfig::default()
        });
        assert_ne!(a, b);
    }

    #[test]
    fn binning_rejects_empty_input() {
        assert_eq!(quantile_bins(&[], 8), Err(EmptyTrialsError));
    }

    #[test]
    fn default_binning_gives_eight_groups_of_fifty() {
        let trials = run_experiment1(&StudyConfig::default());
        let bins = quantile_bins(&trials, 8).unwrap();
        assert_eq!(bins.len(), 8);
        assert!(bins.iter().all(|b| b.count == 50));
    }

    #[test]
    fn remainder_rule_front_loads_the_extra_trials() {
        let trials: Vec<TrialRecord> = (0..10)
            .map(|i| TrialRecord {
                trial_index: i,
                u: 0.5,
                k: 0.25,
                ihr: f64::from(i + 1) * 0.3,
                accuracy: 0.9,
                collapsed: false,
            })
            .collect();
        let bins = quantile_bins(&trials, 3).unwrap();
        let sizes: Vec<u32> = bins.iter().map(|b| b.count).collect();
        assert_eq!(sizes, vec![4, 3, 3]);
    }

    #[test]
    fn bin_edges_chain_and_uppers_are_group_maxima() {
        let trials = run_experiment1(&StudyConfig::default());
        let bins = quantile_bins(&trials, 8).unwrap();
        for pair in bins.windows(2) {
            assert_eq!(pair[1].lower, pair[0].upper);
            assert!(pair[1].mean_ihr > pair[0].mean_ihr);
        }
        for b in &bins {
            assert!(b.mean_ihr <= b.upper && b.lower <= b.mean_ihr);
        }
    }

    #[test]
    fn exact_ratio_ties_split_deterministically() {
        // Twelve trials, all the same ratio: groups must follow trial order.
        let trials: Vec<TrialRecord> = (0..12)
            .map(|i| TrialRecord {
                trial_index: i,
                u: 0.5,
                k: 0.5,
                ihr: 1.0,
                accuracy: 0.9,
                collapsed: i < 6,
            })
            .collect();
        let bins = quantile_bins(&trials, 2).unwrap();
        assert_eq!(bins[0].collapse_prob, 1.0);
        assert_eq!(bins[1].collapse_prob, 0.0);
    }

    proptest! {
        /// Bin counts always partition the trial list, whatever the sizes.
        #[test]
        fn bin_counts_partition_trials(n in 1u32..200, n_bins in 1u32..20) {
            let trials: Vec<TrialRecord> = (0..n)
                .map(|i| {
                    // Scramble the ratio order so sorting actually works.
                    let ihr = f64::from((i * 7919) % n + 1);
                    TrialRecord {
                        trial_index: i,
                        u: 1.0,
                        k: 1.0,
                        ihr,
                        accuracy: 0.8,
                        collapsed: i % 3 == 0,
                    }
                })
                .collect();
            let bins = quantile_bins(&trials, n_bins).unwrap();
            let total: u32 = bins.iter().map(|b| b.count).sum();
            prop_assert_eq!(total, n);
            // Group sizes differ by at most one and larger groups come first.
            let sizes: Vec<u32> = bins.iter().map(|b| b.count).collect();
            let max = *sizes.iter().max().unwrap();
            let min = *sizes.iter().min().unwrap();
            prop_assert!(max - min <= 1);
            let first_small = sizes.iter().position(|&s| s == min).unwrap_or(0);
            prop_assert!(sizes[first_small..].iter().all(|&s| s == min) || max == min);
        }

        /// Collapse fractions per bin are always valid probabilities.
        #[test]
        fn bin_probabilities_are_probabilities(seed in 0u64..50) {
            let trials = run_experiment1(&StudyConfig {
                n_trials: 120,
                master_seed: seed,
                ..StudyConfig::default()
            });
            for b in quantile_bins(&trials, 8).unwrap() {
                prop_assert!((0.0..=1.0).contains(&b.collapse_prob));
            }
        }
    }
}
