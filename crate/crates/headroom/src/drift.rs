//! Experiment 2: drift trajectories and the noise-sensitivity sweep.
//!
//! Uncertainty and constraint load follow linear trends with independent
//! per-step Gaussian noise about the trend (not a random walk), clipped at a
//! small positive floor. The headroom ratio is tracked along the trajectory;
//! per-step collapse probability comes from the fitted logistic curve, with
//! observed events realized as Bernoulli draws against their own uniform
//! substream.
//!
//! The clipping floor is also the origin of the high-noise artifact this
//! module exists to demonstrate: when a noise draw throws both components to
//! the floor, the ratio spikes by orders of magnitude, inflating the mean and
//! standard deviation long before the interpretable statistics move.

use rayon::prelude::*;

use crate::control::ControllerConfig;
use crate::model::{clip_environment, LogisticModel};
use crate::rng::{RandomSource, StreamId};

/// Stream-namespace tag for the noise sweep.
pub const SWEEP_EXPERIMENT_TAG: u16 = 2;

/// Variable tags within one run's stream family.
const VAR_U_NOISE: u16 = 0;
const VAR_K_NOISE: u16 = 1;
const VAR_EVENT: u16 = 2;

/// Configuration of one drift process.
#[derive(Debug, Clone, PartialEq)]
pub struct DriftConfig {
    /// Initial uncertainty and its per-step trend increment.
    pub u0: f64,
    pub delta_u: f64,
    /// Initial constraint load and its per-step trend increment.
    pub k0: f64,
    pub delta_k: f64,
    /// Standard deviation of the per-step noise about each trend.
    pub noise_sd: f64,
    /// Number of steps per run.
    pub horizon_t: u32,
    /// Capacity at step zero (constant unless a controller adjusts it).
    pub initial_c: f64,
    /// Positive floor applied to both components after noise.
    pub clip_floor: f64,
    /// Independent runs aggregated per condition.
    pub n_runs: u32,
    /// Master seed for substream derivation.
    pub master_seed: u64,
    /// Collapse curve applied to the ratio at every step.
    pub collapse_model: LogisticModel,
    /// Stream namespace, so different experiments (and deliberately unpaired
    /// arms) never share draws.
    pub experiment_tag: u16,
}

impl Default for DriftConfig {
    fn default() -> Self {
        DriftConfig {
            u0: 0.55,
            delta_u: 0.0025,
            k0: 0.35,
            delta_k: 0.0015,
            noise_sd: 0.0,
            horizon_t: 120,
            initial_c: 1.2,
            clip_floor: 0.001,
            n_runs: 400,
            master_seed: crate::DEFAULT_MASTER_SEED,
            collapse_model: crate::default_collapse_model(),
            experiment_tag: SWEEP_EXPERIMENT_TAG,
        }
    }
}

/// One simulated run, stored column-wise.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub run_index: u32,
    pub u: Vec<f64>,
    pub k: Vec<f64>,
    pub c: Vec<f64>,
    pub ihr: Vec<f64>,
    pub collapse_prob: Vec<f64>,
    pub collapse_event: Vec<bool>,
}

/// Pooled statistics over every step of every run in one condition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegimeStats {
    pub mean_ihr: f64,
    /// Population standard deviation over all observations.
    pub ihr_sd: f64,
    /// Mean of the per-step collapse probabilities.
    pub collapse_rate: f64,
    /// Fraction of steps with ratio strictly below the critical threshold.
    pub frac_below_star: f64,
}

/// Simulates one run, optionally under capacity control.
///
/// At step 0 the capacity is `initial_c` in every arm; from step 1 on, a
/// controller (when present) observes the previous step's ratio and adjusts
/// capacity before the environment advances — strictly causal, no same-step
/// lookahead.
///
/// Pure in `(config, controller, run_index)`: the run's three substreams are
/// derived from the config's master seed and namespace tag, so paired arms
/// that share a namespace see identical environmental draws.
pub fn simulate_run(
    config: &DriftConfig,
    controller: Option<&ControllerConfig>,
    run_index: u32,
) -> Trajectory {
    let t_len = config.horizon_t as usize;
    let mut u_noise = RandomSource::derive(
        config.master_seed,
        StreamId::new(config.experiment_tag, run_index, VAR_U_NOISE),
    );
    let mut k_noise = RandomSource::derive(
        config.master_seed,
        StreamId::new(config.experiment_tag, run_index, VAR_K_NOISE),
    );
    let mut events = RandomSource::derive(
        config.master_seed,
        StreamId::new(config.experiment_tag, run_index, VAR_EVENT),
    );

    let mut out = Trajectory {
        run_index,
        u: Vec::with_capacity(t_len),
        k: Vec::with_capacity(t_len),
        c: Vec::with_capacity(t_len),
        ihr: Vec::with_capacity(t_len),
        collapse_prob: Vec::with_capacity(t_len),
        collapse_event: Vec::with_capacity(t_len),
    };

    let mut c = config.initial_c;
    let mut prev_ihr = None;
    for t in 0..config.horizon_t {
        if let (Some(ctrl), Some(observed)) = (controller, prev_ihr) {
            c = ctrl.control_step(observed, c);
        }

        let eps_u = u_noise
            .next_normal(0.0, config.noise_sd)
            .expect("config validation guarantees noise_sd >= 0");
        let eps_k = k_noise
            .next_normal(0.0, config.noise_sd)
            .expect("config validation guarantees noise_sd >= 0");
        let step = f64::from(t);
        let (u, k) = clip_environment(
            config.u0 + config.delta_u * step + eps_u,
            config.k0 + config.delta_k * step + eps_k,
            config.clip_floor,
        );

        let ihr = c / (u + k);
        let prob = config.collapse_model.collapse_prob(ihr);
        let event = events
            .next_uniform(0.0, 1.0)
            .expect("unit interval is a valid range")
            < prob;

        out.u.push(u);
        out.k.push(k);
        out.c.push(c);
        out.ihr.push(ihr);
        out.collapse_prob.push(prob);
        out.collapse_event.push(event);
        prev_ihr = Some(ihr);
    }
    out
}

/// Pools every step of every trajectory into one set of regime statistics.
///
/// Uses the population standard deviation; at tens of thousands of pooled
/// observations the sample correction is immaterial, but the convention must
/// be fixed for byte-stable reports.
pub fn summarize_regime(trajectories: &[Trajectory], ihr_star: f64) -> RegimeStats {
    let mut n = 0usize;
    let mut sum = 0.0;
    let mut prob_sum = 0.0;
    let mut below = 0usize;
    for tr in trajectories {
        n += tr.ihr.len();
        for &v in &tr.ihr {
            sum += v;
            if v < ihr_star {
                below += 1;
            }
        }
        prob_sum += tr.collapse_prob.iter().sum::<f64>();
    }
    if n == 0 {
        return RegimeStats {
            mean_ihr: 0.0,
            ihr_sd: 0.0,
            collapse_rate: 0.0,
            frac_below_star: 0.0,
        };
    }
    let count = n as f64;
    let mean = sum / count;
    let ss: f64 = trajectories
        .iter()
        .flat_map(|tr| tr.ihr.iter())
        .map(|&v| (v - mean) * (v - mean))
        .sum();
    RegimeStats {
        mean_ihr: mean,
        ihr_sd: (ss / count).sqrt(),
        collapse_rate: prob_sum / count,
        frac_below_star: below as f64 / count,
    }
}

/// Fraction of observed collapse events across all steps of all runs; used by
/// self-consistency checks against `collapse_rate`.
pub fn observed_event_rate(trajectories: &[Trajectory]) -> f64 {
    let n: usize = trajectories.iter().map(|tr| tr.collapse_event.len()).sum();
    if n == 0 {
        return 0.0;
    }
    let events: usize = trajectories
        .iter()
        .map(|tr| tr.collapse_event.iter().filter(|&&e| e).count())
        .sum();
    events as f64 / n as f64
}

/// The default sweep grid: 13 evenly spaced noise levels, 0.000 to 0.300.
pub fn default_sigma_grid() -> Vec<f64> {
    (0..13).map(|i| f64::from(i) * 0.025).collect()
}

/// Runs the noise-sensitivity sweep: for each noise level, `n_runs`
/// trajectories on substreams keyed by (level, run), pooled into one
/// [`RegimeStats`] per level.
///
/// Every (level, run) pair gets its own stream family — the flat index
/// `level * n_runs + run` is the stream's trial key — so levels are
/// independent and the whole sweep parallelizes without ordering effects.
pub fn run_noise_sweep(base: &DriftConfig, sigmas: &[f64]) -> Vec<(f64, RegimeStats)> {
    let ihr_star = base.collapse_model.critical_threshold();
    let n_runs = base.n_runs;
    let jobs: Vec<(usize, u32)> = (0..sigmas.len())
        .flat_map(|level| (0..n_runs).map(move |run| (level, run)))
        .collect();
    let trajectories: Vec<Trajectory> = jobs
        .into_par_iter()
        .map(|(level, run)| {
            let config = DriftConfig {
                noise_sd: sigmas[level],
                ..base.clone()
            };
            simulate_run(&config, None, level as u32 * n_runs + run)
        })
        .collect();

    sigmas
        .iter()
        .enumerate()
        .map(|(level, &sigma)| {
            let start = level * n_runs as usize;
            let end = start + n_runs as usize;
            (sigma, summarize_regime(&trajectories[start..end], ihr_star))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn zero_noise_trajectory_matches_closed_form() {
        let config = DriftConfig::default();
        let run = simulate_run(&config, None, 0);
        for t in 0..config.horizon_t {
            let step = f64::from(t);
            // Direct evaluation of the trend composed with the ratio; with
            // zero noise the draws contribute exactly 0.0, so equality is
            // bitwise, not approximate.
            let u = (config.u0 + config.delta_u * step).max(config.clip_floor);
            let k = (config.k0 + config.delta_k * step).max(config.clip_floor);
            let ihr = config.initial_c / (u + k);
            let i = t as usize;
            assert_eq!(run.u[i], u, "u at t = {t}");
            assert_eq!(run.k[i], k, "k at t = {t}");
            assert_eq!(run.ihr[i], ihr, "ihr at t = {t}");
        }
    }

    #[test]
    fn zero_noise_runs_are_identical() {
        let config = DriftConfig::default();
        let a = simulate_run(&config, None, 0);
        let b = simulate_run(&config, None, 399);
        assert_eq!(a.u, b.u);
        assert_eq!(a.k, b.k);
        assert_eq!(a.ihr, b.ihr);
        // Events still differ: each run has its own event stream.
        assert_eq!(a.collapse_prob, b.collapse_prob);
    }

    #[test]
    fn zero_noise_sweep_is_invariant_to_run_count() {
        let one = DriftConfig {
            n_runs: 1,
            ..DriftConfig::default()
        };
        let many = DriftConfig {
            n_runs: 400,
            ..DriftConfig::default()
        };
        let star = one.collapse_model.critical_threshold();
        let a = summarize_regime(&[simulate_run(&one, None, 0)], star);
        let runs: Vec<Trajectory> = (0..400).map(|r| simulate_run(&many, None, r)).collect();
        let b = summarize_regime(&runs, star);
        // The 400 runs are copies of the single run, so the statistics agree
        // up to summation order (400x more additions in the pooled mean).
        let close = |x: f64, y: f64| (x - y).abs() <= 1e-13 * x.abs().max(y.abs()).max(1.0);
        assert!(close(a.mean_ihr, b.mean_ihr));
        assert!(close(a.ihr_sd, b.ihr_sd));
        assert!(close(a.collapse_rate, b.collapse_rate));
        // The below-threshold count scales exactly, so this one is bitwise.
        assert_eq!(a.frac_below_star, b.frac_below_star);
    }

    #[test]
    fn simulate_run_is_deterministic() {
        let config = DriftConfig {
            noise_sd: 0.1,
            ..DriftConfig::default()
        };
        let a = simulate_run(&config, None, 7);
        let b = simulate_run(&config, None, 7);
        assert_eq!(a, b);
    }

    #[test]
    fn constant_trajectory_summary_is_degenerate() {
        // A flat ratio of 2 never dips below the critical threshold and has
        // zero spread.
        let tr = Trajectory {
            run_index: 0,
            u: vec![0.25; 50],
            k: vec![0.25; 50],
            c: vec![1.0; 50],
            ihr: vec![2.0; 50],
            collapse_prob: vec![0.01; 50],
            collapse_event: vec![false; 50],
        };
        let stats = summarize_regime(&[tr], 1.194);
        assert_eq!(stats.frac_below_star, 0.0);
        assert_eq!(stats.ihr_sd, 0.0);
        assert_eq!(stats.mean_ihr, 2.0);
    }

    #[test]
    fn raising_the_threshold_never_lowers_frac_below() {
        let config = DriftConfig {
            noise_sd: 0.05,
            n_runs: 20,
            ..DriftConfig::default()
        };
        let runs: Vec<Trajectory> = (0..20).map(|r| simulate_run(&config, None, r)).collect();
        let mut prev = 0.0;
        for star in [0.5, 0.9, 1.1, 1.194, 1.3, 2.0, 10.0] {
            let frac = summarize_regime(&runs, star).frac_below_star;
            assert!(frac >= prev, "frac dropped when star rose to {star}");
            prev = frac;
        }
    }

    #[test]
    fn every_ratio_is_positive_and_probabilities_stay_open() {
        // The artifact regime: noise heavy enough to slam both components
        // into the clipping floor. Positivity must survive it.
        let config = DriftConfig {
            noise_sd: 0.3,
            n_runs: 40,
            ..DriftConfig::default()
        };
        for r in 0..40 {
            let run = simulate_run(&config, None, r);
            for (&ihr, &p) in run.ihr.iter().zip(&run.collapse_prob) {
                assert!(ihr > 0.0);
                assert!(p > 0.0 && p < 1.0, "p = {p}");
            }
        }
    }

    #[test]
    fn observed_events_track_collapse_probabilities() {
        // Bernoulli self-consistency within three binomial standard errors.
        let config = DriftConfig {
            noise_sd: 0.1,
            ..DriftConfig::default()
        };
        let runs: Vec<Trajectory> = (0..config.n_runs)
            .map(|r| simulate_run(&config, None, r))
            .collect();
        let star = config.collapse_model.critical_threshold();
        let stats = summarize_regime(&runs, star);
        let observed = observed_event_rate(&runs);
        let n = (config.n_runs * config.horizon_t) as f64;
        let se = (stats.collapse_rate * (1.0 - stats.collapse_rate) / n).sqrt();
        assert!(
            (observed - stats.collapse_rate).abs() < 3.0 * se,
            "observed {observed} vs rate {} (se {se})",
            stats.collapse_rate
        );
    }

    #[test]
    fn sweep_levels_use_disjoint_streams() {
        // Same run index at different levels must not replay the same noise.
        let base = DriftConfig {
            n_runs: 3,
            ..DriftConfig::default()
        };
        let sweep = run_noise_sweep(&base, &[0.05, 0.05]);
        // Identical sigma at two levels: statistics differ because the
        // substreams differ.
        assert_ne!(sweep[0].1.mean_ihr, sweep[1].1.mean_ihr);
    }

    #[test]
    fn default_grid_is_thirteen_even_steps() {
        let grid = default_sigma_grid();
        assert_eq!(grid.len(), 13);
        assert_eq!(grid[0], 0.0);
        assert!((grid[12] - 0.300).abs() < 1e-12);
        for pair in grid.windows(2) {
            assert!((pair[1] - pair[0] - 0.025).abs() < 1e-12);
        }
    }

    proptest! {
        /// Components never fall below the clipping floor, whatever the noise.
        #[test]
        fn clipping_floor_holds_under_any_noise(
            sd in 0.0..0.5f64,
            run in 0u32..20,
        ) {
            let config = DriftConfig {
                noise_sd: sd,
                horizon_t: 40,
                ..DriftConfig::default()
            };
            let tr = simulate_run(&config, None, run);
            for (&u, &k) in tr.u.iter().zip(&tr.k) {
                prop_assert!(u >= config.clip_floor);
                prop_assert!(k >= config.clip_floor);
            }
        }
    }
}
