//! Experiment orchestration and bit-stable artifact emission.
//!
//! `run_suite` runs the selected experiments and writes their tables, JSON
//! summaries, and plot-data files into the output directory. Identical
//! configuration and seed produce byte-identical files, whatever the worker
//! count — the emission layer renders every number itself (6 significant
//! digits in CSV and plot data, full precision in JSON) and never iterates a
//! nondeterministic container.

use std::error::Error;
use std::fmt;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde_json::json;

use crate::config::ExperimentSuiteConfig;
use crate::control::run_comparison;
use crate::drift::run_noise_sweep;
use crate::fit::{fit_logistic, FitResult};
use crate::study::{collapse_fraction, quantile_bins, run_experiment1, BinSummary, TrialRecord};

/// Which experiments a suite invocation runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Selection {
    pub exp1: bool,
    pub exp2: bool,
    pub exp3: bool,
}

impl Selection {
    pub fn all() -> Self {
        Selection {
            exp1: true,
            exp2: true,
            exp3: true,
        }
    }

    pub fn none() -> Self {
        Selection {
            exp1: false,
            exp2: false,
            exp3: false,
        }
    }

    pub fn only_exp1() -> Self {
        Selection {
            exp1: true,
            ..Selection::none()
        }
    }

    pub fn only_exp2() -> Self {
        Selection {
            exp2: true,
            ..Selection::none()
        }
    }

    pub fn only_exp3() -> Self {
        Selection {
            exp3: true,
            ..Selection::none()
        }
    }

    fn is_empty(self) -> bool {
        !(self.exp1 || self.exp2 || self.exp3)
    }
}

/// Errors from running the suite, partitioned by exit class: numeric/model
/// failures versus I/O failures.
#[derive(Debug)]
pub enum SuiteError {
    /// A computation failed (degenerate fit, empty binning, malformed plot
    /// series) — the experiment context is in the message.
    Numeric(String),
    /// Reading or writing an artifact failed.
    File { path: PathBuf, source: io::Error },
    /// Writing the human-readable summary stream failed.
    Output(io::Error),
}

impl SuiteError {
    /// Process exit code the error class maps to.
    pub fn exit_code(&self) -> i32 {
        match self {
            SuiteError::Numeric(_) => 2,
            SuiteError::File { .. } | SuiteError::Output(_) => 3,
        }
    }
}

impl fmt::Display for SuiteError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SuiteError::Numeric(msg) => write!(f, "{msg}"),
            SuiteError::File { path, source } => {
                write!(f, "io error at {}: {source}", path.display())
            }
            SuiteError::Output(e) => write!(f, "failed to write summary: {e}"),
        }
    }
}

impl Error for SuiteError {
    fn source(&self) -> Option<&(dyn Error + 'static)> {
        match self {
            SuiteError::Numeric(_) => None,
            SuiteError::File { source, .. } => Some(source),
            SuiteError::Output(e) => Some(e),
        }
    }
}

/// Errors from [`emit_plot_data`].
#[derive(Debug)]
pub enum PlotDataError {
    /// No series, or a series without points.
    EmptySeries,
    /// A series' x values must be strictly increasing.
    NonMonotonicX {
        series: String,
        index: usize,
    },
    Io {
        path: PathBuf,
        source: io::Error,
    },
}

impl fmt::Display for PlotDataError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PlotDataError::EmptySeries => write!(f, "plot data requires a non-empty series"),
            PlotDataError::NonMonotonicX { series, index } => write!(
                f,
                "plot series '{series}' x values must be strictly increasing (violated at point {index})"
            ),
            PlotDataError::Io { path, source } => {
                write!(f, "io error at {}: {source}", path.display())
            }
        }
    }
}

impl Error for PlotDataError {}

impl From<PlotDataError> for SuiteError {
    fn from(e: PlotDataError) -> Self {
        match e {
            PlotDataError::Io { path, source } => SuiteError::File { path, source },
            other => SuiteError::Numeric(other.to_string()),
        }
    }
}

/// One named series of (x, y) points, with optional `name = value`
/// annotation lines (vertical markers and the like).
#[derive(Debug, Clone, PartialEq)]
pub struct PlotSeries {
    pub name: String,
    pub annotations: Vec<(String, f64)>,
    pub points: Vec<(f64, f64)>,
}

impl PlotSeries {
    pub fn new(name: impl Into<String>, points: Vec<(f64, f64)>) -> Self {
        PlotSeries {
            name: name.into(),
            annotations: Vec::new(),
            points,
        }
    }

    pub fn with_annotation(mut self, name: impl Into<String>, value: f64) -> Self {
        self.annotations.push((name.into(), value));
        self
    }
}

/// Renders a value with 6 significant digits: plain decimal notation in
/// `[1e-4, 1e6)`, scientific outside, bare `0` for zero.
pub fn format_sig6(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    let a = x.abs();
    if (1e-4..1e6).contains(&a) {
        let exponent = a.log10().floor() as i32;
        let decimals = (5 - exponent).max(0) as usize;
        format!("{x:.decimals$}")
    } else {
        format!("{x:.5e}")
    }
}

/// Writes header-prefixed, tab-separated plot data: one block per series,
/// blank-line separated, `#` comment lines carrying the series name and any
/// annotations. X values must be strictly increasing within each series.
pub fn emit_plot_data(series: &[PlotSeries], path: &Path) -> Result<(), PlotDataError> {
    if series.is_empty() || series.iter().any(|s| s.points.is_empty()) {
        return Err(PlotDataError::EmptySeries);
    }
    for s in series {
        for (i, pair) in s.points.windows(2).enumerate() {
            if pair[1].0 <= pair[0].0 {
                return Err(PlotDataError::NonMonotonicX {
                    series: s.name.clone(),
                    index: i + 1,
                });
            }
        }
    }

    let mut text = String::new();
    for (i, s) in series.iter().enumerate() {
        if i > 0 {
            text.push('\n');
        }
        text.push_str(&format!("# {}\n", s.name));
        for (name, value) in &s.annotations {
            text.push_str(&format!("# {name} = {}\n", format_sig6(*value)));
        }
        for &(x, y) in &s.points {
            text.push_str(&format!("{}\t{}\n", format_sig6(x), format_sig6(y)));
        }
    }
    fs::write(path, text).map_err(|source| PlotDataError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn write_file(path: &Path, contents: &str) -> Result<(), SuiteError> {
    fs::write(path, contents).map_err(|source| SuiteError::File {
        path: path.to_path_buf(),
        source,
    })
}

fn trials_csv(trials: &[TrialRecord]) -> String {
    let mut out = String::from("trial_index,u,k,ihr,accuracy,collapsed\n");
    for t in trials {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            t.trial_index,
            format_sig6(t.u),
            format_sig6(t.k),
            format_sig6(t.ihr),
            format_sig6(t.accuracy),
            t.collapsed
        ));
    }
    out
}

fn bins_csv(bins: &[BinSummary]) -> String {
    let mut out = String::from("lower,upper,mean_ihr,collapse_prob,count\n");
    for b in bins {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            format_sig6(b.lower),
            format_sig6(b.upper),
            format_sig6(b.mean_ihr),
            format_sig6(b.collapse_prob),
            b.count
        ));
    }
    out
}

fn fit_json(fit: &FitResult) -> String {
    let value = json!({
        "beta0": fit.model.beta0(),
        "beta1": fit.model.beta1(),
        "ihr_star": fit.ihr_star,
        "log_likelihood": fit.log_likelihood,
        "iterations": fit.iterations,
        "converged": fit.converged,
    });
    let mut text = serde_json::to_string_pretty(&value).expect("json value always serializes");
    text.push('\n');
    text
}

/// Runs the selected experiments, writes artifacts into the configured
/// output directory, and prints one human-readable summary block per
/// experiment to `out`.
pub fn run_suite(
    config: &ExperimentSuiteConfig,
    selection: Selection,
    out: &mut dyn Write,
) -> Result<(), SuiteError> {
    if selection.is_empty() {
        writeln!(out, "nothing selected").map_err(SuiteError::Output)?;
        return Ok(());
    }

    let dir = &config.output_dir;
    fs::create_dir_all(dir).map_err(|source| SuiteError::File {
        path: dir.clone(),
        source,
    })?;

    if selection.exp1 {
        run_exp1(config, out)?;
    }
    if selection.exp2 {
        run_exp2(config, out)?;
    }
    if selection.exp3 {
        run_exp3(config, out)?;
    }
    Ok(())
}

fn run_exp1(config: &ExperimentSuiteConfig, out: &mut dyn Write) -> Result<(), SuiteError> {
    let dir = &config.output_dir;
    let format = config.format;

    let trials = run_experiment1(&config.exp1);
    let fraction = collapse_fraction(&trials);
    let bins = quantile_bins(&trials, config.exp1.n_bins)
        .map_err(|e| SuiteError::Numeric(format!("experiment 1 binning: {e}")))?;
    let outcomes: Vec<(f64, bool)> = trials.iter().map(|t| (t.ihr, t.collapsed)).collect();
    let fit = fit_logistic(&outcomes)
        .map_err(|e| SuiteError::Numeric(format!("experiment 1 collapse-curve fit: {e}")))?;

    if format.writes_csv() {
        write_file(&dir.join("exp1_trials.csv"), &trials_csv(&trials))?;
        write_file(&dir.join("exp1_bins.csv"), &bins_csv(&bins))?;
    }
    if format.writes_json() {
        write_file(&dir.join("exp1_fit.json"), &fit_json(&fit))?;
    }

    // Figure data: the empirical collapse curve by bin, and the fitted
    // sigmoid with its critical-threshold marker.
    let bin_points: Vec<(f64, f64)> = bins.iter().map(|b| (b.mean_ihr, b.collapse_prob)).collect();
    emit_plot_data(
        &[PlotSeries::new(
            "empirical collapse probability by mean bin ihr",
            bin_points,
        )],
        &dir.join("fig1.dat"),
    )?;
    let curve: Vec<(f64, f64)> = (0..=420)
        .map(|i| {
            let ihr = 0.3 + 0.01 * f64::from(i);
            (ihr, fit.model.collapse_prob(ihr))
        })
        .collect();
    emit_plot_data(
        &[PlotSeries::new("fitted collapse curve", curve)
            .with_annotation("ihr_star", fit.ihr_star)],
        &dir.join("fig2.dat"),
    )?;

    writeln!(out, "experiment 1: monte carlo collapse study")
        .and_then(|_| writeln!(out, "  trials             {}", trials.len()))
        .and_then(|_| writeln!(out, "  collapse fraction  {}", format_sig6(fraction)))
        .and_then(|_| {
            writeln!(
                out,
                "  fitted curve       beta0 = {}, beta1 = {}",
                format_sig6(fit.model.beta0()),
                format_sig6(fit.model.beta1())
            )
        })
        .and_then(|_| writeln!(out, "  critical threshold {}", format_sig6(fit.ihr_star)))
        .and_then(|_| {
            writeln!(
                out,
                "  fit                ll = {}, iterations = {}, converged = {}",
                format_sig6(fit.log_likelihood),
                fit.iterations,
                fit.converged
            )
        })
        .map_err(SuiteError::Output)?;
    Ok(())
}

fn run_exp2(config: &ExperimentSuiteConfig, out: &mut dyn Write) -> Result<(), SuiteError> {
    let dir = &config.output_dir;
    let sweep = run_noise_sweep(&config.exp2.drift, &config.exp2.sigmas);

    if config.format.writes_csv() {
        let mut csv = String::from("sigma,mean_ihr,ihr_sd,collapse_rate,frac_below_star\n");
        for (sigma, stats) in &sweep {
            csv.push_str(&format!(
                "{},{},{},{},{}\n",
                format_sig6(*sigma),
                format_sig6(stats.mean_ihr),
                format_sig6(stats.ihr_sd),
                format_sig6(stats.collapse_rate),
                format_sig6(stats.frac_below_star)
            ));
        }
        write_file(&dir.join("exp2_sweep.csv"), &csv)?;
    }

    type StatPick = fn(&crate::drift::RegimeStats) -> f64;
    let picks: [(&str, StatPick); 4] = [
        ("mean_ihr", |s| s.mean_ihr),
        ("ihr_sd", |s| s.ihr_sd),
        ("collapse_rate", |s| s.collapse_rate),
        ("frac_below_star", |s| s.frac_below_star),
    ];
    let series: Vec<PlotSeries> = picks
        .into_iter()
        .map(|(name, pick)| {
            PlotSeries::new(
                name,
                sweep
                    .iter()
                    .map(|(sigma, stats)| (*sigma, pick(stats)))
                    .collect(),
            )
        })
        .collect();
    emit_plot_data(&series, &dir.join("fig3.dat"))?;

    writeln!(out, "experiment 2: noise sensitivity sweep")
        .and_then(|_| {
            writeln!(
                out,
                "  {:>8} {:>10} {:>10} {:>14} {:>16}",
                "sigma", "mean_ihr", "ihr_sd", "collapse_rate", "frac_below_star"
            )
        })
        .map_err(SuiteError::Output)?;
    for (sigma, stats) in &sweep {
        writeln!(
            out,
            "  {:>8} {:>10} {:>10} {:>14} {:>16}",
            format_sig6(*sigma),
            format_sig6(stats.mean_ihr),
            format_sig6(stats.ihr_sd),
            format_sig6(stats.collapse_rate),
            format_sig6(stats.frac_below_star)
        )
        .map_err(SuiteError::Output)?;
    }
    Ok(())
}

fn run_exp3(config: &ExperimentSuiteConfig, out: &mut dyn Write) -> Result<(), SuiteError> {
    let dir = &config.output_dir;
    let outcome = run_comparison(
        &config.exp3.drift,
        &config.exp3.controller,
        config.exp3.n_runs,
    );
    let r = outcome.report;

    if config.format.writes_json() {
        let mut text =
            serde_json::to_string_pretty(&r).expect("comparison report always serializes");
        text.push('\n');
        write_file(&dir.join("exp3_comparison.json"), &text)?;
    }

    writeln!(
        out,
        "experiment 3: capacity control comparison ({} paired runs)",
        r.n_runs
    )
    .and_then(|_| {
        writeln!(
            out,
            "  {:<24} {:>14} {:>12}",
            "", "uncontrolled", "controlled"
        )
    })
    .and_then(|_| {
        writeln!(
            out,
            "  {:<24} {:>14} {:>12}",
            "mean ihr",
            format_sig6(r.mean_ihr_uncontrolled),
            format_sig6(r.mean_ihr_controlled)
        )
    })
    .and_then(|_| {
        writeln!(
            out,
            "  {:<24} {:>14} {:>12}",
            "ihr sd",
            format_sig6(r.ihr_sd_uncontrolled),
            format_sig6(r.ihr_sd_controlled)
        )
    })
    .and_then(|_| {
        writeln!(
            out,
            "  {:<24} {:>14} {:>12}",
            "mean collapse prob",
            format_sig6(r.mean_collapse_prob_uncontrolled),
            format_sig6(r.mean_collapse_prob_controlled)
        )
    })
    .and_then(|_| {
        writeln!(
            out,
            "  {:<24} {:>14} {:>12}",
            "observed collapse rate",
            format_sig6(r.observed_collapse_rate_uncontrolled),
            format_sig6(r.observed_collapse_rate_controlled)
        )
    })
    .map_err(SuiteError::Output)?;
    Ok(())
}
