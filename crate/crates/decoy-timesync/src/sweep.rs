//! Seeded Monte-Carlo trials and parameter sweeps with deterministic,
//! schedule-independent output.
//!
//! Every trial's randomness comes from a seed derived from
//! `(base_seed, grid_stream, trial_index)`, so the rows a sweep produces are
//! byte-identical no matter how many worker threads execute it.

use crate::analysis::{detection_count, performance_score, PerformanceSeries};
use crate::channel::{apply_dead_time, apply_frequency_offset, simulate_detections};
use crate::config::{RunConfig, SweepSpec};
use crate::correlation::{
    cross_correlate, frequency_search, recover_offset, CorrelationSeries, SyncEstimate,
};
use crate::error::{Error, Result};
use crate::protocol::{generate_states, make_template};
use crate::rng::{derive_seed, seeded_rng};
use rand::Rng;
use std::io::Write;
use std::path::Path;

/// Transforms beyond this many points are refused unless explicitly allowed;
/// keeps a stray sweep config from exhausting desktop memory.
pub const DESK_SCALE_LIMIT_POINTS: u64 = 1 << 28;

/// One trial's outcome, one output row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    /// Value of the swept parameter (the block size for single-point runs).
    pub param_value: f64,
    pub trial_index: u64,
    /// The derived per-trial seed actually used.
    pub seed: u64,
    pub true_offset_bins: i64,
    pub recovered_offset_bins: i64,
    /// Exact recovery: recovered equals true.
    pub success: bool,
    pub sigma_multiple: f64,
    /// Clicks in the record after dead time and drift.
    pub detections: u64,
    /// Windowed success score, filled across the whole sweep after all
    /// trials complete; equals `success` as 0/1 for a lone trial.
    pub score: f64,
}

/// A row plus the full estimate and correlation series behind it.
#[derive(Debug, Clone)]
pub struct TrialOutput {
    pub row: SweepRow,
    pub estimate: SyncEstimate,
    pub correlation: CorrelationSeries,
}

/// Runs the full pipeline once: draw states, form the template, simulate the
/// channel (plus dead time and drift when configured), recover the offset
/// (searching the frequency grid when one is set), and compare with truth.
///
/// Rerunning with the same `(config, trial_index)` reproduces the row bit for
/// bit.
pub fn run_trial(cfg: &RunConfig, trial_index: u64) -> Result<SweepRow> {
    Ok(run_trial_detailed(cfg, trial_index)?.row)
}

/// [`run_trial`] keeping the estimate and correlation series for inspection.
pub fn run_trial_detailed(cfg: &RunConfig, trial_index: u64) -> Result<TrialOutput> {
    cfg.validate()?;
    let table = cfg.intensity_table()?;
    let channel = cfg.channel()?;
    let trial_seed = derive_seed(cfg.base_seed, &[cfg.grid_stream, trial_index]);

    let states = generate_states(&table, cfg.n_alice, derive_seed(trial_seed, &[0]))?;
    let template = make_template(&states, cfg.effective_template_mode(), cfg.zero_mean);

    let d = cfg.d_max_bins as i64;
    let true_offset = match cfg.true_offset {
        Some(offset) => offset,
        None => seeded_rng(derive_seed(trial_seed, &[1])).random_range(-d..=d),
    };

    let mut clicks = simulate_detections(
        &states,
        &channel,
        true_offset,
        cfg.d_max_bins,
        derive_seed(trial_seed, &[2]),
    )?;
    if channel.dead_bins > 0 {
        clicks = apply_dead_time(&clicks, channel.dead_bins);
    }
    if channel.delta_ppm != 0.0 {
        clicks = apply_frequency_offset(&clicks, channel.delta_ppm);
    }

    let (mut estimate, correlation) = if cfg.delta_grid_ppm.is_empty() {
        let corr = cross_correlate(&template, &clicks)?;
        (recover_offset(&corr), corr)
    } else {
        frequency_search(&template, &clicks, &cfg.delta_grid_ppm)?
    };
    estimate.success = estimate.offset_bins == true_offset;

    let row = SweepRow {
        param_value: cfg.n_alice as f64,
        trial_index,
        seed: trial_seed,
        true_offset_bins: true_offset,
        recovered_offset_bins: estimate.offset_bins,
        success: estimate.success,
        sigma_multiple: estimate.sigma_multiple,
        detections: detection_count(&clicks),
        score: estimate.success as u8 as f64,
    };
    Ok(TrialOutput {
        row,
        estimate,
        correlation,
    })
}

/// A completed sweep: rows in `(grid point, trial)` order, the windowed score
/// over the flattened trial sequence, and each point's plain success mean.
#[derive(Debug, Clone)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    pub performance: PerformanceSeries,
    pub per_point_score: Vec<f64>,
}

/// Runs every `(grid point, trial)` combination of `spec`.
///
/// `threads` controls execution only, never results: 0 uses all cores, 1 runs
/// inline, any other count uses a dedicated pool of that size. Each point's
/// transform must fit the desk-scale limit unless `allow_large` is set on the
/// sweep.
pub fn run_sweep(spec: &SweepSpec, threads: usize) -> Result<SweepResult> {
    let mut point_configs = Vec::with_capacity(spec.grid().len());
    for index in 0..spec.grid().len() {
        let cfg = spec.config_for_point(index)?;
        let points = cfg.n_alice as u64 + 2 * cfg.d_max_bins as u64;
        if points > DESK_SCALE_LIMIT_POINTS && !spec.allow_large() {
            return Err(Error::InvalidConfig(format!(
                "grid point {index} needs {points} transform points, over the desk-scale limit \
                 of {DESK_SCALE_LIMIT_POINTS}; rerun with --allow-large if intended"
            )));
        }
        point_configs.push(cfg);
    }

    let trials = spec.trials_per_point();
    let jobs: Vec<(usize, u64)> = (0..point_configs.len())
        .flat_map(|p| (0..trials).map(move |t| (p, t)))
        .collect();

    let run_job = |&(p, t): &(usize, u64)| -> Result<SweepRow> {
        let cfg = &point_configs[p];
        let mut row = run_trial(cfg, t)?;
        row.param_value = spec.grid()[p];
        Ok(row)
    };

    let mut rows: Vec<SweepRow> = if threads == 1 {
        jobs.iter().map(run_job).collect::<Result<_>>()?
    } else {
        use rayon::prelude::*;
        let work = || jobs.par_iter().map(run_job).collect::<Result<Vec<_>>>();
        if threads == 0 {
            work()?
        } else {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .map_err(|e| Error::InvalidConfig(format!("cannot build thread pool: {e}")))?;
            pool.install(work)?
        }
    };

    let successes: Vec<bool> = rows.iter().map(|r| r.success).collect();
    let scores = performance_score(&successes, spec.fixed().score_window)?;
    for (row, &score) in rows.iter_mut().zip(&scores) {
        row.score = score;
    }
    let param_values: Vec<f64> = rows.iter().map(|r| r.param_value).collect();
    let performance = PerformanceSeries::new(param_values, successes, spec.fixed().score_window)?;

    let per_point_score = rows
        .chunks(trials as usize)
        .map(|chunk| chunk.iter().filter(|r| r.success).count() as f64 / chunk.len() as f64)
        .collect();

    Ok(SweepResult {
        rows,
        performance,
        per_point_score,
    })
}

/// Output encodings for result tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

/// CSV column header; JSON objects use the same names as keys.
pub const CSV_HEADER: &str =
    "param,trial,seed,true_offset,recovered_offset,success,sigma,detections,score";

/// Writes rows to `path` (see [`write_results`]).
pub fn emit_results(rows: &[SweepRow], format: OutputFormat, path: impl AsRef<Path>) -> Result<()> {
    let file = std::fs::File::create(path)?;
    let mut writer = std::io::BufWriter::new(file);
    write_results(rows, format, &mut writer)?;
    writer.flush()?;
    Ok(())
}

/// Writes rows as CSV (header + one line per row) or as a JSON array of
/// objects with the same field names. Floats carry 17 significant digits so
/// they parse back to the identical bit pattern; JSON renders non-finite
/// sigma as null. Refuses an empty table.
pub fn write_results<W: Write>(rows: &[SweepRow], format: OutputFormat, out: &mut W) -> Result<()> {
    if rows.is_empty() {
        return Err(Error::InvalidInput("no rows to emit".into()));
    }
    match format {
        OutputFormat::Csv => {
            writeln!(out, "{CSV_HEADER}")?;
            for r in rows {
                writeln!(
                    out,
                    "{:.16e},{},{},{},{},{},{:.16e},{},{:.16e}",
                    r.param_value,
                    r.trial_index,
                    r.seed,
                    r.true_offset_bins,
                    r.recovered_offset_bins,
                    r.success as u8,
                    r.sigma_multiple,
                    r.detections,
                    r.score
                )?;
            }
        }
        OutputFormat::Json => {
            let float = |v: f64| {
                if v.is_finite() {
                    format!("{v:.16e}")
                } else {
                    "null".to_string()
                }
            };
            writeln!(out, "[")?;
            for (i, r) in rows.iter().enumerate() {
                let sep = if i + 1 == rows.len() { "" } else { "," };
                writeln!(
                    out,
                    "  {{\"param\":{},\"trial\":{},\"seed\":{},\"true_offset\":{},\
                     \"recovered_offset\":{},\"success\":{},\"sigma\":{},\"detections\":{},\
                     \"score\":{}}}{sep}",
                    float(r.param_value),
                    r.trial_index,
                    r.seed,
                    r.true_offset_bins,
                    r.recovered_offset_bins,
                    r.success,
                    float(r.sigma_multiple),
                    r.detections,
                    float(r.score)
                )?;
            }
            writeln!(out, "]")?;
        }
    }
    Ok(())
}
