//! Post-processing of sweep outcomes: smoothed success scores and simple
//! link-quality estimates.

use crate::channel::ChannelConfig;
use crate::error::{Error, Result};
use crate::protocol::IntensityTable;

/// Centered moving average of a boolean success record, clipped at the ends.
///
/// For an odd `window` the average at index `i` runs over
/// `i - (window-1)/2 ..= i + (window-1)/2`. For an even `window` the symmetric
/// span `i - window/2 ..= i + window/2` is used with the two endpoints counted
/// at half weight, which keeps the effective width equal to `window` while
/// preserving symmetry: reversing the input reverses the output exactly. Near
/// the boundaries the span is clipped to the available samples and the
/// weights renormalized.
///
/// An empty record or a zero window is rejected.
pub fn performance_score(successes: &[bool], window: usize) -> Result<Vec<f64>> {
    if successes.is_empty() {
        return Err(Error::InvalidInput("success record is empty".into()));
    }
    if window == 0 {
        return Err(Error::InvalidConfig(
            "score window must be at least 1".into(),
        ));
    }
    let n = successes.len();
    let odd = window % 2 == 1;
    let halfwidth = if odd { (window - 1) / 2 } else { window / 2 };
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let lo = i.saturating_sub(halfwidth);
        let hi = (i + halfwidth).min(n - 1);
        let mut num = 0.0;
        let mut den = 0.0;
        for (j, &hit) in successes.iter().enumerate().take(hi + 1).skip(lo) {
            // Half weight applies to an endpoint only when that side of the
            // span survived the clipping; a clipped edge keeps full weight so
            // boundary scores stay plain averages.
            let unclipped_lo = i >= halfwidth && j == i - halfwidth;
            let unclipped_hi = j == i + halfwidth && hi == i + halfwidth;
            let w = if !odd && (unclipped_lo || unclipped_hi) {
                0.5
            } else {
                1.0
            };
            num += w * hit as u8 as f64;
            den += w;
        }
        out.push(num / den);
    }
    Ok(out)
}

/// A sweep outcome grouped per grid point: the raw success record and its
/// smoothed score, aligned with the parameter values.
#[derive(Debug, Clone)]
pub struct PerformanceSeries {
    param_values: Vec<f64>,
    successes: Vec<bool>,
    scores: Vec<f64>,
    window: usize,
}

impl PerformanceSeries {
    /// Bundles per-trial parameter values and successes with their smoothed
    /// score (computed with [`performance_score`]). All three run over the
    /// trials in sweep order, so `param_values` repeats each grid value once
    /// per trial.
    pub fn new(param_values: Vec<f64>, successes: Vec<bool>, window: usize) -> Result<Self> {
        if param_values.len() != successes.len() {
            return Err(Error::InvalidInput(format!(
                "{} parameter values but {} successes",
                param_values.len(),
                successes.len()
            )));
        }
        let scores = performance_score(&successes, window)?;
        Ok(PerformanceSeries {
            param_values,
            successes,
            scores,
            window,
        })
    }

    pub fn param_values(&self) -> &[f64] {
        &self.param_values
    }

    pub fn successes(&self) -> &[bool] {
        &self.successes
    }

    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    pub fn window(&self) -> usize {
        self.window
    }
}

/// Fraction of the secure key budget spent on synchronization: the sync
/// pulses themselves plus the detector dead time they trigger,
/// `p_sync * (1 + p_detect_sync * dead_bins)`.
pub fn key_rate_penalty(p_sync: f64, p_detect_sync: f64, dead_bins: f64) -> f64 {
    p_sync + p_sync * p_detect_sync * dead_bins
}

/// Background-induced error floor: half the background clicks land in the
/// wrong basis, so `qber = 0.5 * p_bg / (p_det + p_bg)` where `p_det` is the
/// intensity-averaged photon detection probability and `p_bg` the per-bin
/// background probability.
///
/// A link with neither detections nor background has no defined error rate.
pub fn qber_estimate(channel: &ChannelConfig, table: &IntensityTable) -> Result<f64> {
    channel.validate()?;
    let eta = channel.eta();
    let p_bg = channel.background_prob();
    let p_det: f64 = table
        .entries()
        .iter()
        .map(|e| e.prob * (1.0 - (-e.mu * eta).exp()))
        .sum();
    let denom = p_det + p_bg;
    if denom == 0.0 {
        return Err(Error::UndefinedQber(
            "no detections and no background: error rate undefined".into(),
        ));
    }
    Ok(0.5 * p_bg / denom)
}

/// Number of clicks surviving in a detection record.
pub fn detection_count(clicks: &crate::channel::ClickSequence) -> u64 {
    clicks.clicks().iter().filter(|&&c| c).count() as u64
}
