//! Deployment budget arithmetic: how long a correlation block a fixed-size
//! transform engine can afford, how much clock drift smears the pattern, and
//! how deep a lossy link can run before drift tracking starves.

use crate::channel::{click_prob_unchecked, ChannelConfig};
use crate::error::{Error, Result};
use crate::protocol::IntensityTable;

/// Capabilities of the correlation engine and source clock.
#[derive(Debug, Clone, Copy)]
pub struct HardwareBudget {
    /// Largest transform the engine supports, in points.
    pub max_transform_points: u64,
    /// Pulse repetition rate in Hz; one pattern bin per pulse.
    pub rep_rate_hz: f64,
}

impl Default for HardwareBudget {
    /// A 2^27-point engine driven at 2.5 GHz.
    fn default() -> Self {
        HardwareBudget {
            max_transform_points: 1 << 27,
            rep_rate_hz: 2.5e9,
        }
    }
}

impl HardwareBudget {
    pub fn new(max_transform_points: u64, rep_rate_hz: f64) -> Result<Self> {
        let budget = HardwareBudget {
            max_transform_points,
            rep_rate_hz,
        };
        budget.validate()?;
        Ok(budget)
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_transform_points < 2 {
            return Err(Error::InvalidConfig(format!(
                "max transform points must be at least 2 (got {})",
                self.max_transform_points
            )));
        }
        if !self.rep_rate_hz.is_finite() || self.rep_rate_hz <= 0.0 {
            return Err(Error::InvalidConfig(format!(
                "repetition rate must be positive (got {})",
                self.rep_rate_hz
            )));
        }
        Ok(())
    }
}

/// Largest searchable offset for a pattern of `n_alice` bins: the engine must
/// hold the pattern plus `2 * d_max` padding bins, so
/// `d_max = (max_transform_points - n_alice) / 2` (floored). Returns the limit
/// in bins and in seconds at the budget's repetition rate.
///
/// A pattern longer than the engine itself is infeasible.
pub fn max_offset_for_transform(n_alice: u64, budget: &HardwareBudget) -> Result<(u64, f64)> {
    budget.validate()?;
    if n_alice > budget.max_transform_points {
        return Err(Error::Infeasible(format!(
            "pattern of {n_alice} bins exceeds the {}-point transform budget",
            budget.max_transform_points
        )));
    }
    let d_max_bins = (budget.max_transform_points - n_alice) / 2;
    let d_max_seconds = d_max_bins as f64 / budget.rep_rate_hz;
    Ok((d_max_bins, d_max_seconds))
}

/// Points the correlation engine must hold to search `n_alice` pattern bins
/// over offsets up to `d_max_bins`: `n_alice + 2 * d_max_bins`.
pub fn required_transform_length(n_alice: u64, d_max_bins: u64) -> u64 {
    n_alice + 2 * d_max_bins
}

/// Pattern smear accumulated over one block when the clocks disagree by
/// `delta_ppm` parts per million: `|delta_ppm| * 1e-6 * n_alice` bins.
/// A smear near one bin is where plain (unsearched) correlation starts to
/// degrade.
pub fn syntonization_smear(delta_ppm: f64, n_alice: u64) -> f64 {
    delta_ppm.abs() * 1e-6 * n_alice as f64
}

/// Whether a link can keep re-locking onto the drifting arrival time, and the
/// deepest loss at which it still can.
///
/// While the clocks disagree by `delta_ppm`, the arrival time slides by one
/// bin every `t_bin / (delta_ppm * 1e-6)` seconds; the link stays trackable
/// when at least `min_detections` clicks arrive within that slide, i.e.
///
/// ```text
/// detections_per_bin_shift(loss) =
///     (sum_i prob_i * click_probability(mu_i, loss)) * rep_rate * t_bin / (delta_ppm * 1e-6)
/// ```
///
/// with `rep_rate = 1 / t_bin`. Returns `(feasible, loss_limit_db)`:
/// `feasible` evaluates the channel's own `loss_db`, and `loss_limit_db` is
/// the loss where the rate crosses `min_detections`, found by bisection on
/// `[0, 100]` dB to 0.1 dB. A link starved even at 0 dB reports 0.0; one
/// comfortable at 100 dB reports 100.0.
pub fn arrival_lock_limit(
    table: &IntensityTable,
    channel: &ChannelConfig,
    delta_ppm: f64,
    min_detections: f64,
) -> Result<(bool, f64)> {
    channel.validate()?;
    if !delta_ppm.is_finite() || delta_ppm <= 0.0 {
        return Err(Error::InvalidConfig(format!(
            "drift must be positive to define a bin-shift interval (got {delta_ppm} ppm)"
        )));
    }
    if !min_detections.is_finite() || min_detections < 0.0 {
        return Err(Error::InvalidConfig(format!(
            "detection threshold must be non-negative (got {min_detections})"
        )));
    }
    let bg = channel.background_prob();
    let rep_rate = channel.rep_rate_hz();
    let per_bin_shift = |loss_db: f64| -> f64 {
        let eta = 10f64.powf(-loss_db / 10.0);
        let click_rate: f64 = table
            .entries()
            .iter()
            .map(|e| e.prob * click_prob_unchecked(e.mu, eta, bg))
            .sum();
        click_rate * rep_rate * channel.t_bin_s / (delta_ppm * 1e-6)
    };

    let feasible = per_bin_shift(channel.loss_db) >= min_detections;

    let (mut lo, mut hi) = (0.0f64, 100.0f64);
    let loss_limit_db = if per_bin_shift(lo) < min_detections {
        0.0
    } else if per_bin_shift(hi) >= min_detections {
        100.0
    } else {
        // Rate decreases with loss: keep lo on the feasible side.
        while hi - lo > 0.1 {
            let mid = 0.5 * (lo + hi);
            if per_bin_shift(mid) >= min_detections {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    };
    Ok((feasible, loss_limit_db))
}

/// Receiver memory needed to hold one block plus the bins that keep arriving
/// while the classical channel round-trips:
/// `(n_alice + latency_s * rep_rate) * bytes_per_bin`.
pub fn buffer_bytes(
    n_alice: u64,
    bytes_per_bin: f64,
    latency_s: f64,
    budget: &HardwareBudget,
) -> f64 {
    (n_alice as f64 + latency_s * budget.rep_rate_hz) * bytes_per_bin
}
