//! Receiver-side model: lossy channel, background counts, detector dead time,
//! and clock-frequency offset applied to a detection record.
//!
//! Detections are kept per clock bin as booleans. A block of `n_alice` sent
//! bins lands inside a window of `n_alice + 2 * d_max` receiver bins: `d_max`
//! bins of padding on each side so any true offset in `[-d_max, d_max]` keeps
//! the whole block inside the record. Padding bins see background counts only.

use crate::error::{Error, Result};
use crate::protocol::StateSequence;
use crate::rng::seeded_rng;
use rand::Rng;

/// Default bin width: 0.4 ns, i.e. a 2.5 GHz clock.
pub const DEFAULT_T_BIN_S: f64 = 0.4e-9;

/// Channel and detector parameters.
#[derive(Debug, Clone, Copy)]
pub struct ChannelConfig {
    /// Total link loss in dB (>= 0).
    pub loss_db: f64,
    /// Background count rate in Hz (dark counts plus stray light).
    pub bcr_hz: f64,
    /// Bin width in seconds.
    pub t_bin_s: f64,
    /// Detector hold-off after a click, in bins (0 disables).
    pub dead_bins: u64,
    /// Receiver clock frequency offset in parts per million (0 disables).
    pub delta_ppm: f64,
}

impl ChannelConfig {
    /// A channel with the default 0.4 ns bins, no dead time, no frequency offset.
    pub fn new(loss_db: f64, bcr_hz: f64) -> Result<Self> {
        let config = ChannelConfig {
            loss_db,
            bcr_hz,
            t_bin_s: DEFAULT_T_BIN_S,
            dead_bins: 0,
            delta_ppm: 0.0,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn with_t_bin(mut self, t_bin_s: f64) -> Result<Self> {
        self.t_bin_s = t_bin_s;
        self.validate()?;
        Ok(self)
    }

    pub fn with_dead_bins(mut self, dead_bins: u64) -> Self {
        self.dead_bins = dead_bins;
        self
    }

    pub fn with_delta_ppm(mut self, delta_ppm: f64) -> Result<Self> {
        self.delta_ppm = delta_ppm;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.loss_db.is_finite() || self.loss_db < 0.0 {
            return Err(Error::InvalidConfig(format!(
                "loss_db must be finite and >= 0 (got {})",
                self.loss_db
            )));
        }
        if !self.t_bin_s.is_finite() || self.t_bin_s <= 0.0 {
            return Err(Error::InvalidConfig(format!(
                "t_bin_s must be > 0 (got {})",
                self.t_bin_s
            )));
        }
        if !self.bcr_hz.is_finite() || self.bcr_hz < 0.0 {
            return Err(Error::InvalidConfig(format!(
                "bcr_hz must be finite and >= 0 (got {})",
                self.bcr_hz
            )));
        }
        if self.background_prob() >= 1.0 {
            return Err(Error::InvalidConfig(format!(
                "bcr_hz * t_bin_s must be < 1 (got {})",
                self.background_prob()
            )));
        }
        if !self.delta_ppm.is_finite() || self.delta_ppm.abs() > 100.0 {
            return Err(Error::InvalidConfig(format!(
                "delta_ppm must lie in [-100, 100] (got {})",
                self.delta_ppm
            )));
        }
        Ok(())
    }

    /// Channel transmissivity `10^(-loss_db / 10)`.
    pub fn eta(&self) -> f64 {
        10f64.powf(-self.loss_db / 10.0)
    }

    /// Probability of a background count in one bin, `bcr_hz * t_bin_s`.
    pub fn background_prob(&self) -> f64 {
        self.bcr_hz * self.t_bin_s
    }

    /// Clock rate implied by the bin width.
    pub fn rep_rate_hz(&self) -> f64 {
        1.0 / self.t_bin_s
    }
}

/// Formula shared by the public probability and the feasibility calculators;
/// callers must have validated the inputs.
pub(crate) fn click_prob_unchecked(mu: f64, eta: f64, background_prob: f64) -> f64 {
    1.0 - (-mu * eta).exp() * (1.0 - background_prob)
}

/// Probability that a bin carrying a pulse of mean photon number `mu` produces
/// a click: `1 - exp(-mu * eta) * (1 - bcr_hz * t_bin_s)`.
///
/// Monotonically increasing in `mu`, `eta`, and `bcr_hz`.
pub fn click_probability(mu: f64, eta: f64, bcr_hz: f64, t_bin_s: f64) -> Result<f64> {
    if !mu.is_finite() || mu < 0.0 {
        return Err(Error::InvalidConfig(format!("mu must be >= 0 (got {mu})")));
    }
    if !eta.is_finite() || eta <= 0.0 || eta > 1.0 {
        return Err(Error::InvalidConfig(format!(
            "eta must lie in (0, 1] (got {eta})"
        )));
    }
    if !t_bin_s.is_finite() || t_bin_s <= 0.0 {
        return Err(Error::InvalidConfig(format!(
            "t_bin_s must be > 0 (got {t_bin_s})"
        )));
    }
    let bg = bcr_hz * t_bin_s;
    if !bg.is_finite() || !(0.0..1.0).contains(&bg) {
        return Err(Error::InvalidConfig(format!(
            "bcr_hz * t_bin_s must lie in [0, 1) (got {bg})"
        )));
    }
    Ok(click_prob_unchecked(mu, eta, bg))
}

/// One receiver detection record: a boolean per bin.
#[derive(Debug, Clone)]
pub struct ClickSequence {
    clicks: Vec<bool>,
    d_max: usize,
    true_offset: i64,
    seed: u64,
}

impl ClickSequence {
    /// Wraps a raw record. `clicks.len()` must equal `n_alice + 2 * d_max` for
    /// some `n_alice >= 1`, and `|true_offset| <= d_max`.
    pub fn from_bools(
        clicks: Vec<bool>,
        d_max: usize,
        true_offset: i64,
        seed: u64,
    ) -> Result<Self> {
        if clicks.len() <= 2 * d_max {
            return Err(Error::InvalidInput(format!(
                "click record of {} bins leaves no room for a block inside 2 * d_max = {}",
                clicks.len(),
                2 * d_max
            )));
        }
        if true_offset.unsigned_abs() > d_max as u64 {
            return Err(Error::InvalidInput(format!(
                "|true_offset| = {} exceeds d_max = {d_max}",
                true_offset.unsigned_abs()
            )));
        }
        Ok(ClickSequence {
            clicks,
            d_max,
            true_offset,
            seed,
        })
    }

    pub fn clicks(&self) -> &[bool] {
        &self.clicks
    }

    pub fn len(&self) -> usize {
        self.clicks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clicks.is_empty()
    }

    /// Search half-width this record was padded for.
    pub fn d_max(&self) -> usize {
        self.d_max
    }

    /// Ground-truth offset used when the record was simulated.
    pub fn true_offset(&self) -> i64 {
        self.true_offset
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Sent block length, `len() - 2 * d_max`.
    pub fn n_alice(&self) -> usize {
        self.clicks.len() - 2 * self.d_max
    }

    fn with_clicks(&self, clicks: Vec<bool>) -> ClickSequence {
        ClickSequence { clicks, ..*self }
    }
}

/// Simulates the receiver's detection record for one block.
///
/// Bin `i` of the block lands at record index `i + d_max + true_offset` and
/// clicks with [`click_probability`] for its intensity; every other bin is
/// padding and clicks with the background probability alone. One uniform draw
/// is consumed per record bin in index order, so a given seed always produces
/// the same record.
pub fn simulate_detections(
    states: &StateSequence,
    channel: &ChannelConfig,
    true_offset: i64,
    d_max: usize,
    seed: u64,
) -> Result<ClickSequence> {
    channel.validate()?;
    if true_offset.unsigned_abs() > d_max as u64 {
        return Err(Error::InvalidConfig(format!(
            "|true_offset| = {} exceeds d_max = {d_max}",
            true_offset.unsigned_abs()
        )));
    }
    let eta = channel.eta();
    let bg = channel.background_prob();
    let probs: Vec<f64> = states
        .table()
        .entries()
        .iter()
        .map(|e| click_probability(e.mu, eta, channel.bcr_hz, channel.t_bin_s))
        .collect::<Result<_>>()?;

    let n = states.len();
    let len = n + 2 * d_max;
    let start = d_max as i64 + true_offset;
    let mut rng = seeded_rng(seed);
    let mut clicks = vec![false; len];
    for (j, c) in clicks.iter_mut().enumerate() {
        let p = match (j as i64).checked_sub(start) {
            Some(i) if (0..n as i64).contains(&i) => probs[states.index(i as usize)],
            _ => bg,
        };
        *c = rng.random::<f64>() < p;
    }
    Ok(ClickSequence {
        clicks,
        d_max,
        true_offset,
        seed,
    })
}

/// Applies detector hold-off: scanning left to right, every surviving click
/// clears the following `dead_bins` clicks.
pub fn apply_dead_time(clicks: &ClickSequence, dead_bins: u64) -> ClickSequence {
    let mut out = clicks.clicks().to_vec();
    if dead_bins > 0 {
        let mut j = 0usize;
        while j < out.len() {
            if out[j] {
                let end = j
                    .saturating_add(dead_bins as usize)
                    .saturating_add(1)
                    .min(out.len());
                for slot in &mut out[j + 1..end] {
                    *slot = false;
                }
                j = end;
            } else {
                j += 1;
            }
        }
    }
    clicks.with_clicks(out)
}

/// Applies a receiver clock-frequency offset of `delta_ppm` parts per million:
/// a click at index `j` moves to `round(j * (1 + delta_ppm * 1e-6))`. Clicks
/// mapped onto the same bin merge; clicks mapped outside the record drop.
/// `|delta_ppm|` is expected to be <= 100.
pub fn apply_frequency_offset(clicks: &ClickSequence, delta_ppm: f64) -> ClickSequence {
    remap_clicks(clicks, |j| j * (1.0 + delta_ppm * 1e-6))
}

/// Inverse of [`apply_frequency_offset`]: indices are divided by the candidate
/// factor. Used by the frequency search to undo a hypothesized offset.
pub(crate) fn resample_for_search(clicks: &ClickSequence, delta_ppm: f64) -> ClickSequence {
    remap_clicks(clicks, |j| j / (1.0 + delta_ppm * 1e-6))
}

fn remap_clicks(clicks: &ClickSequence, map: impl Fn(f64) -> f64) -> ClickSequence {
    let len = clicks.len();
    let mut out = vec![false; len];
    for (j, &c) in clicks.clicks().iter().enumerate() {
        if c {
            let k = map(j as f64).round();
            if k >= 0.0 && k < len as f64 {
                out[k as usize] = true;
            }
        }
    }
    clicks.with_clicks(out)
}
