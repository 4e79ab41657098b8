//! Offset and frequency recovery by cross-correlating the transmitted
//! intensity pattern against the detection record.
//!
//! The correlation is evaluated only where the template fully overlaps the
//! padded record, i.e. for the `2 * d_max + 1` integer lags
//!
//! ```text
//! value(n) = sum_m template[m] * clicks[m + d_max + n],   n in [-d_max, d_max]
//! ```
//!
//! Both sequences are zero-padded to the next power of two at or above
//! `clicks_len + template_len - 1` so the convolution theorem yields the exact
//! linear correlation with no circular wrap-around. Because both inputs are
//! real, one complex FFT carries the template in the real part and the record
//! in the imaginary part; the product spectrum is formed in place and a single
//! inverse transform returns the correlation.

use crate::channel::{resample_for_search, ClickSequence};
use crate::error::{Error, Result};
use crate::protocol::Template;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

/// Exclusion half-width used for the series' own peak statistic: the peak bin
/// plus/minus this many lags is left out of the mean/std so the peak cannot
/// inflate its own baseline. Kept small so short series remain usable.
pub const DEFAULT_EXCLUSION_HALFWIDTH: usize = 2;

/// A valid-overlap cross-correlation over lags `-d_max ..= d_max`, along with
/// the peak location and its significance against the off-peak baseline.
#[derive(Debug, Clone)]
pub struct CorrelationSeries {
    values: Vec<f64>,
    d_max: usize,
    mean: f64,
    std: f64,
    peak_lag: i64,
    peak_value: f64,
    sigma_multiple: f64,
}

impl CorrelationSeries {
    /// Builds a series from values indexed by lag `-d_max ..= d_max`
    /// (`values.len()` must be odd). The peak is the maximum value; exact ties
    /// resolve to the smallest lag. The stored mean/std exclude
    /// [`DEFAULT_EXCLUSION_HALFWIDTH`] lags around the peak when the series is
    /// long enough to spare them (only the peak bin otherwise).
    pub fn from_lag_values(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() || values.len().is_multiple_of(2) {
            return Err(Error::InvalidInput(format!(
                "lag series must have odd length 2 * d_max + 1 (got {})",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(
                "lag series contains non-finite values".into(),
            ));
        }
        let d_max = (values.len() - 1) / 2;
        let mut peak_idx = 0usize;
        for (i, &v) in values.iter().enumerate() {
            if v > values[peak_idx] {
                peak_idx = i;
            }
        }
        let peak_value = values[peak_idx];
        let peak_lag = peak_idx as i64 - d_max as i64;

        let halfwidth = if values.len() > 2 * DEFAULT_EXCLUSION_HALFWIDTH + 10 {
            DEFAULT_EXCLUSION_HALFWIDTH
        } else {
            0
        };
        let (mean, std) =
            stats_excluding_peak(&values, peak_idx, halfwidth).unwrap_or((peak_value, 0.0));
        let sigma_multiple = (peak_value - mean) / std;
        Ok(CorrelationSeries {
            values,
            d_max,
            mean,
            std,
            peak_lag,
            peak_value,
            sigma_multiple,
        })
    }

    /// Values ordered by lag, `-d_max` first.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn d_max(&self) -> usize {
        self.d_max
    }

    /// Correlation value at `lag`, if within range.
    pub fn value_at(&self, lag: i64) -> Option<f64> {
        let idx = lag.checked_add(self.d_max as i64)?;
        usize::try_from(idx)
            .ok()
            .and_then(|i| self.values.get(i))
            .copied()
    }

    pub fn lags(&self) -> impl Iterator<Item = i64> + '_ {
        let d = self.d_max as i64;
        -d..=d
    }

    /// Off-peak mean (see [`CorrelationSeries::from_lag_values`]).
    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Off-peak population standard deviation.
    pub fn std(&self) -> f64 {
        self.std
    }

    /// Lag of the maximum value (smallest lag on ties).
    pub fn peak_lag(&self) -> i64 {
        self.peak_lag
    }

    pub fn peak_value(&self) -> f64 {
        self.peak_value
    }

    /// `(peak_value - mean) / std`; infinite or NaN when the baseline has zero
    /// spread.
    pub fn sigma_multiple(&self) -> f64 {
        self.sigma_multiple
    }
}

fn stats_excluding_peak(values: &[f64], peak_idx: usize, halfwidth: usize) -> Option<(f64, f64)> {
    let lo = peak_idx.saturating_sub(halfwidth);
    let hi = (peak_idx + halfwidth).min(values.len() - 1);
    let kept = values.len() - (hi - lo + 1);
    if kept == 0 {
        return None;
    }
    let mut sum = 0.0;
    for (i, &v) in values.iter().enumerate() {
        if i < lo || i > hi {
            sum += v;
        }
    }
    let mean = sum / kept as f64;
    let mut ss = 0.0;
    for (i, &v) in values.iter().enumerate() {
        if i < lo || i > hi {
            ss += (v - mean) * (v - mean);
        }
    }
    Some((mean, (ss / kept as f64).sqrt()))
}

/// Result of an offset (and optional frequency) recovery.
#[derive(Debug, Clone, Copy)]
pub struct SyncEstimate {
    /// Recovered clock offset in bins.
    pub offset_bins: i64,
    /// Recovered clock-frequency ratio `1 + delta_ppm * 1e-6`; 1.0 when no
    /// frequency search was performed.
    pub freq_factor: f64,
    /// Peak significance of the winning correlation.
    pub sigma_multiple: f64,
    /// Whether the offset matched the ground truth exactly; assigned by the
    /// harness, `false` until then.
    pub success: bool,
}

impl SyncEstimate {
    /// Recovered frequency offset in parts per million.
    pub fn delta_ppm(&self) -> f64 {
        (self.freq_factor - 1.0) * 1e6
    }
}

/// Cross-correlates a template against a detection record over all lags with
/// full overlap. `clicks.len()` must equal `template.len() + 2 * clicks.d_max()`.
///
/// The FFT evaluation is exact up to rounding: it matches the direct sum to a
/// relative error of 1e-9 on kilobin-scale inputs.
pub fn cross_correlate(template: &Template, clicks: &ClickSequence) -> Result<CorrelationSeries> {
    let l = template.len();
    let m = clicks.len();
    let d_max = clicks.d_max();
    if m != l + 2 * d_max {
        return Err(Error::InvalidInput(format!(
            "record length {m} does not equal template length {l} + 2 * d_max = {}",
            l + 2 * d_max
        )));
    }

    let n = (m + l - 1).next_power_of_two();
    let mut buf = vec![Complex::new(0.0, 0.0); n];
    for (slot, &t) in buf.iter_mut().zip(template.values()) {
        slot.re = t;
    }
    for (slot, &c) in buf.iter_mut().zip(clicks.clicks()) {
        if c {
            slot.im = 1.0;
        }
    }

    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(n).process(&mut buf);

    // buf now holds Z = A + iB where A is the template spectrum and B the
    // record spectrum. Unpack via Hermitian symmetry and replace each pair
    // (k, n-k) with B * conj(A); self-paired bins (k = 0, n/2) fall out of the
    // same algebra because Z[k] == Z[n-k] there.
    let spectral_product = |zk: Complex<f64>, znk: Complex<f64>| {
        let a = (zk + znk.conj()) * 0.5;
        let b = (zk - znk.conj()) * Complex::new(0.0, -0.5);
        b * a.conj()
    };
    for k in 0..=n / 2 {
        let k2 = (n - k) % n;
        let zk = buf[k];
        let znk = buf[k2];
        buf[k] = spectral_product(zk, znk);
        if k2 != k {
            buf[k2] = spectral_product(znk, zk);
        }
    }

    planner.plan_fft_inverse(n).process(&mut buf);
    let scale = 1.0 / n as f64;
    let values: Vec<f64> = buf[..=2 * d_max].iter().map(|z| z.re * scale).collect();
    CorrelationSeries::from_lag_values(values)
}

/// Reads the offset off the correlation peak. `success` is left `false`; the
/// sweep harness sets it when ground truth is available.
pub fn recover_offset(corr: &CorrelationSeries) -> SyncEstimate {
    SyncEstimate {
        offset_bins: corr.peak_lag(),
        freq_factor: 1.0,
        sigma_multiple: corr.sigma_multiple(),
        success: false,
    }
}

/// Peak significance `(peak - mean) / std` with the mean and std taken over
/// all lags except `exclusion_halfwidth` bins around the peak.
///
/// Requires `2 * d_max + 1 > 2 * exclusion_halfwidth + 10` so enough baseline
/// remains; a baseline with zero spread is an error.
pub fn peak_significance(corr: &CorrelationSeries, exclusion_halfwidth: usize) -> Result<f64> {
    let len = corr.values().len();
    if len <= 2 * exclusion_halfwidth + 10 {
        return Err(Error::TooFewLags(format!(
            "{len} lags cannot support an exclusion half-width of {exclusion_halfwidth}"
        )));
    }
    let peak_idx = (corr.peak_lag() + corr.d_max() as i64) as usize;
    let (mean, std) = stats_excluding_peak(corr.values(), peak_idx, exclusion_halfwidth)
        .expect("length check leaves a baseline");
    if std == 0.0 {
        return Err(Error::DegenerateSeries(
            "off-peak baseline has zero standard deviation".into(),
        ));
    }
    Ok((corr.peak_value() - mean) / std)
}

/// Joint frequency-and-offset recovery: for every candidate in
/// `delta_grid_ppm` the record is resampled by `1 / (1 + delta * 1e-6)` and
/// correlated; the candidate with the highest peak wins. Exact ties prefer the
/// smaller `|delta|`, then the smaller lag.
///
/// The grid must be non-empty and contain 0 so the no-offset hypothesis is
/// always evaluated; with grid `{0}` the result equals [`recover_offset`].
///
/// A drift of `delta` ppm moves no click below bin index
/// `0.5 / (|delta| * 1e-6)` (indices are relabeled by `round(j * (1 +
/// delta * 1e-6))`), so it is only observable if the record extends well past
/// that threshold: distinguishing 0.5 ppm needs clicks beyond bin 1e6. For
/// shorter records the candidate resamplings coincide bit-for-bit and the tie
/// rule returns the smallest `|delta|`.
pub fn recover_frequency_and_offset(
    template: &Template,
    clicks: &ClickSequence,
    delta_grid_ppm: &[f64],
) -> Result<SyncEstimate> {
    Ok(frequency_search(template, clicks, delta_grid_ppm)?.0)
}

pub(crate) fn frequency_search(
    template: &Template,
    clicks: &ClickSequence,
    delta_grid_ppm: &[f64],
) -> Result<(SyncEstimate, CorrelationSeries)> {
    if delta_grid_ppm.is_empty() {
        return Err(Error::InvalidConfig(
            "frequency grid must be non-empty".into(),
        ));
    }
    if !delta_grid_ppm.contains(&0.0) {
        return Err(Error::InvalidConfig("frequency grid must contain 0".into()));
    }
    let mut best: Option<(f64, CorrelationSeries)> = None;
    for &delta in delta_grid_ppm {
        let resampled = resample_for_search(clicks, delta);
        let corr = cross_correlate(template, &resampled)?;
        let better = match &best {
            None => true,
            Some((best_delta, best_corr)) => {
                let (v, bv) = (corr.peak_value(), best_corr.peak_value());
                v > bv
                    || (v == bv
                        && (delta.abs() < best_delta.abs()
                            || (delta.abs() == best_delta.abs()
                                && corr.peak_lag() < best_corr.peak_lag())))
            }
        };
        if better {
            best = Some((delta, corr));
        }
    }
    let (delta, corr) = best.expect("grid is non-empty");
    let estimate = SyncEstimate {
        offset_bins: corr.peak_lag(),
        freq_factor: 1.0 + delta * 1e-6,
        sigma_multiple: corr.sigma_multiple(),
        success: false,
    };
    Ok((estimate, corr))
}
