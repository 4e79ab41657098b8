//! Plain-text `key = value` run configuration, with defaults matching the
//! baseline link: mu 0.5/0.25 at 0.7/0.3, 0.4 ns bins, 25 dB loss, 1 kHz
//! background, a 10^6-bin pattern and a +/-3 ms (7.5e6-bin) search range.
//!
//! Blank lines, `#`/`;` comments (whole-line or trailing) and `[section]`
//! headers are accepted; sections carry no meaning. Later assignments win.
//! Unknown keys are errors so typos cannot silently fall back to defaults.

use crate::channel::{ChannelConfig, DEFAULT_T_BIN_S};
use crate::error::{Error, Result};
use crate::protocol::{build_intensity_table, IntensityTable, TemplateMode};
use std::fmt;
use std::path::Path;

/// How the correlation template is derived from the transmitted states.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TemplateChoice {
    /// Binary without bright pulses, intensity-weighted with them.
    #[default]
    Auto,
    Binary,
    Intensity,
}

/// Which link parameter a sweep varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweptParam {
    /// Pattern length `n_alice` in bins.
    BlockSize,
    /// Background count rate in Hz.
    BackgroundRate,
    /// Channel loss in dB.
    ChannelLossDb,
    /// Bright-pulse mean photon number.
    SyncBrightness,
    /// Bright-pulse emission probability.
    SyncProbability,
}

impl SweptParam {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "block_size" => Ok(SweptParam::BlockSize),
            "background_rate" => Ok(SweptParam::BackgroundRate),
            "channel_loss_db" => Ok(SweptParam::ChannelLossDb),
            "sync_brightness" => Ok(SweptParam::SyncBrightness),
            "sync_probability" => Ok(SweptParam::SyncProbability),
            other => Err(Error::InvalidConfig(format!(
                "unknown sweep parameter `{other}` (expected block_size, background_rate, \
                 channel_loss_db, sync_brightness or sync_probability)"
            ))),
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            SweptParam::BlockSize => "block_size",
            SweptParam::BackgroundRate => "background_rate",
            SweptParam::ChannelLossDb => "channel_loss_db",
            SweptParam::SyncBrightness => "sync_brightness",
            SweptParam::SyncProbability => "sync_probability",
        }
    }
}

impl fmt::Display for SweptParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Sweep-specific keys lifted out of a config file.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSettings {
    pub param: SweptParam,
    pub grid: Vec<f64>,
    pub trials_per_point: u64,
}

/// One fully-specified run: protocol, channel, search and harness settings.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    /// Signal mean photon number.
    pub mu_signal: f64,
    /// Decoy mean photon number.
    pub mu_decoy: f64,
    /// Signal emission probability.
    pub p_signal: f64,
    /// Decoy emission probability.
    pub p_decoy: f64,
    /// Bright-pulse mean photon number; absent disables bright pulses.
    pub sync_mu: Option<f64>,
    /// Bright-pulse emission probability.
    pub sync_probability: f64,
    /// Channel loss in dB.
    pub loss_db: f64,
    /// Background count rate in Hz.
    pub bcr_hz: f64,
    /// Bin duration in seconds.
    pub t_bin_s: f64,
    /// Detector dead time in bins; 0 disables.
    pub dead_bins: u64,
    /// Injected clock-frequency offset in ppm; 0 disables.
    pub delta_ppm: f64,
    /// Transmitted pattern length in bins.
    pub n_alice: usize,
    /// Largest clock offset searched, in bins.
    pub d_max_bins: usize,
    /// Fixed ground-truth offset; absent draws uniformly in +/- d_max_bins.
    pub true_offset: Option<i64>,
    /// Template derivation rule.
    pub template_mode: TemplateChoice,
    /// Whether the template is mean-subtracted.
    pub zero_mean: bool,
    /// Frequency-search grid in ppm; empty uses plain offset recovery.
    pub delta_grid_ppm: Vec<f64>,
    /// Trials for a single-point run.
    pub trials: u64,
    /// Root seed for all randomness.
    pub base_seed: u64,
    /// Moving-average window for the success score.
    pub score_window: usize,
    /// Substream index when this config is one point of a larger sweep; the
    /// trial seed is derived from `(base_seed, grid_stream, trial_index)`.
    pub grid_stream: u64,
    /// Sweep definition, when the config file declares one.
    pub sweep: Option<SweepSettings>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            mu_signal: 0.5,
            mu_decoy: 0.25,
            p_signal: 0.7,
            p_decoy: 0.3,
            sync_mu: None,
            sync_probability: 0.0,
            loss_db: 25.0,
            bcr_hz: 1e3,
            t_bin_s: DEFAULT_T_BIN_S,
            dead_bins: 0,
            delta_ppm: 0.0,
            n_alice: 1_000_000,
            d_max_bins: 7_500_000,
            true_offset: None,
            template_mode: TemplateChoice::Auto,
            zero_mean: true,
            delta_grid_ppm: Vec::new(),
            trials: 100,
            base_seed: 0,
            score_window: 100,
            grid_stream: 0,
            sweep: None,
        }
    }
}

impl RunConfig {
    /// Builds the intensity table implied by the protocol fields.
    pub fn intensity_table(&self) -> Result<IntensityTable> {
        if self.sync_probability > 0.0 && self.sync_mu.is_none() {
            return Err(Error::InvalidConfig(
                "sync_probability is set but sync_mu is missing".into(),
            ));
        }
        let sync = self.sync_mu.map(|mu| (mu, self.sync_probability));
        build_intensity_table(
            self.mu_signal,
            self.mu_decoy,
            self.p_signal,
            self.p_decoy,
            sync,
        )
    }

    /// Builds the channel implied by the link fields.
    pub fn channel(&self) -> Result<ChannelConfig> {
        Ok(ChannelConfig::new(self.loss_db, self.bcr_hz)?
            .with_t_bin(self.t_bin_s)?
            .with_delta_ppm(self.delta_ppm)?
            .with_dead_bins(self.dead_bins))
    }

    /// Resolves [`TemplateChoice::Auto`]: intensity-weighted when bright
    /// pulses are in play, binary otherwise.
    pub fn effective_template_mode(&self) -> TemplateMode {
        match self.template_mode {
            TemplateChoice::Binary => TemplateMode::Binary,
            TemplateChoice::Intensity => TemplateMode::Intensity,
            TemplateChoice::Auto => {
                if self.sync_mu.is_some() && self.sync_probability > 0.0 {
                    TemplateMode::Intensity
                } else {
                    TemplateMode::Binary
                }
            }
        }
    }

    /// Checks every cross-field constraint; a config that passes can run.
    pub fn validate(&self) -> Result<()> {
        self.intensity_table()?;
        self.channel()?;
        if self.n_alice == 0 {
            return Err(Error::InvalidConfig("n_alice must be at least 1".into()));
        }
        if self.trials == 0 {
            return Err(Error::InvalidConfig("trials must be at least 1".into()));
        }
        if self.score_window == 0 {
            return Err(Error::InvalidConfig(
                "score_window must be at least 1".into(),
            ));
        }
        if let Some(offset) = self.true_offset {
            if offset.unsigned_abs() > self.d_max_bins as u64 {
                return Err(Error::InvalidConfig(format!(
                    "true_offset {offset} lies outside the +/-{} bin search range",
                    self.d_max_bins
                )));
            }
        }
        if !self.delta_grid_ppm.is_empty() && !self.delta_grid_ppm.contains(&0.0) {
            return Err(Error::InvalidConfig(
                "delta_grid_ppm must contain 0 so the drift-free hypothesis is tested".into(),
            ));
        }
        if let Some(sweep) = &self.sweep {
            if sweep.grid.is_empty() {
                return Err(Error::InvalidConfig("sweep_grid must be non-empty".into()));
            }
            if sweep.grid.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::InvalidConfig(
                    "sweep_grid must be strictly increasing".into(),
                ));
            }
            if sweep.trials_per_point == 0 {
                return Err(Error::InvalidConfig(
                    "trials_per_point must be at least 1".into(),
                ));
            }
        }
        Ok(())
    }
}

/// Parses and validates a config file. An empty file yields the defaults.
pub fn parse_config(path: impl AsRef<Path>) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path)?;
    parse_config_str(&text)
}

/// [`parse_config`] on in-memory text.
pub fn parse_config_str(text: &str) -> Result<RunConfig> {
    let mut cfg = RunConfig::default();
    let mut sweep_param: Option<SweptParam> = None;
    let mut sweep_grid: Option<Vec<f64>> = None;
    let mut trials_per_point: Option<u64> = None;

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = match raw.find(['#', ';']) {
            Some(cut) => &raw[..cut],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        if line.starts_with('[') && line.ends_with(']') {
            continue; // section headers are cosmetic
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(Error::InvalidConfig(format!(
                "line {line_no} is not a `key = value` assignment: `{line}`"
            )));
        };
        let key = key.trim();
        let value = value.trim();
        apply_key(
            &mut cfg,
            &mut sweep_param,
            &mut sweep_grid,
            &mut trials_per_point,
            key,
            value,
        )
        .map_err(|e| match e {
            Error::InvalidConfig(msg) => Error::InvalidConfig(format!("line {line_no}: {msg}")),
            other => other,
        })?;
    }

    match (sweep_param, sweep_grid) {
        (Some(param), Some(grid)) => {
            cfg.sweep = Some(SweepSettings {
                param,
                grid,
                trials_per_point: trials_per_point.unwrap_or(cfg.trials),
            });
        }
        (None, None) => {
            if trials_per_point.is_some() {
                return Err(Error::InvalidConfig(
                    "trials_per_point requires sweep_param and sweep_grid".into(),
                ));
            }
        }
        (Some(_), None) => {
            return Err(Error::InvalidConfig(
                "sweep_param requires sweep_grid".into(),
            ))
        }
        (None, Some(_)) => {
            return Err(Error::InvalidConfig(
                "sweep_grid requires sweep_param".into(),
            ))
        }
    }

    cfg.validate()?;
    Ok(cfg)
}

fn apply_key(
    cfg: &mut RunConfig,
    sweep_param: &mut Option<SweptParam>,
    sweep_grid: &mut Option<Vec<f64>>,
    trials_per_point: &mut Option<u64>,
    key: &str,
    value: &str,
) -> Result<()> {
    match key {
        "mu_signal" => cfg.mu_signal = parse_f64(key, value)?,
        "mu_decoy" => cfg.mu_decoy = parse_f64(key, value)?,
        "p_signal" => cfg.p_signal = parse_f64(key, value)?,
        "p_decoy" => cfg.p_decoy = parse_f64(key, value)?,
        "sync_mu" => {
            cfg.sync_mu = match value {
                "none" => None,
                v => Some(parse_f64(key, v)?),
            }
        }
        "sync_probability" => cfg.sync_probability = parse_f64(key, value)?,
        "loss_db" => cfg.loss_db = parse_f64(key, value)?,
        "bcr_hz" => cfg.bcr_hz = parse_f64(key, value)?,
        "t_bin_s" => cfg.t_bin_s = parse_f64(key, value)?,
        "dead_bins" => cfg.dead_bins = parse_count(key, value)?,
        "delta_ppm" => cfg.delta_ppm = parse_f64(key, value)?,
        "n_alice" => cfg.n_alice = parse_count(key, value)? as usize,
        "d_max_bins" => cfg.d_max_bins = parse_count(key, value)? as usize,
        "true_offset" => {
            cfg.true_offset = match value {
                "random" | "none" => None,
                v => Some(v.parse::<i64>().map_err(|_| {
                    Error::InvalidConfig(format!(
                        "invalid value for `{key}`: `{v}` (expected an integer or `random`)"
                    ))
                })?),
            }
        }
        "template_mode" => {
            cfg.template_mode = match value {
                "auto" => TemplateChoice::Auto,
                "binary" => TemplateChoice::Binary,
                "intensity" => TemplateChoice::Intensity,
                v => {
                    return Err(Error::InvalidConfig(format!(
                        "invalid value for `{key}`: `{v}` (expected auto, binary or intensity)"
                    )))
                }
            }
        }
        "zero_mean" => cfg.zero_mean = parse_bool(key, value)?,
        "delta_grid_ppm" => cfg.delta_grid_ppm = parse_f64_list(key, value)?,
        "trials" => cfg.trials = parse_count(key, value)?,
        "base_seed" => {
            cfg.base_seed = value.parse::<u64>().map_err(|_| {
                Error::InvalidConfig(format!(
                    "invalid value for `{key}`: `{value}` (expected an unsigned integer)"
                ))
            })?
        }
        "score_window" => cfg.score_window = parse_count(key, value)? as usize,
        "sweep_param" => *sweep_param = Some(SweptParam::parse(value)?),
        "sweep_grid" => *sweep_grid = Some(parse_f64_list(key, value)?),
        "trials_per_point" => *trials_per_point = Some(parse_count(key, value)?),
        other => {
            return Err(Error::InvalidConfig(format!("unknown key `{other}`")));
        }
    }
    Ok(())
}

fn parse_f64(key: &str, value: &str) -> Result<f64> {
    let v: f64 = value.parse().map_err(|_| {
        Error::InvalidConfig(format!(
            "invalid value for `{key}`: `{value}` (expected a number)"
        ))
    })?;
    if !v.is_finite() {
        return Err(Error::InvalidConfig(format!(
            "invalid value for `{key}`: `{value}` (must be finite)"
        )));
    }
    Ok(v)
}

/// Counts accept scientific notation (`1e6`) but must be non-negative
/// integers.
fn parse_count(key: &str, value: &str) -> Result<u64> {
    let v = parse_f64(key, value)?;
    if v < 0.0 || v.fract() != 0.0 || v > 2f64.powi(53) {
        return Err(Error::InvalidConfig(format!(
            "invalid value for `{key}`: `{value}` (expected a non-negative integer)"
        )));
    }
    Ok(v as u64)
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        v => Err(Error::InvalidConfig(format!(
            "invalid value for `{key}`: `{v}` (expected true or false)"
        ))),
    }
}

fn parse_f64_list(key: &str, value: &str) -> Result<Vec<f64>> {
    if value.is_empty() {
        return Ok(Vec::new());
    }
    value
        .split(',')
        .map(|part| parse_f64(key, part.trim()))
        .collect()
}

/// A validated sweep: the varied parameter and grid, the per-point trial
/// count, and the fixed remainder of the configuration.
#[derive(Debug, Clone)]
pub struct SweepSpec {
    param: SweptParam,
    grid: Vec<f64>,
    trials_per_point: u64,
    fixed: RunConfig,
    allow_large: bool,
}

impl SweepSpec {
    /// Lifts the sweep out of a parsed config. The config must declare one
    /// (`sweep_param` + `sweep_grid`).
    pub fn from_config(cfg: RunConfig) -> Result<Self> {
        cfg.validate()?;
        let settings = cfg.sweep.clone().ok_or_else(|| {
            Error::InvalidConfig("config declares no sweep (set sweep_param and sweep_grid)".into())
        })?;
        let mut fixed = cfg;
        fixed.sweep = None;
        Ok(SweepSpec {
            param: settings.param,
            grid: settings.grid,
            trials_per_point: settings.trials_per_point,
            fixed,
            allow_large: false,
        })
    }

    /// Builds a single-parameter sweep directly.
    pub fn new(
        param: SweptParam,
        grid: Vec<f64>,
        trials_per_point: u64,
        fixed: RunConfig,
    ) -> Result<Self> {
        let mut cfg = fixed;
        cfg.sweep = Some(SweepSettings {
            param,
            grid,
            trials_per_point,
        });
        SweepSpec::from_config(cfg)
    }

    /// Permits per-point transforms beyond the 2^28-point desk-scale guard.
    pub fn with_allow_large(mut self, allow: bool) -> Self {
        self.allow_large = allow;
        self
    }

    pub fn param(&self) -> SweptParam {
        self.param
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn trials_per_point(&self) -> u64 {
        self.trials_per_point
    }

    pub fn fixed(&self) -> &RunConfig {
        &self.fixed
    }

    pub fn allow_large(&self) -> bool {
        self.allow_large
    }

    /// The run configuration for grid point `index`: the swept parameter is
    /// overridden and the seed substream switched to that point.
    pub fn config_for_point(&self, index: usize) -> Result<RunConfig> {
        let value = *self.grid.get(index).ok_or_else(|| {
            Error::InvalidConfig(format!(
                "grid point {index} out of range (grid has {} points)",
                self.grid.len()
            ))
        })?;
        let mut cfg = self.fixed.clone();
        cfg.grid_stream = index as u64;
        cfg.trials = self.trials_per_point;
        match self.param {
            SweptParam::BlockSize => {
                if value < 1.0 || value.fract() != 0.0 {
                    return Err(Error::InvalidConfig(format!(
                        "block_size grid value {value} is not a positive integer"
                    )));
                }
                cfg.n_alice = value as usize;
            }
            SweptParam::BackgroundRate => cfg.bcr_hz = value,
            SweptParam::ChannelLossDb => cfg.loss_db = value,
            SweptParam::SyncBrightness => cfg.sync_mu = Some(value),
            SweptParam::SyncProbability => cfg.sync_probability = value,
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol::PulseRole;

    #[test]
    fn empty_text_yields_the_baseline() {
        let cfg = parse_config_str("").unwrap();
        assert_eq!(cfg, RunConfig::default());
        assert_eq!(cfg.mu_signal, 0.5);
        assert_eq!(cfg.loss_db, 25.0);
        assert_eq!(cfg.bcr_hz, 1e3);
        assert_eq!(cfg.t_bin_s, 0.4e-9);
        assert_eq!(cfg.d_max_bins, 7_500_000);
        assert_eq!(cfg.effective_template_mode(), TemplateMode::Binary);
    }

    #[test]
    fn bright_pulse_keys_build_a_three_entry_table() {
        let cfg = parse_config_str("sync_probability = 0.01\nsync_mu = 50\n").unwrap();
        let table = cfg.intensity_table().unwrap();
        assert_eq!(table.len(), 3);
        let sync = table.sync().unwrap();
        assert_eq!(sync.mu, 50.0);
        assert_eq!(sync.prob, 0.01);
        assert_eq!(sync.role, PulseRole::Sync);
        assert_eq!(cfg.effective_template_mode(), TemplateMode::Intensity);
    }

    #[test]
    fn probability_sum_violation_is_reported() {
        let err = parse_config_str("p_signal = 0.8\np_decoy = 0.3\n").unwrap_err();
        assert!(err.to_string().contains("sum to 1"), "{err}");
    }

    #[test]
    fn unknown_keys_are_named_with_their_line() {
        let err = parse_config_str("n_alice = 1000\nmu_sgnal = 0.5\n").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("mu_sgnal") && msg.contains("line 2"), "{msg}");
    }

    #[test]
    fn comments_sections_and_duplicates() {
        let text = "
            [protocol]
            mu_signal = 0.6   # overridden below
            ; full-line comment
            mu_signal = 0.55
            [channel]
            loss_db = 30
        ";
        let cfg = parse_config_str(text).unwrap();
        assert_eq!(cfg.mu_signal, 0.55);
        assert_eq!(cfg.loss_db, 30.0);
    }

    #[test]
    fn counts_accept_scientific_notation() {
        let cfg = parse_config_str("n_alice = 1e6\nd_max_bins = 1e4\ntrials = 20\n").unwrap();
        assert_eq!(cfg.n_alice, 1_000_000);
        assert_eq!(cfg.d_max_bins, 10_000);
        assert_eq!(cfg.trials, 20);
        assert!(parse_config_str("n_alice = 1234.5\n").is_err());
        assert!(parse_config_str("n_alice = -5\n").is_err());
    }

    #[test]
    fn sweep_keys_round_trip_into_a_spec() {
        let text = "
            n_alice = 5e4
            d_max_bins = 100
            sweep_param = channel_loss_db
            sweep_grid = 30, 32, 34
            trials_per_point = 7
        ";
        let cfg = parse_config_str(text).unwrap();
        let spec = SweepSpec::from_config(cfg).unwrap();
        assert_eq!(spec.param(), SweptParam::ChannelLossDb);
        assert_eq!(spec.grid(), &[30.0, 32.0, 34.0]);
        assert_eq!(spec.trials_per_point(), 7);
        let point = spec.config_for_point(1).unwrap();
        assert_eq!(point.loss_db, 32.0);
        assert_eq!(point.grid_stream, 1);
        assert_eq!(point.trials, 7);
        assert!(point.sweep.is_none());
    }

    #[test]
    fn sweep_grid_must_increase_strictly() {
        let text = "sweep_param = channel_loss_db\nsweep_grid = 30, 30, 34\n";
        assert!(parse_config_str(text).is_err());
        let text = "sweep_param = channel_loss_db\nsweep_grid = 34, 30\n";
        assert!(parse_config_str(text).is_err());
    }

    #[test]
    fn dangling_sweep_keys_are_rejected() {
        assert!(parse_config_str("sweep_param = block_size\n").is_err());
        assert!(parse_config_str("sweep_grid = 1, 2\n").is_err());
        assert!(parse_config_str("trials_per_point = 5\n").is_err());
    }

    #[test]
    fn sync_probability_without_brightness_is_rejected() {
        let err = parse_config_str("sync_probability = 0.01\n").unwrap_err();
        assert!(err.to_string().contains("sync_mu"), "{err}");
    }

    #[test]
    fn true_offset_must_fit_the_search_range() {
        assert!(parse_config_str("d_max_bins = 100\ntrue_offset = 100\n").is_ok());
        assert!(parse_config_str("d_max_bins = 100\ntrue_offset = 101\n").is_err());
        assert!(parse_config_str("d_max_bins = 100\ntrue_offset = -101\n").is_err());
        let cfg = parse_config_str("true_offset = random\n").unwrap();
        assert_eq!(cfg.true_offset, None);
    }

    #[test]
    fn frequency_grid_must_include_zero() {
        assert!(parse_config_str("delta_grid_ppm = -0.5, 0, 0.5\n").is_ok());
        assert!(parse_config_str("delta_grid_ppm = 0.5, 1.0\n").is_err());
    }

    #[test]
    fn block_size_grid_values_must_be_integers() {
        let cfg = parse_config_str(
            "sweep_param = block_size\nsweep_grid = 1000, 2000.5\nd_max_bins = 10\n",
        )
        .unwrap();
        let spec = SweepSpec::from_config(cfg).unwrap();
        assert!(spec.config_for_point(0).is_ok());
        assert!(spec.config_for_point(1).is_err());
    }

    #[test]
    fn malformed_lines_are_rejected() {
        assert!(parse_config_str("just some words\n").is_err());
    }
}
