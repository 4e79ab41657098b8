//! Clock synchronization for decoy-state quantum key distribution links,
//! using the random signal/decoy intensity pattern the protocol already
//! transmits as the timing signature.
//!
//! The transmitter's pulse-by-pulse intensity choices form a template; the
//! receiver's sparse click record is cross-correlated against it over a
//! bounded window of integer clock offsets, and the correlation peak gives
//! the offset. The crate simulates the lossy channel end to end, measures
//! peak significance, searches a grid of clock-frequency hypotheses when the
//! clocks also drift, runs seeded Monte-Carlo parameter sweeps whose output
//! is independent of thread count, and budgets hardware limits (transform
//! length, drift smear, buffer memory) for real deployments.
//!
//! # Quick start
//!
//! Recover a known offset over a 15 dB link:
//!
//! ```
//! use decoy_timesync::channel::{simulate_detections, ChannelConfig};
//! use decoy_timesync::correlation::{cross_correlate, recover_offset};
//! use decoy_timesync::protocol::{generate_states, make_template, IntensityTable, TemplateMode};
//!
//! let table = IntensityTable::baseline();
//! let states = generate_states(&table, 100_000, 7)?;
//! let template = make_template(&states, TemplateMode::Binary, true);
//!
//! let channel = ChannelConfig::new(15.0, 1_000.0)?;
//! let clicks = simulate_detections(&states, &channel, -420, 1_000, 8)?;
//!
//! let series = cross_correlate(&template, &clicks)?;
//! let estimate = recover_offset(&series);
//! assert_eq!(estimate.offset_bins, -420);
//! assert!(estimate.sigma_multiple > 5.0);
//! # Ok::<(), decoy_timesync::Error>(())
//! ```
//!
//! The same pipeline is available pre-assembled: [`sweep::run_trial`] runs
//! one seeded trial from a [`config::RunConfig`], and [`sweep::run_sweep`]
//! maps it over a parameter grid.
//!
//! # Module map
//!
//! - [`protocol`]: intensity tables, random state sequences, templates.
//! - [`channel`]: loss/background click model, dead time, clock drift.
//! - [`correlation`]: FFT cross-correlation, peak statistics, offset and
//!   frequency recovery.
//! - [`analysis`]: windowed success scores, key-rate and error-floor
//!   estimates.
//! - [`feasibility`]: transform-length, drift-smear and buffer budgets.
//! - [`config`] / [`sweep`]: `key = value` run configuration, deterministic
//!   Monte-Carlo sweeps, CSV/JSON emission.

pub mod analysis;
pub mod channel;
pub mod config;
pub mod correlation;
pub mod error;
pub mod feasibility;
pub mod protocol;
mod rng;
pub mod sweep;

pub use channel::{ChannelConfig, ClickSequence};
pub use config::{parse_config, RunConfig, SweepSpec};
pub use correlation::{CorrelationSeries, SyncEstimate};
pub use error::{Error, Result};
pub use protocol::{IntensityTable, StateSequence, Template};
pub use sweep::{run_sweep, run_trial, SweepResult, SweepRow};

#[cfg(doctest)]
mod booktest {
    //! Keeps every code block in the guide compiling and passing; each
    //! chapter is included verbatim as a doc-test source.
    macro_rules! booktest {
        ($name:ident, $path:literal) => {
            #[doc = include_str!($path)]
            mod $name {}
        };
    }

    booktest!(introduction, "../../../book/src/introduction.md");
    booktest!(
        patterns_and_templates,
        "../../../book/src/patterns-and-templates.md"
    );
    booktest!(channel_model, "../../../book/src/channel-model.md");
    booktest!(offset_recovery, "../../../book/src/offset-recovery.md");
    booktest!(frequency_drift, "../../../book/src/frequency-drift.md");
    booktest!(sweeps_and_cli, "../../../book/src/sweeps-and-cli.md");
    booktest!(hardware_budgets, "../../../book/src/hardware-budgets.md");
}
