//! Transmitter-side model: intensity tables, per-bin state sequences, and the
//! correlation templates derived from them.
//!
//! A transmitter chooses one intensity per clock bin at random — a signal
//! level, a weaker decoy level, and optionally a rare bright synchronization
//! level. The chosen pattern is secret-free side information: the receiver can
//! correlate its detection record against the pattern to find the clock
//! offset without sacrificing any key material.

use crate::error::{Error, Result};
use crate::rng::seeded_rng;
use rand::Rng;

/// Role of one intensity level in the modulation pattern.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PulseRole {
    Signal,
    Decoy,
    /// Rare bright pulse inserted to extend the loss budget.
    Sync,
}

/// One row of an intensity table: mean photon number, send probability, role.
#[derive(Debug, Clone, Copy)]
pub struct IntensityEntry {
    pub mu: f64,
    pub prob: f64,
    pub role: PulseRole,
}

/// The set of intensities a transmitter draws from, one per bin.
///
/// Invariants: exactly one signal and one decoy entry, at most one sync entry,
/// all probabilities in `[0, 1]` summing to 1, all intensities finite and
/// non-negative.
#[derive(Debug, Clone)]
pub struct IntensityTable {
    entries: Vec<IntensityEntry>,
}

/// Builds an intensity table from signal/decoy parameters and an optional
/// bright sync entry given as `(mu_sync, p_sync)`.
///
/// `p_signal + p_decoy` must equal 1 (within 1e-12). When a sync entry with
/// `p_sync > 0` is present, the signal and decoy probabilities are reduced by
/// `p_sync / 2` each so the table still sums to 1; a sync entry with
/// `p_sync = 0` degenerates to the two-entry table.
pub fn build_intensity_table(
    mu_signal: f64,
    mu_decoy: f64,
    p_signal: f64,
    p_decoy: f64,
    sync: Option<(f64, f64)>,
) -> Result<IntensityTable> {
    for (name, mu) in [("mu_signal", mu_signal), ("mu_decoy", mu_decoy)] {
        if !mu.is_finite() || mu < 0.0 {
            return Err(Error::InvalidConfig(format!(
                "{name} must be finite and >= 0 (got {mu})"
            )));
        }
    }
    for (name, p) in [("p_signal", p_signal), ("p_decoy", p_decoy)] {
        if !p.is_finite() || !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidConfig(format!(
                "{name} must lie in [0, 1] (got {p})"
            )));
        }
    }
    if (p_signal + p_decoy - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidConfig(format!(
            "p_signal + p_decoy must sum to 1 (got {})",
            p_signal + p_decoy
        )));
    }

    let mut entries = vec![
        IntensityEntry {
            mu: mu_signal,
            prob: p_signal,
            role: PulseRole::Signal,
        },
        IntensityEntry {
            mu: mu_decoy,
            prob: p_decoy,
            role: PulseRole::Decoy,
        },
    ];
    if let Some((mu_sync, p_sync)) = sync {
        if !mu_sync.is_finite() || mu_sync < 0.0 {
            return Err(Error::InvalidConfig(format!(
                "sync_mu must be finite and >= 0 (got {mu_sync})"
            )));
        }
        if !p_sync.is_finite() || !(0.0..=1.0).contains(&p_sync) {
            return Err(Error::InvalidConfig(format!(
                "sync_probability must lie in [0, 1] (got {p_sync})"
            )));
        }
        if p_sync > 0.0 {
            // The sync slot is carved evenly out of the signal and decoy shares.
            let half = p_sync / 2.0;
            entries[0].prob = p_signal - half;
            entries[1].prob = p_decoy - half;
            if entries[0].prob < 0.0 || entries[1].prob < 0.0 {
                return Err(Error::InvalidConfig(format!(
                    "sync_probability {p_sync} leaves a negative signal or decoy probability"
                )));
            }
            entries.push(IntensityEntry {
                mu: mu_sync,
                prob: p_sync,
                role: PulseRole::Sync,
            });
        }
    }
    Ok(IntensityTable { entries })
}

impl IntensityTable {
    /// The default protocol parameters: signal 0.5 / decoy 0.25 photons sent
    /// with probabilities 0.7 / 0.3, no bright pulses.
    pub fn baseline() -> Self {
        build_intensity_table(0.5, 0.25, 0.7, 0.3, None).expect("baseline table is valid")
    }

    pub fn entries(&self) -> &[IntensityEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn signal(&self) -> &IntensityEntry {
        self.by_role(PulseRole::Signal)
            .expect("table has a signal entry")
    }

    pub fn decoy(&self) -> &IntensityEntry {
        self.by_role(PulseRole::Decoy)
            .expect("table has a decoy entry")
    }

    pub fn sync(&self) -> Option<&IntensityEntry> {
        self.by_role(PulseRole::Sync)
    }

    fn by_role(&self, role: PulseRole) -> Option<&IntensityEntry> {
        self.entries.iter().find(|e| e.role == role)
    }
}

/// The per-bin intensity choices of one block, stored as indices into the
/// table that generated them.
#[derive(Debug, Clone)]
pub struct StateSequence {
    indices: Vec<u8>,
    table: IntensityTable,
    seed: u64,
}

impl StateSequence {
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// Table index chosen for bin `i`.
    pub fn index(&self, i: usize) -> usize {
        self.indices[i] as usize
    }

    pub fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.indices.iter().map(|&i| i as usize)
    }

    pub fn table(&self) -> &IntensityTable {
        &self.table
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Number of bins assigned to each table entry.
    pub fn counts(&self) -> Vec<u64> {
        let mut counts = vec![0u64; self.table.len()];
        for &i in &self.indices {
            counts[i as usize] += 1;
        }
        counts
    }
}

/// Draws `n_alice` independent intensity choices from the table.
///
/// Sampling is categorical over the entry probabilities with one uniform draw
/// per bin, so a given `(table, n_alice, seed)` always yields the same
/// sequence.
pub fn generate_states(table: &IntensityTable, n_alice: usize, seed: u64) -> Result<StateSequence> {
    if n_alice == 0 {
        return Err(Error::InvalidConfig("n_alice must be >= 1".into()));
    }
    // Cumulative thresholds; the final one is clamped so a draw of
    // 1 - epsilon can never fall off the end.
    let mut cum = Vec::with_capacity(table.len());
    let mut acc = 0.0;
    for e in table.entries() {
        acc += e.prob;
        cum.push(acc);
    }
    *cum.last_mut().expect("table is non-empty") = f64::INFINITY;

    let mut rng = seeded_rng(seed);
    let mut indices = Vec::with_capacity(n_alice);
    for _ in 0..n_alice {
        let u: f64 = rng.random();
        let idx = cum
            .iter()
            .position(|&c| u < c)
            .expect("cumulative covers [0,1)");
        indices.push(idx as u8);
    }
    Ok(StateSequence {
        indices,
        table: table.clone(),
        seed,
    })
}

/// How table entries map to template values.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TemplateMode {
    /// Signal and sync bins are 1, decoy bins are 0.
    Binary,
    /// Each bin carries its mean photon number; bright sync bins dominate.
    Intensity,
}

/// The transmitter-side pattern the receiver correlates against.
#[derive(Debug, Clone)]
pub struct Template {
    values: Vec<f64>,
    zero_mean: bool,
}

impl Template {
    /// Wraps raw values as a template (no mean subtraction).
    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidInput("template must be non-empty".into()));
        }
        Ok(Template {
            values,
            zero_mean: false,
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Whether the values were mean-subtracted at construction.
    pub fn zero_mean(&self) -> bool {
        self.zero_mean
    }
}

/// Renders a state sequence as a correlation template.
///
/// With `zero_mean` set the arithmetic mean is subtracted, which decouples the
/// correlation from the total number of clicks under the window and is the
/// recommended default.
pub fn make_template(states: &StateSequence, mode: TemplateMode, zero_mean: bool) -> Template {
    let table = states.table();
    let value_of: Vec<f64> = table
        .entries()
        .iter()
        .map(|e| match mode {
            TemplateMode::Binary => match e.role {
                PulseRole::Signal | PulseRole::Sync => 1.0,
                PulseRole::Decoy => 0.0,
            },
            TemplateMode::Intensity => e.mu,
        })
        .collect();
    let mut values: Vec<f64> = states.indices().map(|i| value_of[i]).collect();
    if zero_mean {
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        for v in &mut values {
            *v -= mean;
        }
    }
    Template { values, zero_mean }
}
