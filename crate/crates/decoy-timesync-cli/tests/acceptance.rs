//! Acceptance gate: eleven numbered behavioral criteria with pinned
//! parameters and tolerances, one pass/fail line each.
//!
//! Run with `cargo test -p decoy-timesync-cli --test acceptance -- --nocapture`
//! to see every line; without `--nocapture` the lines surface on failure.

mod common;

use common::direct_correlate;
use decoy_timesync::analysis::key_rate_penalty;
use decoy_timesync::channel::{ChannelConfig, ClickSequence};
use decoy_timesync::config::{RunConfig, SweepSpec, SweptParam};
use decoy_timesync::correlation::cross_correlate;
use decoy_timesync::feasibility::{
    arrival_lock_limit, max_offset_for_transform, required_transform_length, syntonization_smear,
    HardwareBudget,
};
use decoy_timesync::protocol::{build_intensity_table, Template};
use decoy_timesync::sweep::{run_sweep, run_trial, run_trial_detailed};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::time::Instant;

/// Prints the one-line verdict for a criterion, then enforces it.
fn report(id: u32, pass: bool, detail: &str) {
    println!(
        "acceptance {id:02}: {} ({detail})",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "acceptance {id:02} failed: {detail}");
}

/// Fraction of trials with exact offset recovery.
fn success_rate(cfg: &RunConfig, trials: u64) -> f64 {
    let hits = (0..trials)
        .filter(|&t| run_trial(cfg, t).unwrap().success)
        .count();
    hits as f64 / trials as f64
}

#[test]
fn a01_transform_correlation_matches_the_direct_sum() {
    let start = Instant::now();
    let mut worst_rel: f64 = 0.0;
    for seed in 0..500u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let len = rng.random_range(1..=2048);
        let d_max = rng.random_range(0..=512);
        let values: Vec<f64> = (0..len).map(|_| rng.random_range(-1.0..1.0)).collect();
        let density: f64 = rng.random_range(0.01..0.5);
        let clicks: Vec<bool> = (0..len + 2 * d_max)
            .map(|_| rng.random::<f64>() < density)
            .collect();

        let template = Template::from_values(values.clone()).unwrap();
        let record = ClickSequence::from_bools(clicks.clone(), d_max, 0, seed).unwrap();
        let series = cross_correlate(&template, &record).unwrap();
        let reference = direct_correlate(&values, &clicks, d_max);
        for (&got, &want) in series.values().iter().zip(&reference) {
            if want == 0.0 {
                assert!((got - want).abs() <= 1e-6, "seed {seed}: {got} vs exact 0");
            } else {
                worst_rel = worst_rel.max((got - want).abs() / want.abs());
            }
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    let pass = worst_rel <= 1e-9 && elapsed < 30.0;
    report(
        1,
        pass,
        &format!(
            "500 instances, worst relative error {worst_rel:.3e} <= 1e-9, {elapsed:.1}s < 30s"
        ),
    );
}

#[test]
fn a02_saturated_noiseless_link_recovers_every_offset() {
    let start = Instant::now();
    let cfg = RunConfig {
        mu_signal: 100.0, // eta * mu so large the signal click probability is 1
        mu_decoy: 0.0,
        loss_db: 0.0,
        bcr_hz: 0.0,
        n_alice: 10_000,
        d_max_bins: 1_000,
        base_seed: 200,
        ..RunConfig::default()
    };
    let trials = 1_000u64;
    let hits = (0..trials)
        .filter(|&t| run_trial(&cfg, t).unwrap().success)
        .count();
    let elapsed = start.elapsed().as_secs_f64();
    let pass = hits == trials as usize && elapsed < 10.0;
    report(
        2,
        pass,
        &format!("{hits}/{trials} exact under saturation, {elapsed:.1}s < 10s"),
    );
}

#[test]
fn a03_realistic_link_peak_significance_and_recovery() {
    let start = Instant::now();
    let cfg = RunConfig {
        loss_db: 25.0,
        bcr_hz: 1e4,
        n_alice: 1_000_000,
        d_max_bins: 10_000,
        true_offset: Some(5_000),
        base_seed: 300,
        ..RunConfig::default()
    };
    let mut sigmas = Vec::new();
    let mut hits = 0;
    for t in 0..20 {
        let row = run_trial(&cfg, t).unwrap();
        sigmas.push(row.sigma_multiple);
        hits += row.success as u32;
    }
    sigmas.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let median = 0.5 * (sigmas[9] + sigmas[10]);
    let elapsed = start.elapsed().as_secs_f64();
    let pass = (5.0..=9.0).contains(&median) && hits >= 19 && elapsed < 120.0;
    report(
        3,
        pass,
        &format!(
            "median sigma {median:.2} (window [5, 9]), {hits}/20 exact (need >= 19), \
             {elapsed:.1}s < 120s"
        ),
    );
}

#[test]
fn a04_block_size_sets_the_reliable_regime() {
    let start = Instant::now();
    let large = RunConfig {
        loss_db: 25.0,
        bcr_hz: 1e3,
        n_alice: 1_000_000,
        d_max_bins: 10_000,
        base_seed: 400,
        ..RunConfig::default()
    };
    let small = RunConfig {
        n_alice: 50_000,
        base_seed: 401,
        ..large.clone()
    };
    let rate_large = success_rate(&large, 100);
    let rate_small = success_rate(&small, 100);
    let elapsed = start.elapsed().as_secs_f64();
    let pass = rate_large >= 0.95 && rate_small <= 0.5 && elapsed < 300.0;
    report(
        4,
        pass,
        &format!(
            "million-bin blocks {rate_large:.2} >= 0.95, fifty-kilobin blocks {rate_small:.2} \
             <= 0.5, {elapsed:.0}s < 300s"
        ),
    );
}

#[test]
fn a05_recovery_survives_heavy_background() {
    let start = Instant::now();
    let cfg = RunConfig {
        loss_db: 25.0,
        bcr_hz: 5e4,
        n_alice: 1_000_000,
        d_max_bins: 10_000,
        base_seed: 500,
        ..RunConfig::default()
    };
    let rate = success_rate(&cfg, 100);
    let elapsed = start.elapsed().as_secs_f64();
    let pass = rate >= 0.5 && elapsed < 300.0;
    report(
        5,
        pass,
        &format!("50 kHz background: rate {rate:.2} >= 0.5, {elapsed:.0}s < 300s"),
    );
}

#[test]
fn a06_bright_pulses_extend_the_loss_range() {
    let start = Instant::now();

    // Point comparison at 40 dB.
    let plain = RunConfig {
        loss_db: 40.0,
        bcr_hz: 1e3,
        n_alice: 1_000_000,
        d_max_bins: 10_000,
        base_seed: 600,
        ..RunConfig::default()
    };
    let bright = RunConfig {
        sync_mu: Some(50.0),
        sync_probability: 0.01,
        base_seed: 601,
        ..plain.clone()
    };
    let rate_plain = success_rate(&plain, 100);
    let rate_bright = success_rate(&bright, 100);

    // Where each protocol's success rate crosses 0.5 along a loss sweep.
    let grid: Vec<f64> = (0..=20).map(|k| 30.0 + 2.0 * k as f64).collect();
    let crossing = |fixed: RunConfig| -> f64 {
        let spec = SweepSpec::new(SweptParam::ChannelLossDb, grid.clone(), 50, fixed).unwrap();
        let result = run_sweep(&spec, 1).unwrap();
        grid.iter()
            .zip(&result.per_point_score)
            .filter(|(_, &score)| score >= 0.5)
            .map(|(&loss, _)| loss)
            .fold(f64::NEG_INFINITY, f64::max)
    };
    let cross_plain = crossing(RunConfig {
        base_seed: 602,
        ..plain.clone()
    });
    let cross_bright = crossing(RunConfig {
        base_seed: 603,
        ..bright.clone()
    });
    let gap = cross_bright - cross_plain;

    let elapsed = start.elapsed().as_secs_f64();
    let pass = rate_plain <= 0.2 && rate_bright >= 0.9 && gap >= 13.0 && elapsed < 1200.0;
    report(
        6,
        pass,
        &format!(
            "at 40 dB: plain {rate_plain:.2} <= 0.2, bright {rate_bright:.2} >= 0.9; \
             0.5-score crossings {cross_plain} dB vs {cross_bright} dB, gap {gap} dB >= 13 dB; \
             {elapsed:.0}s < 1200s"
        ),
    );
}

#[test]
fn a07_synchronization_key_rate_penalty_arithmetic() {
    let with_dead_time = key_rate_penalty(0.01, 0.01, 25.0);
    let occupancy_only = key_rate_penalty(0.01, 0.0, 0.0);
    let pass = with_dead_time == 0.0125 && occupancy_only == 0.01;
    report(
        7,
        pass,
        &format!(
            "penalty(0.01, 0.01, 25) = {with_dead_time} == 0.0125 exactly, \
                  penalty(0.01, 0, 0) = {occupancy_only} == 0.01 exactly"
        ),
    );
}

#[test]
fn a08_transform_budget_arithmetic() {
    let budget = HardwareBudget::default();
    let (bins, seconds) = max_offset_for_transform(50_000_000, &budget).unwrap();
    let length = required_transform_length(500_000, 7_500_000);
    let pass = bins == 42_108_864 && (seconds - 16.84e-3).abs() <= 0.01e-3 && length < (1 << 24);
    report(
        8,
        pass,
        &format!(
            "50e6-bin block: {bins} bins (== 42108864), {:.4} ms (16.84 +/- 0.01); \
             0.5e6 + 2 * 7.5e6 = {length} < 2^24",
            seconds * 1e3
        ),
    );
}

#[test]
fn a09_drift_budgets() {
    let smear_small = syntonization_smear(1.0, 1_000_000);
    let smear_large = syntonization_smear(1.0, 50_000_000);
    let table = build_intensity_table(0.5, 0.25, 0.7, 0.3, None).unwrap();
    let channel = ChannelConfig::new(25.0, 0.0).unwrap();
    let (_, lock_limit) = arrival_lock_limit(&table, &channel, 1.0, 10.0).unwrap();
    let pass = smear_small == 1.0 && smear_large == 50.0 && (42.0..=46.0).contains(&lock_limit);
    report(
        9,
        pass,
        &format!(
            "smear(1 ppm): {smear_small} bin and {smear_large} bins exactly; \
             lock limit {lock_limit:.2} dB (window [42, 46])"
        ),
    );
}

#[test]
fn a10_frequency_search_round_trip() {
    let start = Instant::now();
    let deltas = [1.0, -1.0, 0.5, -0.5];
    let grid: Vec<f64> = (-5..=5).map(|k| k as f64 * 0.25).collect();
    let mut hits = 0;
    for t in 0..100u64 {
        let injected = deltas[(t % 4) as usize];
        // The drift relabels bin j to round(j * (1 + delta * 1e-6)), so a
        // 0.5 ppm drift only moves clicks past bin 2e6 * 0.25 = 1e6. The
        // search range must reach well beyond that threshold or the drift
        // is invisible to integer bins; d_max = 1e5 with offsets in
        // [3e4, 7e4] leaves >= 1.3e5 bins of drifted record to lock onto.
        let cfg = RunConfig {
            loss_db: 25.0,
            bcr_hz: 1e3,
            n_alice: 1_000_000,
            d_max_bins: 100_000,
            true_offset: Some(30_000 + (t as i64 * 1009) % 40_001),
            delta_ppm: injected,
            delta_grid_ppm: grid.clone(),
            base_seed: 1000,
            ..RunConfig::default()
        };
        let out = run_trial_detailed(&cfg, t).unwrap();
        let delta_ok = (out.estimate.delta_ppm() - injected).abs() <= 0.25 + 1e-9;
        let offset_ok = (out.row.recovered_offset_bins - out.row.true_offset_bins).abs() <= 1;
        hits += (delta_ok && offset_ok) as u32;
    }
    let elapsed = start.elapsed().as_secs_f64();
    let pass = hits >= 95 && elapsed < 600.0;
    report(
        10,
        pass,
        &format!(
            "injected +/-1 and +/-0.5 ppm, 0.25 ppm grid: {hits}/100 within one step and \
             one bin (need >= 95), {elapsed:.0}s < 600s"
        ),
    );
}

#[test]
fn a11_sweep_output_is_schedule_independent() {
    let dir = tempfile::tempdir().unwrap();
    let config_path = dir.path().join("sweep.conf");
    std::fs::write(
        &config_path,
        "n_alice = 20000\nd_max_bins = 200\nbase_seed = 1100\n\
         sweep_param = channel_loss_db\nsweep_grid = 10, 20, 45\ntrials_per_point = 5\n",
    )
    .unwrap();
    let run_with = |threads: &str, out: &std::path::Path| {
        let status = std::process::Command::new(env!("CARGO_BIN_EXE_decoy-timesync"))
            .args([
                "--config",
                config_path.to_str().unwrap(),
                "--threads",
                threads,
                "--out",
                out.to_str().unwrap(),
                "sweep",
            ])
            .output()
            .unwrap();
        assert!(
            status.status.success(),
            "{}",
            String::from_utf8_lossy(&status.stderr)
        );
        std::fs::read(out).unwrap()
    };
    let one = run_with("1", &dir.path().join("one.csv"));
    let four = run_with("4", &dir.path().join("four.csv"));
    let pass = one == four && !one.is_empty();
    report(
        11,
        pass,
        &format!(
            "{} bytes of CSV identical across --threads 1 and --threads 4",
            one.len()
        ),
    );
}
