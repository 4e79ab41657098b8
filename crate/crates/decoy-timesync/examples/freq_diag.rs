//! Diagnostic dump for the frequency-search round trip: per-trial injected
//! delta, recovered delta, offset error, and peak significance.

use decoy_timesync::config::RunConfig;
use decoy_timesync::sweep::run_trial_detailed;

fn main() {
    let deltas = [1.0, -1.0, 0.5, -0.5];
    let grid: Vec<f64> = (-5..=5).map(|k| k as f64 * 0.25).collect();
    let trials: u64 = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(24);
    let mut fails = 0;
    for t in 0..trials {
        let injected = deltas[(t % 4) as usize];
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
        let got = out.estimate.delta_ppm();
        let derr = got - injected;
        let oerr = out.row.recovered_offset_bins - out.row.true_offset_bins;
        let ok = derr.abs() <= 0.25 + 1e-9 && oerr.abs() <= 1;
        fails += (!ok) as u32;
        println!(
            "t={t:3} inj={injected:+.2} got={got:+.2} derr={derr:+.2} oerr={oerr:+4} \
             sigma={:6.2} {}",
            out.row.sigma_multiple,
            if ok { "ok" } else { "FAIL" }
        );
    }
    println!("fails: {fails}/{trials}");
}
