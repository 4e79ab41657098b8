//! Times one full-size recovery (10^6-bin pattern, +/-10^4-bin search range).

use decoy_timesync::channel::{simulate_detections, ChannelConfig};
use decoy_timesync::correlation::{cross_correlate, recover_offset};
use decoy_timesync::protocol::{generate_states, make_template, IntensityTable, TemplateMode};
use std::time::Instant;

fn main() {
    let table = IntensityTable::baseline();
    let channel = ChannelConfig::new(25.0, 1e4).unwrap();
    let t0 = Instant::now();
    let states = generate_states(&table, 1_000_000, 7).unwrap();
    let template = make_template(&states, TemplateMode::Binary, true);
    let t1 = Instant::now();
    let clicks = simulate_detections(&states, &channel, 5000, 10_000, 8).unwrap();
    let t2 = Instant::now();
    let corr = cross_correlate(&template, &clicks).unwrap();
    let est = recover_offset(&corr);
    let t3 = Instant::now();
    println!(
        "states+template {:.3}s  simulate {:.3}s  correlate {:.3}s  total {:.3}s",
        (t1 - t0).as_secs_f64(),
        (t2 - t1).as_secs_f64(),
        (t3 - t2).as_secs_f64(),
        (t3 - t0).as_secs_f64()
    );
    println!(
        "offset {}  sigma {:.2}",
        est.offset_bins, est.sigma_multiple
    );
}
