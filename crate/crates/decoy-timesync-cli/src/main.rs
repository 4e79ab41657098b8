//! Command-line front end: single trials, parameter sweeps, and deployment
//! budget calculators over the library's `key = value` config files.

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use decoy_timesync::config::{parse_config, RunConfig, SweepSpec};
use decoy_timesync::correlation::CorrelationSeries;
use decoy_timesync::feasibility::{
    arrival_lock_limit, buffer_bytes, max_offset_for_transform, required_transform_length,
    syntonization_smear, HardwareBudget,
};
use decoy_timesync::sweep::{run_sweep, run_trial_detailed, write_results, OutputFormat};
use std::io::Write;
use std::path::PathBuf;

#[derive(Parser)]
#[command(
    name = "decoy-timesync",
    version,
    about = "Clock-offset recovery for decoy-state QKD links: simulate, sweep, budget"
)]
struct Cli {
    /// Path to a `key = value` config file (defaults apply when omitted).
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Override the config's base seed.
    #[arg(long, global = true, value_name = "U64")]
    seed: Option<u64>,

    /// Write the result table here instead of stdout.
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,

    /// Result table encoding.
    #[arg(long, global = true, value_enum, default_value_t = FormatArg::Csv)]
    format: FormatArg,

    /// Worker threads for sweeps; 0 uses every core.
    #[arg(long, global = true, default_value_t = 0, value_name = "N")]
    threads: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

impl From<FormatArg> for OutputFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Csv => OutputFormat::Csv,
            FormatArg::Json => OutputFormat::Json,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run one seeded trial and report the recovery; --out dumps the full
    /// correlation series.
    Simulate {
        /// Trial index within the seed stream.
        #[arg(long, default_value_t = 0)]
        trial: u64,
    },
    /// Run the sweep declared in the config and emit one row per trial.
    Sweep {
        /// Permit per-point transforms beyond 2^28 points.
        #[arg(long)]
        allow_large: bool,
    },
    /// Deployment budget calculators.
    Feasibility {
        #[command(subcommand)]
        calc: FeasibilityCmd,
    },
}

#[derive(Subcommand)]
enum FeasibilityCmd {
    /// Largest searchable offset for a pattern within a transform budget.
    Transform {
        /// Pattern length in bins.
        #[arg(long)]
        n_alice: u64,
        /// Transform budget in points.
        #[arg(long, default_value_t = 1 << 27)]
        max_points: u64,
        /// Repetition rate in Hz.
        #[arg(long, default_value_t = 2.5e9)]
        rep_rate: f64,
    },
    /// Transform points needed for a pattern and search range.
    Length {
        /// Pattern length in bins.
        #[arg(long)]
        n_alice: u64,
        /// Largest searched offset in bins.
        #[arg(long)]
        d_max: u64,
    },
    /// Pattern smear in bins for a given drift and block size.
    Smear {
        /// Clock-frequency offset in ppm.
        #[arg(long)]
        delta_ppm: f64,
        /// Pattern length in bins.
        #[arg(long)]
        n_alice: u64,
    },
    /// Deepest loss at which drift tracking keeps enough detections per
    /// one-bin shift. Uses the intensity table and channel from the config.
    Lock {
        /// Clock-frequency offset in ppm.
        #[arg(long, default_value_t = 1.0)]
        delta_ppm: f64,
        /// Detections required per one-bin arrival shift.
        #[arg(long, default_value_t = 10.0)]
        min_detections: f64,
    },
    /// Receiver buffer for one block plus classical-channel latency.
    Buffer {
        /// Pattern length in bins.
        #[arg(long)]
        n_alice: u64,
        /// Storage per bin in bytes.
        #[arg(long, default_value_t = 1.0)]
        bytes_per_bin: f64,
        /// Classical round-trip latency in seconds.
        #[arg(long, default_value_t = 0.0)]
        latency_s: f64,
        /// Repetition rate in Hz.
        #[arg(long, default_value_t = 2.5e9)]
        rep_rate: f64,
    },
}

fn main() {
    if let Err(e) = run() {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}

fn run() -> Result<()> {
    let cli = Cli::parse();
    let mut cfg = match &cli.config {
        Some(path) => {
            parse_config(path).with_context(|| format!("cannot load config {}", path.display()))?
        }
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.base_seed = seed;
    }

    match &cli.command {
        Command::Simulate { trial } => simulate(&cli, cfg, *trial),
        Command::Sweep { allow_large } => sweep(&cli, cfg, *allow_large),
        Command::Feasibility { calc } => feasibility(&cli, &cfg, calc),
    }
}

fn simulate(cli: &Cli, cfg: RunConfig, trial: u64) -> Result<()> {
    let output = run_trial_detailed(&cfg, trial)?;
    let row = &output.row;
    println!("trial: {}", row.trial_index);
    println!("seed: {}", row.seed);
    println!("true offset: {} bins", row.true_offset_bins);
    println!(
        "recovered offset: {} bins ({})",
        row.recovered_offset_bins,
        if row.success { "exact" } else { "MISS" }
    );
    println!("frequency factor: {:.9}", output.estimate.freq_factor);
    println!("sigma multiple: {:.3}", row.sigma_multiple);
    println!("detections: {}", row.detections);
    if let Some(path) = &cli.out {
        dump_correlation(&output.correlation, cli.format, path)
            .with_context(|| format!("cannot write {}", path.display()))?;
        println!("correlation series written to {}", path.display());
    }
    Ok(())
}

fn dump_correlation(series: &CorrelationSeries, format: FormatArg, path: &PathBuf) -> Result<()> {
    let file = std::fs::File::create(path)?;
    let mut out = std::io::BufWriter::new(file);
    match format {
        FormatArg::Csv => {
            writeln!(out, "lag,value")?;
            for lag in series.lags() {
                writeln!(out, "{lag},{:.16e}", series.value_at(lag).unwrap())?;
            }
        }
        FormatArg::Json => {
            writeln!(out, "[")?;
            let last = series.d_max() as i64;
            for lag in series.lags() {
                let sep = if lag == last { "" } else { "," };
                writeln!(
                    out,
                    "  {{\"lag\":{lag},\"value\":{:.16e}}}{sep}",
                    series.value_at(lag).unwrap()
                )?;
            }
            writeln!(out, "]")?;
        }
    }
    out.flush()?;
    Ok(())
}

fn sweep(cli: &Cli, cfg: RunConfig, allow_large: bool) -> Result<()> {
    let spec = SweepSpec::from_config(cfg)?.with_allow_large(allow_large);
    let result = run_sweep(&spec, cli.threads)?;

    eprintln!(
        "{} sweep: {} points x {} trials",
        spec.param(),
        spec.grid().len(),
        spec.trials_per_point()
    );
    for (value, score) in spec.grid().iter().zip(&result.per_point_score) {
        eprintln!("  {value}: success rate {score:.3}");
    }

    match &cli.out {
        Some(path) => {
            let file = std::fs::File::create(path)
                .with_context(|| format!("cannot write {}", path.display()))?;
            let mut out = std::io::BufWriter::new(file);
            write_results(&result.rows, cli.format.into(), &mut out)?;
            out.flush()?;
        }
        None => {
            let stdout = std::io::stdout();
            let mut out = stdout.lock();
            write_results(&result.rows, cli.format.into(), &mut out)?;
        }
    }
    Ok(())
}

fn feasibility(cli: &Cli, cfg: &RunConfig, calc: &FeasibilityCmd) -> Result<()> {
    let mut report = String::new();
    match *calc {
        FeasibilityCmd::Transform {
            n_alice,
            max_points,
            rep_rate,
        } => {
            let budget = HardwareBudget::new(max_points, rep_rate)?;
            let (bins, seconds) = max_offset_for_transform(n_alice, &budget)?;
            report.push_str(&format!("max offset: {bins} bins\n"));
            report.push_str(&format!("max offset: {:.6} ms\n", seconds * 1e3));
        }
        FeasibilityCmd::Length { n_alice, d_max } => {
            let points = required_transform_length(n_alice, d_max);
            report.push_str(&format!("required transform length: {points} points\n"));
            report.push_str(&format!(
                "next power of two: {} points\n",
                points.max(1).next_power_of_two()
            ));
        }
        FeasibilityCmd::Smear { delta_ppm, n_alice } => {
            report.push_str(&format!(
                "pattern smear: {:.6} bins\n",
                syntonization_smear(delta_ppm, n_alice)
            ));
        }
        FeasibilityCmd::Lock {
            delta_ppm,
            min_detections,
        } => {
            let table = cfg.intensity_table()?;
            let channel = cfg.channel()?;
            let (feasible, limit_db) =
                arrival_lock_limit(&table, &channel, delta_ppm, min_detections)?;
            report.push_str(&format!(
                "lock at {} dB: {}\n",
                channel.loss_db,
                if feasible { "feasible" } else { "infeasible" }
            ));
            report.push_str(&format!("loss limit: {limit_db:.1} dB\n"));
        }
        FeasibilityCmd::Buffer {
            n_alice,
            bytes_per_bin,
            latency_s,
            rep_rate,
        } => {
            let budget = HardwareBudget::new(1 << 27, rep_rate)?;
            let bytes = buffer_bytes(n_alice, bytes_per_bin, latency_s, &budget);
            report.push_str(&format!("buffer: {bytes:.0} bytes\n"));
            report.push_str(&format!("buffer: {:.3} MiB\n", bytes / (1024.0 * 1024.0)));
        }
    }
    match &cli.out {
        Some(path) => std::fs::write(path, &report)
            .with_context(|| format!("cannot write {}", path.display()))?,
        None => print!("{report}"),
    }
    Ok(())
}
