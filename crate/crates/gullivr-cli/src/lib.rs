//! Command-line runner: loads a scenario config, runs simulations and
//! targeting trials, compares policies, and writes telemetry files.

use clap::{Args, Parser, Subcommand};
use gullivr_core::agent::{run_scenario, targeting_trial, Policy};
use gullivr_core::error::Error;
use gullivr_core::locomotion::scale_for_state;
use gullivr_core::scenario::{Scenario, ScenarioConfig};
use gullivr_core::telemetry::{self, classify_hit, fmt_f64, EventKind, Space, TelemetryLog};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

#[derive(Debug, Parser)]
#[command(name = "gullivr", about = "Headless giant-mode locomotion simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a scripted-agent scenario and write telemetry
    Simulate(SimulateArgs),
    /// Run the GM->NM targeting-precision protocol
    Targeting(TargetingArgs),
    /// Run the scenario under both policies across seeds and tabulate
    Compare(CompareArgs),
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Scenario configuration file (TOML)
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory
    #[arg(long)]
    pub out: PathBuf,
    /// Override the configured tick cap
    #[arg(long)]
    pub ticks_cap: Option<u64>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long)]
    pub seed: u64,
    /// gullivr or teleport
    #[arg(long)]
    pub policy: String,
}

#[derive(Debug, Args)]
pub struct TargetingArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long)]
    pub seed: u64,
    /// Aim noise sigma in meters; overrides the config value
    #[arg(long)]
    pub sigma: Option<f64>,
    /// GM scale for the trial; defaults to the default game state's scale
    #[arg(long)]
    pub gm_scale: Option<f64>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Comma-separated seed list
    #[arg(long, value_delimiter = ',')]
    pub seeds: Vec<u64>,
}

/// Parses argv and runs; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let result = match cli.command {
        Command::Simulate(a) => cmd_simulate(&a),
        Command::Targeting(a) => cmd_targeting(&a),
        Command::Compare(a) => cmd_compare(&a),
    };
    match result {
        Ok(()) => 0,
        Err(e @ Error::Validation(_)) => {
            eprintln!("{e}");
            2
        }
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn load_scenario(common: &CommonArgs) -> Result<Scenario, Error> {
    let cfg = ScenarioConfig::load(&common.config)?;
    let base = common
        .config
        .parent()
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from("."));
    let mut scn = cfg.build(&base)?;
    if let Some(cap) = common.ticks_cap {
        scn.sim.ticks_cap = cap;
    }
    Ok(scn)
}

fn parse_policy(s: &str) -> Result<Policy, Error> {
    Policy::from_label(s).ok_or_else(|| {
        Error::Config(format!(
            "unknown policy '{s}' (expected gullivr or teleport)"
        ))
    })
}

pub fn cmd_simulate(args: &SimulateArgs) -> Result<(), Error> {
    let scn = load_scenario(&args.common)?;
    let policy = parse_policy(&args.policy)?;
    let log = run_scenario(&scn, policy, args.seed)?;
    let stem = format!("{}_{}_{}", scn.id, policy.label(), args.seed);
    let files = telemetry::export(&log, &args.common.out, &stem)?;
    for f in &files {
        println!("wrote {}", f.display());
    }
    Ok(())
}

pub fn cmd_targeting(args: &TargetingArgs) -> Result<(), Error> {
    let scn = load_scenario(&args.common)?;
    let sigma = args.sigma.unwrap_or(scn.agent.aim_noise_sigma);
    let gm_scale = match args.gm_scale {
        Some(s) => s,
        None => scale_for_state(&scn.agent.default_state, &scn.scales)?,
    };
    let records = targeting_trial(&scn, gm_scale, sigma, args.seed)?;
    let mut csv = String::from("target_index,attempt,miss_distance,zone\n");
    let mut sum = 0.0;
    for r in &records {
        let radius = scn.targets.list[r.target_index].radius;
        let _ = writeln!(
            csv,
            "{},{},{},{}",
            r.target_index,
            r.attempt,
            fmt_f64(r.miss_distance),
            classify_hit(r.miss_distance, radius).label()
        );
        sum += r.miss_distance;
    }
    let n = records.len() as f64;
    let mean = if records.is_empty() { 0.0 } else { sum / n };
    let var = if records.len() < 2 {
        0.0
    } else {
        records
            .iter()
            .map(|r| (r.miss_distance - mean).powi(2))
            .sum::<f64>()
            / (n - 1.0)
    };
    let mut summary = String::new();
    let _ = writeln!(summary, "schema_version = {}", telemetry::SCHEMA_VERSION);
    let _ = writeln!(summary, "scenario_id = {:?}", scn.id);
    let _ = writeln!(summary, "seed = {}", args.seed);
    let _ = writeln!(summary, "gm_scale = {}", fmt_f64(gm_scale));
    let _ = writeln!(summary, "sigma = {}", fmt_f64(sigma));
    let _ = writeln!(summary, "attempts = {}", records.len());
    let _ = writeln!(summary, "mean_miss_m = {}", fmt_f64(mean));
    let _ = writeln!(summary, "std_miss_m = {}", fmt_f64(var.sqrt()));
    let stem = format!("{}_targeting_{}", scn.id, args.seed);
    let csv_path = args.common.out.join(format!("{stem}_misses.csv"));
    let sum_path = args.common.out.join(format!("{stem}_summary.toml"));
    telemetry::write_file(&csv_path, &csv)?;
    telemetry::write_file(&sum_path, &summary)?;
    println!("wrote {}", csv_path.display());
    println!("wrote {}", sum_path.display());
    Ok(())
}

struct PolicyStats {
    m_per_min: Vec<f64>,
    physical_m: Vec<f64>,
    virtual_m: Vec<f64>,
    transitions: usize,
    teleports: usize,
    resets: usize,
}

fn stats_for(log: &TelemetryLog) -> Result<(f64, f64, f64), Error> {
    Ok((
        log.meters_per_minute()?,
        log.path_length(Space::Physical)?,
        log.path_length(Space::Virtual)?,
    ))
}

pub fn cmd_compare(args: &CompareArgs) -> Result<(), Error> {
    if args.seeds.is_empty() {
        return Err(Error::Validation(vec![
            "compare needs at least one seed".into()
        ]));
    }
    let scn = load_scenario(&args.common)?;
    let mut rows = String::from(
        "policy,seeds,mean_physical_m_per_min,mean_physical_path_m,mean_virtual_path_m,transitions,teleports,resets\n",
    );
    for policy in [Policy::Gullivr, Policy::Teleport] {
        let mut acc = PolicyStats {
            m_per_min: Vec::new(),
            physical_m: Vec::new(),
            virtual_m: Vec::new(),
            transitions: 0,
            teleports: 0,
            resets: 0,
        };
        for &seed in &args.seeds {
            let log = run_scenario(&scn, policy, seed)?;
            let (mpm, pm, vm) = stats_for(&log)?;
            acc.m_per_min.push(mpm);
            acc.physical_m.push(pm);
            acc.virtual_m.push(vm);
            acc.transitions += log.count_events(EventKind::TransitionBegin);
            acc.teleports += log.count_events(EventKind::Teleport);
            acc.resets += log.count_events(EventKind::Reset);
        }
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        let _ = writeln!(
            rows,
            "{},{},{},{},{},{},{},{}",
            policy.label(),
            args.seeds.len(),
            fmt_f64(mean(&acc.m_per_min)),
            fmt_f64(mean(&acc.physical_m)),
            fmt_f64(mean(&acc.virtual_m)),
            acc.transitions,
            acc.teleports,
            acc.resets,
        );
    }
    let path = args.common.out.join(format!("{}_compare.csv", scn.id));
    telemetry::write_file(&path, &rows)?;
    println!("wrote {}", path.display());
    print!("{rows}");
    Ok(())
}
