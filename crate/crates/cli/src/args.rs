use std::path::PathBuf;

use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand, ValueEnum};
use commex_core::reduce::StateMode;
use commex_fetch::ArchiveKind;
use ipnet::IpNet;

#[derive(Debug, Parser)]
#[command(name = "commex", version, about = "BGP community exploration toolkit")]
pub struct Cli {
    /// Worker threads for per-file work; output order does not depend on it.
    #[arg(long, global = true, default_value_t = default_jobs(), value_parser = clap::value_parser!(u16).range(1..))]
    pub jobs: u16,
    /// Directory receiving reports and tables.
    #[arg(long, short, global = true, default_value = "commex-out")]
    pub output: PathBuf,
    /// Encoding of record-level outputs.
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    #[command(subcommand)]
    pub command: Command,
}

fn default_jobs() -> u16 {
    std::thread::available_parallelism().map(|n| n.get().min(64) as u16).unwrap_or(1)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Jsonl,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Jsonl => "jsonl",
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Download archive files into the local cache.
    Fetch(FetchArgs),
    /// Label every announcement and count announcement types.
    Classify(ClassifyArgs),
    /// Partition community values by beacon phase.
    Beacon(BeaconArgs),
    /// Write archives without unnecessary update messages.
    Reduce(ReduceArgs),
    /// Run lab scenarios and the experiment matrix.
    Simulate(SimulateArgs),
}

#[derive(Debug, Args)]
pub struct FetchArgs {
    /// Collector name, e.g. rrc00 or route-views2.
    #[arg(long, required = true)]
    pub collector: Vec<String>,
    #[arg(long, default_value = "updates", value_parser = parse_kind)]
    pub kind: ArchiveKind,
    /// First UTC day (YYYY-MM-DD).
    #[arg(long)]
    pub start: NaiveDate,
    /// Number of days from `--start`.
    #[arg(long, default_value_t = 1)]
    pub days: u32,
    /// Last hour (exclusive) on the final day, for partial days.
    #[arg(long, value_parser = clap::value_parser!(u32).range(0..=24))]
    pub until_hour: Option<u32>,
    #[arg(long, env = "COMMEX_CACHE_DIR", default_value = "commex-cache")]
    pub cache_dir: PathBuf,
    /// Only report what the cache already holds.
    #[arg(long)]
    pub offline: bool,
    #[arg(long, default_value_t = 4, value_parser = clap::value_parser!(u16).range(1..=32))]
    pub parallelism: u16,
    #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u32).range(1..))]
    pub attempts: u32,
    #[arg(long)]
    pub ripe_root: Option<String>,
    #[arg(long)]
    pub routeviews_root: Option<String>,
}

fn parse_kind(s: &str) -> Result<ArchiveKind, String> {
    s.parse()
}

#[derive(Debug, Args)]
pub struct InputArgs {
    /// MRT files (plain, gzip or bzip2) or `.jsonl` record files.
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    /// Collector name for session keys; by default taken from the path.
    #[arg(long)]
    pub collector: Option<String>,
}

#[derive(Debug, Args)]
pub struct ClassifyArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// RIR delegated-extended statistics files for the allocation filter.
    #[arg(long = "alloc-table", value_name = "FILE")]
    pub alloc_tables: Vec<PathBuf>,
    /// Skip the allocation filter.
    #[arg(long, conflicts_with = "alloc_tables")]
    pub no_alloc_filter: bool,
    /// Carry classifier state across files of one collector and day.
    #[arg(long, default_value = "warm", value_parser = parse_state)]
    pub state: StateMode,
}

fn parse_state(s: &str) -> Result<StateMode, String> {
    s.parse()
}

#[derive(Debug, Args)]
pub struct BeaconArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Beacon list (`prefix [name]` per line); defaults to the RIPE RIS beacons.
    #[arg(long)]
    pub beacons: Option<PathBuf>,
    /// Write a per-type cumulative series for this beacon prefix.
    #[arg(long = "case")]
    pub cases: Vec<IpNet>,
    /// Restrict case series to announcements with this exact AS path.
    #[arg(long, requires = "cases")]
    pub case_path: Option<String>,
}

#[derive(Debug, Args)]
pub struct ReduceArgs {
    /// MRT files; output goes to `<output>/reduced/<collector>/<name>`.
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    #[arg(long, default_value = "warm", value_parser = parse_state)]
    pub state: StateMode,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Built-in scenario (exp1..exp4) or path to a scenario JSON file.
    #[arg(long, required_unless_present = "matrix")]
    pub scenario: Option<String>,
    /// Profile for every router, overriding the scenario.
    #[arg(long)]
    pub profile: Option<String>,
    /// Router whose received messages are exported as MRT.
    #[arg(long, default_value = "C1")]
    pub collector_router: String,
    /// Print the profile by experiment table.
    #[arg(long)]
    pub matrix: bool,
}
