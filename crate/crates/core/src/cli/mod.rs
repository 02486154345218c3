//! Command-line front end.

pub mod config;
pub mod experiments;
pub mod output;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, ValueEnum};

use config::ExperimentConfig;
use experiments::{run_command, Outcome, Status};
use output::{header_line, json_bytes, write_file, TOOL_VERSION};

pub const EXIT_USAGE: i32 = 64;
pub const EXIT_CONFIG: i32 = 65;
pub const EXIT_IO: i32 = 74;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    Validate,
    Orbit,
    Exponent,
    Limitset,
    Hdim,
    Psmeasure,
    Shadowcheck,
    Crosscheck,
    Triangleconst,
    Rigidity,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Validate => "validate",
            Command::Orbit => "orbit",
            Command::Exponent => "exponent",
            Command::Limitset => "limitset",
            Command::Hdim => "hdim",
            Command::Psmeasure => "psmeasure",
            Command::Shadowcheck => "shadowcheck",
            Command::Crosscheck => "crosscheck",
            Command::Triangleconst => "triangleconst",
            Command::Rigidity => "rigidity",
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "adsqf", version, about = "Orbit counting, limit sets and Patterson-Sullivan measures for AdS³ quasi-Fuchsian groups")]
pub struct Args {
    #[arg(value_enum)]
    pub command: Command,
    /// Experiment configuration (JSON).
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory; overrides `out_dir` in the config.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub max_word_len: Option<usize>,
}

/// Parses arguments, runs the command and writes its files; returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args = match Args::try_parse_from(args) {
        Ok(a) => a,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    init_threads();
    match run(&args) {
        Ok(code) => code,
        Err((code, msg)) => {
            eprintln!("adsqf: {msg}");
            code
        }
    }
}

/// Honours `ADSQF_THREADS` once per process.
fn init_threads() {
    if let Some(n) = std::env::var("ADSQF_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
}

/// Loads the config file and applies command-line overrides.
pub fn load_config(args: &Args) -> Result<ExperimentConfig, (i32, String)> {
    let text = std::fs::read_to_string(&args.config)
        .map_err(|e| (EXIT_IO, format!("cannot read {}: {e}", args.config.display())))?;
    let mut cfg: ExperimentConfig =
        serde_json::from_str(&text).map_err(|e| (EXIT_CONFIG, format!("malformed config: {e}")))?;
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(l) = args.max_word_len {
        cfg.max_word_len = l;
    }
    if let Some(d) = &args.out_dir {
        cfg.out_dir = Some(d.display().to_string());
    }
    cfg.check().map_err(|e| (EXIT_CONFIG, format!("malformed config: {e}")))?;
    Ok(cfg)
}

fn run(args: &Args) -> Result<i32, (i32, String)> {
    let cfg = load_config(args)?;
    let name = args.command.name();
    let outcome = run_command(name, &cfg).map_err(|f| (f.code, f.message))?;
    let dir = PathBuf::from(cfg.out_dir.clone().unwrap_or_else(|| ".".into()));
    emit(&dir, name, &cfg, &outcome).map_err(|e| (EXIT_IO, format!("cannot write to {}: {e}", dir.display())))?;
    if outcome.status != Status::Ok {
        eprintln!("adsqf: {name} finished with status {:?}", outcome.status);
    }
    Ok(outcome.status.exit_code())
}

/// Writes `<command>.json` and every table; returns the written file names.
pub fn emit(dir: &std::path::Path, name: &str, cfg: &ExperimentConfig, outcome: &Outcome) -> std::io::Result<Vec<PathBuf>> {
    let hash = cfg.hash();
    let report = serde_json::json!({
        "command": name,
        "config_hash": hash,
        "tool_version": TOOL_VERSION,
        "seed": cfg.seed,
        "status": outcome.status,
        "result": outcome.report,
    });
    let mut written = vec![write_file(dir, &format!("{name}.json"), &json_bytes(&report))?];
    let header = header_line(&hash, name);
    for (file, table) in &outcome.tables {
        written.push(write_file(dir, file, &table.to_bytes(&header))?);
    }
    Ok(written)
}
