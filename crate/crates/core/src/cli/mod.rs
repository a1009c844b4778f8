//! Command-line front end.
//!
//! Exit codes: `0` success, `1` I/O failure, `2` invalid config or
//! arguments, `3` numerical-contract violation (Fock truncation, open
//! motional loop, singular tomography system, state lost from the
//! subspace).
//!
//! CSV columns per experiment kind: `ms-scan` and `cp-scan` write
//! `ms_scan.csv` / `cp_scan.csv` with `fraction,infidelity`, the relative
//! gate-time error and the gate infidelity with the motion traced out.
//! The other kinds write no CSV.

mod config;
mod experiments;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::dfs::LogicalRegister;
use crate::gates::{compile_cnot, GateParams};

pub use config::{config_schema, CoherenceOptions, ConfigError, ExperimentConfig, ExperimentKind, ScanOptions};
pub use experiments::{config_hash, run_experiment, RunOutput};

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

const AFTER_HELP: &str = "\
CSV columns:
  ms-scan, cp-scan   fraction,infidelity  (relative gate-time error, gate infidelity)
  bell, cnot-tomo, coherence write report.json (and matrices.json) only.

Exit codes: 0 ok, 1 I/O error, 2 invalid config, 3 numerical-contract violation.";

#[derive(Debug, Parser)]
#[command(name = "dfsqc", version, about = "Logical gates, noise and tomography for ion-pair encoded qubits", after_help = AFTER_HELP)]
pub struct Cli {
    /// Worker threads for Monte-Carlo work (default: all cores).
    #[arg(long, global = true, env = "DFSQC_THREADS")]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the experiment described by a config file.
    Run {
        config: PathBuf,
        /// Override the config seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Check a config file without running it.
    Validate { config: PathBuf },
    /// Print the compiled CNOT pulse sequence as JSON.
    DumpSequence {
        #[arg(long, default_value_t = 0)]
        control: usize,
        #[arg(long, default_value_t = 1)]
        target: usize,
        /// Number of logical qubits in a linear register.
        #[arg(long, default_value_t = 2)]
        qubits: usize,
    },
    /// Print the JSON schema for config files.
    Schema,
}

/// Writes `contents` to `path` through a temporary file in the same
/// directory and a rename.
pub fn write_atomic(path: &Path, contents: &str) -> std::io::Result<()> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    let name = path
        .file_name()
        .ok_or_else(|| std::io::Error::new(std::io::ErrorKind::InvalidInput, "no file name"))?;
    let tmp = dir.join(format!(".{}.tmp-{}", name.to_string_lossy(), std::process::id()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents.as_bytes())?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)
}

fn load(path: &Path) -> Result<(ExperimentConfig, Vec<u8>), i32> {
    let raw = fs::read(path).map_err(|e| {
        eprintln!("error: cannot read {}: {e}", path.display());
        EXIT_IO
    })?;
    let text = String::from_utf8(raw.clone()).map_err(|_| {
        eprintln!("error: {} is not UTF-8", path.display());
        EXIT_CONFIG
    })?;
    let config = ExperimentConfig::parse(&text).map_err(|e| {
        eprintln!("error: {}: {e}", path.display());
        EXIT_CONFIG
    })?;
    Ok((config, raw))
}

fn run(path: &Path, seed: Option<u64>) -> i32 {
    let (mut config, raw) = match load(path) {
        Ok(v) => v,
        Err(code) => return code,
    };
    if let Some(s) = seed {
        config.seed = s;
    }
    let output = match run_experiment(&config, &raw) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return if e.is_numerical() { EXIT_NUMERICAL } else { EXIT_CONFIG };
        }
    };
    let dir = if config.output.is_absolute() {
        config.output.clone()
    } else {
        path.parent().unwrap_or_else(|| Path::new(".")).join(&config.output)
    };
    if let Err(e) = fs::create_dir_all(&dir) {
        eprintln!("error: cannot create {}: {e}", dir.display());
        return EXIT_IO;
    }
    for (name, contents) in &output.files {
        let target = dir.join(name);
        if let Err(e) = write_atomic(&target, contents) {
            eprintln!("error: cannot write {}: {e}", target.display());
            return EXIT_IO;
        }
        println!("{}", target.display());
    }
    EXIT_OK
}

fn dump_sequence(control: usize, target: usize, qubits: usize) -> i32 {
    let reg = LogicalRegister::linear(qubits);
    match compile_cnot(&reg, control, target, &GateParams::default()) {
        Ok(seq) => {
            println!("{}", seq.to_json());
            eprintln!(
                "{} ops, total duration {:.3} us",
                seq.ops.len(),
                seq.total_duration() * 1e6
            );
            EXIT_OK
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_CONFIG
        }
    }
}

/// Executes a parsed command line and returns the process exit code.
pub fn execute(cli: Cli) -> i32 {
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be >= 1");
            return EXIT_CONFIG;
        }
        // a second build in the same process is harmless; the first pool wins
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    match cli.command {
        Command::Run { config, seed } => run(&config, seed),
        Command::Validate { config } => match load(&config) {
            Ok((c, _)) => {
                println!("{}: ok ({})", config.display(), c.experiment.name());
                EXIT_OK
            }
            Err(code) => code,
        },
        Command::DumpSequence {
            control,
            target,
            qubits,
        } => dump_sequence(control, target, qubits),
        Command::Schema => {
            print!("{}", config_schema());
            EXIT_OK
        }
    }
}
