use clap::Parser;
use dfsqc::cli::{execute, Cli};

fn main() {
    std::process::exit(execute(Cli::parse()));
}
