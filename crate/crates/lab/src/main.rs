use clap::Parser;
use spdv_lab::cli::{run, Cli};

fn main() {
    std::process::exit(run(&Cli::parse()));
}
