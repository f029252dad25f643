//! `bsz`: simulations, verification and the coupling experiment from the
//! command line. Exit codes: 0 success, 1 failed verification, 2 bad
//! configuration or usage, 3 simulation or I/O error.

mod args;
mod coupling;
mod output;
mod simulate;
mod verify;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};

/// Why a command stopped early.
#[derive(Debug)]
pub enum Failure {
    Config(anyhow::Error),
    Runtime(anyhow::Error),
    TestsFailed(usize),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::TestsFailed(_) => 1,
            Failure::Config(_) => 2,
            Failure::Runtime(_) => 3,
        }
    }

    pub fn config(msg: impl Into<String>) -> Self {
        Failure::Config(anyhow::anyhow!(msg.into()))
    }
}

impl From<bs_coalescent::Error> for Failure {
    fn from(e: bs_coalescent::Error) -> Self {
        use bs_coalescent::Error as E;
        match e {
            E::Config(_) | E::UnknownTest(_) => Failure::Config(e.into()),
            other => Failure::Runtime(other.into()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Runtime(e.into())
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Runtime(e.into())
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(a) => simulate::run(&a),
        Command::Verify(a) => verify::run(&a),
        Command::Coupling(a) => coupling::run(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            match &f {
                Failure::Config(e) => eprintln!("error: {e:#}\n\nFor usage, try `bsz --help`."),
                Failure::Runtime(e) => eprintln!("error: {e:#}"),
                Failure::TestsFailed(k) => eprintln!("{k} test(s) failed"),
            }
            ExitCode::from(f.code())
        }
    }
}
