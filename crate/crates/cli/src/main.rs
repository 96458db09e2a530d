mod commands;
mod selftest;
mod args;
mod table;

use std::io::Write;
use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command, RunSpec};
use table::render;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Lib(spherint::Error),
    /// The command ran to completion but an invariant check failed.
    Invariant(String),
}

impl From<spherint::Error> for CliError {
    fn from(e: spherint::Error) -> Self {
        CliError::Lib(e)
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        use spherint::Error as E;
        match self {
            CliError::Invariant(_) => 1,
            CliError::Usage(_) => 2,
            CliError::Lib(e) => match e {
                E::InvalidArgument(_) | E::InvalidMeasure(_) | E::Parse(_) => 2,
                E::Domain(_) | E::DiracDegenerate(_) | E::Branch(_) | E::Overflow(_) => 3,
                E::NoConvergence(_) | E::Precision(_) => 1,
            },
        }
    }

    fn line(&self) -> String {
        let text = match self {
            CliError::Usage(m) => format!("usage: {m}"),
            CliError::Invariant(m) => format!("invariant: {m}"),
            CliError::Lib(e) => format!("{}: {e}", e.kind()),
        };
        format!("error: {}", text.replace('\n', " "))
    }
}

fn run(cmd: &Command) -> Result<String, CliError> {
    let spec = RunSpec::from_args(cmd.args())?;
    let tables = match cmd {
        Command::Transform(_) => commands::transform(&spec)?,
        Command::Limit(_) => commands::limit(&spec)?,
        Command::Rate(_) => commands::rate(&spec)?,
        Command::Mc(_) => commands::mc(&spec)?,
        Command::Freeconv(_) => commands::freeconv(&spec)?,
        Command::Selftest(_) => {
            let (table, ok) = selftest::run(&spec.tol);
            if !ok {
                // the report is complete, so it is still emitted before failing
                print!("{}", render(cmd.name(), &[table], spec.format));
                return Err(CliError::Invariant("selftest reported failures".into()));
            }
            vec![table]
        }
    };
    Ok(render(cmd.name(), &tables, spec.format))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            if e.kind() == ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand {
                eprintln!("error: usage: a subcommand is required (transform|limit|rate|mc|freeconv|selftest)");
                return ExitCode::from(2);
            }
            let text = e.to_string();
            let first = text.lines().next().unwrap_or("invalid arguments");
            eprintln!("error: usage: {}", first.trim_start_matches("error: "));
            return ExitCode::from(2);
        }
    };
    match run(&cli.command) {
        Ok(out) => {
            let mut stdout = std::io::stdout().lock();
            if stdout.write_all(out.as_bytes()).and_then(|_| stdout.flush()).is_err() {
                return ExitCode::from(2);
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}", e.line());
            ExitCode::from(e.exit_code())
        }
    }
}
