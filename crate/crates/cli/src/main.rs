//! `fluxlab`: batch front end for the fluxlattice solvers.
//!
//! Every command resolves its parameters as flags > config file >
//! defaults, echoes the result to `run.json` in the output directory and
//! writes its data files next to it.

mod commands;
mod config;
mod output;

use std::collections::BTreeMap;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Arg, ArgMatches, Command};

use crate::config::{read_config_file, CliError, CliResult, RunConfig, COMMANDS, COMMON};

fn cli() -> Command {
    let mut cmd = Command::new("fluxlab")
        .about("Hofstadter lattices with laser-induced flux: spectra, dynamics, calibration and mean-field ground states")
        .version(env!("CARGO_PKG_VERSION"))
        .arg(
            Arg::new("config")
                .long("config")
                .short('c')
                .global(true)
                .value_name("FILE")
                .value_parser(clap::value_parser!(PathBuf))
                .help("flat `key = value` file; may also name the command"),
        );
    for (name, about, params) in COMMANDS {
        let mut sub = Command::new(*name).about(*about);
        for p in params.iter().chain(COMMON) {
            sub = sub.arg(
                Arg::new(p.key)
                    .long(p.key)
                    .value_name("VALUE")
                    .help(format!("{} [default: {}]", p.help, p.default)),
            );
        }
        cmd = cmd.subcommand(sub);
    }
    cmd
}

fn flags_of(m: &ArgMatches) -> BTreeMap<String, String> {
    m.ids()
        .filter(|id| id.as_str() != "config")
        .filter_map(|id| {
            m.get_one::<String>(id.as_str())
                .map(|v| (id.as_str().to_string(), v.clone()))
        })
        .collect()
}

fn resolve(matches: &ArgMatches) -> CliResult<Option<RunConfig>> {
    let file = match matches
        .subcommand()
        .and_then(|(_, m)| m.get_one::<PathBuf>("config"))
        .or_else(|| matches.get_one::<PathBuf>("config"))
    {
        Some(path) => Some(read_config_file(path)?),
        None => None,
    };
    let (command, flags) = match matches.subcommand() {
        Some((name, m)) => (name.to_string(), flags_of(m)),
        None => match file.as_ref().and_then(|f| f.command.clone()) {
            Some(name) => (name, BTreeMap::new()),
            None => return Ok(None),
        },
    };
    if let Some(named) = file.as_ref().and_then(|f| f.command.as_deref()) {
        if named != command {
            return Err(CliError::Usage(format!(
                "config file is for command {named:?} but {command:?} was requested"
            )));
        }
    }
    let file_values = file.map(|f| f.values).unwrap_or_default();
    RunConfig::resolve(&command, &file_values, &flags).map(Some)
}

fn execute(cfg: &RunConfig) -> CliResult<String> {
    let dir = cfg.out_dir();
    output::ensure_dir(&dir)?;
    output::write_file(&dir, "run.json", &cfg.to_json())?;
    commands::run(cfg)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let args: Vec<String> = std::env::args().collect();
    let mut app = cli();
    if args.len() <= 1 {
        let _ = writeln!(std::io::stdout(), "{}", app.render_help());
        return ExitCode::SUCCESS;
    }
    let matches = match app.try_get_matches_from_mut(&args) {
        Ok(m) => m,
        Err(e) => e.exit(),
    };
    let outcome = resolve(&matches).and_then(|cfg| match cfg {
        Some(cfg) => execute(&cfg),
        None => Err(CliError::Usage("no command given (pass a subcommand or a config file naming one)".into())),
    });
    match outcome {
        Ok(summary) => {
            // a closed pipe (e.g. `| head`) is not an error
            let _ = writeln!(std::io::stdout(), "{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{e}");
            match e {
                CliError::Usage(_) => ExitCode::from(2),
                CliError::Runtime(_) => ExitCode::from(1),
            }
        }
    }
}
