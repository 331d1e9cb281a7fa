//! Merging of `--config` TOML values into the argument list.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::parser::ValueSource;
use clap::{ArgMatches, CommandFactory};

use crate::args::Cli;

fn value_text(key: &str, value: &toml::Value) -> Result<Option<String>> {
    Ok(match value {
        toml::Value::String(s) => Some(s.clone()),
        toml::Value::Integer(i) => Some(i.to_string()),
        toml::Value::Float(f) => Some(f.to_string()),
        toml::Value::Boolean(true) => None,
        toml::Value::Array(items) => {
            let parts = items
                .iter()
                .map(|v| match v {
                    toml::Value::String(s) => Ok(s.clone()),
                    toml::Value::Integer(i) => Ok(i.to_string()),
                    toml::Value::Float(f) => Ok(f.to_string()),
                    _ => bail!("config key '{key}': arrays may hold only numbers and strings"),
                })
                .collect::<Result<Vec<_>>>()?;
            Some(parts.join(","))
        }
        _ => bail!("config key '{key}': unsupported value {value}"),
    })
}

/// Returns `argv` extended with flags taken from the subcommand's
/// `--config` file, leaving out any flag already given on the command line.
/// Arguments that clap rejects are returned unchanged so that clap reports
/// the problem itself.
pub fn merge(argv: Vec<OsString>) -> Result<Vec<OsString>> {
    let Ok(matches) = lenient_command().try_get_matches_from(&argv) else {
        return Ok(argv);
    };
    let Some((name, sub)) = matches.subcommand() else {
        return Ok(argv);
    };
    let Some(path) = sub.get_one::<PathBuf>("config") else {
        return Ok(argv);
    };
    let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
    let table: toml::Table = text.parse().with_context(|| format!("parsing config {}", path.display()))?;

    // Top-level keys first, then the subcommand table overriding them.
    let mut entries: BTreeMap<String, (toml::Value, bool)> = BTreeMap::new();
    for (key, value) in &table {
        if !value.is_table() {
            entries.insert(key.replace('_', "-"), (value.clone(), false));
        }
    }
    if let Some(section) = table.get(name) {
        let section = section
            .as_table()
            .with_context(|| format!("config key '{name}' must be a table"))?;
        for (key, value) in section {
            entries.insert(key.replace('_', "-"), (value.clone(), true));
        }
    }

    let mut injected = Vec::new();
    let command = Cli::command();
    let sub_command = command.find_subcommand(name).expect("matched subcommand exists");
    for (long, (value, strict)) in entries {
        let arg = sub_command
            .get_arguments()
            .find(|a| a.get_long() == Some(long.as_str()) && long != "config");
        let Some(arg) = arg else {
            if strict {
                bail!("config [{name}] has unknown key '{long}'");
            }
            continue;
        };
        if given_on_command_line(sub_command, sub, arg.get_id().as_str()) {
            continue;
        }
        if value == toml::Value::Boolean(false) {
            continue;
        }
        match value_text(&long, &value)? {
            Some(text) => injected.push(OsString::from(format!("--{long}={text}"))),
            None => injected.push(OsString::from(format!("--{long}"))),
        }
    }
    let mut argv = argv;
    argv.extend(injected);
    Ok(argv)
}

/// The command line interface with every argument and group optional, so
/// that required values can still come from the config file.
fn lenient_command() -> clap::Command {
    let mut command = Cli::command();
    let names: Vec<String> = command.get_subcommands().map(|s| s.get_name().to_string()).collect();
    for name in names {
        command = command.mut_subcommand(name, |mut sub| {
            let args: Vec<clap::Id> = sub.get_arguments().map(|a| a.get_id().clone()).collect();
            let groups: Vec<clap::Id> = sub.get_groups().map(|g| g.get_id().clone()).collect();
            for id in args {
                sub = sub.mut_arg(id, |a| a.required(false));
            }
            for id in groups {
                sub = sub.mut_group(id, |g| g.required(false));
            }
            sub
        });
    }
    command
}

/// True when `id`, or a member of a group containing `id`, came from the
/// command line.
fn given_on_command_line(command: &clap::Command, matches: &ArgMatches, id: &str) -> bool {
    let from_cli = |id: &str| matches.value_source(id) == Some(ValueSource::CommandLine);
    if from_cli(id) {
        return true;
    }
    command
        .get_groups()
        .filter(|g| g.get_args().any(|a| a.as_str() == id))
        .any(|g| g.get_args().any(|a| from_cli(a.as_str())))
}
