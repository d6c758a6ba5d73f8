use std::process::ExitCode;

use ayn::cli::Cli;
use ayn::AynError;
use clap::error::ErrorKind;
use clap::Parser;

fn run() -> anyhow::Result<()> {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            e.print()?;
            return Ok(());
        }
        Err(e) => return Err(anyhow::Error::new(e).context("usage")),
    };
    ayn::commands::run(cli)?;
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let (kind, message) = match e.downcast_ref::<AynError>() {
                Some(a) => (a.kind(), a.to_string()),
                None if e.downcast_ref::<clap::Error>().is_some() => ("usage", format!("{:#}", e.root_cause())),
                None => ("internal", format!("{e:#}")),
            };
            let json = serde_json::json!({ "error": kind, "message": message.trim_end() });
            eprintln!("{json}");
            ExitCode::from(if kind == "usage" { 2 } else { 1 })
        }
    }
}
