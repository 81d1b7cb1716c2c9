use std::io::Write;
use std::process::ExitCode;

use clap::Parser;

use formality_cli::{report_exit_code, run, Cli};

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(report) => {
            let text = if cli.global.table { report.to_table() } else { report.to_json_string() + "\n" };
            // a closed pipe (`| head`) is not an error
            let _ = std::io::stdout().lock().write_all(text.as_bytes());
            ExitCode::from(report_exit_code(&report) as u8)
        }
        Err(e) => {
            eprintln!("{}", serde_json::to_string(&e.to_json()).expect("error serializes"));
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
