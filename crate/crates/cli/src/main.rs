use clap::error::ErrorKind;
use clap::Parser;

use biquad_sos_cli::{init_threads, run_and_write, Cli, EXIT_INVALID, EXIT_OK};

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_INVALID,
            };
            std::process::exit(code);
        }
    };
    init_threads();
    std::process::exit(run_and_write(&cli));
}
