use clap::Parser;
use isac_select::{run, Cli};

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => e.exit(),
    };
    std::process::exit(run(&cli));
}
