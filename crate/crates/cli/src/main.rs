use clap::Parser;
use nptruth_cli::{run, Cli};

fn main() {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(paths) => {
            for p in paths {
                println!("wrote {}", p.display());
            }
        }
        Err(e) => {
            eprintln!("nptruth {}: {e}", cli.command.name());
            std::process::exit(e.exit_code());
        }
    }
}
