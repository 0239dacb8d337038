use clap::Parser;
use windroute::cli::{run, Cli};

fn main() {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("WINDROUTE_LOG", "warn")).init();
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("windroute: {e}");
        std::process::exit(e.exit_code());
    }
}
