use clap::Parser;

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match senseforge_cli::Cli::try_parse() {
        Ok(c) => c,
        Err(e) => e.exit(),
    };
    if let Err(e) = senseforge_cli::run(cli) {
        eprintln!("{e}");
        std::process::exit(e.exit_code());
    }
}
