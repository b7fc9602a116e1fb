use clap::Parser;

fn main() {
    let config = hinf_cli::RunConfig::parse();
    std::process::exit(hinf_cli::run(&config));
}
