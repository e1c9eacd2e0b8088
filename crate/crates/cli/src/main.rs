use clap::Parser;

fn main() {
    let cli = hasimoto_lab::Cli::parse();
    std::process::exit(hasimoto_lab::main_with(cli));
}
