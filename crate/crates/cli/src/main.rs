use clap::Parser;

fn main() {
    let cli = mustang_cli::Cli::parse();
    if let Err(e) = mustang_cli::run(cli) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}
