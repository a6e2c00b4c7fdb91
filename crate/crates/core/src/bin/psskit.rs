use clap::Parser;

fn main() {
    let args = psskit::cli::Args::parse();
    std::process::exit(psskit::cli::run(&args));
}
