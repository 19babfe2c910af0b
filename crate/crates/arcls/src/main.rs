fn main() {
    std::process::exit(arcls::cli::run_cli(std::env::args()));
}
