fn main() {
    std::process::exit(gdarb::cli::run(std::env::args().collect()));
}
