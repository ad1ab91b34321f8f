fn main() {
    std::process::exit(skewcast_cli::run(std::env::args()));
}
