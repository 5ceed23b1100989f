fn main() {
    std::process::exit(iovsim::cli::run_command(std::env::args()));
}
