fn main() {
    std::process::exit(faultroute::cli::run(std::env::args_os()));
}
