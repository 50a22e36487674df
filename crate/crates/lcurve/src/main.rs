fn main() {
    std::process::exit(lcurve::cli::run(std::env::args_os()));
}
