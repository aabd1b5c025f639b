fn main() {
    std::process::exit(depkde::cli::run(std::env::args_os()));
}
