fn main() {
    std::process::exit(locband::cli::run(std::env::args_os()));
}
