fn main() {
    std::process::exit(ias_core::cli::run_from(std::env::args_os()));
}
