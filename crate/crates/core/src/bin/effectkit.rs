fn main() {
    std::process::exit(effectkit::cli::run_from_env());
}
