fn main() {
    std::process::exit(proper_regret::cli::run(std::env::args_os()));
}
