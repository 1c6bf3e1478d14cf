fn main() {
    std::process::exit(fair_rmab::cli::main_with_args(std::env::args_os()));
}
