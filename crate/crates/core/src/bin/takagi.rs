fn main() {
    std::process::exit(takagi_levels::cli::main_with_args(std::env::args_os().collect()));
}
