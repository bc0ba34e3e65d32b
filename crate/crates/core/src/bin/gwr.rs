fn main() {
    std::process::exit(gwr_core::cli::main_with_args(std::env::args_os()));
}
