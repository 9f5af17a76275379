fn main() {
    std::process::exit(wold_core::cli::main_with_args(std::env::args_os()));
}
