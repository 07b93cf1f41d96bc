fn main() {
    std::process::exit(adu_core::cli::main_with_args(std::env::args_os()));
}
