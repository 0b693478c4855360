fn main() {
    std::process::exit(davydov_cli::main_with_args(std::env::args_os()));
}
