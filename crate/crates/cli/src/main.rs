fn main() {
    std::process::exit(cfpose_cli::main_with_args(std::env::args_os()));
}
