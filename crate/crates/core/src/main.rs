fn main() {
    std::process::exit(overbook::cli::main_with_args(std::env::args_os()));
}
