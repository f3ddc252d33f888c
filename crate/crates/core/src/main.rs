fn main() {
    std::process::exit(mile::cli::main_with_args(std::env::args_os()));
}
