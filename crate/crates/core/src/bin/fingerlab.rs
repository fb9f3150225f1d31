fn main() {
    std::process::exit(fingerlab::cli::main_with_args(std::env::args_os()));
}
