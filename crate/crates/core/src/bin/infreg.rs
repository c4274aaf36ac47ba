fn main() {
    std::process::exit(infreg::cli::main_with_args(std::env::args_os()));
}
